"""Shared spectral quadrature helpers.

Fourier convention used throughout the package:
    F{f}(w) = int f(x) exp(-j w.x) dx,    f(x) = (2 pi)^-d int F{f}(w) exp(j w.x) dw.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from math import factorial
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

# window transition band
WINDOW_FLAT = 0.5
WINDOW_CUTOFF = 1.0


def _edge(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def window_hat(w) -> np.ndarray:
    """Radial window spectrum: 1 below 1/2, 0 above 1, C-infinity in between."""
    w = np.abs(np.asarray(w, dtype=float))
    s = np.clip((w - WINDOW_FLAT) / (WINDOW_CUTOFF - WINDOW_FLAT), 0.0, 1.0)
    a = _edge(1.0 - s)
    b = _edge(s)
    return a / (a + b)


@lru_cache(maxsize=None)
def unit_rule(n_panels: int = 200, n_graded: int = 30, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, 1], geometrically graded toward 0.

    The grading resolves integrable power singularities at the origin; the
    uniform panels resolve oscillations up to roughly |t| ~ 40 * n_panels.
    """
    first = 1.0 / n_panels
    graded = np.concatenate([[0.0], np.geomspace(1e-10, first, n_graded)])
    uniform = np.linspace(first, 1.0, n_panels)
    edges = np.unique(np.concatenate([graded, uniform]))
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def exp_remainder(z, degree: int) -> np.ndarray:
    """exp(jz) minus its Taylor polynomial of the given degree (degree -1: no subtraction)."""
    z = np.asarray(z, dtype=float)
    return trig_remainder(z, degree, 0) + 1j * trig_remainder(z, degree, 3)


def _trig_taylor(z: np.ndarray, degree: int, start: int) -> np.ndarray:
    # sum over n = start, start+2, ... <= degree of (-1)^((n - start)/2) z^n / n!
    acc = np.zeros_like(z)
    if start > degree:
        return acc
    term = z**start / factorial(start)
    for n in range(start, degree + 1, 2):
        acc += term
        term = -term * z * z / ((n + 1) * (n + 2))
    return acc


def _trig_tail(z: np.ndarray, degree: int, start: int) -> np.ndarray:
    # same alternating series, summed over n > degree; used for |z| < 1
    n = start
    while n <= degree:
        n += 2
    sign = -1.0 if ((n - start) // 2) % 2 else 1.0
    term = sign * z**n / factorial(n)
    acc = term.copy()
    for _ in range(12):
        term = -term * z * z / ((n + 1) * (n + 2))
        n += 2
        acc += term
    return acc


def trig_remainder(z, degree: int, power: int) -> np.ndarray:
    """Re[j^power (exp(jz) - T(jz))] with T the Taylor polynomial of given degree.

    power mod 4 selects cos (0), -sin (1), -cos (2) or sin (3) remainders; the small-|z|
    branch sums the tail series so no cancellation occurs near z = 0.
    """
    z = np.asarray(z, dtype=float)
    p = power % 4
    use_cos = p in (0, 2)
    sign = 1.0 if p in (0, 3) else -1.0
    start = 0 if use_cos else 1
    if degree < 0:
        return sign * (np.cos(z) if use_cos else np.sin(z))
    out = (np.cos(z) if use_cos else np.sin(z)) - _trig_taylor(z, degree, start)
    small = np.abs(z) < 1.0
    if np.any(small):
        out[small] = _trig_tail(z[small], degree, start)
    return sign * out


def trig_taylor(z, degree: int, power: int) -> np.ndarray:
    """Re[j^power T(jz)] for the Taylor polynomial T of exp(jz)."""
    z = np.asarray(z, dtype=float)
    p = power % 4
    use_cos = p in (0, 2)
    sign = 1.0 if p in (0, 3) else -1.0
    if degree < 0:
        return np.zeros_like(z)
    return sign * _trig_taylor(z, degree, 0 if use_cos else 1)


def safe_reciprocal(profile: Callable, w: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        val = np.asarray(profile(w), dtype=float)
        out = 1.0 / val
    out[~np.isfinite(out)] = 0.0
    return out


def rule_for(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # about 3 radians of oscillation per 16-node panel
    tmax = float(np.max(np.abs(t))) if np.size(t) else 0.0
    return unit_rule(int(np.clip(np.ceil(tmax / 3.0), 40, 4000)))


def _chunks(n: int, size: int):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def _tail_integral(spectrum: Callable, u: float, kind: str) -> float:
    """int_1^inf S(w) cos(w u) dw  (kind='cos') or  sin(w u)  (kind='sin')."""

    def f(w):
        v = float(spectrum(w))
        return v if math.isfinite(v) else 0.0

    if u == 0.0:
        if kind == "sin":
            return 0.0
        with np.errstate(all="ignore"):
            val, _ = quad(f, 1.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)
        return val
    sgn = 1.0
    if u < 0:
        u = -u
        sgn = -1.0 if kind == "sin" else 1.0
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", IntegrationWarning)
        if u < 1e-3:
            # QAWF cycles of length pi/u would swallow the whole integral: below w = c/u the
            # integrand is non-oscillatory and is integrated in log w, above it at unit frequency
            c = 0.1
            trig = np.cos if kind == "cos" else np.sin
            head, _ = quad(lambda s: f(math.exp(s)) * math.exp(s) * trig(math.exp(s) * u), 0.0, math.log(c / u),
                           limit=400, epsabs=1e-13, epsrel=1e-11)
            tail, _ = quad(lambda v: f(v / u), c, np.inf, weight=kind, wvar=1.0, limlst=200, limit=400, epsabs=1e-11 * u)
            val = head + tail / u
        else:
            val, _ = quad(f, 1.0, np.inf, weight=kind, wvar=u, limlst=200, limit=400, epsabs=1e-11)
    return sgn * val


def regularized_inverse(
    spectrum: Callable,
    t,
    degree: int,
    odd: bool = False,
    derivative: int = 0,
) -> np.ndarray:
    """Inverse 1D transform of (jw)^n S(|w|), times j sign(w) when ``odd``, with a windowed pole.

    Computes (1/2pi) int m(w) [exp(jwt) - window(w) T(jwt)] dw where T is the Taylor
    polynomial of the exponential up to ``degree``. The result equals the
    distributional inverse transform up to a polynomial of degree <= degree.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nodes, weights = rule_for(t)
    s_nodes = spectrum(nodes) * nodes**derivative
    kap = window_hat(nodes)
    power = derivative + (1 if odd else 0)
    flat = t.ravel()
    res = np.empty(flat.size, dtype=float)
    for sl in _chunks(flat.size, 256):
        z = np.outer(flat[sl], nodes)
        inner = trig_remainder(z, degree, power) + (1.0 - kap) * trig_taylor(z, degree, power)
        res[sl] = (inner * s_nodes) @ weights / np.pi
    p = power % 4
    kind = "cos" if p in (0, 2) else "sin"
    sign = 1.0 if p in (0, 3) else -1.0
    if derivative:
        tail_spec = lambda w: spectrum(w) * w**derivative  # noqa: E731
    else:
        tail_spec = spectrum
    with np.errstate(over="ignore", divide="ignore"):
        for i, ti in enumerate(flat):
            res[i] += sign * _tail_integral(tail_spec, float(ti), kind) / np.pi
    return res.reshape(t.shape)


def windowed_kernel(
    spectrum: Callable,
    t,
    derivative: int,
    degree: int,
) -> np.ndarray:
    """(1/2pi) int (jw)^n window(w) S(|w|) [exp(jwt) - T(jwt)] dw on the window support."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nodes, weights = rule_for(t)
    base = window_hat(nodes) * spectrum(nodes) * nodes**derivative
    out = np.empty(t.size, dtype=float)
    flat = t.ravel()
    for sl in _chunks(flat.size, 256):
        z = np.outer(flat[sl], nodes)
        out[sl] = (trig_remainder(z, degree, derivative) * base) @ weights / np.pi
    return out.reshape(t.shape)


def window_derivative_1d(t, derivative: int = 0) -> np.ndarray:
    """n-th derivative of the 1D window (inverse transform of the radial window spectrum)."""
    return windowed_kernel(lambda w: np.ones_like(w), t, derivative, -1)
