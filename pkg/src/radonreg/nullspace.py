"""Polynomial null spaces, the isotropic band-limited window and the projectors built on it."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

from ._fourier import rule_for, window_derivative_1d, window_hat

MAX_ORDER = 12
MAX_DUAL_ORDER = 4

MultiIndex = tuple


class QuadratureError(RuntimeError):
    """Quadrature did not reach the requested accuracy."""


class TailMassWarning(UserWarning):
    """A sampled field carries noticeable weighted mass near the edge of its grid."""


@lru_cache(maxsize=None)
def multi_indices(d: int, n0: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of length d with |k| <= n0, graded then reverse-lexicographic."""
    if n0 < 0:
        return ()
    out = []
    for total in range(n0 + 1):
        out.extend(_compositions(total, d))
    return tuple(out)


def _compositions(total: int, d: int):
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


def mi_factorial(k: Sequence[int]) -> int:
    if sum(k) > MAX_ORDER:
        raise ValueError(f"multi-index order above {MAX_ORDER} is not supported")
    return math.prod(math.factorial(int(ki)) for ki in k)


def monomial_eval(k: Sequence[int], x) -> np.ndarray:
    """x^k / k! for a point (d,) or a batch of points (N, d)."""
    x = np.asarray(x, dtype=float)
    k = tuple(int(ki) for ki in k)
    if x.shape[-1] != len(k):
        raise ValueError("dimension mismatch between multi-index and point")
    val = np.ones(x.shape[:-1])
    for i, ki in enumerate(k):
        if ki:
            val = val * x[..., i] ** ki
    return val / mi_factorial(k)


def design_matrix(X, n0: int) -> np.ndarray:
    """Polynomial design matrix with entries m_k(x_m), columns in multi_indices order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ks = multi_indices(X.shape[1], n0)
    if not ks:
        return np.zeros((X.shape[0], 0))
    return np.column_stack([monomial_eval(k, X) for k in ks])


def complement_projector(P: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the null space of P^T."""
    M = P.shape[0]
    if P.shape[1] == 0:
        return np.eye(M)
    Q, _ = np.linalg.qr(P)
    return np.eye(M) - Q @ Q.T


@dataclass(frozen=True)
class Polynomial:
    """Polynomial of degree <= n0 in the Taylor basis x^k / k!."""

    d: int
    n0: int
    coeffs: np.ndarray = field(compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size != len(multi_indices(self.d, self.n0)):
            raise ValueError("coefficient count does not match the multi-index set")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, d: int, n0: int) -> "Polynomial":
        return cls(d, n0, np.zeros(len(multi_indices(d, n0))))

    @classmethod
    def from_dict(cls, d: int, n0: int, coeffs: dict) -> "Polynomial":
        ks = multi_indices(d, n0)
        c = np.zeros(len(ks))
        for k, v in coeffs.items():
            c[ks.index(tuple(k))] = v
        return cls(d, n0, c)

    @property
    def indices(self) -> tuple[MultiIndex, ...]:
        return multi_indices(self.d, self.n0)

    def coeff(self, k: Sequence[int]) -> float:
        return float(self.coeffs[self.indices.index(tuple(k))])

    def as_dict(self) -> dict:
        return {k: float(c) for k, c in zip(self.indices, self.coeffs)}

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.coeffs.size == 0:
            return np.zeros(x.shape[:-1])
        return design_matrix(x.reshape(-1, self.d), self.n0).dot(self.coeffs).reshape(x.shape[:-1])

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if (self.d, self.n0) != (other.d, other.n0):
            raise ValueError("polynomials live in different spaces")
        return Polynomial(self.d, self.n0, self.coeffs + other.coeffs)


def _trig_power_coeffs(k1: int, k2: int) -> dict[int, complex]:
    """Fourier coefficients c_n of cos^k1(phi) sin^k2(phi)."""
    n = 2 * (k1 + k2) + 2
    phi = 2 * np.pi * np.arange(n) / n
    vals = np.cos(phi) ** k1 * np.sin(phi) ** k2
    c = np.fft.fft(vals) / n
    out = {}
    for m in range(-(k1 + k2), k1 + k2 + 1):
        cm = c[m % n]
        if abs(cm) > 1e-14:
            out[m] = complex(cm)
    return out


@dataclass(frozen=True)
class IsoWindow:
    """Isotropic window whose spectrum is 1 below 1/2, 0 above 1, smooth in between."""

    d: int
    freq_grid: np.ndarray = field(repr=False)
    spectral_samples: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    spatial_samples: np.ndarray = field(repr=False)
    kappa_rad_samples: np.ndarray = field(repr=False)
    truncation_radius: float
    peak: float

    def spectral_profile(self, rho) -> np.ndarray:
        return window_hat(rho)

    def kappa_iso(self, r) -> np.ndarray:
        """Radial profile of the window in space, evaluated by quadrature."""
        return radial_inverse(window_hat, np.asarray(r, dtype=float), self.d)

    def kappa_rad(self, t, derivative: int = 0) -> np.ndarray:
        """1D window (inverse transform of the radial spectrum) or its derivatives."""
        return window_derivative_1d(np.asarray(t, dtype=float), derivative)

    def default_grid(self) -> tuple[int, float]:
        """FFT grid (n, h) whose half-width is twice the truncation radius.

        Polynomial-times-window products are band-limited to |w| <= 1, so any h < pi
        integrates them exactly; non-smooth integrands need a finer h.
        """
        h = 1.4 if self.d > 1 else 0.35
        n = 1 << int(math.ceil(math.log2(4.0 * self.truncation_radius / h)))
        return n, h

    def dual_on_grid(self, k: Sequence[int], n: int | None = None, h: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Samples of m*_k on the grid x_i = (i - n/2) h, by inverse FFT of (-jw)^k window(w).

        The spectrum lives in |w| <= 1, so the samples are exact up to periodization as
        long as h < pi and n h exceeds twice the truncation radius.
        """
        k = tuple(int(ki) for ki in k)
        _check_dual_order(k, self.d)
        if n is None or h is None:
            n, h = self.default_grid()
        if h >= np.pi:
            raise ValueError("grid spacing must stay below pi to resolve the window band")
        w = 2 * np.pi * np.fft.fftfreq(n, h)
        axes = np.meshgrid(*([w] * self.d), indexing="ij", sparse=True)
        rho = np.sqrt(sum(a**2 for a in axes))
        spec = window_hat(rho).astype(complex)
        for ax, ki in zip(axes, k):
            if ki:
                spec = spec * (-1j * ax) ** ki
        # fftshift puts x = 0 at index n // 2
        vals = np.fft.fftshift(np.fft.ifftn(spec)).real / h**self.d
        x = (np.arange(n) - n // 2) * h
        return x, vals

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "kappa_iso", "kappa_rad"])
            for r, a, b in zip(self.radii, self.spatial_samples, self.kappa_rad_samples):
                wr.writerow([repr(float(r)), repr(float(a)), repr(float(b))])


def _check_dual_order(k, d):
    if len(k) != d:
        raise ValueError("multi-index length must equal the dimension")
    if sum(k) > MAX_DUAL_ORDER:
        raise ValueError(f"dual basis supported up to order {MAX_DUAL_ORDER}")
    if any(ki < 0 for ki in k):
        raise ValueError("multi-index entries must be non-negative")


def radial_inverse(profile: Callable, r: np.ndarray, d: int) -> np.ndarray:
    """Inverse d-dimensional transform of a radial spectrum supported in [0, 1]."""
    r = np.abs(np.asarray(r, dtype=float))
    nodes, weights = rule_for(r)
    spec = profile(nodes)
    out = np.empty(r.size)
    flat = r.ravel()
    nu = d / 2.0 - 1.0
    for start in range(0, flat.size, 512):
        rr = flat[start : start + 512, None]
        z = rr * nodes
        if d == 1:
            ker = np.cos(z) * np.sqrt(2.0 / np.pi)
        elif d == 2:
            ker = special.j0(z)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                # (2 pi)^-d/2 r^(1-d/2) int S(p) p^(d/2) J_nu(p r) dp, via J_nu(z)/z^nu
                ker = special.jv(nu, z) / np.where(z > 0, z, 1.0) ** nu
            ker = np.where(z > 0, ker, 1.0 / (2.0**nu * special.gamma(nu + 1.0)))
        out[start : start + 512] = (ker * (spec * nodes ** (d - 1.0))) @ weights
    return (out / (2.0 * np.pi) ** (d / 2.0)).reshape(r.shape)


def build_iso_window(d: int, grid: np.ndarray | None = None, r_max: float = 800.0, dr: float = 0.5) -> IsoWindow:
    """Tabulate the isotropic window in frequency and space and find its truncation radius."""
    if d < 1:
        raise ValueError("dimension must be positive")
    grid = np.linspace(0.0, 1.5, 1537) if grid is None else np.asarray(grid, dtype=float)
    if np.count_nonzero((grid >= 0) & (grid <= 1)) < 256:
        raise ValueError("frequency grid must resolve [0, 1] with at least 256 samples")
    radii = np.arange(0.0, r_max + dr, dr)
    spatial = radial_inverse(window_hat, radii, d)
    krad = spatial if d == 1 else window_derivative_1d(radii, 0)
    peak = float(np.max(np.abs(spatial)))
    above = np.nonzero(np.abs(spatial) >= 1e-10 * peak)[0]
    trunc = float(radii[above[-1] + 1]) if above[-1] + 1 < radii.size else float(r_max)
    return IsoWindow(
        d=d,
        freq_grid=grid,
        spectral_samples=window_hat(grid),
        radii=radii,
        spatial_samples=spatial,
        kappa_rad_samples=krad,
        truncation_radius=trunc,
        peak=peak,
    )


@lru_cache(maxsize=4)
def default_window(d: int) -> IsoWindow:
    return build_iso_window(d)


def dual_basis_eval(window: IsoWindow, k: Sequence[int], x) -> np.ndarray:
    """(-1)^|k| d^k kappa_iso at points x of shape (d,) or (N, d)."""
    k = tuple(int(ki) for ki in k)
    _check_dual_order(k, window.d)
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, window.d)
    sign = (-1.0) ** sum(k)
    if window.d == 1:
        return (sign * window_derivative_1d(pts[:, 0], k[0])).reshape(x.shape[:-1])
    if window.d != 2:
        raise NotImplementedError("dual basis evaluation is implemented for d = 1 and d = 2")
    r = np.hypot(pts[:, 0], pts[:, 1])
    psi = np.arctan2(pts[:, 1], pts[:, 0])
    order = sum(k)
    nodes, weights = rule_for(r)
    spec = window_hat(nodes) * nodes ** (order + 1) * weights
    coeffs = _trig_power_coeffs(k[0], k[1])
    out = np.zeros(pts.shape[0], dtype=complex)
    for start in range(0, pts.shape[0], 256):
        sl = slice(start, start + 256)
        z = r[sl, None] * nodes
        acc = np.zeros(z.shape[0], dtype=complex)
        for m, cm in coeffs.items():
            acc += cm * (1j**m) * np.exp(1j * m * psi[sl]) * (special.jv(m, z) @ spec)
        out[sl] = acc
    vals = (1j**order) * out / (2.0 * np.pi)
    return (sign * vals.real).reshape(x.shape[:-1])


@dataclass(frozen=True)
class SampledField:
    """Field sampled on a uniform tensor grid; axes[i] holds the coordinates along axis i."""

    axes: tuple
    values: np.ndarray

    @property
    def d(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_volume(self) -> float:
        return float(np.prod([a[1] - a[0] for a in self.axes]))


def _centered_grid_params(axes) -> tuple[int, float] | None:
    n = axes[0].size
    h = axes[0][1] - axes[0][0]
    ref = (np.arange(n) - n // 2) * h
    for a in axes:
        if a.size != n or not np.allclose(a, ref, atol=1e-12 * max(1.0, abs(h) * n)):
            return None
    return n, float(h)


def project_to_nullspace(
    f: Callable | SampledField,
    window: IsoWindow,
    n0: int,
    grid: tuple[int, float] | None = None,
    tol: float | None = 1e-6,
) -> Polynomial:
    """Coefficients <f, m*_k> for |k| <= n0 by tensor-product quadrature.

    Callables are sampled on two FFT grids of the same extent; their disagreement is the
    residual estimate, and a QuadratureError is raised when it exceeds ``tol`` relative to
    the coefficient scale.
    """
    d = window.d
    ks = multi_indices(d, n0)
    if not ks:
        return Polynomial.zero(d, n0)
    if isinstance(f, SampledField):
        return Polynomial(d, n0, _moments_against_dual(f, window, ks))
    n, h = grid if grid is not None else window.default_grid()
    first = _dual_moments(f, window, ks, n, h)
    if tol is not None:
        n2 = int(n * 5 // 4)
        n2 += n2 % 2
        second = _dual_moments(f, window, ks, n2, h * n / n2)
        scale = max(1.0, float(np.max(np.abs(first))))
        resid = float(np.max(np.abs(first - second)))
        if resid > tol * scale:
            raise QuadratureError(f"projection did not converge: residual {resid:.3g}")
    return Polynomial(d, n0, first)


def _dual_moments(f: Callable, window: IsoWindow, ks, n: int, h: float) -> np.ndarray:
    x = (np.arange(n) - n // 2) * h
    mesh = np.meshgrid(*([x] * window.d), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    fv = np.asarray(f(pts), dtype=float).reshape(mesh[0].shape)
    out = np.empty(len(ks))
    for i, k in enumerate(ks):
        _, dual = window.dual_on_grid(k, n, h)
        out[i] = np.sum(fv * dual) * h**window.d
    return out


def _moments_against_dual(field_: SampledField, window: IsoWindow, ks) -> np.ndarray:
    params = _centered_grid_params(field_.axes)
    vol = field_.cell_volume()
    out = np.empty(len(ks))
    if params is not None:
        n, h = params
        for i, k in enumerate(ks):
            _, dual = window.dual_on_grid(k, n, h)
            out[i] = np.sum(field_.values * dual) * vol
        return out
    pts = field_.points()
    for i, k in enumerate(ks):
        out[i] = np.sum(field_.values.ravel() * dual_basis_eval(window, k, pts)) * vol
    return out


def project_dual(nu: SampledField, n0: int, band: float = 0.1) -> np.ndarray:
    """Moments <m_k, nu> for |k| <= n0 of a decaying sampled field.

    Warns with TailMassWarning when the weighted mass (1 + |x|)^n0 |nu| in the outer
    ``band`` fraction of the grid exceeds 1e-4 of the total.
    """
    ks = multi_indices(nu.d, n0)
    pts = nu.points()
    vals = nu.values.ravel()
    vol = nu.cell_volume()
    weight = (1.0 + np.linalg.norm(pts, axis=1)) ** max(n0, 0) * np.abs(vals)
    lo = np.array([a[0] for a in nu.axes])
    hi = np.array([a[-1] for a in nu.axes])
    span = hi - lo
    inner = np.all((pts > lo + band * span / 2) & (pts < hi - band * span / 2), axis=1)
    total = weight.sum()
    if total > 0 and weight[~inner].sum() > 1e-4 * total:
        warnings.warn("truncated tail exceeds 1e-4 of the weighted total", TailMassWarning, stacklevel=2)
    return np.array([np.sum(monomial_eval(k, pts) * vals) * vol for k in ks])


def dual_projection(moments: np.ndarray, window: IsoWindow, n0: int, x) -> np.ndarray:
    """Evaluate sum_k moments_k m*_k(x)."""
    ks = multi_indices(window.d, n0)
    return sum(c * dual_basis_eval(window, k, x) for c, k in zip(moments, ks))
