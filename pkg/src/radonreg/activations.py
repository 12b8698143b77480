"""Activations and radial kernels synthesized from operator profiles.

Printed activations follow the usual catalog normalization (for example |t|/2 for the
second-order ridge spline). The transform of 1/L under the package Fourier convention
can differ from the printed form by a global factor and by a polynomial of degree <= n0;
``exact_activation`` returns the convention-exact version used wherever a kernel has to
be consistent with spectral formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from ._fourier import regularized_inverse, rule_for, window_hat
from .catalog import OperatorProfile, degree_from_order


class AdmissibilityError(ValueError):
    """The profile does not meet the requirements of the requested synthesis."""


class DistributionalKernelError(ValueError):
    """The requested Green's function has no pointwise kernel."""


class PoleOrderError(ValueError):
    """The pole at the origin is stronger than the declared null space can absorb."""


def _xlogx(t: np.ndarray, power: int) -> np.ndarray:
    # t^power log|t|, continuous extension 0 at t = 0 for power >= 1
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    nz = t != 0
    out[nz] = t[nz] ** power * np.log(np.abs(t[nz]))
    if power == 0:
        out[~nz] = -np.inf
    return out


def _abs_pow(t, p: float) -> np.ndarray:
    t = np.abs(np.asarray(t, dtype=float))
    if p > 0:
        return t**p
    with np.errstate(divide="ignore"):
        return np.where(t > 0, t ** p if p != 0 else 1.0, np.inf if p < 0 else 1.0)


@dataclass(frozen=True)
class GreenKernel:
    """Radial impulse response of the fractional Laplacian of order alpha in d dimensions."""

    alpha: float
    d: int
    constant: float
    log_power: int | None

    @property
    def tag(self) -> str:
        if self.log_power is None:
            return f"r^{self.alpha - self.d:g}"
        return f"r^{2 * self.log_power} log r" if self.log_power else "log r"

    def __call__(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        if self.log_power is not None:
            return self.constant * _xlogx(r, 2 * self.log_power)
        return self.constant * _abs_pow(r, self.alpha - self.d)


def green_constants(alpha: float, d: int) -> tuple[float, int | None]:
    """(constant, n) for the kernel of |w|^-alpha in d dimensions; n set in the log case."""
    if alpha <= 0 and float(alpha / 2).is_integer():
        raise DistributionalKernelError(f"alpha={alpha} gives a derivative of the Dirac impulse")
    diff = alpha - d
    if diff >= 0 and float(diff / 2).is_integer():
        n = int(round(diff / 2))
        const = (-1.0) ** (1 + n) / (
            2.0 ** (2 * n + d - 1) * math.pi ** (d / 2) * math.gamma(n + d / 2) * math.factorial(n)
        )
        return const, n
    const = special.gamma((d - alpha) / 2) / (2.0**alpha * math.pi ** (d / 2) * special.gamma(alpha / 2))
    return float(const), None


def green_kernel(alpha: float, d: int) -> GreenKernel:
    """Inverse transform of |w|^-alpha: A r^(alpha-d), or B r^(2n) log r when alpha - d = 2n."""
    if alpha <= 0:
        if float(alpha / 2).is_integer():
            raise DistributionalKernelError(f"alpha={alpha} gives a derivative of the Dirac impulse")
        raise ValueError("alpha must be positive")
    const, n = green_constants(alpha, d)
    return GreenKernel(alpha=float(alpha), d=int(d), constant=const, log_power=n)


def _odd_power_kernel(beta: float) -> tuple[Callable, str]:
    # inverse transform of j sign(w) |w|^-beta in one dimension
    if float(beta).is_integer() and int(beta) % 2 == 0:
        n = int(beta) // 2 - 1
        c = (-1.0) ** n / (math.pi * math.factorial(2 * n + 1))
        return (lambda t: c * _xlogx(t, 2 * n + 1)), f"t^{2 * n + 1} log|t|"
    c = -1.0 / (2.0 * math.gamma(beta) * math.sin(math.pi * beta / 2))
    return (lambda t: c * np.sign(t) * _abs_pow(t, beta - 1)), f"sign(t)|t|^{beta - 1:g}"


def _printed_form(profile: OperatorProfile, odd: bool) -> tuple[Callable, str] | None:
    """Catalog normalization of the activation, or None when no closed form is listed."""
    name = profile.name
    if name == "exponential":
        return None if odd else ((lambda t: np.exp(-np.abs(t))), "exp(-|t|)")
    if name == "tanh_sigmoid":
        return ((lambda t: np.tanh(np.asarray(t, dtype=float) / 2) / 2), "tanh(t/2)/2") if odd else None
    if name == "arctan_sigmoid":
        return ((lambda t: np.arctan(t) / np.pi), "arctan(t)/pi") if odd else None
    beta = profile.power
    if beta is None:
        return None
    if name == "fractional_laplacian_alpha" and not odd:
        g = green_kernel(beta, 1)
        return g, g.tag
    if float(beta).is_integer():
        m = int(beta)
        if m % 2 == 1:
            n = (m - 1) // 2
            if odd:
                c = 1.0 / math.factorial(2 * n)
                return (lambda t: c * np.sign(t) * _abs_pow(t, 2 * n)), f"sign(t)|t|^{2 * n}/{2 * n}!"
            return (lambda t: _xlogx(t, 2 * n)), f"t^{2 * n} log|t|"
        n = (m - 2) // 2
        if odd:
            return (lambda t: _xlogx(t, 2 * n + 1)), f"t^{2 * n + 1} log|t|"
        c = 1.0 / (2.0 * math.factorial(2 * n + 1))
        return (lambda t: c * _abs_pow(t, 2 * n + 1)), f"|t|^{2 * n + 1}/(2*{2 * n + 1}!)"
    alpha = beta - 1.0
    if alpha <= 0:
        return None
    c = 1.0 / (math.pi * math.gamma(alpha))
    if odd:
        c *= math.cos(alpha * math.pi / 2)
        return (lambda t: c * np.sign(t) * _abs_pow(t, alpha)), f"sign(t)|t|^{alpha:g} cos(a pi/2)/(pi G(a))"
    c *= math.sin(alpha * math.pi / 2)
    return (lambda t: c * _abs_pow(t, alpha)), f"|t|^{alpha:g} sin(a pi/2)/(pi G(a))"


def _exact_form(profile: OperatorProfile, odd: bool) -> tuple[Callable, str] | None:
    """Closed form of the convention-exact inverse transform, up to degree-n0 polynomials."""
    name = profile.name
    if name == "exponential" and not odd:
        return (lambda t: 0.5 * np.exp(-np.abs(t))), "exp(-|t|)/2"
    if name == "tanh_sigmoid" and odd:
        return (lambda t: -np.tanh(np.asarray(t, dtype=float) / 2) / 2), "-tanh(t/2)/2"
    if name == "arctan_sigmoid" and odd:
        return (lambda t: -np.arctan(t) / np.pi), "-arctan(t)/pi"
    beta = profile.power
    if beta is None or beta <= 0:
        return None
    if odd:
        return _odd_power_kernel(beta)
    g = green_kernel(beta, 1)
    return g, g.tag


def _require_admissible(profile: OperatorProfile) -> None:
    if not profile.gamma1 > 1 or not profile.satisfies_decay:
        raise AdmissibilityError(f"profile {profile.name} is not admissible (gamma1={profile.gamma1})")
    if profile.gamma0 > profile.n0 + 1 + 1e-12:
        raise PoleOrderError(f"gamma0={profile.gamma0} exceeds n0+1={profile.n0 + 1}")


@dataclass(frozen=True)
class Activation:
    """1D activation: closed form when available, otherwise tabulated with cubic interpolation."""

    profile_name: str
    parity: str
    n0: int
    gamma0: float
    closed_form: str | None
    t: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    func: Callable | None = field(default=None, repr=False, compare=False)
    # activation = scale * (convention-exact transform) + polynomial of degree <= n0
    scale: float = 1.0
    spectrum: Callable | None = field(default=None, repr=False, compare=False)
    gamma1: float = math.inf

    @property
    def odd(self) -> bool:
        return self.parity == "antisymmetric"

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(t), dtype=float)
        return self._interp(t)

    def _interp(self, t: np.ndarray) -> np.ndarray:
        spline, b = _spline_cache(self)
        T = self.t[-1]
        tc = np.clip(t, -T, T)
        if b is not None:
            out = spline(np.abs(tc) ** b)
            if self.odd:
                out = np.sign(tc) * out
        else:
            out = spline(tc)
        big = np.abs(t) > T
        if np.any(big):
            edge = self.samples[-1]
            ratio = (np.abs(t[big]) / T) ** (self.gamma0 - 1.0)
            sgn = np.sign(t[big]) if self.odd else 1.0
            out[big] = sgn * edge * ratio
        return out

    def derivative(self, t, order: int) -> np.ndarray:
        """Spectral derivative of the activation (up to a polynomial of degree n0 - order)."""
        if self.spectrum is None:
            raise ValueError("activation carries no spectrum")
        if order < 0 or order > self.n0 + 1:
            raise ValueError(f"derivative order must lie in [0, {self.n0 + 1}]")
        if order >= self.gamma1:
            raise ValueError("derivative order too high for a pointwise spectral derivative")
        vals = regularized_inverse(self.spectrum, t, self.n0 - order, odd=self.odd, derivative=order)
        return self.scale * vals


def _map_exponent(gamma0: float) -> float:
    # near t = 0 the activation behaves like |t|^(gamma0 - 1) (times log|t| for some integer
    # orders); splining in u = |t|^b with b the fractional part makes the leading term smooth in u
    frac = (gamma0 - 1.0) % 1.0
    if frac > 1e-9 and frac < 1.0 - 1e-9:
        return frac
    return 0.5 if gamma0 >= 2 else 1.0


def _spline_cache(act: Activation) -> tuple[CubicSpline, float | None]:
    """Cubic spline of the samples; returns (spline, b) with b set when the grid is symmetric.

    On a symmetric grid only the half t >= 0 is splined, in the variable |t|^b, and the
    other half follows by parity. This keeps the kink or cusp at t = 0 off the intervals.
    """
    cached = act.__dict__.get("_spline")
    if cached is not None:
        return cached
    t, v = act.t, act.samples
    n = t.size // 2
    half = t.size % 2 == 1 and t[n] == 0.0 and np.allclose(t, -t[::-1])
    if half:
        b = _map_exponent(act.gamma0)
        out = (CubicSpline(t[n:] ** b, v[n:]), b)
    else:
        out = (CubicSpline(t, v), None)
    object.__setattr__(act, "_spline", out)
    return out


def closed_form_grid(t_max: float = 32.0, n: int = 2**16 + 1) -> np.ndarray:
    return np.linspace(-t_max, t_max, n)


def numerical_grid(t_max: float = 32.0, n: int = 2049) -> np.ndarray:
    return np.linspace(-t_max, t_max, n)


def _tabulate_numeric(profile: OperatorProfile, grid: np.ndarray, odd: bool) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    if not np.allclose(grid, -grid[::-1]):
        return regularized_inverse(profile.spectrum, grid, profile.n0, odd=odd)
    # symmetric grid: evaluate the non-negative half and mirror
    half = np.arange(n // 2, n)
    vals = regularized_inverse(profile.spectrum, grid[half], profile.n0, odd=odd)
    out = np.empty(n)
    out[n - 1 - half] = -vals if odd else vals
    out[half] = vals
    return out


def _fit_scale(printed: Callable, exact: Callable, n0: int, odd: bool) -> float:
    t = np.linspace(0.37, 4.37, 41)
    t = np.concatenate([-t[::-1], t])
    cols = [exact(t)]
    for k in range(max(n0, -1) + 1):
        if (k % 2 == 1) == odd:
            cols.append(t**k)
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, printed(t), rcond=None)
    return float(coef[0])


def _synthesize(profile: OperatorProfile, grid, method: str, odd: bool, strict: bool) -> Activation:
    if strict:
        _require_admissible(profile)
    parity = "antisymmetric" if odd else "symmetric"
    printed = _printed_form(profile, odd)
    exact = _exact_form(profile, odd)
    if method not in ("auto", "closed", "numerical"):
        raise ValueError("method must be auto, closed or numerical")
    if method == "closed" and printed is None:
        raise ValueError(f"no closed form listed for {profile.name} ({parity})")
    if profile.gamma0 > profile.n0 + 1 + 1e-12:
        raise PoleOrderError(f"gamma0={profile.gamma0} exceeds n0+1")
    use_closed = printed is not None and method != "numerical"
    if use_closed:
        func, tag = printed
        grid = closed_form_grid() if grid is None else np.asarray(grid, dtype=float)
        scale = _fit_scale(func, exact[0], profile.n0, odd) if exact is not None else 1.0
        return Activation(
            profile_name=profile.name,
            parity=parity,
            n0=profile.n0,
            gamma0=profile.gamma0,
            closed_form=tag,
            t=grid,
            samples=np.asarray(func(grid), dtype=float),
            func=func,
            scale=scale,
            spectrum=profile.spectrum,
            gamma1=profile.gamma1,
        )
    grid = numerical_grid() if grid is None else np.asarray(grid, dtype=float)
    vals = _tabulate_numeric(profile, grid, odd)
    return Activation(
        profile_name=profile.name,
        parity=parity,
        n0=profile.n0,
        gamma0=profile.gamma0,
        closed_form=None,
        t=grid,
        samples=vals,
        spectrum=profile.spectrum,
        gamma1=profile.gamma1,
    )


def synth_symmetric(profile: OperatorProfile, grid=None, method: str = "auto", strict: bool = True) -> Activation:
    """Even activation, the inverse transform of 1/L (printed normalization for closed forms)."""
    return _synthesize(profile, grid, method, odd=False, strict=strict)


def synth_antisymmetric(profile: OperatorProfile, grid=None, method: str = "auto", strict: bool = True) -> Activation:
    """Odd activation, the inverse transform of j sign(w)/L."""
    if profile.n0 < 0:
        raise AdmissibilityError("antisymmetric activations need a nontrivial null space (n0 >= 0)")
    return _synthesize(profile, grid, method, odd=True, strict=strict)


def exact_activation(profile: OperatorProfile, odd: bool = False, grid=None) -> Activation:
    """Convention-exact inverse transform of 1/L (or j sign(w)/L), up to degree-n0 polynomials."""
    exact = _exact_form(profile, odd)
    parity = "antisymmetric" if odd else "symmetric"
    if exact is not None:
        func, tag = exact
        grid = closed_form_grid() if grid is None else np.asarray(grid, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            samples = np.asarray(func(grid), dtype=float)
        return Activation(profile.name, parity, profile.n0, profile.gamma0, tag, grid, samples,
                          func=func, spectrum=profile.spectrum, gamma1=profile.gamma1)
    grid = numerical_grid() if grid is None else np.asarray(grid, dtype=float)
    vals = _tabulate_numeric(profile, grid, odd)
    return Activation(profile.name, parity, profile.n0, profile.gamma0, None, grid, vals,
                      spectrum=profile.spectrum, gamma1=profile.gamma1)


@dataclass(frozen=True)
class IsotropicKernel:
    """Radial kernel x -> radial(|x|) in d dimensions."""

    d: int
    mode: str
    profile_name: str
    closed_form: str | None
    conditionally_pd_order: int
    radial: Callable = field(repr=False, compare=False)
    exponent: float | None = None
    # the numerical path defines the kernel up to polynomials of this degree
    ambiguity_degree: int = -1
    sign: float = 1.0

    def radial_eval(self, r) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.sign * np.asarray(self.radial(np.abs(np.asarray(r, dtype=float))), dtype=float)

    def __call__(self, r) -> np.ndarray:
        return self.radial_eval(r)

    def eval_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.radial_eval(np.linalg.norm(x, axis=-1))

    def negated(self) -> "IsotropicKernel":
        from dataclasses import replace

        return replace(self, sign=-self.sign)


def _kernel_spectrum(profile: OperatorProfile, d: int, mode: str) -> tuple[Callable, float]:
    if mode == "radon":
        factor = 2.0 * (2.0 * math.pi) ** (d - 1)

        def spec(w):
            with np.errstate(over="ignore", divide="ignore"):
                return factor / (np.asarray(profile.eval(w), dtype=float) ** 2 * np.abs(w) ** (d - 1))

        return spec, 2.0 * profile.gamma0 + d - 1
    if mode == "classical":

        def spec(w):
            with np.errstate(over="ignore", divide="ignore"):
                return 1.0 / np.asarray(profile.eval(w), dtype=float) ** 2

        return spec, 2.0 * profile.gamma0
    raise ValueError("mode must be 'radon' or 'classical'")


def synth_rbf_kernel(
    profile: OperatorProfile,
    d: int,
    mode: str = "radon",
    r_max: float = 32.0,
    n: int = 1025,
    strict: bool = True,
) -> IsotropicKernel:
    """Radial kernel 2(2pi)^(d-1) F^-1{1/(|L|^2 |w|^(d-1))} (radon) or F^-1{1/|L|^2} (classical)."""
    if strict:
        _require_admissible(profile)
    spec, pole = _kernel_spectrum(profile, d, mode)
    order = profile.n0 + 1
    if profile.power is not None:
        beta = profile.power
        if mode == "radon":
            factor = 2.0 * (2.0 * math.pi) ** (d - 1)
            g = green_kernel(2 * beta + d - 1, d)
        else:
            factor = 1.0
            g = green_kernel(2 * beta, d)
        const = factor * g.constant
        if g.log_power is None:
            expo = g.alpha - d
            radial = lambda r, c=const, e=expo: c * _abs_pow(r, e)  # noqa: E731
        else:
            p2 = 2 * g.log_power
            radial = lambda r, c=const, p=p2: c * _xlogx(r, p)  # noqa: E731
            expo = float(p2)
        return IsotropicKernel(d, mode, profile.name, g.tag, order, radial, exponent=expo)
    degree = degree_from_order(pole - d + 1) if pole - d + 1 > 0 else -1
    r = np.linspace(0.0, r_max, n)
    if d == 1:
        vals = regularized_inverse(spec, r, degree)
    elif d == 2:
        vals = _hankel_regularized(spec, r, degree)
    else:
        raise NotImplementedError("numerical kernels are available for d = 1 and d = 2")
    spline = CubicSpline(r, vals)
    return IsotropicKernel(d, mode, profile.name, None, order, spline, ambiguity_degree=degree)


def _j0_taylor(z: np.ndarray, degree: int) -> np.ndarray:
    acc = np.zeros_like(z)
    term = np.ones_like(z)
    k = 0
    while 2 * k <= degree:
        acc += term
        k += 1
        term = -term * (z / 2) ** 2 / (k * k)
    return acc


def _j0_tail(z: np.ndarray, degree: int) -> np.ndarray:
    # sum of the J0 series terms of degree > degree
    k = degree // 2 + 1
    term = (-1.0) ** k * (z / 2) ** (2 * k) / math.factorial(k) ** 2
    acc = term.copy()
    for j in range(k + 1, k + 40):
        term = -term * (z / 2) ** 2 / (j * j)
        acc += term
    return acc


def _hankel_regularized(spec: Callable, r: np.ndarray, degree: int, w_max: float = 2000.0) -> np.ndarray:
    """(1/2pi) int_0^inf S(p) [J0(p r) - window(p) T(p r)] p dp for a radial 2D spectrum."""
    nodes, weights = rule_for(r)
    kap = window_hat(nodes)
    base = spec(nodes) * nodes * weights
    out = np.empty(r.size)
    for i in range(0, r.size, 256):
        z = np.outer(r[i : i + 256], nodes)
        j0 = special.j0(z)
        rem = j0 - kap * _j0_taylor(z, degree)
        small = z < 4.0
        if degree >= 0 and np.any(small):
            # below z = 4 the power series tail avoids cancellation in J0 - T
            cols = np.nonzero(small)[1]
            zs = z[small]
            rem[small] = _j0_tail(zs, degree) + (1.0 - kap[cols]) * _j0_taylor(zs, degree)
        out[i : i + 256] = rem @ base
    # tail on [1, W], W where S(p) p has dropped by 1e-8, panels resolving the oscillation
    probe = np.geomspace(1.0, w_max, 400)
    mag = np.abs(spec(probe) * probe)
    below = np.nonzero(mag <= 1e-8 * mag[0])[0]
    w_end = float(probe[below[0]]) if below.size else w_max
    rmax = float(np.max(np.abs(r))) if r.size else 0.0
    width = min(0.5, 3.0 / max(rmax, 1e-12))
    n_pan = int(np.ceil((w_end - 1.0) / width))
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(1.0, w_end, n_pan + 1)
    a, b = edges[:-1, None], edges[1:, None]
    tn = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    tw = (0.5 * (b - a) * w).ravel()
    tb = spec(tn) * tn * tw
    for i in range(0, r.size, 64):
        out[i : i + 64] += special.j0(np.outer(r[i : i + 64], tn)) @ tb
    return out / (2.0 * np.pi)
