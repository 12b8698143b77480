"""Radial frequency profiles of isotropic operators and their admissibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ProfileError(ValueError):
    """Unknown catalog entry or parameter outside the admissible range."""


def degree_from_order(gamma0: float) -> int:
    """Null-space polynomial degree for a zero of order gamma0 at the origin.

    Uses ceil(gamma0 - 1), which gives gamma0 - 1 for integer orders; gamma0 = 0 maps to -1
    (trivial null space).
    """
    if gamma0 < 0:
        raise ValueError("order of the zero must be non-negative")
    return int(math.ceil(gamma0 - 1.0))


def null_space_dim(n0: int, d: int) -> int:
    """Dimension of the space of polynomials of degree <= n0 in d variables."""
    if n0 < 0:
        return 0
    return math.comb(n0 + d, d)


@dataclass(frozen=True)
class OperatorProfile:
    """Symmetric radial frequency response of an isotropic shift-invariant operator."""

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    gamma0: float
    gamma1: float
    n0: int
    C0: float = 1.0
    C1: float = 1.0
    R1: float = 1.0
    antisymmetric_variant: bool = False
    params: tuple = ()
    formula: str = ""
    # exponent of a pure power law |w|^power, None otherwise
    power: float | None = None
    satisfies_decay: bool = True
    log_abs: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.gamma0 > 0 and self.n0 != degree_from_order(self.gamma0):
            raise ProfileError(f"n0={self.n0} inconsistent with gamma0={self.gamma0}")
        if self.gamma0 == 0 and self.n0 != -1:
            raise ProfileError("a profile without zero at the origin has n0 = -1")

    def __call__(self, w) -> np.ndarray:
        return self.eval(w)

    def spectrum(self, w):
        """1 / L(w); zero where the profile overflows."""
        if type(w) is float:
            # scalar quadrature callers set the error state once around the whole integral
            return 1.0 / self.eval(w)
        with np.errstate(over="ignore", divide="ignore"):
            return 1.0 / self.eval(w)

    def log_magnitude(self, w) -> np.ndarray:
        if self.log_abs is not None:
            return np.asarray(self.log_abs(w), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.asarray(self.eval(w), dtype=float)))

    def with_variant(self, antisymmetric: bool) -> "OperatorProfile":
        from dataclasses import replace

        return replace(self, antisymmetric_variant=antisymmetric)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "params": list(self.params),
            "formula": self.formula,
            "gamma0": self.gamma0,
            "gamma1": self.gamma1,
            "n0": self.n0,
            "antisymmetric_variant": self.antisymmetric_variant,
        }


def _power_profile(name: str, power: float, params: tuple, formula: str) -> OperatorProfile:
    return OperatorProfile(
        name=name,
        eval=lambda w, p=power: np.abs(w) ** p,
        gamma0=power,
        gamma1=power,
        n0=degree_from_order(power),
        params=params,
        formula=formula,
        power=power,
        log_abs=lambda w, p=power: p * np.log(np.abs(w)),
    )


def _log_sinh_pi(w):
    a = np.pi * np.abs(w)
    return a + np.log1p(-np.exp(-2.0 * a)) - math.log(2.0 * np.pi)


def _sinh_pi(w):
    return np.sinh(np.pi * np.abs(w)) / np.pi


def _abs_exp(w):
    a = np.abs(w)
    return a * np.exp(a)


def _log_abs_exp(w):
    a = np.abs(w)
    return np.log(a) + a


CATALOG = {
    "exponential": "1 + w^2",
    "tanh_sigmoid": "sinh(pi |w|) / pi",
    "arctan_sigmoid": "|w| exp(|w|)",
    "ridge_spline_m": "|w|^m",
    "fractional_spline_alpha": "|w|^(alpha + 1)",
    "fractional_laplacian_alpha": "|w|^alpha",
}

DEFAULT_PARAMS = {
    "ridge_spline_m": (2,),
    "fractional_spline_alpha": (0.5,),
    "fractional_laplacian_alpha": (2.0,),
}


def catalog_profile(name: str, params: Sequence[float] = (), antisymmetric: bool = False) -> OperatorProfile:
    """Build a catalog profile. Parametric families take one parameter (m or alpha)."""
    params = tuple(float(p) for p in params)
    if name not in CATALOG:
        raise ProfileError(f"unknown profile {name!r}; choose from {sorted(CATALOG)}")
    if name in DEFAULT_PARAMS:
        if len(params) == 0:
            params = tuple(float(p) for p in DEFAULT_PARAMS[name])
        if len(params) != 1:
            raise ProfileError(f"{name} takes exactly one parameter")
    elif params:
        raise ProfileError(f"{name} takes no parameters")

    if name == "exponential":
        prof = OperatorProfile(
            name=name,
            eval=lambda w: 1.0 + np.asarray(w, dtype=float) ** 2,
            gamma0=0.0,
            gamma1=2.0,
            n0=-1,
            formula=CATALOG[name],
        )
    elif name == "tanh_sigmoid":
        prof = OperatorProfile(
            name=name,
            eval=_sinh_pi,
            gamma0=1.0,
            gamma1=math.inf,
            n0=0,
            formula=CATALOG[name],
            log_abs=_log_sinh_pi,
        )
    elif name == "arctan_sigmoid":
        prof = OperatorProfile(
            name=name,
            eval=_abs_exp,
            gamma0=1.0,
            gamma1=math.inf,
            n0=0,
            formula=CATALOG[name],
            log_abs=_log_abs_exp,
        )
    elif name == "ridge_spline_m":
        m = params[0]
        if m != int(m) or m < 2:
            raise ProfileError("ridge_spline_m needs an integer m >= 2")
        prof = _power_profile(name, float(int(m)), (int(m),), f"|w|^{int(m)}")
    elif name == "fractional_spline_alpha":
        alpha = params[0]
        if alpha <= 0:
            raise ProfileError("fractional_spline_alpha needs alpha > 0")
        if alpha == int(alpha):
            raise ProfileError("integer alpha: use ridge_spline_m with m = alpha + 1")
        prof = _power_profile(name, alpha + 1.0, (alpha,), f"|w|^{alpha + 1.0:g}")
    else:
        alpha = params[0]
        if alpha <= 0:
            raise ProfileError("fractional_laplacian_alpha needs alpha > 0")
        prof = _power_profile(name, alpha, (alpha,), f"|w|^{alpha:g}")
    # the sigmoid rows only have antisymmetric activations
    if antisymmetric or name in ("tanh_sigmoid", "arctan_sigmoid"):
        prof = prof.with_variant(True)
    return prof


def profile_from_samples(
    name: str,
    omega: np.ndarray,
    values: np.ndarray,
    gamma0: float | None = None,
    gamma1: float | None = None,
) -> OperatorProfile:
    """Wrap a sampled positive profile, interpolated linearly in log-log coordinates.

    Outside the sampled range the end slopes are continued as power laws. Orders that
    are not supplied are estimated from the samples.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(omega)
    omega, values = omega[order], values[order]
    if np.any(omega <= 0) or np.any(values <= 0):
        raise ProfileError("sampled profiles need positive frequencies and values")
    lw, lv = np.log(omega), np.log(values)
    s_lo = (lv[1] - lv[0]) / (lw[1] - lw[0])
    s_hi = (lv[-1] - lv[-2]) / (lw[-1] - lw[-2])

    def log_abs(w):
        x = np.log(np.abs(np.asarray(w, dtype=float)))
        y = np.interp(x, lw, lv)
        y = np.where(x < lw[0], lv[0] + s_lo * (x - lw[0]), y)
        return np.where(x > lw[-1], lv[-1] + s_hi * (x - lw[-1]), y)

    def ev(w):
        with np.errstate(over="ignore"):
            return np.exp(log_abs(w))

    g0 = s_lo if gamma0 is None else gamma0
    g0 = _snap(g0)
    g1 = s_hi if gamma1 is None else gamma1
    n0 = degree_from_order(g0) if g0 > 0 else -1
    return OperatorProfile(
        name=name, eval=ev, gamma0=g0, gamma1=g1, n0=n0, formula="sampled", log_abs=log_abs
    )


def _snap(x: float, tol: float = 0.02) -> float:
    r = round(x)
    return float(r) if abs(x - r) < tol else float(x)


@dataclass
class AdmissibilityReport:
    is_admissible: bool
    estimated_gamma0: float
    estimated_gamma1: float
    n0: int
    violations: list[str]


def default_grid() -> np.ndarray:
    return np.logspace(-5, 3, 4001)


def check_admissibility(profile: OperatorProfile, grid: np.ndarray | None = None) -> AdmissibilityReport:
    """Numerical admissibility test on a positive, log-spaced frequency grid.

    Checks symmetry, non-vanishing away from the origin, the order of the zero at the
    origin (regression over the lowest decade) and ellipticity (smallest local slope over
    the highest decade must exceed 1). The decay condition is taken from the profile flag.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    grid = np.sort(grid[grid > 0])
    if grid.size < 20 or grid[0] > 1e-4 or grid[-1] < 1e3:
        raise ValueError("grid must cover [1e-4, 1e3] with at least 20 points")
    violations: list[str] = []
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(profile.eval(grid), dtype=float)
            vals_neg = np.asarray(profile.eval(-grid), dtype=float)
    except Exception as exc:  # surfaced to the caller as a report failure
        raise ValueError(f"profile evaluation failed: {exc}") from exc

    finite = np.isfinite(vals) & np.isfinite(vals_neg)
    if np.any(vals[finite] != vals_neg[finite]):
        violations.append("profile is not symmetric")
    if np.any(np.isnan(vals)):
        violations.append("profile evaluates to NaN")
    zero = vals == 0
    flips = np.nonzero(np.diff(np.sign(vals[finite])))[0]
    if np.any(zero) or flips.size:
        where = grid[zero][0] if np.any(zero) else grid[finite][flips[0]]
        violations.append(f"zero away from origin near w={where:.4g}")

    logw = np.log(grid)
    with np.errstate(divide="ignore"):
        logv = profile.log_magnitude(grid)
    ok = np.isfinite(logv)

    lo = (grid <= 10 * grid[0]) & ok
    est_g0 = float("nan")
    if lo.sum() >= 3:
        slope, icpt = np.polyfit(logw[lo], logv[lo], 1)
        resid = logv[lo] - (slope * logw[lo] + icpt)
        ss_tot = np.sum((logv[lo] - logv[lo].mean()) ** 2)
        r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
        rms = float(np.sqrt(np.mean(resid**2)))
        est_g0 = float(slope)
        if r2 < 0.999 and rms > 1e-6:
            violations.append("indeterminate order at the origin")
    else:
        violations.append("indeterminate order at the origin")

    hi = (grid >= grid[-1] / 10) & ok
    est_g1 = float("nan")
    if hi.sum() >= 3:
        local = np.diff(logv[hi]) / np.diff(logw[hi])
        est_g1 = float(np.min(local))
        if not est_g1 > 1.0:
            violations.append(f"ellipticity exponent {est_g1:.3g} <= 1")
    else:
        violations.append("profile overflows over the highest decade")

    if not profile.satisfies_decay:
        violations.append("decay condition not declared")

    g0 = _snap(est_g0) if np.isfinite(est_g0) else est_g0
    if np.isfinite(g0) and abs(g0) < 0.02:
        g0 = 0.0
    if np.isfinite(g0) and g0 < 0:
        violations.append("profile has a pole at the origin")
    n0 = degree_from_order(g0) if np.isfinite(g0) and g0 > 0 else -1
    return AdmissibilityReport(
        is_admissible=not violations,
        estimated_gamma0=est_g0,
        estimated_gamma1=est_g1,
        n0=n0,
        violations=violations,
    )


def null_space_degree(profile: OperatorProfile) -> int:
    return profile.n0 if profile.gamma0 > 0 else -1


def list_catalog() -> list[dict]:
    """One row per catalog family, instantiated at its default parameter."""
    rows = []
    for name in CATALOG:
        prof = catalog_profile(name, DEFAULT_PARAMS.get(name, ()))
        row = prof.describe()
        row["formula"] = CATALOG[name]
        rows.append(row)
    return rows
