"""Self-checks behind ``radonreg verify``; every check carries its metric and tolerance."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .catalog import catalog_profile
from .lp import LpGrid, _jq, p2_consistency
from .radon import Image, RadonBasis, SinogramGrid, fbp_roundtrip, fourier_slice, remainder_r
from .rbf import constraint_basis
from .nullspace import design_matrix

BOUND_CAP = 1.27


@dataclass(frozen=True)
class Check:
    name: str
    metric: float
    tol: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        extra = f" note={self.note!r}" if self.note else ""
        return f"check={self.name} metric={self.metric:.3e} tol={self.tol:.1e} status={status}{extra}"


def gaussian_phantom(sigma: float = 0.15, center=(0.1, -0.05)) -> tuple[Callable, Callable]:
    """Gaussian bump and its closed-form 2D spectrum."""
    c = np.asarray(center, dtype=float)

    def f(p):
        return np.exp(-np.sum((p - c) ** 2, axis=-1) / (2.0 * sigma**2))

    def spectrum(w):
        w = np.atleast_2d(w)
        return 2.0 * math.pi * sigma**2 * np.exp(-0.5 * sigma**2 * np.sum(w * w, axis=1) - 1j * (w @ c))

    return f, spectrum


def suite_bounds(n_samples: int = 100_000) -> list[Check]:
    w = np.linspace(-100.0, 100.0, n_samples)
    worst, limit_err = 0, 0.0
    for N in range(1, 11):
        r = np.abs(remainder_r(N, w))
        worst += int(np.sum(r > np.minimum(np.abs(w) / 2.0, BOUND_CAP)))
        small = remainder_r(N, np.array([1e-6]))[0]
        limit_err = max(limit_err, abs(small * (N + 1) / 1e-6 + 1j))
    far = abs(remainder_r(5, np.array([1e4]))[0])
    r0 = abs(remainder_r(0, np.array([math.pi]))[0])
    return [
        Check("bound_violations_N1_10", worst, 0, worst == 0),
        Check("small_omega_limit", limit_err, 1e-4, limit_err < 1e-4),
        Check("large_omega_modulus_r5", abs(far - 1.0), 1e-2, abs(far - 1.0) <= 1e-2),
        Check("r0_at_pi_info", r0, BOUND_CAP, True, "N=0 exceeds the cap; bound asserted for N>=1 only"),
    ]


def suite_radon(n: int = 256, n_theta: int = 360, refine: bool = False) -> list[Check]:
    f, _ = gaussian_phantom()
    img = Image.from_function(f, n, 1.0)
    _, err = fbp_roundtrip(img, SinogramGrid(2 * n, 1.5, n_theta))
    checks = [Check(f"fbp_rel_l2_{n}_{n_theta}", err, 0.02, err < 0.02)]
    if refine:
        img2 = Image.from_function(f, 2 * n, 1.0)
        _, err2 = fbp_roundtrip(img2, SinogramGrid(4 * n, 1.5, 2 * n_theta))
        checks.append(Check(f"fbp_rel_l2_{2 * n}_{2 * n_theta}", err2, err, err2 < err, "must decrease"))
    return checks


def slice_errors(n: int = 256, n_angles: int = 8) -> np.ndarray:
    f, spec = gaussian_phantom()
    img = Image.from_function(f, n, 1.0)
    grid = SinogramGrid(1024, 1.5, 360)
    errs = []
    for j in np.linspace(0, grid.n_theta, n_angles, endpoint=False).astype(int):
        res = fourier_slice(img, int(j), grid)
        exact = spec(np.outer(res.omega, grid.xi[j]))
        scale = np.abs(exact).max()
        errs.append(max(np.abs(res.sinogram_spectrum - exact).max(), np.abs(res.image_slice - exact).max()) / scale)
    return np.array(errs)


def suite_slice() -> list[Check]:
    errs = slice_errors()
    return [Check("fourier_slice_max_rel", float(errs.max()), 1e-3, bool(errs.max() < 1e-3))]


def nu_consistency(radii=(0.0, 1.0, 2.5, 5.0), n_angles: int = 4) -> float:
    basis = RadonBasis(catalog_profile("ridge_spline_m", (2,)))
    t = np.linspace(-10.0, 10.0, 201)
    worst = 0.0
    for r in radii:
        x0 = r * np.array([0.6, 0.8])
        nu = basis.nu(x0)
        for th in np.linspace(0.0, math.pi, n_angles, endpoint=False):
            worst = max(worst, float(np.abs(nu.spatial_eval(t, th) - nu.spectral_inverse(t, th)).max()))
    return worst


def nu_boundedness(radii=(0.0, 0.5, 1.0, 3.0, 10.0, 30.0, 100.0), n_angles: int = 64) -> np.ndarray:
    """For each |x0|, the sup over directions of (1 + |xi.x0|)^-n0 ||nu(., xi)||_inf."""
    basis = RadonBasis(catalog_profile("ridge_spline_m", (2,)))
    grid = SinogramGrid(2 * 14000, 140.0, n_angles)
    out = []
    for r in radii:
        x0 = r * np.array([0.6, 0.8])
        nu = basis.sample(x0, grid)[0]
        t0 = grid.xi @ x0
        out.append(float(np.max(np.abs(nu).max(axis=0) / (1.0 + np.abs(t0)) ** basis.n0)))
    return np.array(out)


def suite_nu() -> list[Check]:
    err = nu_consistency()
    sup = nu_boundedness()
    spread = float(sup.max() / sup.min())
    return [
        Check("nu_spatial_vs_spectral", err, 1e-3, err < 1e-3),
        Check("nu_boundedness_spread", spread, 2.0, spread < 2.0, f"sup ratio per radius {np.round(sup, 3).tolist()}"),
    ]


def suite_duality(n_fields: int = 100, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    grid = SinogramGrid(64, 1.0, 32)
    w = grid.weights()
    iso, inv = 0.0, 0.0
    for p, q in ((1.5, 3.0), (2.0, 2.0), (1.25, 5.0)):
        for _ in range(n_fields):
            s = rng.normal(size=w.shape)
            J, nq = _jq(s, w, q)
            npj = float(np.sum(w * np.abs(J) ** p) ** (1.0 / p))
            back, _ = _jq(J, w, p)
            iso = max(iso, abs(npj - nq) / nq)
            inv = max(inv, float(np.abs(back - s).max() / np.abs(s).max()))
    return [Check("duality_isometry", iso, 1e-10, iso < 1e-10), Check("duality_inverse", inv, 1e-10, inv < 1e-10)]


def equivalence_coefficients(seed: int = 0, M: int = 6):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (M, 2))
    Z = constraint_basis(design_matrix(X, 1))
    return X, Z @ rng.normal(size=Z.shape[1])


def suite_equivalence(grid: LpGrid | None = None) -> list[Check]:
    X, a = equivalence_coefficients()
    rep = p2_consistency(a, X, catalog_profile("ridge_spline_m", (2,)), grid)
    return [
        Check("p2_rms_default_grid", rep.rms, 0.05, rep.rms < 0.05),
        Check("p2_rms_refined_grid", rep.refined_rms, rep.rms, rep.refined_rms < rep.rms, f"ratio {rep.ratio:.2f}"),
    ]


SUITES: dict[str, Callable[[], list[Check]]] = {
    "bounds": suite_bounds,
    "radon": suite_radon,
    "slice": suite_slice,
    "nu": suite_nu,
    "duality": suite_duality,
    "equivalence": suite_equivalence,
}


def run_suite(name: str) -> tuple[list[Check], float]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    t0 = time.perf_counter()
    checks = SUITES[name]()
    return checks, time.perf_counter() - t0
