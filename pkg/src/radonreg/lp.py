"""L_p-regularized fits, 1 < p <= 2, in the plane.

The solution has the form f = p0 + L_R^+ J_q{s} with s = sum_m a_m nu_{x_m}. Since nu_x is
the representer of point evaluation for L_R^+, f(x) = p0(x) + <J_q{s}, nu_x> on the
sinogram grid; the full-field map instead convolves J_q{s} with rho along t, backprojects,
and removes the null-space component computed in the Radon domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .catalog import OperatorProfile
from .nullspace import IsoWindow, Polynomial, design_matrix
from .radon import RadonBasis, Sinogram, SinogramGrid, backproject_points
from .rbf import constraint_basis

_BASES: dict = {}


class GridTruncationWarning(UserWarning):
    pass


def _jq(values: np.ndarray, weights: np.ndarray, q: float) -> tuple[np.ndarray, float]:
    norm = float(np.sum(weights * np.abs(values) ** q) ** (1.0 / q))
    if norm == 0.0:
        raise ValueError("duality map of a zero field")
    if q == 2.0:
        return values.copy(), norm
    return np.sign(values) * np.abs(values) ** (q - 1.0) / norm ** (q - 2.0), norm


def duality_map_Jq(nu: Sinogram, q: float) -> Sinogram:
    """|nu|^(q-1) sign(nu) / ||nu||_q^(q-2), an isometry from L_q onto L_p."""
    if q <= 1.0:
        raise ValueError("q must exceed 1")
    vals, _ = _jq(nu.values, nu.grid.weights(), q)
    return nu.with_values(vals)


def conjugate(p: float) -> float:
    if not 1.0 < p <= 2.0:
        raise ValueError("p must lie in (1, 2]")
    return math.inf if p == 1.0 else p / (p - 1.0)


@dataclass(frozen=True)
class LpGrid:
    """Sinogram resolution for the forward map; ``t_max`` defaults to max|x_m| + margin."""

    n_t: int = 512
    n_theta: int = 180
    t_max: float | None = None
    margin: float = 2.0

    def sinogram_grid(self, centers: np.ndarray) -> SinogramGrid:
        t_max = self.t_max
        if t_max is None:
            t_max = float(np.max(np.linalg.norm(centers, axis=1))) + self.margin
        return SinogramGrid(self.n_t, t_max, self.n_theta)

    def refined(self) -> "LpGrid":
        return LpGrid(2 * self.n_t, 2 * self.n_theta, self.t_max, self.margin)


def radon_basis(profile: OperatorProfile, window: IsoWindow | None = None) -> RadonBasis:
    key = (profile.name, profile.params, profile.antisymmetric_variant)
    hit = _BASES.get(key)
    # the window is held alongside so an identity check is safe
    if hit is None or hit[0] is not window:
        hit = (window, RadonBasis(profile, window))
        _BASES[key] = hit
    return hit[1]


class LpOperator:
    """Sampled nu_{x_m} on a sinogram grid and the maps built from them."""

    def __init__(self, centers, profile: OperatorProfile, grid: LpGrid | None = None, window: IsoWindow | None = None):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if self.centers.shape[1] != 2:
            raise ValueError("the forward map is implemented in the plane only")
        self.profile = profile
        self.basis = radon_basis(profile, window)
        self.lp_grid = grid if grid is not None else LpGrid()
        self.grid = self.lp_grid.sinogram_grid(self.centers)
        self.weights = self.grid.weights().ravel()
        self.V = self.basis.sample(self.centers, self.grid).reshape(len(self.centers), -1)
        self.P = design_matrix(self.centers, profile.n0)

    @property
    def n0(self) -> int:
        return self.profile.n0

    def field(self, a) -> np.ndarray:
        return np.asarray(a, dtype=float) @ self.V

    def gram(self) -> np.ndarray:
        return (self.V * self.weights) @ self.V.T

    def evaluate(self, w: np.ndarray, x) -> np.ndarray:
        """<w, nu_x> for points x (N, 2); w is a flattened sinogram."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(len(x))
        ww = w * self.weights
        for i in range(0, len(x), 64):
            nus = self.basis.sample(x[i : i + 64], self.grid).reshape(len(x[i : i + 64]), -1)
            out[i : i + 64] = nus @ ww
        return out

    def full_field(self, w: np.ndarray, x) -> np.ndarray:
        """(I - Proj_P) R* (rho * w) at points x, with the convolution along t done by FFT."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = self.grid
        W = w.reshape(g.n_t, g.n_theta)
        _truncation_check(W)
        wt = np.full(g.n_t, g.dt)
        wt[[0, -1]] *= 0.5
        Ww = W * wt[:, None]
        n = g.n_t
        lags = (np.arange(2 * n - 1) - (n - 1)) * g.dt
        kern = _kernel_samples(self.basis.rho, lags, g.dt)
        L = 1 << int(math.ceil(math.log2(4 * n)))
        conv = np.fft.irfft(np.fft.rfft(kern, L)[:, None] * np.fft.rfft(Ww, L, axis=0), L, axis=0)
        # full linear convolution: output index k sits at t = lags[0] + t[0] + k dt
        out_len = 3 * n - 2
        cgrid = SinogramGrid(out_len, out_len * g.dt / 2.0, g.n_theta)
        sino = Sinogram(cgrid, conv[:out_len], "even")
        vals = backproject_points(sino, x)
        # null-space component, computed against the correction kernels in the Radon domain
        corr = self.basis.corrections(g.t)  # (n0 + 1, n_t)
        moments = corr @ Ww  # (n0 + 1, n_theta)
        proj = x @ g.xi.T  # (N, n_theta)
        fac = np.zeros_like(proj)
        for k in range(self.n0 + 1):
            fac += ((-proj) ** k / math.factorial(k)) * moments[k][None, :]
        return vals - fac.sum(axis=1) * 2.0 * g.dtheta


def _kernel_samples(rho, lags: np.ndarray, h: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(rho(lags), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        # integrable singularity at 0: cell averages on the neighbouring cells
        x, wg = np.polynomial.legendre.leggauss(16)
        near = np.flatnonzero(np.abs(lags) <= 2.5 * h)
        for i in near:
            pts = lags[i] + 0.5 * h * x
            vals[i] = 0.5 * float(wg @ rho(pts))
    return vals


def _truncation_check(W: np.ndarray) -> None:
    n = W.shape[0]
    edge = max(1, n // 20)
    total = np.abs(W).sum()
    if total > 0 and (np.abs(W[:edge]).sum() + np.abs(W[-edge:]).sum()) > 1e-3 * total:
        warnings.warn("sinogram mass near the t boundary exceeds 1e-3 of the total", GridTruncationWarning, stacklevel=3)


@dataclass(frozen=True)
class ForwardField:
    points: np.ndarray
    values: np.ndarray


def forward_solution(
    a,
    poly: Polynomial,
    profile: OperatorProfile,
    window: IsoWindow | None,
    p: float,
    grid: LpGrid | None,
    centers,
    points=None,
    n_field: int = 41,
) -> ForwardField:
    """p0 + L_R^+ J_q{sum a_m nu_{x_m}} on ``points`` (default: a square grid over the centers)."""
    op = LpOperator(centers, profile, grid, window)
    a = np.asarray(a, dtype=float)
    if points is None:
        points = field_points(op.centers, n_field)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.any(a):
        return ForwardField(points, poly(points))
    w, _ = _jq(op.field(a), op.weights, conjugate(p))
    return ForwardField(points, op.full_field(w, points) + poly(points))


def field_points(centers: np.ndarray, n: int = 41) -> np.ndarray:
    half = float(np.max(np.abs(centers))) * 1.1 + 1e-3
    x = np.linspace(-half, half, n)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    return np.stack([X1.ravel(), X2.ravel()], axis=1)


class LpObjective:
    """sum (y - f(x_m))^2 + lam * psi(||s||_q) as a function of theta = (a, b)."""

    def __init__(self, op: LpOperator, y, p: float, lam: float, psi: str = "norm"):
        if psi not in ("norm", "squared"):
            raise ValueError("psi must be 'norm' or 'squared'")
        self.op, self.p, self.q = op, p, conjugate(p)
        self.y = np.asarray(y, dtype=float)
        self.lam, self.psi = lam, psi
        self.M = op.V.shape[0]
        self.last_isometry_gap = 0.0

    def split(self, theta):
        return theta[: self.M], theta[self.M :]

    def parts(self, theta):
        a, b = self.split(np.asarray(theta, dtype=float))
        op, q, wts = self.op, self.q, self.op.weights
        s = a @ op.V
        J, norm = _jq(s, wts, q)
        ftil = op.V @ (wts * J)
        pred = ftil + op.P @ b
        return a, b, s, J, norm, ftil, pred

    def value(self, theta) -> float:
        a, b, s, J, norm, ftil, pred = self.parts(theta)
        r = self.y - pred
        reg = norm if self.psi == "norm" else norm * norm
        self._isometry(J, norm)
        return float(r @ r + self.lam * reg)

    def _isometry(self, J, norm):
        if self.q != 2.0:
            jp = float(np.sum(self.op.weights * np.abs(J) ** self.p) ** (1.0 / self.p))
            self.last_isometry_gap = abs(jp - norm) / norm

    def value_and_grad(self, theta):
        a, b, s, J, norm, ftil, pred = self.parts(theta)
        op, q, wts = self.op, self.q, self.op.weights
        r = self.y - pred
        dvec = (q - 1.0) * np.abs(s) ** (q - 2.0) * norm ** (2.0 - q) if q != 2.0 else np.ones_like(s)
        F = (op.V * (wts * dvec)) @ op.V.T + (2.0 - q) * np.outer(ftil, ftil) / norm**2
        dnorm = ftil / norm
        if self.psi == "norm":
            reg, dreg = norm, dnorm
        else:
            reg, dreg = norm * norm, 2.0 * norm * dnorm
        self._isometry(J, norm)
        ga = -2.0 * F.T @ r + self.lam * dreg
        gb = -2.0 * op.P.T @ r
        return float(r @ r + self.lam * reg), np.concatenate([ga, gb])


@dataclass(frozen=True)
class LpModel:
    centers: np.ndarray
    coeffs: np.ndarray
    poly: Polynomial
    p: float
    profile: OperatorProfile = field(repr=False)
    grid: LpGrid = field(repr=False)
    lam: float = 0.0
    psi: str = "norm"
    objective: float = math.nan
    converged: bool = True
    isometry_gap: float = 0.0

    @property
    def q(self) -> float:
        return conjugate(self.p)

    def operator(self) -> LpOperator:
        return LpOperator(self.centers, self.profile, self.grid)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != 2:
            raise ValueError("expected points in the plane")
        out = self.poly(pts)
        if np.any(self.coeffs):
            op = self.operator()
            w, _ = _jq(op.field(self.coeffs), op.weights, self.q)
            out = out + op.evaluate(w, pts)
        return out[0] if single else out

    def reg_value(self) -> float:
        op = self.operator()
        s = op.field(self.coeffs)
        return float(np.sum(op.weights * np.abs(s) ** self.q) ** (1.0 / self.q))


def fit_lp(
    X,
    y,
    profile: OperatorProfile,
    p: float,
    lam: float,
    grid: LpGrid | None = None,
    psi: str = "norm",
    window: IsoWindow | None = None,
    max_iter: int = 500,
) -> LpModel:
    """Minimize the data misfit plus lam * psi(||sum a_m nu_{x_m}||_q) over (a, p0) by BFGS.

    The weights are kept orthogonal to the null space (a = Z c), which is where the
    unpenalized polynomial drives the optimum.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if lam <= 0:
        raise ValueError("lambda must be positive")
    op = LpOperator(X, profile, grid, window)
    obj = LpObjective(op, y, p, lam, psi)
    Z = constraint_basis(op.P)
    M, K = op.P.shape
    # start from the quadratic (p = 2) solution on the same grid
    G = op.gram()
    A = np.block([[G + lam * np.eye(M), op.P], [op.P.T, np.zeros((K, K))]])
    sol = np.linalg.lstsq(A, np.concatenate([y, np.zeros(K)]), rcond=None)[0]
    c0 = Z.T @ sol[:M]
    b0 = sol[M:]

    def fun(u):
        c, b = u[: Z.shape[1]], u[Z.shape[1] :]
        val, g = obj.value_and_grad(np.concatenate([Z @ c, b]))
        return val, np.concatenate([Z.T @ g[:M], g[M:]])

    res = optimize.minimize(fun, np.concatenate([c0, b0]), jac=True, method="BFGS",
                            options={"maxiter": max_iter, "gtol": 1e-9})
    if not res.success and res.status != 2:
        warnings.warn(f"lp fit did not converge: {res.message}", RuntimeWarning, stacklevel=2)
    c, b = res.x[: Z.shape[1]], res.x[Z.shape[1] :]
    a = Z @ c
    return LpModel(X, a, Polynomial(2, profile.n0, b), p, profile, op.lp_grid, lam, psi,
                   float(res.fun), bool(res.success or res.status == 2), obj.last_isometry_gap)


@dataclass(frozen=True)
class P2Report:
    rms: float
    orthogonality_residual: float
    flagged: bool
    refined_rms: float | None = None

    @property
    def ratio(self) -> float | None:
        return None if self.refined_rms is None else self.rms / self.refined_rms


def _rbf_superposition(a, X, kernel, pts):
    dist = np.linalg.norm(pts[:, None, :] - X[None, :, :], axis=-1)
    return kernel.radial_eval(dist) @ a


def _aligned_rms(f, ref, pts, n0) -> float:
    # compare modulo polynomials of degree <= n0
    P = design_matrix(pts, n0)
    diff = f - ref
    if P.shape[1]:
        diff = diff - P @ np.linalg.lstsq(P, diff, rcond=None)[0]
        ref_c = ref - P @ np.linalg.lstsq(P, ref, rcond=None)[0]
    else:
        ref_c = ref
    return float(np.linalg.norm(diff) / np.linalg.norm(ref_c))


def p2_consistency(a, X, profile: OperatorProfile, grid: LpGrid | None = None, kernel=None,
                   refine: bool = True, n_field: int = 41) -> P2Report:
    """RMS gap between the p = 2 forward field and sum a_m rho_iso(x - x_m), modulo P_{n0}."""
    from .activations import synth_rbf_kernel

    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.asarray(a, dtype=float)
    if kernel is None:
        kernel = synth_rbf_kernel(profile, 2, "radon", strict=False)
    P = design_matrix(X, profile.n0)
    orth = float(np.abs(P.T @ a).max() / max(np.abs(a).max(), 1e-300)) if P.shape[1] else 0.0
    pts = field_points(X, n_field)
    ref = _rbf_superposition(a, X, kernel, pts)
    poly = Polynomial.zero(2, profile.n0)
    grid = grid if grid is not None else LpGrid()
    f = forward_solution(a, poly, profile, None, 2.0, grid, X, pts).values
    rms = _aligned_rms(f, ref, pts, profile.n0)
    fine = None
    if refine:
        f2 = forward_solution(a, poly, profile, None, 2.0, grid.refined(), X, pts).values
        fine = _aligned_rms(f2, ref, pts, profile.n0)
    return P2Report(rms, orth, orth > 1e-8, fine)

