"""Sparse ridge-atom fits: f(x) = p0(x) + sum_k a_k rho(xi_k.x - tau_k) with an l1 penalty on a."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .nullspace import Polynomial, design_matrix, multi_indices

PRUNE = 1e-10


class ConvergenceWarning(UserWarning):
    pass


class CertificateWarning(UserWarning):
    """More active atoms than M - dim P."""


@dataclass(frozen=True)
class RidgeAtom:
    xi: np.ndarray
    tau: float
    weight: float

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise ValueError("atom direction must be a unit vector")
        object.__setattr__(self, "xi", xi)

    def flipped(self, odd: bool = False) -> "RidgeAtom":
        """The same atom written with (-xi, -tau)."""
        return RidgeAtom(-self.xi, -self.tau, -self.weight if odd else self.weight)


@dataclass(frozen=True)
class Dictionary:
    xi: np.ndarray  # (K, d)
    tau: np.ndarray  # (K,)

    def __len__(self) -> int:
        return self.tau.size

    def design(self, X: np.ndarray, activation: Callable) -> np.ndarray:
        return activation(X @ self.xi.T - self.tau[None, :])


def half_sphere_directions(d: int, n_dirs: int) -> np.ndarray:
    if n_dirs < 1:
        raise ValueError("n_dirs must be at least 1")
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        th = np.arange(n_dirs) * math.pi / n_dirs
        return np.column_stack([np.cos(th), np.sin(th)])
    # Fibonacci points on the sphere, folded onto the half with positive last coordinate
    pts = []
    golden = math.pi * (3.0 - math.sqrt(5.0))
    n = 2 * n_dirs
    for i in range(n):
        z = 1.0 - (i + 0.5) * 2.0 / n
        if z <= 0:
            continue
        r = math.sqrt(1.0 - z * z)
        base = np.zeros(d)
        base[0], base[1], base[-1] = r * math.cos(golden * i), r * math.sin(golden * i), z
        pts.append(base / np.linalg.norm(base))
    return np.array(pts[:n_dirs])


def build_dictionary(X, n_dirs: int = 1, offsets: str = "data") -> Dictionary:
    """Directions on a half sphere, offsets at the data projections (deduplicated within 1e-9)."""
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    if offsets != "data":
        raise ValueError("only the 'data' offset rule is available")
    dirs = half_sphere_directions(X.shape[1], n_dirs)
    xis, taus = [], []
    for xi in dirs:
        proj = np.sort(X @ xi)
        keep = np.concatenate([[True], np.diff(proj) > 1e-9])
        for tau in proj[keep]:
            xis.append(xi)
            taus.append(tau)
    return Dictionary(np.array(xis), np.array(taus))


def homogeneity_normalize(w, b: float, gamma0: float) -> tuple[np.ndarray, float, float]:
    """Rewrite |w.x - b|^(gamma0-1) as scale * |xi.x - tau|^(gamma0-1) with |xi| = 1."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    nrm = float(np.linalg.norm(w))
    if nrm == 0.0:
        raise ValueError("zero direction")
    return w / nrm, b / nrm, nrm ** (gamma0 - 1.0)


@dataclass(frozen=True)
class NeuralModel:
    atoms: tuple[RidgeAtom, ...]
    poly: Polynomial
    activation: Callable = field(repr=False)
    lam: float = 0.0
    objective: float = math.nan
    duality_gap: float = math.nan
    converged: bool = True
    history: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False, compare=False)
    n_data: int = 0

    @property
    def K0(self) -> int:
        return len(self.atoms)

    @property
    def d(self) -> int:
        return self.poly.d

    def reg_cost(self) -> float:
        return float(sum(abs(a.weight) for a in self.atoms))

    def certificate(self) -> bool:
        """K0 <= M - dim P."""
        return self.K0 <= self.n_data - len(multi_indices(self.d, self.poly.n0))

    def predict(self, x) -> np.ndarray:
        return predict(self, x)


def predict(model: NeuralModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and model.d > 1)
    pts = x.reshape(1, -1) if single else (x[:, None] if x.ndim == 1 else x)
    if pts.shape[1] != model.d:
        raise ValueError(f"expected points of dimension {model.d}, got {pts.shape[1]}")
    out = model.poly(pts)
    if model.atoms:
        xi = np.array([a.xi for a in model.atoms])
        tau = np.array([a.tau for a in model.atoms])
        w = np.array([a.weight for a in model.atoms])
        out = out + model.activation(pts @ xi.T - tau) @ w
    return out[0] if single else out


def _soft(v: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _lasso_objective(A, y, lam, a):
    r = y - A @ a
    return float(r @ r + lam * np.abs(a).sum())


def _duality_gap(A, y, lam, a) -> float:
    r = y - A @ a
    primal = r @ r + lam * np.abs(a).sum()
    corr = np.abs(A.T @ (2.0 * r)).max() if A.shape[1] else 0.0
    theta = 2.0 * r * (min(1.0, lam / corr) if corr > 0 else 1.0)
    dual = theta @ y - 0.25 * theta @ theta
    return float(primal - dual)


def _polish(A, y, lam, a):
    # re-solve the stationarity conditions on the support with signs fixed
    S = np.flatnonzero(np.abs(a) > PRUNE)
    if S.size == 0:
        return a
    As = A[:, S]
    s = np.sign(a[S])
    gram = As.T @ As
    if np.linalg.matrix_rank(gram) < S.size:
        return a
    cand_s = np.linalg.solve(gram, As.T @ y - 0.5 * lam * s)
    if np.any(np.sign(cand_s) != s):
        return a
    cand = np.zeros_like(a)
    cand[S] = cand_s
    # optimality off the support
    g = 2.0 * A.T @ (y - A @ cand)
    off = np.ones(a.size, dtype=bool)
    off[S] = False
    if np.any(np.abs(g[off]) > lam * (1.0 + 1e-9)):
        return a
    return cand if _lasso_objective(A, y, lam, cand) <= _lasso_objective(A, y, lam, a) + 1e-12 else a


def fit_mnorm(
    X,
    y,
    activation: Callable,
    n0: int,
    lam: float,
    dictionary: Dictionary | None = None,
    n_dirs: int = 1,
    max_iter: int = 50000,
    tol: float = 1e-12,
    seed: int | None = None,
    polish: bool = True,
) -> NeuralModel:
    """Minimize sum (y - f(x))^2 + lam * sum |a_k| by monotone FISTA.

    The polynomial part is eliminated exactly: for fixed weights it is the least-squares
    fit of the residual. ``seed`` draws a random starting point.
    """
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    y = np.asarray(y, dtype=float).ravel()
    M, d = X.shape
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    P = design_matrix(X, n0)
    if P.shape[1] > M or (P.shape[1] and np.linalg.matrix_rank(P) < P.shape[1]):
        raise ValueError(f"data do not determine polynomials of degree {n0}")
    if dictionary is None:
        dictionary = build_dictionary(X, n_dirs)
    A_full = dictionary.design(X, activation)
    if P.shape[1]:
        Qp, _ = np.linalg.qr(P)
        proj = lambda v: v - Qp @ (Qp.T @ v)  # noqa: E731
    else:
        proj = lambda v: v  # noqa: E731
    A = proj(A_full)
    yt = proj(y)
    L = 2.0 * np.linalg.norm(A, 2) ** 2 if A.size else 1.0
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=0.1, size=A.shape[1]) if seed is not None else np.zeros(A.shape[1])
    z, tk = a.copy(), 1.0
    f_prev = _lasso_objective(A, yt, lam, a)
    history = [f_prev]
    gap = _duality_gap(A, yt, lam, a)
    converged = False
    for it in range(max_iter):
        grad = -2.0 * A.T @ (yt - A @ z)
        u = _soft(z - grad / L, lam / L)
        f_u = _lasso_objective(A, yt, lam, u)
        a_new = u if f_u <= f_prev else a
        f_new = min(f_u, f_prev)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        z = a_new + (tk / t_next) * (u - a_new) + ((tk - 1.0) / t_next) * (a_new - a)
        a, tk = a_new, t_next
        history.append(f_new)
        f_prev = f_new
        if it % 50 == 0 or it == max_iter - 1:
            gap = _duality_gap(A, yt, lam, a)
            if gap <= tol * max(1.0, yt @ yt):
                converged = True
                break
    if polish:
        a2 = _polish(A, yt, lam, a)
        if a2 is not a:
            a = a2
            history.append(_lasso_objective(A, yt, lam, a))
            gap = _duality_gap(A, yt, lam, a)
            converged = converged or gap <= 1e-9 * max(1.0, yt @ yt)
    if not converged:
        warnings.warn(f"proximal iterations stopped with duality gap {gap:.3e}", ConvergenceWarning, stacklevel=2)
    a[np.abs(a) < PRUNE] = 0.0
    b = np.linalg.lstsq(P, y - A_full @ a, rcond=None)[0] if P.shape[1] else np.zeros(0)
    atoms = tuple(
        RidgeAtom(dictionary.xi[k], float(dictionary.tau[k]), float(a[k])) for k in np.flatnonzero(a)
    )
    r = y - A_full @ a - (P @ b if P.shape[1] else 0.0)
    model = NeuralModel(
        atoms,
        Polynomial(d, n0, b),
        activation,
        float(lam),
        objective=float(r @ r + lam * np.abs(a).sum()),
        duality_gap=float(gap),
        converged=converged,
        history=np.array(history),
        n_data=M,
    )
    if not model.certificate():
        warnings.warn(f"K0 = {model.K0} exceeds M - dim P", CertificateWarning, stacklevel=2)
    return model
