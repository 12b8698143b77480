"""Quadratic-regularization fits: f(x) = p0(x) + sum_m a_m rho_iso(x - x_m) with P^T a = 0."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .activations import IsotropicKernel
from .nullspace import Polynomial, design_matrix

COND_LIMIT = 1e12


class UnisolventError(ValueError):
    """The centers do not determine polynomials of the null-space degree."""


class KernelSignNotice(UserWarning):
    """The kernel was negated to make it conditionally positive definite."""


class ConditioningWarning(UserWarning):
    pass


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def gram_matrix(X, kernel: IsotropicKernel) -> np.ndarray:
    X = _as_points(X)
    diff = X[:, None, :] - X[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    off = dist[~np.eye(len(X), dtype=bool)]
    if off.size and off.min() <= 1e-12 * max(1.0, dist.max()):
        raise ValueError("duplicate centers")
    G = kernel.radial_eval(dist)
    return 0.5 * (G + G.T)


def constraint_basis(P: np.ndarray) -> np.ndarray:
    """Orthonormal basis Z of {a : P^T a = 0}."""
    M = P.shape[0]
    if P.shape[1] == 0:
        return np.eye(M)
    Q, _ = np.linalg.qr(P, mode="complete")
    return Q[:, P.shape[1] :]


def _check_unisolvent(P: np.ndarray, n0: int) -> None:
    M, K = P.shape
    if M < K:
        raise UnisolventError(f"need at least {K} centers for degree {n0}, got {M}")
    if K and np.linalg.matrix_rank(P) < K:
        raise UnisolventError(f"centers are not unisolvent for polynomials of degree {n0}")


def _orient_kernel(G: np.ndarray, Z: np.ndarray, kernel: IsotropicKernel) -> tuple[np.ndarray, IsotropicKernel]:
    if Z.shape[1] == 0:
        return G, kernel
    ev = np.linalg.eigvalsh(Z.T @ G @ Z)
    tol = 1e-10 * max(1.0, np.abs(ev).max())
    if ev.max() <= tol and ev.min() < -tol:
        warnings.warn("kernel is conditionally negative definite here; using the negated kernel", KernelSignNotice, stacklevel=3)
        return -G, kernel.negated()
    if ev.min() < -tol:
        warnings.warn("kernel is indefinite on the constraint subspace", KernelSignNotice, stacklevel=3)
    return G, kernel


@dataclass(frozen=True)
class RbfModel:
    centers: np.ndarray
    coeffs: np.ndarray
    poly: Polynomial
    kernel: IsotropicKernel = field(repr=False)
    lam: float
    n0: int
    loss: str = "squared"

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def predict(self, x) -> np.ndarray:
        return predict(self, x)

    def reg_cost(self) -> float:
        return reg_cost(self)

    def with_poly(self, poly: Polynomial) -> "RbfModel":
        return replace(self, poly=poly)


def _saddle_solve(G: np.ndarray, P: np.ndarray, lam: float, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M, K = P.shape
    A = np.zeros((M + K, M + K))
    A[:M, :M] = G + lam * np.eye(M)
    A[:M, M:] = P
    A[M:, :M] = P.T
    rhs = np.concatenate([y, np.zeros(K)])
    cond = np.linalg.cond(A)
    if cond > COND_LIMIT:
        warnings.warn(f"saddle system condition number {cond:.2e}", ConditioningWarning, stacklevel=3)
    sol = linalg.solve(A, rhs, assume_a="sym")
    for _ in range(2):
        sol = sol + linalg.solve(A, rhs - A @ sol, assume_a="sym")
    return sol[:M], sol[M:]


def _logistic_solve(G, P, Z, lam, y, max_iter=100, tol=1e-10):
    # labels in {-1, +1}; Newton on (c, b) with a = Z c
    if lam <= 0:
        raise ValueError("logistic loss needs lambda > 0")
    B = np.hstack([G @ Z, P])
    H_reg = np.zeros((B.shape[1],) * 2)
    nc = Z.shape[1]
    H_reg[:nc, :nc] = 2.0 * lam * (Z.T @ G @ Z)
    theta = np.zeros(B.shape[1])

    def objective(th):
        f = B @ th
        return np.sum(np.logaddexp(0.0, -y * f)) + 0.5 * th @ H_reg @ th

    for _ in range(max_iter):
        f = B @ theta
        s = 0.5 * (1.0 - np.tanh(0.5 * y * f))  # sigma(-y f)
        grad = B.T @ (-y * s) + H_reg @ theta
        W = s * (1.0 - s)
        H = B.T @ (W[:, None] * B) + H_reg + 1e-12 * np.eye(B.shape[1])
        step = np.linalg.solve(H, grad)
        obj0, t = objective(theta), 1.0
        while objective(theta - t * step) > obj0 - 1e-4 * t * grad @ step and t > 1e-10:
            t *= 0.5
        theta = theta - t * step
        if np.linalg.norm(t * step) <= tol * (1.0 + np.linalg.norm(theta)):
            break
    return Z @ theta[:nc], theta[nc:]


def fit_rbf(X, y, kernel: IsotropicKernel, n0: int, lam: float = 0.0, loss: str = "squared") -> RbfModel:
    """Solve (G + lam I) a + P b = y, P^T a = 0 (squared loss) or the logistic analogue.

    ``b`` holds Taylor coefficients of p0 in the basis x^k/k!.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    X = _as_points(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.shape[0]:
        raise ValueError("X and y have different lengths")
    P = design_matrix(X, n0)
    _check_unisolvent(P, n0)
    G = gram_matrix(X, kernel)
    Z = constraint_basis(P)
    G, kernel = _orient_kernel(G, Z, kernel)
    if loss == "squared":
        a, b = _saddle_solve(G, P, lam, y)
    elif loss == "logistic":
        labels = np.where(y > 0, 1.0, -1.0)
        a, b = _logistic_solve(G, P, Z, lam, labels)
    else:
        raise ValueError("loss must be 'squared' or 'logistic'")
    return RbfModel(X, a, Polynomial(X.shape[1], n0, b), kernel, float(lam), n0, loss)


def predict(model: RbfModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and model.d > 1 or x.ndim == 0
    pts = x.reshape(1, -1) if single else _as_points(x)
    if pts.shape[1] != model.d:
        raise ValueError(f"expected points of dimension {model.d}, got {pts.shape[1]}")
    dist = np.linalg.norm(pts[:, None, :] - model.centers[None, :, :], axis=-1)
    out = model.kernel.radial_eval(dist) @ model.coeffs + model.poly(pts)
    return out[0] if single else out


def reg_cost(model: RbfModel) -> float:
    a = model.coeffs
    if not np.any(a):
        return 0.0
    return float(a @ gram_matrix(model.centers, model.kernel) @ a)


def training_loss(model: RbfModel, X, y) -> float:
    r = predict(model, X) - np.asarray(y, dtype=float)
    return float(r @ r)

