import numpy as np
import pytest
from scipy import linalg

from radonreg.activations import IsotropicKernel, synth_rbf_kernel
from radonreg.catalog import catalog_profile
from radonreg.nullspace import Polynomial, design_matrix
from radonreg.radon import RadonBasis, radon_gram
from radonreg.rbf import (
    KernelSignNotice,
    UnisolventError,
    constraint_basis,
    fit_rbf,
    gram_matrix,
    predict,
    reg_cost,
    training_loss,
)

RELU = catalog_profile("ridge_spline_m", (2,))


def plain_kernel(radial, d=1):
    return IsotropicKernel(d, "radon", "test", "custom", 1, radial)


def natural_spline(x, y, q):
    """Natural cubic spline through (x, y) evaluated at q, from the tridiagonal moment system."""
    h = np.diff(x)
    n = x.size
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = h[1:-1]
    ab[1] = 2 * (h[:-1] + h[1:])
    ab[2, :-1] = h[1:-1]
    rhs = 6 * (np.diff(y[1:]) / h[1:] - np.diff(y[:-1]) / h[:-1])
    m = np.zeros(n)
    m[1:-1] = linalg.solve_banded((1, 1), ab, rhs)
    i = np.clip(np.searchsorted(x, q) - 1, 0, n - 2)
    a, b = x[i + 1] - q, q - x[i]
    hi = h[i]
    return (m[i] * a**3 + m[i + 1] * b**3) / (6 * hi) + (y[i] / hi - m[i] * hi / 6) * a + (y[i + 1] / hi - m[i + 1] * hi / 6) * b


def test_gram_linear_kernel():
    G = gram_matrix(np.array([0.0, 1.0]), plain_kernel(lambda r: r))
    np.testing.assert_array_equal(G, [[0, 1], [1, 0]])


def test_duplicate_centers_rejected():
    with pytest.raises(ValueError):
        gram_matrix(np.array([[0.0, 1.0], [0.0, 1.0]]), plain_kernel(lambda r: r, 2))


def test_conditional_positive_definiteness():
    k = synth_rbf_kernel(catalog_profile("fractional_laplacian_alpha", (1.0,)), 1, "radon", strict=False)
    rng = np.random.default_rng(0)
    X = np.sort(rng.uniform(-3, 3, 12))
    G = gram_matrix(X, k)
    Z = constraint_basis(design_matrix(X[:, None], 0))
    for _ in range(200):
        a = Z @ rng.normal(size=Z.shape[1])
        assert a @ G @ a > 0


def test_interpolation_at_zero_lambda():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (15, 2))
    y = np.cos(3 * X[:, 0]) * X[:, 1]
    k = synth_rbf_kernel(RELU, 2, "radon")
    model = fit_rbf(X, y, k, RELU.n0, 0.0)
    assert np.abs(predict(model, X) - y).max() < 1e-8 * np.abs(y).max()
    # side constraint P^T a = 0
    assert np.abs(design_matrix(X, 1).T @ model.coeffs).max() < 1e-8


def test_polynomial_data_gives_zero_weights():
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, (10, 2))
    y = 0.4 - 1.5 * X[:, 0] + 2.0 * X[:, 1]
    for lam in (0.0, 0.1, 10.0):
        model = fit_rbf(X, y, synth_rbf_kernel(RELU, 2, "radon"), 1, lam)
        assert np.abs(model.coeffs).max() < 1e-8
        np.testing.assert_allclose(model.poly.coeffs, [0.4, -1.5, 2.0], atol=1e-8)


def test_cubic_kernel_is_natural_spline():
    X = np.array([-1.0, -0.35, 0.2, 0.6, 1.3])
    y = np.array([0.3, -0.8, 0.5, 1.1, -0.2])
    k = synth_rbf_kernel(RELU, 1, "radon")
    model = fit_rbf(X, y, k, 1, 0.0)
    q = np.linspace(X[0] + 1e-3, X[-1] - 1e-3, 50)
    np.testing.assert_allclose(predict(model, q), natural_spline(X, y, q), atol=1e-6)


def test_predict_basics():
    k = synth_rbf_kernel(RELU, 2, "radon")
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    model = fit_rbf(X, np.array([0.0, 1.0, 1.0, 3.0]), k, 1, 0.0)
    pts = np.random.default_rng(3).normal(size=(7, 2))
    batch = predict(model, pts)
    np.testing.assert_allclose(batch, [predict(model, p) for p in pts], rtol=1e-14)
    zero = model.__class__(X, np.zeros(4), model.poly, k, 0.0, 1)
    np.testing.assert_allclose(predict(zero, pts), model.poly(pts))
    single = model.__class__(X[:1], np.ones(1), Polynomial.zero(2, 1), k, 0.0, 1)
    np.testing.assert_allclose(predict(single, pts), k.radial_eval(np.linalg.norm(pts, axis=1)))
    with pytest.raises(ValueError):
        predict(model, np.zeros((3, 3)))


def test_reg_cost_basics():
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, (8, 2))
    y = rng.normal(size=8)
    model = fit_rbf(X, y, synth_rbf_kernel(RELU, 2, "radon"), 1, 0.05)
    cost = reg_cost(model)
    assert cost > 0
    shifted = model.with_poly(model.poly + Polynomial(2, 1, np.array([1.0, -2.0, 3.0])))
    assert reg_cost(shifted) == cost
    assert reg_cost(model.__class__(X, np.zeros(8), model.poly, model.kernel, 0.0, 1)) == 0.0


def test_permutation_invariance():
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, (9, 2))
    y = rng.normal(size=9)
    k = synth_rbf_kernel(RELU, 2, "radon")
    perm = rng.permutation(9)
    a = fit_rbf(X, y, k, 1, 0.01)
    b = fit_rbf(X[perm], y[perm], k, 1, 0.01)
    np.testing.assert_allclose(b.coeffs, a.coeffs[perm], atol=1e-10)
    np.testing.assert_allclose(b.poly.coeffs, a.poly.coeffs, atol=1e-10)


def test_lambda_path_monotone():
    rng = np.random.default_rng(6)
    X = rng.uniform(-1, 1, (12, 2))
    y = np.sin(3 * X[:, 0]) + rng.normal(scale=0.1, size=12)
    k = synth_rbf_kernel(RELU, 2, "radon")
    costs, losses = [], []
    for lam in np.logspace(-4, 2, 13):
        m = fit_rbf(X, y, k, 1, lam)
        costs.append(reg_cost(m))
        losses.append(training_loss(m, X, y))
    assert np.all(np.diff(costs) <= 1e-12 * max(costs))
    assert np.all(np.diff(losses) >= -1e-12)


def test_unisolvence_errors():
    k = synth_rbf_kernel(RELU, 2, "radon")
    with pytest.raises(UnisolventError):
        fit_rbf(np.array([[0.0, 0.0], [1.0, 1.0]]), np.zeros(2), k, 1)
    collinear = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    with pytest.raises(UnisolventError):
        fit_rbf(collinear, np.arange(4.0), k, 1)


def test_negative_definite_kernel_is_flipped():
    X = np.array([0.0, 0.4, 1.1, 2.0])
    y = np.array([1.0, -1.0, 0.5, 0.0])
    with pytest.warns(KernelSignNotice):
        model = fit_rbf(X, y, plain_kernel(lambda r: r), 0, 0.1)
    assert model.kernel.sign == -1.0
    assert reg_cost(model) > 0


def test_logistic_loss_separates():
    rng = np.random.default_rng(7)
    X = rng.uniform(-1, 1, (30, 2))
    labels = np.where(X[:, 0] + 0.3 * X[:, 1] > 0.1, 1.0, -1.0)
    model = fit_rbf(X, labels, synth_rbf_kernel(RELU, 2, "radon"), 1, 1e-3, loss="logistic")
    assert np.all(np.sign(predict(model, X)) == labels)
    with pytest.raises(ValueError):
        fit_rbf(X, labels, synth_rbf_kernel(RELU, 2, "radon"), 1, 0.0, loss="logistic")


def test_reg_cost_matches_radon_domain_norm():
    X = np.array([[0.0, 0.0], [0.5, 0.1], [-0.2, 0.6], [0.3, -0.4]])
    y = np.array([1.0, -0.5, 0.2, 0.7])
    model = fit_rbf(X, y, synth_rbf_kernel(RELU, 2, "radon"), 1, 0.0)
    R = radon_gram(RadonBasis(RELU), X, n_theta=180)
    a = model.coeffs
    assert abs(a @ R @ a - reg_cost(model)) < 0.05 * reg_cost(model)
