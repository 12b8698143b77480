import math

import numpy as np
import pytest

from radonreg.catalog import (
    CATALOG,
    DEFAULT_PARAMS,
    OperatorProfile,
    ProfileError,
    catalog_profile,
    check_admissibility,
    degree_from_order,
    list_catalog,
    null_space_degree,
    null_space_dim,
    profile_from_samples,
)


def test_exponential_row():
    prof = catalog_profile("exponential")
    assert prof(np.array([1.0]))[0] == 2.0
    assert prof.n0 == -1


def test_ridge_spline_m2_is_affine():
    prof = catalog_profile("ridge_spline_m", (2,))
    w = np.array([-3.0, 0.5, 2.0])
    np.testing.assert_array_equal(prof(w), w**2)
    assert prof.n0 == 1


def test_fractional_spline_alpha_1p5():
    prof = catalog_profile("fractional_spline_alpha", (1.5,))
    w = np.array([0.3, 2.0])
    np.testing.assert_allclose(prof(w), w**2.5, rtol=1e-15)
    assert prof.n0 == 2


@pytest.mark.parametrize(
    "name,params",
    [("nope", ()), ("fractional_spline_alpha", (-0.5,)), ("fractional_spline_alpha", (0.0,)),
     ("fractional_laplacian_alpha", (0.0,)), ("ridge_spline_m", (2.5,)), ("exponential", (1.0,))],
)
def test_bad_names_and_params(name, params):
    with pytest.raises(ProfileError):
        catalog_profile(name, params)


def test_sigmoid_rows_force_odd_variant():
    assert catalog_profile("tanh_sigmoid").antisymmetric_variant
    assert catalog_profile("arctan_sigmoid").antisymmetric_variant
    assert not catalog_profile("exponential").antisymmetric_variant


@pytest.mark.parametrize("name", list(CATALOG))
def test_catalog_entries_admissible(name):
    prof = catalog_profile(name, DEFAULT_PARAMS.get(name, ()))
    rep = check_admissibility(prof)
    assert rep.is_admissible, rep.violations
    assert rep.violations == []
    assert abs(rep.estimated_gamma0 - prof.gamma0) < 0.05
    assert rep.n0 == prof.n0


def test_exponential_report():
    rep = check_admissibility(catalog_profile("exponential"))
    assert rep.is_admissible
    assert abs(rep.estimated_gamma0) < 0.05
    assert rep.n0 == -1


def test_laplacian_order_estimate():
    rep = check_admissibility(catalog_profile("fractional_laplacian_alpha", (2.0,)))
    # log w^2 has slope exactly 2
    assert abs(rep.estimated_gamma0 - 2.0) < 0.05
    assert rep.n0 == 1


def test_zero_away_from_origin_is_flagged():
    prof = OperatorProfile(name="sine", eval=lambda w: np.sin(np.abs(w)), gamma0=1.0, gamma1=2.0, n0=0)
    rep = check_admissibility(prof)
    assert not rep.is_admissible
    assert any("zero away from origin" in v for v in rep.violations)


def test_short_grid_rejected():
    with pytest.raises(ValueError):
        check_admissibility(catalog_profile("exponential"), np.logspace(-2, 3, 100))


def test_symmetry_random_points():
    rng = np.random.default_rng(4)
    w = rng.normal(scale=5.0, size=1000)
    for name in CATALOG:
        prof = catalog_profile(name, DEFAULT_PARAMS.get(name, ()))
        with np.errstate(over="ignore"):
            np.testing.assert_array_equal(prof(w), prof(-w))


def test_degree_rule_random_orders():
    rng = np.random.default_rng(5)
    for g in rng.uniform(0.0, 6.0, 100):
        if g == 0.0:
            continue
        # n0 is the integer with gamma0 in (n0, n0 + 1]
        expected = next(n for n in range(-1, 7) if n < g <= n + 1)
        assert degree_from_order(g) == expected
    assert degree_from_order(1.0) == 0
    assert degree_from_order(2.0) == 1
    assert degree_from_order(2.5) == 2


def test_null_space_dimension():
    assert null_space_degree(catalog_profile("ridge_spline_m", (2,))) == 1
    assert null_space_dim(1, 2) == 3
    assert null_space_dim(-1, 2) == 0
    assert null_space_dim(2, 2) == math.comb(4, 2)


def test_sampled_profile_matches_power_law():
    w = np.logspace(-5, 3, 800)
    prof = profile_from_samples("sampled", w, w**2)
    rep = check_admissibility(prof)
    assert rep.is_admissible
    assert prof.n0 == 1
    np.testing.assert_allclose(prof(np.array([0.123, 7.0])), [0.123**2, 49.0], rtol=1e-3)


def test_tanh_identity_as_implemented():
    # tanh(t/2)/2 = 1/(1+exp(-t)) - 1/2, not + 1/2
    t = np.linspace(-8, 8, 101)
    np.testing.assert_allclose(np.tanh(t / 2) / 2, 1 / (1 + np.exp(-t)) - 0.5, atol=1e-15)


def test_list_catalog_rows():
    rows = list_catalog()
    assert [r["name"] for r in rows] == list(CATALOG)
    assert {"name", "formula", "gamma0", "gamma1", "n0"} <= set(rows[0])
