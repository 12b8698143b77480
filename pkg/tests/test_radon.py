import math

import numpy as np
import pytest
from scipy import special

from radonreg.catalog import catalog_profile
from radonreg.nullspace import default_window
from radonreg.radon import (
    FILTER_CONST,
    Image,
    RadonBasis,
    Sinogram,
    SinogramGrid,
    SupportWarning,
    backproject,
    backproject_points,
    fbp_roundtrip,
    fourier_slice,
    kfilter,
    nu_basis,
    radon_forward,
    radon_of_isotropic,
    remainder_r,
)
from radonreg.verify import gaussian_phantom, slice_errors

SIG = 0.15


def gauss(center=(0.0, 0.0), sigma=SIG):
    c = np.asarray(center)
    return lambda p: np.exp(-np.sum((p - c) ** 2, axis=-1) / (2 * sigma**2))


def gauss_projection(t, sigma=SIG):
    return math.sqrt(2 * math.pi) * sigma * np.exp(-(t**2) / (2 * sigma**2))


GRID = SinogramGrid(512, 1.5, 36)


def test_centered_gaussian_columns_are_identical():
    img = Image.from_function(gauss(), 256, 1.0)
    sino = radon_forward(img, GRID)
    exact = gauss_projection(GRID.t)
    assert np.abs(sino.values - exact[:, None]).max() < 1e-4


def test_shifted_gaussian_columns_shift():
    x0 = np.array([0.2, -0.1])
    img = Image.from_function(gauss(x0), 256, 1.0)
    sino = radon_forward(img, GRID)
    exact = gauss_projection(GRID.t[:, None] - (GRID.xi @ x0)[None, :])
    assert np.abs(sino.values - exact).max() < 1e-4


def test_zero_image():
    sino = radon_forward(Image(1.0, np.zeros((64, 64))), SinogramGrid(128, 1.5, 8))
    assert np.all(sino.values == 0)


def test_support_warning():
    with pytest.warns(SupportWarning):
        radon_forward(Image(1.0, np.ones((32, 32))), SinogramGrid(64, 1.5, 4))


def test_filter_constant_in_plane():
    assert FILTER_CONST[2] == pytest.approx(1 / (4 * math.pi))


def test_constant_column_filters_to_zero():
    # a periodic constant column has no content away from w = 0
    g = Sinogram(SinogramGrid(256, 1.0, 4), np.ones((256, 4)))
    assert np.abs(kfilter(g, 2, pad=1).values).max() < 1e-12
    assert np.abs(kfilter(g, 3, pad=1).values).max() < 1e-12


def test_periodic_kernel_matches_sampled_multiplier_on_band_limited_column():
    grid = SinogramGrid(128, 4.0, 1)
    w0 = 2 * math.pi * 5 / (2 * grid.t_max)
    g = Sinogram(grid, np.cos(w0 * grid.t)[:, None])
    out = kfilter(g, 2, pad=1).values[:, 0]
    np.testing.assert_allclose(out, FILTER_CONST[2] * w0 * g.values[:, 0], atol=1e-12)
    odd = kfilter(g, 2, "antisymmetric", pad=1).values[:, 0]
    # -j sign(w) maps cos to sin
    np.testing.assert_allclose(odd, FILTER_CONST[2] * w0 * np.sin(w0 * grid.t), atol=1e-12)


def test_double_hilbert_is_minus_identity():
    grid = SinogramGrid(256, 8.0, 3)
    t = grid.t[:, None]
    g = Sinogram(grid, t * np.exp(-t * t) * np.ones((1, 3)))
    # in d = 1 the antisymmetric filter is -j sign(w) / 2; periodic columns keep the identity exact
    for d in (1, 2):
        twice = kfilter(kfilter(g, d, "antisymmetric", pad=1), d, "antisymmetric", pad=1)
        assert twice.parity == "even"
    twice = kfilter(kfilter(g, 1, "antisymmetric", pad=1), 1, "antisymmetric", pad=1)
    np.testing.assert_allclose(twice.values, -g.values / 4, atol=1e-12)


def test_parity_bookkeeping():
    g = Sinogram(SinogramGrid(64, 1.0, 4), np.zeros((64, 4)))
    assert kfilter(g, 2).parity == "even"
    assert kfilter(g, 2, "antisymmetric").parity == "odd"


def test_filter_needs_power_of_two():
    with pytest.raises(ValueError):
        kfilter(Sinogram(SinogramGrid(100, 1.0, 2), np.zeros((100, 2))))


def test_odd_sinogram_backprojects_to_zero():
    grid = SinogramGrid(128, 1.5, 16)
    g = Sinogram(grid, np.random.default_rng(0).normal(size=(128, 16)), "odd")
    img = backproject(g, n=32, half_width=1.0)
    assert np.abs(img.values).max() < 1e-8


def test_single_column_gives_ridge():
    grid = SinogramGrid(128, 1.5, 8)
    vals = np.zeros((128, 8))
    vals[:, 2] = np.exp(-grid.t**2 / 0.1)
    g = Sinogram(grid, vals)
    xi = grid.xi[2]
    perp = np.array([-xi[1], xi[0]])
    base = np.random.default_rng(1).uniform(-0.5, 0.5, (10, 2))
    a = backproject_points(g, base)
    b = backproject_points(g, base + 0.37 * perp)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_fbp_roundtrip_small():
    img = Image.from_function(gauss((0.1, -0.05)), 128, 1.0)
    _, err = fbp_roundtrip(img, SinogramGrid(256, 1.5, 180))
    assert err < 0.02


def test_fourier_slice_gaussian():
    assert slice_errors(n=256, n_angles=3).max() < 1e-4


def test_fourier_slice_separable_axis():
    # along xi = (1, 0) the slice is the transform of the x1-marginal
    img = Image.from_function(lambda p: np.exp(-p[:, 0] ** 2 / 0.02) * (1 + 0 * p[:, 1]) * np.exp(-p[:, 1] ** 2 / 0.05), 128, 1.0)
    res = fourier_slice(img, 0, SinogramGrid(256, 1.5, 4))
    marg = img.values.sum(axis=1) * img.pixel
    direct = np.exp(-1j * np.outer(res.omega, img.x)) @ marg * img.pixel
    assert np.abs(res.image_slice - direct).max() < 1e-12 * np.abs(direct).max() + 1e-14
    assert res.rel_error < 1e-3


def test_fourier_slice_linearity():
    f, _ = gaussian_phantom()
    a = Image.from_function(f, 128, 1.0)
    b = Image.from_function(gauss((-0.2, 0.1), 0.1), 128, 1.0)
    grid = SinogramGrid(256, 1.5, 8)
    ra, rb = fourier_slice(a, 3, grid), fourier_slice(b, 3, grid)
    rab = fourier_slice(Image(1.0, 2 * a.values - b.values), 3, grid)
    np.testing.assert_allclose(rab.sinogram_spectrum, 2 * ra.sinogram_spectrum - rb.sinogram_spectrum, atol=1e-12)


def gaussian_radial_spectrum(w, sigma=SIG):
    return 2 * math.pi * sigma**2 * np.exp(-(sigma**2) * np.asarray(w) ** 2 / 2)


def test_isotropic_at_origin_has_identical_columns():
    rs = radon_of_isotropic(gaussian_radial_spectrum, (0.0, 0.0), t_max=4.0, n=801)
    g = rs.sample(SinogramGrid(64, 1.0, 6))
    assert np.abs(g.values - g.values[:, :1]).max() == 0.0


def test_isotropic_matches_discrete_radon():
    x0 = (0.15, 0.1)
    rs = radon_of_isotropic(gaussian_radial_spectrum, x0, t_max=4.0, n=4001)
    img = Image.from_function(gauss(x0), 256, 1.0)
    assert np.abs(rs.sample(GRID).values - radon_forward(img, GRID).values).max() < 1e-3


def test_filtered_isotropic_gaussian():
    # (1/2pi) int (1/4pi)|w| 2pi s^2 exp(-s^2 w^2/2) cos(wt) dw via Dawson's integral
    s = 1.0
    rs = radon_of_isotropic(lambda w: gaussian_radial_spectrum(w, s), filtered=True, t_max=20.0, n=8001)
    t = np.array([0.0, 0.5, 1.3, 3.0])
    a = s * s / 2
    inner = 1 / (2 * a) - t / (2 * a**1.5) * special.dawsn(t / (2 * math.sqrt(a)))
    exact = s * s / (2 * math.pi) * inner
    np.testing.assert_allclose(rs(t, np.zeros_like(t)), exact, atol=1e-6)


def test_remainder_examples():
    for N in range(1, 11):
        small = remainder_r(N, np.array([1e-6]))[0]
        assert abs(small * (N + 1) / 1e-6 + 1j) < 1e-4
    assert 0.99 <= abs(remainder_r(5, np.array([1e4]))[0]) <= 1.01
    assert abs(remainder_r(0, np.array([math.pi]))[0]) == pytest.approx(2.0)


def test_remainder_branches_agree():
    w = np.array([0.999999, 1.000001])
    for N in (1, 4, 9):
        r = remainder_r(N, w)
        assert abs(r[0] - r[1]) < 1e-5


def test_remainder_direct_definition():
    w = np.array([1.5, -3.0, 20.0])
    N = 3
    z = -1j * w
    direct = (np.exp(z) - sum(z**n / math.factorial(n) for n in range(N + 1))) / (z**N / math.factorial(N))
    np.testing.assert_allclose(remainder_r(N, w), direct, rtol=1e-12)


LAPLACIAN = catalog_profile("ridge_spline_m", (2,))


def test_nu_at_origin_is_direction_free():
    nu = nu_basis(LAPLACIAN, default_window(2), (0.0, 0.0))
    t = np.linspace(-6, 6, 61)
    a = nu.spatial_eval(t, 0.0)
    np.testing.assert_allclose(nu.spatial_eval(t, 1.1), a, atol=1e-15)
    basis = nu.basis
    np.testing.assert_allclose(a, basis.rho(t) - basis.correction(0, t), atol=1e-15)


def test_nu_spatial_matches_spectral():
    nu = RadonBasis(LAPLACIAN).nu((1.2, -0.9))
    t = np.linspace(-10, 10, 81)
    for th in (0.0, 1.0, 2.5):
        assert np.abs(nu.spatial_eval(t, th) - nu.spectral_inverse(t, th)).max() < 1e-3


def test_nu_spectrum_bounded_near_zero():
    # n0 = 1, gamma0 = 2: |nu_hat| <= t0^2 / 2 for small w
    basis = RadonBasis(LAPLACIAN)
    w = np.logspace(-6, -1, 50)
    for t0 in (0.5, 2.0, -4.0):
        assert np.all(np.abs(basis.spectral(w, t0)) <= t0**2 / 2 * (1 + 1e-9))


def test_nu_decays():
    nu = RadonBasis(LAPLACIAN).nu((0.6, 0.8))
    far = nu.spatial_eval(np.array([-200.0, 200.0]), 0.3)
    assert np.abs(far).max() < 1e-3


def test_sample_matches_spatial_eval():
    basis = RadonBasis(LAPLACIAN)
    grid = SinogramGrid(64, 3.0, 5)
    centers = np.array([[0.1, 0.2], [-0.5, 0.4]])
    S = basis.sample(centers, grid)
    for m in range(2):
        for j in range(5):
            np.testing.assert_allclose(S[m, :, j], basis.nu(centers[m]).spatial_eval(grid.t, grid.xi[j]), atol=1e-13)


def test_grid_weights_total():
    g = SinogramGrid(101, 2.0, 30)
    # trapezoid over the sampled span, full circle
    assert g.weights().sum() == pytest.approx(2 * math.pi * (g.t[-1] - g.t[0]))
