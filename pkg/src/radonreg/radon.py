"""Discrete Radon machinery in the plane and the Radon-domain basis functions nu_x.

Angles cover [0, pi); the other half of the circle follows from parity:
g(t, theta + pi) = g(-t, theta) for even sinograms and -g(-t, theta) for odd ones.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.integrate import IntegrationWarning
from scipy.interpolate import CubicSpline

from ._fourier import _tail_integral, regularized_inverse, rule_for, unit_rule, window_hat, windowed_kernel
from .activations import Activation, exact_activation
from .catalog import OperatorProfile
from .nullspace import IsoWindow, default_window

FILTER_CONST = {d: 1.0 / (2.0 * (2.0 * math.pi) ** (d - 1)) for d in range(1, 8)}


class SupportWarning(UserWarning):
    """The field reaches the edge of its sampling domain."""


def _symmetric_t(n_t: int, t_max: float) -> np.ndarray:
    h = 2.0 * t_max / n_t
    return (np.arange(n_t) - (n_t - 1) / 2.0) * h


@dataclass(frozen=True)
class SinogramGrid:
    """Offsets symmetric about 0 (no sample at t = 0 for even n_t) and angles on [0, pi)."""

    n_t: int = 1024
    t_max: float = 1.5
    n_theta: int = 360

    @cached_property
    def t(self) -> np.ndarray:
        return _symmetric_t(self.n_t, self.t_max)

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * math.pi / self.n_theta

    @property
    def dt(self) -> float:
        return 2.0 * self.t_max / self.n_t

    @property
    def dtheta(self) -> float:
        return math.pi / self.n_theta

    @cached_property
    def xi(self) -> np.ndarray:
        return np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    def weights(self) -> np.ndarray:
        """Quadrature weights over the full circle: trapezoid in t, 2 * dtheta per stored angle."""
        wt = np.full(self.n_t, self.dt)
        wt[[0, -1]] *= 0.5
        return np.outer(wt, np.full(self.n_theta, 2.0 * self.dtheta))

    def refined(self) -> "SinogramGrid":
        return SinogramGrid(2 * self.n_t, self.t_max, 2 * self.n_theta)


@dataclass(frozen=True)
class Sinogram:
    grid: SinogramGrid
    values: np.ndarray
    parity: str = "even"

    def __post_init__(self):
        if self.values.shape[-2:] != (self.grid.n_t, self.grid.n_theta):
            raise ValueError("values must have shape (..., n_t, n_theta)")
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")

    @property
    def t_grid(self) -> np.ndarray:
        return self.grid.t

    @property
    def theta_grid(self) -> np.ndarray:
        return self.grid.theta

    def with_values(self, values: np.ndarray, parity: str | None = None) -> "Sinogram":
        return Sinogram(self.grid, values, self.parity if parity is None else parity)

    def full_circle(self) -> tuple[np.ndarray, np.ndarray]:
        """Angles on [0, 2 pi) and the parity-extended values."""
        ext = self.values[..., ::-1, :]
        if self.parity == "odd":
            ext = -ext
        theta = np.concatenate([self.grid.theta, self.grid.theta + math.pi])
        return theta, np.concatenate([self.values, ext], axis=-1)

    def lq_norm(self, q: float) -> float:
        w = self.grid.weights()
        return float(np.sum(w * np.abs(self.values) ** q) ** (1.0 / q))

    def inner(self, other: "Sinogram") -> float:
        return float(np.sum(self.grid.weights() * self.values * other.values))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t"] + [repr(float(th)) for th in self.grid.theta])
            for ti, row in zip(self.grid.t, self.values):
                wr.writerow([repr(float(ti))] + [repr(float(v)) for v in row])


@dataclass(frozen=True)
class Image:
    """Square image with pixel centers x_i = -L + (i + 1/2) * 2L/n; values[i, j] = f(x_i, x_j)."""

    half_width: float
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def pixel(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.n) + 0.5) * self.pixel

    @classmethod
    def from_function(cls, f: Callable, n: int, half_width: float) -> "Image":
        x = -half_width + (np.arange(n) + 0.5) * (2.0 * half_width / n)
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        pts = np.stack([X1.ravel(), X2.ravel()], axis=1)
        return cls(half_width, np.asarray(f(pts), dtype=float).reshape(n, n))

    def points(self) -> np.ndarray:
        X1, X2 = np.meshgrid(self.x, self.x, indexing="ij")
        return np.stack([X1.ravel(), X2.ravel()], axis=1)

    def support_radius(self, rel: float = 1e-12) -> float:
        mag = np.abs(self.values)
        peak = mag.max()
        if peak == 0:
            return 0.0
        X1, X2 = np.meshgrid(self.x, self.x, indexing="ij")
        r = np.hypot(X1, X2)[mag > rel * peak]
        return float(r.max() + self.pixel)


def _boundary_check(image: Image, rel: float = 1e-6) -> None:
    v = np.abs(image.values)
    total = v.sum()
    if total == 0:
        return
    edge = v[[0, -1], :].sum() + v[1:-1, [0, -1]].sum()
    if edge > rel * total:
        warnings.warn("image mass on the grid boundary exceeds 1e-6 of the total", SupportWarning, stacklevel=3)


def radon_forward(
    image: Image,
    grid: SinogramGrid | None = None,
    order: int = 3,
    angles: Sequence[int] | None = None,
) -> Sinogram:
    """Line integrals by spline sampling along each line and the trapezoid rule.

    Lines are sampled at pixel spacing inside the disk that holds the image support.
    Cubic splines keep the sinogram smooth enough for the ramp filter; linear sampling
    leaves pixel-scale kinks that the filter amplifies. ``angles`` restricts the
    computation to a subset of angle indices (other columns stay zero).
    """
    _boundary_check(image)
    if grid is None:
        grid = SinogramGrid(1024, 1.5 * image.half_width, 360)
    data = image.values
    if order > 1:
        data = ndimage.spline_filter(data, order=order)
    R = min(math.sqrt(2.0) * image.half_width, image.support_radius() + 2.0 * image.pixel)
    ds = image.pixel
    n_s = int(math.ceil(R / ds))
    s = np.arange(-n_s, n_s + 1) * ds
    rows = np.flatnonzero(np.abs(grid.t) < R)
    T, S = np.meshgrid(grid.t[rows], s, indexing="ij")
    keep = T**2 + S**2 <= R**2
    tt, ss = T[keep], S[keep]
    row_of = np.broadcast_to(np.arange(rows.size)[:, None], T.shape)[keep]
    out = np.zeros((grid.n_t, grid.n_theta))
    scale = 1.0 / image.pixel
    offset = image.half_width / image.pixel - 0.5
    idx = range(grid.n_theta) if angles is None else angles
    for j in idx:
        c, sn = grid.xi[j]
        # point = t xi + s xi_perp with xi_perp = (-sin, cos)
        coords = np.stack([(tt * c - ss * sn) * scale + offset, (tt * sn + ss * c) * scale + offset])
        vals = ndimage.map_coordinates(data, coords, order=order, mode="constant", cval=0.0, prefilter=False)
        out[rows, j] = np.bincount(row_of, vals, minlength=rows.size) * ds
    return Sinogram(grid, out, "even")


def _t_frequencies(n: int, h: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, h)


def _ramp_kernel_spectrum(N: int, h: float, variant: str, periodic: bool = False) -> np.ndarray:
    # band-limited (|w| < pi/h) impulse response sampled at t = k h; avoids the DC bias of
    # multiplying a sampled |w| directly. ``periodic`` sums the kernel over all shifts by N h,
    # in closed form, for circular convolution of periodic columns.
    k = (np.fft.fftfreq(N) * N).astype(int)
    ker = np.zeros(N)
    nz = k != 0
    if variant == "symmetric":
        ker[0] = math.pi / (2.0 * h * h)
        odd = k % 2 != 0
        if periodic:
            ker[odd] = -2.0 * math.pi / (N * N * h * h * np.sin(math.pi * k[odd] / N) ** 2)
        else:
            ker[odd] = -2.0 / (math.pi * k[odd] ** 2 * h * h)
    else:
        sign = -((-1.0) ** k[nz])
        if periodic:
            ker[nz] = sign * math.pi / (N * h * h * np.tan(math.pi * k[nz] / N))
        else:
            ker[nz] = sign / (k[nz] * h * h)
    return np.fft.fft(ker * h * FILTER_CONST[2])


def kfilter(g: Sinogram, d: int = 2, variant: str = "symmetric", pad: int = 2) -> Sinogram:
    """Apply c_d |w|^(d-1) (symmetric) or -j sign(w) c_d |w|^(d-1) (antisymmetric) along t.

    In the plane the filter is the sampled band-limited kernel, applied as a linear
    convolution through a zero-padded FFT. ``pad=1`` treats the columns as periodic.
    """
    if variant not in ("symmetric", "antisymmetric"):
        raise ValueError("variant must be 'symmetric' or 'antisymmetric'")
    n_t = g.grid.n_t
    if n_t & (n_t - 1):
        raise ValueError("n_t must be a power of two")
    N = pad * n_t
    if d == 2:
        mult = _ramp_kernel_spectrum(N, g.grid.dt, variant, periodic=pad == 1)
    else:
        w = _t_frequencies(N, g.grid.dt)
        mult = FILTER_CONST[d] * np.abs(w) ** (d - 1)
        if variant == "antisymmetric":
            mult = -1j * np.sign(w) * mult
    spec = np.fft.fft(g.values, n=N, axis=-2)
    shape = [1] * spec.ndim
    shape[-2] = N
    out = np.fft.ifft(spec * mult.reshape(shape), axis=-2)[..., :n_t, :].real
    parity = g.parity
    if variant == "antisymmetric":
        parity = "odd" if g.parity == "even" else "even"
    return g.with_values(out, parity)


def backproject_points(g: Sinogram, pts: np.ndarray, upsample: int = 4) -> np.ndarray:
    """R* g at points (N, 2): integral over the full circle.

    Columns are refined ``upsample`` times with a cubic spline in t, then interpolated
    linearly at each projection.
    """
    pts = np.asarray(pts, dtype=float)
    t = g.grid.t
    vals = g.values
    if upsample > 1:
        fine = np.linspace(t[0], t[-1], upsample * (t.size - 1) + 1)
        vals = CubicSpline(t, vals, axis=0)(fine)
        t = fine
    out = np.zeros(pts.shape[0])
    # antipodal direction: g(-proj, theta + pi) = +-g(proj, theta)
    factor = 2.0 if g.parity == "even" else 0.0
    if factor == 0.0:
        return out
    for j in range(g.grid.n_theta):
        out += np.interp(pts @ g.grid.xi[j], t, vals[:, j], left=0.0, right=0.0)
    return out * factor * g.grid.dtheta


def backproject(g: Sinogram, image_like: Image | None = None, n: int = 256, half_width: float | None = None) -> Image:
    """Backprojection onto a square pixel grid (that of ``image_like`` when given)."""
    if image_like is not None:
        n, half_width = image_like.n, image_like.half_width
    if half_width is None:
        half_width = g.grid.t_max / 1.5
    img = Image(half_width, np.zeros((n, n)))
    vals = backproject_points(g, img.points()).reshape(n, n)
    return Image(half_width, vals)


def fbp_roundtrip(image: Image, grid: SinogramGrid | None = None) -> tuple[Image, float]:
    """R* K R applied to an image; returns the result and the relative L2 error."""
    sino = radon_forward(image, grid)
    rec = backproject(kfilter(sino, 2), image)
    err = np.linalg.norm(rec.values - image.values) / np.linalg.norm(image.values)
    return rec, float(err)


@dataclass(frozen=True)
class SliceResult:
    omega: np.ndarray
    image_slice: np.ndarray
    sinogram_spectrum: np.ndarray

    @property
    def rel_error(self) -> float:
        scale = np.max(np.abs(self.image_slice))
        return float(np.max(np.abs(self.image_slice - self.sinogram_spectrum)) / scale)


def image_spectrum(image: Image, freqs: np.ndarray) -> np.ndarray:
    """Riemann-sum transform of the image at frequency vectors (K, 2)."""
    x = image.x
    e1 = np.exp(-1j * np.outer(freqs[:, 0], x))
    e2 = np.exp(-1j * np.outer(freqs[:, 1], x))
    return np.einsum("ki,ij,kj->k", e1, image.values, e2) * image.pixel**2


def fourier_slice(
    image: Image,
    theta_index: int = 0,
    grid: SinogramGrid | None = None,
    omega: np.ndarray | None = None,
    order: int = 3,
) -> SliceResult:
    """Compare the image spectrum along omega * xi with the 1D transform of the sinogram column."""
    if grid is None:
        grid = SinogramGrid(1024, 1.5 * image.half_width, 360)
    sino = radon_forward(image, grid, order=order, angles=[theta_index])
    col = sino.values[:, theta_index]
    if omega is None:
        omega = np.linspace(0.0, 0.25 * np.pi / image.pixel, 257)
    xi = grid.xi[theta_index]
    f_slice = image_spectrum(image, np.outer(omega, xi))
    g_hat = np.exp(-1j * np.outer(omega, grid.t)) @ col * grid.dt
    return SliceResult(omega, f_slice, g_hat)


@dataclass(frozen=True)
class RadialSinogram:
    """(t, theta) -> profile(t - xi.x0): the Radon transform of an isotropic function centred at x0."""

    profile: Callable
    x0: np.ndarray

    def __call__(self, t, theta) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        shift = self.x0[0] * np.cos(theta) + self.x0[1] * np.sin(theta)
        return self.profile(t - shift)

    def sample(self, grid: SinogramGrid) -> Sinogram:
        T, TH = np.meshgrid(grid.t, grid.theta, indexing="ij")
        return Sinogram(grid, self(T, TH), "even")


def radon_of_isotropic(
    radial_spectrum: Callable,
    x0=(0.0, 0.0),
    filtered: bool = False,
    d: int = 2,
    t_max: float = 64.0,
    n: int = 4097,
) -> RadialSinogram:
    """Radon transform of the isotropic function with radial spectrum rho_hat, centred at x0.

    With ``filtered`` the profile is the inverse transform of c_d |w|^(d-1) rho_hat(w).
    The profile is tabulated by quadrature and interpolated.
    """
    if filtered:
        spec = lambda w: FILTER_CONST[d] * np.abs(w) ** (d - 1) * radial_spectrum(w)  # noqa: E731
    else:
        spec = radial_spectrum
    half = np.linspace(0.0, t_max, n // 2 + 1)
    vals = regularized_inverse(spec, half, -1)
    t = np.concatenate([-half[:0:-1], half])
    v = np.concatenate([vals[:0:-1], vals])

    def profile(s):
        return np.interp(s, t, v, left=0.0, right=0.0)

    return RadialSinogram(profile, np.asarray(x0, dtype=float))


def remainder_r(N: int, omega) -> np.ndarray:
    """r_N(w) = (exp(-jw) - sum_{n<=N} (-jw)^n/n!) / ((-jw)^N / N!).

    Tail series below |w| = 1, direct formula above.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    w = np.asarray(omega, dtype=float)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) < 1.0
    if np.any(small):
        z = -1j * w[small]
        term = z / (N + 1)
        acc = term.copy()
        for m in range(2, 40):
            term = term * z / (N + m)
            acc = acc + term
        out[small] = acc
    big = ~small
    if np.any(big):
        z = -1j * w[big]
        acc = np.exp(z) * math.factorial(N) / z**N
        for n in range(N + 1):
            acc = acc - z ** (n - N) * (math.factorial(N) / math.factorial(n))
        out[big] = acc
    return out


class RadonBasis:
    """Factory for the basis functions nu_x of one profile.

    Holds the activation rho (closed form when available) and the correction kernels
    c_n = kappa_rad * d^n rho, made consistent with rho by absorbing the polynomial by
    which the closed form differs from the windowed spectral inverse.
    """

    def __init__(self, profile: OperatorProfile, window: IsoWindow | None = None, activation: Activation | None = None):
        if profile.gamma0 > profile.n0 + 1 + 1e-12:
            from .activations import PoleOrderError

            raise PoleOrderError("gamma0 exceeds n0 + 1")
        self.profile = profile
        self.window = window if window is not None else default_window(2)
        self.n0 = profile.n0
        self.rho = activation if activation is not None else exact_activation(profile)
        self.shift = self._polynomial_shift()
        self._corr_cache: dict[tuple[int, float], np.ndarray] = {}

    def _polynomial_shift(self) -> np.ndarray:
        # rho - rho_windowed as an even polynomial of degree <= n0 (coefficients of t^k)
        n0 = self.n0
        if n0 < 0:
            return np.zeros(0)
        t = np.linspace(0.3, 4.0, 12)
        t = np.concatenate([-t[::-1], t])
        diff = self.rho(t) - regularized_inverse(self.profile.spectrum, t, n0)
        A = np.column_stack([t**k for k in range(n0 + 1)])
        coef, *_ = np.linalg.lstsq(A, diff, rcond=None)
        resid = np.max(np.abs(A @ coef - diff))
        if resid > 1e-6 * max(1.0, np.max(np.abs(diff))):
            warnings.warn(f"activation differs from the spectral inverse by more than a polynomial ({resid:.2e})")
        return coef

    def correction(self, n: int, t) -> np.ndarray:
        """c_n(t) = (kappa_rad * d^n rho)(t), consistent with ``self.rho``."""
        t = np.asarray(t, dtype=float)
        val = windowed_kernel(self.profile.spectrum, t, n, self.n0 - n)
        for k in range(n, self.shift.size):
            val = val + self.shift[k] * math.factorial(k) / math.factorial(k - n) * t ** (k - n)
        return val

    def corrections(self, t) -> np.ndarray:
        return np.stack([self.correction(n, t) for n in range(self.n0 + 1)]) if self.n0 >= 0 else np.zeros((0,) + np.shape(t))

    def nu(self, x0) -> "NuBasis":
        return NuBasis(np.asarray(x0, dtype=float), self)

    def sample(self, centers, grid: SinogramGrid) -> np.ndarray:
        """nu_{x_m}(t_i, theta_j) for all centers: array (M, n_t, n_theta)."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        t = grid.t
        key = (grid.n_t, grid.t_max)
        if key not in self._corr_cache:
            self._corr_cache[key] = self.corrections(t)
        corr = self._corr_cache[key]
        t0 = centers @ grid.xi.T  # (M, n_theta)
        out = self.rho(t[None, :, None] - t0[:, None, :])
        for n in range(self.n0 + 1):
            coef = (-t0) ** n / math.factorial(n)
            out = out - coef[:, None, :] * corr[n][None, :, None]
        return out

    def spectral(self, omega, t0) -> np.ndarray:
        """nu_hat(w) for offset t0 = xi.x0, built on r_N near the origin."""
        w = np.asarray(omega, dtype=float)
        kap = window_hat(w)
        n0 = self.n0
        with np.errstate(over="ignore", divide="ignore"):
            inv = 1.0 / np.asarray(self.profile.eval(w), dtype=float)
        inv[~np.isfinite(inv)] = 0.0
        shift = np.exp(-1j * w * t0)
        if n0 < 0:
            return shift * inv
        z = w * t0
        low = remainder_r(n0, z) * (-1j * z) ** n0 / math.factorial(n0)
        return (kap * low + (1.0 - kap) * shift) * inv

    def spectral_inverse(self, t, t0: float) -> np.ndarray:
        """(1/pi) int_0^inf Re[nu_hat(w) exp(jwt)] dw by quadrature."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        nodes, weights = rule_for(np.concatenate([t, [t0]]) if t.size else np.array([t0]))
        nh = self.spectral(nodes, t0)
        out = np.real(np.exp(1j * np.outer(t, nodes)) * nh) @ weights / np.pi
        with np.errstate(over="ignore", divide="ignore"):
            for i, ti in enumerate(t):
                out[i] += _tail_integral(self.profile.spectrum, float(ti - t0), "cos") / np.pi
        return out


@dataclass(frozen=True)
class NuBasis:
    """nu_{x0}(t, xi) in spatial form (activation minus windowed Taylor corrections) and spectral form."""

    x0: np.ndarray
    basis: RadonBasis

    @property
    def n0(self) -> int:
        return self.basis.n0

    def _offset(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 0:
            xi = np.array([math.cos(float(xi)), math.sin(float(xi))])
        if self.x0.size == 1:
            return float(self.x0[0] * xi.ravel()[0])
        return float(xi @ self.x0)

    def spatial_eval(self, t, xi) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        t0 = self._offset(xi)
        val = self.basis.rho(t - t0)
        for n in range(self.n0 + 1):
            val = val - (-t0) ** n / math.factorial(n) * self.basis.correction(n, t)
        return val

    def spectral_eval(self, omega, xi) -> np.ndarray:
        return self.basis.spectral(omega, self._offset(xi))

    def spectral_inverse(self, t, xi) -> np.ndarray:
        return self.basis.spectral_inverse(t, self._offset(xi))


def nu_basis(profile: OperatorProfile, window: IsoWindow | None, x0) -> NuBasis:
    return RadonBasis(profile, window).nu(x0)


def radon_gram(basis: RadonBasis, centers, n_theta: int = 360) -> np.ndarray:
    """Radon-domain Gram matrix <nu_m, nu_n> by per-angle Parseval quadrature.

    On |w| <= 1 the spectra are integrated with a composite Gauss rule; above 1 they
    reduce to exp(-j w t0)/L(w) and the cross terms are oscillatory Fourier integrals.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    M = centers.shape[0]
    theta = np.arange(n_theta) * math.pi / n_theta
    xi = np.column_stack([np.cos(theta), np.sin(theta)])
    t0 = centers @ xi.T
    nodes, weights = unit_rule(200)
    inv2 = lambda w: basis.profile.spectrum(w) ** 2  # noqa: E731
    G = np.zeros((M, M))
    with np.errstate(over="ignore", divide="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for j in range(n_theta):
            spec = np.stack([basis.spectral(nodes, t0[m, j]) for m in range(M)])
            low = np.real(spec @ (np.conj(spec) * weights).T)
            for m in range(M):
                for n in range(m, M):
                    val = low[m, n] + _tail_integral(inv2, float(t0[m, j] - t0[n, j]), "cos")
                    G[m, n] += val
                    if n != m:
                        G[n, m] += val
    return G * 2.0 * (math.pi / n_theta) / math.pi


def sinogram_gram(nus: np.ndarray, grid: SinogramGrid) -> np.ndarray:
    """<nu_m, nu_n> from samples on a sinogram grid (array (M, n_t, n_theta))."""
    w = grid.weights()
    flat = nus.reshape(nus.shape[0], -1)
    return (flat * w.ravel()) @ flat.T
