"""Independent reference computations for the test suite.

Nothing in the production code paths imports this module. Each routine
reaches its answer by a different route than the library: sampling,
FFT convolution on a grid, discrete Fourier inversion, Gil-Pelaez, or
Poisson-mixture summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .embed import Kernel, Model
from .errors import NumericError, SchemaError
from .levy import GeneratingTriplet


class EdgeMassError(NumericError):
    """A grid density is not negligible at the ends of its grid."""


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 2 or self.std_error < 0:
            raise SchemaError("an MC estimate needs n >= 2 and a nonnegative standard error")

    def within(self, target: float, k: float) -> bool:
        return abs(self.value - target) <= k * self.std_error


def mc_mean(values: np.ndarray) -> McEstimate:
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    # std of a constant array picks up rounding from the mean; report it as exact
    se = 0.0 if np.ptp(values) == 0 else float(values.std(ddof=1) / math.sqrt(n))
    return McEstimate(float(values.mean()), se, n)


def mc_inner_product(p: Model, q: Model, kernel: Kernel, n: int, seed: int) -> McEstimate:
    """E k(X, Y) over n independent pairs X ~ p, Y ~ q."""
    rng = np.random.default_rng(seed)
    X = np.asarray(p.sample(n, rng), dtype=float).reshape(n, -1)
    Y = np.asarray(q.sample(n, rng), dtype=float).reshape(n, -1)
    return mc_mean(kernel.psi(X - Y))


def mc_kernel_mean(p: Model, kernel: Kernel, x, n: int, seed: int) -> list[McEstimate]:
    """E k(x_j, X) for each evaluation point x_j."""
    rng = np.random.default_rng(seed)
    X = np.asarray(p.sample(n, rng), dtype=float).reshape(n, -1)
    pts = np.asarray(x, dtype=float).reshape(-1, kernel.dim)
    return [mc_mean(kernel.psi(xj[None, :] - X)) for xj in pts]


@dataclass(frozen=True)
class GridDensity:
    """Values on the uniform grid x0 + k dx, k = 0..n-1."""

    x0: float
    dx: float
    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.size)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.dx)

    def at(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.x, self.values, left=0.0, right=0.0)


def symmetric_grid(half_width: float, n: int) -> tuple[np.ndarray, float]:
    """Odd-length grid on [-half_width, half_width] containing 0."""
    if n % 2 == 0:
        n += 1
    x = np.linspace(-half_width, half_width, n)
    return x, float(x[1] - x[0])


def _edge_mass(f: np.ndarray, dx: float) -> float:
    return float(dx * (abs(f[0]) + abs(f[-1])))


def fft_convolve_1d(f, g, dx: float, x0: float | None = None, edge_tol: float = 1e-6) -> GridDensity:
    """Linear convolution of two densities sampled on the same grid.

    ``x0`` is the first grid point (default: the grid is centred on 0). The
    output lives on the grid 2 x0 + k dx with 2n - 1 points.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise SchemaError("fft_convolve_1d needs two 1-D arrays on the same grid")
    if not dx > 0:
        raise SchemaError("dx must be positive")
    for name, h in (("f", f), ("g", g)):
        em = _edge_mass(h, dx)
        if em >= edge_tol:
            raise EdgeMassError(f"{name} carries mass {em:.3g} at the grid edges")
    n = f.size
    if x0 is None:
        x0 = -0.5 * (n - 1) * dx
    size = 1 << int(math.ceil(math.log2(2 * n - 1)))
    out = np.fft.irfft(np.fft.rfft(f, size) * np.fft.rfft(g, size), size)[: 2 * n - 1] * dx
    return GridDensity(2.0 * x0, dx, out)


def centred(conv: GridDensity, n: int) -> GridDensity:
    """Restrict a convolution of two centred n-point grids back to the input grid."""
    start = (n - 1) // 2
    return GridDensity(conv.x0 + start * conv.dx, conv.dx, conv.values[start:start + n])


def ks_distance(samples, cdf: Callable) -> float:
    """Kolmogorov-Smirnov sup distance between the empirical CDF and ``cdf``."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise SchemaError("ks_distance needs at least one sample")
    return float(stats.kstest(samples, cdf).statistic)


def ks_critical_99(n: int) -> float:
    return 1.63 / math.sqrt(n)


def dft_density(cf: Callable[[np.ndarray], np.ndarray], half_width: float, n: int) -> GridDensity:
    """Density on a centred grid from a CF by a discrete Fourier sum.

    f(x) ~ (dt / 2pi) sum_k cf(t_k) exp(-i t_k x), with the frequency grid
    dual to the spatial one (dt = 2pi / (n dx)).
    """
    if n % 2:
        n += 1
    dx = 2.0 * half_width / n
    x = -half_width + dx * np.arange(n)
    dt = 2.0 * math.pi / (n * dx)
    k = np.arange(n) - n // 2
    t = k * dt
    phi = np.asarray(cf(t), dtype=complex)
    # sum_k phi_k exp(-i t_k x_j) with x_j = -L + j dx
    shifted = phi * np.exp(1j * t * half_width)
    vals = np.fft.fft(np.fft.ifftshift(shifted))
    return GridDensity(-half_width, dx, (vals.real * dt / (2.0 * math.pi)))


def gil_pelaez_cdf(cf: Callable[[np.ndarray], np.ndarray], x: float, t_max: float) -> float:
    """F(x) = 1/2 - (1/pi) int_0^inf Im(exp(-i t x) cf(t)) / t dt, truncated at t_max."""

    def integrand(t: float) -> float:
        if t == 0.0:
            t = 1e-300
        v = complex(np.asarray(cf(np.array([t])))[0])
        return (v * complex(math.cos(t * x), -math.sin(t * x))).imag / t

    val, _ = integrate.quad(integrand, 0.0, t_max, limit=4000, epsabs=1e-12)
    return 0.5 - val / math.pi


def _poisson_cap(m: float, tail: float) -> int:
    # pmf decays faster than geometrically past the mean, so a 1e-3 margin on the last term suffices
    k = int(math.ceil(m))
    while stats.poisson.logpmf(k, m) > math.log(tail) - 7.0:
        k += 1
    return k


def cpg_density_1d(triplet: GeneratingTriplet, x, tail: float = 1e-17) -> np.ndarray:
    """Compound-Poisson-plus-Gaussian density as a Poisson mixture of normals.

    X = drift + N(0, A) + sum_j N_j x_j with N_j ~ Poisson(m_j); the compensated
    drift subtracts m_j x_j for the atoms with |x_j| <= 1.
    """
    if triplet.dim != 1 or not triplet.A[0, 0] > 0:
        raise SchemaError("cpg_density_1d needs d = 1 and A > 0")
    x = np.asarray(x, dtype=float)
    locs = triplet.nu.locations[:, 0]
    masses = triplet.nu.masses
    drift = float(triplet.gamma[0] - np.sum(masses * locs * (np.abs(locs) <= 1.0)))
    sd = math.sqrt(triplet.A[0, 0])
    caps = [_poisson_cap(m, tail) for m in masses]
    out = np.zeros_like(x)
    grids = np.meshgrid(*[np.arange(c + 1) for c in caps], indexing="ij") if caps else []
    counts = np.stack([g.ravel() for g in grids], axis=1) if caps else np.zeros((1, 0), dtype=int)
    logw = np.zeros(counts.shape[0])
    for j, m in enumerate(masses):
        logw += stats.poisson.logpmf(counts[:, j], m)
    shifts = drift + counts @ locs if caps else np.array([drift])
    for w, s in zip(np.exp(logw), shifts):
        out += w * stats.norm.pdf(x, loc=s, scale=sd)
    return out




def bessel_k_cosh_integral(lam: float, x: float) -> float:
    """K_lam(x) = int_0^inf exp(-x cosh t) cosh(lam t) dt by adaptive quadrature."""
    if not x > 0:
        raise SchemaError("x must be positive")
    # integrand is below 1e-300 of its peak once x (cosh t - 1) > 700 + |lam| t
    upper = 1.0
    while x * (math.cosh(upper) - 1.0) - abs(lam) * upper < 750.0:
        upper *= 1.5

    def f(t: float) -> float:
        return math.exp(-x * (math.cosh(t) - 1.0) + abs(lam) * t) * 0.5 * (1.0 + math.exp(-2.0 * abs(lam) * t))

    val, _ = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=500)
    return val * math.exp(-x)


__all__ = [
    "EdgeMassError",
    "McEstimate",
    "mc_mean",
    "mc_inner_product",
    "mc_kernel_mean",
    "GridDensity",
    "symmetric_grid",
    "fft_convolve_1d",
    "centred",
    "ks_distance",
    "ks_critical_99",
    "dft_density",
    "gil_pelaez_cdf",
    "cpg_density_1d",
    "bessel_k_cosh_integral",
]
