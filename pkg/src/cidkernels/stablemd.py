"""Multivariate alpha-stable laws.

Three constructions are supported:

* discrete spectral measures (CF in any dimension, densities for d = 2),
* sub-Gaussian laws X = sqrt(A) G with CF exp(-(theta' R theta / 2)^(alpha/2)),
  which are elliptical and reduce to a radial amplitude after whitening,
* products of independent univariate stable coordinates.

Sub-Gaussian kernel means stay closed only inside a class of proportional
shape matrices R; ``proportionality`` decides membership numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._quadrature import oscillatory_integral, tanh_sinh_panels
from .amplitude import scaled_amplitude
from .errors import (
    DegenerateDistributionError,
    DimensionMismatchError,
    NotConjugateError,
    QuadratureError,
    SchemaError,
    UnsupportedDimensionError,
)
from .levy import as_points
from .stable1d import (
    StableKernelParams,
    StableParams,
    sample_standard_stable,
    stable_density_1d,
    stable_kernel_mean,
)

_UNIT_TOL = 1e-12
PROPORTIONAL_RTOL = 1e-9


def _same_alpha(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12


# ---------------------------------------------------------------- spectral measures

@dataclass(frozen=True)
class SpectralMeasure:
    """Finite measure on the unit sphere with atoms ``points[i]`` of mass ``masses[i]``."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 1)
        if pts.shape[0] != m.shape[0]:
            raise SchemaError("spectral measure needs one mass per atom")
        if m.size and not np.all(m > 0):
            raise SchemaError("spectral masses must be positive")
        if pts.shape[0] and not np.all(np.abs(np.linalg.norm(pts, axis=1) - 1.0) <= _UNIT_TOL):
            raise SchemaError("spectral atoms must be unit vectors (|s| = 1 within 1e-12)")
        pts.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @classmethod
    def empty(cls, dim: int) -> "SpectralMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def from_angles(cls, angles: Sequence[float], masses: Sequence[float]) -> "SpectralMeasure":
        a = np.asarray(angles, dtype=float)
        return cls(np.column_stack([np.cos(a), np.sin(a)]), masses)

    @classmethod
    def independent(cls, scales: Sequence[float], alpha: float) -> "SpectralMeasure":
        """Atoms on +-e_i with mass sigma_i^alpha / 2: independent SaS coordinates."""
        s = np.asarray(scales, dtype=float)
        d = s.size
        eye = np.eye(d)
        keep = s > 0
        pts = np.vstack([eye[keep], -eye[keep]])
        m = np.concatenate([0.5 * s[keep] ** alpha, 0.5 * s[keep] ** alpha])
        return cls(pts, m)

    def merged(self, tol: float = 1e-12) -> "SpectralMeasure":
        """Coincident atoms combined by adding masses."""
        pts: list[np.ndarray] = []
        masses: list[float] = []
        for p, m in zip(self.points, self.masses):
            for k, q in enumerate(pts):
                if np.max(np.abs(p - q)) <= tol:
                    masses[k] += float(m)
                    break
            else:
                pts.append(p.copy())
                masses.append(float(m))
        if not pts:
            return SpectralMeasure.empty(self.dim)
        return SpectralMeasure(np.array(pts), np.array(masses))

    def reflected(self) -> "SpectralMeasure":
        return SpectralMeasure(-self.points, self.masses)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """Every atom s has a partner at -s carrying the same mass."""
        own = self.merged(tol)
        for p, m in zip(own.points, own.masses):
            gap = np.max(np.abs(own.points + p), axis=1)
            j = int(np.argmin(gap))
            if gap[j] > tol or abs(own.masses[j] - m) > tol * max(1.0, m):
                return False
        return True

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


def spectral_exponent(gamma: SpectralMeasure, mu0, alpha: float, theta) -> np.ndarray:
    """log E exp(i theta.X) for the stable law with spectral measure ``gamma`` and shift ``mu0``."""
    if not 0.0 < alpha < 2.0:
        raise SchemaError("spectral stable laws need alpha in (0, 2)")
    d = gamma.dim
    mu = np.asarray(mu0, dtype=float).reshape(d)
    pts, batch = as_points(theta, d)
    proj = pts @ gamma.points.T
    ap = np.abs(proj)
    sg = np.sign(proj)
    if _same_alpha(alpha, 1.0):
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = np.where(ap > 0, np.log(ap), 0.0)
        terms = ap * (1.0 + 1j * (2.0 / math.pi) * sg * logp)
    else:
        terms = ap ** alpha * (1.0 - 1j * sg * math.tan(0.5 * math.pi * alpha))
    expo = -(terms * gamma.masses[None, :]).sum(axis=1) + 1j * pts @ mu
    return expo.reshape(batch)


def spectral_cf(gamma: SpectralMeasure, mu0, alpha: float, theta):
    out = np.exp(spectral_exponent(gamma, mu0, alpha, theta))
    return complex(out) if out.ndim == 0 else out


def convolve_spectral(g1: SpectralMeasure, g2: SpectralMeasure, mu1, mu2) -> tuple[SpectralMeasure, np.ndarray]:
    """Spectral data of the sum of two independent stable vectors with a common alpha."""
    if g1.dim != g2.dim:
        raise DimensionMismatchError(f"spectral measures of dimension {g1.dim} and {g2.dim}")
    g = SpectralMeasure(np.vstack([g1.points, g2.points]), np.concatenate([g1.masses, g2.masses])).merged()
    return g, np.asarray(mu1, dtype=float) + np.asarray(mu2, dtype=float)


def _direction_coefficients(gamma: SpectralMeasure, alpha: float, phi: np.ndarray) -> np.ndarray:
    """c(u) with exponent(t u) = -t^alpha c(u) for unit u at angle phi (alpha != 1 or symmetric)."""
    u = np.column_stack([np.cos(phi), np.sin(phi)])
    proj = u @ gamma.points.T
    ap = np.abs(proj)
    if _same_alpha(alpha, 1.0):
        return (ap * gamma.masses[None, :]).sum(axis=1).astype(complex)
    skew = math.tan(0.5 * math.pi * alpha)
    return ((ap ** alpha) * (1.0 - 1j * np.sign(proj) * skew) * gamma.masses[None, :]).sum(axis=1)


def _radial_integral(kappa: float, zeta: float, alpha: float, atol: float) -> float:
    """int_0^inf s Re exp(-s^alpha (1 - i kappa) - i s zeta) ds."""
    # s e^{-s^alpha} falls below atol * 1e-3 here
    log_thr = math.log(atol * 1e-3)
    s_max = 1.0
    while math.log(s_max) - s_max ** alpha > log_thr:
        s_max *= 1.5
    c = complex(1.0, -kappa)

    def f(s):
        return (s * np.exp(-(s ** alpha) * c - 1j * s * zeta)).real

    half = math.pi / abs(zeta) if zeta != 0.0 else None
    val, err = oscillatory_integral(f, s_max, half, atol)
    if err > 10 * atol:
        raise QuadratureError(f"radial integral error {err:.3g} above {atol:.3g}")
    return val


def stable_density_2d(gamma: SpectralMeasure, mu0, alpha: float, x, tol: float = 1e-8) -> float:
    """Density of a bivariate stable law by polar Fourier inversion.

    f(x) = 1/(2 pi^2) int_0^pi int_0^inf t Re exp(-t^a c(u) - i t u.(x-mu)) dt dphi.
    The radial integral is done per direction after rescaling by Re c(u);
    angular panels are split where some atom is orthogonal to u, since c(u)
    has a |u.s|^alpha cusp there.
    """
    if gamma.dim != 2:
        raise UnsupportedDimensionError("general spectral densities are only available for d = 2")
    if _same_alpha(alpha, 1.0) and not gamma.is_symmetric():
        raise SchemaError("alpha = 1 densities require a symmetric spectral measure")
    xv = np.asarray(x, dtype=float).reshape(2) - np.asarray(mu0, dtype=float).reshape(2)
    atom_angles = np.arctan2(gamma.points[:, 1], gamma.points[:, 0])
    kinks = np.mod(atom_angles + 0.5 * math.pi, math.pi)
    edges = np.unique(np.concatenate([[0.0, math.pi], kinks]))
    probe = _direction_coefficients(gamma, alpha, np.linspace(0.0, math.pi, 721)).real
    if np.min(probe) <= 1e-14 * max(1.0, np.max(probe)):
        raise DegenerateDistributionError("spectral measure does not span the plane; no density")
    a_min = float(np.min(probe))
    # density error = (1 / 2 pi^2) * pi * a^{-2/alpha} * (radial error)
    radial_tol = 0.1 * tol * 2.0 * math.pi * a_min ** (2.0 / alpha)

    def integrand(phi_nodes: np.ndarray) -> np.ndarray:
        flat = phi_nodes.ravel()
        c = _direction_coefficients(gamma, alpha, flat)
        a = c.real
        kappa = -c.imag / a
        scale = a ** (-1.0 / alpha)
        z = xv[0] * np.cos(flat) + xv[1] * np.sin(flat)
        out = np.empty_like(flat)
        for i in range(flat.size):
            out[i] = scale[i] ** 2 * _radial_integral(kappa[i], z[i] * scale[i], alpha, radial_tol)
        return out.reshape(phi_nodes.shape)

    vals, errs = tanh_sinh_panels(integrand, edges, atol=0.5 * tol * 2.0 * math.pi ** 2, max_level=7)
    val = float(vals.sum()) / (2.0 * math.pi ** 2)
    if val < -tol:
        raise QuadratureError(f"bivariate stable density went negative ({val:.3g})")
    return max(val, 0.0)


def stable_density_2d_at_mode_integral(gamma: SpectralMeasure, alpha: float) -> float:
    """Density at x = mu for a symmetric measure via the angular integral of c(u)^(-2/alpha).

    The radial integral is done analytically, int t exp(-t^a c) dt = Gamma(2/a) / (a c^(2/a)),
    so this is an independent cross-check for ``stable_density_2d``.
    """
    from scipy import integrate

    atom_angles = np.arctan2(gamma.points[:, 1], gamma.points[:, 0])
    edges = np.unique(np.concatenate([[0.0, math.pi], np.mod(atom_angles + 0.5 * math.pi, math.pi)]))

    def g(phi: float) -> float:
        c = _direction_coefficients(gamma, alpha, np.array([phi]))[0]
        return (math.gamma(2.0 / alpha) / alpha * c ** (-2.0 / alpha)).real

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(g, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return total / (2.0 * math.pi ** 2)


def sample_spectral(gamma: SpectralMeasure, mu0, alpha: float, n: int, seed=None) -> np.ndarray:
    """X = mu + sum_j m_j^(1/alpha) Z_j s_j with Z_j ~ S_alpha(1, 1, 0) totally skewed."""
    rng = np.random.default_rng(seed)
    d = gamma.dim
    out = np.tile(np.asarray(mu0, dtype=float).reshape(1, d), (n, 1))
    for s, m in zip(gamma.points, gamma.masses):
        if _same_alpha(alpha, 1.0):
            z = sample_standard_stable(1.0, 1.0, n, rng)
            # scaling a totally skewed alpha = 1 variable by m shifts it by (2/pi) m ln m
            out += np.outer(m * z + (2.0 / math.pi) * m * math.log(m), s)
        else:
            z = sample_standard_stable(alpha, 1.0, n, rng)
            out += np.outer(m ** (1.0 / alpha) * z, s)
    return out


# ---------------------------------------------------------------- sub-Gaussian laws

def _check_spd(R: np.ndarray) -> np.ndarray:
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise SchemaError("shape matrix must be square")
    if not np.allclose(R, R.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(R))))):
        raise SchemaError("shape matrix must be symmetric")
    try:
        return np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise SchemaError("shape matrix is not positive definite") from exc


@dataclass(frozen=True)
class SubGaussianParams:
    """CF exp(-|theta' R theta / 2|^(alpha/2) + i theta.mu0)."""

    alpha: float
    R: np.ndarray
    mu0: np.ndarray

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not 0.0 < a < 2.0:
            raise SchemaError(f"sub-Gaussian alpha must lie in (0, 2), got {a}")
        R = np.atleast_2d(np.asarray(self.R, dtype=float)).copy()
        mu = np.atleast_1d(np.asarray(self.mu0, dtype=float)).copy()
        if mu.shape != (R.shape[0],):
            raise DimensionMismatchError("mu0 and R have different dimensions")
        chol = _check_spd(R)
        R.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "mu0", mu)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return int(self.R.shape[0])

    def shifted(self, mu0) -> "SubGaussianParams":
        return SubGaussianParams(self.alpha, self.R, mu0)


@dataclass(frozen=True)
class IsotropicParams:
    """Sub-Gaussian law with R = sigma I."""

    alpha: float
    sigma: float
    mu0: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        if not 0.0 < float(self.alpha) < 2.0:
            raise SchemaError("isotropic alpha must lie in (0, 2)")
        if not float(self.sigma) > 0.0:
            raise SchemaError("isotropic sigma must be positive")
        d = int(self.dim)
        mu = np.atleast_1d(np.asarray(self.mu0, dtype=float)).copy()
        if mu.shape != (d,):
            raise DimensionMismatchError("mu0 length differs from dim")
        mu.setflags(write=False)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "mu0", mu)
        object.__setattr__(self, "dim", d)

    def as_subgaussian(self) -> SubGaussianParams:
        return SubGaussianParams(self.alpha, self.sigma * np.eye(self.dim), self.mu0)


def subgaussian_cf(p: SubGaussianParams, theta):
    pts, batch = as_points(theta, p.dim)
    quad = 0.5 * np.einsum("mi,ij,mj->m", pts, p.R, pts)
    out = np.exp(-np.abs(quad) ** (0.5 * p.alpha) + 1j * pts @ p.mu0).reshape(batch)
    return complex(out) if out.ndim == 0 else out


def subgaussian_log_cf(p: SubGaussianParams, theta):
    pts, batch = as_points(theta, p.dim)
    quad = 0.5 * np.einsum("mi,ij,mj->m", pts, p.R, pts)
    return (-np.abs(quad) ** (0.5 * p.alpha) + 1j * pts @ p.mu0).reshape(batch)


def subgaussian_density(p: SubGaussianParams, x, tol: float = 1e-10):
    """Elliptical density: det(R)^(-1/2) g(|L^{-1}(x - mu0)|).

    After whitening the CF is exp(-2^(-alpha/2) t^alpha), so g is the unit
    amplitude rescaled by c = 2^(-alpha/2). The tabulated amplitude is accurate
    to about 1e-12 of its peak, well inside ``tol`` for the scales used here.
    """
    if p.dim > 100:
        raise UnsupportedDimensionError("sub-Gaussian densities are limited to d <= 100")
    pts, batch = as_points(x, p.dim)
    diff = pts - p.mu0[None, :]
    white = np.linalg.solve(p._chol, diff.T).T
    r = np.linalg.norm(white, axis=1)
    log_det = 2.0 * float(np.sum(np.log(np.diag(p._chol))))
    vals = scaled_amplitude(p.alpha, p.dim, 2.0 ** (-0.5 * p.alpha), r) * math.exp(-0.5 * log_det)
    out = vals.reshape(batch)
    return float(out) if out.ndim == 0 else out


def proportionality(R1, R2) -> float:
    """sigma with R1 = sigma R2, or raise NotConjugateError.

    sigma_hat = trace(R2^{-1} R1) / d and the fit must satisfy
    ||R1 - sigma_hat R2||_F <= 1e-9 ||R1||_F.
    """
    R1 = np.asarray(R1, dtype=float)
    R2 = np.asarray(R2, dtype=float)
    if R1.shape != R2.shape:
        raise DimensionMismatchError("shape matrices have different sizes")
    d = R1.shape[0]
    sigma = float(np.trace(np.linalg.solve(R2, R1))) / d
    resid = np.linalg.norm(R1 - sigma * R2)
    if not sigma > 0 or resid > PROPORTIONAL_RTOL * np.linalg.norm(R1):
        raise NotConjugateError(
            "shape matrices are not proportional; sub-Gaussian kernel means are closed only within one class"
        )
    return sigma


def _alpha_half_norm(alpha: float, scales: Sequence[float]) -> float:
    """||(s_1, ..., s_k)||_{alpha/2} = (sum s_i^{alpha/2})^{2/alpha}."""
    h = 0.5 * alpha
    return float(sum(s ** h for s in scales) ** (1.0 / h))


def subgaussian_kernel_mean(kernel: SubGaussianParams, model: SubGaussianParams) -> SubGaussianParams:
    """Mean of the model in the kernel exp(-|theta' R0 theta / 2|^(alpha/2)); R_model = sigma R0."""
    if not _same_alpha(kernel.alpha, model.alpha):
        raise NotConjugateError(f"kernel alpha {kernel.alpha} differs from model alpha {model.alpha}")
    sigma = proportionality(model.R, kernel.R)
    return SubGaussianParams(model.alpha, _alpha_half_norm(model.alpha, [sigma, 1.0]) * kernel.R, model.mu0)


def subgaussian_inner_mean_mean(kernel: SubGaussianParams, p: SubGaussianParams, q: SubGaussianParams) -> float:
    if not (_same_alpha(kernel.alpha, p.alpha) and _same_alpha(kernel.alpha, q.alpha)):
        raise NotConjugateError("sub-Gaussian inner product needs a common alpha")
    sp = proportionality(p.R, kernel.R)
    sq = proportionality(q.R, kernel.R)
    law = SubGaussianParams(p.alpha, _alpha_half_norm(p.alpha, [sp, sq, 1.0]) * kernel.R, q.mu0 - p.mu0)
    return float(subgaussian_density(law, np.zeros(p.dim)))


def isotropic_kernel_mean(kernel: IsotropicParams, model: IsotropicParams) -> IsotropicParams:
    if not _same_alpha(kernel.alpha, model.alpha):
        raise NotConjugateError("isotropic kernel mean needs a common alpha")
    if kernel.dim != model.dim:
        raise DimensionMismatchError("kernel and model dimensions differ")
    return IsotropicParams(model.alpha, _alpha_half_norm(model.alpha, [kernel.sigma, model.sigma]), model.mu0, model.dim)


def isotropic_inner_mean_mean(kernel: IsotropicParams, p: IsotropicParams, q: IsotropicParams) -> float:
    if not (_same_alpha(kernel.alpha, p.alpha) and _same_alpha(kernel.alpha, q.alpha)):
        raise NotConjugateError("isotropic inner product needs a common alpha")
    s = _alpha_half_norm(p.alpha, [kernel.sigma, p.sigma, q.sigma])
    law = IsotropicParams(p.alpha, s, q.mu0 - p.mu0, p.dim).as_subgaussian()
    return float(subgaussian_density(law, np.zeros(p.dim)))


def sample_subgaussian(p: SubGaussianParams, n: int, seed=None) -> np.ndarray:
    """mu0 + sqrt(A) G with A ~ S_{alpha/2}(cos(pi alpha/4)^{2/alpha}, 1, 0), G ~ N(0, R)."""
    rng = np.random.default_rng(seed)
    a = 0.5 * p.alpha
    scale = math.cos(0.25 * math.pi * p.alpha) ** (1.0 / a)
    A = scale * sample_standard_stable(a, 1.0, n, rng)
    G = rng.standard_normal((n, p.dim)) @ p._chol.T
    return p.mu0[None, :] + np.sqrt(np.maximum(A, 0.0))[:, None] * G


# ---------------------------------------------------------------- independent coordinates

@dataclass(frozen=True)
class ProductStableDensity:
    """Product of univariate stable laws, one per coordinate."""

    factors: tuple[StableParams, ...]

    @property
    def dim(self) -> int:
        return len(self.factors)

    def density(self, x, tol: float = 1e-10):
        pts, batch = as_points(x, self.dim)
        out = np.ones(pts.shape[0])
        for j, f in enumerate(self.factors):
            out *= np.atleast_1d(stable_density_1d(f, pts[:, j], tol))
        out = out.reshape(batch)
        return float(out) if out.ndim == 0 else out


def tensor_kernel_mean_independent(
    kernels: Sequence[StableKernelParams], models: Sequence[StableParams]
) -> ProductStableDensity:
    if len(kernels) != len(models):
        raise DimensionMismatchError("one kernel per coordinate is required")
    return ProductStableDensity(tuple(stable_kernel_mean(k, m) for k, m in zip(kernels, models)))


__all__ = [
    "SpectralMeasure",
    "spectral_cf",
    "spectral_exponent",
    "convolve_spectral",
    "stable_density_2d",
    "stable_density_2d_at_mode_integral",
    "sample_spectral",
    "SubGaussianParams",
    "IsotropicParams",
    "subgaussian_cf",
    "subgaussian_log_cf",
    "subgaussian_density",
    "proportionality",
    "subgaussian_kernel_mean",
    "subgaussian_inner_mean_mean",
    "isotropic_kernel_mean",
    "isotropic_inner_mean_mean",
    "sample_subgaussian",
    "ProductStableDensity",
    "tensor_kernel_mean_independent",
]
