"""Kernel means, RKHS inner products and MMD for shift-invariant density kernels.

A kernel k(x, y) = psi(x - y) with psi a symmetric infinitely divisible
density has kernel mean m_P = psi * P, and <m_P, m_Q> is the density of
psi * reflected(P) * Q at 0. When psi and P come from a conjugate pair the
mean is again a member of P's family; the pairs live in ``CONJUGACY``, a
static table keyed by (model type, kernel type). Everything else falls back
to weighted kernel sums (empirical and point-mass models) or to
characteristic-function inversion (one dimension).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ghdist, stablemd
from .errors import (
    CidError,
    DegenerateDistributionError,
    DimensionMismatchError,
    NotConjugateError,
    RkhsMismatchError,
    SchemaError,
    UnsupportedDimensionError,
)
from .levy import (
    GeneratingTriplet,
    LevyMeasureDiscrete,
    add_triplets,
    as_points,
    dual_triplet,
    invert_cf_1d,
    lk_cf,
    lk_exponent,
)
from .stable1d import (
    StableKernelParams,
    StableParams,
    convolve_stable,
    sample_stable,
    stable_cf,
    stable_density_1d,
    stable_kernel_fast,
    stable_kernel_mean,
)

MMD_CLIP = 1e-10
_WEIGHT_SUM_TOL = 1e-12


def _arr_key(a) -> tuple:
    a = np.asarray(a, dtype=float)
    return (a.shape, tuple(np.round(a.ravel(), 14)))


def _scalar(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _theta1(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    return th.reshape(as_points(th, 1)[1])


def _gaussian_log_density(mu: np.ndarray, R: np.ndarray, pts: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(R)
    white = np.linalg.solve(L, (pts - mu[None, :]).T)
    d = mu.size
    return (-0.5 * np.sum(white * white, axis=0) - 0.5 * d * math.log(2 * math.pi)
            - float(np.sum(np.log(np.diag(L)))))


def _gaussian_cf(mu: np.ndarray, R: np.ndarray, theta) -> np.ndarray:
    pts, batch = as_points(theta, mu.size)
    expo = 1j * pts @ mu - 0.5 * np.einsum("mi,ij,mj->m", pts, R, pts)
    return expo.reshape(batch)


def _spd(R, d: int) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float)).copy()
    if R.shape != (d, d):
        raise DimensionMismatchError(f"covariance must be {d}x{d}")
    if not np.allclose(R, R.T, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(R))))):
        raise SchemaError("covariance must be symmetric")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise SchemaError("covariance must be positive definite") from exc
    R.setflags(write=False)
    return R


# ================================================================ models

class Model:
    """Probability law with (at least) a characteristic function and a sampler."""

    family = "model"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def log_cf(self, theta):
        raise NotConjugateError(f"{self.family} has no characteristic function")

    def cf(self, theta):
        return _scalar(np.exp(self.log_cf(theta)))

    def density(self, x):
        raise NotConjugateError(f"{self.family} has no density")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotConjugateError(f"{self.family} has no sampler")

    def reflected(self) -> "Model":
        raise NotConjugateError(f"{self.family} has no reflection rule")

    def convolve(self, other: "Model") -> "Model":
        raise NotConjugateError(f"no convolution rule for {self.family} * {other.family}")

    def describe(self) -> dict:
        return {"family": self.family}


@dataclass(frozen=True)
class Gaussian(Model):
    mu: np.ndarray
    R: np.ndarray
    family = "gaussian"

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "R", _spd(self.R, mu.size))

    @property
    def dim(self) -> int:
        return self.mu.size

    def log_cf(self, theta):
        return _gaussian_cf(self.mu, self.R, theta)

    def density(self, x):
        pts, batch = as_points(x, self.dim)
        return _scalar(np.exp(_gaussian_log_density(self.mu, self.R, pts)).reshape(batch))

    def sample(self, n, rng):
        return rng.multivariate_normal(self.mu, self.R, size=n, method="cholesky")

    def reflected(self):
        return Gaussian(-self.mu, self.R)

    def convolve(self, other):
        if isinstance(other, Gaussian):
            return Gaussian(self.mu + other.mu, self.R + other.R)
        return super().convolve(other)

    def describe(self):
        return {"family": self.family, "mu": self.mu.tolist(), "R": self.R.tolist()}


@dataclass(frozen=True)
class Stable1D(Model):
    params: StableParams
    family = "stable1d"

    @property
    def dim(self) -> int:
        return 1

    def cf(self, theta):
        return stable_cf(self.params, _theta1(theta))

    def log_cf(self, theta):
        return np.log(np.asarray(self.cf(theta), dtype=complex))

    def density(self, x):
        return stable_density_1d(self.params, _theta1(x))

    def sample(self, n, rng):
        return sample_stable(self.params, n, rng)[:, None]

    def reflected(self):
        return Stable1D(self.params.dual())

    def convolve(self, other):
        if isinstance(other, Stable1D):
            return Stable1D(convolve_stable([self.params, other.params]))
        return super().convolve(other)

    def describe(self):
        p = self.params
        return {"family": self.family, "alpha": p.alpha, "sigma": p.sigma, "beta": p.beta, "mu": p.mu}


@dataclass(frozen=True)
class StableIndep(Model):
    """Independent univariate stable coordinates."""

    params: tuple
    family = "stable-indep"

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        if not self.params:
            raise SchemaError("at least one coordinate is required")

    @property
    def dim(self) -> int:
        return len(self.params)

    def cf(self, theta):
        pts, batch = as_points(theta, self.dim)
        out = np.ones(pts.shape[0], dtype=complex)
        for j, p in enumerate(self.params):
            out *= stable_cf(p, pts[:, j])
        return _scalar(out.reshape(batch))

    def log_cf(self, theta):
        return np.log(np.asarray(self.cf(theta)))

    def density(self, x):
        return stablemd.ProductStableDensity(self.params).density(x)

    def sample(self, n, rng):
        return np.column_stack([sample_stable(p, n, rng) for p in self.params])

    def reflected(self):
        return StableIndep(tuple(p.dual() for p in self.params))

    def convolve(self, other):
        if isinstance(other, StableIID):
            other = other.as_indep()
        if isinstance(other, StableIndep) and other.dim == self.dim:
            return StableIndep(tuple(convolve_stable([a, b]) for a, b in zip(self.params, other.params)))
        return super().convolve(other)

    def describe(self):
        return {"family": self.family, "coordinates": [Stable1D(p).describe() for p in self.params]}


@dataclass(frozen=True)
class StableIID(Model):
    params: StableParams
    d: int
    family = "stable-iid"

    @property
    def dim(self) -> int:
        return int(self.d)

    def as_indep(self) -> StableIndep:
        return StableIndep((self.params,) * self.dim)

    def cf(self, theta):
        return self.as_indep().cf(theta)

    def log_cf(self, theta):
        return self.as_indep().log_cf(theta)

    def density(self, x):
        return self.as_indep().density(x)

    def sample(self, n, rng):
        return self.as_indep().sample(n, rng)

    def reflected(self):
        return StableIID(self.params.dual(), self.d)

    def convolve(self, other):
        return self.as_indep().convolve(other)

    def describe(self):
        return {"family": self.family, "dim": self.dim, **{k: v for k, v in Stable1D(self.params).describe().items() if k != "family"}}


@dataclass(frozen=True)
class SpectralStable(Model):
    gamma: stablemd.SpectralMeasure
    mu0: np.ndarray
    alpha: float
    family = "stable-spectral"

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu0, dtype=float)).copy()
        if mu.size != self.gamma.dim:
            raise DimensionMismatchError("mu0 and spectral measure dimensions differ")
        mu.setflags(write=False)
        object.__setattr__(self, "mu0", mu)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def dim(self) -> int:
        return self.gamma.dim

    def log_cf(self, theta):
        return stablemd.spectral_exponent(self.gamma, self.mu0, self.alpha, theta)

    def density(self, x):
        pts, batch = as_points(x, self.dim)
        vals = np.array([stablemd.stable_density_2d(self.gamma, self.mu0, self.alpha, p) for p in pts])
        return _scalar(vals.reshape(batch))

    def sample(self, n, rng):
        return stablemd.sample_spectral(self.gamma, self.mu0, self.alpha, n, rng)

    def reflected(self):
        return SpectralStable(self.gamma.reflected(), -self.mu0, self.alpha)

    def convolve(self, other):
        if isinstance(other, SpectralStable) and abs(other.alpha - self.alpha) <= 1e-12:
            g, mu = stablemd.convolve_spectral(self.gamma, other.gamma, self.mu0, other.mu0)
            return SpectralStable(g, mu, self.alpha)
        return super().convolve(other)

    def describe(self):
        return {"family": self.family, "alpha": self.alpha, "points": self.gamma.points.tolist(),
                "masses": self.gamma.masses.tolist(), "mu0": self.mu0.tolist()}


@dataclass(frozen=True)
class SubGaussian(Model):
    params: stablemd.SubGaussianParams
    family = "subgaussian"

    @property
    def dim(self) -> int:
        return self.params.dim

    def log_cf(self, theta):
        return stablemd.subgaussian_log_cf(self.params, theta)

    def density(self, x):
        return stablemd.subgaussian_density(self.params, x)

    def sample(self, n, rng):
        return stablemd.sample_subgaussian(self.params, n, rng)

    def reflected(self):
        return SubGaussian(self.params.shifted(-self.params.mu0))

    def convolve(self, other):
        if isinstance(other, Isotropic):
            other = SubGaussian(other.params.as_subgaussian())
        if isinstance(other, SubGaussian):
            p, q = self.params, other.params
            if abs(p.alpha - q.alpha) > 1e-12:
                raise NotConjugateError("sub-Gaussian convolution needs a common alpha")
            s = stablemd.proportionality(p.R, q.R)
            R = stablemd._alpha_half_norm(p.alpha, [s, 1.0]) * q.R
            return SubGaussian(stablemd.SubGaussianParams(p.alpha, R, p.mu0 + q.mu0))
        return super().convolve(other)

    def describe(self):
        p = self.params
        return {"family": self.family, "alpha": p.alpha, "R": p.R.tolist(), "mu0": p.mu0.tolist()}


@dataclass(frozen=True)
class Isotropic(Model):
    params: stablemd.IsotropicParams
    family = "isotropic"

    @property
    def dim(self) -> int:
        return self.params.dim

    def log_cf(self, theta):
        return stablemd.subgaussian_log_cf(self.params.as_subgaussian(), theta)

    def density(self, x):
        return stablemd.subgaussian_density(self.params.as_subgaussian(), x)

    def sample(self, n, rng):
        return stablemd.sample_subgaussian(self.params.as_subgaussian(), n, rng)

    def reflected(self):
        p = self.params
        return Isotropic(stablemd.IsotropicParams(p.alpha, p.sigma, -p.mu0, p.dim))

    def convolve(self, other):
        if isinstance(other, Isotropic):
            p, q = self.params, other.params
            if abs(p.alpha - q.alpha) > 1e-12 or p.dim != q.dim:
                raise NotConjugateError("isotropic convolution needs a common alpha and dimension")
            s = stablemd._alpha_half_norm(p.alpha, [p.sigma, q.sigma])
            return Isotropic(stablemd.IsotropicParams(p.alpha, s, p.mu0 + q.mu0, p.dim))
        if isinstance(other, SubGaussian):
            return other.convolve(self)
        return super().convolve(other)

    def describe(self):
        p = self.params
        return {"family": self.family, "alpha": p.alpha, "sigma": p.sigma, "mu0": p.mu0.tolist()}


@dataclass(frozen=True)
class GH(Model):
    params: ghdist.GHParams
    family = "gh"

    @property
    def dim(self) -> int:
        return self.params.dim

    def log_cf(self, theta):
        return ghdist.gh_log_cf(self.params, theta)

    def density(self, x):
        return ghdist.gh_density(self.params, x)

    def sample(self, n, rng):
        return ghdist.sample_gh(self.params, n, rng)

    def reflected(self):
        return GH(self.params.reflected())

    def convolve(self, other):
        if isinstance(other, GH):
            return GH(ghdist.gh_convolve(self.params, other.params))
        return super().convolve(other)

    def describe(self):
        p = self.params
        return {"family": self.family, "subclass": p.subclass, "lambda": p.lam, "alpha": p.alpha,
                "beta": p.beta.tolist(), "delta": p.delta, "mu": p.mu.tolist(), "Delta": p.Delta.tolist()}


@dataclass(frozen=True)
class TripletCPG(Model):
    """Compound Poisson plus Gaussian law given by its generating triplet."""

    triplet: GeneratingTriplet
    family = "triplet"

    @property
    def dim(self) -> int:
        return self.triplet.dim

    def log_cf(self, theta):
        return lk_exponent(self.triplet, theta)

    def density(self, x, tol: float = 1e-10):
        if self.dim != 1:
            raise UnsupportedDimensionError("triplet densities are evaluated by 1-D CF inversion only")
        if not self.triplet.A[0, 0] > 0:
            raise DegenerateDistributionError("compound Poisson law without a Gaussian part has an atom")
        xs = np.asarray(x, dtype=float)
        pts, batch = as_points(xs, 1)
        cf = lambda t: lk_cf(self.triplet, t)  # noqa: E731
        vals = np.array([invert_cf_1d(cf, float(v), tol) for v in pts[:, 0]])
        return _scalar(vals.reshape(batch))

    def sample(self, n, rng):
        t = self.triplet
        d = t.dim
        out = np.tile(t.gamma, (n, 1)).astype(float)
        if np.any(t.A):
            out += rng.multivariate_normal(np.zeros(d), t.A, size=n, method="eigh")
        for loc, m in zip(t.nu.locations, t.nu.masses):
            counts = rng.poisson(m, size=n)
            # compensation -i theta.x 1{|x| <= 1} in the exponent is a drift
            shift = m * loc if np.linalg.norm(loc) <= 1.0 else 0.0 * loc
            out += np.outer(counts, loc) - shift[None, :]
        return out

    def reflected(self):
        return TripletCPG(dual_triplet(self.triplet))

    def convolve(self, other):
        if isinstance(other, TripletCPG):
            return TripletCPG(add_triplets(self.triplet, other.triplet))
        return super().convolve(other)

    def describe(self):
        t = self.triplet
        return {"family": self.family, "A": t.A.tolist(), "atoms": t.nu.locations.tolist(),
                "masses": t.nu.masses.tolist(), "gamma": t.gamma.tolist()}


@dataclass(frozen=True)
class PointMass(Model):
    location: np.ndarray
    family = "point"

    def __post_init__(self) -> None:
        loc = np.atleast_1d(np.asarray(self.location, dtype=float)).copy()
        loc.setflags(write=False)
        object.__setattr__(self, "location", loc)

    @property
    def dim(self) -> int:
        return self.location.size

    def log_cf(self, theta):
        pts, batch = as_points(theta, self.dim)
        return (1j * pts @ self.location).reshape(batch)

    def sample(self, n, rng):
        return np.tile(self.location, (n, 1))

    def reflected(self):
        return PointMass(-self.location)

    def describe(self):
        return {"family": self.family, "location": self.location.tolist()}


@dataclass(frozen=True)
class Empirical(Model):
    """Weighted point set; weights sum to one and may be negative."""

    points: np.ndarray
    weights: np.ndarray
    family = "empirical"

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pts.shape[0] != w.size or w.size == 0:
            raise SchemaError("empirical model needs one weight per point")
        if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise SchemaError(f"empirical weights must sum to 1 (got {w.sum()!r})")
        pts = pts.copy()
        w = w.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "Empirical":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def log_cf(self, theta):
        pts, batch = as_points(theta, self.dim)
        return np.log((np.exp(1j * pts @ self.points.T) * self.weights[None, :]).sum(axis=1)).reshape(batch)

    def sample(self, n, rng):
        if np.any(self.weights < 0):
            raise NotConjugateError("signed empirical measures cannot be sampled")
        idx = rng.choice(self.weights.size, size=n, p=self.weights)
        return self.points[idx]

    def reflected(self):
        return Empirical(-self.points, self.weights)

    def describe(self):
        return {"family": self.family, "n": int(self.weights.size)}


# ================================================================ kernels

class Kernel:
    """k(x, y) = psi(x - y) with psi a bounded symmetric ID density."""

    family = "kernel"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def key(self) -> tuple:
        raise NotImplementedError

    def psi(self, diff: np.ndarray) -> np.ndarray:
        """psi at an (m, d) array of differences."""
        raise NotImplementedError

    def log_cf(self, theta):
        raise NotImplementedError

    def cf(self, theta):
        return _scalar(np.exp(self.log_cf(theta)).real)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        diff = x - y
        pts, batch = as_points(diff, self.dim)
        return _scalar(self.psi(pts).reshape(batch))

    def gram(self, X, Y=None) -> np.ndarray:
        X = as_points(X, self.dim)[0]
        Y = X if Y is None else as_points(Y, self.dim)[0]
        diff = (X[:, None, :] - Y[None, :, :]).reshape(-1, self.dim)
        return self.psi(diff).reshape(X.shape[0], Y.shape[0])

    def describe(self) -> dict:
        return {"family": self.family}


@dataclass(frozen=True)
class GaussianK(Kernel):
    R0: np.ndarray
    family = "gaussian"

    def __post_init__(self) -> None:
        R = np.atleast_2d(np.asarray(self.R0, dtype=float))
        object.__setattr__(self, "R0", _spd(R, R.shape[0]))

    @property
    def dim(self):
        return self.R0.shape[0]

    @property
    def key(self):
        return (self.family, _arr_key(self.R0))

    def psi(self, diff):
        return np.exp(_gaussian_log_density(np.zeros(self.dim), self.R0, diff))

    def log_cf(self, theta):
        return _gaussian_cf(np.zeros(self.dim), self.R0, theta)

    def describe(self):
        return {"family": self.family, "R0": self.R0.tolist()}


@dataclass(frozen=True)
class LaplaceK(Kernel):
    """psi(x) = lam/2 exp(-lam |x|), CF lam^2 / (lam^2 + theta^2); one dimension."""

    lam: float
    family = "laplace"

    def __post_init__(self) -> None:
        if not float(self.lam) > 0:
            raise SchemaError("Laplace rate must be positive")
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self):
        return 1

    @property
    def key(self):
        return (self.family, self.lam)

    def psi(self, diff):
        return 0.5 * self.lam * np.exp(-self.lam * np.abs(diff[:, 0]))

    def log_cf(self, theta):
        th = _theta1(theta)
        return np.log(self.lam ** 2 / (self.lam ** 2 + th * th)).astype(complex)

    def describe(self):
        return {"family": self.family, "lambda": self.lam}


@dataclass(frozen=True)
class Stable1DK(Kernel):
    params: StableKernelParams
    family = "stable1d"

    @property
    def dim(self):
        return 1

    @property
    def key(self):
        return (self.family, self.params.alpha, self.params.sigma0)

    def psi(self, diff):
        return stable_kernel_fast(self.params, diff[:, 0])

    def log_cf(self, theta):
        th = _theta1(theta)
        return (-(self.params.sigma0 * np.abs(th)) ** self.params.alpha).astype(complex)

    def describe(self):
        return {"family": self.family, "alpha": self.params.alpha, "sigma0": self.params.sigma0}


@dataclass(frozen=True)
class SubGaussianK(Kernel):
    params: stablemd.SubGaussianParams
    family = "subgaussian"

    def __post_init__(self) -> None:
        if np.any(self.params.mu0):
            raise SchemaError("kernel shift must be zero")

    @property
    def dim(self):
        return self.params.dim

    @property
    def key(self):
        return (self.family, self.params.alpha, _arr_key(self.params.R))

    def psi(self, diff):
        return np.atleast_1d(stablemd.subgaussian_density(self.params, diff))

    def log_cf(self, theta):
        return stablemd.subgaussian_log_cf(self.params, theta)

    def describe(self):
        return {"family": self.family, "alpha": self.params.alpha, "R0": self.params.R.tolist()}


@dataclass(frozen=True)
class IsotropicK(Kernel):
    alpha: float
    sigma: float
    d: int
    family = "isotropic"

    def __post_init__(self) -> None:
        stablemd.IsotropicParams(self.alpha, self.sigma, np.zeros(int(self.d)), int(self.d))

    @property
    def dim(self):
        return int(self.d)

    @property
    def params(self) -> stablemd.IsotropicParams:
        return stablemd.IsotropicParams(self.alpha, self.sigma, np.zeros(self.dim), self.dim)

    @property
    def key(self):
        return (self.family, float(self.alpha), float(self.sigma), self.dim)

    def psi(self, diff):
        return np.atleast_1d(stablemd.subgaussian_density(self.params.as_subgaussian(), diff))

    def log_cf(self, theta):
        return stablemd.subgaussian_log_cf(self.params.as_subgaussian(), theta)

    def describe(self):
        return {"family": self.family, "alpha": self.alpha, "sigma": self.sigma, "dim": self.dim}


@dataclass(frozen=True)
class GHK(Kernel):
    kernel: ghdist.SGHKernel
    family = "gh"

    @property
    def dim(self):
        return self.kernel.dim

    @property
    def key(self):
        k = self.kernel
        return (self.family, k.lam, k.alpha, k.delta, _arr_key(k.Delta))

    def psi(self, diff):
        return np.atleast_1d(ghdist.gh_density(self.kernel.params, diff))

    def log_cf(self, theta):
        return ghdist.gh_log_cf(self.kernel.params, theta)

    def describe(self):
        k = self.kernel
        return {"family": self.family, "tag": k.tag, "lambda": k.lam, "alpha": k.alpha,
                "delta": k.delta, "Delta": k.Delta.tolist()}


@dataclass(frozen=True)
class TripletK(Kernel):
    """Density of a symmetric compound-Poisson-plus-Gaussian law (1-D, A > 0)."""

    triplet: GeneratingTriplet
    tol: float = 1e-10
    family = "triplet"

    def __post_init__(self) -> None:
        if not self.triplet.is_symmetric():
            raise SchemaError("kernel triplets must be symmetric (gamma = 0, reflected-invariant nu)")
        if self.triplet.dim != 1 or not self.triplet.A[0, 0] > 0:
            raise SchemaError("triplet kernels need d = 1 and a Gaussian part A > 0")

    @property
    def dim(self):
        return 1

    @property
    def key(self):
        t = self.triplet
        return (self.family, _arr_key(t.A), _arr_key(t.nu.locations), _arr_key(t.nu.masses))

    def psi(self, diff):
        model = TripletCPG(self.triplet)
        # psi is even: evaluate once per distinct |diff|
        r = np.abs(diff[:, 0])
        uniq, inv = np.unique(r, return_inverse=True)
        return np.atleast_1d(model.density(uniq, self.tol))[inv]

    def log_cf(self, theta):
        return lk_exponent(self.triplet, theta)

    def describe(self):
        return {"family": self.family, **{k: v for k, v in TripletCPG(self.triplet).describe().items() if k != "family"}}


@dataclass(frozen=True)
class TensorK(Kernel):
    """Product of one-dimensional kernels, one per coordinate."""

    factors: tuple
    family = "tensor"

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors or any(f.dim != 1 for f in self.factors):
            raise SchemaError("tensor kernels need one-dimensional factors")

    @property
    def dim(self):
        return len(self.factors)

    @property
    def key(self):
        return (self.family,) + tuple(f.key for f in self.factors)

    def psi(self, diff):
        out = np.ones(diff.shape[0])
        for j, f in enumerate(self.factors):
            out *= f.psi(diff[:, j:j + 1])
        return out

    def log_cf(self, theta):
        pts, batch = as_points(theta, self.dim)
        out = np.zeros(pts.shape[0], dtype=complex)
        for j, f in enumerate(self.factors):
            out += np.asarray(f.log_cf(pts[:, j]))
        return out.reshape(batch)

    def describe(self):
        return {"family": self.family, "factors": [f.describe() for f in self.factors]}


# ================================================================ conjugacy registry

def _tensor_stable_factors(kernel: TensorK, dim: int) -> list[StableKernelParams]:
    if kernel.dim != dim or not all(isinstance(f, Stable1DK) for f in kernel.factors):
        raise NotConjugateError("stable product models need a tensor of univariate stable kernels")
    return [f.params for f in kernel.factors]


def _mean_gaussian(m: Gaussian, k: GaussianK) -> Model:
    if m.dim != k.dim:
        raise DimensionMismatchError("model and kernel dimensions differ")
    return Gaussian(m.mu, k.R0 + m.R)


def _mean_stable1d(m: Stable1D, k: Stable1DK) -> Model:
    return Stable1D(stable_kernel_mean(k.params, m.params))


def _mean_stable_indep(m, k: TensorK) -> Model:
    ind = m.as_indep() if isinstance(m, StableIID) else m
    ks = _tensor_stable_factors(k, ind.dim)
    return StableIndep(tuple(stablemd.tensor_kernel_mean_independent(ks, ind.params).factors))


def _mean_spectral(m: SpectralStable, k: TensorK) -> Model:
    ks = _tensor_stable_factors(k, m.dim)
    if any(abs(p.alpha - m.alpha) > 1e-12 for p in ks):
        raise NotConjugateError("kernel and spectral model alphas differ")
    kernel_gamma = stablemd.SpectralMeasure.independent([p.sigma0 for p in ks], m.alpha)
    g, mu = stablemd.convolve_spectral(kernel_gamma, m.gamma, np.zeros(m.dim), m.mu0)
    return SpectralStable(g, mu, m.alpha)


def _mean_subgaussian(m, k) -> Model:
    kp = k.params.as_subgaussian() if isinstance(k, IsotropicK) else k.params
    mp = m.params.as_subgaussian() if isinstance(m, Isotropic) else m.params
    return SubGaussian(stablemd.subgaussian_kernel_mean(kp, mp))


def _mean_isotropic(m: Isotropic, k: IsotropicK) -> Model:
    return Isotropic(stablemd.isotropic_kernel_mean(k.params, m.params))


def _mean_gh(m: GH, k: GHK) -> Model:
    return GH(ghdist.gh_kernel_mean(k.kernel, m.params))


def _inner_gh(k: GHK, p: GH, q: GH) -> tuple[float, str]:
    return ghdist.gh_inner_mean_mean(k.kernel, p.params, q.params)


def _mean_triplet(m: TripletCPG, k: TripletK) -> Model:
    return TripletCPG(add_triplets(k.triplet, m.triplet))


@dataclass(frozen=True)
class Conjugacy:
    mean: Callable[[Model, Kernel], Model]
    # optional override for <m_P, m_Q> returning (value, method);
    # default is the density at 0 of reflected mean(P) * Q
    inner: Callable[[Kernel, Model, Model], tuple[float, str]] | None = None
    source: str = ""


CONJUGACY: dict[tuple[type, type], Conjugacy] = {
    (Gaussian, GaussianK): Conjugacy(_mean_gaussian, source="Gaussian kernel: N(mu, R0 + R)"),
    (Stable1D, Stable1DK): Conjugacy(_mean_stable1d, source="SaS kernel: scale (s0^a + s^a)^(1/a)"),
    (StableIndep, TensorK): Conjugacy(_mean_stable_indep, source="coordinatewise SaS kernels"),
    (StableIID, TensorK): Conjugacy(_mean_stable_indep, source="coordinatewise SaS kernels"),
    (SpectralStable, TensorK): Conjugacy(_mean_spectral, source="spectral measures add"),
    (SubGaussian, SubGaussianK): Conjugacy(_mean_subgaussian, source="proportional sub-Gaussian shapes"),
    (SubGaussian, IsotropicK): Conjugacy(_mean_subgaussian, source="proportional sub-Gaussian shapes"),
    (Isotropic, SubGaussianK): Conjugacy(_mean_subgaussian, source="proportional sub-Gaussian shapes"),
    (Isotropic, IsotropicK): Conjugacy(_mean_isotropic, source="isotropic: ||(s0, s)||_(a/2)"),
    (GH, GHK): Conjugacy(_mean_gh, inner=_inner_gh, source="zero-skew GH subclasses"),
    (TripletCPG, TripletK): Conjugacy(_mean_triplet, source="triplets add"),
}


def supported_kernels(model_type: type) -> list[str]:
    """Kernel families with a closed-form mean for this model type (for error messages)."""
    return sorted({kt.family for (mt, kt) in CONJUGACY if mt is model_type})


# ================================================================ kernel means

class KernelMean:
    kernel: Kernel
    method = ""

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def evaluate(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class ClosedForm(KernelMean):
    model: Model
    source: Model
    kernel: Kernel
    method = "closed-form"

    def evaluate(self, x):
        return self.model.density(x)


@dataclass(frozen=True)
class EmpiricalSum(KernelMean):
    points: np.ndarray
    weights: np.ndarray
    kernel: Kernel
    method = "empirical"

    def __post_init__(self) -> None:
        pts = as_points(self.points, self.kernel.dim)[0]
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if self.weights.size != pts.shape[0]:
            raise SchemaError("one weight per point is required")

    def evaluate(self, x):
        pts, batch = as_points(x, self.dim)
        return _scalar((self.kernel.gram(pts, self.points) @ self.weights).reshape(batch))


@dataclass(frozen=True)
class NumericCF(KernelMean):
    """Mean known only through its CF psi_hat * P_hat; evaluated by 1-D inversion."""

    source: Model
    kernel: Kernel
    tol: float = 1e-10
    method = "numeric-cf"

    def cf(self, t):
        return np.asarray(self.kernel.cf(t)) * np.asarray(self.source.cf(t))

    def evaluate(self, x):
        if self.dim != 1:
            raise UnsupportedDimensionError("numeric kernel means are evaluated in one dimension only")
        pts, batch = as_points(x, 1)
        vals = np.array([invert_cf_1d(self.cf, float(v), self.tol) for v in pts[:, 0]])
        return _scalar(vals.reshape(batch))


@dataclass(frozen=True)
class LinearCombination(KernelMean):
    """sum_j c_j m_j, e.g. the mean of a mixture target."""

    coefs: tuple
    terms: tuple
    kernel: Kernel
    method = "linear"

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefs", tuple(float(c) for c in self.coefs))
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.coefs) != len(self.terms):
            raise SchemaError("one coefficient per term is required")
        for t in self.terms:
            _same_rkhs(t.kernel, self.kernel)

    def evaluate(self, x):
        return _scalar(sum(c * np.asarray(t.evaluate(x)) for c, t in zip(self.coefs, self.terms)))


def _same_rkhs(k1: Kernel, k2: Kernel) -> None:
    if k1.key != k2.key:
        raise RkhsMismatchError(f"kernel means live in different RKHSs ({k1.family} vs {k2.family})")


def kernel_mean(model: Model, kernel: Kernel) -> KernelMean:
    """m_P = E k(., X): closed form for registered pairs, weighted kernel sums for
    point sets, and a CF-backed mean otherwise (one dimension only)."""
    if model.dim != kernel.dim:
        raise DimensionMismatchError(f"model dimension {model.dim} differs from kernel dimension {kernel.dim}")
    if isinstance(model, PointMass):
        return EmpiricalSum(model.location[None, :], np.ones(1), kernel)
    if isinstance(model, Empirical):
        return EmpiricalSum(model.points, model.weights, kernel)
    entry = CONJUGACY.get((type(model), type(kernel)))
    reason: NotConjugateError | None = None
    if entry is not None:
        try:
            return ClosedForm(entry.mean(model, kernel), model, kernel)
        except NotConjugateError as exc:
            reason = exc
    hint = ", ".join(supported_kernels(type(model))) or "none"
    if model.dim != 1:
        # CF-backed means are evaluated by 1-D inversion only
        detail = f" ({reason})" if reason else ""
        raise NotConjugateError(
            f"no closed-form kernel mean for {model.family} in a {kernel.family} kernel{detail}; "
            f"closed forms exist with kernels: {hint}"
        ) from reason
    try:
        model.cf(np.zeros(1))
    except NotConjugateError as exc:
        raise NotConjugateError(
            f"no kernel mean for {model.family} in a {kernel.family} kernel; closed forms exist with kernels: {hint}"
        ) from exc
    return NumericCF(model, kernel)


def mixture_mean(weights: Sequence[float], models: Sequence[Model], kernel: Kernel) -> LinearCombination:
    return LinearCombination(tuple(weights), tuple(kernel_mean(m, kernel) for m in models), kernel)


def inner_mean_feature(mean: KernelMean, x):
    """<m_P, k(., x)> = m_P(x)."""
    return mean.evaluate(x)


def _source_model(mean: KernelMean) -> Model:
    if isinstance(mean, (ClosedForm, NumericCF)):
        return mean.source
    raise NotConjugateError("mean has no source model")


@dataclass(frozen=True)
class InnerProduct:
    value: float
    method: str  # "closed-form" | "numeric-cf" | "empirical"
    est_error: float | None = None


def _combine(parts: list[tuple[float, InnerProduct]]) -> InnerProduct:
    methods = {ip.method for _, ip in parts}
    method = "numeric-cf" if "numeric-cf" in methods else "empirical" if "empirical" in methods else "closed-form"
    errs = [abs(c) * ip.est_error for c, ip in parts if ip.est_error is not None]
    return InnerProduct(float(sum(c * ip.value for c, ip in parts)), method, float(sum(errs)) if errs else None)


def _numeric_inner(kernel: Kernel, p: Model, q: Model, tol: float = 1e-10) -> InnerProduct:
    """Density at 0 of psi * reflected P * Q by CF inversion (one dimension)."""
    if kernel.dim != 1:
        raise UnsupportedDimensionError("CF-based inner products are available in one dimension only")

    def cf(t):
        return np.asarray(kernel.cf(t)) * np.conj(np.asarray(p.cf(t))) * np.asarray(q.cf(t))

    val, err = invert_cf_1d(cf, 0.0, tol, return_error=True)
    return InnerProduct(float(val), "numeric-cf", float(err))


def inner_product(m1: KernelMean, m2: KernelMean, tol: float = 1e-10) -> InnerProduct:
    """<m_P, m_Q> with the route taken and, for quadrature routes, an error estimate."""
    _same_rkhs(m1.kernel, m2.kernel)
    if isinstance(m1, LinearCombination):
        return _combine([(c, inner_product(t, m2, tol)) for c, t in zip(m1.coefs, m1.terms)])
    if isinstance(m2, LinearCombination):
        return _combine([(c, inner_product(m1, t, tol)) for c, t in zip(m2.coefs, m2.terms)])
    if isinstance(m1, EmpiricalSum) and isinstance(m2, EmpiricalSum):
        return InnerProduct(float(m1.weights @ m1.kernel.gram(m1.points, m2.points) @ m2.weights), "empirical")
    if isinstance(m1, EmpiricalSum) or isinstance(m2, EmpiricalSum):
        emp, other = (m1, m2) if isinstance(m1, EmpiricalSum) else (m2, m1)
        val = float(emp.weights @ np.atleast_1d(other.evaluate(emp.points)))
        return InnerProduct(val, "numeric-cf" if other.method == "numeric-cf" else "empirical")
    p, q = _source_model(m1), _source_model(m2)
    if isinstance(m1, ClosedForm) and isinstance(m2, ClosedForm):
        entry = CONJUGACY.get((type(p), type(m1.kernel)))
        try:
            if entry is not None and entry.inner is not None and type(p) is type(q):
                val, method = entry.inner(m1.kernel, p, q)
                return InnerProduct(float(val), method)
            law = m1.model.reflected().convolve(q)
            return InnerProduct(float(np.ravel(law.density(np.zeros(law.dim)))[0]), "closed-form")
        except NotConjugateError:
            pass
    return _numeric_inner(m1.kernel, p, q, tol)


def inner_mean_mean(m1: KernelMean, m2: KernelMean, tol: float = 1e-10) -> float:
    """<m_P, m_Q> in the shared RKHS."""
    return inner_product(m1, m2, tol).value


def mmd2(p: Model, q: Model, kernel: Kernel, tol: float = 1e-10) -> float:
    """||m_P - m_Q||^2, clipped to 0 when round-off drives it below zero."""
    mp, mq = kernel_mean(p, kernel), kernel_mean(q, kernel)
    val = inner_mean_mean(mp, mp, tol) + inner_mean_mean(mq, mq, tol) - 2.0 * inner_mean_mean(mp, mq, tol)
    if val < -MMD_CLIP:
        raise CidError(f"squared MMD {val:.3g} is negative beyond round-off")
    return max(val, 0.0)


@dataclass(frozen=True)
class Level2Spec:
    """K(P, Q) = (<m_P, m_Q> + c)^degree or exp(-gamma/2 ||m_P - m_Q||^2)."""

    kind: str
    c: float = 0.0
    degree: int = 1
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "polynomial":
            if not (self.c >= 0 and int(self.degree) >= 1):
                raise SchemaError("polynomial level-2 kernel needs c >= 0 and degree >= 1")
        elif self.kind == "exponential":
            if not self.gamma > 0:
                raise SchemaError("exponential level-2 kernel needs gamma > 0")
        else:
            raise SchemaError(f"unknown level-2 kernel kind {self.kind!r}")


def level2_kernel(p: Model, q: Model, kernel: Kernel, spec: Level2Spec) -> float:
    if spec.kind == "polynomial":
        val = inner_mean_mean(kernel_mean(p, kernel), kernel_mean(q, kernel))
        return float((val + spec.c) ** int(spec.degree))
    return float(math.exp(-0.5 * spec.gamma * mmd2(p, q, kernel)))


def expectation_of_function(mean: KernelMean, f: EmpiricalSum) -> float:
    """<m_P, f> = E_P f(X) for f = sum_j v_j k(., y_j)."""
    _same_rkhs(mean.kernel, f.kernel)
    if f.weights.size == 0:
        return 0.0
    return float(f.weights @ np.atleast_1d(mean.evaluate(f.points)))


__all__ = [
    "Model", "Gaussian", "Stable1D", "StableIndep", "StableIID", "SpectralStable", "SubGaussian",
    "Isotropic", "GH", "TripletCPG", "PointMass", "Empirical",
    "Kernel", "GaussianK", "LaplaceK", "Stable1DK", "SubGaussianK", "IsotropicK", "GHK", "TripletK", "TensorK",
    "KernelMean", "ClosedForm", "EmpiricalSum", "NumericCF", "LinearCombination",
    "Conjugacy", "CONJUGACY", "supported_kernels",
    "kernel_mean", "mixture_mean", "inner_mean_feature", "inner_mean_mean", "InnerProduct", "inner_product", "mmd2",
    "Level2Spec", "level2_kernel", "expectation_of_function", "MMD_CLIP",
]
