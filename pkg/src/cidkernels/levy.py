"""Generating triplets, Levy-Khintchine characteristic functions and CF inversion.

Only finite (compound-Poisson) Levy measures are represented explicitly;
stable and GH laws supply their own characteristic functions and reuse the
inversion engines defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from ._quadrature import oscillatory_integral
from .errors import DimensionMismatchError, QuadratureError, SchemaError

_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class LevyMeasureDiscrete:
    """Finite Levy measure given by atoms ``locations[i]`` with ``masses[i]``."""

    locations: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float))
        mass = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if loc.size == 0:
            loc = loc.reshape(0, loc.shape[-1] if loc.ndim == 2 and loc.shape[-1] else 1)
        if loc.shape[0] != mass.shape[0]:
            raise SchemaError("locations and masses must have the same length")
        if np.any(mass <= 0) or not np.all(np.isfinite(mass)):
            raise SchemaError("Levy atom masses must be positive and finite")
        if loc.shape[0] and np.any(np.linalg.norm(loc, axis=1) == 0.0):
            raise SchemaError("a Levy measure carries no atom at the origin")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "masses", mass)

    @classmethod
    def empty(cls, dim: int) -> "LevyMeasureDiscrete":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def merged(self) -> "LevyMeasureDiscrete":
        """Combine atoms whose locations coincide within 1e-12."""
        if self.masses.size == 0:
            return self
        order = np.lexsort(self.locations.T[::-1])
        locs, masses = [], []
        for idx in order:
            loc = self.locations[idx]
            if locs and np.max(np.abs(locs[-1] - loc)) <= _MERGE_TOL:
                masses[-1] += self.masses[idx]
            else:
                locs.append(loc.copy())
                masses.append(float(self.masses[idx]))
        return LevyMeasureDiscrete(np.array(locs), np.array(masses))

    def negated(self) -> "LevyMeasureDiscrete":
        return LevyMeasureDiscrete(-self.locations, self.masses.copy())


@dataclass(frozen=True)
class GeneratingTriplet:
    """(A, nu, gamma): Gaussian covariance factor, Levy measure, drift."""

    A: np.ndarray
    nu: LevyMeasureDiscrete
    gamma: np.ndarray

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        d = gamma.shape[0]
        if A.shape != (d, d):
            raise DimensionMismatchError(f"A has shape {A.shape}, drift has dimension {d}")
        if self.nu.masses.size and self.nu.dim != d:
            raise DimensionMismatchError("Levy measure dimension differs from the drift")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise SchemaError("A must be symmetric")
        if d and np.min(np.linalg.eigvalsh(0.5 * (A + A.T))) < -1e-12:
            raise SchemaError("A must be nonnegative definite")
        nu = self.nu if self.nu.masses.size else LevyMeasureDiscrete.empty(d)
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "nu", nu)

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def zero(cls, dim: int) -> "GeneratingTriplet":
        return cls(np.zeros((dim, dim)), LevyMeasureDiscrete.empty(dim), np.zeros(dim))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        if np.max(np.abs(self.gamma), initial=0.0) > tol:
            return False
        nu = self.nu.merged()
        mirror = nu.negated().merged()
        if nu.masses.size != mirror.masses.size:
            return False
        return bool(
            np.allclose(nu.locations, mirror.locations, atol=tol, rtol=0)
            and np.allclose(nu.masses, mirror.masses, atol=tol, rtol=tol)
        )


@dataclass(frozen=True)
class CfGrid:
    theta_max: float = 50.0
    n_points: int = 4096

    def __post_init__(self) -> None:
        if not self.theta_max > 0:
            raise SchemaError("theta_max must be positive")
        if int(self.n_points) < 16:
            raise SchemaError("n_points must be at least 16")


@dataclass(frozen=True)
class CertificateReport:
    max_abs_imag: float
    min_real: float
    passed: bool
    n_evaluations: int
    # populated when the CF was supplied in log form
    min_log_real: float | None = field(default=None)

    def summary(self) -> str:
        status = "passed" if self.passed else "FAILED"
        extra = f", min log Re = {self.min_log_real:.6g}" if self.min_log_real is not None else ""
        return (
            f"certificate {status}: max|Im cf| = {self.max_abs_imag:.3e}, "
            f"min Re cf = {self.min_real:.6g}{extra} over {self.n_evaluations} points"
        )


def as_points(theta, dim: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reshape ``theta`` to (m, dim) and return the batch shape for the output.

    In one dimension any array of frequencies is accepted; otherwise the last
    axis must have length ``dim``.
    """
    th = np.asarray(theta, dtype=float)
    if dim == 1:
        if th.ndim >= 1 and th.shape[-1] == 1 and th.ndim > 1:
            batch = th.shape[:-1]
        else:
            batch = th.shape
        return th.reshape(-1, 1), batch
    if th.shape[-1] != dim:
        raise DimensionMismatchError(f"theta has trailing size {th.shape[-1]}, expected {dim}")
    return th.reshape(-1, dim), th.shape[:-1]


def lk_exponent(t: GeneratingTriplet, theta) -> np.ndarray:
    """Characteristic exponent log E exp(i theta.X) of the triplet."""
    pts, batch = as_points(theta, t.dim)
    expo = 1j * pts @ t.gamma - 0.5 * np.einsum("mi,ij,mj->m", pts, t.A, pts)
    if t.nu.masses.size:
        proj = pts @ t.nu.locations.T  # (m, atoms)
        small = (np.linalg.norm(t.nu.locations, axis=1) <= 1.0).astype(float)
        expo = expo + (
            (np.exp(1j * proj) - 1.0 - 1j * proj * small[None, :]) * t.nu.masses[None, :]
        ).sum(axis=1)
    return expo.reshape(batch)


def lk_cf(t: GeneratingTriplet, theta):
    """Levy-Khintchine characteristic function of the triplet."""
    out = np.exp(lk_exponent(t, theta))
    return complex(out) if out.ndim == 0 else out


def add_triplets(t1: GeneratingTriplet, t2: GeneratingTriplet) -> GeneratingTriplet:
    """Triplet of the convolution of the two laws."""
    if t1.dim != t2.dim:
        raise DimensionMismatchError(f"dimensions {t1.dim} and {t2.dim} differ")
    nu = LevyMeasureDiscrete(
        np.vstack([t1.nu.locations, t2.nu.locations]),
        np.concatenate([t1.nu.masses, t2.nu.masses]),
    ).merged()
    return GeneratingTriplet(t1.A + t2.A, nu, t1.gamma + t2.gamma)


def symmetrize(t: GeneratingTriplet) -> GeneratingTriplet:
    """Triplet of X - X' with X, X' i.i.d.: (2A, nu + reflected nu, 0)."""
    nu = LevyMeasureDiscrete(
        np.vstack([t.nu.locations, -t.nu.locations]),
        np.concatenate([t.nu.masses, t.nu.masses]),
    ).merged()
    return GeneratingTriplet(2.0 * t.A, nu, np.zeros(t.dim))


def dual_triplet(t: GeneratingTriplet) -> GeneratingTriplet:
    """Triplet of -X."""
    return GeneratingTriplet(t.A.copy(), t.nu.negated().merged(), -t.gamma)


def _certificate_points(dim: int, grid: CfGrid):
    axis = np.linspace(-grid.theta_max, grid.theta_max, int(grid.n_points))
    if dim == 1:
        yield axis[:, None]
    elif dim == 2:
        # full tensor grid, streamed in row blocks to bound memory
        block = max(1, 1_000_000 // axis.size)
        for start in range(0, axis.size, block):
            rows = axis[start:start + block]
            g1, g2 = np.meshgrid(rows, axis, indexing="ij")
            yield np.column_stack([g1.ravel(), g2.ravel()])
    else:
        for k in range(dim):
            pts = np.zeros((axis.size, dim))
            pts[:, k] = axis
            yield pts
        diag = np.outer(axis, np.ones(dim) / math.sqrt(dim))
        yield diag


def check_characteristic_certificate(
    cf: Callable[[np.ndarray], np.ndarray],
    dim: int,
    grid: CfGrid = CfGrid(),
    log_scale: bool = False,
) -> CertificateReport:
    """Grid check that a symmetric CF is real and strictly positive.

    ``cf`` maps an (m, dim) array of frequencies to m complex values. With
    ``log_scale`` it returns the log-CF instead, which keeps the positivity
    test meaningful where the CF itself underflows (Gaussian tails at
    theta_max = 50): exp of a finite real number is positive.
    """
    max_imag = 0.0
    min_real = math.inf
    min_log = math.inf
    n_eval = 0
    finite = True
    for pts in _certificate_points(dim, grid):
        vals = np.asarray(cf(pts[:, 0] if dim == 1 else pts), dtype=complex).ravel()
        n_eval += vals.size
        if log_scale:
            finite &= bool(np.all(np.isfinite(vals.real)))
            max_imag = max(max_imag, float(np.max(np.abs(vals.imag))))
            min_log = min(min_log, float(np.min(vals.real)))
            min_real = min(min_real, float(np.min(np.exp(vals.real) * np.cos(vals.imag))))
        else:
            max_imag = max(max_imag, float(np.max(np.abs(vals.imag))))
            min_real = min(min_real, float(np.min(vals.real)))
    if log_scale:
        passed = finite and max_imag <= 1e-10
        return CertificateReport(max_imag, min_real, passed, n_eval, min_log)
    passed = max_imag <= 1e-10 and min_real > 0.0
    return CertificateReport(max_imag, min_real, passed, n_eval)


_SCAN = np.geomspace(1e-3, 1e8, 600)


def _truncation_point(log_envelope: Callable[[np.ndarray], np.ndarray], log_threshold: float) -> float:
    """Smallest scanned t beyond which the envelope stays below the threshold."""
    env = np.asarray(log_envelope(_SCAN), dtype=float)
    env = np.where(np.isnan(env), np.inf, env)
    above = np.nonzero(env >= log_threshold)[0]
    if above.size == 0:
        return float(_SCAN[0])
    last = above[-1]
    if last == _SCAN.size - 1:
        raise QuadratureError("characteristic function does not decay below the truncation threshold")
    return float(_SCAN[last + 1])


def invert_cf_1d(
    cf: Callable[[np.ndarray], np.ndarray],
    x: float,
    tol: float = 1e-10,
    breakpoints: tuple[float, ...] = (),
    return_error: bool = False,
):
    """Density at ``x`` of the law with characteristic function ``cf``.

    Evaluates (1/pi) * integral_0^inf Re[exp(-i t x) cf(t)] dt. ``cf`` must
    accept arrays of nonnegative frequencies. Truncation happens where
    |cf| < tol * 1e-3; integration panels follow the zeros of cos(t x).
    """
    x = float(x)
    log_thr = math.log(tol * 1e-3)

    def log_env(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(np.abs(cf(t)))

    upper = _truncation_point(log_env, log_thr)

    def integrand(t):
        return (np.exp(-1j * t * x) * cf(t)).real

    half_period = math.pi / abs(x) if x != 0.0 else None
    val, err = oscillatory_integral(integrand, upper, half_period, tol * math.pi * 0.1, breakpoints)
    val /= math.pi
    err /= math.pi
    if not math.isfinite(val):
        raise QuadratureError(f"non-finite inversion result at x={x}")
    if err > tol:
        raise QuadratureError(f"inversion error estimate {err:.3g} exceeds tol {tol:.3g} at x={x}")
    return (val, err) if return_error else val


def bessel_j_scaled(nu: float, z):
    """z^-nu J_nu(z), entire in z; exact limit 1/(2^nu Gamma(nu+1)) at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1.0
    if np.any(small):
        q = -0.25 * z[small] ** 2
        term = np.full(q.shape, 1.0 / special.gamma(nu + 1.0))
        acc = term.copy()
        for m in range(1, 20):
            term = term * q / (m * (m + nu))
            acc += term
        out[small] = acc * 2.0 ** -nu
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = special.jv(nu, zb) * np.exp(-nu * np.log(zb))
    return out


def invert_cf_radial(
    cf_radial: Callable[[np.ndarray], np.ndarray],
    dim: int,
    radius: float,
    tol: float = 1e-10,
    return_error: bool = False,
):
    """Amplitude f(r) of an isotropic density in ``dim`` dimensions.

    f(r) = (2 pi)^{-d/2} integral_0^inf phi(t) t^{d-1} (r t)^{1-d/2} J_{d/2-1}(r t) dt,
    with ``phi`` the radial profile of the characteristic function.
    """
    if dim < 1:
        raise SchemaError("dim must be >= 1")
    r = float(radius)
    if r < 0:
        raise SchemaError("radius must be nonnegative")
    nu = 0.5 * dim - 1.0
    log_norm = -0.5 * dim * math.log(2.0 * math.pi)
    log_bound = -nu * math.log(2.0) - math.lgamma(nu + 1.0)  # sup |z^-nu J_nu(z)| for nu >= -1/2

    def log_weight(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return log_norm + np.log(np.abs(cf_radial(t))) + (dim - 1) * np.log(t)

    # normalise by the envelope peak so tiny amplitudes (large d, far tails) keep relative accuracy
    with np.errstate(divide="ignore", invalid="ignore"):
        scan = log_weight(_SCAN) + log_bound
    scan = np.where(np.isfinite(scan), scan, -np.inf)
    log_peak = float(np.max(scan))
    log_thr = min(math.log(tol * 1e-3), log_peak + math.log(1e-15))
    upper = _truncation_point(lambda t: log_weight(t) + log_bound, log_thr)

    def integrand(t):
        phi = cf_radial(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = np.exp(log_norm + log_bound - log_peak + np.log(np.abs(phi)) + (dim - 1) * np.log(t))
        return np.sign(phi) * mag * bessel_j_scaled(nu, r * t) * math.exp(-log_bound)

    peak = math.exp(log_peak)
    atol = min(0.1 * tol / peak, 1e-12)
    half_period = math.pi / r if r > 0 else None
    val, err = oscillatory_integral(integrand, upper, half_period, atol)
    val *= peak
    err *= peak
    if not math.isfinite(val):
        raise QuadratureError(f"non-finite radial inversion at r={r}")
    if err > tol:
        raise QuadratureError(f"radial inversion error {err:.3g} exceeds tol {tol:.3g} at r={r}")
    return (val, err) if return_error else val


__all__ = [
    "LevyMeasureDiscrete",
    "GeneratingTriplet",
    "CfGrid",
    "CertificateReport",
    "as_points",
    "lk_exponent",
    "lk_cf",
    "add_triplets",
    "symmetrize",
    "dual_triplet",
    "check_characteristic_certificate",
    "invert_cf_1d",
    "invert_cf_radial",
    "bessel_j_scaled",
]
