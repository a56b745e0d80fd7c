"""Univariate alpha-stable laws S_alpha(sigma, beta, mu).

Parameterisation: log E exp(i theta X) =
  -sigma^a |theta|^a (1 - i beta sgn(theta) tan(pi a / 2)) + i mu theta      (a != 1)
  -sigma |theta| (1 + i beta (2/pi) sgn(theta) ln|theta|) + i mu theta       (a == 1)

Densities use exact closed forms where they exist (a = 2, 1, 1/2, 2/3,
4/3, 3/2 with beta = 0, and the one-sided a = 1/2 laws); everything else
goes through the amplitude series or CF inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction as F
from typing import Sequence

import mpmath
import numpy as np

from . import specfun
from .amplitude import amplitude_table, sas_amplitude
from .errors import (
    ConditioningError,
    DegenerateDistributionError,
    NotConjugateError,
    NumericError,
    SchemaError,
)
from .levy import invert_cf_1d

_ALPHA_EQ = 1e-12
NEAR_ONE = 1e-4  # skewed laws this close to alpha = 1 are ill-conditioned


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= _ALPHA_EQ


@dataclass(frozen=True)
class StableParams:
    alpha: float
    sigma: float
    beta: float = 0.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        a, s, b = float(self.alpha), float(self.sigma), float(self.beta)
        if not 0.0 < a <= 2.0:
            raise SchemaError(f"alpha must lie in (0, 2], got {a}")
        if not s >= 0.0 or not math.isfinite(s):
            raise SchemaError(f"sigma must be nonnegative, got {s}")
        if not -1.0 <= b <= 1.0:
            raise SchemaError(f"beta must lie in [-1, 1], got {b}")
        if _same(a, 2.0):
            b = 0.0  # skewness has no effect in the Gaussian case
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def is_symmetric(self) -> bool:
        return self.beta == 0.0

    def dual(self) -> "StableParams":
        """Parameters of -X."""
        return StableParams(self.alpha, self.sigma, -self.beta, -self.mu)


@dataclass(frozen=True)
class StableKernelParams:
    alpha: float
    sigma0: float

    def __post_init__(self) -> None:
        if not 0.0 < float(self.alpha) <= 2.0:
            raise SchemaError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not float(self.sigma0) > 0.0:
            raise SchemaError("kernel scale sigma0 must be positive")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "sigma0", float(self.sigma0))

    def as_params(self) -> StableParams:
        return StableParams(self.alpha, self.sigma0, 0.0, 0.0)


def _check_conditioning(alpha: float, beta: float) -> None:
    if beta != 0.0 and 0.0 < abs(alpha - 1.0) < NEAR_ONE:
        raise ConditioningError(
            f"alpha={alpha} is within {NEAR_ONE} of 1 with beta={beta}; tan(pi alpha/2) is ill-conditioned"
        )


def standard_cf(alpha: float, beta: float):
    """CF of S_alpha(1, beta, 0) as a vectorised callable."""
    if _same(alpha, 1.0):
        def cf(t):
            t = np.asarray(t, dtype=float)
            at = np.abs(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                logt = np.where(at > 0, np.log(at), 0.0)
            return np.exp(-at * (1.0 + 1j * beta * (2.0 / math.pi) * np.sign(t) * logt))
        return cf
    skew = beta * math.tan(0.5 * math.pi * alpha)

    def cf(t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t) ** alpha
        return np.exp(-at * (1.0 - 1j * skew * np.sign(t)))
    return cf


def stable_cf(p: StableParams, theta):
    """Characteristic function of S_alpha(sigma, beta, mu)."""
    t = np.asarray(theta, dtype=float)
    a, s, b = p.alpha, p.sigma, p.beta
    at = np.abs(t)
    if _same(a, 1.0):
        with np.errstate(divide="ignore", invalid="ignore"):
            logt = np.where(at > 0, np.log(at), 0.0)
        expo = -s * at * (1.0 + 1j * b * (2.0 / math.pi) * np.sign(t) * logt)
    else:
        expo = -(s ** a) * at ** a * (1.0 - 1j * b * math.tan(0.5 * math.pi * a) * np.sign(t))
    out = np.exp(expo + 1j * p.mu * t)
    return complex(out) if out.ndim == 0 else out


# closed forms for the standard law S_alpha(1, beta, 0) --------------------------

def _sas_at_zero(alpha: float) -> float:
    return math.gamma(1.0 + 1.0 / alpha) / math.pi


def _gauss_std(z: float) -> float:
    return math.exp(-0.25 * z * z) / (2.0 * math.sqrt(math.pi))


def _cauchy_std(z: float) -> float:
    return 1.0 / (math.pi * (1.0 + z * z))


def _levy_std(z: float) -> float:
    """alpha = 1/2, beta = 1: one-sided Levy law, support z > 0."""
    if z <= 0.0:
        return 0.0
    return math.exp(-0.5 / z) / (math.sqrt(2.0 * math.pi) * z ** 1.5)


_FRESNEL_MIN = 1e-2  # below this the bracket cancels; the caller falls back to the amplitude


def _fresnel_std(z: float) -> float:
    az = abs(z)
    if az == 0.0:
        return _sas_at_zero(0.5)
    xi = math.sqrt(1.0 / (2.0 * math.pi * az))
    c, s = specfun.fresnel(xi)
    u = 0.25 / az
    bracket = math.sin(u) * (0.5 - s) + math.cos(u) * (0.5 - c)
    return bracket / (math.sqrt(2.0 * math.pi) * az ** 1.5)


def _whittaker_std(z: float) -> float:
    """alpha = 2/3 via W_{-1/2,1/6}; exp(2/(27 z^2)) is folded into the integral."""
    az = abs(z)
    if az == 0.0:
        return _sas_at_zero(2.0 / 3.0)
    w = 4.0 / (27.0 * az * az)
    lam, mu = -0.5, 1.0 / 6.0
    integral = specfun.scaled_whittaker_integral(lam, mu, w)
    # e^{w/2} W(w) = w^lam I(w) / Gamma(mu - lam + 1/2)
    ew = math.exp(lam * math.log(w) - math.lgamma(mu - lam + 0.5)) * integral
    return ew / (2.0 * math.sqrt(3.0 * math.pi) * az)


def _series_digits(terms: Sequence[tuple[list, list, float]], scale: float) -> int:
    peak = max(specfun.log_peak_term(a, b, w, 100_000) for a, b, w in terms)
    return int((peak - math.log(max(scale, 1e-300))) / math.log(10.0)) + 25


_FOUR_THIRDS_A = math.gamma(1.75) / math.pi
_FOUR_THIRDS_B = 3.0 * math.gamma(2.25) / (8.0 * math.pi)
FOUR_THIRDS_MAX = 10.5


def _four_thirds_std(z: float) -> float:
    """alpha = 4/3 from the power series regrouped by Gauss multiplication.

    f(z) = Gamma(7/4)/pi 2F2(7/12, 11/12; 1/2, 3/4; w)
           - 3 Gamma(9/4)/(8 pi) z^2 2F2(13/12, 17/12; 5/4, 3/2; w),  w = 27 z^4 / 256
    """
    w = 27.0 * z ** 4 / 256.0
    p1 = ([F(7, 12), F(11, 12)], [F(1, 2), F(3, 4)])
    p2 = ([F(13, 12), F(17, 12)], [F(5, 4), F(3, 2)])
    if w <= 1.0:
        return _FOUR_THIRDS_A * specfun.pfq(*p1, w) - _FOUR_THIRDS_B * z * z * specfun.pfq(*p2, w)
    # the two series grow like e^w while their difference decays; combine at high precision
    digits = _series_digits([(*p1, w), (*p2, w)], 1e-3 * abs(z) ** (-7.0 / 3.0))
    with mpmath.workdps(digits):
        zz = mpmath.mpf(z)
        wm = 27 * zz ** 4 / 256
        f1 = specfun.pfq_mp(*p1, wm, digits)
        f2 = specfun.pfq_mp(*p2, wm, digits)
        a = mpmath.gamma(mpmath.mpf(7) / 4) / mpmath.pi
        b = 3 * mpmath.gamma(mpmath.mpf(9) / 4) / (8 * mpmath.pi)
        return float(a * f1 - b * zz * zz * f2)


HOLTSMARK_MAX = 20.0


def _holtsmark_std(z: float) -> float:
    """alpha = 3/2 as a combination of 2F3 / 3F4 series in -4 z^6 / 729."""
    w = -4.0 * z ** 6 / 729.0
    p1 = ([F(5, 12), F(11, 12)], [F(1, 3), F(1, 2), F(5, 6)])
    p2 = ([F(3, 4), F(1), F(5, 4)], [F(2, 3), F(5, 6), F(7, 6), F(4, 3)])
    p3 = ([F(13, 12), F(19, 12)], [F(7, 6), F(3, 2), F(5, 3)])
    digits = _series_digits([(*p1, w), (*p2, w), (*p3, w)], 1e-3 * max(1.0, abs(z)) ** -2.5)
    if digits <= 30:
        return (
            math.gamma(5 / 3) / math.pi * specfun.pfq(*p1, w)
            - z * z / (3.0 * math.pi) * specfun.pfq(*p2, w)
            + 7.0 * z ** 4 / (81.0 * math.pi) * math.gamma(4 / 3) * specfun.pfq(*p3, w)
        )
    with mpmath.workdps(digits):
        zz = mpmath.mpf(z)
        wm = -4 * zz ** 6 / 729
        pi = mpmath.pi
        val = (
            mpmath.gamma(mpmath.mpf(5) / 3) / pi * specfun.pfq_mp(*p1, wm, digits)
            - zz ** 2 / (3 * pi) * specfun.pfq_mp(*p2, wm, digits)
            + 7 * zz ** 4 / (81 * pi) * mpmath.gamma(mpmath.mpf(4) / 3) * specfun.pfq_mp(*p3, wm, digits)
        )
        return float(val)


def closed_form_standard_density(alpha: float, beta: float, z: float) -> float | None:
    """Closed-form density of S_alpha(1, beta, 0) at z, or None if none applies."""
    if _same(alpha, 2.0):
        return _gauss_std(z)
    if beta == 0.0:
        if _same(alpha, 1.0):
            return _cauchy_std(z)
        if _same(alpha, 0.5):
            return _fresnel_std(z) if (z == 0.0 or abs(z) >= _FRESNEL_MIN) else None
        if _same(alpha, 2.0 / 3.0):
            return _whittaker_std(z)
        if _same(alpha, 4.0 / 3.0):
            return _four_thirds_std(z) if abs(z) <= FOUR_THIRDS_MAX else None
        if _same(alpha, 1.5):
            return _holtsmark_std(z) if abs(z) <= HOLTSMARK_MAX else None
        return None
    if _same(alpha, 0.5) and abs(beta) == 1.0:
        return _levy_std(z if beta > 0 else -z)
    return None


def has_closed_form(p: StableParams) -> bool:
    a, b = p.alpha, p.beta
    if _same(a, 2.0):
        return True
    if b == 0.0:
        return any(_same(a, v) for v in (1.0, 0.5, 2.0 / 3.0, 4.0 / 3.0, 1.5))
    return _same(a, 0.5) and abs(b) == 1.0


def _standardise(p: StableParams, x: np.ndarray) -> np.ndarray:
    # for alpha = 1 the scale enters the location through sigma ln sigma
    shift = p.mu
    if _same(p.alpha, 1.0) and p.beta != 0.0:
        shift = p.mu + (2.0 / math.pi) * p.beta * p.sigma * math.log(p.sigma)
    return (x - shift) / p.sigma


def _standard_density(alpha: float, beta: float, z: float, tol: float) -> float:
    val = closed_form_standard_density(alpha, beta, z)
    if val is not None:
        return val
    if beta == 0.0:
        return sas_amplitude(alpha, 1, abs(z), tol)
    brk = (1.0,) if _same(alpha, 1.0) else ()
    return invert_cf_1d(standard_cf(alpha, beta), z, tol, breakpoints=brk)


def stable_density_1d(p: StableParams, x, tol: float = 1e-10):
    """Density of S_alpha(sigma, beta, mu) at ``x`` (scalar or array)."""
    if p.sigma == 0.0:
        raise DegenerateDistributionError("stable law with sigma = 0 is a point mass")
    _check_conditioning(p.alpha, p.beta)
    xs = np.asarray(x, dtype=float)
    z = _standardise(p, xs)
    out = np.empty_like(z)
    flat_z = z.ravel()
    flat = out.ravel()
    for i, zi in enumerate(flat_z):
        # accuracy is requested in x units; the standard law is scaled by 1/sigma
        flat[i] = _standard_density(p.alpha, p.beta, float(zi), tol * p.sigma)
    out = flat.reshape(z.shape) / p.sigma
    if np.any(out < -tol):
        raise NumericError(f"density went negative beyond tol ({out.min():.3g})")
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def convolve_stable(ps: Sequence[StableParams]) -> StableParams:
    """Parameters of the sum of independent stable variables with a shared alpha."""
    ps = list(ps)
    if not ps:
        raise SchemaError("convolve_stable needs at least one law")
    alpha = ps[0].alpha
    if any(not _same(p.alpha, alpha) for p in ps):
        raise NotConjugateError("stable convolution requires a common alpha")
    mu = float(sum(p.mu for p in ps))
    powers = [p.sigma ** alpha for p in ps]
    total = float(sum(powers))
    if total == 0.0:
        return StableParams(alpha, 0.0, 0.0, mu)
    beta = float(sum(pw * p.beta for pw, p in zip(powers, ps)) / total)
    return StableParams(alpha, total ** (1.0 / alpha), max(-1.0, min(1.0, beta)), mu)


def stable_kernel_eval(k: StableKernelParams, x, y, tol: float = 1e-10):
    """k(x, y) = density of S_alpha(sigma0, 0, 0) at x - y."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return stable_density_1d(k.as_params(), np.abs(diff), tol)


def stable_kernel_fast(k: StableKernelParams, diff) -> np.ndarray:
    """Table-backed batch evaluation of the kernel at differences ``diff``."""
    table = amplitude_table(k.alpha, 1)
    return table(np.asarray(diff, dtype=float) / k.sigma0) / k.sigma0


def stable_kernel_mean(k: StableKernelParams, p: StableParams) -> StableParams:
    """Kernel mean of P in the stable kernel: another stable law with the same alpha."""
    if not _same(k.alpha, p.alpha):
        raise NotConjugateError(f"kernel alpha {k.alpha} differs from model alpha {p.alpha}")
    return convolve_stable([k.as_params(), p])


def stable_inner_mean_mean(k: StableKernelParams, p: StableParams, q: StableParams, tol: float = 1e-10) -> float:
    """<m_P, m_Q>: density at 0 of kernel * reflected P * Q."""
    if not (_same(k.alpha, p.alpha) and _same(k.alpha, q.alpha)):
        raise NotConjugateError("stable inner product requires a common alpha")
    law = convolve_stable([k.as_params(), p.dual(), q])
    return float(stable_density_1d(law, 0.0, tol))


def sample_standard_stable(alpha: float, beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck draws from S_alpha(1, beta, 0)."""
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size=n)
    w = rng.exponential(1.0, size=n)
    if _same(alpha, 1.0):
        half = 0.5 * math.pi + beta * v
        return (2.0 / math.pi) * (half * np.tan(v) - beta * np.log((0.5 * math.pi * w * np.cos(v)) / half))
    zeta = beta * math.tan(0.5 * math.pi * alpha)
    b = math.atan(zeta) / alpha
    s = (1.0 + zeta * zeta) ** (0.5 / alpha)
    arg = alpha * (v + b)
    return s * np.sin(arg) / np.cos(v) ** (1.0 / alpha) * (np.cos(v - arg) / w) ** ((1.0 - alpha) / alpha)


def sample_stable(p: StableParams, n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if p.sigma == 0.0:
        return np.full(n, p.mu)
    if _same(p.alpha, 2.0):
        return p.mu + math.sqrt(2.0) * p.sigma * rng.standard_normal(n)
    x = sample_standard_stable(p.alpha, p.beta, n, rng)
    if _same(p.alpha, 1.0):
        return p.sigma * x + (2.0 / math.pi) * p.beta * p.sigma * math.log(p.sigma) + p.mu
    return p.sigma * x + p.mu


__all__ = [
    "StableParams",
    "StableKernelParams",
    "standard_cf",
    "stable_cf",
    "closed_form_standard_density",
    "has_closed_form",
    "stable_density_1d",
    "convolve_stable",
    "stable_kernel_eval",
    "stable_kernel_fast",
    "stable_kernel_mean",
    "stable_inner_mean_mean",
    "sample_standard_stable",
    "sample_stable",
]
