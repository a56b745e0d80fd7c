"""Special functions used by the GH densities and the closed-form stable densities.

``bessel_k`` and ``fresnel`` wrap scipy; ``pfq`` and ``whittaker_w`` are
evaluated here because the stable closed forms push them into regimes
(massive cancellation, extreme arguments) that need explicit control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import DomainError, NonConvergenceError


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for power series."""

    max_terms: int = 10_000
    rel_tol: float = 1e-12

    def __post_init__(self) -> None:
        if int(self.max_terms) < 1:
            raise DomainError("max_terms must be >= 1")
        if not 0.0 < self.rel_tol < 1.0:
            raise DomainError("rel_tol must lie in (0, 1)")


DEFAULT_SERIES = SeriesControl()


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _order(lam: float) -> float:
    # K is even in the order with zero slope at 0; scipy returns nan for subnormal orders
    nu = abs(float(lam))
    return 0.0 if nu < 1e-150 else nu


def bessel_k(lam: float, x):
    """Modified Bessel function of the second kind K_lam(x).

    Accepts scalar or array ``x``; raises ``OverflowError`` when the value is
    not representable (small ``x`` with large ``|lam|``).
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0.0)):
        raise DomainError("bessel_k requires x > 0")
    # K is even in the order; fold so both signs take the same code path
    # kv flushes to zero near x = 700 while the value is still a normal double
    with np.errstate(over="ignore", divide="ignore"):
        val = np.exp(np.log(special.kve(_order(lam), xa)) - xa)
    if np.any(np.isinf(val)):
        raise OverflowError(f"K_{lam}(x) overflows double precision")
    return float(val) if np.ndim(val) == 0 else val


def log_bessel_k(lam: float, x):
    """ln K_lam(x), finite wherever K is representable in log space."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0.0)):
        raise DomainError("log_bessel_k requires x > 0")
    nu = _order(lam)
    scaled = special.kve(nu, xa)
    out = np.log(scaled) - xa
    bad = ~np.isfinite(out)
    if np.any(bad):
        # tiny argument: K_nu(x) ~ Gamma(nu)/2 (2/x)^nu
        xb = xa[bad] if xa.ndim else xa
        if nu == 0.0:
            approx = np.log(-np.log(0.5 * xb) - np.euler_gamma)
        else:
            approx = math.lgamma(nu) - math.log(2.0) + nu * (math.log(2.0) - np.log(xb))  # 2 / xb overflows for subnormal xb
        if xa.ndim:
            out[bad] = approx
        else:
            out = approx
    return float(out) if np.ndim(out) == 0 else out


def fresnel(z):
    """Fresnel integrals (C(z), S(z)) with the pi t^2 / 2 normalisation."""
    s, c = special.fresnel(z)
    if np.ndim(c) == 0:
        return float(c), float(s)
    return c, s


def _validate_pfq(a: Sequence[float], b: Sequence[float]) -> None:
    if len(a) > len(b):
        raise DomainError("pfq requires len(a) <= len(b)")
    for bj in b:
        if bj <= 0 and float(bj).is_integer():
            raise DomainError(f"pfq lower parameter {bj} is a non-positive integer")


def _pfq_float(a, b, z, ctrl: SeriesControl) -> tuple[float, float, int]:
    """Forward recursion in double; returns (sum, max |term|, terms used)."""
    term = 1.0
    total = 1.0
    comp = 0.0
    peak = 1.0
    for n in range(ctrl.max_terms):
        ratio = z / (n + 1)
        for ai in a:
            ratio *= ai + n
        for bj in b:
            ratio /= bj + n
        term *= ratio
        if not math.isfinite(term):
            return math.nan, math.inf, n
        # Kahan summation keeps the tail contributions
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        peak = max(peak, abs(term))
        if term == 0.0 or (abs(term) < ctrl.rel_tol * abs(total) and n > 2 and abs(ratio) < 1.0):
            return total, peak, n + 1
    raise NonConvergenceError(f"pfq did not converge within {ctrl.max_terms} terms")


def _exact_mpf(v):
    # rational parameters must stay exact: a rounded 7/12 is amplified by the cancellation
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def pfq_mp(a, b, z, digits: int, ctrl: SeriesControl = DEFAULT_SERIES):
    """Same series summed in mpmath at ``digits`` decimal digits; returns an mpf.

    Parameters may be ``Fraction`` or mpf and are converted exactly. Callers
    combining several huge, nearly cancelling series (the stable closed forms
    at large |x|) pass ``z`` as an mpf and do the combination at this
    precision too.
    """
    with mpmath.workdps(digits):
        am = [_exact_mpf(v) for v in a]
        bm = [_exact_mpf(v) for v in b]
        zm = _exact_mpf(z)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        # sum to working precision: callers rely on every digit surviving the cancellation
        tol = mpmath.eps
        for n in range(ctrl.max_terms):
            ratio = zm / (n + 1)
            for ai in am:
                ratio *= ai + n
            for bj in bm:
                ratio /= bj + n
            term *= ratio
            total += term
            if term == 0 or (abs(term) < tol * abs(total) and n > 2 and abs(ratio) < 1):
                return +total
    raise NonConvergenceError(f"pfq did not converge within {ctrl.max_terms} terms")


def pfq(a: Sequence[float], b: Sequence[float], z: float, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Generalised hypergeometric series pFq(a; b; z) for p <= q.

    The double-precision recursion is trusted only when the largest term is
    not much bigger than the result; otherwise the same recursion is rerun
    with enough working digits to absorb the cancellation.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    _validate_pfq(a, b)
    z = float(z)
    total, peak, _ = _pfq_float(a, b, z, ctrl)
    lost = peak / abs(total) if (math.isfinite(total) and total != 0.0) else math.inf
    if lost * np.finfo(float).eps <= ctrl.rel_tol:
        return total
    # size the precision from an estimate of the largest term in log space
    digits = int(log_peak_term(a, b, z, ctrl.max_terms) / math.log(10)) + 30
    val = float(pfq_mp(a, b, z, max(digits, 40), ctrl))
    if not math.isfinite(val):
        raise OverflowError("pfq result exceeds double precision range")
    return val


def log_peak_term(a, b, z, max_terms: int) -> float:
    if z == 0.0:
        return 0.0
    z = float(z)
    lz = math.log(abs(z))
    log_term = 0.0
    peak = 0.0
    for n in range(max_terms):
        step = lz - math.log(n + 1)
        for ai in a:
            step += math.log(abs(float(ai) + n)) if ai + n != 0 else -math.inf
        for bj in b:
            step -= math.log(abs(float(bj) + n))
        if step == -math.inf:
            break
        log_term += step
        peak = max(peak, log_term)
        if step < 0 and log_term < peak - 80:
            break
    return peak


def scaled_whittaker_integral(lam: float, mu: float, z: float) -> float:
    """I(z) = integral_0^inf e^{-t} t^{mu-lam-1/2} (1 + t/z)^{mu+lam-1/2} dt.

    ``W_{lam,mu}(z) = z^lam e^{-z/2} I(z) / Gamma(mu - lam + 1/2)``; callers
    that only need ``e^{z/2} W`` use this directly and avoid overflow.
    """
    c1 = mu - lam - 0.5
    c2 = mu + lam - 0.5
    if not c1 > -1.0:
        raise DomainError("integral representation needs Re(mu - lam) > -1/2")
    if not z > 0.0:
        raise DomainError("whittaker_w requires z > 0")

    def integrand(t: float) -> float:
        return math.exp(-t + c1 * math.log(t) + c2 * math.log1p(t / z)) if t > 0 else 0.0

    # mass sits at t = O(1 + c1); splitting there isolates the endpoint singularity
    split = 1.0 + abs(c1)
    head, _ = integrate.quad(integrand, 0.0, split, epsabs=0.0, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(integrand, split, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return head + tail


def whittaker_w(lam: float, mu: float, z: float) -> float:
    """Whittaker W_{lam,mu}(z) through its Laplace-type integral representation."""
    integral = scaled_whittaker_integral(lam, mu, z)
    log_pref = lam * math.log(z) - 0.5 * z - math.lgamma(mu - lam + 0.5)
    return math.exp(log_pref) * integral


__all__ = [
    "SeriesControl",
    "DEFAULT_SERIES",
    "log_gamma",
    "bessel_k",
    "log_bessel_k",
    "fresnel",
    "pfq",
    "pfq_mp",
    "log_peak_term",
    "whittaker_w",
    "scaled_whittaker_integral",
]
