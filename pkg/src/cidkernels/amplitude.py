"""Radial amplitude of the isotropic symmetric alpha-stable law in d dimensions.

The reference law has characteristic function exp(-|theta|^alpha); its
density is f(|x|) with f the *amplitude* computed here. Dimension 1 is the
univariate standard symmetric stable density. Three evaluators are combined:

* the convergent power series in r (alpha > 1, moderate r),
* the series in r^{-alpha k - d} (convergent for alpha < 1, asymptotic for alpha > 1),
* Hankel-type CF inversion for everything in between.

``AmplitudeTable`` freezes the middle region into piecewise Chebyshev
interpolants so that kernels can be evaluated on large batches.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .levy import invert_cf_radial

_TAIL_TERMS = 400


def _is_close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12


def gaussian_amplitude(dim: int, r):
    """alpha = 2: exp(-|theta|^2) is N(0, 2 I)."""
    r = np.asarray(r, dtype=float)
    return (4.0 * math.pi) ** (-0.5 * dim) * np.exp(-0.25 * r * r)


def cauchy_amplitude(dim: int, r):
    """alpha = 1: multivariate isotropic Cauchy."""
    r = np.asarray(r, dtype=float)
    c = math.exp(math.lgamma(0.5 * (dim + 1)) - 0.5 * (dim + 1) * math.log(math.pi))
    return c * (1.0 + r * r) ** (-0.5 * (dim + 1))


def amplitude_at_zero(alpha: float, dim: int) -> float:
    """f(0) = (2 pi)^{-d/2} 2^{1-d/2} Gamma(d/alpha) / (alpha Gamma(d/2))."""
    return math.exp(
        -0.5 * dim * math.log(2.0 * math.pi)
        + (1.0 - 0.5 * dim) * math.log(2.0)
        + math.lgamma(dim / alpha)
        - math.log(alpha)
        - math.lgamma(0.5 * dim)
    )


def power_series(alpha: float, dim: int, r: float, max_growth: float = 1e3) -> float | None:
    """Convergent series around r = 0 (alpha > 1 only).

    Returns None when the terms grow past ``max_growth`` times the result,
    i.e. when cancellation would cost more than three digits.
    """
    if alpha <= 1.0:
        return None
    if r == 0.0:
        return amplitude_at_zero(alpha, dim)
    log_pref = -0.5 * dim * math.log(2.0 * math.pi) + (1.0 - 0.5 * dim) * math.log(2.0) - math.log(alpha)
    log_q = 2.0 * math.log(0.5 * r)
    total = 0.0
    peak = 0.0
    for m in range(2000):
        log_t = log_pref + m * log_q + math.lgamma((2 * m + dim) / alpha) - math.lgamma(m + 1) - math.lgamma(m + 0.5 * dim)
        term = math.exp(log_t) if log_t < 700 else math.inf
        if not math.isfinite(term):
            return None
        total += -term if m % 2 else term
        peak = max(peak, term)
        if m > 2 and term < 1e-17 * abs(total):
            break
    else:
        return None
    if total <= 0.0 or peak > max_growth * total:
        return None
    return total


@lru_cache(maxsize=64)
def _tail_coefficients(alpha: float, dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Log-magnitudes (with and without the sine factor), signs and powers of the tail terms."""
    from scipy.special import gammaln

    k = np.arange(1, _TAIL_TERMS + 1, dtype=float)
    sines = np.sin(0.5 * math.pi * alpha * k)
    log_env = (
        -(0.5 * dim + 1.0) * math.log(math.pi)
        - gammaln(k + 1.0)
        + alpha * k * math.log(2.0)
        + gammaln(0.5 * (alpha * k + dim))
        + gammaln(1.0 + 0.5 * alpha * k)
    )
    signs = np.where(k % 2 == 1, 1.0, -1.0) * np.sign(sines)
    with np.errstate(divide="ignore"):
        log_c = log_env + np.log(np.abs(sines))
    return log_c, log_env, signs, alpha * k + dim


def _tail_truncation(alpha: float, dim: int, r: float) -> int | None:
    """Number of tail terms to sum at radius r, or None if the series is unusable there.

    The sine-free envelope decides convergence: for alpha > 1 the series is
    asymptotic and is cut just before the envelope starts to grow.
    """
    _, log_env, _, powers = _tail_coefficients(alpha, dim)
    env = log_env - powers * math.log(r)
    lead = env[0]
    if np.max(env) > lead + math.log(10.0):
        return None  # cancellation between large terms
    below = np.nonzero(env < lead + math.log(1e-17))[0]
    if alpha > 1.0:
        grow = np.nonzero(np.diff(env) > 0)[0]
        if grow.size and (not below.size or grow[0] < below[0]):
            return None
    return int(below[0]) + 1 if below.size else None


def tail_series(alpha: float, dim: int, r: float) -> float | None:
    """Large-r series value, or None where it cannot reach ~1e-15 relative accuracy."""
    if r <= 0.0:
        return None
    n = _tail_truncation(alpha, dim, r)
    if n is None:
        return None
    log_c, _, signs, powers = _tail_coefficients(alpha, dim)
    with np.errstate(invalid="ignore"):
        terms = signs[:n] * np.exp(log_c[:n] - powers[:n] * math.log(r))
    return float(np.nansum(terms))


def _tail_switch_radius(alpha: float, dim: int) -> float:
    for r in np.geomspace(0.5, 1e5, 400):
        if _tail_truncation(alpha, dim, float(r)) is not None:
            return float(r)
    raise ArithmeticError("tail series never reached the requested accuracy")


def sas_amplitude(alpha: float, dim: int, r: float, tol: float = 1e-12) -> float:
    """Direct (table-free) evaluation of the unit-scale amplitude at radius ``r``."""
    r = abs(float(r))
    if _is_close(alpha, 2.0):
        return float(gaussian_amplitude(dim, r))
    if _is_close(alpha, 1.0):
        return float(cauchy_amplitude(dim, r))
    if r == 0.0:
        return amplitude_at_zero(alpha, dim)
    val = power_series(alpha, dim, r)
    if val is not None:
        return val
    res = tail_series(alpha, dim, r)
    if res is not None and res > 0:
        return res
    return invert_cf_radial(lambda t: np.exp(-(t ** alpha)), dim, r, tol)


class AmplitudeTable:
    """Piecewise-Chebyshev amplitude on [0, r_switch] with the tail series beyond.

    ``rel_tol`` is relative to the peak value f(0). Panels are bisected until
    the trailing Chebyshev coefficients fall below a tenth of that, so the
    interpolation error stays under 0.1 * rel_tol * f(0).
    """

    def __init__(self, alpha: float, dim: int, rel_tol: float = 1e-12, degree: int = 24):
        self.alpha = float(alpha)
        self.dim = int(dim)
        self.closed = _is_close(alpha, 2.0) or _is_close(alpha, 1.0)
        self.peak = amplitude_at_zero(self.alpha, self.dim)
        self.tol = float(rel_tol) * self.peak
        if self.closed:
            self.r_switch = math.inf
            self.edges = np.zeros(0)
            self.coefs: list[np.ndarray] = []
            return
        self.r_switch = _tail_switch_radius(self.alpha, self.dim)
        n = _tail_truncation(self.alpha, self.dim, self.r_switch)
        log_c, _, signs, powers = _tail_coefficients(self.alpha, self.dim)
        # terms needed at r_switch stay sufficient for larger r
        self._log_c = log_c[:n]
        self._signs = signs[:n]
        self._powers = powers[:n]
        self._build(degree)

    def _direct(self, r: float) -> float:
        return sas_amplitude(self.alpha, self.dim, r, tol=0.01 * self.tol)

    def _build(self, degree: int) -> None:
        edges = [0.0]
        e = min(0.5, self.r_switch)
        while e < self.r_switch:
            edges.append(e)
            e *= 2.0
        edges.append(self.r_switch)
        stack = list(zip(edges[:-1], edges[1:]))[::-1]
        panels: list[tuple[float, float, np.ndarray]] = []
        nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
        while stack:
            a, b = stack.pop()
            xs = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            vals = np.array([self._direct(float(x)) for x in xs])
            c = cheb.chebfit(nodes, vals, degree)
            if np.max(np.abs(c[-3:])) > 0.1 * self.tol and (b - a) > 1e-3:
                mid = 0.5 * (a + b)
                stack.append((mid, b))
                stack.append((a, mid))
                continue
            panels.append((a, b, c))
        panels.sort(key=lambda p: p[0])
        self.edges = np.array([p[0] for p in panels] + [panels[-1][1]])
        self.coefs = [p[2] for p in panels]

    def __call__(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        if self.closed:
            if _is_close(self.alpha, 2.0):
                return gaussian_amplitude(self.dim, r)
            return cauchy_amplitude(self.dim, r)
        flat_r = r.ravel()
        flat = np.empty_like(flat_r)
        inner = flat_r <= self.r_switch
        if np.any(inner):
            ri = flat_r[inner]
            idx = np.clip(np.searchsorted(self.edges, ri, side="right") - 1, 0, len(self.coefs) - 1)
            res = np.empty_like(ri)
            for j in np.unique(idx):
                m = idx == j
                a, b = self.edges[j], self.edges[j + 1]
                res[m] = cheb.chebval((2.0 * ri[m] - a - b) / (b - a), self.coefs[j])
            flat[inner] = res
        outer = ~inner
        if np.any(outer):
            lr = np.log(flat_r[outer])
            with np.errstate(invalid="ignore"):
                terms = self._signs[:, None] * np.exp(self._log_c[:, None] - self._powers[:, None] * lr[None, :])
            flat[outer] = np.nansum(terms, axis=0)
        return flat.reshape(r.shape)


@lru_cache(maxsize=32)
def amplitude_table(alpha: float, dim: int, rel_tol: float = 1e-12) -> AmplitudeTable:
    """Shared immutable table per (alpha, dim, rel_tol)."""
    return AmplitudeTable(alpha, dim, rel_tol)


def scaled_amplitude(alpha: float, dim: int, c: float, r, table: bool = True):
    """Amplitude for the radial CF exp(-c t^alpha): c^{-d/alpha} f(r c^{-1/alpha})."""
    s = c ** (1.0 / alpha)
    r = np.asarray(r, dtype=float)
    if table:
        base = amplitude_table(float(alpha), int(dim))(r / s)
    else:
        base = np.vectorize(lambda v: sas_amplitude(alpha, dim, v))(r / s)
    return base / s ** dim


__all__ = [
    "sas_amplitude",
    "amplitude_at_zero",
    "power_series",
    "tail_series",
    "AmplitudeTable",
    "amplitude_table",
    "scaled_amplitude",
    "gaussian_amplitude",
    "cauchy_amplitude",
]
