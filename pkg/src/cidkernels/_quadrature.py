"""Panelled tanh-sinh quadrature and series acceleration.

Everything here is vectorised over panels: the integrand receives a 2-D
array of nodes (panels x nodes) and must return an array of the same shape.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureError

_T_MAX = 3.15  # beyond this the weights underflow relative to 1e-16
_EPS = np.finfo(float).eps


@lru_cache(maxsize=16)
def _tanh_sinh_rule(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Abscissae on [-1, 1] as (sign, distance-to-nearest-end, weight)."""
    h = 2.0 ** -level
    k = np.arange(-int(np.ceil(_T_MAX / h)), int(np.ceil(_T_MAX / h)) + 1)
    t = k * h
    u = 0.5 * np.pi * np.sinh(t)
    # 1 - |tanh(u)| computed without cancellation
    e = np.exp(-2.0 * np.abs(u))
    dist = 2.0 * e / (1.0 + e)
    w = h * 0.5 * np.pi * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2
    sign = np.sign(t)
    sign.setflags(write=False)
    dist.setflags(write=False)
    w.setflags(write=False)
    return sign, dist, w


def _panel_nodes(a: np.ndarray, b: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    sign, dist, w = _tanh_sinh_rule(level)
    half = 0.5 * (b - a)[:, None]
    # nodes measured from the nearer endpoint keep singular endpoints resolved
    nodes = np.where(sign[None, :] < 0, a[:, None] + half * dist[None, :], b[:, None] - half * dist[None, :])
    nodes = np.where(sign[None, :] == 0, 0.5 * (a + b)[:, None], nodes)
    return nodes, half * w[None, :]


def tanh_sinh_panels(
    f: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    atol: float,
    rtol: float = 1e-14,
    min_level: int = 3,
    max_level: int = 9,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``f`` over consecutive panels ``[edges[i], edges[i+1]]``.

    Returns per-panel values and error estimates. A panel stops refining once
    successive levels agree within ``max(atol / n_panels, rtol * |value|)``.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    n = a.size
    values = np.zeros(n)
    errors = np.full(n, np.inf)
    if n == 0:
        return values, np.zeros(0)
    per_panel = atol / n
    active = np.arange(n)
    prev = None
    for level in range(min_level, max_level + 1):
        nodes, w = _panel_nodes(a[active], b[active], level)
        cur = np.sum(w * f(nodes), axis=1)
        if prev is not None:
            err = np.abs(cur - prev)
            values[active] = cur
            errors[active] = err
            done = err <= np.maximum(per_panel, rtol * np.abs(cur))
            active = active[~done]
            prev = cur[~done]
            if active.size == 0:
                break
        else:
            values[active] = cur
            prev = cur
    return values, errors


def wynn_epsilon(partial_sums: np.ndarray) -> tuple[float, float]:
    """Wynn epsilon extrapolation of a sequence of partial sums.

    Returns the extrapolated limit and the change between the last two
    even-column estimates as an error indicator.
    """
    s = [float(v) for v in partial_sums]
    n = len(s)
    if n < 3:
        return s[-1], np.inf
    prev_col = [0.0] * (n + 1)
    cur_col = list(s)
    estimates = [s[-1]]
    for k in range(1, n):
        nxt = []
        for j in range(len(cur_col) - 1):
            diff = cur_col[j + 1] - cur_col[j]
            if diff == 0.0:
                nxt.append(np.inf if k % 2 else cur_col[j + 1])
                continue
            nxt.append(prev_col[j + 1] + 1.0 / diff)
        prev_col, cur_col = cur_col, nxt
        if k % 2 == 0 and cur_col:
            if np.isfinite(cur_col[-1]):
                estimates.append(cur_col[-1])
        if len(cur_col) < 2:
            break
    if len(estimates) < 2:
        return estimates[-1], np.inf
    return estimates[-1], abs(estimates[-1] - estimates[-2])


def geometric_edges(start: float, stop: float, first: float = 0.5) -> np.ndarray:
    """Edges 0, first*2^k ... stop, refining towards the origin."""
    if stop <= first:
        return np.array([start, stop])
    m = int(np.ceil(np.log2(stop / first)))
    inner = stop * 2.0 ** -np.arange(m, 0, -1)
    return np.concatenate([[start], inner, [stop]])


def oscillatory_integral(
    f: Callable[[np.ndarray], np.ndarray],
    upper: float,
    half_period: float | None,
    atol: float,
    breakpoints: tuple[float, ...] = (),
    max_direct_panels: int = 20000,
    n_acceleration: int = 2000,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[0, upper]``.

    With ``half_period`` set the interval is cut into panels of that width
    (the zero spacing of the oscillating factor). When more than
    ``max_direct_panels`` would be needed, the first ``n_acceleration``
    panels are summed and the partial sums are extrapolated by the epsilon
    algorithm.
    """
    if upper <= 0:
        return 0.0, 0.0
    if half_period is None or half_period >= upper / 4:
        edges = geometric_edges(0.0, upper, first=min(0.5, upper / 4))
    else:
        n_panels = int(np.ceil(upper / half_period))
        if n_panels > max_direct_panels:
            edges = np.arange(n_acceleration + 1) * half_period
            edges = _merge_breakpoints(edges, breakpoints)
            vals, errs = tanh_sinh_panels(f, edges, atol * 1e-2)
            sums = np.cumsum(vals)
            # Wynn on a trailing window of alternating panel sums
            window = sums[-40:]
            limit, acc_err = wynn_epsilon(window)
            if not np.isfinite(limit) or acc_err > atol:
                raise QuadratureError(
                    f"oscillatory tail did not converge (extrapolation change {acc_err:.3g} > {atol:.3g})"
                )
            return limit, float(acc_err + errs.sum())
        # the last panel may overshoot ``upper``; the integrand is negligible there
        edges = np.arange(n_panels + 1) * half_period
    edges = _merge_breakpoints(edges, breakpoints)
    vals, errs = tanh_sinh_panels(f, edges, atol)
    return float(np.sum(vals)), float(np.sum(errs))


def _merge_breakpoints(edges: np.ndarray, breakpoints: tuple[float, ...]) -> np.ndarray:
    if not breakpoints:
        return edges
    lo, hi = edges[0], edges[-1]
    extra = [p for p in breakpoints if lo < p < hi]
    if not extra:
        return edges
    merged = np.unique(np.concatenate([edges, extra]))
    # drop slivers that would waste a panel
    keep = np.concatenate([[True], np.diff(merged) > 1e-12 * max(1.0, hi)])
    return merged[keep]


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


__all__ = [
    "tanh_sinh_panels",
    "oscillatory_integral",
    "wynn_epsilon",
    "geometric_edges",
    "gauss_legendre",
]
