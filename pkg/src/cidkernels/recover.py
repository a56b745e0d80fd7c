"""Recover mixture weights on the simplex from a target kernel mean.

Minimises 1/2 a'(Q + ridge I)a - l'a over {a >= 0, sum a = 1}, where
Q_ij = <m[p_i], m[p_j]> and l_j = <target, m[p_j]>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embed import EmpiricalSum, Kernel, KernelMean, Model, inner_mean_mean, kernel_mean
from .errors import SchemaError

DEFAULT_RELATIVE_RIDGE = 1e-8
_DROP_TOL = 1e-15


@dataclass(frozen=True)
class SimplexSolution:
    weights: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool = True


@dataclass
class RecoveryProblem:
    target: KernelMean
    candidates: Sequence[Model]
    kernel: Kernel
    ridge: float | None = None  # None: DEFAULT_RELATIVE_RIDGE * trace(Q) / M
    _means: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if len(self.candidates) < 1:
            raise SchemaError("at least one candidate is required")
        if self.ridge is not None and self.ridge < 0:
            raise SchemaError("ridge must be nonnegative")
        self._means = [kernel_mean(c, self.kernel) for c in self.candidates]


def build_q_matrix(candidates: Sequence[Model], kernel: Kernel, means: Sequence[KernelMean] | None = None) -> np.ndarray:
    means = list(means) if means is not None else [kernel_mean(c, kernel) for c in candidates]
    M = len(means)
    Q = np.empty((M, M))
    for i in range(M):
        for j in range(i, M):
            Q[i, j] = inner_mean_mean(means[i], means[j])
            Q[j, i] = inner_mean_mean(means[j], means[i]) if i != j else Q[i, j]
    return 0.5 * (Q + Q.T)


def build_l_vector(target: KernelMean, candidates: Sequence[Model], kernel: Kernel,
                   means: Sequence[KernelMean] | None = None) -> np.ndarray:
    means = list(means) if means is not None else [kernel_mean(c, kernel) for c in candidates]
    if isinstance(target, EmpiricalSum):
        return np.array([float(target.weights @ np.atleast_1d(m.evaluate(target.points))) for m in means])
    return np.array([inner_mean_mean(target, m) for m in means])


def _objective(H: np.ndarray, l: np.ndarray, a: np.ndarray) -> float:
    return float(0.5 * a @ H @ a - l @ a)


def solve_simplex_qp(Q, l, ridge: float = 0.0, tol: float = 1e-10, max_iter: int = 10000) -> SimplexSolution:
    """Away-step Frank-Wolfe with exact line search.

    The Frank-Wolfe gap g(a) = max_v <grad, a - v> bounds the suboptimality
    and is reported as ``kkt_residual``. Ties in the linear minimisation go
    to the lowest index, so the iterate sequence is deterministic.
    """
    Q = np.asarray(Q, dtype=float)
    l = np.asarray(l, dtype=float).ravel()
    M = l.size
    if Q.shape != (M, M):
        raise SchemaError(f"Q must be {M}x{M}")
    if ridge < 0:
        raise SchemaError("ridge must be nonnegative")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(Q))))):
        raise SchemaError("Q must be symmetric")
    H = 0.5 * (Q + Q.T) + ridge * np.eye(M)

    # start at the best vertex
    vertex_obj = 0.5 * np.diag(H) - l
    a = np.zeros(M)
    a[int(np.argmin(vertex_obj))] = 1.0
    obj = _objective(H, l, a)
    scale = max(1.0, float(np.max(np.abs(H))), float(np.max(np.abs(l))))
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad = H @ a - l
        s = int(np.argmin(grad))
        gap = float(grad @ a - grad[s])
        if gap <= tol:
            break
        active = np.nonzero(a > 0)[0]
        v = int(active[np.argmax(grad[active])])
        d_fw = -a.copy()
        d_fw[s] += 1.0
        d_aw = a.copy()
        d_aw[v] -= 1.0
        if -grad @ d_fw >= -grad @ d_aw or a[v] >= 1.0:
            d, gmax = d_fw, 1.0
        else:
            d, gmax = d_aw, a[v] / (1.0 - a[v])
        curv = float(d @ H @ d)
        slope = float(grad @ d)
        step = gmax if curv <= 0 else min(gmax, max(0.0, -slope / curv))
        a = a + step * d
        a[np.abs(a) < _DROP_TOL] = 0.0
        a = np.maximum(a, 0.0)
        a /= a.sum()
        new_obj = _objective(H, l, a)
        assert new_obj <= obj + 1e-13 * scale, "Frank-Wolfe objective increased"
        obj = new_obj
    else:
        grad = H @ a - l
        gap = float(grad @ a - np.min(grad))
    return SimplexSolution(a, obj, it, max(gap, 0.0), converged=gap <= tol)


def recover_density(problem: RecoveryProblem, tol: float = 1e-10, max_iter: int = 10000) -> SimplexSolution:
    Q = build_q_matrix(problem.candidates, problem.kernel, problem._means)
    l = build_l_vector(problem.target, problem.candidates, problem.kernel, problem._means)
    ridge = problem.ridge
    if ridge is None:
        ridge = DEFAULT_RELATIVE_RIDGE * float(np.trace(Q)) / Q.shape[0]
    return solve_simplex_qp(Q, l, ridge, tol, max_iter)


__all__ = [
    "SimplexSolution",
    "RecoveryProblem",
    "build_q_matrix",
    "build_l_vector",
    "solve_simplex_qp",
    "recover_density",
    "DEFAULT_RELATIVE_RIDGE",
]
