"""Hypothesis strategies shared across test modules."""

import numpy as np
from hypothesis import strategies as st

from cidkernels.levy import GeneratingTriplet, LevyMeasureDiscrete

finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def triplets_1d(draw, min_A: float = 0.0, max_atoms: int = 3, symmetric: bool = False):
    A = draw(st.floats(min_A, 2.0, **finite))
    n = draw(st.integers(0, max_atoms))
    locs = [draw(st.floats(0.1, 3.0, **finite)) * draw(st.sampled_from([-1.0, 1.0])) for _ in range(n)]
    masses = [draw(st.floats(0.05, 1.5, **finite)) for _ in range(n)]
    if symmetric:
        locs = locs + [-v for v in locs]
        masses = masses + masses
        gamma = 0.0
    else:
        gamma = draw(st.floats(-1.0, 1.0, **finite))
    nu = LevyMeasureDiscrete(np.array(locs).reshape(-1, 1), np.array(masses)) if n else LevyMeasureDiscrete.empty(1)
    return GeneratingTriplet([[A]], nu.merged(), [gamma])


@st.composite
def triplets_2d(draw, max_atoms: int = 3):
    L = np.array(draw(st.lists(st.floats(-1.0, 1.0, **finite), min_size=4, max_size=4))).reshape(2, 2)
    A = L @ L.T
    n = draw(st.integers(0, max_atoms))
    locs = []
    for _ in range(n):
        v = np.array(draw(st.lists(st.floats(-2.0, 2.0, **finite), min_size=2, max_size=2)))
        if np.linalg.norm(v) < 0.05:
            v = v + 0.5
        locs.append(v)
    masses = [draw(st.floats(0.05, 1.5, **finite)) for _ in range(n)]
    gamma = draw(st.lists(st.floats(-1.0, 1.0, **finite), min_size=2, max_size=2))
    nu = LevyMeasureDiscrete(np.array(locs).reshape(-1, 2), np.array(masses)) if n else LevyMeasureDiscrete.empty(2)
    return GeneratingTriplet(A, nu.merged(), gamma)


def triplets_equal(t1: GeneratingTriplet, t2: GeneratingTriplet, tol: float = 1e-12) -> bool:
    n1, n2 = t1.nu.merged(), t2.nu.merged()
    return (
        np.allclose(t1.A, t2.A, atol=tol, rtol=0)
        and np.allclose(t1.gamma, t2.gamma, atol=tol, rtol=0)
        and n1.masses.shape == n2.masses.shape
        and np.allclose(n1.locations, n2.locations, atol=tol, rtol=0)
        and np.allclose(n1.masses, n2.masses, atol=tol, rtol=0)
    )
