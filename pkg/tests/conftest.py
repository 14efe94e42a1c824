import numpy as np
import pytest

from ddinv import platoon
from ddinv.dataset import (DisturbanceSet, random_box_disturbances,
                           random_inputs, simulate_experiment)
from ddinv.polyhedra import HPolyhedron


@pytest.fixture(scope="session")
def platoon_system():
    A, B = platoon.discrete_matrices()
    return A, B


@pytest.fixture(scope="session")
def platoon_state_set():
    return platoon.state_set()


def random_bounded_polytope(rng, n, extra_rows=4, scale=1.0):
    """Random bounded polyhedron with the origin strictly inside.

    The +-e_i rows guarantee boundedness; extra random halfspaces cut the box
    into something less symmetric.
    """
    I = np.eye(n)
    G = rng.standard_normal((extra_rows, n))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    A = np.vstack([I, -I, G])
    b = np.concatenate([np.full(2 * n, scale),
                        rng.uniform(0.4 * scale, 1.5 * scale, extra_rows)])
    return HPolyhedron(A, b)


def box_disturbance(n, delta):
    """Componentwise bound |d_k| <= delta as a one-sided set."""
    I = np.eye(n)
    return DisturbanceSet(np.vstack([I, -I]), delta)


def scalar_state_set(limit=1.0):
    return HPolyhedron(np.array([[1.0], [-1.0]]), np.array([limit, limit]))


def make_tiny_instance(rng, n, m, T, delta, stable_bias=0.0):
    """Random small system plus an experiment consistent with ``delta``.

    Returns (A, B, S, dist, data).  ``stable_bias`` < 0 shrinks the spectral
    scale to favor feasible instances, > 0 favors infeasible ones.
    """
    A = rng.uniform(-1.0, 1.0, (n, n))
    A *= (1.0 + stable_bias) / max(np.max(np.abs(np.linalg.eigvals(A))), 0.1)
    B = rng.uniform(-1.0, 1.0, (n, m))
    while np.min(np.abs(B)) < 0.2:  # keep actuation meaningful
        B = rng.uniform(-1.0, 1.0, (n, m))
    if n == 1:
        S = scalar_state_set()
    else:
        S = random_bounded_polytope(rng, n, extra_rows=2)
    dist = box_disturbance(n, delta)
    U = random_inputs(m, T, 1.0, seed=int(rng.integers(2**31)))
    D0 = random_box_disturbances(n, delta, T, seed=int(rng.integers(2**31)))
    x0 = rng.uniform(-0.2, 0.2, n)
    data = simulate_experiment(A, B, x0, U, D0)
    return A, B, S, dist, data
