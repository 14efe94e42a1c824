"""Two-vehicle platoon benchmark.

A leader/follower pair with viscous friction, written in error coordinates
(spacing error, velocity errors), Euler-discretized at a 10 ms step:

    x+ = (I + tau A_ct) x + tau B_ct u + d.

The target set ``{S x <= 1}`` is a bounded parallelepiped around the origin
(three symmetric halfspace pairs); the disturbance bound is the sup-norm box
``|d_k| <= delta``.  These fixed matrices are the reference workload for the
whole package: the model-based design is feasible up to delta roughly 0.0625
and the data-driven design approaches that ceiling as the experiment grows.
"""

import numpy as np

from .dataset import (DisturbanceSet, ExperimentData, random_box_disturbances,
                      random_inputs, simulate_experiment)
from .polyhedra import HPolyhedron

GAMMA1 = 0.005   # leader friction / mass
GAMMA2 = 0.01    # follower friction / mass
TAU = 0.01       # sampling time

INPUT_RANGE = 5.0  # open-loop excitation amplitude per input component

S_MATRIX = np.array([
    [0.9165, 0.1900, -0.1762],
    [1.4250, 0.0661, -0.0769],
    [-0.0322, 0.1925, 0.2165],
    [-0.9165, -0.1900, 0.1762],
    [-1.4250, -0.0661, 0.0769],
    [0.0322, -0.1925, -0.2165],
])

D_MATRIX = np.array([
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
])


def continuous_matrices():
    A_ct = np.array([[0.0, 1.0, -1.0],
                     [0.0, -GAMMA1, 0.0],
                     [0.0, 0.0, -GAMMA2]])
    B_ct = np.array([[0.0, 0.0],
                     [1.0, 0.0],
                     [0.0, 1.0]])
    return A_ct, B_ct


def discrete_matrices(tau: float = TAU):
    """Euler discretization; the open loop keeps an eigenvalue at 1."""
    A_ct, B_ct = continuous_matrices()
    return np.eye(3) + tau * A_ct, tau * B_ct


def state_set() -> HPolyhedron:
    return HPolyhedron(S_MATRIX, np.ones(6))


def disturbance_set(delta: float) -> DisturbanceSet:
    return DisturbanceSet(D_MATRIX, delta)


def generate_dataset(T: int, delta: float, seed: int,
                     input_range: float = INPUT_RANGE,
                     x0=None) -> ExperimentData:
    """Open-loop experiment data for the benchmark.

    Inputs are uniform in [-input_range, input_range] per component and
    disturbances uniform in [-delta, delta] per component, so every recorded
    disturbance lies in the bound used at synthesis time.  The input and
    disturbance streams get decorrelated seeds derived from ``seed``.
    """
    A, B = discrete_matrices()
    x0 = np.zeros(3) if x0 is None else np.asarray(x0, float)
    ss = np.random.SeedSequence(seed)
    seed_u, seed_d = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    U = random_inputs(2, T, input_range, seed_u)
    D = random_box_disturbances(3, delta, T, seed_d)
    return simulate_experiment(A, B, x0, U, D)
