"""Independent validation of synthesized gains.

Nothing here reuses the synthesis LPs' internals: invariance of a *fixed*
gain is decided by a fresh containment certificate, cross-checked against a
vertex-pair brute force oracle on small instances, and exercised by closed
loop simulation under worst-case (vertex) disturbances.  Agreement between
these independent routes is the package's main line of defense against a
silently wrong LP assembly.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .dataset import ConsistencySet, DisturbanceSet
from .errors import DimensionError, UnboundedSetError
from .farkas import ContainmentProblem, FarkasCertificate, solve_containment
from .polyhedra import (HPolyhedron, VPolytope, enumerate_vertices,
                        is_bounded_general, sample_hit_and_run)

SIMULATION_TOL = 1e-7  # looser than LP tolerances so rounding never fakes an exit


@dataclass(frozen=True)
class Trajectory:
    """A simulated closed-loop run ``x+ = F x + d``.

    ``states`` has one more row than ``disturbances``; replaying the stored
    disturbances through the same update reproduces the stored states
    bit-exactly.
    """

    states: np.ndarray             # (steps+1, n)
    disturbances: np.ndarray       # (steps, n)
    contained: np.ndarray          # (steps+1,) bool, state in S
    first_exit_step: int | None

    @property
    def steps(self) -> int:
        return self.disturbances.shape[0]


def invariance_problem(A, B, K, S: HPolyhedron, dist: DisturbanceSet) -> ContainmentProblem:
    """The one-step condition as a containment of product sets.

    ``(A+BK)x + d`` stays in S for all x in S, d in the disturbance set iff
    ``[S(A+BK)  S] (x; d) <= 1`` whenever ``blockdiag(S, D)(x; d) <= (1; delta 1)``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    K = np.atleast_2d(np.asarray(K, float))
    n = A.shape[0]
    n_s, n_d = S.num_rows, dist.num_rows
    big_A = np.block([[S.A, np.zeros((n_s, n))],
                      [np.zeros((n_d, n)), dist.D]])
    big_c = np.concatenate([np.ones(n_s), dist.delta * np.ones(n_d)])
    big_B = np.hstack([S.A @ (A + B @ K), S.A])
    return ContainmentProblem(A=big_A, c=big_c, B=big_B, d=np.ones(n_s))


def check_invariance_exact(A, B, K, S: HPolyhedron, dist: DisturbanceSet):
    """Exact invariance test for a fixed gain; no synthesis involved.

    Returns ``(holds, certificate)``: the multiplier matrix when invariance
    holds, None when it provably does not.
    """
    return solve_containment(invariance_problem(A, B, K, S, dist))


@dataclass
class ModelCheckFailure:
    model: np.ndarray              # the offending [A^ B^]
    state_vertex: np.ndarray | None
    disturbance_vertex: np.ndarray | None
    violation: float | None       # worst row excess of S x+ <= 1


@dataclass
class ModelCheckReport:
    mode: str
    models_checked: int
    failures: list[ModelCheckFailure] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return not self.failures


def _worst_vertex_pair(V, K, S, dist):
    """Worst (state vertex, disturbance vertex) for a failing model."""
    n = V.shape[0]
    F = V @ np.vstack([np.eye(n), K])
    try:
        sv = enumerate_vertices(S).vertices
        dv = dist.vertices().vertices
    except (UnboundedSetError, DimensionError):
        return None, None, None
    worst = (None, None, -np.inf)
    for x in sv:
        for d in dv:
            excess = float(np.max(S.A @ (F @ x + d) - 1.0))
            if excess > worst[2]:
                worst = (x, d, excess)
    return worst


def check_invariance_consistent_models(K, vt, S: HPolyhedron,
                                       dist: DisturbanceSet,
                                       mode: str = "vertices",
                                       num_samples: int = 100,
                                       seed: int = 0) -> ModelCheckReport:
    """Does the gain work for every model compatible with the data?

    ``vt`` is the consistency set (or an already enumerated vertex list).
    In "vertices" mode every vertex model is checked exactly, which needs a
    bounded set; in "samples" mode ``num_samples`` interior models drawn by
    hit-and-run are checked, a randomized smoke test for problems too large
    to enumerate.
    """
    K = np.atleast_2d(np.asarray(K, float))
    if isinstance(vt, VPolytope):
        if mode != "vertices":
            raise ValueError("an explicit vertex list only supports vertices mode")
        n = K.shape[1]
        m = K.shape[0]
        points = vt.vertices
        unvec = lambda v: v.reshape((n, n + m), order="F")
    elif isinstance(vt, ConsistencySet):
        n, m = vt.n, vt.m
        unvec = vt.unvec
        if mode == "vertices":
            if not is_bounded_general(vt.H):
                raise UnboundedSetError(
                    "vertex mode needs a bounded consistency set; "
                    "check data richness first")
            points = vt.vertices().vertices
        elif mode == "samples":
            if not is_bounded_general(vt.H):
                raise UnboundedSetError(
                    "sampling needs a bounded consistency set")
            points = sample_hit_and_run(vt.H, num_samples, seed)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    else:
        raise TypeError("vt must be a ConsistencySet or VPolytope")

    report = ModelCheckReport(mode=mode, models_checked=len(points))
    for v in points:
        V = unvec(np.asarray(v, float))
        holds, _ = check_invariance_exact(V[:, :n], V[:, n:], K, S, dist)
        if not holds:
            x, d, excess = _worst_vertex_pair(V, K, S, dist)
            report.failures.append(ModelCheckFailure(
                model=V, state_vertex=x, disturbance_vertex=d, violation=excess))
    return report


def simulate_closed_loop(A, B, K, x0, dist: DisturbanceSet, steps: int,
                         policy="vertex_random", seed: int = 0,
                         S: HPolyhedron | None = None,
                         tol: float = SIMULATION_TOL) -> Trajectory:
    """Roll out ``x+ = (A + B K) x + d`` under a disturbance policy.

    Policies: "zero"; "vertex_random" draws each step uniformly from the
    vertices of the disturbance set (the worst-case excitation used in all
    reported experiments); or a callable ``(step, x) -> d`` for adversarial
    tests.  Containment flags are computed against S when given.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    K = np.atleast_2d(np.asarray(K, float))
    x0 = np.asarray(x0, float).ravel()
    n = A.shape[0]
    F = A + B @ K
    if S is not None and not S.contains(x0, tol):
        warnings.warn("initial state is outside the target set; simulating anyway",
                      stacklevel=2)

    if callable(policy):
        draw = policy
    elif policy == "zero":
        draw = lambda k, x: np.zeros(n)
    elif policy == "vertex_random":
        verts = dist.vertices().vertices
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, verts.shape[0], size=steps)
        draw = lambda k, x: verts[idx[k]]
    else:
        raise ValueError(f"unknown policy {policy!r}")

    states = np.empty((steps + 1, n))
    dists = np.empty((steps, n))
    states[0] = x0
    x = x0
    for k in range(steps):
        d = np.asarray(draw(k, x), float).ravel()
        dists[k] = d
        x = F @ x + d
        states[k + 1] = x

    if S is None:
        contained = np.ones(steps + 1, dtype=bool)
    else:
        contained = S.contains_points(states, tol)
    exits = np.flatnonzero(~contained)
    first_exit = int(exits[0]) if exits.size else None
    return Trajectory(states=states, disturbances=dists,
                      contained=contained, first_exit_step=first_exit)


def replay(F, trajectory: Trajectory) -> np.ndarray:
    """Recompute the state sequence from the stored disturbances."""
    F = np.atleast_2d(np.asarray(F, float))
    states = np.empty_like(trajectory.states)
    states[0] = trajectory.states[0]
    x = states[0]
    for k in range(trajectory.steps):
        x = F @ x + trajectory.disturbances[k]
        states[k + 1] = x
    return states


def brute_force_invariance_oracle(F, S: HPolyhedron, dist: DisturbanceSet,
                                  tol: float = 1e-8, max_dim: int = 3) -> bool:
    """Vertex-pair enumeration oracle for one-step invariance.

    ``F x + d`` over the product of two polytopes attains the maximum of any
    linear functional at a vertex pair, so checking all pairs is exact.  Kept
    independent of the certificate machinery on purpose; restricted to tiny
    dimensions where enumeration is trivially cheap.
    """
    F = np.atleast_2d(np.asarray(F, float))
    if F.shape[0] > max_dim:
        raise DimensionError(f"oracle restricted to dimension <= {max_dim}")
    sv = enumerate_vertices(S).vertices
    dv = dist.vertices().vertices
    image = sv @ F.T  # rows F x
    for d in dv:
        if not np.all(S.A @ (image + d).T <= S.b[:, None] + tol):
            return False
    return True
