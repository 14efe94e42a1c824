"""Experiment data and the set of models consistent with it.

An open-loop experiment on ``x+ = A x + B u + d`` yields input columns U0,
state columns X0 and shifted states X1 with ``X1 = A X0 + B U0 + D0``.  The
disturbance columns D0 are never observed; only a bound ``D d <= delta 1`` is
known.  Every pair ``V = [A^ B^]`` that could have produced the data under
that bound forms a polyhedron in the stacked coordinates vec(V): one block of
``n_d`` rows per data column,

    -(w_i' kron D) vec(V) <= delta 1 - D x1_i,       w_i = (x0_i, u_i),

using vec(D V w) = (w' kron D) vec(V) with column-stacking vec.  Synthesis
consumes this polyhedron; everything here is the bookkeeping to build it
correctly and to diagnose when it is bounded (rich data).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UnboundedSetError
from .polyhedra import (HPolyhedron, TwoSidedPolyhedron, VPolytope,
                        enumerate_vertices, numerical_rank, remove_redundant,
                        RANK_REL_TOL)


@dataclass(frozen=True)
class ExperimentData:
    """Input/state data matrices of one experiment, columns indexed by time.

    ``D0`` holds the true disturbance columns when the data were simulated;
    it is diagnostic metadata only and is never consumed by synthesis.
    """

    U0: np.ndarray
    X0: np.ndarray
    X1: np.ndarray
    D0: np.ndarray | None = None

    def __post_init__(self):
        U0 = np.atleast_2d(np.asarray(self.U0, float))
        X0 = np.atleast_2d(np.asarray(self.X0, float))
        X1 = np.atleast_2d(np.asarray(self.X1, float))
        T = U0.shape[1]
        if X0.shape[1] != T or X1.shape[1] != T:
            raise DimensionError("U0, X0, X1 must share the column count T")
        if X0.shape[0] != X1.shape[0]:
            raise DimensionError("X0 and X1 must share the row count n")
        if T < 1:
            raise DimensionError("need at least one data column")
        object.__setattr__(self, "U0", U0)
        object.__setattr__(self, "X0", X0)
        object.__setattr__(self, "X1", X1)
        if self.D0 is not None:
            D0 = np.atleast_2d(np.asarray(self.D0, float))
            if D0.shape != X0.shape:
                raise DimensionError("D0 must match X0 in shape")
            object.__setattr__(self, "D0", D0)

    @property
    def n(self) -> int:
        return self.X0.shape[0]

    @property
    def m(self) -> int:
        return self.U0.shape[0]

    @property
    def T(self) -> int:
        return self.U0.shape[1]

    def truncated(self, T: int) -> "ExperimentData":
        """The prefix of the experiment with the first T columns."""
        if not 1 <= T <= self.T:
            raise DimensionError(f"T must be in [1, {self.T}]")
        D0 = None if self.D0 is None else self.D0[:, :T]
        return ExperimentData(self.U0[:, :T], self.X0[:, :T], self.X1[:, :T], D0)


@dataclass(frozen=True)
class DisturbanceSet:
    """Disturbance bound ``{d : D d <= delta 1}``."""

    D: np.ndarray
    delta: float

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, float))
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "delta", float(self.delta))
        if self.delta < 0:
            raise DimensionError("delta must be nonnegative")

    @property
    def n(self) -> int:
        return self.D.shape[1]

    @property
    def num_rows(self) -> int:
        return self.D.shape[0]

    def to_halfspaces(self) -> HPolyhedron:
        return HPolyhedron(self.D, self.delta * np.ones(self.num_rows))

    def contains(self, d, tol: float = 1e-8) -> bool:
        return self.to_halfspaces().contains(d, tol)

    def vertices(self) -> VPolytope:
        return enumerate_vertices(self.to_halfspaces())

    def scaled(self, delta: float) -> "DisturbanceSet":
        return DisturbanceSet(self.D, delta)


@dataclass(frozen=True)
class IntervalDisturbanceSet:
    """Two-sided bound ``{d : delta d_lower <= Dhat d <= delta d_upper}``.

    ``d_lower < 0 < d_upper`` entrywise, so the origin is interior whenever
    delta > 0 and the rank test of the boundedness lemma applies directly.
    """

    Dhat: np.ndarray
    d_lower: np.ndarray
    d_upper: np.ndarray
    delta: float

    def __post_init__(self):
        Dhat = np.atleast_2d(np.asarray(self.Dhat, float))
        lo = np.asarray(self.d_lower, float).ravel()
        hi = np.asarray(self.d_upper, float).ravel()
        if lo.shape[0] != Dhat.shape[0] or hi.shape[0] != Dhat.shape[0]:
            raise DimensionError("interval bounds must match the rows of Dhat")
        if np.any(lo >= 0) or np.any(hi <= 0):
            raise DimensionError("need d_lower < 0 < d_upper entrywise")
        object.__setattr__(self, "Dhat", Dhat)
        object.__setattr__(self, "d_lower", lo)
        object.__setattr__(self, "d_upper", hi)
        object.__setattr__(self, "delta", float(self.delta))
        if self.delta < 0:
            raise DimensionError("delta must be nonnegative")

    @property
    def n(self) -> int:
        return self.Dhat.shape[1]

    def to_two_sided(self) -> TwoSidedPolyhedron:
        return TwoSidedPolyhedron(self.Dhat, self.delta * self.d_lower,
                                  self.delta * self.d_upper)

    def to_disturbance_set(self) -> DisturbanceSet:
        """Rewrite as a one-sided set ``{d : D~ d <= delta 1}``.

        Row i of Dhat splits into Dhat_i / d_upper_i and Dhat_i / d_lower_i
        (the latter flips sign since d_lower_i < 0), which normalizes both
        offsets to delta.
        """
        upper_rows = self.Dhat / self.d_upper[:, None]
        lower_rows = self.Dhat / self.d_lower[:, None]
        return DisturbanceSet(np.vstack([upper_rows, lower_rows]), self.delta)

    @staticmethod
    def box(n: int, delta: float) -> "IntervalDisturbanceSet":
        """Componentwise interval ``|d_k| <= delta``."""
        return IntervalDisturbanceSet(np.eye(n), -np.ones(n), np.ones(n), delta)


def simulate_experiment(A, B, x0, inputs, disturbances) -> ExperimentData:
    """Roll the system forward and organize the data matrices.

    Column k of X1 is exactly ``A x_k + B u_k + d_k`` and column k+1 of X0
    equals column k of X1, so the data relation holds by construction.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    x0 = np.asarray(x0, float).ravel()
    U = np.atleast_2d(np.asarray(inputs, float))
    D = np.atleast_2d(np.asarray(disturbances, float))
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionError("A must be square")
    if B.shape[0] != n:
        raise DimensionError("B must have as many rows as A")
    if x0.shape[0] != n:
        raise DimensionError("x0 must have length n")
    if U.shape[0] != B.shape[1]:
        raise DimensionError("inputs must have m rows")
    if D.shape[0] != n or D.shape[1] != U.shape[1]:
        raise DimensionError("disturbances must be n x T")
    T = U.shape[1]
    X0 = np.empty((n, T))
    X1 = np.empty((n, T))
    x = x0
    for k in range(T):
        X0[:, k] = x
        x = A @ x + B @ U[:, k] + D[:, k]
        X1[:, k] = x
    return ExperimentData(U0=U, X0=X0, X1=X1, D0=D)


def assemble_W0(data: ExperimentData) -> np.ndarray:
    """State rows stacked over input rows, one column per data point."""
    return np.vstack([data.X0, data.U0])


def richness_check(data: ExperimentData,
                   rank_rel_tol: float = RANK_REL_TOL):
    """Does the stacked data matrix have full row rank n+m?

    Full row rank is the "rich data" condition: it is what persistently
    exciting inputs buy, and together with a full-column-rank disturbance
    matrix it makes the consistency set bounded.  Returns (bool, rank).
    """
    rank = numerical_rank(assemble_W0(data), rank_rel_tol)
    return rank == data.n + data.m, rank


@dataclass(frozen=True)
class ConsistencySet:
    """Polyhedron of data-consistent model pairs in vec coordinates.

    ``H`` lives in R^(n(n+m)); the point vec([A^ B^]) stacks the columns of
    the horizontal concatenation.  Row block i (size n_d, or the kept subset
    after minimization) comes from data column i.
    """

    H: HPolyhedron
    n: int
    m: int
    T: int
    delta: float
    kept_rows: np.ndarray | None = None  # row map into the unminimized system

    @property
    def vec_dim(self) -> int:
        return self.n * (self.n + self.m)

    def vec(self, V) -> np.ndarray:
        V = np.atleast_2d(np.asarray(V, float))
        if V.shape != (self.n, self.n + self.m):
            raise DimensionError(f"model must be {self.n} x {self.n + self.m}")
        return V.flatten(order="F")

    def unvec(self, v) -> np.ndarray:
        v = np.asarray(v, float).ravel()
        if v.shape[0] != self.vec_dim:
            raise DimensionError(f"vector must have length {self.vec_dim}")
        return v.reshape((self.n, self.n + self.m), order="F")

    def contains_model(self, V, tol: float = 1e-8) -> bool:
        return self.H.contains(self.vec(V), tol)

    def vertices(self, **kwargs) -> VPolytope:
        return enumerate_vertices(self.H, **kwargs)


def consistency_rows(data: ExperimentData, dist: DisturbanceSet):
    """The raw constraint system of the consistency set.

    Returns ``(H, h)`` with one block of dist rows per data column, ordered
    by data column (block i first, then i+1, ...).
    """
    if dist.n != data.n:
        raise DimensionError("disturbance set dimension must equal the state dimension")
    W0 = assemble_W0(data)
    H = -np.kron(W0.T, dist.D)
    rhs = dist.delta - dist.D @ data.X1            # (n_d, T), column i = block i
    h = rhs.flatten(order="F")
    return H, h


def build_consistency_set(data: ExperimentData, dist: DisturbanceSet,
                          minimize: bool = False) -> ConsistencySet:
    """Assemble the consistency polyhedron, optionally in minimal form.

    With ``minimize`` the redundant rows are dropped (their LP test is exact)
    and ``kept_rows`` maps the surviving rows back to the block ordering, so
    multiplier certificates indexed against the reduced system remain
    interpretable.
    """
    H, h = consistency_rows(data, dist)
    P = HPolyhedron(H, h)
    kept = None
    if minimize:
        P, kept = remove_redundant(P)
    return ConsistencySet(H=P, n=data.n, m=data.m, T=data.T,
                          delta=dist.delta, kept_rows=kept)


def consistency_bounded(data: ExperimentData,
                        dist: IntervalDisturbanceSet,
                        rank_rel_tol: float = RANK_REL_TOL) -> bool:
    """Exact boundedness test for the consistency set under interval bounds.

    The stacked constraint matrix is W0' kron Dhat up to sign, whose rank is
    the product of the factor ranks; the set is therefore bounded exactly
    when W0 has full row rank and Dhat has full column rank.
    """
    if dist.n != data.n:
        raise DimensionError("disturbance set dimension must equal the state dimension")
    rich, _ = richness_check(data, rank_rel_tol)
    dhat_full = numerical_rank(dist.Dhat, rank_rel_tol) == data.n
    return rich and dhat_full


def random_inputs(m: int, T: int, input_range, seed: int) -> np.ndarray:
    """Uniform i.i.d. input matrix, entries in [lo, hi].

    A scalar range r means [-r, r].  The PCG64 generator seeded here is the
    reproducibility contract: same seed, same matrix.
    """
    lo, hi = (-input_range, input_range) if np.isscalar(input_range) else input_range
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(m, T))


def random_box_disturbances(n: int, delta: float, T: int, seed: int) -> np.ndarray:
    """Uniform disturbance columns with every component in [-delta, delta]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-delta, delta, size=(n, T))


def random_vertex_disturbances(dist: DisturbanceSet, T: int, seed: int) -> np.ndarray:
    """Disturbance columns drawn uniformly from the vertices of the bound set.

    This is the worst-case excitation used in the closed-loop experiments.
    Unbounded disturbance sets are refused (no vertex representation).
    """
    try:
        verts = dist.vertices()
    except UnboundedSetError:
        raise UnboundedSetError(
            "vertex disturbances need a bounded disturbance set") from None
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, verts.num_vertices, size=T)
    return verts.vertices[idx].T
