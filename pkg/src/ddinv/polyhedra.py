"""Polyhedra in halfspace and vertex form.

The whole toolkit works with convex polyhedra ``{x : A x <= b}``.  This module
provides the primitive geometry: membership, emptiness, boundedness (via the
recession cone, or via a rank test for two-sided constraint sets), exhaustive
vertex enumeration for low dimensions, and removal of redundant halfspaces.

Vertex enumeration is deliberately the combinatorial active-set method: every
n-subset of rows is solved and filtered by feasibility.  Cost is C(m, n) small
linear solves, which is the right trade for the low-dimensional sets handled
here; the dimension cap exists so misuse fails loudly instead of hanging.
"""

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

from .errors import (DimensionError, EmptySetError, SolverFailure,
                     UnboundedSetError)
from .lp import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram,
                 solve_lp, solve_lp_or_raise)

# Default tolerances; every operation takes them as keyword overrides.
MEMBERSHIP_TOL = 1e-8       # absolute slack allowed on A x <= b
RANK_REL_TOL = 1e-9         # singular values below tol * sigma_max count as 0
VERTEX_DEDUP_TOL = 1e-7     # inf-norm merge radius for enumerated vertices
REDUNDANCY_TOL = 1e-9       # strictness margin for the per-row LP test

# Practical caps for the combinatorial enumeration.
MAX_ENUM_DIM = 10
MAX_ENUM_SUBSETS = 5_000_000


@dataclass(frozen=True)
class HPolyhedron:
    """Halfspace representation ``{x in R^n : A x <= b}``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionError("A must be a nonempty m x n matrix")
        if b.shape[0] != A.shape[0]:
            raise DimensionError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return contains(self, x, tol)

    def contains_points(self, X, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        """Vectorized membership for points stacked as rows of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionError(f"points have dim {X.shape[1]}, set has {self.dim}")
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    @staticmethod
    def box(lower, upper) -> "HPolyhedron":
        """Axis-aligned box {lower <= x <= upper}."""
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        n = lower.size
        I = np.eye(n)
        return HPolyhedron(np.vstack([I, -I]), np.concatenate([upper, -lower]))

    @staticmethod
    def unit_box(n: int) -> "HPolyhedron":
        return HPolyhedron.box(-np.ones(n), np.ones(n))


@dataclass(frozen=True)
class TwoSidedPolyhedron:
    """Two-sided form ``{x : b_lower <= A x <= b_upper}``."""

    A: np.ndarray
    b_lower: np.ndarray
    b_upper: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        lo = np.asarray(self.b_lower, dtype=float).ravel()
        hi = np.asarray(self.b_upper, dtype=float).ravel()
        if lo.shape[0] != A.shape[0] or hi.shape[0] != A.shape[0]:
            raise DimensionError("bound vectors must match the row count of A")
        if np.any(lo > hi):
            raise DimensionError("b_lower must be <= b_upper componentwise")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b_lower", lo)
        object.__setattr__(self, "b_upper", hi)

    def to_halfspaces(self) -> HPolyhedron:
        """Lossless conversion to a one-sided system with 2m rows."""
        return HPolyhedron(np.vstack([self.A, -self.A]),
                           np.concatenate([self.b_upper, -self.b_lower]))


@dataclass(frozen=True)
class VPolytope:
    """A bounded polyhedron given by its vertex list (one vertex per row)."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.shape[0] < 1:
            raise DimensionError("vertex list must be nonempty")
        object.__setattr__(self, "vertices", V)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


def contains(P: HPolyhedron, x, tol: float = MEMBERSHIP_TOL) -> bool:
    """True iff ``A x <= b + tol`` componentwise."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != P.dim:
        raise DimensionError(f"point has dim {x.shape[0]}, set has {P.dim}")
    return bool(np.all(P.A @ x <= P.b + tol))


def numerical_rank(M, rel_tol: float = RANK_REL_TOL) -> int:
    """Rank with singular values below ``rel_tol * sigma_max`` counted as zero."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def check_nonempty(P: HPolyhedron, tol: float = MEMBERSHIP_TOL):
    """LP feasibility test.  Returns ``(True, witness)`` or ``(False, None)``.

    Backend failures raise :class:`SolverFailure` so they cannot be mistaken
    for a clean "empty" answer.
    """
    lp = LinearProgram(num_vars=P.dim, inequalities=(P.A, P.b))
    sol = solve_lp(lp)
    if sol.status == OPTIMAL:
        witness = sol.x
        if not contains(P, witness, tol):
            # HiGHS met its own tolerance but not ours; polish by pulling the
            # point toward the Chebyshev center.
            center, radius = chebyshev_center(P)
            if radius >= 0 and contains(P, center, tol):
                witness = center
        return True, witness
    if sol.status == INFEASIBLE:
        return False, None
    raise SolverFailure(f"nonemptiness LP did not resolve: {sol.message}")


def chebyshev_center(P: HPolyhedron, radius_cap: float = 1e6):
    """Center and radius of a largest inscribed ball.

    Radius is capped so unbounded sets still yield an interior point.  Returns
    ``(center, radius)``; radius < 0 signals an empty set.
    """
    row_norms = np.linalg.norm(P.A, axis=1)
    A_lp = np.hstack([P.A, row_norms[:, None]])
    c = np.zeros(P.dim + 1)
    c[-1] = -1.0
    A_cap = np.zeros((1, P.dim + 1))
    A_cap[0, -1] = 1.0
    lp = LinearProgram(num_vars=P.dim + 1, objective=c,
                       inequalities=(np.vstack([A_lp, A_cap]),
                                     np.concatenate([P.b, [radius_cap]])))
    sol = solve_lp(lp)
    if sol.status == INFEASIBLE:
        return np.full(P.dim, np.nan), -np.inf
    if sol.status != OPTIMAL:
        raise SolverFailure(f"Chebyshev-center LP did not resolve: {sol.message}")
    return sol.x[:-1], float(sol.x[-1])


def is_bounded_two_sided(P: TwoSidedPolyhedron,
                         rank_rel_tol: float = RANK_REL_TOL) -> bool:
    """Boundedness of a nonempty two-sided polyhedron.

    Equivalent to A having full column rank: any kernel direction can be added
    to a member without changing A x, so a nontrivial kernel gives unbounded
    rays, while full column rank lets a left inverse bound x by the bounds on
    A x.  Nonemptiness is the caller's precondition (see check_nonempty).
    """
    return numerical_rank(P.A, rank_rel_tol) == P.A.shape[1]


def is_bounded_general(P: HPolyhedron, tol: float = 1e-9) -> bool:
    """Boundedness of a nonempty polyhedron in one-sided form.

    Decided on the recession cone {z : A z <= 0}: the set is bounded iff the
    cone is trivial.  Each coordinate is probed in both signs by an LP over
    the cone intersected with the unit sup-norm box.
    """
    n = P.dim
    I = np.eye(n)
    A_cone = np.vstack([P.A, I, -I])  # recession cone cut with |z|_inf <= 1
    b_cone = np.concatenate([np.zeros(P.num_rows), np.ones(2 * n)])
    for k in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[k] = -sign  # maximize sign * z_k
            sol = solve_lp(LinearProgram(num_vars=n, objective=c,
                                         inequalities=(A_cone, b_cone)))
            if sol.status != OPTIMAL:
                raise SolverFailure(
                    f"recession-cone LP failed for coordinate {k}: {sol.message}")
            if -sol.objective_value > tol:
                return False
    return True


def _combinations_array(m: int, n: int) -> np.ndarray:
    return np.array(list(combinations(range(m), n)), dtype=int)


def enumerate_vertices(P: HPolyhedron,
                       tol: float = MEMBERSHIP_TOL,
                       dedup_tol: float = VERTEX_DEDUP_TOL,
                       max_dim: int = MAX_ENUM_DIM,
                       max_subsets: int = MAX_ENUM_SUBSETS,
                       check_bounded: bool = True) -> VPolytope:
    """All vertices of a bounded nonempty polyhedron.

    Active-set enumeration: every n-subset of rows with independent normals is
    solved for its intersection point, and points satisfying the remaining
    inequalities are vertices.  Points within ``dedup_tol`` (inf-norm) merge,
    since degenerate vertices are revisited by many subsets.

    Cost is C(m, n) batched n-by-n solves; inputs beyond ``max_dim`` or
    ``max_subsets`` are refused with the cap spelled out.
    """
    m, n = P.A.shape
    if n > max_dim:
        raise DimensionError(
            f"vertex enumeration is combinatorial and capped at dimension "
            f"{max_dim}; got n={n}. Raise max_dim only if C(m, n) stays small.")
    n_subsets = math.comb(m, n)
    if n_subsets > max_subsets:
        raise DimensionError(
            f"vertex enumeration over C({m}, {n}) = {n_subsets} row subsets "
            f"exceeds the cap {max_subsets}")
    nonempty, _ = check_nonempty(P, tol)
    if not nonempty:
        raise EmptySetError("cannot enumerate vertices of an empty set")
    if check_bounded and not is_bounded_general(P):
        raise UnboundedSetError("vertex enumeration requires a bounded set")

    subs = _combinations_array(m, n)
    A_sub = P.A[subs]                    # (n_subsets, n, n)
    b_sub = P.b[subs]                    # (n_subsets, n)

    # Keep only subsets whose normals are independent (smallest singular
    # value above the relative rank tolerance).
    sv = np.linalg.svd(A_sub, compute_uv=False)
    good = sv[:, -1] > RANK_REL_TOL * np.maximum(sv[:, 0], 1e-300)
    if not np.any(good):
        raise EmptySetError("no nondegenerate active set found")
    X = np.linalg.solve(A_sub[good], b_sub[good][..., None])[..., 0]

    feas = np.all(X @ P.A.T <= P.b + tol, axis=1)
    candidates = X[feas]
    if candidates.shape[0] == 0:
        raise EmptySetError("no feasible basic point found; set may be degenerate")

    kept: list[np.ndarray] = []
    for x in candidates:
        if all(np.max(np.abs(x - y)) > dedup_tol for y in kept):
            kept.append(x)
    return VPolytope(np.array(kept))


def _row_lp_max(A, b, c_row, cap_rhs, lp_options=None):
    """max c_row . x subject to A x <= b plus the row's own relaxed cap."""
    lp = LinearProgram(num_vars=A.shape[1], objective=-c_row,
                       inequalities=(np.vstack([A, c_row[None, :]]),
                                     np.concatenate([b, [cap_rhs]])))
    sol = solve_lp(lp, options=lp_options)
    if sol.status == UNBOUNDED:
        return np.inf, None
    if sol.status != OPTIMAL:
        raise SolverFailure(f"redundancy LP did not resolve: {sol.message}")
    return -sol.objective_value, sol.x


def _remove_redundant_sequential(A, b, tol):
    m = A.shape[0]
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        keep[i] = False
        others = A[keep], b[keep]
        if others[0].shape[0] == 0:
            keep[i] = True  # last remaining row always stays
            continue
        try:
            val, _ = _row_lp_max(others[0], others[1], A[i], b[i] + 1.0)
        except SolverFailure as exc:
            raise SolverFailure(f"redundancy test failed on row {i}: {exc}") from exc
        if val > b[i] + tol:
            keep[i] = True  # other rows allow going past b_i: row i is needed
    return keep


def _remove_redundant_clarkson(A, b, tol, interior, max_rounds_factor=4):
    """Output-sensitive redundancy filter (Clarkson's algorithm).

    Each undecided row is tested against the current set of known-essential
    rows only.  A row redundant against that subset is redundant against the
    full system.  A violation instead locates, by shooting a ray from an
    interior point toward the violating optimizer, one essential row of the
    full system, which shrinks future tests.  A final sequential pass over
    the survivors enforces strict pairwise irredundancy.
    """
    m, n = A.shape
    essential: list[int] = []
    dropped = np.zeros(m, dtype=bool)
    queue = list(range(m))
    budget = max_rounds_factor * m + 16
    while queue and budget > 0:
        budget -= 1
        i = queue.pop(0)
        if dropped[i] or i in essential:
            continue
        if essential:
            sub = np.array(essential, dtype=int)
            val, xstar = _row_lp_max(A[sub], b[sub], A[i], b[i] + 1.0)
        else:
            val, xstar = np.inf, None
        if val <= b[i] + tol:
            dropped[i] = True
            continue
        if xstar is None:
            # Unbounded relaxation: fabricate a far point along the row normal.
            xstar = interior + A[i] / max(np.linalg.norm(A[i]), 1e-12) * 1e6
        # Ray from the interior point toward xstar: the first constraint hit
        # belongs to the boundary and is essential.
        d = xstar - interior
        Ad = A @ d
        slack = b - A @ interior
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(Ad > 1e-12, slack / Ad, np.inf)
        j = int(np.argmin(t))
        if not np.isfinite(t[j]):
            # Ray never exits: fall back to declaring row i essential.
            j = i
        if j in essential:
            j = i  # degenerate tie; row i itself is kept and re-verified below
        essential.append(j)
        if j != i:
            queue.append(i)
    if queue:  # budget exhausted; finish the stragglers conservatively
        for i in queue:
            if not dropped[i] and i not in essential:
                essential.append(i)

    keep = np.zeros(m, dtype=bool)
    keep[np.array(essential, dtype=int)] = True
    # Strictness pass over the (small) survivor set.
    idx = np.flatnonzero(keep)
    sub_keep = _remove_redundant_sequential(A[idx], b[idx], tol)
    keep[:] = False
    keep[idx[sub_keep]] = True
    return keep


def remove_redundant(P: HPolyhedron, tol: float = REDUNDANCY_TOL,
                     method: str = "auto"):
    """Minimal halfspace representation of a nonempty polyhedron.

    Returns ``(reduced, kept_row_indices)`` where ``reduced`` defines the same
    set and every kept row i is strictly irredundant: maximizing ``A_i x``
    over the other kept rows exceeds ``b_i``.

    ``method``: "sequential" tests every row against all others (m LPs over
    up to m rows); "clarkson" is the output-sensitive variant, much faster
    when few rows are essential, and is the default above 400 rows whenever a
    strictly interior point exists.
    """
    m = P.num_rows
    if method not in ("auto", "sequential", "clarkson"):
        raise ValueError(f"unknown method {method!r}")
    use_clarkson = method == "clarkson" or (method == "auto" and m > 400)
    if use_clarkson:
        center, radius = chebyshev_center(P)
        if radius == -np.inf:
            raise EmptySetError("cannot reduce an empty polyhedron")
        if radius > 1e-9:
            keep = _remove_redundant_clarkson(P.A, P.b, tol, center)
            kept_idx = np.flatnonzero(keep)
            return HPolyhedron(P.A[kept_idx], P.b[kept_idx]), kept_idx
        # No interior: fall through to the sequential test.
    nonempty, _ = check_nonempty(P)
    if not nonempty:
        raise EmptySetError("cannot reduce an empty polyhedron")
    keep = _remove_redundant_sequential(P.A, P.b, tol)
    kept_idx = np.flatnonzero(keep)
    return HPolyhedron(P.A[kept_idx], P.b[kept_idx]), kept_idx


def sample_hit_and_run(P: HPolyhedron, count: int, seed: int,
                       burn_in: int = 100, thin: int = 5,
                       start: np.ndarray | None = None) -> np.ndarray:
    """Approximately uniform interior samples of a bounded polyhedron.

    Classic hit-and-run walk: from the current point pick a uniform random
    direction, intersect the chord with the polyhedron, jump uniformly on it.
    Requires a strictly interior starting point (defaults to the Chebyshev
    center).  Returns ``count`` points stacked as rows.
    """
    rng = np.random.default_rng(seed)
    if start is None:
        start, radius = chebyshev_center(P)
        if radius <= 0:
            raise EmptySetError("hit-and-run needs a full-dimensional set")
    x = np.asarray(start, dtype=float).copy()
    A, b = P.A, P.b
    out = np.empty((count, P.dim))
    kept = 0
    step = 0
    while kept < count:
        d = rng.standard_normal(P.dim)
        d /= np.linalg.norm(d)
        Ad = A @ d
        slack = b - A @ x
        with np.errstate(divide="ignore", invalid="ignore"):
            hi = np.where(Ad > 1e-14, slack / Ad, np.inf).min()
            lo = np.where(Ad < -1e-14, slack / Ad, -np.inf).max()
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise UnboundedSetError("hit-and-run chord is unbounded")
        if hi > lo:
            x = x + rng.uniform(lo, hi) * d
        step += 1
        if step > burn_in and step % thin == 0:
            out[kept] = x
            kept += 1
    return out


def sample_vertex_mixture(V: VPolytope, count: int, seed: int) -> np.ndarray:
    """Random convex combinations of the vertex list (Dirichlet weights)."""
    rng = np.random.default_rng(seed)
    W = rng.dirichlet(np.ones(V.num_vertices), size=count)
    return W @ V.vertices
