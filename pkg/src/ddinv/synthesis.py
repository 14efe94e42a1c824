"""Gain synthesis by linear programming.

Three equivalent routes to a state-feedback gain K making the polyhedral
state set ``{S x <= 1}`` robustly invariant against ``{D d <= delta 1}``:

* model-based: known (A, B); one multiplier matrix E certifies
  ``[S(A+BK)  S] = E blockdiag(S, D)`` with ``E (1; delta 1) <= 1``.
* data-driven: unknown (A, B); the state set is replaced by its vertices
  x^j and the model by the polyhedron of data-consistent pairs, giving per
  vertex the containment
  ``[S  ((x^j; K x^j)' kron S)] = E^j blockdiag(D, H_V)`` with
  ``E^j (delta 1; h_V) <= 1``, where ``H_V v <= h_V`` is the consistency
  polyhedron in stacked model coordinates.
* consistency-vertex: the consistency polyhedron is bounded and enumerated;
  each vertex model V^j gets the model-based condition with a shared K.

Everything is affine in (K, vec(E^j)); delta multiplies the multipliers, so
maximizing it is done by bisection, never inside one LP.
"""

from dataclasses import dataclass, field
import time

import numpy as np
import scipy.sparse as sp

from .dataset import (ConsistencySet, DisturbanceSet, ExperimentData,
                      build_consistency_set)
from .errors import (DimensionError, EmptySetError, ProblemTooLargeError,
                     SolverFailure, UnboundedSetError)
from .farkas import (CERT_TOL, CertificateReport, ContainmentProblem,
                     FarkasCertificate, verify_certificate)
from .lp import INFEASIBLE, OPTIMAL, LinearProgram, solve_lp
from .polyhedra import (HPolyhedron, VPolytope, check_nonempty,
                        enumerate_vertices, is_bounded_general)

FEASIBLE = "feasible"
INFEASIBLE_STATUS = "infeasible"
SOLVER_FAILURE = "solver_failure"

# Consistency systems with more than this many data columns are reduced to
# their minimal halfspace form before sizing the multipliers.
MINIMIZE_DEFAULT_T = 50


@dataclass
class SynthesisOptions:
    minimize_consistency: bool | None = None   # None: on for T > MINIMIZE_DEFAULT_T
    margin: bool = False                       # maximize common slack on the offsets
    certificate_tol: float = CERT_TOL
    variable_cap: int = 10_000_000
    scale_rows: bool = True
    solver_options: dict | None = None


@dataclass
class VertexCertificate:
    """Multiplier matrix attached to one enumerated vertex."""

    index: int
    E: np.ndarray


@dataclass
class SynthesisResult:
    status: str
    K: np.ndarray | None = None
    certificates: list[VertexCertificate] = field(default_factory=list)
    verification: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def _as_csr(M):
    return M if sp.issparse(M) else sp.csr_matrix(M)


def _scale_rows(A, b):
    """Normalize each constraint row of (A, b) to unit inf-norm on A."""
    A = A.tocsr() if sp.issparse(A) else np.asarray(A, float)
    if sp.issparse(A):
        mags = np.abs(A).max(axis=1).toarray().ravel()
    else:
        mags = np.abs(A).max(axis=1)
    s = 1.0 / np.where(mags > 0, mags, 1.0)
    if sp.issparse(A):
        A = sp.diags(s) @ A
    else:
        A = A * s[:, None]
    return A, b * s


def _vec(M):
    return np.asarray(M, float).flatten(order="F")


def _unvec(v, rows, cols):
    return np.asarray(v, float).reshape((rows, cols), order="F")


def model_condition_lhs(S_mat, A, B, K) -> np.ndarray:
    """[S(A + B K)  S] for a fixed gain; the left side of the model condition."""
    return np.hstack([S_mat @ (A + B @ K), S_mat])


def data_condition_lhs(S_mat, x_vertex, K) -> np.ndarray:
    """[S  ((x; K x)' kron S)] for a fixed gain at one state-set vertex."""
    row = np.concatenate([x_vertex, K @ x_vertex])
    return np.hstack([S_mat, np.kron(row[None, :], S_mat)])


def _model_blocks(S_mat, D_mat, delta, A_j, B_j):
    """Equality/inequality blocks of the model condition for one model.

    Variables are (vec(K), vec(E)).  Returns
    (K coefficient, E coefficient, equality rhs, E inequality, ineq rhs,
     system matrix, system offsets) where the last two feed certificate
    re-verification.
    """
    n_s, n = S_mat.shape
    n_d = D_mat.shape[0]
    m = B_j.shape[1]
    sys_mat = np.block([[S_mat, np.zeros((n_s, n))],
                        [np.zeros((n_d, n)), D_mat]])
    sys_off = np.concatenate([np.ones(n_s), delta * np.ones(n_d)])

    E_eq = sp.kron(sp.csr_matrix(sys_mat.T), sp.identity(n_s), format="csr")
    SB = S_mat @ B_j
    # K enters only the first n column blocks: vec(S B K) = (I_n kron S B) vec(K)
    K_eq = sp.vstack([
        sp.kron(sp.identity(n), sp.csr_matrix(SB), format="csr"),
        sp.csr_matrix((n * n_s, m * n)),
    ], format="csr")
    eq_rhs = np.concatenate([_vec(S_mat @ A_j), _vec(S_mat)])

    E_ineq = sp.kron(sp.csr_matrix(sys_off[None, :]), sp.identity(n_s), format="csr")
    ineq_rhs = np.ones(n_s)
    return K_eq, E_eq, eq_rhs, E_ineq, ineq_rhs, sys_mat, sys_off


def _data_blocks(S_mat, D_mat, delta, x_vertex, H_V, h_V, m):
    """Equality/inequality blocks of the data condition at one state vertex."""
    n_s, n = S_mat.shape
    n_d = D_mat.shape[0]
    sys_mat = sp.block_diag([sp.csr_matrix(D_mat), _as_csr(H_V)], format="csr")
    sys_off = np.concatenate([delta * np.ones(n_d), h_V])

    E_eq = sp.kron(sys_mat.T.tocsr(), sp.identity(n_s), format="csr")
    vecS = _vec(S_mat)
    # Constant part of the left side: the S block, then one scaled copy of
    # vec(S) per state coordinate; the input blocks carry the K unknowns.
    eq_rhs = np.concatenate([vecS, np.kron(x_vertex, vecS),
                             np.zeros(m * n * n_s)])
    rows, cols, vals = [], [], []
    base = (n + n * n) * n_s
    block = n * n_s
    seg = np.arange(block)
    for i in range(m):
        for k in range(n):
            rows.append(base + i * block + seg)
            cols.append(np.full(block, k * m + i))
            vals.append(x_vertex[k] * vecS)
    K_eq = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(eq_rhs.shape[0], m * n)).tocsr()

    E_ineq = sp.kron(sp.csr_matrix(sys_off[None, :]), sp.identity(n_s), format="csr")
    ineq_rhs = np.ones(n_s)
    return K_eq, E_eq, eq_rhs, E_ineq, ineq_rhs, sys_mat, sys_off


def _input_blocks(U_mat, S_mat, m):
    """Input-constraint block: E_u >= 0, U K = E_u S, E_u 1 <= 1."""
    n_u = U_mat.shape[0]
    n_s, n = S_mat.shape
    E_eq = sp.kron(sp.csr_matrix(S_mat.T), sp.identity(n_u), format="csr")
    K_eq = sp.kron(sp.identity(n), sp.csr_matrix(U_mat), format="csr")
    eq_rhs = np.zeros(n * n_u)
    E_ineq = sp.kron(np.ones((1, n_s)), sp.identity(n_u), format="csr")
    ineq_rhs = np.ones(n_u)
    return K_eq, E_eq, eq_rhs, E_ineq, ineq_rhs


def _assemble_and_solve(blocks, m, n, n_s, options, input_block=None):
    """Stack per-vertex blocks into one LP over (vec K, vec E^1, ...).

    ``blocks`` is a list of tuples from _model_blocks/_data_blocks.  Returns
    (status, K, [E^j], lp diagnostics).
    """
    opts = options or SynthesisOptions()
    num_K = m * n
    E_sizes = [blk[1].shape[1] for blk in blocks]
    num_vars = num_K + sum(E_sizes)
    extra = 0
    if input_block is not None:
        num_vars += input_block[1].shape[1]
    if opts.margin:
        num_vars += 1
    if num_vars > opts.variable_cap:
        raise ProblemTooLargeError(
            f"assembly refused: {num_vars} variables "
            f"({len(blocks)} vertex blocks of {E_sizes[0] if E_sizes else 0} "
            f"multiplier entries + {num_K} gain entries) exceed the cap "
            f"{opts.variable_cap}; raise SynthesisOptions.variable_cap to proceed")

    ncols = 1 + len(blocks) + (1 if input_block is not None else 0)
    eq_grid, ineq_grid = [], []
    eq_rhs_parts, ineq_rhs_parts = [], []
    for j, (K_eq, E_eq, eq_rhs, E_ineq, ineq_rhs, _, _) in enumerate(blocks):
        row = [None] * ncols
        row[0] = -K_eq
        row[1 + j] = E_eq
        eq_grid.append(row)
        eq_rhs_parts.append(eq_rhs)
        row = [None] * ncols
        if j == 0:
            # bmat cannot infer the width of an all-None column: the gain
            # never appears in inequalities, so pin its column explicitly.
            row[0] = sp.csr_matrix((E_ineq.shape[0], num_K))
        row[1 + j] = E_ineq
        ineq_grid.append(row)
        ineq_rhs_parts.append(ineq_rhs)
    if input_block is not None:
        K_eq, E_eq, eq_rhs, E_ineq, ineq_rhs = input_block
        row = [None] * ncols
        row[0] = -K_eq
        row[-1] = E_eq
        eq_grid.append(row)
        eq_rhs_parts.append(eq_rhs)
        row = [None] * ncols
        row[-1] = E_ineq
        ineq_grid.append(row)
        ineq_rhs_parts.append(ineq_rhs)

    A_eq = sp.bmat(eq_grid, format="csr")
    b_eq = np.concatenate(eq_rhs_parts)
    A_ub = sp.bmat(ineq_grid, format="csr")
    b_ub = np.concatenate(ineq_rhs_parts)

    objective = None
    if opts.margin:
        # slack variable t: offsets tighten to (1 - t); maximize t
        t_col = sp.csr_matrix(np.ones((A_ub.shape[0], 1)))
        A_ub = sp.hstack([A_ub, t_col], format="csr")
        A_eq = sp.hstack([A_eq, sp.csr_matrix((A_eq.shape[0], 1))], format="csr")
        cap = sp.csr_matrix(([1.0], ([0], [num_vars - 1])), shape=(1, num_vars))
        A_ub = sp.vstack([A_ub, cap], format="csr")
        b_ub = np.concatenate([b_ub, [1.0]])
        objective = np.zeros(num_vars)
        objective[-1] = -1.0

    if opts.scale_rows:
        A_eq, b_eq = _scale_rows(A_eq, b_eq)
        A_ub, b_ub = _scale_rows(A_ub, b_ub)

    nonneg = np.ones(num_vars, dtype=bool)
    nonneg[:num_K] = False

    lp = LinearProgram(num_vars=num_vars, objective=objective,
                       equalities=(A_eq, b_eq), inequalities=(A_ub, b_ub),
                       nonneg=nonneg)
    sol = solve_lp(lp, options=opts.solver_options)

    diag = {
        "num_vars": num_vars,
        "num_equalities": A_eq.shape[0],
        "num_inequalities": A_ub.shape[0],
        "nnz": int(A_eq.nnz + A_ub.nnz),
        "solve_seconds": sol.solve_seconds,
        "solver_message": sol.message,
    }
    if sol.status == INFEASIBLE:
        return INFEASIBLE_STATUS, None, None, None, diag
    if sol.status != OPTIMAL:
        return SOLVER_FAILURE, None, None, None, diag

    K = _unvec(sol.x[:num_K], m, n)
    Es, off = [], num_K
    for size, blk in zip(E_sizes, blocks):
        n_rows = blk[4].shape[0]  # one inequality row per multiplier row
        Es.append(_unvec(sol.x[off:off + size], n_rows, size // n_rows))
        off += size
    E_u = None
    if input_block is not None:
        size = input_block[1].shape[1]
        n_u = input_block[4].shape[0]
        E_u = _unvec(sol.x[off:off + size], n_u, size // n_u)
        off += size
    if opts.margin:
        diag["margin"] = float(sol.x[-1])
    return FEASIBLE, K, Es, E_u, diag


def _verify_blocks(blocks, Es, lhs_for_block, tol):
    """Re-check every vertex certificate by direct arithmetic."""
    reports = []
    for (blk, E, lhs) in zip(blocks, Es, lhs_for_block):
        sys_mat, sys_off = blk[5], blk[6]
        A_dense = sys_mat.toarray() if sp.issparse(sys_mat) else sys_mat
        prob = ContainmentProblem(A=A_dense, c=sys_off, B=lhs,
                                  d=np.ones(lhs.shape[0]))
        reports.append(verify_certificate(prob, FarkasCertificate(E), tol))
    return reports


def _finalize(status, K, Es, E_u, diag, blocks, lhs_builder, vertex_indices,
              options, config, input_data=None):
    opts = options or SynthesisOptions()
    result = SynthesisResult(status=status, diagnostics=diag, config=config)
    if status != FEASIBLE:
        return result
    result.K = K
    result.certificates = [VertexCertificate(idx, E)
                           for idx, E in zip(vertex_indices, Es)]
    lhs = [lhs_builder(j, K) for j in vertex_indices]
    reports = _verify_blocks(blocks, Es, lhs, opts.certificate_tol)
    passed = all(r.passed for r in reports)
    verification = {"passed": passed,
                    "reports": [r.as_dict() for r in reports]}
    if E_u is not None and input_data is not None:
        U_mat, S_mat = input_data
        prob = ContainmentProblem(A=S_mat, c=np.ones(S_mat.shape[0]),
                                  B=U_mat @ K, d=np.ones(U_mat.shape[0]))
        rep = verify_certificate(prob, FarkasCertificate(E_u), opts.certificate_tol)
        verification["input_report"] = rep.as_dict()
        verification["passed"] = passed and rep.passed
        result.diagnostics["input_multiplier"] = E_u
    result.verification = verification
    return result


def synthesize_model_based(A, B, S: HPolyhedron, dist: DisturbanceSet,
                           input_set: HPolyhedron | None = None,
                           options: SynthesisOptions | None = None) -> SynthesisResult:
    """Gain synthesis with a known model.

    Feasibility of the LP is necessary and sufficient for the existence of a
    linear gain making S robustly invariant for ``x+ = (A+BK)x + d``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    t0 = time.perf_counter()
    nonempty, _ = check_nonempty(S)
    if not nonempty:
        raise EmptySetError("state set is empty")
    m, n = B.shape[1], A.shape[0]
    blk = _model_blocks(S.A, dist.D, dist.delta, A, B)
    input_block = None
    input_data = None
    if input_set is not None:
        input_block = _input_blocks(input_set.A, S.A, m)
        input_data = (input_set.A, S.A)
    status, K, Es, E_u, diag = _assemble_and_solve([blk], m, n, S.num_rows,
                                                   options, input_block)
    diag["total_seconds"] = time.perf_counter() - t0
    config = {"formulation": "model", "delta": dist.delta, "n": n, "m": m,
              "input_constrained": input_set is not None}
    return _finalize(status, K, Es, E_u, diag, [blk],
                     lambda j, K_: model_condition_lhs(S.A, A, B, K_),
                     [0], options, config, input_data)


def synthesize_data_driven(data: ExperimentData, S: HPolyhedron,
                           dist: DisturbanceSet,
                           input_set: HPolyhedron | None = None,
                           options: SynthesisOptions | None = None,
                           consistency: ConsistencySet | None = None) -> SynthesisResult:
    """Gain synthesis directly from noisy data.

    Enumerates the vertices of the (bounded) state set and ties one
    multiplier matrix to each; all share the gain.  Feasibility is necessary
    and sufficient for a gain that works for every model consistent with the
    data, so infeasibility is an answer about the data, not a failure.

    A prebuilt ``consistency`` set may be passed to amortize the minimal-form
    reduction across repeated solves; it must match ``data`` and ``dist``.
    """
    opts = options or SynthesisOptions()
    t0 = time.perf_counter()
    nonempty, _ = check_nonempty(S)
    if not nonempty:
        raise EmptySetError("state set is empty")
    if not is_bounded_general(S):
        raise UnboundedSetError(
            "the state set must be bounded for vertex-based synthesis; "
            "it has a nontrivial recession cone")
    verts = enumerate_vertices(S, check_bounded=False)

    red_t0 = time.perf_counter()
    if consistency is None:
        minimize = opts.minimize_consistency
        if minimize is None:
            minimize = data.T > MINIMIZE_DEFAULT_T
        consistency = build_consistency_set(data, dist, minimize=bool(minimize))
    reduction_seconds = time.perf_counter() - red_t0
    nonempty, _ = check_nonempty(consistency.H)
    if not nonempty:
        raise EmptySetError(
            "no model is consistent with the data under the given disturbance "
            "bound; the bound is too small for these measurements")

    m, n, n_s = data.m, data.n, S.num_rows
    H_V, h_V = consistency.H.A, consistency.H.b
    blocks = [_data_blocks(S.A, dist.D, dist.delta, x, H_V, h_V, m)
              for x in verts.vertices]
    input_block = None
    input_data = None
    if input_set is not None:
        input_block = _input_blocks(input_set.A, S.A, m)
        input_data = (input_set.A, S.A)
    status, K, Es, E_u, diag = _assemble_and_solve(blocks, m, n, n_s,
                                                   options, input_block)
    diag["num_state_vertices"] = verts.num_vertices
    diag["consistency_rows"] = int(H_V.shape[0])
    diag["consistency_minimized"] = consistency.kept_rows is not None
    if consistency.kept_rows is not None:
        diag["consistency_row_map"] = consistency.kept_rows
    diag["reduction_seconds"] = reduction_seconds
    diag["total_seconds"] = time.perf_counter() - t0
    config = {"formulation": "data", "delta": dist.delta, "n": n, "m": m,
              "T": data.T, "input_constrained": input_set is not None}
    return _finalize(status, K, Es, E_u, diag, blocks,
                     lambda j, K_: data_condition_lhs(S.A, verts.vertices[j], K_),
                     list(range(verts.num_vertices)), options, config, input_data)


def synthesize_vertex_models(vt_vertices: VPolytope, n: int, m: int,
                             S: HPolyhedron, dist: DisturbanceSet,
                             input_set: HPolyhedron | None = None,
                             options: SynthesisOptions | None = None) -> SynthesisResult:
    """Gain synthesis over an enumerated, bounded consistency set.

    Each vertex of the consistency polyhedron unflattens to a model pair
    [A^ B^] that gets the model-based condition; the gain is shared.  With a
    single vertex this reduces to :func:`synthesize_model_based` exactly.
    """
    if vt_vertices.num_vertices < 1:
        raise EmptySetError("need at least one consistency-set vertex")
    if vt_vertices.dim != n * (n + m):
        raise DimensionError(
            f"consistency vertices have dimension {vt_vertices.dim}, "
            f"expected n(n+m) = {n * (n + m)}")
    t0 = time.perf_counter()
    nonempty, _ = check_nonempty(S)
    if not nonempty:
        raise EmptySetError("state set is empty")
    blocks = []
    models = []
    for v in vt_vertices.vertices:
        V = _unvec(v, n, n + m)
        models.append((V[:, :n], V[:, n:]))
        blocks.append(_model_blocks(S.A, dist.D, dist.delta, V[:, :n], V[:, n:]))
    input_block = None
    input_data = None
    if input_set is not None:
        input_block = _input_blocks(input_set.A, S.A, m)
        input_data = (input_set.A, S.A)
    status, K, Es, E_u, diag = _assemble_and_solve(blocks, m, n, S.num_rows,
                                                   options, input_block)
    diag["num_model_vertices"] = vt_vertices.num_vertices
    diag["total_seconds"] = time.perf_counter() - t0
    config = {"formulation": "vertex", "delta": dist.delta, "n": n, "m": m,
              "num_model_vertices": vt_vertices.num_vertices,
              "input_constrained": input_set is not None}
    return _finalize(status, K, Es, E_u, diag, blocks,
                     lambda j, K_: model_condition_lhs(S.A, models[j][0],
                                                       models[j][1], K_),
                     list(range(vt_vertices.num_vertices)), options, config,
                     input_data)


@dataclass
class BisectionResult:
    delta_star: float | None
    result: SynthesisResult
    probes: list  # (delta, status) in evaluation order


def max_delta_bisection(problem, delta_lo: float, delta_hi: float,
                        abs_tol: float) -> BisectionResult:
    """Largest feasible disturbance level by bisection.

    ``problem(delta)`` must return a SynthesisResult; feasibility is assumed
    monotone (shrinking delta shrinks the disturbance set).  Starts from a
    feasible ``delta_lo``; if it is infeasible that is reported as the answer
    (delta_star None).  Solver failures abort the search.
    """
    probes = []

    def probe(d):
        res = problem(d)
        probes.append((d, res.status))
        if res.status == SOLVER_FAILURE:
            raise SolverFailure(f"synthesis at delta={d} failed: "
                                f"{res.diagnostics.get('solver_message', '')}")
        return res

    res_lo = probe(delta_lo)
    if not res_lo.feasible:
        return BisectionResult(None, res_lo, probes)
    if delta_hi <= delta_lo:
        return BisectionResult(delta_lo, res_lo, probes)
    res_hi = probe(delta_hi)
    if res_hi.feasible:
        return BisectionResult(delta_hi, res_hi, probes)
    lo, hi = delta_lo, delta_hi
    best = res_lo
    while hi - lo > abs_tol:
        mid = 0.5 * (lo + hi)
        res_mid = probe(mid)
        if res_mid.feasible:
            lo, best = mid, res_mid
        else:
            hi = mid
    return BisectionResult(lo, best, probes)
