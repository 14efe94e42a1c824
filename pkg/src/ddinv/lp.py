"""Thin linear-program layer over scipy's HiGHS backend.

Every optimization problem in this package is funnelled through
:class:`LinearProgram` so the solver choice stays in one place.  Variables are
either free or nonnegative; constraints are a block of equalities and a block
of inequalities (row-major, ``A x <= b``).  Matrices may be dense ndarrays or
scipy sparse matrices; large synthesis problems are assembled sparse.
"""

from dataclasses import dataclass, field
import time

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import DimensionError, SolverFailure

# Statuses a solve can end in.  UNBOUNDED only occurs with a nonzero
# objective; feasibility problems come back OPTIMAL or INFEASIBLE.
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILURE = "failure"

_SCIPY_STATUS = {0: OPTIMAL, 1: FAILURE, 2: INFEASIBLE, 3: UNBOUNDED, 4: FAILURE}

# HiGHS default feasibility tolerance (1e-7) is looser than the certificate
# checks downstream; tighten it so returned multipliers verify at 1e-6.
DEFAULT_SOLVER_OPTIONS = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


def _num_cols(M):
    return M.shape[1]


@dataclass
class LinearProgram:
    """A linear program in the fixed form

        min  c' x
        s.t. A_eq x == b_eq
             A_ub x <= b_ub
             x_i >= 0 for i with nonneg[i], x_i free otherwise.

    ``objective=None`` means pure feasibility (c = 0).
    """

    num_vars: int
    objective: np.ndarray | None = None
    equalities: tuple | None = None    # (A_eq, b_eq)
    inequalities: tuple | None = None  # (A_ub, b_ub)
    nonneg: np.ndarray | None = None   # bool mask, len num_vars; None = all free

    def __post_init__(self):
        if self.num_vars < 1:
            raise DimensionError("LinearProgram needs at least one variable")
        for name, block in (("equalities", self.equalities),
                            ("inequalities", self.inequalities)):
            if block is None:
                continue
            M, v = block
            if _num_cols(M) != self.num_vars:
                raise DimensionError(
                    f"{name} matrix has {_num_cols(M)} columns, "
                    f"expected {self.num_vars}")
            if M.shape[0] != np.asarray(v).shape[0]:
                raise DimensionError(f"{name} matrix/vector row mismatch")
        if self.objective is not None and len(self.objective) != self.num_vars:
            raise DimensionError("objective length does not match num_vars")
        if self.nonneg is not None and len(self.nonneg) != self.num_vars:
            raise DimensionError("nonneg mask length does not match num_vars")

    @property
    def num_equalities(self):
        return 0 if self.equalities is None else self.equalities[0].shape[0]

    @property
    def num_inequalities(self):
        return 0 if self.inequalities is None else self.inequalities[0].shape[0]


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None
    objective_value: float | None
    message: str
    solve_seconds: float
    dual_ray: np.ndarray | None = None  # backend does not currently supply one

    @property
    def feasible(self):
        return self.status == OPTIMAL


def solve_lp(lp: LinearProgram, options: dict | None = None) -> LPSolution:
    """Solve ``lp`` with HiGHS.  Infeasibility is an answer, not an error;
    numerical breakdown raises :class:`SolverFailure` only when
    ``raise_on_failure`` callers ask (they inspect the status instead)."""
    c = np.zeros(lp.num_vars) if lp.objective is None else np.asarray(lp.objective, float)
    A_eq = b_eq = A_ub = b_ub = None
    if lp.equalities is not None:
        A_eq, b_eq = lp.equalities
        b_eq = np.asarray(b_eq, float).ravel()
    if lp.inequalities is not None:
        A_ub, b_ub = lp.inequalities
        b_ub = np.asarray(b_ub, float).ravel()

    if lp.nonneg is None:
        bounds = (None, None)
    else:
        lo = np.where(np.asarray(lp.nonneg, bool), 0.0, -np.inf)
        hi = np.full(lp.num_vars, np.inf)
        bounds = np.column_stack([lo, hi])

    opts = dict(DEFAULT_SOLVER_OPTIONS)
    if options:
        opts.update(options)

    t0 = time.perf_counter()
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs", options=opts)
    dt = time.perf_counter() - t0

    status = _SCIPY_STATUS.get(res.status, FAILURE)
    x = np.asarray(res.x, float) if res.x is not None else None
    fun = float(res.fun) if res.fun is not None else None
    return LPSolution(status=status, x=x, objective_value=fun,
                      message=str(res.message), solve_seconds=dt)


def solve_lp_or_raise(lp: LinearProgram, options: dict | None = None) -> LPSolution:
    """Like :func:`solve_lp` but turns a backend FAILURE into an exception.

    INFEASIBLE and UNBOUNDED still come back as solutions.
    """
    sol = solve_lp(lp, options=options)
    if sol.status == FAILURE:
        raise SolverFailure(f"LP solver failed: {sol.message}")
    return sol


def feasibility_lp(A_ub, b_ub, A_eq=None, b_eq=None, nonneg=None) -> LinearProgram:
    """Convenience constructor for a pure feasibility problem."""
    n = _num_cols(A_ub) if A_ub is not None else _num_cols(A_eq)
    ineq = None if A_ub is None else (A_ub, b_ub)
    eq = None if A_eq is None else (A_eq, b_eq)
    return LinearProgram(num_vars=n, equalities=eq, inequalities=ineq, nonneg=nonneg)


def vstack_any(blocks):
    """Stack constraint blocks that may mix dense and sparse matrices."""
    if any(sp.issparse(B) for B in blocks):
        return sp.vstack([sp.csr_matrix(B) for B in blocks], format="csr")
    return np.vstack(blocks)
