"""Polyhedron-in-polyhedron containment certificates.

For nonempty ``{x : A x <= c}``, the implication "B x <= d for every such x"
holds exactly when a nonnegative multiplier matrix E exists with ``B = E A``
and ``E c <= d``.  E is the certificate: each row of B is exhibited as a
nonnegative combination of rows of A whose combined offsets stay below d.
Finding E is a linear program; checking a given E is three lines of matrix
arithmetic, independent of any solver.

The degenerate alternative (a nonnegative e with ``e'A = 0`` and ``e'c < 0``)
can only occur when the inner set is empty, which is why nonemptiness is a
hard precondition everywhere in this package.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, SolverFailure
from .lp import INFEASIBLE, OPTIMAL, LinearProgram, solve_lp

CERT_TOL = 1e-6  # absolute, scaled by max(1, |B|_inf); matches solver residuals


@dataclass(frozen=True)
class ContainmentProblem:
    """Is ``{x : A x <= c}`` contained in ``{x : B x <= d}``?"""

    A: np.ndarray
    c: np.ndarray
    B: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        d = np.asarray(self.d, dtype=float).ravel()
        if A.shape[1] != B.shape[1]:
            raise DimensionError("A and B must have the same number of columns")
        if c.shape[0] != A.shape[0] or d.shape[0] != B.shape[0]:
            raise DimensionError("offset vectors must match their matrices")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class FarkasCertificate:
    """Nonnegative multiplier matrix witnessing a containment."""

    E: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "E", np.atleast_2d(np.asarray(self.E, float)))


@dataclass
class CertificateReport:
    """Per-condition worst violations of (E >= 0, B = E A, E c <= d)."""

    sign_violation: float
    equality_residual: float
    inequality_violation: float
    tol: float
    scale: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "sign_violation": self.sign_violation,
            "equality_residual": self.equality_residual,
            "inequality_violation": self.inequality_violation,
            "tol": self.tol,
            "scale": self.scale,
            "passed": self.passed,
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"certificate {status}: sign {self.sign_violation:.3e}, "
                f"equality {self.equality_residual:.3e}, "
                f"inequality {self.inequality_violation:.3e} "
                f"(tol {self.tol:g} x scale {self.scale:g})")


def build_containment_lp(prob: ContainmentProblem) -> LinearProgram:
    """Feasibility LP over vec(E): E >= 0, B = E A, E c <= d.

    vec stacks columns, so vec(E A) = (A' kron I_q) vec(E) and
    E c = (c' kron I_q) vec(E).  Equalities stay equalities; splitting them
    into inequality pairs would double the row count of the big synthesis
    systems built on top of this.
    """
    p, q = prob.p, prob.q
    Iq = sp.identity(q, format="csr")
    A_eq = sp.kron(sp.csr_matrix(prob.A.T), Iq, format="csr")
    b_eq = prob.B.flatten(order="F")
    A_ub = sp.kron(sp.csr_matrix(prob.c[None, :]), Iq, format="csr")
    b_ub = prob.d
    return LinearProgram(num_vars=p * q,
                         equalities=(A_eq, b_eq),
                         inequalities=(A_ub, b_ub),
                         nonneg=np.ones(p * q, dtype=bool))


def solve_containment(prob: ContainmentProblem):
    """Solve the certificate LP.  Returns ``(True, FarkasCertificate)`` when
    the containment holds, ``(False, None)`` when it provably does not."""
    sol = solve_lp(build_containment_lp(prob))
    if sol.status == OPTIMAL:
        E = sol.x.reshape((prob.q, prob.p), order="F")
        return True, FarkasCertificate(E)
    if sol.status == INFEASIBLE:
        return False, None
    raise SolverFailure(f"containment LP did not resolve: {sol.message}")


def verify_certificate(prob: ContainmentProblem, cert: FarkasCertificate,
                       tol: float = CERT_TOL) -> CertificateReport:
    """Check a certificate by direct matrix arithmetic.

    Violations are reported, never raised; the threshold is ``tol`` scaled by
    ``max(1, |B|_inf)`` so certificates for badly scaled systems are judged
    relative to their own magnitude.
    """
    E = cert.E
    if E.shape != (prob.q, prob.p):
        raise DimensionError(
            f"certificate is {E.shape}, problem expects {(prob.q, prob.p)}")
    scale = max(1.0, float(np.max(np.abs(prob.B))) if prob.B.size else 1.0)
    sign_v = float(max(0.0, -E.min())) if E.size else 0.0
    eq_v = float(np.max(np.abs(prob.B - E @ prob.A)))
    ineq_v = float(max(0.0, np.max(E @ prob.c - prob.d)))
    threshold = tol * scale
    passed = sign_v <= threshold and eq_v <= threshold and ineq_v <= threshold
    return CertificateReport(sign_violation=sign_v, equality_residual=eq_v,
                             inequality_violation=ineq_v, tol=tol, scale=scale,
                             passed=passed)


def no_degenerate_alternative(prob: ContainmentProblem) -> bool:
    """Confirm the pathological Farkas branch cannot fire.

    Looks for nonnegative e with ``e'A = 0`` and ``e'c <= -1`` (the strict
    inequality is scale-invariant over the cone, so -1 loses nothing).  For a
    nonempty inner set no such e exists and this returns True; finding one
    means the inner set was empty and any containment conclusion is void.
    """
    p = prob.p
    A_eq = prob.A.T                       # e' A = 0  <=>  A' e = 0
    b_eq = np.zeros(prob.A.shape[1])
    A_ub = prob.c[None, :]                # c' e <= -1
    b_ub = np.array([-1.0])
    lp = LinearProgram(num_vars=p, equalities=(A_eq, b_eq),
                       inequalities=(A_ub, b_ub),
                       nonneg=np.ones(p, dtype=bool))
    sol = solve_lp(lp)
    if sol.status == INFEASIBLE:
        return True
    if sol.status == OPTIMAL:
        return False
    raise SolverFailure(f"alternative-cone LP did not resolve: {sol.message}")
