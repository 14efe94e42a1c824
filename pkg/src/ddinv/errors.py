"""Exception types shared across the package.

Mathematical answers (infeasible, empty, unbounded) are return values or
dedicated exceptions; operational breakage (a solver giving up) is always a
``SolverFailure`` so callers can tell the two apart.
"""


class DimensionError(ValueError):
    """Inputs have inconsistent shapes."""


class EmptySetError(ValueError):
    """An operation required a nonempty polyhedron."""


class UnboundedSetError(ValueError):
    """An operation required a bounded polyhedron."""


class SolverFailure(RuntimeError):
    """The LP backend failed for a non-mathematical reason (iteration limit,
    numerical breakdown).  Distinct from a clean infeasibility answer."""


class ProblemTooLargeError(RuntimeError):
    """Assembly refused because the problem exceeds the configured size cap.

    The message carries a size report so the caller can raise the cap
    deliberately instead of discovering an out-of-memory kill later.
    """
