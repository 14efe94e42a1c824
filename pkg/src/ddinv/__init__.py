"""Data-driven robust invariance toolkit.

Given noisy input/state data from an unknown linear system and a bound on the
process disturbance, synthesize a state-feedback gain that keeps a given
polyhedral state set invariant for *every* dynamics consistent with the data,
by a single linear program whose feasibility is necessary and sufficient.
Feasible results come with nonnegative multiplier certificates that can be
re-verified by plain matrix arithmetic.
"""

from .dataset import (ConsistencySet, DisturbanceSet, ExperimentData,
                      IntervalDisturbanceSet, assemble_W0,
                      build_consistency_set, consistency_bounded,
                      random_box_disturbances, random_inputs,
                      random_vertex_disturbances, richness_check,
                      simulate_experiment)
from .errors import (DimensionError, EmptySetError, ProblemTooLargeError,
                     SolverFailure, UnboundedSetError)
from .farkas import (ContainmentProblem, FarkasCertificate,
                     build_containment_lp, no_degenerate_alternative,
                     solve_containment, verify_certificate)
from .lp import LinearProgram, LPSolution, solve_lp
from .polyhedra import (HPolyhedron, TwoSidedPolyhedron, VPolytope,
                        check_nonempty, contains, enumerate_vertices,
                        is_bounded_general, is_bounded_two_sided,
                        remove_redundant)
from .synthesis import (BisectionResult, SynthesisOptions, SynthesisResult,
                        max_delta_bisection, synthesize_data_driven,
                        synthesize_model_based, synthesize_vertex_models)
from .verify import (Trajectory, brute_force_invariance_oracle,
                     check_invariance_consistent_models,
                     check_invariance_exact, simulate_closed_loop)

__version__ = "0.1.0"

__all__ = [
    "BisectionResult", "ConsistencySet", "ContainmentProblem",
    "DimensionError", "DisturbanceSet", "EmptySetError", "ExperimentData",
    "FarkasCertificate", "HPolyhedron", "IntervalDisturbanceSet",
    "LPSolution", "LinearProgram", "ProblemTooLargeError", "SolverFailure",
    "SynthesisOptions", "SynthesisResult", "Trajectory",
    "TwoSidedPolyhedron", "UnboundedSetError", "VPolytope", "assemble_W0",
    "brute_force_invariance_oracle", "build_consistency_set",
    "build_containment_lp", "check_invariance_exact",
    "check_invariance_consistent_models", "check_nonempty",
    "consistency_bounded", "contains", "enumerate_vertices",
    "is_bounded_general", "is_bounded_two_sided", "max_delta_bisection",
    "no_degenerate_alternative", "random_box_disturbances", "random_inputs",
    "random_vertex_disturbances", "remove_redundant", "richness_check",
    "simulate_closed_loop", "simulate_experiment", "solve_containment",
    "solve_lp", "synthesize_data_driven", "synthesize_model_based",
    "synthesize_vertex_models", "verify_certificate",
]
