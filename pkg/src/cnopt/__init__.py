"""cnopt: lifted convex reformulations of nonsmooth/nonconvex objectives,
global-optimality certificates, and a block-decomposed augmented-Lagrangian
solver."""

from .core import (CERTIFIED, INCONCLUSIVE, REFUTED, CnForm, ConvexityGrade,
                   ScalarField, Verdict, check_weak_uniform, constraint_residual,
                   eval_f_via_form, lift)
from .combinators import (compose_monotone, convex_exact_form, from_dc,
                          negate_exact, product_exact, scale_add)
from .inner import ConeQpResult, InnerConfig, cone_lp_certificate, minimize_smooth, solve_cone_qp
from .optimality import (CandidatePoint, DirectionCone, blockwise_condition,
                         candidate, falsify_k_set, kkt_residual, lcnp_condition,
                         wcnp_condition)
from .problems import ProblemSpec, brute_force_oracle, load_spec, make_problem
from .solver import (OverlapLink, Partition, SolveReport, SolverConfig, SolverState,
                     augmented_lagrangian, block_sweep, certify_solution,
                     monolithic_partition, multiplier_update, solve, step4_residual)

__version__ = "0.1.0"

__all__ = [
    "CERTIFIED", "INCONCLUSIVE", "REFUTED",
    "CnForm", "ConvexityGrade", "ScalarField", "Verdict",
    "check_weak_uniform", "constraint_residual", "eval_f_via_form", "lift",
    "compose_monotone", "convex_exact_form", "from_dc", "negate_exact",
    "product_exact", "scale_add",
    "ConeQpResult", "InnerConfig", "cone_lp_certificate", "minimize_smooth",
    "solve_cone_qp",
    "CandidatePoint", "DirectionCone", "blockwise_condition", "candidate",
    "falsify_k_set", "kkt_residual", "lcnp_condition", "wcnp_condition",
    "ProblemSpec", "brute_force_oracle", "load_spec", "make_problem",
    "OverlapLink", "Partition", "SolveReport", "SolverConfig", "SolverState",
    "augmented_lagrangian", "block_sweep", "certify_solution",
    "monolithic_partition", "multiplier_update", "solve", "step4_residual",
    "__version__",
]
