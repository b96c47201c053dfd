"""Determinant-maximization clustering with crowd-aggregation mechanisms."""

from .clustering import (
    ClusteringResult,
    SolverConfig,
    augment_and_pick,
    brute_force,
    canonicalize_assignment,
    dmi_cluster,
    dmi_score,
    k_cofactors,
    labels_to_assignment,
    same_up_to_permutation,
    solve_exact_1d,
    solve_exact_2d,
)
from .linalg import (
    determinant,
    idxmax,
    inverse,
    numerical_rank,
    pick_independent_columns,
)
from .mechanisms import (
    MechanismOutcome,
    ReportSet,
    aggregate_answer_matrix,
    align_labels,
    extract_knowledge,
    kdmi_payment_for_agent,
    kdmi_payments,
    plurality,
    rotated_sp_check,
    surprisingly_popular_multitask,
)
from .simulate import (
    SimulationDraw,
    WorldModel,
    WorldSpec,
    apply_strategy_to_reports,
    expected_answer_matrix,
    generate_reports,
    generate_single_task,
    two_world_spec,
)
from .single_task import (
    MomentEstimates,
    SingleTaskDataset,
    SpSingleResult,
    StsResult,
    estimate_moments,
    spectral_truth_serum,
    surprisingly_popular_single,
)

__version__ = "0.1.0"

__all__ = [
    "ClusteringResult",
    "MechanismOutcome",
    "MomentEstimates",
    "ReportSet",
    "SimulationDraw",
    "SingleTaskDataset",
    "SolverConfig",
    "SpSingleResult",
    "StsResult",
    "WorldModel",
    "WorldSpec",
    "aggregate_answer_matrix",
    "align_labels",
    "apply_strategy_to_reports",
    "augment_and_pick",
    "brute_force",
    "canonicalize_assignment",
    "determinant",
    "dmi_cluster",
    "dmi_score",
    "estimate_moments",
    "expected_answer_matrix",
    "extract_knowledge",
    "generate_reports",
    "generate_single_task",
    "idxmax",
    "inverse",
    "k_cofactors",
    "kdmi_payment_for_agent",
    "kdmi_payments",
    "labels_to_assignment",
    "numerical_rank",
    "pick_independent_columns",
    "plurality",
    "rotated_sp_check",
    "same_up_to_permutation",
    "solve_exact_1d",
    "solve_exact_2d",
    "spectral_truth_serum",
    "surprisingly_popular_multitask",
    "surprisingly_popular_single",
    "two_world_spec",
    "__version__",
]
