"""Process-matrix toolkit for indefinite causal order."""

from .choi import (CJOperator, Instrument, PartySpec, choi_from_kraus, is_cptp, maximally_entangled,
                   measure_prepare)
from .config import DEFAULT_TOLERANCES, RunConfig, SolverBudgets, Tolerances
from .convexsep import (bipartite_causal_sep, fixed_first_ecs, rank1_nonseparability_certificate,
                        tripartite_ecs)
from .correlations import (CausalConfiguration, ProbabilityTable, Scenario, conditional_process,
                           fixed_order_causal_check, mix_tables, no_signaling_subset, reduced_process)
from .gallery import (SwitchParams, activation_pipeline, ocb_process, ocb_tripartite, switch_nonseparability_pipeline,
                      switch_process)
from .polytope import Game, causal_bound, causal_membership, ocb_game, optimize_quantum_value
from .procmat import (ProcessMatrix, TermType, allowed_term_types, condition_on_event, extend_with_ancilla,
                      fixed_order_compatible, no_signaling_matrix, probabilities, reduced_matrix,
                      term_types_present, validate)
from .qlinalg import TensorSpace, eig_hermitian, hs_basis, hs_expand, kron, partial_trace, project_psd
from .reports import FeasibilityReport

__all__ = [
    "CJOperator", "Instrument", "PartySpec", "choi_from_kraus", "is_cptp", "maximally_entangled",
    "measure_prepare", "DEFAULT_TOLERANCES", "RunConfig", "SolverBudgets", "Tolerances",
    "bipartite_causal_sep", "fixed_first_ecs", "rank1_nonseparability_certificate", "tripartite_ecs",
    "CausalConfiguration", "ProbabilityTable", "Scenario", "conditional_process", "fixed_order_causal_check",
    "mix_tables", "no_signaling_subset", "reduced_process", "SwitchParams", "activation_pipeline",
    "ocb_process", "ocb_tripartite", "switch_nonseparability_pipeline", "switch_process", "Game",
    "causal_bound", "causal_membership", "ocb_game", "optimize_quantum_value", "ProcessMatrix", "TermType",
    "allowed_term_types", "condition_on_event", "extend_with_ancilla", "fixed_order_compatible",
    "no_signaling_matrix", "probabilities", "reduced_matrix", "term_types_present", "validate",
    "TensorSpace", "eig_hermitian", "hs_basis", "hs_expand", "kron", "partial_trace", "project_psd",
    "FeasibilityReport",
]
