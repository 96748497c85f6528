"""Learnability of Pauli noise under Clifford gate sets, cycle benchmarking and gauge bounds."""

from .cbsim import (
    CBConfig,
    CBDataset,
    CPTPNoiseSpec,
    amplitude_damping_study,
    run_cycle_cb,
    run_intercept_cb,
    run_interleaved_cb,
    run_protocol_suite,
    run_ptm_dense,
    run_standard_cb,
)
from .channel import NoiseModel, PauliChannel, validate, wht
from .estimate import (
    feasible_region,
    fit_all,
    fit_decay,
    intercept_estimate,
    reconstruct_errors,
    reconstruct_learnable,
    sp_lower_bound,
)
from .gauge import GaugeTransform, apply_gauge, certify_indistinguishable
from .graph import (
    build_graph,
    cut_space,
    cycle_space,
    is_learnable,
    learnable_basis_report,
    learnable_individual,
)
from .pauli import (
    CliffordGate,
    PauliOp,
    cnot,
    compose,
    conjugate,
    cz,
    embed,
    gate_order,
    inverse,
    library_gate,
    swap,
)

__version__ = "0.1.0"

__all__ = [
    "CBConfig",
    "CBDataset",
    "CPTPNoiseSpec",
    "CliffordGate",
    "GaugeTransform",
    "NoiseModel",
    "PauliChannel",
    "PauliOp",
    "amplitude_damping_study",
    "apply_gauge",
    "build_graph",
    "certify_indistinguishable",
    "cnot",
    "compose",
    "conjugate",
    "cut_space",
    "cycle_space",
    "cz",
    "embed",
    "feasible_region",
    "fit_all",
    "fit_decay",
    "gate_order",
    "intercept_estimate",
    "inverse",
    "is_learnable",
    "learnable_basis_report",
    "learnable_individual",
    "library_gate",
    "reconstruct_errors",
    "reconstruct_learnable",
    "run_cycle_cb",
    "run_intercept_cb",
    "run_interleaved_cb",
    "run_protocol_suite",
    "run_ptm_dense",
    "run_standard_cb",
    "sp_lower_bound",
    "swap",
    "validate",
    "wht",
]
