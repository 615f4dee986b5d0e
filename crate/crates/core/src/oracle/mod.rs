//! Independent ground truth: the model on a truncated configuration Fock
//! space, with explicit matrices for every operator.

pub mod checks;
pub mod linalg;
pub mod ops;

pub use checks::{
    commutator_checks, eigen_relation_check, evolve_checks, evolve_report, ground_state_checks,
    hamiltonian_checks, hamiltonian_report, inverse_relation_check, kernel_fit, kernel_fit_check,
    mode_degradation_profile, resolution_checks, resolution_element, resolution_matrix, run_suite,
    weyl_compose, weyl_unitarity_check, CheckRecord, ComposeReport, EvolveReport,
    HamiltonianReport, KernelFitReport, KernelFitRow, ResolutionElement,
};
pub use ops::{
    build_a_ops, build_ladder, build_phase_space_ops, ground_state, AOps, FockOracle,
    FockTruncation, HsSuperOp, HsVector, PhaseSpaceOps,
};
