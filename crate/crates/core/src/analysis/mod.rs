//! Error norms, supercloseness quantities, postprocessing, observed and
//! predicted convergence rates, and report output.

pub mod errors;
pub mod output;
pub mod postprocess;
pub mod rates;
pub mod study;

pub use errors::{compute_errors, ErrorReport, Fields};
pub use postprocess::{postprocess, PostProcessed};
pub use rates::{
    expected_rates, k_expansions, supported_pairs, Expected, ExpectedRates, Gate, Norm,
};
pub use study::{
    level_errors, observed_rate, run_study, run_study_with, solve_level, ConvergenceReport,
    GateCheck, LevelSolution, MeshSource, StudyOptions,
};
