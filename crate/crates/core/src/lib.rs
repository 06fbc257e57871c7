//! Kernel relative-error regression for right-censored, strongly mixing
//! time series.
//!
//! The response is observed as `Y = T ∧ C` with indicator `δ = 1{T ≤ C}`.
//! Censoring is corrected by inverse probability weights `δ/Ḡₙ(Y)` built
//! from the Kaplan–Meier estimate of the censoring survival function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod regression;
pub mod simgen;
pub mod survival;

pub use bandwidth::{cv_select, loo_estimate, BandwidthGrid, CvLoss, CvOptions, CvSelection};
pub use error::{Error, Result};
pub use experiments::{
    iae, mc_replicate, port_oracle, rate_study, rer_oracle, run_experiment, sup_error,
    BandwidthChoice, ExperimentResult, ExperimentSpec, GridSpec, McSummary, RateStudyResult,
    TruthSource,
};
pub use kernels::{KernelFamily, KernelSpec};
pub use regression::{
    cr_estimate, density_estimate, evaluate_on_grid, rer_estimate, rer_pseudo_estimate,
    CensoringCurves, EstimatorKind, EvalGrid,
};
pub use simgen::{
    calibrate_censoring, gen_process, gen_process_with, true_regression, GeneratedData,
    GeneratorOptions, Model, ScenarioConfig,
};
pub use survival::{km_censoring_survival, CensoredSample, StepSurvival};
