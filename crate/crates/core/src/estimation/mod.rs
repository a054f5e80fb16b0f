//! Super Learner ensembles and targeted maximum likelihood estimation.

pub mod learners;
pub mod super_learner;
pub mod tmle;

use thiserror::Error;

use crate::dataset::DataError;
use crate::identification::IdError;

pub use learners::{LearnerSpec, parse_library};
pub use super_learner::{FittedSuperLearner, SuperLearnerSpec, Task, sl_fit};
pub use tmle::{
    CleverCovariates, ContrastEstimate, Diagnostics, Fluctuation, PropensityFit, TargetedResult, TmleConfig,
    clever_covariates, clip_entries, clip_propensities, fit_propensity, plug_in_ate, renormalize_rows, tmle_estimate, tmle_fluctuate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Id(#[from] IdError),
    #[error("{0}")]
    InvalidSpec(String),
    #[error("k_folds = {k} must lie in [2, {n}]")]
    Folds { k: usize, n: usize },
    #[error("level {level} of `{column}` is missing from a training fold")]
    DegenerateFold { column: String, level: f64 },
    #[error("`{0}` must be discrete")]
    NotDiscrete(String),
    #[error("level {level} of `{column}` has only {count} observation(s)")]
    SparseLevel { column: String, level: f64, count: usize },
    #[error("no rows with `{column}` = {level}")]
    EmptyArm { column: String, level: f64 },
    #[error("outcome `{column}` is {kind}; expected binary or continuous")]
    OutcomeType { column: String, kind: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
