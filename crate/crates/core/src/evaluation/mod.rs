//! Cluster-recovery metrics and degree diagnostics.

mod degrees;
mod metrics;
mod stats;

use thiserror::Error;

pub use degrees::{degree_histogram, powerlaw_fit, powerlaw_fit_histogram, Binning, PowerLawFit, DEFAULT_LOG_BINS};
pub use metrics::{clustering_error, confusion_matrix, nmi, nmi_with, MetricReport, NmiNormalization};
pub use stats::{sign_test, SignTest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("label vectors differ in length: {truth} truth vs {pred} predicted")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("cannot score an empty labeling")]
    Empty,
    #[error("power-law fit needs at least 3 usable points, got {usable}")]
    TooFewPoints { usable: usize },
    #[error("power-law fit is degenerate: all positive values are equal")]
    Degenerate,
}
