//! Long-run variance estimation for locally stationary scores: double-kernel
//! HAC, classical HAC and EWC estimators, data-driven bandwidths, HAR test
//! statistics, simulation designs and a Monte Carlo harness.

// `!(x < y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod local_cov;
pub mod score;
pub mod estimators;
pub mod bandwidths;
pub mod dgp;
pub mod harness;

pub use error::{LrvError, Result};
pub use estimators::{classical_hac, dk_hac, ewc, psd_project, EstimatorKind, LrvEstimate};
pub use kernels::{LagKernel, LagKernelConstants, TimeKernel};
pub use local_cov::{BlockNormalization, SmoothingPlan};
pub use score::ScoreMatrix;
