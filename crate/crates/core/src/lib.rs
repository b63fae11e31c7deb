//! Inference for high-dimensional Cox proportional hazards models.
//!
//! The pipeline: a lasso-penalized partial-likelihood fit `β̂`, a sparse
//! CLIME-type estimate `Θ̂` of the inverse of `V̂(β̂)`, and the one-step
//! debiased estimator `b̂ = β̂ + Θ̂ ℓ̇(β̂)` with coordinatewise normal-theory
//! confidence intervals and p-values. [`simulate`] generates the simulation
//! designs used to check coverage, and [`harness`] drives studies and
//! reports.

pub mod error;
pub mod folds;
pub mod harness;
pub mod inference;
pub mod lasso;
pub mod linalg;
pub mod precision;
pub mod simulate;
pub mod surv;

pub use error::{CoxError, Result};
