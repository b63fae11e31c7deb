//! Cox partial likelihood machinery for time-independent covariates.
//!
//! Risk sets follow `Y_i(t) = 1{T_i >= t}`; tied event times share one risk
//! set (Breslow convention) and a censored subject tied with an event is at
//! risk for it.

mod breslow;
mod dataset;
mod likelihood;

pub use breslow::{breslow, StepFunction};
pub use dataset::{SurvivalDataset, TimeGroup};
pub use likelihood::{
    likelihood_from_beta, neg_hessian, partial_loglik, risk_weights, score, vhat, weighted_mean, RiskWeights,
};

pub(crate) use likelihood::EtaState;
