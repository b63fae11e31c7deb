//! Orchestration: the per-dataset inference pipeline, simulation studies,
//! aggregation into summary tables, CSV input and report output.

mod aggregate;
mod commands;
pub mod io;

use ndarray::{Array1, Axis};

pub use aggregate::{
    log_tuning, summarize, CoordinateSummary, Group, Method, ReplicationRecord, ReplicationSummary, TuningRecord,
};
pub use commands::{
    cmd_fit, cmd_infer, cmd_lifespan, cmd_simulate, lifespan_report, simulate_setting, FitArgs, InferArgs,
    LambdaChoice, LifespanArgs, LifespanReport, SimulateArgs, SimulationRun,
};

use crate::error::{CoxError, Result};
use crate::inference::{confidence_intervals, debias, DebiasedInference};
use crate::lasso::{cv_lasso_with, fit_lasso_with, lambda_grid, CoxFit, CvLasso, LassoOptions};
use crate::precision::{
    clime_with, cv_clime_with, default_clime_grid, theta_tilde, ClimeOptions, CvClime, CvCriterion, PrecisionEstimate,
};
use crate::surv::{score, vhat, SurvivalDataset};

/// Tuning and solver choices shared by every pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub folds: usize,
    pub n_lambda: usize,
    /// Significance level q; intervals have coverage 1 − q.
    pub q: f64,
    pub criterion: CvCriterion,
    pub lasso: LassoOptions,
    pub clime: ClimeOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            n_lambda: 100,
            q: 0.05,
            criterion: CvCriterion::Frobenius,
            lasso: LassoOptions::default(),
            clime: ClimeOptions::default(),
        }
    }
}

/// Everything produced by one pass of the pipeline on a dataset.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub cv_lasso: CvLasso,
    pub lasso: CoxFit,
    pub vhat: ndarray::Array2<f64>,
    pub cv_clime: CvClime,
    pub theta_hat: PrecisionEstimate,
    /// Intervals using `Θ̂`.
    pub hat: DebiasedInference,
    /// Intervals with the same `b̂` and the widened diagonal of `Θ̃`.
    pub tilde: DebiasedInference,
}

/// Cross-validated lasso, `V̂(β̂)`, cross-validated CLIME, debiasing, and
/// intervals for both diagonal variants. Both cross-validations use the same
/// fold assignment, drawn from `seed`.
pub fn run_pipeline(data: &SurvivalDataset, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    let grid = lambda_grid(data, cfg.n_lambda)?;
    let cv_lasso = cv_lasso_with(data, &grid, cfg.folds, seed, &cfg.lasso)?;
    let lasso = fit_lasso_with(data, cv_lasso.lambda_cv, None, &cfg.lasso)?;
    if !lasso.converged {
        return Err(CoxError::Numerical(format!(
            "lasso fit at lambda = {:e} did not converge",
            lasso.lambda
        )));
    }
    let v = vhat(data, lasso.beta.view())?;
    let clime_grid = default_clime_grid(v.view());
    let cv_clime = cv_clime_with(data, lasso.beta.view(), &clime_grid, cfg.folds, seed, cfg.criterion, &cfg.clime)?;
    let theta_hat = clime_with(v.view(), cv_clime.lambda_n_cv, &cfg.clime)?;
    let tilde_est = theta_tilde(&theta_hat, v.view())?;
    let s = score(data, lasso.beta.view())?;
    let b_hat = debias(lasso.beta.view(), &theta_hat, s.view())?;
    let hat = confidence_intervals(b_hat.view(), &theta_hat, data.n(), cfg.q)?;
    let tilde = confidence_intervals(b_hat.view(), &tilde_est, data.n(), cfg.q)?;
    Ok(PipelineOutput { cv_lasso, lasso, vhat: v, cv_clime, theta_hat, hat, tilde })
}

/// Process exit status for an error: 1 for bad input, 2 for numerical
/// failures.
pub fn exit_code(e: &CoxError) -> i32 {
    match e {
        CoxError::InvalidInput(_)
        | CoxError::DimensionMismatch(_)
        | CoxError::NoEvents
        | CoxError::DegenerateLambdaMax
        | CoxError::FoldAssignment(_)
        | CoxError::Parse { .. }
        | CoxError::Io(_) => 1,
        CoxError::NonFiniteBeta
        | CoxError::NotPositiveDefinite(_)
        | CoxError::Singular
        | CoxError::Separation(_)
        | CoxError::Numerical(_) => 2,
    }
}

/// Rejects covariates with no variation, naming the first offending column.
pub fn check_constant_columns(data: &SurvivalDataset, names: &[String]) -> Result<()> {
    let z = data.covariates();
    for (j, col) in z.axis_iter(Axis(1)).enumerate() {
        let first = col[0];
        if col.iter().all(|&x| x == first) {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("z{}", j + 1));
            return Err(CoxError::InvalidInput(format!("covariate column '{name}' is constant")));
        }
    }
    Ok(())
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Standard error of the mean, zero for fewer than two values.
pub(crate) fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub(crate) fn to_vec(a: &Array1<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}
