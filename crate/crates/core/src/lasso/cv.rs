use super::{lambda_grid, solver::Problem, LassoOptions};
use crate::error::Result;
use crate::folds::{assign_folds, split};
use crate::surv::{likelihood_from_beta, SurvivalDataset};

/// Cross-validated penalty choice.
#[derive(Debug, Clone, PartialEq)]
pub struct CvLasso {
    pub lambdas: Vec<f64>,
    /// Cross-validated partial likelihood at each grid point (larger is better).
    pub cv_curve: Vec<f64>,
    pub best_index: usize,
    pub lambda_cv: f64,
    pub fold_labels: Vec<usize>,
}

/// 10-fold style cross-validation over the default 100-point grid.
pub fn cv_lasso(data: &SurvivalDataset, folds: usize, seed: u64) -> Result<CvLasso> {
    let lambdas = lambda_grid(data, 100)?;
    cv_lasso_with(data, &lambdas, folds, seed, &LassoOptions::default())
}

/// Selects λ maximizing the cross-validated partial likelihood
/// `Σ_k [PL(β̂⁽⁻ᵏ⁾) − PL⁽⁻ᵏ⁾(β̂⁽⁻ᵏ⁾)]`, where `PL` is the unnormalized log
/// partial likelihood on all subjects and `PL⁽⁻ᵏ⁾` on the training subjects
/// of fold k. Ties go to the larger λ.
pub fn cv_lasso_with(
    data: &SurvivalDataset,
    lambdas: &[f64],
    folds: usize,
    seed: u64,
    opts: &LassoOptions,
) -> Result<CvLasso> {
    data.require_events()?;
    let labels = assign_folds(data.events(), folds, seed)?;
    let mut curve = vec![0.0; lambdas.len()];
    for k in 0..folds {
        let (train_idx, _) = split(&labels, k);
        let train = data.subset(&train_idx)?;
        let problem = Problem::new(&train, opts)?;
        let mut warm: Option<ndarray::Array1<f64>> = None;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let fit = problem.fit(lambda, warm.as_ref().map(|b| b.view()))?;
            curve[li] += likelihood_from_beta(data, fit.beta.view())
                - likelihood_from_beta(&train, fit.beta.view());
            warm = Some(fit.beta);
        }
    }
    let mut best_index = 0;
    for (i, &v) in curve.iter().enumerate() {
        if v > curve[best_index] {
            best_index = i;
        }
    }
    Ok(CvLasso {
        lambdas: lambdas.to_vec(),
        cv_curve: curve,
        best_index,
        lambda_cv: lambdas[best_index],
        fold_labels: labels,
    })
}
