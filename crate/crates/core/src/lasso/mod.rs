//! Lasso-penalized partial likelihood: single fits, regularization paths and
//! cross-validated tuning.
//!
//! The objective is `−ℓ(β) + λ‖β‖₁` with `ℓ` the log partial likelihood over n.
//! Each outer step minimizes the exact second-order expansion of `−ℓ` plus the
//! penalty by cyclic coordinate descent with soft-thresholding, then
//! backtracks by step halving until the objective does not increase.

mod cv;
mod solver;

pub use cv::{cv_lasso, cv_lasso_with, CvLasso};
pub use solver::LassoOptions;

use ndarray::{Array1, ArrayView1};

use crate::error::{CoxError, Result};
use crate::surv::{score, SurvivalDataset};

/// A penalized fit at one λ.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    pub beta: Array1<f64>,
    pub lambda: f64,
    /// `−ℓ(β̂) + λ‖β̂‖₁`
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active_set: Vec<usize>,
    /// Largest violation of the subgradient optimality conditions.
    pub kkt_residual: f64,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub fits: Vec<CoxFit>,
    pub lambda_max: f64,
}

impl LassoPath {
    /// Fraction of path positions at which each covariate is nonzero.
    pub fn active_fractions(&self, p: usize) -> Vec<f64> {
        let mut counts = vec![0usize; p];
        for fit in &self.fits {
            for &j in &fit.active_set {
                counts[j] += 1;
            }
        }
        let len = self.fits.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / len).collect()
    }
}

/// Maximum violation of the lasso optimality conditions: `|s_j| ≤ λ` off the
/// support and `s_j = λ sgn(β_j)` on it, with `s` the score.
pub fn kkt_residual(score: ArrayView1<f64>, beta: ArrayView1<f64>, lambda: f64) -> f64 {
    score
        .iter()
        .zip(beta.iter())
        .map(|(&s, &b)| {
            if b != 0.0 {
                (s - lambda * b.signum()).abs()
            } else {
                (s.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `λ_max = ‖ℓ̇(0)‖_∞`, the smallest penalty with an all-zero solution.
pub fn lambda_max(data: &SurvivalDataset) -> Result<f64> {
    data.require_events()?;
    let s = score(data, Array1::zeros(data.p()).view())?;
    Ok(s.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Decreasing, log-equally-spaced penalty grid from `λ_max` down to
/// `ratio·λ_max`, with ratio 0.01 when `p ≥ n` and 1e-4 otherwise.
pub fn lambda_grid(data: &SurvivalDataset, n_lambda: usize) -> Result<Vec<f64>> {
    if n_lambda == 0 {
        return Err(CoxError::InvalidInput("grid needs at least one point".into()));
    }
    let lmax = lambda_max(data)?;
    if lmax <= 0.0 {
        return Err(CoxError::DegenerateLambdaMax);
    }
    let ratio = if data.p() >= data.n() { 0.01 } else { 1e-4 };
    Ok(log_grid(lmax, ratio * lmax, n_lambda))
}

pub(crate) fn log_grid(hi: f64, lo: f64, len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![hi];
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    (0..len)
        .map(|k| {
            if k == 0 {
                hi
            } else {
                (lh + (ll - lh) * k as f64 / (len - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn fit_lasso(
    data: &SurvivalDataset,
    lambda: f64,
    warm_start: Option<ArrayView1<f64>>,
) -> Result<CoxFit> {
    fit_lasso_with(data, lambda, warm_start, &LassoOptions::default())
}

pub fn fit_lasso_with(
    data: &SurvivalDataset,
    lambda: f64,
    warm_start: Option<ArrayView1<f64>>,
    opts: &LassoOptions,
) -> Result<CoxFit> {
    let problem = solver::Problem::new(data, opts)?;
    problem.fit(lambda, warm_start)
}

/// Fits along `lambdas` (nonincreasing), each warm-started from the previous
/// solution. A point that fails to converge is kept with `converged = false`.
pub fn fit_path(data: &SurvivalDataset, lambdas: &[f64]) -> Result<LassoPath> {
    fit_path_with(data, lambdas, &LassoOptions::default())
}

pub fn fit_path_with(data: &SurvivalDataset, lambdas: &[f64], opts: &LassoOptions) -> Result<LassoPath> {
    if lambdas.is_empty() {
        return Err(CoxError::InvalidInput("empty lambda sequence".into()));
    }
    if lambdas.windows(2).any(|w| w[1] > w[0]) {
        return Err(CoxError::InvalidInput("lambda sequence must be nonincreasing".into()));
    }
    let problem = solver::Problem::new(data, opts)?;
    let mut fits: Vec<CoxFit> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let warm = fits.last().map(|f| f.beta.view());
        let fit = problem.fit(lambda, warm)?;
        if !fit.converged {
            log::debug!("path point lambda = {lambda:e} did not converge");
        }
        fits.push(fit);
    }
    Ok(LassoPath {
        lambdas: lambdas.to_vec(),
        fits,
        lambda_max: lambda_max(data)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn kkt_residual_cases() {
        let s = array![0.3, -0.5, 0.2];
        let b = array![0.0, -1.0, 0.0];
        assert!((kkt_residual(s.view(), b.view(), 0.5) - 0.0).abs() < 1e-15);
        assert!((kkt_residual(s.view(), b.view(), 0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(0.5, 0.005, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.5);
        assert!((g[99] - 0.005).abs() < 1e-15);
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!(w[1] < w[0]);
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        assert_eq!(log_grid(0.7, 0.1, 1), vec![0.7]);
    }

    fn toy(n: usize, p: usize, seed: u64) -> SurvivalDataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z = ndarray::Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let times = Array1::from_shape_fn(n, |i| (-rng.random::<f64>().ln()) / (z[[i, 0]]).exp());
        let events = (0..n).map(|_| rng.random::<f64>() < 0.8).collect();
        SurvivalDataset::new(times, events, z).unwrap()
    }

    #[test]
    fn zero_solution_at_and_above_lambda_max() {
        let data = toy(40, 5, 1);
        let lmax = lambda_max(&data).unwrap();
        for l in [lmax, 2.0 * lmax] {
            let fit = fit_lasso(&data, l, None).unwrap();
            assert!(fit.beta.iter().all(|&b| b == 0.0));
            assert!(fit.active_set.is_empty());
        }
        let fit = fit_lasso(&data, 0.9 * lmax, None).unwrap();
        assert!(!fit.active_set.is_empty());
    }

    #[test]
    fn unpenalized_fit_matches_mple() {
        let data = toy(20, 2, 4);
        let fit = fit_lasso(&data, 0.0, None).unwrap();
        let mple = crate::inference::fit_mple(&data).unwrap();
        for j in 0..2 {
            assert!((fit.beta[j] - mple.beta[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let data = toy(60, 8, 7);
        let lmax = lambda_max(&data).unwrap();
        let l = 0.2 * lmax;
        let cold = fit_lasso(&data, l, None).unwrap();
        let start = Array1::from_elem(8, 0.3);
        let warm = fit_lasso(&data, l, Some(start.view())).unwrap();
        let obj_gap = (cold.objective - warm.objective).abs();
        assert!(obj_gap < 1e-10, "objective gap {obj_gap}");
        for j in 0..8 {
            assert!((cold.beta[j] - warm.beta[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn path_satisfies_kkt() {
        let data = toy(50, 12, 3);
        let grid = lambda_grid(&data, 30).unwrap();
        let path = fit_path(&data, &grid).unwrap();
        for fit in &path.fits {
            assert!(fit.converged);
            let s = score(&data, fit.beta.view()).unwrap();
            assert!(kkt_residual(s.view(), fit.beta.view(), fit.lambda) < 1e-6);
        }
        let frac = path.active_fractions(12);
        assert!(frac.iter().all(|&f| (0.0..=1.0).contains(&f)));
        assert!(fit_path(&data, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn standardized_fit_is_optimal_on_original_scale() {
        let data = toy(50, 4, 8);
        let opts = LassoOptions { standardize: true, ..LassoOptions::default() };
        let l = 0.3 * lambda_max(&data).unwrap();
        let fit = fit_lasso_with(&data, l, None, &opts).unwrap();
        assert!(fit.converged);
        assert!(fit.objective.is_finite());
    }

    #[test]
    fn cross_validation_picks_grid_member() {
        let data = toy(80, 5, 9);
        let grid = lambda_grid(&data, 15).unwrap();
        let cv = cv_lasso_with(&data, &grid, 5, 1, &LassoOptions::default()).unwrap();
        assert!(grid.contains(&cv.lambda_cv));
        assert_eq!(cv.cv_curve.len(), 15);
        let again = cv_lasso_with(&data, &grid, 5, 1, &LassoOptions::default()).unwrap();
        assert_eq!(cv, again);
    }
}
