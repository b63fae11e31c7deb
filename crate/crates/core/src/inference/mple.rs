use ndarray::{Array1, Array2};

use super::{confidence_intervals, DebiasedInference};
use crate::error::{CoxError, Result};
use crate::linalg::spd_inverse;
use crate::precision::{ColumnStatus, PrecisionEstimate, ThetaVariant};
use crate::surv::{neg_hessian, partial_loglik, score, SurvivalDataset};

const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;
const SCORE_TOL: f64 = 1e-8;
const STEP_TOL: f64 = 1e-6;
const DIVERGENCE_NORM: f64 = 1e3;

/// Unpenalized maximum partial likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MpleFit {
    pub beta: Array1<f64>,
    /// `(n · neg_hessian(β̂))⁻¹`.
    pub covariance: Array2<f64>,
    pub se: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    n: usize,
}

impl MpleFit {
    /// Wald intervals `β̂_j ± z_{q/2} se_j` and p-values, in the same shape as
    /// the debiased intervals.
    pub fn intervals(&self, q: f64) -> Result<DebiasedInference> {
        let p = self.beta.len();
        let theta = &self.covariance * self.n as f64;
        let est = PrecisionEstimate {
            vhat_diag: theta.diag().mapv(|d| if d > 0.0 { 1.0 / d } else { 0.0 }),
            theta,
            lambda_n: 0.0,
            variant: ThetaVariant::Hat,
            column_status: vec![ColumnStatus::Optimal; p],
            l1_norms: vec![0.0; p],
            pivots: vec![0; p],
        };
        confidence_intervals(self.beta.view(), &est, self.n, q)
    }
}

fn sup_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Step length along `step`: halved until the likelihood does not drop, or
/// doubled while it keeps rising when a long full step is accepted. A
/// monotone likelihood (separated data) therefore runs off quickly past the
/// divergence threshold instead of creeping out one unit per iteration.
fn line_search(data: &SurvivalDataset, beta: &Array1<f64>, step: &Array1<f64>, ll: f64) -> Result<(f64, f64)> {
    let at = |t: f64| -> Result<f64> { partial_loglik(data, (beta + &(step * t)).view()) };
    let slack = 1e-14 * ll.abs().max(1.0);
    let mut t = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let cand = at(t)?;
        if cand.is_finite() && cand >= ll - slack {
            let mut best = (t, cand);
            if t == 1.0 && sup_norm(step) >= 0.5 {
                let len = step.dot(step).sqrt();
                while best.0 * len <= 2.0 * DIVERGENCE_NORM {
                    let next = at(2.0 * best.0)?;
                    if !(next.is_finite() && next > best.1) {
                        break;
                    }
                    best = (2.0 * best.0, next);
                }
            }
            return Ok(best);
        }
        t *= 0.5;
    }
    Ok((0.0, ll))
}

/// Damped Newton–Raphson on the negative log partial likelihood.
pub fn fit_mple(data: &SurvivalDataset) -> Result<MpleFit> {
    let (n, p) = (data.n(), data.p());
    if p >= n {
        return Err(CoxError::InvalidInput(format!("MPLE needs p < n (p = {p}, n = {n})")));
    }
    data.require_events()?;
    let mut beta = Array1::<f64>::zeros(p);
    let mut ll = partial_loglik(data, beta.view())?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        let grad = score(data, beta.view())?;
        let h = neg_hessian(data, beta.view())?;
        let step = spd_inverse(h.view())?.dot(&grad);
        if sup_norm(&grad) < SCORE_TOL && sup_norm(&step) < STEP_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let (t, cand_ll) = line_search(data, &beta, &step, ll)?;
        if t == 0.0 {
            log::warn!("MPLE step halving exhausted at iteration {iterations}");
            break;
        }
        beta.scaled_add(t, &step);
        ll = cand_ll;
        let norm = beta.dot(&beta).sqrt();
        if norm > DIVERGENCE_NORM {
            return Err(CoxError::Separation(norm));
        }
    }
    let h = neg_hessian(data, beta.view())?;
    let covariance = spd_inverse(h.view())? / n as f64;
    let se = covariance.diag().mapv(|d| d.max(0.0).sqrt());
    Ok(MpleFit { beta, covariance, se, iterations, converged, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> SurvivalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() - 0.5);
        let times = Array1::from_shape_fn(n, |_| rng.random::<f64>() * 5.0 + 0.01);
        let events = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
        SurvivalDataset::new(times, events, z).unwrap()
    }

    #[test]
    fn one_dimensional_matches_golden_section() {
        let data = random_data(30, 1, 3);
        let fit = fit_mple(&data).unwrap();
        assert!(fit.converged);
        let f = |b: f64| partial_loglik(&data, array![b].view()).unwrap();
        let (mut a, mut b) = (-20.0, 20.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        assert!((fit.beta[0] - 0.5 * (a + b)).abs() < 1e-6);
    }

    #[test]
    fn score_vanishes_and_covariance_is_spd() {
        let data = random_data(60, 3, 9);
        let fit = fit_mple(&data).unwrap();
        assert!(fit.converged);
        assert!(sup_norm(&score(&data, fit.beta.view()).unwrap()) < 1e-8);
        let c = &fit.covariance;
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[[i, j]] - c[[j, i]]).abs() < 1e-12);
            }
        }
        assert!(crate::linalg::symmetric_eigenvalues(c.view())[0] > 0.0);
        let inf = fit.intervals(0.05).unwrap();
        for j in 0..3 {
            assert!((inf.se[j] - fit.se[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_separation_is_reported() {
        // The larger covariate always fails first.
        let z = array![[3.0], [2.0], [1.0], [0.0]];
        let data = SurvivalDataset::new(array![1.0, 2.0, 3.0, 4.0], vec![true; 4], z).unwrap();
        match fit_mple(&data) {
            Err(CoxError::Separation(_)) | Err(CoxError::Singular) => {}
            other => panic!("expected separation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_p_not_below_n() {
        let data = random_data(3, 3, 1);
        assert!(fit_mple(&data).is_err());
    }
}
