//! Debiased one-step estimation, confidence intervals and p-values, and the
//! classical maximum partial likelihood baseline.

mod mple;
pub mod normal;

use ndarray::{Array1, ArrayView1};

pub use mple::{fit_mple, MpleFit};
pub use normal::{normal_cdf, normal_quantile};

use crate::error::{CoxError, Result};
use crate::precision::PrecisionEstimate;

/// Per-coordinate flags raised while building intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateWarning {
    /// `Θ̂_jj ≤ 0`; `1/V̂_jj` was used in its place.
    DiagonalSubstituted,
    /// `Θ̂_jj ≤ 0` and no positive `V̂_jj` was available; interval is degenerate.
    DiagonalUnusable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasedInference {
    pub b_hat: Array1<f64>,
    pub theta_used: PrecisionEstimate,
    /// Coverage level `1 − q`.
    pub level: f64,
    pub ci_lower: Array1<f64>,
    pub ci_upper: Array1<f64>,
    pub p_values: Array1<f64>,
    pub se: Array1<f64>,
    pub warnings: Vec<Option<CoordinateWarning>>,
}

impl DebiasedInference {
    pub fn widths(&self) -> Array1<f64> {
        &self.ci_upper - &self.ci_lower
    }

    pub fn covers(&self, j: usize, value: f64) -> bool {
        self.ci_lower[j] <= value && value <= self.ci_upper[j]
    }
}

/// `b̂ = β̂ + Θ̂ ℓ̇(β̂)`.
pub fn debias(
    beta_hat: ArrayView1<f64>,
    theta: &PrecisionEstimate,
    score_at_beta_hat: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let p = beta_hat.len();
    if theta.theta.dim() != (p, p) || score_at_beta_hat.len() != p {
        return Err(CoxError::DimensionMismatch(format!(
            "beta has length {p}, theta is {:?}, score has length {}",
            theta.theta.dim(),
            score_at_beta_hat.len()
        )));
    }
    Ok(&beta_hat + &theta.theta.dot(&score_at_beta_hat))
}

fn check_level(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(CoxError::InvalidInput(format!("q must lie in (0, 1), got {q}")));
    }
    Ok(())
}

/// Variance entry for coordinate j after the nonpositive-diagonal guard.
fn guarded_diagonal(theta: &PrecisionEstimate, j: usize) -> (f64, Option<CoordinateWarning>) {
    let d = theta.theta[[j, j]];
    if d > 0.0 {
        return (d, None);
    }
    let v = theta.vhat_diag.get(j).copied().unwrap_or(0.0);
    if v > 0.0 {
        log::warn!("theta[{j},{j}] = {d:e} is not positive; using 1/V[{j},{j}]");
        (1.0 / v, Some(CoordinateWarning::DiagonalSubstituted))
    } else {
        (0.0, Some(CoordinateWarning::DiagonalUnusable))
    }
}

/// Intervals `b̂_j ± z_{q/2} √(Θ̂_jj / n)` and two-sided p-values for
/// `β_j = 0`.
pub fn confidence_intervals(
    b_hat: ArrayView1<f64>,
    theta: &PrecisionEstimate,
    n: usize,
    q: f64,
) -> Result<DebiasedInference> {
    check_level(q)?;
    if n == 0 {
        return Err(CoxError::InvalidInput("n must be positive".into()));
    }
    let p = b_hat.len();
    if theta.theta.dim() != (p, p) {
        return Err(CoxError::DimensionMismatch("theta and b_hat sizes differ".into()));
    }
    let z = normal_quantile(1.0 - q / 2.0)?;
    let nf = n as f64;
    let mut se = Array1::zeros(p);
    let mut lower = Array1::zeros(p);
    let mut upper = Array1::zeros(p);
    let mut pv = Array1::zeros(p);
    let mut warnings = Vec::with_capacity(p);
    for j in 0..p {
        let (d, w) = guarded_diagonal(theta, j);
        warnings.push(w);
        let s = (d / nf).sqrt();
        se[j] = s;
        lower[j] = b_hat[j] - z * s;
        upper[j] = b_hat[j] + z * s;
        pv[j] = if d > 0.0 { p_value(b_hat[j], d, n)? } else if b_hat[j] == 0.0 { 1.0 } else { 0.0 };
    }
    Ok(DebiasedInference {
        b_hat: b_hat.to_owned(),
        theta_used: theta.clone(),
        level: 1.0 - q,
        ci_lower: lower,
        ci_upper: upper,
        p_values: pv,
        se,
        warnings,
    })
}

/// Two-sided p-value `2(1 − Φ(√n |b_j| / √θ_jj))`.
pub fn p_value(b_j: f64, theta_jj: f64, n: usize) -> Result<f64> {
    if !(theta_jj > 0.0) {
        return Err(CoxError::InvalidInput(format!("theta_jj must be positive, got {theta_jj}")));
    }
    let stat = (n as f64).sqrt() * b_j.abs() / theta_jj.sqrt();
    Ok((2.0 * normal::normal_sf(stat)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearComboInference {
    pub estimate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub p_value: f64,
    pub se: f64,
}

/// Inference for `cᵀβ` with `‖c‖₁ = 1`: `cᵀb̂ ± z_{q/2} n^{-1/2} (cᵀΘ̂c)^{1/2}`.
pub fn linear_combo_inference(
    c: ArrayView1<f64>,
    b_hat: ArrayView1<f64>,
    theta: &PrecisionEstimate,
    n: usize,
    q: f64,
) -> Result<LinearComboInference> {
    check_level(q)?;
    let p = b_hat.len();
    if c.len() != p || theta.theta.dim() != (p, p) {
        return Err(CoxError::DimensionMismatch("c, b_hat and theta sizes differ".into()));
    }
    let norm1: f64 = c.iter().map(|x| x.abs()).sum();
    if (norm1 - 1.0).abs() > 1e-10 {
        return Err(CoxError::InvalidInput(format!("c must have unit l1 norm, got {norm1}")));
    }
    let quad = c.dot(&theta.theta.dot(&c));
    if !(quad > 0.0) {
        return Err(CoxError::Numerical(format!(
            "quadratic form c'Θc = {quad:e} is not positive"
        )));
    }
    let estimate = c.dot(&b_hat);
    let se = (quad / n as f64).sqrt();
    let z = normal_quantile(1.0 - q / 2.0)?;
    Ok(LinearComboInference {
        estimate,
        ci_lower: estimate - z * se,
        ci_upper: estimate + z * se,
        p_value: p_value(estimate, quad, n)?,
        se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{ColumnStatus, ThetaVariant};
    use ndarray::{array, Array2};

    fn estimate(theta: Array2<f64>) -> PrecisionEstimate {
        let p = theta.nrows();
        PrecisionEstimate {
            vhat_diag: Array1::ones(p),
            theta,
            lambda_n: 0.0,
            variant: ThetaVariant::Hat,
            column_status: vec![ColumnStatus::Optimal; p],
            l1_norms: vec![0.0; p],
            pivots: vec![0; p],
        }
    }

    #[test]
    fn debias_simple_cases() {
        let beta = array![0.5, -0.2, 0.0];
        let th = estimate(Array2::eye(3));
        assert_eq!(debias(beta.view(), &th, Array1::zeros(3).view()).unwrap(), beta);
        let s = array![0.1, 0.2, -0.3];
        assert_eq!(debias(beta.view(), &th, s.view()).unwrap(), &beta + &s);
    }

    #[test]
    fn coordinate_interval_hand_value() {
        let th = estimate(Array2::eye(1));
        let inf = confidence_intervals(array![0.5].view(), &th, 100, 0.05).unwrap();
        assert!((inf.ci_lower[0] - 0.304004).abs() < 1e-6);
        assert!((inf.ci_upper[0] - 0.695996).abs() < 1e-6);
        assert!((inf.widths()[0] - 2.0 * 1.959963984540054 * 0.1).abs() < 1e-14);
    }

    #[test]
    fn width_vanishes_as_q_tends_to_one() {
        let th = estimate(Array2::eye(1));
        let inf = confidence_intervals(array![0.5].view(), &th, 100, 1.0 - 1e-9).unwrap();
        assert!(inf.widths()[0] < 1e-9);
        assert!(confidence_intervals(array![0.5].view(), &th, 100, 1.0).is_err());
        assert!(confidence_intervals(array![0.5].view(), &th, 100, 0.0).is_err());
    }

    #[test]
    fn p_value_cases() {
        assert_eq!(p_value(0.0, 1.0, 50).unwrap(), 1.0);
        // √n|b|/√θ = 1.959964 → 0.05
        let p = p_value(0.1959963984540054, 1.0, 100).unwrap();
        assert!((p - 0.05).abs() < 1e-12);
        assert!(p_value(0.1, 0.0, 10).is_err());
    }

    #[test]
    fn diagonal_guard_substitutes() {
        let mut th = estimate(array![[-0.1, 0.0], [0.0, 2.0]]);
        th.vhat_diag = array![4.0, 1.0];
        let inf = confidence_intervals(array![0.0, 0.0].view(), &th, 100, 0.05).unwrap();
        assert_eq!(inf.warnings[0], Some(CoordinateWarning::DiagonalSubstituted));
        assert!((inf.se[0] - (0.25f64 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(inf.warnings[1], None);
    }

    #[test]
    fn linear_combo_half_half() {
        let th = estimate(Array2::eye(3));
        let c = array![0.5, 0.5, 0.0];
        let r = linear_combo_inference(c.view(), Array1::zeros(3).view(), &th, 100, 0.05).unwrap();
        let half = 1.959963984540054 * 0.1 * 0.5f64.sqrt();
        assert!((r.ci_upper - half).abs() < 1e-12 && (r.ci_lower + half).abs() < 1e-12);
        assert!(linear_combo_inference(array![1.0, 1.0, 0.0].view(), Array1::zeros(3).view(), &th, 100, 0.05).is_err());
    }

    #[test]
    fn linear_combo_reduces_to_coordinate() {
        let th = estimate(array![[2.0, 0.3], [0.1, 0.5]]);
        let b = array![0.4, -0.7];
        let coord = confidence_intervals(b.view(), &th, 80, 0.1).unwrap();
        let r = linear_combo_inference(array![0.0, 1.0].view(), b.view(), &th, 80, 0.1).unwrap();
        assert!((r.ci_lower - coord.ci_lower[1]).abs() < 1e-15);
        assert!((r.ci_upper - coord.ci_upper[1]).abs() < 1e-15);
        assert!((r.p_value - coord.p_values[1]).abs() < 1e-15);
    }
}
