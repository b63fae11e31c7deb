//! CLIME-type sparse estimation of the inverse of `V̂`.
//!
//! Row `j` of the estimate solves `min ‖b‖₁ s.t. ‖V b − e_j‖_∞ ≤ λ_n`. Rows are
//! assembled as solved, without symmetrization.

mod dual;
pub mod simplex;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

pub use dual::PivotRule;
pub use simplex::{solve_lp, LpError, LpProblem, LpSolution};

use crate::error::{CoxError, Result};
use crate::folds::{assign_folds, split};
use crate::lasso::log_grid;
use crate::surv::{vhat, SurvivalDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaVariant {
    Hat,
    Tilde,
}

impl std::str::FromStr for ThetaVariant {
    type Err = CoxError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hat" => Ok(ThetaVariant::Hat),
            "tilde" => Ok(ThetaVariant::Tilde),
            other => Err(CoxError::InvalidInput(format!("unknown theta variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for ThetaVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThetaVariant::Hat => "hat",
            ThetaVariant::Tilde => "tilde",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    /// Row j holds the solution of the j-th column problem.
    pub theta: Array2<f64>,
    pub lambda_n: f64,
    pub variant: ThetaVariant,
    pub column_status: Vec<ColumnStatus>,
    pub l1_norms: Vec<f64>,
    /// Diagonal of the matrix the estimate inverts; used by the
    /// nonpositive-diagonal guard in interval construction.
    pub vhat_diag: Array1<f64>,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimeOptions {
    pub rule: PivotRule,
    /// Pivot budget per column solve, as a multiple of p.
    pub pivot_budget_per_dim: usize,
}

impl Default for ClimeOptions {
    fn default() -> Self {
        Self {
            rule: PivotRule::SteepestEdge,
            pivot_budget_per_dim: 50,
        }
    }
}

fn check_square(v: ArrayView2<f64>) -> Result<usize> {
    let p = v.nrows();
    if v.ncols() != p || p == 0 {
        return Err(CoxError::DimensionMismatch(format!(
            "expected a nonempty square matrix, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CoxError::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(p)
}

fn check_lambda(lambda_n: f64) -> Result<()> {
    if !(lambda_n >= 0.0) || !lambda_n.is_finite() {
        return Err(CoxError::InvalidInput(format!("lambda_n must be finite and >= 0, got {lambda_n}")));
    }
    Ok(())
}

/// One column problem `argmin{‖b‖₁ : ‖V b − e_j‖_∞ ≤ λ_n}`.
pub fn clime_column(v: ArrayView2<f64>, j: usize, lambda_n: f64) -> Result<(Array1<f64>, ColumnStatus)> {
    let p = check_square(v)?;
    check_lambda(lambda_n)?;
    if j >= p {
        return Err(CoxError::InvalidInput(format!("column {j} out of range for p = {p}")));
    }
    let opts = ClimeOptions::default();
    let mut solver = dual::ColumnSolver::new(v, j, opts.rule);
    let status = solver.solve(lambda_n, opts.pivot_budget_per_dim * p);
    Ok((solver.solution(), status))
}

/// The same column problem written as a general LP over `(b⁺, b⁻)` with `2p`
/// inequality rows and solved by the two-phase simplex.
pub fn clime_column_lp(v: ArrayView2<f64>, j: usize, lambda_n: f64) -> Result<(Array1<f64>, ColumnStatus)> {
    let p = check_square(v)?;
    check_lambda(lambda_n)?;
    let mut rows = Vec::with_capacity(2 * p);
    let mut bounds = Vec::with_capacity(2 * p);
    for k in 0..p {
        let e = if k == j { 1.0 } else { 0.0 };
        let mut up = Vec::with_capacity(2 * p);
        up.extend(v.row(k).iter().copied());
        up.extend(v.row(k).iter().map(|x| -x));
        let down: Vec<f64> = up.iter().map(|x| -x).collect();
        rows.push(up);
        bounds.push(lambda_n + e);
        rows.push(down);
        bounds.push(lambda_n - e);
    }
    let lp = LpProblem {
        costs: vec![1.0; 2 * p],
        constraint_matrix: rows,
        bounds,
    };
    match simplex::solve_lp_with_limit(&lp, 50 * 4 * p) {
        Ok(sol) => {
            let b = Array1::from_shape_fn(p, |k| sol.solution[k] - sol.solution[p + k]);
            Ok((b, ColumnStatus::Optimal))
        }
        Err(LpError::Infeasible) => Ok((Array1::zeros(p), ColumnStatus::Infeasible)),
        Err(LpError::IterationLimit) => Ok((Array1::zeros(p), ColumnStatus::IterationLimit)),
        Err(e) => Err(CoxError::Numerical(e.to_string())),
    }
}

fn assemble(
    rows: Vec<(Array1<f64>, ColumnStatus, usize)>,
    v: ArrayView2<f64>,
    lambda_n: f64,
) -> PrecisionEstimate {
    let p = rows.len();
    let mut theta = Array2::zeros((p, p));
    let mut column_status = Vec::with_capacity(p);
    let mut l1_norms = Vec::with_capacity(p);
    let mut pivots = Vec::with_capacity(p);
    for (j, (b, status, piv)) in rows.into_iter().enumerate() {
        let b = if status == ColumnStatus::Optimal { b } else { Array1::zeros(p) };
        l1_norms.push(b.iter().map(|x| x.abs()).sum());
        theta.row_mut(j).assign(&b);
        column_status.push(status);
        pivots.push(piv);
    }
    PrecisionEstimate {
        theta,
        lambda_n,
        variant: ThetaVariant::Hat,
        column_status,
        l1_norms,
        vhat_diag: v.diag().to_owned(),
        pivots,
    }
}

pub fn clime(v: ArrayView2<f64>, lambda_n: f64) -> Result<PrecisionEstimate> {
    clime_with(v, lambda_n, &ClimeOptions::default())
}

pub fn clime_with(v: ArrayView2<f64>, lambda_n: f64, opts: &ClimeOptions) -> Result<PrecisionEstimate> {
    let p = check_square(v)?;
    check_lambda(lambda_n)?;
    let rows: Vec<_> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut s = dual::ColumnSolver::new(v, j, opts.rule);
            let status = s.solve(lambda_n, opts.pivot_budget_per_dim * p);
            (s.solution(), status, s.pivots)
        })
        .collect();
    Ok(assemble(rows, v, lambda_n))
}

/// Estimates for every value of a decreasing `lambdas` sequence; each column
/// solve starts from the optimal basis of the previous value.
pub fn clime_path(v: ArrayView2<f64>, lambdas: &[f64], opts: &ClimeOptions) -> Result<Vec<PrecisionEstimate>> {
    let p = check_square(v)?;
    for &l in lambdas {
        check_lambda(l)?;
    }
    let per_column: Vec<Vec<(Array1<f64>, ColumnStatus, usize)>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut s = dual::ColumnSolver::new(v, j, opts.rule);
            let mut out = Vec::with_capacity(lambdas.len());
            for &l in lambdas {
                let before = s.pivots;
                let mut status = s.solve(l, opts.pivot_budget_per_dim * p);
                if status != ColumnStatus::Optimal {
                    // retry from the slack basis
                    s = dual::ColumnSolver::new(v, j, opts.rule);
                    status = s.solve(l, opts.pivot_budget_per_dim * p);
                }
                out.push((s.solution(), status, s.pivots.saturating_sub(before)));
            }
            out
        })
        .collect();
    let mut per_column: Vec<_> = per_column.into_iter().map(|c| c.into_iter()).collect();
    Ok(lambdas
        .iter()
        .map(|&l| {
            let rows = per_column.iter_mut().map(|it| it.next().unwrap()).collect();
            assemble(rows, v, l)
        })
        .collect())
}

/// Widens the diagonal: `Θ̃_jj = max(1/V_jj, Θ̂_jj)`, off-diagonals unchanged.
pub fn theta_tilde(theta_hat: &PrecisionEstimate, v: ArrayView2<f64>) -> Result<PrecisionEstimate> {
    let p = check_square(v)?;
    if theta_hat.theta.nrows() != p {
        return Err(CoxError::DimensionMismatch("theta and V sizes differ".into()));
    }
    if let Some(j) = (0..p).find(|&j| !(v[[j, j]] > 0.0)) {
        return Err(CoxError::InvalidInput(format!("V[{j},{j}] must be positive")));
    }
    let mut out = theta_hat.clone();
    for j in 0..p {
        out.theta[[j, j]] = (1.0 / v[[j, j]]).max(theta_hat.theta[[j, j]]);
        out.l1_norms[j] = out.theta.row(j).iter().map(|x| x.abs()).sum();
    }
    out.variant = ThetaVariant::Tilde;
    Ok(out)
}

/// Cross-validation loss of an estimate against a held-out matrix `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvCriterion {
    /// `Σ_j ‖S θ_j − e_j‖²`, the squared Frobenius norm of the column residuals.
    #[default]
    Frobenius,
    /// `tr(M²)` with `M` the matrix whose j-th column is `S θ_j − e_j`.
    TraceSquare,
}

pub fn cv_loss(s: ArrayView2<f64>, theta: ArrayView2<f64>, criterion: CvCriterion) -> f64 {
    let p = s.nrows();
    // column j of m = S θ_j − e_j
    let mut m = s.dot(&theta.t());
    for j in 0..p {
        m[[j, j]] -= 1.0;
    }
    match criterion {
        CvCriterion::Frobenius => m.iter().map(|x| x * x).sum(),
        CvCriterion::TraceSquare => {
            let mut t = 0.0;
            for i in 0..p {
                for k in 0..p {
                    t += m[[i, k]] * m[[k, i]];
                }
            }
            t
        }
    }
}

/// 20 values log-spaced from `0.8·max|V_ij|` down to `1e-3·max|V_ij|`.
pub fn default_clime_grid(v: ArrayView2<f64>) -> Vec<f64> {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    log_grid(0.8 * vmax, 1e-3 * vmax, 20)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvClime {
    pub grid: Vec<f64>,
    /// Fold-summed loss at each grid value (smaller is better).
    pub cv_curve: Vec<f64>,
    pub best_index: usize,
    pub lambda_n_cv: f64,
}

pub fn cv_clime(
    data: &SurvivalDataset,
    beta_hat: ArrayView1<f64>,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvClime> {
    cv_clime_with(data, beta_hat, grid, folds, seed, CvCriterion::Frobenius, &ClimeOptions::default())
}

/// For each fold, estimates are fit on `V̂` of the training subjects and
/// scored against `V̂` of the held-out subjects, both at `beta_hat`. The
/// minimizing grid value wins; ties go to the larger value.
pub fn cv_clime_with(
    data: &SurvivalDataset,
    beta_hat: ArrayView1<f64>,
    grid: &[f64],
    folds: usize,
    seed: u64,
    criterion: CvCriterion,
    opts: &ClimeOptions,
) -> Result<CvClime> {
    data.require_events()?;
    if grid.is_empty() {
        return Err(CoxError::InvalidInput("empty lambda_n grid".into()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].partial_cmp(&grid[a]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();

    let labels = assign_folds(data.events(), folds, seed)?;
    let mut curve = vec![0.0; grid.len()];
    for k in 0..folds {
        let (train_idx, test_idx) = split(&labels, k);
        let v_train = vhat(&data.subset(&train_idx)?, beta_hat)?;
        let v_test = vhat(&data.subset(&test_idx)?, beta_hat)?;
        let path = clime_path(v_train.view(), &sorted, opts)?;
        for (est, &gi) in path.iter().zip(&order) {
            curve[gi] += cv_loss(v_test.view(), est.theta.view(), criterion);
        }
    }
    let mut best_index = 0;
    for i in 1..grid.len() {
        let (c, b) = (curve[i], curve[best_index]);
        if c < b || (c == b && grid[i] > grid[best_index]) {
            best_index = i;
        }
    }
    Ok(CvClime {
        grid: grid.to_vec(),
        cv_curve: curve,
        best_index,
        lambda_n_cv: grid[best_index],
    })
}

/// Largest amount by which an optimal row exceeds its constraint `‖V θ_j − e_j‖_∞ ≤ λ_n`
/// (nonpositive when every optimal row is feasible).
pub fn max_constraint_violation(v: ArrayView2<f64>, est: &PrecisionEstimate) -> f64 {
    let p = v.nrows();
    let prod = v.dot(&est.theta.t());
    let mut worst = 0.0f64;
    for j in 0..p {
        if est.column_status[j] != ColumnStatus::Optimal {
            continue;
        }
        for k in 0..p {
            let e = if k == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[[k, j]] - e).abs() - est.lambda_n);
        }
    }
    worst
}
