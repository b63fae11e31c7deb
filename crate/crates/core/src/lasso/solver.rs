use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::{kkt_residual, CoxFit};
use crate::error::{CoxError, Result};
use crate::surv::{EtaState, SurvivalDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct LassoOptions {
    pub max_outer: usize,
    /// Coordinate descent stops when no coefficient moves more than this.
    pub inner_tol: f64,
    /// Outer loop stops once the objective changes by less than this ...
    pub outer_tol: f64,
    /// ... and the optimality residual is below this.
    pub kkt_tol: f64,
    pub max_halvings: usize,
    pub max_inner_sweeps: usize,
    /// Scale covariates to unit variance before fitting; coefficients are
    /// returned on the original scale.
    pub standardize: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            max_outer: 100,
            inner_tol: 1e-8,
            outer_tol: 1e-7,
            kkt_tol: 1e-7,
            max_halvings: 30,
            max_inner_sweeps: 10_000,
            standardize: false,
        }
    }
}

/// A dataset prepared for repeated fits (covariates stored column-major).
pub(crate) struct Problem<'a> {
    data: std::borrow::Cow<'a, SurvivalDataset>,
    xt: Array2<f64>,
    scales: Option<Array1<f64>>,
    opts: LassoOptions,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn l1(b: &Array1<f64>) -> f64 {
    b.iter().map(|v| v.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Problem<'a> {
    pub fn new(data: &'a SurvivalDataset, opts: &LassoOptions) -> Result<Self> {
        data.require_events()?;
        let (data, scales) = if opts.standardize {
            let z = data.covariates();
            let n = data.n() as f64;
            let mean = z.mean_axis(Axis(0)).unwrap();
            let scales = Array1::from_shape_fn(data.p(), |j| {
                let v = z.column(j).iter().map(|x| (x - mean[j]).powi(2)).sum::<f64>() / n;
                if v > 0.0 { v.sqrt() } else { 1.0 }
            });
            (std::borrow::Cow::Owned(data.scaled_columns(scales.view())), Some(scales))
        } else {
            (std::borrow::Cow::Borrowed(data), None)
        };
        let xt = data.covariates().t().as_standard_layout().into_owned();
        Ok(Self {
            data,
            xt,
            scales,
            opts: opts.clone(),
        })
    }

    pub fn fit(&self, lambda: f64, warm_start: Option<ArrayView1<f64>>) -> Result<CoxFit> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CoxError::InvalidInput(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let p = self.data.p();
        let start = match warm_start {
            Some(w) => {
                self.data.check_beta(w)?;
                let mut b = w.to_owned();
                if let Some(s) = &self.scales {
                    b *= s;
                }
                b
            }
            None => Array1::zeros(p),
        };
        let mut fit = self.solve(lambda, start);
        if let Some(s) = &self.scales {
            fit.beta /= s;
        }
        Ok(fit)
    }

    fn eta(&self, beta: &Array1<f64>) -> Array1<f64> {
        self.data.covariates().dot(beta)
    }

    fn score_of(&self, state: &EtaState) -> Array1<f64> {
        -self.xt.dot(&state.gradient(&self.data))
    }

    fn solve(&self, lambda: f64, start: Array1<f64>) -> CoxFit {
        let data: &SurvivalDataset = &self.data;
        let (n, p) = (data.n(), data.p());
        let opts = &self.opts;

        let zero_state = EtaState::new(data, &Array1::zeros(n));
        let score0 = self.score_of(&zero_state);
        if lambda >= score0.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
            return CoxFit {
                beta: Array1::zeros(p),
                lambda,
                objective: zero_state.loss,
                iterations: 0,
                converged: true,
                active_set: Vec::new(),
                kkt_residual: kkt_residual(score0.view(), Array1::zeros(p).view(), lambda),
                diagnostic: None,
            };
        }

        let mut beta = start;
        let mut state = EtaState::new(data, &self.eta(&beta));
        let mut objective = state.loss + lambda * l1(&beta);
        let mut last_change = f64::INFINITY;
        let mut converged = false;
        let mut diagnostic = None;
        let mut iterations = 0;

        let mut hx = Array2::<f64>::zeros((p, n));
        let mut curv = vec![0.0; p];
        let mut r = vec![0.0; n];

        let mut kkt;
        loop {
            let grad_eta = state.gradient(data);
            let grad_b = self.xt.dot(&grad_eta);
            kkt = kkt_residual((-&grad_b).view(), beta.view(), lambda);
            if kkt <= opts.kkt_tol && (last_change < opts.outer_tol || kkt <= 1e-12) {
                converged = true;
                break;
            }
            if iterations >= opts.max_outer {
                diagnostic = Some(format!(
                    "no convergence after {} outer steps (kkt residual {kkt:.3e})",
                    opts.max_outer
                ));
                break;
            }
            iterations += 1;

            for j in 0..p {
                let xj = self.xt.row(j);
                let mut row = hx.row_mut(j);
                let out = row.as_slice_mut().unwrap();
                state.hess_vec(data, xj.as_slice().unwrap(), out);
                curv[j] = dot(xj.as_slice().unwrap(), out);
            }

            // coordinate descent on the quadratic model; r = H X (new − beta)
            let mut new = beta.clone();
            r.iter_mut().for_each(|v| *v = 0.0);
            let update = |j: usize, new: &mut Array1<f64>, r: &mut [f64]| -> f64 {
                let c = curv[j];
                let g = grad_b[j] + dot(self.xt.row(j).as_slice().unwrap(), r);
                let old = new[j];
                let val = if c > 1e-300 {
                    soft_threshold(c * old - g, lambda) / c
                } else {
                    0.0
                };
                let delta = val - old;
                if delta != 0.0 {
                    new[j] = val;
                    let hj = hx.row(j);
                    for (ri, &h) in r.iter_mut().zip(hj.as_slice().unwrap()) {
                        *ri += delta * h;
                    }
                }
                delta.abs()
            };
            let mut sweeps = 0;
            loop {
                let mut max_change = 0.0f64;
                for j in 0..p {
                    max_change = max_change.max(update(j, &mut new, &mut r));
                }
                sweeps += 1;
                if max_change < opts.inner_tol || sweeps >= opts.max_inner_sweeps {
                    break;
                }
                loop {
                    let mut max_change = 0.0f64;
                    for j in 0..p {
                        if new[j] != 0.0 {
                            max_change = max_change.max(update(j, &mut new, &mut r));
                        }
                    }
                    sweeps += 1;
                    if max_change < opts.inner_tol || sweeps >= opts.max_inner_sweeps {
                        break;
                    }
                }
            }

            let direction = &new - &beta;
            if direction.iter().all(|&d| d == 0.0) {
                converged = kkt <= 1e-6;
                if !converged {
                    diagnostic = Some(format!("stalled with kkt residual {kkt:.3e}"));
                }
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let cand = &beta + &(&direction * step);
                let st = EtaState::new(data, &self.eta(&cand));
                let obj = st.loss + lambda * l1(&cand);
                if obj <= objective + 1e-12 {
                    accepted = Some((cand, st, obj));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((cand, st, obj)) => {
                    last_change = (objective - obj).abs();
                    beta = cand;
                    state = st;
                    objective = obj;
                }
                None => {
                    converged = kkt <= 1e-6;
                    diagnostic = Some(format!(
                        "step rejected after {} halvings (kkt residual {kkt:.3e})",
                        opts.max_halvings
                    ));
                    break;
                }
            }
        }

        let active_set = (0..p).filter(|&j| beta[j] != 0.0).collect();
        CoxFit {
            beta,
            lambda,
            objective,
            iterations,
            converged,
            active_set,
            kkt_residual: kkt,
            diagnostic,
        }
    }
}
