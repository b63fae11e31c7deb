//! Bounded-variable dual simplex for one CLIME column,
//! `min ‖b‖₁  s.t.  ‖V b − e_j‖_∞ ≤ λ`.
//!
//! Encoding: `b = b⁺ − b⁻` with `b± ≥ 0`, and one ranged row per coordinate,
//! `V b⁺ − V b⁻ − t = e_j − λ1` with `0 ≤ t ≤ 2λ`. The all-`t` basis is dual
//! feasible for every λ, so no phase one is needed and a solved basis can be
//! reused as the starting point for another λ.
//!
//! Only the `b⁺` and `t` columns of the tableau are stored: the `b⁻` column is
//! always the negated `b⁺` column, and its reduced cost is `2 − d(b⁺)`.

use ndarray::{Array1, ArrayView2};

use super::ColumnStatus;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// Leaving-row selection for the dual simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-subscript infeasible basic variable; entering ties broken by
    /// smallest subscript.
    Bland,
    /// Most infeasible row, switching to `Bland` for the rest of the solve
    /// after a run of degenerate pivots.
    LargestInfeasibility,
    /// Largest squared infeasibility relative to the squared norm of the
    /// corresponding row of the basis inverse (dual steepest edge), with the
    /// same Bland fallback.
    SteepestEdge,
}

/// `x += a·y`.
fn axpy(x: &mut [f64], a: f64, y: &[f64]) {
    for (x, &y) in x.iter_mut().zip(y) {
        *x += a * y;
    }
}

/// `x += a·y` (skipped when `y` is empty), returning `‖x‖²` of the result.
/// Four independent partial sums let the loop vectorize.
fn axpy_sq(x: &mut [f64], a: f64, y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    if y.is_empty() {
        for chunk in x.chunks(4) {
            for (k, v) in chunk.iter().enumerate() {
                acc[k] += v * v;
            }
        }
    } else {
        let mut xc = x.chunks_exact_mut(4);
        let mut yc = y.chunks_exact(4);
        for (xs, ys) in (&mut xc).zip(&mut yc) {
            for k in 0..4 {
                xs[k] += a * ys[k];
                acc[k] += xs[k] * xs[k];
            }
        }
        for (xv, &yv) in xc.into_remainder().iter_mut().zip(yc.remainder()) {
            *xv += a * yv;
            acc[0] += *xv * *xv;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

pub(crate) struct ColumnSolver {
    p: usize,
    j: usize,
    // p × 2p row-major: b⁺ block then t block
    tab: Vec<f64>,
    red: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x_b: Vec<f64>,
    // squared norms of the rows of the basis inverse
    weights: Vec<f64>,
    lambda: f64,
    rule: PivotRule,
    pub pivots: usize,
}

impl ColumnSolver {
    pub fn new(v: ArrayView2<f64>, j: usize, rule: PivotRule) -> Self {
        let p = v.nrows();
        let w = 2 * p;
        let mut tab = vec![0.0; p * w];
        for r in 0..p {
            for k in 0..p {
                tab[r * w + k] = -v[[r, k]];
            }
            tab[r * w + p + r] = 1.0;
        }
        let mut red = vec![0.0; w];
        red[..p].iter_mut().for_each(|d| *d = 1.0);
        let mut state = vec![State::Lower; 3 * p];
        let basis: Vec<usize> = (0..p).map(|r| 2 * p + r).collect();
        for &b in &basis {
            state[b] = State::Basic;
        }
        Self {
            p,
            j,
            tab,
            red,
            basis,
            state,
            x_b: vec![0.0; p],
            weights: vec![1.0; p],
            lambda: 0.0,
            rule,
            pivots: 0,
        }
    }

    /// Stored column and sign for variable `v`.
    fn column(&self, v: usize) -> (usize, f64) {
        let p = self.p;
        if v < p {
            (v, 1.0)
        } else if v < 2 * p {
            (v - p, -1.0)
        } else {
            (v - p, 1.0)
        }
    }

    fn reduced_cost(&self, v: usize) -> f64 {
        let p = self.p;
        if v < p {
            self.red[v]
        } else if v < 2 * p {
            2.0 - self.red[v - p]
        } else {
            self.red[v - p]
        }
    }

    fn upper(&self, v: usize) -> f64 {
        if v >= 2 * self.p {
            2.0 * self.lambda
        } else {
            f64::INFINITY
        }
    }

    /// Basic values for the current basis at `self.lambda`.
    fn recompute_primal(&mut self) {
        let (p, w) = (self.p, 2 * self.p);
        let lam = self.lambda;
        let at_upper: Vec<usize> = (0..p)
            .filter(|&k| self.state[2 * p + k] == State::Upper)
            .collect();
        for r in 0..p {
            let row = &self.tab[r * w + p..(r + 1) * w];
            // B⁻¹ = −(t block); rhs = e_j − λ1
            let mut x = -row[self.j] + lam * row.iter().sum::<f64>();
            for &k in &at_upper {
                x -= row[k] * 2.0 * lam;
            }
            self.x_b[r] = x;
        }
    }

    pub fn solve(&mut self, lambda: f64, max_pivots: usize) -> ColumnStatus {
        self.lambda = lambda;
        self.recompute_primal();
        let p = self.p;
        let w = 2 * p;
        let mut iters = 0;
        let mut degenerate_run = 0;
        let mut bland = self.rule == PivotRule::Bland;
        loop {
            // leaving row
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..p {
                let x = self.x_b[r];
                let u = self.upper(self.basis[r]);
                let infeas = if x < -FEAS_TOL {
                    -x
                } else if x > u + FEAS_TOL {
                    x - u
                } else {
                    continue;
                };
                let infeas = if self.rule == PivotRule::SteepestEdge {
                    infeas * infeas / self.weights[r]
                } else {
                    infeas
                };
                leave = match leave {
                    None => Some((r, infeas)),
                    Some((br, bi)) => {
                        let better = if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            infeas > bi || (infeas == bi && self.basis[r] < self.basis[br])
                        };
                        if better { Some((r, infeas)) } else { Some((br, bi)) }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return ColumnStatus::Optimal;
            };
            if iters >= max_pivots {
                return ColumnStatus::IterationLimit;
            }
            let x_r = self.x_b[r];
            let leaving = self.basis[r];
            let too_high = x_r > self.upper(leaving);
            let target = if too_high { self.upper(leaving) } else { 0.0 };

            // ratio test
            let row = &self.tab[r * w..(r + 1) * w];
            let mut enter: Option<(usize, f64)> = None;
            for v in 0..3 * p {
                let st = self.state[v];
                if st == State::Basic {
                    continue;
                }
                if v >= 2 * p && self.lambda == 0.0 {
                    continue; // fixed at zero
                }
                let (c, s) = self.column(v);
                let alpha = s * row[c];
                let ok = match (too_high, st) {
                    (false, State::Lower) => alpha < -PIVOT_TOL,
                    (false, State::Upper) => alpha > PIVOT_TOL,
                    (true, State::Lower) => alpha > PIVOT_TOL,
                    (true, State::Upper) => alpha < -PIVOT_TOL,
                    _ => false,
                };
                if !ok {
                    continue;
                }
                let ratio = self.reduced_cost(v).abs() / alpha.abs();
                if enter.is_none_or(|(_, best)| ratio < best) {
                    enter = Some((v, ratio));
                }
            }
            let Some((q, ratio)) = enter else {
                return ColumnStatus::Infeasible;
            };
            iters += 1;
            self.pivots += 1;
            if ratio == 0.0 {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            let (qc, qs) = self.column(q);
            let dq = self.reduced_cost(q);
            let alpha_r = qs * self.tab[r * w + qc];
            let delta = (x_r - target) / alpha_r;
            let q_value = match self.state[q] {
                State::Upper => self.upper(q),
                _ => 0.0,
            };
            for i in 0..p {
                if i != r {
                    self.x_b[i] -= qs * self.tab[i * w + qc] * delta;
                }
            }
            self.x_b[r] = q_value + delta;

            // tableau pivot on (r, q)
            {
                let inv = 1.0 / alpha_r;
                for v in &mut self.tab[r * w..(r + 1) * w] {
                    *v *= inv;
                }
                let track = self.rule == PivotRule::SteepestEdge;
                let (before, rest) = self.tab.split_at_mut(r * w);
                let (row_r, after) = rest.split_at_mut(w);
                for (i, row) in before.chunks_mut(w).chain(after.chunks_mut(w)).enumerate() {
                    let f = qs * row[qc];
                    if f != 0.0 {
                        let (row_b, row_t) = row.split_at_mut(p);
                        axpy(row_b, -f, &row_r[..p]);
                        if track {
                            let i = if i < r { i } else { i + 1 };
                            self.weights[i] = axpy_sq(row_t, -f, &row_r[p..]);
                        } else {
                            axpy(row_t, -f, &row_r[p..]);
                        }
                    }
                }
                if track {
                    self.weights[r] = axpy_sq(&mut row_r[p..], 0.0, &[]);
                }
                if dq != 0.0 {
                    for (x, &y) in self.red.iter_mut().zip(row_r.iter()) {
                        *x -= dq * y;
                    }
                }
            }
            self.state[leaving] = if too_high { State::Upper } else { State::Lower };
            self.state[q] = State::Basic;
            self.basis[r] = q;
        }
    }

    pub fn solution(&self) -> Array1<f64> {
        let p = self.p;
        let mut b = Array1::zeros(p);
        for (r, &v) in self.basis.iter().enumerate() {
            if v < p {
                b[v] += self.x_b[r];
            } else if v < 2 * p {
                b[v - p] -= self.x_b[r];
            }
        }
        b
    }
}
