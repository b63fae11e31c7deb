//! Dense two-phase tableau simplex with Bland's smallest-subscript rule.
//!
//! Problems are `min cᵀx  s.t.  A x ≤ b,  x ≥ 0`; rows with negative right-hand
//! side get an artificial variable and are made feasible in phase one.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub costs: Vec<f64>,
    /// One row per inequality `a·x ≤ b`.
    pub constraint_matrix: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub solution: Vec<f64>,
    pub optimum: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("malformed linear program")]
    Malformed,
}

pub const PIVOT_TOL: f64 = 1e-9;

struct Tableau {
    rows: usize,
    cols: usize,
    // rows × (cols + 1), last entry of each row is the right-hand side
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, q: usize, obj: &mut [f64]) {
        let w = self.cols + 1;
        let piv = self.a[r * w + q];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= piv;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (row_r, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[q];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(row_r.iter()) {
                    *x -= f * y;
                }
            }
        }
        let f = obj[q];
        if f != 0.0 {
            for (x, &y) in obj.iter_mut().zip(row_r.iter()) {
                *x -= f * y;
            }
        }
        self.basis[r] = q;
    }

    /// Bland: lowest-index improving column, lowest-index basic variable on
    /// ratio ties. `obj` holds reduced costs with the negated objective value
    /// in its last slot.
    fn run(&mut self, obj: &mut [f64], allowed: usize, max_iter: usize, iters: &mut usize) -> Result<(), LpError> {
        loop {
            let Some(q) = (0..allowed).find(|&j| obj[j] < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Err(LpError::Unbounded);
            };
            if *iters >= max_iter {
                return Err(LpError::IterationLimit);
            }
            *iters += 1;
            self.pivot(r, q, obj);
        }
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let n = problem.costs.len();
    let m = problem.bounds.len();
    solve_lp_with_limit(problem, 50 * (n + m).max(1))
}

pub fn solve_lp_with_limit(problem: &LpProblem, max_iter: usize) -> Result<LpSolution, LpError> {
    let n = problem.costs.len();
    let m = problem.bounds.len();
    if problem.constraint_matrix.len() != m
        || problem.constraint_matrix.iter().any(|r| r.len() != n)
        || problem
            .constraint_matrix
            .iter()
            .flatten()
            .chain(&problem.costs)
            .chain(&problem.bounds)
            .any(|v| !v.is_finite())
    {
        return Err(LpError::Malformed);
    }

    // columns: x (n) | slacks (m) | artificials (one per negative-rhs row)
    let neg_rows: Vec<usize> = (0..m).filter(|&i| problem.bounds[i] < 0.0).collect();
    let n_art = neg_rows.len();
    let cols = n + m + n_art;
    let w = cols + 1;
    let mut tab = Tableau {
        rows: m,
        cols,
        a: vec![0.0; m * w],
        basis: vec![0; m],
    };
    let mut art = 0;
    for i in 0..m {
        let flip = if problem.bounds[i] < 0.0 { -1.0 } else { 1.0 };
        let row = &mut tab.a[i * w..(i + 1) * w];
        for j in 0..n {
            row[j] = flip * problem.constraint_matrix[i][j];
        }
        row[n + i] = flip;
        row[cols] = flip * problem.bounds[i];
        if flip < 0.0 {
            row[n + m + art] = 1.0;
            tab.basis[i] = n + m + art;
            art += 1;
        } else {
            tab.basis[i] = n + i;
        }
    }

    let mut iters = 0;
    if n_art > 0 {
        // phase one: minimize the sum of artificials
        let mut obj = vec![0.0; w];
        for j in (n + m)..cols {
            obj[j] = 1.0;
        }
        for &i in &neg_rows {
            for j in 0..w {
                obj[j] -= tab.a[i * w + j];
            }
        }
        tab.run(&mut obj, cols, max_iter, &mut iters)?;
        if -obj[cols] > 1e-9 {
            return Err(LpError::Infeasible);
        }
        // drive zero-level artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= n + m {
                if let Some(q) = (0..n + m).find(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
                    tab.pivot(r, q, &mut obj);
                }
            }
        }
    }

    let mut obj = vec![0.0; w];
    obj[..n].copy_from_slice(&problem.costs);
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < n { problem.costs[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                obj[j] -= cb * tab.a[r * w + j];
            }
        }
    }
    tab.run(&mut obj, n + m, max_iter, &mut iters)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r);
        }
    }
    let optimum = problem.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        solution: x,
        optimum,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        // min x  s.t.  x >= 1
        let lp = LpProblem {
            costs: vec![1.0],
            constraint_matrix: vec![vec![-1.0]],
            bounds: vec![-1.0],
        };
        let s = solve_lp(&lp).unwrap();
        assert!((s.solution[0] - 1.0).abs() < 1e-12);
        assert!((s.optimum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sum_at_least_two() {
        let lp = LpProblem {
            costs: vec![1.0, 1.0],
            constraint_matrix: vec![vec![-1.0, -1.0]],
            bounds: vec![-2.0],
        };
        let s = solve_lp(&lp).unwrap();
        assert!((s.optimum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn classic_maximization() {
        // max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18  → 36 at (2, 6)
        let lp = LpProblem {
            costs: vec![-3.0, -5.0],
            constraint_matrix: vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            bounds: vec![4.0, 12.0, 18.0],
        };
        let s = solve_lp(&lp).unwrap();
        assert!((s.optimum + 36.0).abs() < 1e-9);
        assert!((s.solution[0] - 2.0).abs() < 1e-9 && (s.solution[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let infeasible = LpProblem {
            costs: vec![1.0],
            constraint_matrix: vec![vec![1.0], vec![-1.0]],
            bounds: vec![1.0, -2.0],
        };
        assert_eq!(solve_lp(&infeasible), Err(LpError::Infeasible));
        let unbounded = LpProblem {
            costs: vec![-1.0, 0.0],
            constraint_matrix: vec![vec![-1.0, 1.0]],
            bounds: vec![1.0],
        };
        assert_eq!(solve_lp(&unbounded), Err(LpError::Unbounded));
    }

    #[test]
    fn malformed_rejected() {
        let lp = LpProblem {
            costs: vec![1.0, 2.0],
            constraint_matrix: vec![vec![1.0]],
            bounds: vec![1.0],
        };
        assert_eq!(solve_lp(&lp), Err(LpError::Malformed));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example (cycles under the textbook largest-coefficient rule)
        let lp = LpProblem {
            costs: vec![-0.75, 150.0, -0.02, 6.0],
            constraint_matrix: vec![
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            bounds: vec![0.0, 0.0, 1.0],
        };
        let s = solve_lp(&lp).unwrap();
        assert!((s.optimum + 0.05).abs() < 1e-9);
    }
}
