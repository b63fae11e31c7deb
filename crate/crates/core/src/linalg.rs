//! Small dense linear-algebra helpers on `ndarray` matrices.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{CoxError, Result};

/// Entrywise max norm and the two induced operator norms of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixNorms {
    /// max_{ij} |a_ij|
    pub entrywise_max: f64,
    /// Maximum absolute column sum.
    pub op_1: f64,
    /// Maximum absolute row sum.
    pub op_inf: f64,
}

pub fn matrix_norms(a: ArrayView2<f64>) -> Result<MatrixNorms> {
    let (m, k) = a.dim();
    if m != k {
        return Err(CoxError::DimensionMismatch(format!(
            "matrix norms need a square matrix, got {m}x{k}"
        )));
    }
    let mut entrywise_max = 0.0f64;
    let mut col_sums = vec![0.0; k];
    let mut op_inf = 0.0f64;
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..k {
            let v = a[[i, j]].abs();
            entrywise_max = entrywise_max.max(v);
            row_sum += v;
            col_sums[j] += v;
        }
        op_inf = op_inf.max(row_sum);
    }
    let op_1 = col_sums.into_iter().fold(0.0, f64::max);
    Ok(MatrixNorms {
        entrywise_max,
        op_1,
        op_inf,
    })
}

/// Lower-triangular Cholesky factor `L` with `a = L Lᵀ`.
///
/// A zero pivot is accepted (positive semidefinite input with an exactly
/// singular trailing block); a negative one is rejected.
pub fn cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoxError::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        let scale = a[[j, j]].abs().max(1.0);
        if d < -1e-12 * scale || !d.is_finite() {
            return Err(CoxError::NotPositiveDefinite(j));
        }
        let d = d.max(0.0).sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = if d > 0.0 { s / d } else { 0.0 };
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let l = cholesky(a)?;
    let n = l.nrows();
    for j in 0..n {
        if l[[j, j]] <= 1e-300 {
            return Err(CoxError::Singular);
        }
    }
    let mut inv = Array2::<f64>::zeros((n, n));
    let mut col = Array1::<f64>::zeros(n);
    for c in 0..n {
        col.fill(0.0);
        col[c] = 1.0;
        // forward: L y = e_c
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[[i, k]] * col[k];
            }
            col[i] = s / l[[i, i]];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * col[k];
            }
            col[i] = s / l[[i, i]];
        }
        inv.column_mut(c).assign(&col);
    }
    Ok(inv)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: ArrayView2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.to_owned();
    // symmetrize round-off
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = s;
            m[[j, i]] = s;
        }
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    m[[k, p]] = c * akp - s * akq;
                    m[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[[p, k]];
                    let aqk = m[[q, k]];
                    m[[p, k]] = c * apk - s * aqk;
                    m[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn norms_of_identity() {
        let n = matrix_norms(Array2::<f64>::eye(4).view()).unwrap();
        assert_eq!((n.entrywise_max, n.op_1, n.op_inf), (1.0, 1.0, 1.0));
    }

    #[test]
    fn norms_of_small_matrix() {
        let a = array![[1.0, -2.0], [3.0, 4.0]];
        let n = matrix_norms(a.view()).unwrap();
        assert_eq!((n.entrywise_max, n.op_1, n.op_inf), (4.0, 6.0, 7.0));
    }

    #[test]
    fn norms_reject_rectangular() {
        assert!(matrix_norms(Array2::<f64>::zeros((2, 3)).view()).is_err());
    }

    #[test]
    fn transpose_swaps_operator_norms() {
        let a = array![[0.3, -1.2, 2.0], [0.0, 5.5, -0.1], [7.0, 0.25, 1.0]];
        let n = matrix_norms(a.view()).unwrap();
        let nt = matrix_norms(a.t()).unwrap();
        assert_eq!(n.op_1, nt.op_inf);
        assert_eq!(n.op_inf, nt.op_1);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 3.0, 0.5], [0.4, 0.5, 1.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(cholesky(a.view()), Err(CoxError::NotPositiveDefinite(1))));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 3.0, 0.5], [0.4, 0.5, 1.0]];
        let inv = spd_inverse(a.view()).unwrap();
        let id = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[[i, j]] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let ev = symmetric_eigenvalues(a.view());
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
