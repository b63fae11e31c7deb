//! Standard normal distribution function, its inverse, and a one-sample
//! Kolmogorov–Smirnov test against N(0, 1).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{CoxError, Result};

/// Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// 1 − Φ(x), accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Acklam's rational approximation, relative error 1.15e-9 before refinement.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn rational_lower(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Φ⁻¹(q) for q in (0, 1).
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(CoxError::InvalidInput(format!(
            "normal quantile needs a probability strictly inside (0, 1), got {q}"
        )));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    // solve in the lower half, where 1 - q is exact for q >= 0.5
    let (p, sign) = if q > 0.5 { (1.0 - q, -1.0) } else { (q, 1.0) };
    let mut x = rational_lower(p);
    for _ in 0..2 {
        let e = 0.5 * libm::erfc(-x * FRAC_1_SQRT_2) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(sign * x)
}

/// Two-sided Kolmogorov–Smirnov test of `sample` against N(0, 1).
/// Returns `(D, p-value)`; the p-value uses the asymptotic Kolmogorov
/// distribution with the Stephens small-sample correction.
pub fn ks_test_normal(sample: &[f64]) -> (f64, f64) {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let en = n.sqrt();
    (d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d))
}

/// P(K > x) for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn boundaries_rejected() {
        for q in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(q).is_err());
        }
    }

    #[test]
    fn symmetric() {
        for q in [1e-8, 0.01, 0.2, 0.45] {
            let a = normal_quantile(q).unwrap();
            let b = normal_quantile(1.0 - q).unwrap();
            assert!((a + b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn kolmogorov_tail_known_points() {
        // K_{0.95} ≈ 1.3581, K_{0.99} ≈ 1.6276
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_normal_quantiles() {
        let n = 500;
        let xs: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let (d, p) = ks_test_normal(&xs);
        assert!(d < 0.002);
        assert!(p > 0.99);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.5).collect();
        assert!(ks_test_normal(&shifted).1 < 1e-6);
    }
}
