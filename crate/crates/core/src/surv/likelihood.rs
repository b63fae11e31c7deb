use ndarray::{Array1, Array2, ArrayView1, Zip};

use super::SurvivalDataset;
use crate::error::{CoxError, Result};

/// Risk-set weights at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskWeights {
    pub beta: Array1<f64>,
    /// `Y_i(t) exp(βᵀZ_i)`
    pub unnormalized: Array1<f64>,
    /// Unnormalized weights over their sum, all zero on an empty risk set.
    pub normalized: Array1<f64>,
    pub at_time: f64,
}

pub fn risk_weights(data: &SurvivalDataset, beta: ArrayView1<f64>, t: f64) -> Result<RiskWeights> {
    data.check_beta(beta)?;
    if !(t >= 0.0) {
        return Err(CoxError::InvalidInput(format!("time {t} must be nonnegative")));
    }
    let eta = data.covariates().dot(&beta);
    let times = data.times();
    let unnormalized: Array1<f64> = Zip::from(&eta)
        .and(&times)
        .map_collect(|&e, &ti| if ti >= t { e.exp() } else { 0.0 });
    let total: f64 = unnormalized.sum();
    let normalized = if total > 0.0 {
        unnormalized.mapv(|w| w / total)
    } else {
        Array1::zeros(data.n())
    };
    Ok(RiskWeights {
        beta: beta.to_owned(),
        unnormalized,
        normalized,
        at_time: t,
    })
}

/// `Z̄(t, β)`: risk-weighted covariate mean, zero on an empty risk set.
pub fn weighted_mean(data: &SurvivalDataset, beta: ArrayView1<f64>, t: f64) -> Result<Array1<f64>> {
    data.check_beta(beta)?;
    if !(t >= 0.0) {
        return Err(CoxError::InvalidInput(format!("time {t} must be nonnegative")));
    }
    let z = data.covariates();
    let times = data.times();
    let eta = z.dot(&beta);
    let shift = (0..data.n())
        .filter(|&i| times[i] >= t)
        .map(|i| eta[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = Array1::<f64>::zeros(data.p());
    if shift == f64::NEG_INFINITY {
        return Ok(acc);
    }
    let mut total = 0.0;
    for i in 0..data.n() {
        if times[i] >= t {
            let w = (eta[i] - shift).exp();
            total += w;
            acc.scaled_add(w, &z.row(i));
        }
    }
    acc /= total;
    Ok(acc)
}

fn shifted_exp(eta: &Array1<f64>) -> (Array1<f64>, f64) {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (eta.mapv(|v| (v - shift).exp()), shift)
}

/// `ℓ(β)`: log partial likelihood divided by n.
pub fn partial_loglik(data: &SurvivalDataset, beta: ArrayView1<f64>) -> Result<f64> {
    data.require_events()?;
    data.check_beta(beta)?;
    let eta = data.covariates().dot(&beta);
    Ok(loglik_from_eta(data, &eta) / data.n() as f64)
}

/// Log partial likelihood without the 1/n factor.
pub fn likelihood_from_beta(data: &SurvivalDataset, beta: ArrayView1<f64>) -> f64 {
    loglik_from_eta(data, &data.covariates().dot(&beta))
}

pub(crate) fn loglik_from_eta(data: &SurvivalDataset, eta: &Array1<f64>) -> f64 {
    let (e, shift) = shifted_exp(eta);
    let order = data.sort_index();
    let mut risk = 0.0;
    let mut ll = 0.0;
    for g in data.groups().iter().rev() {
        for &i in &order[g.start..g.end] {
            risk += e[i];
        }
        if g.events > 0 {
            let log_risk = risk.ln() + shift;
            for &i in &order[g.start..g.end] {
                if data.events()[i] {
                    ll += eta[i] - log_risk;
                }
            }
        }
    }
    ll
}

/// `ℓ̇(β) = (1/n) Σ_{δ_i=1} {Z_i − Z̄(T_i, β)}`.
pub fn score(data: &SurvivalDataset, beta: ArrayView1<f64>) -> Result<Array1<f64>> {
    data.check_beta(beta)?;
    let z = data.covariates();
    let eta = z.dot(&beta);
    let (e, _) = shifted_exp(&eta);
    let order = data.sort_index();
    let p = data.p();
    let mut risk = 0.0;
    let mut risk_z = Array1::<f64>::zeros(p);
    let mut out = Array1::<f64>::zeros(p);
    for g in data.groups().iter().rev() {
        for &i in &order[g.start..g.end] {
            risk += e[i];
            risk_z.scaled_add(e[i], &z.row(i));
        }
        if g.events == 0 {
            continue;
        }
        for &i in &order[g.start..g.end] {
            if data.events()[i] {
                out += &z.row(i);
            }
        }
        out.scaled_add(-(g.events as f64) / risk, &risk_z);
    }
    out /= data.n() as f64;
    Ok(out)
}

/// `−ℓ̈(β)`: event-averaged risk-weighted covariance of the covariates.
pub fn neg_hessian(data: &SurvivalDataset, beta: ArrayView1<f64>) -> Result<Array2<f64>> {
    data.check_beta(beta)?;
    let z = data.covariates();
    let eta = z.dot(&beta);
    let (e, _) = shifted_exp(&eta);
    let order = data.sort_index();
    let p = data.p();
    let mut risk = 0.0;
    let mut risk_z = Array1::<f64>::zeros(p);
    let mut risk_zz = Array2::<f64>::zeros((p, p));
    let mut out = Array2::<f64>::zeros((p, p));
    for g in data.groups().iter().rev() {
        for &i in &order[g.start..g.end] {
            let w = e[i];
            let row = z.row(i);
            risk += w;
            risk_z.scaled_add(w, &row);
            for a in 0..p {
                let wa = w * row[a];
                if wa == 0.0 {
                    continue;
                }
                for b in a..p {
                    risk_zz[[a, b]] += wa * row[b];
                }
            }
        }
        if g.events == 0 {
            continue;
        }
        let d = g.events as f64;
        let zbar = &risk_z / risk;
        for a in 0..p {
            for b in a..p {
                out[[a, b]] += d * (risk_zz[[a, b]] / risk - zbar[a] * zbar[b]);
            }
        }
    }
    let n = data.n() as f64;
    for a in 0..p {
        for b in a..p {
            let v = out[[a, b]] / n;
            out[[a, b]] = v;
            out[[b, a]] = v;
        }
    }
    Ok(out)
}

/// `V̂(β) = (1/n) Σ_i δ_i {Z_i − Z̄(T_i, β)}^{⊗2}`.
pub fn vhat(data: &SurvivalDataset, beta: ArrayView1<f64>) -> Result<Array2<f64>> {
    data.check_beta(beta)?;
    let z = data.covariates();
    let eta = z.dot(&beta);
    let (e, _) = shifted_exp(&eta);
    let order = data.sort_index();
    let p = data.p();
    let mut risk = 0.0;
    let mut risk_z = Array1::<f64>::zeros(p);
    let mut out = Array2::<f64>::zeros((p, p));
    let mut centered = Array1::<f64>::zeros(p);
    for g in data.groups().iter().rev() {
        for &i in &order[g.start..g.end] {
            risk += e[i];
            risk_z.scaled_add(e[i], &z.row(i));
        }
        if g.events == 0 {
            continue;
        }
        for &i in &order[g.start..g.end] {
            if !data.events()[i] {
                continue;
            }
            Zip::from(&mut centered)
                .and(&z.row(i))
                .and(&risk_z)
                .for_each(|c, &zi, &rz| *c = zi - rz / risk);
            for a in 0..p {
                let ca = centered[a];
                if ca == 0.0 {
                    continue;
                }
                for b in a..p {
                    out[[a, b]] += ca * centered[b];
                }
            }
        }
    }
    let n = data.n() as f64;
    for a in 0..p {
        for b in a..p {
            let v = out[[a, b]] / n;
            out[[a, b]] = v;
            out[[b, a]] = v;
        }
    }
    Ok(out)
}

/// Risk-set quantities for a fixed linear predictor, used by the
/// coordinate-descent solver which works in the space of `η = Zβ`.
///
/// With `S_g` the risk-set sum of group `g` and `A_i = Σ_{g: t_g ≤ T_i} d_g/S_g`,
/// the gradient of `−ℓ` in `η` is `(e_i A_i − δ_i)/n` and the Hessian acts as
/// `(Hv)_i = e_i (v_i A_i − B_i)/n` with `B_i = Σ_{g: t_g ≤ T_i} d_g m_g / S_g`,
/// `m_g` the risk-weighted mean of `v` over group `g`'s risk set.
pub(crate) struct EtaState {
    pub e: Array1<f64>,
    /// `−ℓ(β)`, i.e. negative log partial likelihood over n.
    pub loss: f64,
    risk: Vec<f64>,
    cum_a: Array1<f64>,
}

impl EtaState {
    pub fn new(data: &SurvivalDataset, eta: &Array1<f64>) -> Self {
        let (e, shift) = shifted_exp(eta);
        let order = data.sort_index();
        let groups = data.groups();
        let mut risk = vec![0.0; groups.len()];
        let mut acc = 0.0;
        let mut ll = 0.0;
        for (gi, g) in groups.iter().enumerate().rev() {
            for &i in &order[g.start..g.end] {
                acc += e[i];
            }
            risk[gi] = acc;
            if g.events > 0 {
                let log_risk = acc.ln() + shift;
                for &i in &order[g.start..g.end] {
                    if data.events()[i] {
                        ll += eta[i] - log_risk;
                    }
                }
            }
        }
        let mut cum_a = Array1::<f64>::zeros(data.n());
        let mut a = 0.0;
        for (gi, g) in groups.iter().enumerate() {
            a += g.events as f64 / risk[gi];
            for &i in &order[g.start..g.end] {
                cum_a[i] = a;
            }
        }
        Self {
            e,
            loss: -ll / data.n() as f64,
            risk,
            cum_a,
        }
    }

    pub fn gradient(&self, data: &SurvivalDataset) -> Array1<f64> {
        let n = data.n() as f64;
        let mut g = &self.e * &self.cum_a;
        for (gi, &ev) in g.iter_mut().zip(data.events()) {
            if ev {
                *gi -= 1.0;
            }
            *gi /= n;
        }
        g
    }

    /// `out = H v` with H the Hessian of `−ℓ` in `η`.
    pub fn hess_vec(&self, data: &SurvivalDataset, v: &[f64], out: &mut [f64]) {
        let order = data.sort_index();
        let groups = data.groups();
        let n = data.n() as f64;
        let mut acc = 0.0;
        let mut coef = vec![0.0; groups.len()];
        for (gi, g) in groups.iter().enumerate().rev() {
            for &i in &order[g.start..g.end] {
                acc += self.e[i] * v[i];
            }
            if g.events > 0 {
                let s = self.risk[gi];
                coef[gi] = g.events as f64 * acc / (s * s);
            }
        }
        let mut b = 0.0;
        for (gi, g) in groups.iter().enumerate() {
            b += coef[gi];
            for &i in &order[g.start..g.end] {
                out[i] = self.e[i] * (v[i] * self.cum_a[i] - b) / n;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn two_subjects() -> SurvivalDataset {
        SurvivalDataset::new(array![1.0, 2.0], vec![true, true], array![[1.0], [0.0]]).unwrap()
    }

    #[test]
    fn single_subject_loglik_is_zero() {
        let d = SurvivalDataset::new(array![4.2], vec![true], array![[0.7, -1.3]]).unwrap();
        assert_eq!(partial_loglik(&d, array![3.0, 2.0].view()).unwrap(), 0.0);
    }

    #[test]
    fn two_subject_hand_values() {
        let d = two_subjects();
        let l0 = partial_loglik(&d, array![0.0].view()).unwrap();
        assert!((l0 - (-(2f64.ln()) / 2.0)).abs() < 1e-15);
        assert!((l0 + 0.346574).abs() < 1e-6);
        let l1 = partial_loglik(&d, array![1.0].view()).unwrap();
        assert!((l1 - 0.5 * (1.0 - (1.0 + 1f64.exp()).ln())).abs() < 1e-15);
        assert!((l1 + 0.156631).abs() < 1e-6);

        assert!((score(&d, array![0.0].view()).unwrap()[0] - 0.25).abs() < 1e-15);
        assert!((neg_hessian(&d, array![0.0].view()).unwrap()[[0, 0]] - 0.125).abs() < 1e-15);
        assert!((vhat(&d, array![0.0].view()).unwrap()[[0, 0]] - 0.125).abs() < 1e-15);
        assert!((weighted_mean(&d, array![0.0].view(), 1.0).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_no_events_and_bad_beta() {
        let d = SurvivalDataset::new(array![1.0, 2.0], vec![false, false], array![[1.0], [0.0]])
            .unwrap();
        assert_eq!(partial_loglik(&d, array![0.0].view()), Err(CoxError::NoEvents));
        let d = two_subjects();
        assert_eq!(partial_loglik(&d, array![f64::NAN].view()), Err(CoxError::NonFiniteBeta));
        assert_eq!(score(&d, array![f64::INFINITY].view()), Err(CoxError::NonFiniteBeta));
        assert!(neg_hessian(&d, array![0.0, 1.0].view()).is_err());
    }

    #[test]
    fn identical_rows_have_no_signal() {
        let z = Array2::from_shape_fn((5, 2), |(_, j)| [0.4, -1.1][j]);
        let d = SurvivalDataset::new(
            array![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![true, false, true, true, false],
            z,
        )
        .unwrap();
        let beta = array![0.7, -0.2];
        let s = score(&d, beta.view()).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-15));
        let h = neg_hessian(&d, beta.view()).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1e-15));
        let v = vhat(&d, beta.view()).unwrap();
        assert!(v.iter().all(|v| v.abs() < 1e-15));
        let m = weighted_mean(&d, beta.view(), 2.5).unwrap();
        assert!((m[0] - 0.4).abs() < 1e-15 && (m[1] + 1.1).abs() < 1e-15);
    }

    #[test]
    fn empty_risk_set_gives_zero() {
        let d = two_subjects();
        let m = weighted_mean(&d, array![0.3].view(), 10.0).unwrap();
        assert_eq!(m[0], 0.0);
        let w = risk_weights(&d, array![0.3].view(), 10.0).unwrap();
        assert!(w.normalized.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn risk_weights_normalize() {
        let d = two_subjects();
        let w = risk_weights(&d, array![0.3].view(), 0.5).unwrap();
        assert!((w.normalized.sum() - 1.0).abs() < 1e-15);
        let w = risk_weights(&d, array![0.3].view(), 1.5).unwrap();
        assert_eq!(w.unnormalized[0], 0.0);
        assert_eq!(w.normalized[1], 1.0);
    }

    #[test]
    fn tied_censored_subject_is_at_risk() {
        // subject 1 censored at the event time of subject 0
        let d = SurvivalDataset::new(array![1.0, 1.0], vec![true, false], array![[1.0], [0.0]])
            .unwrap();
        let l = partial_loglik(&d, array![0.0].view()).unwrap();
        assert!((l + 2f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn eta_state_matches_direct_formulas() {
        let d = SurvivalDataset::new(
            array![2.0, 1.0, 3.0, 1.0, 2.5],
            vec![true, true, false, true, true],
            array![[0.5, 1.0], [-0.3, 0.2], [1.2, -0.7], [0.0, 0.4], [0.9, 0.1]],
        )
        .unwrap();
        let beta = array![0.4, -0.6];
        let eta = d.covariates().dot(&beta);
        let st = EtaState::new(&d, &eta);
        let l = partial_loglik(&d, beta.view()).unwrap();
        assert!((st.loss + l).abs() < 1e-14);
        let g = st.gradient(&d);
        let s = score(&d, beta.view()).unwrap();
        let zg = d.covariates().t().dot(&g);
        for j in 0..2 {
            assert!((zg[j] + s[j]).abs() < 1e-14);
        }
        let h = neg_hessian(&d, beta.view()).unwrap();
        let mut hx = vec![0.0; 5];
        for j in 0..2 {
            let col = d.covariates().column(j).to_vec();
            st.hess_vec(&d, &col, &mut hx);
            for k in 0..2 {
                let v: f64 = (0..5).map(|i| d.covariates()[[i, k]] * hx[i]).sum();
                assert!((v - h[[k, j]]).abs() < 1e-14);
            }
        }
    }
}
