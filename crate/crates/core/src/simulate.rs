//! Seeded data generation for the simulation settings: Gaussian covariates,
//! exponential failure times under a unit baseline hazard, and fixed-time
//! administrative censoring.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoxError, Result};
use crate::inference::normal::normal_quantile;
use crate::linalg::cholesky;
use crate::surv::SurvivalDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaKind {
    Identity,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: SigmaKind,
    /// Zero-based indices of the signal covariates.
    pub signal_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetting {
    pub id: u32,
    pub n: usize,
    pub p: usize,
    pub beta0: Vec<f64>,
    pub sigma_kind: SigmaKind,
    pub censor_time: f64,
    pub expected_censor_rate: f64,
    /// Constant baseline hazard.
    pub baseline: f64,
}

impl SimSetting {
    /// The sixteen numbered settings of the simulation study.
    pub fn from_id(id: u32) -> Result<Self> {
        let (p, beta_head, kind, ct, cr): (usize, &[f64], SigmaKind, f64, f64) = match id {
            1 => (10, &[1.0, 1.0, 1.0], SigmaKind::Identity, 5.0, 0.15),
            2 => (10, &[1.0, 1.0, 1.0], SigmaKind::Identity, 2.0, 0.30),
            3 => (10, &[1.2, 1.0, 0.8], SigmaKind::Identity, 5.0, 0.15),
            4 => (10, &[1.2, 1.0, 0.8], SigmaKind::Identity, 2.0, 0.30),
            5 => (10, &[1.0, 1.0, 1.0], SigmaKind::Structured, 10.0, 0.15),
            6 => (10, &[1.0, 1.0, 1.0], SigmaKind::Structured, 2.5, 0.30),
            7 => (10, &[1.2, 1.0, 0.8], SigmaKind::Structured, 10.0, 0.15),
            8 => (10, &[1.2, 1.0, 0.8], SigmaKind::Structured, 2.5, 0.30),
            9 => (300, &[1.0; 6], SigmaKind::Identity, 9.0, 0.15),
            10 => (300, &[1.0; 6], SigmaKind::Identity, 2.5, 0.30),
            11 => (300, &[0.5, 0.7, 0.9, 1.1, 1.3, 1.5], SigmaKind::Identity, 10.0, 0.15),
            12 => (300, &[0.5, 0.7, 0.9, 1.1, 1.3, 1.5], SigmaKind::Identity, 3.0, 0.30),
            13 => (300, &[1.0; 6], SigmaKind::Structured, 100.0, 0.15),
            14 => (300, &[1.0; 6], SigmaKind::Structured, 7.0, 0.30),
            15 => (300, &[0.5, 0.7, 0.9, 1.1, 1.3, 1.5], SigmaKind::Structured, 100.0, 0.15),
            16 => (300, &[0.5, 0.7, 0.9, 1.1, 1.3, 1.5], SigmaKind::Structured, 7.0, 0.30),
            _ => return Err(CoxError::InvalidInput(format!("unknown setting id {id}"))),
        };
        let mut beta0 = vec![0.0; p];
        beta0[..beta_head.len()].copy_from_slice(beta_head);
        Ok(SimSetting {
            id,
            n: 1000,
            p,
            beta0,
            sigma_kind: kind,
            censor_time: ct,
            expected_censor_rate: cr,
            baseline: 1.0,
        })
    }

    /// The low-dimensional warm-up example with `d` leading unit signals
    /// (`d` = 1 or 3); its id is `100 + d`.
    pub fn preliminary(d: usize) -> Result<Self> {
        let ct = match d {
            1 => 3.0,
            3 => 5.0,
            _ => return Err(CoxError::InvalidInput(format!("preliminary example needs d = 1 or 3, got {d}"))),
        };
        let mut beta0 = vec![0.0; 10];
        beta0[..d].fill(1.0);
        Ok(SimSetting {
            id: 100 + d as u32,
            n: 1000,
            p: 10,
            beta0,
            sigma_kind: SigmaKind::Identity,
            censor_time: ct,
            expected_censor_rate: 0.15,
            baseline: 1.0,
        })
    }

    /// Looks up either a numbered setting or a preliminary example id.
    pub fn lookup(id: u32) -> Result<Self> {
        match id {
            101 | 103 => Self::preliminary((id - 100) as usize),
            _ => Self::from_id(id),
        }
    }

    pub fn signal_set(&self) -> Vec<usize> {
        self.beta0.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }

    pub fn covariance_spec(&self) -> CovarianceSpec {
        CovarianceSpec { kind: self.sigma_kind, signal_set: self.signal_set() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 || self.beta0.len() != self.p {
            return Err(CoxError::InvalidInput(format!(
                "setting {} has n = {}, p = {}, |beta0| = {}",
                self.id,
                self.n,
                self.p,
                self.beta0.len()
            )));
        }
        if !(self.censor_time >= 0.0) || !(self.baseline > 0.0 && self.baseline.is_finite()) {
            return Err(CoxError::InvalidInput(format!(
                "setting {} needs a nonnegative censor time and positive baseline hazard",
                self.id
            )));
        }
        if self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(CoxError::InvalidInput(format!("setting {} has a non-finite beta0", self.id)));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CoxError::InvalidInput(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: SimSetting = toml::from_str(text).map_err(|e| CoxError::InvalidInput(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// Covariance of the covariates: identity, or the structured kind with
/// 0.5 between two signals, 0 between a signal and a noise variable, and
/// `0.5^|i−j|` between two noise variables.
pub fn build_sigma_z(spec: &CovarianceSpec, p: usize) -> Result<Array2<f64>> {
    if let Some(&j) = spec.signal_set.iter().find(|&&j| j >= p) {
        return Err(CoxError::InvalidInput(format!("signal index {j} out of range for p = {p}")));
    }
    let mut sigma = Array2::eye(p);
    if spec.kind == SigmaKind::Identity {
        return Ok(sigma);
    }
    let mut is_signal = vec![false; p];
    for &j in &spec.signal_set {
        is_signal[j] = true;
    }
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            sigma[[i, j]] = match (is_signal[i], is_signal[j]) {
                (true, true) => 0.5,
                (false, false) => 0.5f64.powi(i.abs_diff(j) as i32),
                _ => 0.0,
            };
        }
    }
    Ok(sigma)
}

/// A uniform draw from the open interval (0, 1) built from 53 random bits.
fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal(rng: &mut impl RngCore) -> f64 {
    normal_quantile(open_uniform(rng)).expect("argument lies in the open unit interval")
}

/// `n` i.i.d. rows from `N(0, Σ)` as `G Lᵀ` with `L` the Cholesky factor.
pub fn sample_covariates(sigma_z: ArrayView2<f64>, n: usize, rng: &mut impl RngCore) -> Result<Array2<f64>> {
    let l = cholesky(sigma_z)?;
    let p = l.nrows();
    let g = Array2::from_shape_simple_fn((n, p), || standard_normal(rng));
    Ok(g.dot(&l.t()))
}

/// Failure times with hazard `baseline · exp(βᵀZ_i)` by exponential inversion.
pub fn sample_survival(
    z: ArrayView2<f64>,
    beta0: ArrayView1<f64>,
    baseline: f64,
    rng: &mut impl RngCore,
) -> Result<Array1<f64>> {
    if z.ncols() != beta0.len() {
        return Err(CoxError::DimensionMismatch(format!(
            "covariates have {} columns, beta0 has length {}",
            z.ncols(),
            beta0.len()
        )));
    }
    let eta = z.dot(&beta0);
    Ok(eta.mapv(|e| -open_uniform(rng).ln() / (baseline * e.exp())))
}

/// Administrative censoring at a fixed time: `T = min(T̃, CT)`, `δ = 1{T̃ ≤ CT}`.
pub fn apply_censoring(failure_times: ArrayView1<f64>, censor_time: f64) -> (Array1<f64>, Vec<bool>) {
    let times = failure_times.mapv(|t| t.min(censor_time));
    let events = failure_times.iter().map(|&t| t <= censor_time).collect();
    (times, events)
}

const COVARIATE_STREAM: u64 = 0;
const SURVIVAL_STREAM: u64 = 1;

/// Generator keyed by `(master_seed, setting id, replication)`; `stream`
/// separates the independent draws within one replication.
pub fn replication_rng(master_seed: u64, setting_id: u32, replication: usize, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..12].copy_from_slice(&setting_id.to_le_bytes());
    key[16..24].copy_from_slice(&(replication as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Failure times and covariates before censoring.
pub fn generate_uncensored(
    setting: &SimSetting,
    replication: usize,
    master_seed: u64,
) -> Result<(Array2<f64>, Array1<f64>)> {
    setting.validate()?;
    let sigma = build_sigma_z(&setting.covariance_spec(), setting.p)?;
    let mut zr = replication_rng(master_seed, setting.id, replication, COVARIATE_STREAM);
    let z = sample_covariates(sigma.view(), setting.n, &mut zr)?;
    let mut tr = replication_rng(master_seed, setting.id, replication, SURVIVAL_STREAM);
    let beta0 = Array1::from(setting.beta0.clone());
    let t = sample_survival(z.view(), beta0.view(), setting.baseline, &mut tr)?;
    Ok((z, t))
}

pub fn generate(setting: &SimSetting, replication: usize, master_seed: u64) -> Result<SurvivalDataset> {
    let (z, failure) = generate_uncensored(setting, replication, master_seed)?;
    let (times, events) = apply_censoring(failure.view(), setting.censor_time);
    SurvivalDataset::new(times, events, z)
}
