use serde::Serialize;

use super::{mean, median, std_error, to_vec};
use crate::inference::DebiasedInference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Signal,
    Noise,
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Group::Signal => "signal",
            Group::Noise => "noise",
        })
    }
}

/// Which estimate and intervals a summary describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hat,
    Tilde,
    Mple,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Hat => "hat",
            Method::Tilde => "tilde",
            Method::Mple => "mple",
        })
    }
}

/// Point estimates, interval endpoints and p-values of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub p_values: Vec<f64>,
}

impl From<&DebiasedInference> for MethodResult {
    fn from(inf: &DebiasedInference) -> Self {
        MethodResult {
            estimate: to_vec(&inf.b_hat),
            lower: to_vec(&inf.ci_lower),
            upper: to_vec(&inf.ci_upper),
            p_values: to_vec(&inf.p_values),
        }
    }
}

impl MethodResult {
    fn covers(&self, j: usize, value: f64) -> bool {
        self.lower[j] <= value && value <= self.upper[j]
    }

    fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }
}

/// The per-coordinate outcome of one simulated replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub beta_hat: Vec<f64>,
    pub lambda: f64,
    pub lambda_n: f64,
    pub censoring_rate: f64,
    pub hat: MethodResult,
    pub tilde: MethodResult,
    pub mple: Option<MethodResult>,
}

impl ReplicationRecord {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        match m {
            Method::Hat => Some(&self.hat),
            Method::Tilde => Some(&self.tilde),
            Method::Mple => self.mple.as_ref(),
        }
    }
}

/// Group-level averages over replications with Monte Carlo standard errors.
///
/// Each replication contributes the average over the coordinates of the
/// group; the reported value is the mean of those and the standard error is
/// their standard deviation over √replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub setting_id: u32,
    pub method: Method,
    pub group: Group,
    /// Average of `β̂_j − β_j`; absent for the unpenalized fit.
    pub mean_bias_lasso: Option<f64>,
    pub se_bias_lasso: Option<f64>,
    pub mean_bias_debiased: f64,
    pub se_bias_debiased: f64,
    pub empirical_coverage: f64,
    pub se_coverage: f64,
    pub mean_width: f64,
    pub se_width: f64,
    pub mean_p_value: f64,
    pub se_p_value: f64,
    pub replication_count: usize,
}

/// One coordinate's outcome counts over all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateSummary {
    pub setting_id: u32,
    pub method: Method,
    pub coordinate: usize,
    pub beta0: f64,
    pub covered: usize,
    pub replication_count: usize,
    pub mean_bias_lasso: Option<f64>,
    pub mean_bias_debiased: f64,
    pub mean_width: f64,
    pub mean_p_value: f64,
}

impl CoordinateSummary {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.replication_count as f64
    }
}

fn group_of(beta0: &[f64], j: usize) -> Group {
    if beta0[j] != 0.0 {
        Group::Signal
    } else {
        Group::Noise
    }
}

/// Signal and noise rows for one method, aggregated in record order. Groups
/// with no coordinates and methods absent from the records are skipped.
pub fn summarize(
    setting_id: u32,
    beta0: &[f64],
    records: &[ReplicationRecord],
    method: Method,
) -> (Vec<ReplicationSummary>, Vec<CoordinateSummary>) {
    let results: Vec<(&ReplicationRecord, &MethodResult)> =
        records.iter().filter_map(|r| r.method(method).map(|m| (r, m))).collect();
    let count = results.len();
    if count == 0 {
        return (Vec::new(), Vec::new());
    }
    let with_lasso = method != Method::Mple;
    let p = beta0.len();

    let mut rows = Vec::new();
    for group in [Group::Signal, Group::Noise] {
        let coords: Vec<usize> = (0..p).filter(|&j| group_of(beta0, j) == group).collect();
        if coords.is_empty() {
            continue;
        }
        let k = coords.len() as f64;
        let per_rep = |f: &dyn Fn(&ReplicationRecord, &MethodResult, usize) -> f64| -> Vec<f64> {
            results
                .iter()
                .map(|(r, m)| coords.iter().map(|&j| f(r, m, j)).sum::<f64>() / k)
                .collect()
        };
        let bias_lasso = per_rep(&|r, _, j| r.beta_hat[j] - beta0[j]);
        let bias = per_rep(&|_, m, j| m.estimate[j] - beta0[j]);
        let cover = per_rep(&|_, m, j| if m.covers(j, beta0[j]) { 1.0 } else { 0.0 });
        let width = per_rep(&|_, m, j| m.width(j));
        let pv = per_rep(&|_, m, j| m.p_values[j]);
        rows.push(ReplicationSummary {
            setting_id,
            method,
            group,
            mean_bias_lasso: with_lasso.then(|| mean(&bias_lasso)),
            se_bias_lasso: with_lasso.then(|| std_error(&bias_lasso)),
            mean_bias_debiased: mean(&bias),
            se_bias_debiased: std_error(&bias),
            empirical_coverage: mean(&cover),
            se_coverage: std_error(&cover),
            mean_width: mean(&width),
            se_width: std_error(&width),
            mean_p_value: mean(&pv),
            se_p_value: std_error(&pv),
            replication_count: count,
        });
    }

    let coords = (0..p)
        .map(|j| {
            let col = |f: &dyn Fn(&ReplicationRecord, &MethodResult) -> f64| -> Vec<f64> {
                results.iter().map(|(r, m)| f(r, m)).collect()
            };
            CoordinateSummary {
                setting_id,
                method,
                coordinate: j,
                beta0: beta0[j],
                covered: results.iter().filter(|(_, m)| m.covers(j, beta0[j])).count(),
                replication_count: count,
                mean_bias_lasso: with_lasso.then(|| mean(&col(&|r, _| r.beta_hat[j] - beta0[j]))),
                mean_bias_debiased: mean(&col(&|_, m| m.estimate[j] - beta0[j])),
                mean_width: mean(&col(&|_, m| m.width(j))),
                mean_p_value: mean(&col(&|_, m| m.p_values[j])),
            }
        })
        .collect();
    (rows, coords)
}

/// Mean and median of the selected tuning parameters across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningRecord {
    pub setting_id: u32,
    pub replication_count: usize,
    pub lambda_n_mean: f64,
    pub lambda_n_median: f64,
    pub lambda_mean: f64,
    pub lambda_median: f64,
}

pub fn log_tuning(setting_id: u32, records: &[ReplicationRecord]) -> TuningRecord {
    let ln: Vec<f64> = records.iter().map(|r| r.lambda_n).collect();
    let l: Vec<f64> = records.iter().map(|r| r.lambda).collect();
    let rec = TuningRecord {
        setting_id,
        replication_count: records.len(),
        lambda_n_mean: mean(&ln),
        lambda_n_median: median(&ln),
        lambda_mean: mean(&l),
        lambda_median: median(&l),
    };
    log::info!(
        "setting {setting_id}: selected lambda_n mean {:.4e}, median {:.4e}",
        rec.lambda_n_mean,
        rec.lambda_n_median
    );
    rec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(est: &[f64], half: f64, p: f64) -> MethodResult {
        MethodResult {
            estimate: est.to_vec(),
            lower: est.iter().map(|e| e - half).collect(),
            upper: est.iter().map(|e| e + half).collect(),
            p_values: vec![p; est.len()],
        }
    }

    fn record(rep: usize, est: &[f64], lambda_n: f64) -> ReplicationRecord {
        ReplicationRecord {
            replication: rep,
            beta_hat: est.iter().map(|e| e * 0.5).collect(),
            lambda: 0.1,
            lambda_n,
            censoring_rate: 0.2,
            hat: result(est, 0.1, 0.5),
            tilde: result(est, 0.2, 0.5),
            mple: None,
        }
    }

    #[test]
    fn single_replication_has_zero_standard_errors() {
        let beta0 = [1.0, 0.0, 0.0];
        let recs = vec![record(0, &[1.05, 0.0, 0.3], 0.02)];
        let (rows, coords) = summarize(1, &beta0, &recs, Method::Hat);
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.replication_count, 1);
            assert_eq!(r.se_coverage, 0.0);
            assert_eq!(r.se_width, 0.0);
        }
        let noise = &rows[1];
        assert_eq!(noise.group, Group::Noise);
        assert!((noise.empirical_coverage - 0.5).abs() < 1e-15);
        assert_eq!(coords[2].covered, 0);
        assert_eq!(coords[1].covered, 1);
        assert!(summarize(1, &beta0, &recs, Method::Mple).0.is_empty());
    }

    #[test]
    fn coverage_times_count_is_integer() {
        let beta0 = [1.0, 0.0];
        let recs: Vec<_> = (0..7).map(|r| record(r, &[1.0 + 0.06 * r as f64, 0.0], 0.01)).collect();
        let (_, coords) = summarize(1, &beta0, &recs, Method::Hat);
        for c in coords {
            let k = c.coverage() * c.replication_count as f64;
            assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn tuning_mean_and_median() {
        let recs = vec![record(0, &[0.0], 0.01), record(1, &[0.0], 0.03)];
        let t = log_tuning(1, &recs);
        assert!((t.lambda_n_mean - 0.02).abs() < 1e-15);
        assert!((t.lambda_n_median - 0.02).abs() < 1e-15);
        let same = vec![record(0, &[0.0], 0.04); 3];
        let t = log_tuning(1, &same);
        assert!((t.lambda_n_mean - 0.04).abs() < 1e-15 && t.lambda_n_median == 0.04);
    }
}
