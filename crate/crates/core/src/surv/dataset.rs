use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{CoxError, Result};

/// A block of subjects sharing one observed time, as positions into the
/// sorted order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGroup {
    pub start: usize,
    pub end: usize,
    /// Number of failures observed at this time.
    pub events: usize,
}

/// Right-censored survival observations `(T_i, δ_i, Z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    times: Array1<f64>,
    events: Vec<bool>,
    covariates: Array2<f64>,
    sort_index: Vec<usize>,
    groups: Vec<TimeGroup>,
    event_count: usize,
}

impl SurvivalDataset {
    pub fn new(times: Array1<f64>, events: Vec<bool>, covariates: Array2<f64>) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(CoxError::InvalidInput("dataset has no subjects".into()));
        }
        if events.len() != n || covariates.nrows() != n {
            return Err(CoxError::DimensionMismatch(format!(
                "times has {n} entries, events {}, covariate rows {}",
                events.len(),
                covariates.nrows()
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(CoxError::InvalidInput(format!(
                "time of subject {i} is negative or not finite"
            )));
        }
        if covariates.iter().any(|z| !z.is_finite()) {
            return Err(CoxError::InvalidInput("covariates contain non-finite values".into()));
        }

        let mut sort_index: Vec<usize> = (0..n).collect();
        // stable: ties keep original index order
        sort_index.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap());

        let mut groups = Vec::new();
        let mut start = 0;
        while start < n {
            let t = times[sort_index[start]];
            let mut end = start;
            let mut d = 0;
            while end < n && times[sort_index[end]] == t {
                if events[sort_index[end]] {
                    d += 1;
                }
                end += 1;
            }
            groups.push(TimeGroup { start, end, events: d });
            start = end;
        }
        let event_count = events.iter().filter(|&&e| e).count();

        Ok(Self {
            times,
            events,
            covariates,
            sort_index,
            groups,
            event_count,
        })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn times(&self) -> ArrayView1<'_, f64> {
        self.times.view()
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn covariates(&self) -> ArrayView2<'_, f64> {
        self.covariates.view()
    }

    /// Permutation ordering subjects by ascending time, ties by original index.
    pub fn sort_index(&self) -> &[usize] {
        &self.sort_index
    }

    /// Distinct observed times in ascending order.
    pub fn groups(&self) -> &[TimeGroup] {
        &self.groups
    }

    pub fn event_count(&self) -> usize {
        self.event_count
    }

    pub fn censoring_rate(&self) -> f64 {
        1.0 - self.event_count as f64 / self.n() as f64
    }

    pub(crate) fn require_events(&self) -> Result<()> {
        if self.event_count == 0 {
            Err(CoxError::NoEvents)
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_beta(&self, beta: ArrayView1<f64>) -> Result<()> {
        if beta.len() != self.p() {
            return Err(CoxError::DimensionMismatch(format!(
                "beta has length {}, dataset has {} covariates",
                beta.len(),
                self.p()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(CoxError::NonFiniteBeta);
        }
        Ok(())
    }

    /// The subjects at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let times = indices.iter().map(|&i| self.times[i]).collect::<Array1<f64>>();
        let events = indices.iter().map(|&i| self.events[i]).collect();
        let covariates = self.covariates.select(Axis(0), indices);
        Self::new(times, events, covariates)
    }

    /// Copy with every covariate column divided by `scales`.
    pub fn scaled_columns(&self, scales: ArrayView1<f64>) -> Self {
        let mut out = self.clone();
        for (mut col, &s) in out.covariates.columns_mut().into_iter().zip(scales.iter()) {
            col.mapv_inplace(|z| z / s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sort_is_stable_on_ties() {
        let d = SurvivalDataset::new(
            array![3.0, 1.0, 3.0, 1.0, 2.0],
            vec![true, false, true, true, false],
            Array2::zeros((5, 1)),
        )
        .unwrap();
        assert_eq!(d.sort_index(), &[1, 3, 4, 0, 2]);
        assert_eq!(
            d.groups(),
            &[
                TimeGroup { start: 0, end: 2, events: 1 },
                TimeGroup { start: 2, end: 3, events: 0 },
                TimeGroup { start: 3, end: 5, events: 2 },
            ]
        );
        assert_eq!(d.event_count(), 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let z = Array2::zeros((2, 1));
        assert!(SurvivalDataset::new(array![1.0, -1.0], vec![true, true], z.clone()).is_err());
        assert!(SurvivalDataset::new(array![1.0, f64::NAN], vec![true, true], z.clone()).is_err());
        assert!(SurvivalDataset::new(array![1.0], vec![true, true], z.clone()).is_err());
        assert!(SurvivalDataset::new(array![1.0, 2.0], vec![true], z).is_err());
    }

    #[test]
    fn subset_keeps_rows() {
        let d = SurvivalDataset::new(
            array![3.0, 1.0, 2.0],
            vec![true, false, true],
            array![[1.0], [2.0], [3.0]],
        )
        .unwrap();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.times().to_vec(), vec![2.0, 3.0]);
        assert_eq!(s.covariates()[[0, 0]], 3.0);
        assert_eq!(s.event_count(), 2);
    }
}
