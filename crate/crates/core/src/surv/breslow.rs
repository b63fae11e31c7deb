use ndarray::ArrayView1;

use super::SurvivalDataset;
use crate::error::Result;

/// Right-continuous step function: `value(t) = values[k]` for
/// `knots[k] <= t < knots[k+1]`, zero before the first knot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => 0.0,
            k => self.values[k - 1],
        }
    }

    pub fn jumps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&v| {
                let j = v - prev;
                prev = v;
                j
            })
            .collect()
    }
}

/// Breslow estimate of the cumulative baseline hazard: at each distinct event
/// time the curve jumps by `d / Σ_{j at risk} exp(βᵀZ_j)`.
pub fn breslow(data: &SurvivalDataset, beta: ArrayView1<f64>) -> Result<StepFunction> {
    data.check_beta(beta)?;
    let eta = data.covariates().dot(&beta);
    let order = data.sort_index();
    let groups = data.groups();
    let mut risk = vec![0.0; groups.len()];
    let mut acc = 0.0;
    for (gi, g) in groups.iter().enumerate().rev() {
        for &i in &order[g.start..g.end] {
            acc += eta[i].exp();
        }
        risk[gi] = acc;
    }
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut cum = 0.0;
    for (gi, g) in groups.iter().enumerate() {
        if g.events == 0 {
            continue;
        }
        cum += g.events as f64 / risk[gi];
        knots.push(data.times()[order[g.start]]);
        values.push(cum);
    }
    Ok(StepFunction { knots, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_subject() {
        let d = SurvivalDataset::new(array![2.5], vec![true], array![[0.0]]).unwrap();
        let b = breslow(&d, array![1.7].view()).unwrap();
        assert_eq!(b.knots, vec![2.5]);
        assert_eq!(b.values, vec![1.0]);
        assert_eq!(b.eval(2.0), 0.0);
        assert_eq!(b.eval(2.5), 1.0);
    }

    #[test]
    fn two_subjects() {
        let d = SurvivalDataset::new(array![1.0, 2.0], vec![true, true], array![[1.0], [0.0]])
            .unwrap();
        let b = breslow(&d, array![0.0].view()).unwrap();
        assert_eq!(b.knots, vec![1.0, 2.0]);
        assert_eq!(b.values, vec![0.5, 1.5]);
        assert_eq!(b.jumps(), vec![0.5, 1.0]);
    }

    #[test]
    fn censored_times_are_not_knots() {
        let d = SurvivalDataset::new(
            array![1.0, 2.0, 2.0, 3.0],
            vec![false, true, true, false],
            array![[0.0], [0.0], [0.0], [0.0]],
        )
        .unwrap();
        let b = breslow(&d, array![0.0].view()).unwrap();
        assert_eq!(b.knots, vec![2.0]);
        // two tied events over a risk set of three
        assert!((b.values[0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
