//! Seeded assignment of subjects to cross-validation folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoxError, Result};

const MAX_ATTEMPTS: usize = 10;

/// Fold label for every subject, a pure function of `(seed, n, folds)`.
///
/// Subjects are shuffled and dealt round-robin, so fold sizes differ by at
/// most one. A draw in which some held-out fold or some training split has
/// no events is redrawn, up to ten times.
pub fn assign_folds(events: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = events.len();
    if folds < 2 || folds > n {
        return Err(CoxError::InvalidInput(format!(
            "need 2 <= folds <= n, got folds = {folds}, n = {n}"
        )));
    }
    let total_events = events.iter().filter(|&&e| e).count();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut labels = vec![0; n];
        for (pos, &i) in perm.iter().enumerate() {
            labels[i] = pos % folds;
        }
        let mut held_out_events = vec![0usize; folds];
        for (i, &e) in events.iter().enumerate() {
            if e {
                held_out_events[labels[i]] += 1;
            }
        }
        if held_out_events
            .iter()
            .all(|&d| d > 0 && total_events - d > 0)
        {
            return Ok(labels);
        }
    }
    Err(CoxError::FoldAssignment(MAX_ATTEMPTS))
}

/// `(train, test)` subject indices for fold `k`.
pub fn split(labels: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == k {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let events = vec![true; 103];
        let a = assign_folds(&events, 10, 42).unwrap();
        let b = assign_folds(&events, 10, 42).unwrap();
        assert_eq!(a, b);
        let mut counts = [0; 10];
        for &l in &a {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10 || c == 11));
        assert_ne!(a, assign_folds(&events, 10, 43).unwrap());
    }

    #[test]
    fn every_fold_gets_events() {
        let mut events = vec![false; 40];
        events[3] = true;
        events[17] = true;
        events[30] = true;
        let labels = assign_folds(&events, 2, 5);
        if let Ok(l) = labels {
            for k in 0..2 {
                let (_, test) = split(&l, k);
                assert!(test.iter().any(|&i| events[i]));
            }
        }
        // a single event can never be spread over two folds
        let mut one = vec![false; 10];
        one[0] = true;
        assert_eq!(assign_folds(&one, 2, 1), Err(CoxError::FoldAssignment(10)));
    }

    #[test]
    fn rejects_bad_fold_counts() {
        assert!(assign_folds(&[true; 5], 1, 0).is_err());
        assert!(assign_folds(&[true; 5], 6, 0).is_err());
        assert!(assign_folds(&[true; 5], 5, 0).is_ok());
    }
}
