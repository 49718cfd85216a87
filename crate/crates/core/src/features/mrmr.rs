//! Greedy minimum-redundancy maximum-relevance selection (difference form).

use super::mi::{discretize_equal_frequency, mutual_information};
use super::{FeatureError, Result};
use std::cmp::Ordering;

/// Quantization levels used before estimating mutual information.
pub const MRMR_BINS: usize = 3;

/// Scores within this distance are treated as tied.
const TIE_EPS: f64 = 1e-12;

/// Selects up to `k` feature columns of `rows` (samples × features).
///
/// The first pick maximizes `MI(f; y)`; each following pick maximizes
/// `MI(f; y) - mean_{s in S} MI(f; s)`. Features with zero relevance rank
/// after every informative one. Ties go to the lower mean redundancy, then
/// to the lower index.
pub fn mrmr_select(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(FeatureError::InvalidK);
    }
    if rows.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    if rows.len() != labels.len() {
        return Err(FeatureError::LengthMismatch(rows.len(), labels.len()));
    }
    let n_features = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
        return Err(FeatureError::FeatureCount { expected: n_features, got: bad.len() });
    }
    let columns: Vec<Vec<usize>> = (0..n_features)
        .map(|f| {
            let col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            discretize_equal_frequency(&col, MRMR_BINS)
        })
        .collect();
    let relevance: Vec<f64> = columns
        .iter()
        .map(|c| mutual_information(c, labels))
        .collect::<Result<_>>()?;

    let target = k.min(n_features);
    let mut selected = Vec::with_capacity(target);
    let mut chosen = vec![false; n_features];
    let mut redundancy_sum = vec![0.0; n_features];

    while selected.len() < target {
        let denom = selected.len().max(1) as f64;
        let key = |f: usize| {
            let redundancy = redundancy_sum[f] / denom;
            (relevance[f] > TIE_EPS, relevance[f] - redundancy, redundancy)
        };
        let best = (0..n_features)
            .filter(|&f| !chosen[f])
            .min_by(|&a, &b| {
                let (ia, sa, ra) = key(a);
                let (ib, sb, rb) = key(b);
                ib.cmp(&ia)
                    .then_with(|| if (sa - sb).abs() <= TIE_EPS { Ordering::Equal } else { sb.total_cmp(&sa) })
                    .then_with(|| if (ra - rb).abs() <= TIE_EPS { Ordering::Equal } else { ra.total_cmp(&rb) })
                    .then(a.cmp(&b))
            })
            .expect("remaining features");
        chosen[best] = true;
        selected.push(best);
        for f in (0..n_features).filter(|&f| !chosen[f]) {
            redundancy_sum[f] += mutual_information(&columns[f], &columns[best])?;
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn redundancy_dataset(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let rows = labels
            .iter()
            .map(|&y| vec![y as f64, y as f64, rng.random::<f64>()])
            .collect();
        (rows, labels)
    }

    #[test]
    fn first_pick_is_most_relevant() {
        let (rows, labels) = redundancy_dataset(1, 90);
        let sel = mrmr_select(&rows, &labels, 1).unwrap();
        let rel: Vec<f64> = (0..3)
            .map(|f| {
                let col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
                mutual_information(&discretize_equal_frequency(&col, 3), &labels).unwrap()
            })
            .collect();
        let argmax = (0..3).fold(0, |best, f| if rel[f] > rel[best] + 1e-12 { f } else { best });
        assert_eq!(sel, vec![argmax]);
    }

    #[test]
    fn duplicate_is_penalized_against_noise() {
        // Brute-force the MI table: B duplicates A, so MI(B;y) - MI(B;A) = 0
        // while MI(C;A) <= MI(C;y) by data processing.
        for seed in 0..50 {
            let (rows, labels) = redundancy_dataset(seed, 120);
            let sel = mrmr_select(&rows, &labels, 2).unwrap();
            assert_eq!(sel, vec![0, 2], "seed {seed}");
        }
    }

    #[test]
    fn full_k_is_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..96).map(|_| rng.random()).collect()).collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let mut sel = mrmr_select(&rows, &labels, 96).unwrap();
        sel.sort();
        assert_eq!(sel, (0..96).collect::<Vec<_>>());
        assert_eq!(mrmr_select(&rows, &labels, 200).unwrap().len(), 96);
    }

    #[test]
    fn constant_features_fall_back_to_lowest_indices() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let rows: Vec<Vec<f64>> = labels.iter().map(|&y| vec![1.0, 1.0, y as f64, 1.0, 1.0]).collect();
        assert_eq!(mrmr_select(&rows, &labels, 3).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(mrmr_select(&[vec![1.0]], &[0], 0), Err(FeatureError::InvalidK));
        assert_eq!(mrmr_select(&[], &[], 2), Err(FeatureError::EmptyDataset));
    }
}
