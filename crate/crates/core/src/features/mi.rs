//! Plug-in entropy and mutual information over discrete symbols.

use super::{FeatureError, Result};
use std::collections::BTreeMap;

/// `Σ p(x,y) log2[p(x,y) / (p(x) p(y))]` from empirical counts, in bits.
pub fn mutual_information(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(FeatureError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let n = x.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut px: BTreeMap<usize, usize> = BTreeMap::new();
    let mut py: BTreeMap<usize, usize> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1;
        *px.entry(a).or_default() += 1;
        *py.entry(b).or_default() += 1;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(a, b), &c)| {
            let pxy = c as f64 / n;
            // p(x,y) / (p(x) p(y)) = c * n / (cx * cy)
            pxy * (c as f64 * n / (px[&a] as f64 * py[&b] as f64)).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// Plug-in Shannon entropy in bits.
pub fn entropy(x: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in x {
        *counts.entry(a).or_default() += 1;
    }
    counts.values().map(|&c| -(c as f64 / n) * (c as f64 / n).log2()).sum()
}

/// Equal-frequency quantization into `bins` symbols: thresholds are the
/// order statistics at ranks `floor(j * n / bins)`, `j = 1..bins`.
pub fn discretize_equal_frequency(values: &[f64], bins: usize) -> Vec<usize> {
    if values.is_empty() || bins <= 1 {
        return vec![0; values.len()];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let thresholds: Vec<f64> = (1..bins).map(|j| sorted[(j * n / bins).min(n - 1)]).collect();
    values
        .iter()
        .map(|v| thresholds.iter().take_while(|&&t| *v >= t).count())
        .collect()
}
