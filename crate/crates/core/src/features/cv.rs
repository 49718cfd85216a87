//! Chronological k-fold validation and classification metrics.

use super::ecoc::{predict, train_ecoc, train_ecoc_traced, DEFAULT_K_FEATURES};
use super::svm::DEFAULT_C;
use super::{AffectClass, FeatureError, FeatureVector, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub k_features: usize,
    pub c: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: DEFAULT_FOLDS, k_features: DEFAULT_K_FEATURES, c: DEFAULT_C }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub validate: Range<usize>,
}

/// Contiguous validation blocks of near-equal size; the first `n % k` blocks
/// take one extra sample.
pub fn chronological_kfold(n: usize, k: usize) -> Result<Vec<FoldSplit>> {
    if k == 0 || k > n {
        return Err(FeatureError::TooManyFolds { k, n });
    }
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|fold| {
            let len = base + usize::from(fold < extra);
            let validate = start..start + len;
            start += len;
            let train = (0..n).filter(|i| !validate.contains(i)).collect();
            FoldSplit { train, validate }
        })
        .collect())
}

/// Largest class count over smallest, across the three classes. Infinite
/// when a class is absent.
pub fn imbalance_ratio(labels: &[AffectClass]) -> Result<f64> {
    if labels.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let counts = class_counts(labels);
    let max = *counts.iter().max().unwrap_or(&0) as f64;
    let min = *counts.iter().min().unwrap_or(&0) as f64;
    if min == 0.0 {
        tracing::warn!(?counts, "class absent; imbalance ratio is infinite");
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

pub fn class_counts(labels: &[AffectClass]) -> [usize; 3] {
    let mut counts = [0; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub training_accuracy: f64,
    /// `confusion[true][predicted]`, pooled over validation folds.
    pub confusion: [[u32; 3]; 3],
    pub precision: [Option<f64>; 3],
    pub recall: [Option<f64>; 3],
    pub class_counts: [usize; 3],
    /// `None` when a class is absent (ratio infinite).
    pub imbalance_ratio: Option<f64>,
}

/// Windows that fed one fold's fitting statistics, next to its validation windows.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAudit {
    pub validation_starts: Vec<f64>,
    pub stats_starts: Vec<f64>,
}

impl FoldAudit {
    pub fn leaked(&self) -> Vec<f64> {
        self.validation_starts
            .iter()
            .filter(|t| self.stats_starts.iter().any(|s| s.to_bits() == t.to_bits()))
            .copied()
            .collect()
    }
}

pub fn evaluate(data: &[FeatureVector], config: &CvConfig) -> Result<CvReport> {
    evaluate_audited(data, config).map(|(r, _)| r)
}

/// Chronological CV with per-fold normalization, mRMR and SVM fitting inside
/// each training split, plus a full refit for training accuracy.
pub fn evaluate_audited(data: &[FeatureVector], config: &CvConfig) -> Result<(CvReport, Vec<FoldAudit>)> {
    if data.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let labels: Vec<AffectClass> = data
        .iter()
        .enumerate()
        .map(|(i, fv)| fv.label.ok_or(FeatureError::Unlabeled(i)))
        .collect::<Result<_>>()?;
    if let Some(i) = data.windows(2).position(|w| w[1].window_start < w[0].window_start) {
        return Err(FeatureError::NotChronological(i + 1));
    }

    let mut confusion = [[0u32; 3]; 3];
    let mut fold_accuracies = Vec::with_capacity(config.folds);
    let mut audits = Vec::with_capacity(config.folds);
    for split in chronological_kfold(data.len(), config.folds)? {
        let train: Vec<FeatureVector> = split.train.iter().map(|&i| data[i].clone()).collect();
        let (model, trace) = train_ecoc_traced(&train, config.k_features, config.c)?;
        let mut correct = 0;
        for i in split.validate.clone() {
            let predicted = predict(&model, &data[i].values)?.class;
            confusion[labels[i].index()][predicted.index()] += 1;
            correct += usize::from(predicted == labels[i]);
        }
        fold_accuracies.push(correct as f64 / split.validate.len() as f64);
        audits.push(FoldAudit {
            validation_starts: split.validate.map(|i| data[i].window_start).collect(),
            stats_starts: trace.stats_window_starts,
        });
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;

    let full = train_ecoc(data, config.k_features, config.c)?;
    let train_correct = data
        .iter()
        .zip(&labels)
        .map(|(fv, l)| predict(&full, &fv.values).map(|p| usize::from(p.class == *l)))
        .sum::<Result<usize>>()?;

    let ratio = imbalance_ratio(&labels)?;
    let report = CvReport {
        fold_accuracies,
        mean_accuracy,
        training_accuracy: train_correct as f64 / data.len() as f64,
        precision: std::array::from_fn(|c| {
            let col: u32 = (0..3).map(|t| confusion[t][c]).sum();
            (col > 0).then(|| confusion[c][c] as f64 / col as f64)
        }),
        recall: std::array::from_fn(|c| {
            let row: u32 = confusion[c].iter().sum();
            (row > 0).then(|| confusion[c][c] as f64 / row as f64)
        }),
        confusion,
        class_counts: class_counts(&labels),
        imbalance_ratio: ratio.is_finite().then_some(ratio),
    };
    Ok((report, audits))
}

impl fmt::Display for CvReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("   n/a".to_string(), |v| format!("{:5.1}%", 100.0 * v));
        let folds: Vec<String> = self.fold_accuracies.iter().map(|a| format!("{:.1}%", 100.0 * a)).collect();
        writeln!(f, "folds:             {}", folds.join("  "))?;
        writeln!(f, "mean accuracy:     {:.1}%", 100.0 * self.mean_accuracy)?;
        writeln!(f, "training accuracy: {:.1}%", 100.0 * self.training_accuracy)?;
        match self.imbalance_ratio {
            Some(r) => writeln!(f, "imbalance ratio:   {r:.2}")?,
            None => writeln!(f, "imbalance ratio:   inf (class absent)")?,
        }
        writeln!(f, "true\\pred     Low  Neutral     High   recall")?;
        for (c, row) in self.confusion.iter().enumerate() {
            writeln!(
                f,
                "{:<9} {:>7} {:>8} {:>8}   {}",
                AffectClass::ALL[c].to_string(),
                row[0],
                row[1],
                row[2],
                pct(self.recall[c])
            )?;
        }
        write!(f, "precision   {}   {}   {}", pct(self.precision[0]), pct(self.precision[1]), pct(self.precision[2]))
    }
}
