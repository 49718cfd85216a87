//! Feature labeling, selection, linear-SVM classification and validation.

pub mod cv;
pub mod dataset;
pub mod ecoc;
pub mod mi;
pub mod mrmr;
pub mod svm;

use crate::signal::{BandPowerWindow, N_FEATURES};
use serde::{Deserialize, Serialize};
use std::fmt;

pub use cv::{chronological_kfold, evaluate, imbalance_ratio, CvConfig, CvReport, FoldSplit};
pub use dataset::Dataset;
pub use ecoc::{predict, train_ecoc, EcocModel, Prediction};
pub use mi::mutual_information;
pub use mrmr::mrmr_select;
pub use svm::{train_linear_svm, LinearSvmBinary};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("SAM rating {0} outside 1..=5")]
    RatingOutOfRange(i64),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("k must be positive")]
    InvalidK,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("degenerate training set: class {0} is absent")]
    MissingClass(AffectClass),
    #[error("non-finite feature value at index {0}")]
    NonFinite(usize),
    #[error("expected {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("unlabeled sample at position {0}")]
    Unlabeled(usize),
    #[error("cannot split {n} samples into {k} folds")]
    TooManyFolds { k: usize, n: usize },
    #[error("dataset is not in chronological order at position {0}")]
    NotChronological(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dataset parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

/// Three-level affect class on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AffectClass {
    Low,
    Neutral,
    High,
}

impl AffectClass {
    pub const ALL: [AffectClass; 3] = [AffectClass::Low, AffectClass::Neutral, AffectClass::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Wire code: Low = -1, Neutral = 0, High = +1.
    pub fn code(self) -> i8 {
        self as i8 - 1
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(Self::Low),
            0 => Some(Self::Neutral),
            1 => Some(Self::High),
            _ => None,
        }
    }
}

impl fmt::Display for AffectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Low => "Low",
            Self::Neutral => "Neutral",
            Self::High => "High",
        })
    }
}

/// Self-Assessment Manikin rating, both axes on 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamRating {
    pub arousal: u8,
    pub valence: u8,
}

impl SamRating {
    pub fn new(arousal: i64, valence: i64) -> Result<Self> {
        sam_to_class(arousal)?;
        sam_to_class(valence)?;
        Ok(Self { arousal: arousal as u8, valence: valence as u8 })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.arousal as i64, self.valence as i64).map(|_| ())
    }

    pub fn classes(&self) -> Result<(AffectClass, AffectClass)> {
        Ok((sam_to_class(self.arousal as i64)?, sam_to_class(self.valence as i64)?))
    }

    /// Anchor rating for a class: Low → 1, Neutral → 3, High → 5.
    pub fn anchor(class: AffectClass) -> u8 {
        1 + 2 * class.index() as u8
    }
}

/// `{1,2}` → Low, `{3}` → Neutral, `{4,5}` → High.
pub fn sam_to_class(rating: i64) -> Result<AffectClass> {
    match rating {
        1 | 2 => Ok(AffectClass::Low),
        3 => Ok(AffectClass::Neutral),
        4 | 5 => Ok(AffectClass::High),
        other => Err(FeatureError::RatingOutOfRange(other)),
    }
}

/// Which affect axis a label or model refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Arousal,
    Valence,
}

/// Offset inside `log10(power + offset)` guarding against zero power.
pub const LOG_POWER_OFFSET: f64 = 1e-12;

/// 96 log band powers of one window, optionally labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub window_start: f64,
    pub values: Vec<f64>,
    pub label: Option<AffectClass>,
}

impl FeatureVector {
    pub fn new(window_start: f64, values: Vec<f64>, label: Option<AffectClass>) -> Result<Self> {
        let fv = Self { window_start, values, label };
        fv.validate()?;
        Ok(fv)
    }

    pub fn from_band_powers(bp: &BandPowerWindow, label: Option<AffectClass>) -> Self {
        let values = bp.flatten().into_iter().map(|p| (p + LOG_POWER_OFFSET).log10()).collect();
        Self { window_start: bp.window_start, values, label }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != N_FEATURES {
            return Err(FeatureError::FeatureCount { expected: N_FEATURES, got: self.values.len() });
        }
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(FeatureError::NonFinite(i)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sam_mapping() {
        assert_eq!(sam_to_class(3).unwrap(), AffectClass::Neutral);
        assert_eq!(sam_to_class(5).unwrap(), AffectClass::High);
        assert_eq!(sam_to_class(2).unwrap(), AffectClass::Low);
        assert_eq!(sam_to_class(1).unwrap(), AffectClass::Low);
        assert_eq!(sam_to_class(4).unwrap(), AffectClass::High);
        assert_eq!(sam_to_class(0), Err(FeatureError::RatingOutOfRange(0)));
        assert_eq!(sam_to_class(6), Err(FeatureError::RatingOutOfRange(6)));
    }

    #[test]
    fn sam_mapping_is_monotone() {
        let classes: Vec<AffectClass> = (1..=5).map(|r| sam_to_class(r).unwrap()).collect();
        assert!(classes.windows(2).all(|w| w[0] <= w[1]));
        for c in AffectClass::ALL {
            assert_eq!(sam_to_class(SamRating::anchor(c) as i64).unwrap(), c);
        }
    }

    #[test]
    fn class_codes() {
        for c in AffectClass::ALL {
            assert_eq!(AffectClass::from_code(c.code() as i64), Some(c));
        }
        assert_eq!(AffectClass::Low.code(), -1);
        assert_eq!(AffectClass::High.code(), 1);
    }

    #[test]
    fn feature_vector_rejects_bad_shapes() {
        assert!(FeatureVector::new(0.0, vec![0.0; 95], None).is_err());
        let mut v = vec![0.0; 96];
        v[10] = f64::INFINITY;
        assert_eq!(FeatureVector::new(0.0, v, None), Err(FeatureError::NonFinite(10)));
    }
}
