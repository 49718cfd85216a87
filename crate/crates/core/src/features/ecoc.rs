//! Three-class one-vs-one ECOC model over linear SVM learners.

use super::mrmr::mrmr_select;
use super::svm::{train_linear_svm, LinearSvmBinary};
use super::{AffectClass, FeatureError, FeatureVector, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_K_FEATURES: usize = 32;

/// One learner per class pair; the first class of each pair is the positive side.
pub const ONE_VS_ONE: [[AffectClass; 2]; 3] = [
    [AffectClass::Low, AffectClass::Neutral],
    [AffectClass::Low, AffectClass::High],
    [AffectClass::Neutral, AffectClass::High],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel {
    pub coding: Vec<[AffectClass; 2]>,
    pub learners: Vec<LinearSvmBinary>,
    /// Feature indices in selection order; learners see features in this order.
    pub selected_features: Vec<usize>,
    /// Training-set mean and standard deviation of every raw feature.
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
}

/// Rows that fed the training statistics (normalization and mRMR).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub stats_window_starts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: AffectClass,
    /// Summed |decision value| of the learners voting for each class.
    pub scores: [f64; 3],
    pub votes: [u32; 3],
}

pub fn train_ecoc(data: &[FeatureVector], k_features: usize, c: f64) -> Result<EcocModel> {
    train_ecoc_traced(data, k_features, c).map(|(m, _)| m)
}

/// Trains the model and reports which windows its statistics were computed from.
pub fn train_ecoc_traced(data: &[FeatureVector], k_features: usize, c: f64) -> Result<(EcocModel, TrainTrace)> {
    if data.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    if k_features == 0 {
        return Err(FeatureError::InvalidK);
    }
    let mut labels = Vec::with_capacity(data.len());
    for (i, fv) in data.iter().enumerate() {
        fv.validate()?;
        labels.push(fv.label.ok_or(FeatureError::Unlabeled(i))?);
    }
    if let Some(missing) = AffectClass::ALL.into_iter().find(|c| !labels.contains(c)) {
        return Err(FeatureError::MissingClass(missing));
    }

    let (means, sds) = column_stats(data);
    let z: Vec<Vec<f64>> = data.iter().map(|fv| standardize(&fv.values, &means, &sds)).collect();
    let label_idx: Vec<usize> = labels.iter().map(|c| c.index()).collect();
    let selected = mrmr_select(&z, &label_idx, k_features)?;
    let trace = TrainTrace { stats_window_starts: data.iter().map(|fv| fv.window_start).collect() };

    let learners = ONE_VS_ONE
        .iter()
        .map(|&[pos, neg]| {
            let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = z
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == pos || **l == neg)
                .map(|(row, l)| (selected.iter().map(|&f| row[f]).collect(), if *l == pos { 1.0 } else { -1.0 }))
                .unzip();
            train_linear_svm(&xs, &ys, c)
        })
        .collect::<Result<Vec<_>>>()?;

    let model = EcocModel {
        coding: ONE_VS_ONE.to_vec(),
        learners,
        selected_features: selected,
        feature_means: means,
        feature_sds: sds,
    };
    Ok((model, trace))
}

fn column_stats(data: &[FeatureVector]) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let d = data[0].values.len();
    let means: Vec<f64> = (0..d).map(|f| data.iter().map(|fv| fv.values[f]).sum::<f64>() / n).collect();
    let sds = (0..d)
        .map(|f| {
            if data.len() < 2 {
                return 1.0;
            }
            let ss: f64 = data.iter().map(|fv| (fv.values[f] - means[f]).powi(2)).sum();
            let sd = (ss / (n - 1.0)).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (means, sds)
}

fn standardize(values: &[f64], means: &[f64], sds: &[f64]) -> Vec<f64> {
    values.iter().zip(means).zip(sds).map(|((v, m), s)| (v - m) / s).collect()
}

impl EcocModel {
    pub fn n_features(&self) -> usize {
        self.feature_means.len()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(FeatureError::InvalidModel(msg));
        if self.coding.len() != self.learners.len() {
            return invalid(format!("{} coding rows for {} learners", self.coding.len(), self.learners.len()));
        }
        let d = self.feature_means.len();
        if self.feature_sds.len() != d {
            return invalid("normalization vectors differ in length".into());
        }
        let mut seen = vec![false; d];
        for &f in &self.selected_features {
            if f >= d || std::mem::replace(&mut seen[f], true) {
                return invalid(format!("selected feature {f} out of range or repeated"));
            }
        }
        for l in &self.learners {
            if l.weights.len() != self.selected_features.len() {
                return invalid("learner dimension does not match selected features".into());
            }
            if !(l.bias.is_finite() && l.weights.iter().all(|w| w.is_finite())) {
                return invalid("non-finite learner parameters".into());
            }
        }
        if self.feature_sds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return invalid("feature standard deviations must be positive".into());
        }
        Ok(())
    }

    /// Raw decision value of each learner for a standardized, selected input.
    pub fn decision_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n_features() {
            return Err(FeatureError::FeatureCount { expected: self.n_features(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
        let x: Vec<f64> = self
            .selected_features
            .iter()
            .map(|&f| (values[f] - self.feature_means[f]) / self.feature_sds[f])
            .collect();
        Ok(self.learners.iter().map(|l| l.decision(&x)).collect())
    }
}

/// One-vs-one vote; ties go to the class with the larger summed |decision|,
/// then to the lower class.
pub fn decode(coding: &[[AffectClass; 2]], decisions: &[f64]) -> Prediction {
    let mut votes = [0u32; 3];
    let mut scores = [0.0; 3];
    for (&[pos, neg], &f) in coding.iter().zip(decisions) {
        let winner = if f >= 0.0 { pos } else { neg };
        votes[winner.index()] += 1;
        scores[winner.index()] += f.abs();
    }
    let best = (0..3)
        .max_by(|&a, &b| {
            votes[a]
                .cmp(&votes[b])
                .then(scores[a].total_cmp(&scores[b]))
                .then(b.cmp(&a))
        })
        .unwrap_or(0);
    Prediction { class: AffectClass::ALL[best], scores, votes }
}

pub fn predict(model: &EcocModel, values: &[f64]) -> Result<Prediction> {
    let decisions = model.decision_values(values)?;
    Ok(decode(&model.coding, &decisions))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Gaussian blobs in 96-D; class means differ by `sep` on dims 0–2 only.
    pub(crate) fn blobs(seed: u64, per_class: usize, sep: f64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut out = Vec::new();
        for i in 0..per_class * 3 {
            let class = AffectClass::ALL[i % 3];
            let values = (0..96)
                .map(|f| {
                    let centre = if f < 3 { sep * (class.index() as f64 - 1.0) * (1.0 + f as f64 * 0.1) } else { 0.0 };
                    centre + noise.sample(&mut rng)
                })
                .collect();
            out.push(FeatureVector { window_start: i as f64 * 1.5, values, label: Some(class) });
        }
        out
    }

    fn accuracy(model: &EcocModel, data: &[FeatureVector]) -> f64 {
        let ok = data.iter().filter(|fv| predict(model, &fv.values).unwrap().class == fv.label.unwrap()).count();
        ok as f64 / data.len() as f64
    }

    #[test]
    fn separable_blobs_train_well() {
        let data = blobs(1, 40, 6.0);
        let model = train_ecoc(&data, 32, 1.0).unwrap();
        model.validate().unwrap();
        assert!(accuracy(&model, &data) >= 0.95);
        assert_eq!(model.selected_features.len(), 32);
        assert!(model.selected_features[0] < 3, "{:?}", &model.selected_features[..3]);
        // a training exemplar predicts its own class
        assert_eq!(predict(&model, &data[4].values).unwrap().class, data[4].label.unwrap());
    }

    #[test]
    fn one_sample_per_class_memorized() {
        let data = blobs(2, 1, 3.0);
        let model = train_ecoc(&data, 200, 1.0).unwrap();
        assert_eq!(model.selected_features.len(), 96);
        assert_eq!(accuracy(&model, &data), 1.0);
    }

    #[test]
    fn missing_class_named() {
        let data: Vec<FeatureVector> =
            blobs(3, 10, 3.0).into_iter().filter(|fv| fv.label != Some(AffectClass::High)).collect();
        assert_eq!(train_ecoc(&data, 8, 1.0), Err(FeatureError::MissingClass(AffectClass::High)));
    }

    #[test]
    fn majority_decoding() {
        // learners: (Low,Neutral) → Low, (Low,High) → Low, (Neutral,High) → High
        let p = decode(&ONE_VS_ONE, &[0.4, 2.0, -0.3]);
        assert_eq!(p.class, AffectClass::Low);
        assert_eq!(p.votes, [2, 0, 1]);
        // cyclic tie broken by summed |decision|
        let p = decode(&ONE_VS_ONE, &[0.4, -2.0, 0.3]);
        assert_eq!(p.votes, [1, 1, 1]);
        assert_eq!(p.class, AffectClass::High);
    }

    #[test]
    fn invariant_to_positive_rescaling() {
        let data = blobs(4, 30, 2.0);
        let model = train_ecoc(&data, 16, 1.0).unwrap();
        for scale in [0.5, 4.0, 1024.0] {
            let scaled: Vec<FeatureVector> = data
                .iter()
                .map(|fv| FeatureVector { values: fv.values.iter().map(|v| v * scale).collect(), ..fv.clone() })
                .collect();
            let m2 = train_ecoc(&scaled, 16, 1.0).unwrap();
            for (a, b) in data.iter().zip(&scaled) {
                assert_eq!(predict(&model, &a.values).unwrap().class, predict(&m2, &b.values).unwrap().class);
            }
        }
    }

    #[test]
    fn predict_rejects_non_finite() {
        let data = blobs(5, 5, 3.0);
        let model = train_ecoc(&data, 4, 1.0).unwrap();
        let mut v = data[0].values.clone();
        v[7] = f64::NAN;
        assert_eq!(predict(&model, &v), Err(FeatureError::NonFinite(7)));
    }

    #[test]
    fn trace_records_training_rows() {
        let data = blobs(6, 5, 3.0);
        let (_, trace) = train_ecoc_traced(&data, 4, 1.0).unwrap();
        assert_eq!(trace.stats_window_starts, data.iter().map(|fv| fv.window_start).collect::<Vec<_>>());
    }
}
