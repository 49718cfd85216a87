//! Fitting the arousal and valence models from training captures.

use super::{Result, SessionError};
use crate::features::cv::{evaluate, CvConfig, CvReport};
use crate::features::dataset::{Dataset, LabeledWindow};
use crate::features::{predict, train_ecoc, Axis, EcocModel, FeatureVector, Prediction, SamRating};
use crate::signal::{band_powers_offline, ChannelMontage, EegEpoch, EegFrame, PipelineConfig};
use crate::synth::SessionLabels;
use serde::{Deserialize, Serialize};

/// Raw EEG recorded while one stimulus was shown, with the rating given after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCapture {
    pub stimulus_id: usize,
    pub epoch: EegEpoch,
    pub sam: SamRating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectModelPair {
    pub arousal: EcocModel,
    pub valence: EcocModel,
    pub pipeline: PipelineConfig,
}

impl AffectModelPair {
    pub fn predict(&self, features: &[f64]) -> Result<(Prediction, Prediction)> {
        Ok((predict(&self.arousal, features)?, predict(&self.valence, features)?))
    }

    pub fn validate(&self) -> Result<()> {
        self.arousal.validate()?;
        self.valence.validate()?;
        self.pipeline.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub arousal: CvReport,
    pub valence: CvReport,
    pub n_windows: usize,
    /// Bad channels found in each capture, in capture order.
    pub bad_channels: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub pipeline: PipelineConfig,
    pub cv: CvConfig,
}

/// Runs the offline chain on every capture and labels each window with the
/// capture's rating.
pub fn capture_features(
    captures: &[TrainingCapture],
    montage: &ChannelMontage,
    pipeline: &PipelineConfig,
) -> Result<(Dataset, Vec<Vec<usize>>)> {
    let per_capture: Vec<Result<(Vec<LabeledWindow>, Vec<usize>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = captures
            .iter()
            .map(|c| scope.spawn(move || capture_windows(c, montage, pipeline)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("feature worker panicked")).collect()
    });
    let mut dataset = Dataset::default();
    let mut bad = Vec::with_capacity(captures.len());
    for r in per_capture {
        let (windows, b) = r?;
        dataset.windows.extend(windows);
        bad.push(b);
    }
    dataset.sort_chronologically();
    Ok((dataset, bad))
}

fn capture_windows(
    capture: &TrainingCapture,
    montage: &ChannelMontage,
    pipeline: &PipelineConfig,
) -> Result<(Vec<LabeledWindow>, Vec<usize>)> {
    let (arousal, valence) = capture.sam.classes()?;
    let powers = band_powers_offline(&capture.epoch, montage, pipeline)?;
    if powers.is_empty() {
        return Err(SessionError::Fit(format!("stimulus {} produced no complete window", capture.stimulus_id)));
    }
    let bad = powers[0].bad_channels.iter().copied().collect();
    let windows = powers
        .iter()
        .map(|bp| {
            let fv = FeatureVector::from_band_powers(bp, None);
            LabeledWindow { window_start: fv.window_start, values: fv.values, arousal: Some(arousal), valence: Some(valence) }
        })
        .collect();
    Ok((windows, bad))
}

/// Cross-validates and fits both axes on a labeled dataset.
pub fn fit_dataset(dataset: &Dataset, config: &FitConfig) -> Result<(AffectModelPair, CvReport, CvReport)> {
    if dataset.is_empty() {
        return Err(crate::features::FeatureError::EmptyDataset.into());
    }
    let run = |axis: Axis| -> Result<(EcocModel, CvReport)> {
        let data = dataset.for_axis(axis);
        let report = evaluate(&data, &config.cv)?;
        let model = train_ecoc(&data, config.cv.k_features, config.cv.c)?;
        Ok((model, report))
    };
    let (a, v) = std::thread::scope(|s| {
        let a = s.spawn(|| run(Axis::Arousal));
        let v = run(Axis::Valence);
        (a.join().expect("arousal fit panicked"), v)
    });
    let ((arousal, ra), (valence, rv)) = (a?, v?);
    Ok((AffectModelPair { arousal, valence, pipeline: config.pipeline.clone() }, ra, rv))
}

/// Preprocesses all captures, then fits and cross-validates both models.
pub fn fit_models(
    captures: &[TrainingCapture],
    montage: &ChannelMontage,
    config: &FitConfig,
) -> Result<(AffectModelPair, FitReport, Dataset)> {
    if captures.is_empty() {
        return Err(crate::features::FeatureError::EmptyDataset.into());
    }
    let (dataset, bad_channels) = capture_features(captures, montage, &config.pipeline)?;
    let (pair, arousal, valence) = fit_dataset(&dataset, config)?;
    let report = FitReport { arousal, valence, n_windows: dataset.len(), bad_channels };
    Ok((pair, report, dataset))
}

/// Cuts a continuous recording into per-stimulus captures using a labels sidecar.
pub fn captures_from_labels(frames: &[EegFrame], labels: &SessionLabels) -> Result<Vec<TrainingCapture>> {
    let fs = labels.sample_rate;
    let t0 = frames.first().map_or(0.0, |f| f.timestamp);
    labels
        .stimuli
        .iter()
        .map(|s| {
            let a = ((s.start - t0) * fs).round();
            let b = ((s.start - t0 + s.duration) * fs).round();
            if a < 0.0 || b > frames.len() as f64 || b <= a {
                return Err(SessionError::Fit(format!(
                    "stimulus {} [{}, {}) s lies outside the recording",
                    s.id,
                    s.start,
                    s.start + s.duration
                )));
            }
            Ok(TrainingCapture {
                stimulus_id: s.id,
                epoch: EegEpoch::from_frames(&frames[a as usize..b as usize], fs)?,
                sam: s.sam,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{balanced_labels, generate_session, AffectSignature, SynthConfig};

    fn synth_captures(n: usize, strength: f64, seed: u64) -> Vec<TrainingCapture> {
        let labels = balanced_labels(n, seed);
        let config = SynthConfig { strength, seed, ..Default::default() };
        let s = generate_session(&labels, &vec![10.0; n], &AffectSignature::default(), &config).unwrap();
        captures_from_labels(&s.frames, &s.labels).unwrap()
    }

    #[test]
    fn six_windows_per_capture() {
        let captures = synth_captures(4, 1.0, 1);
        let (ds, bad) = capture_features(&captures, &ChannelMontage::standard(), &PipelineConfig::default()).unwrap();
        assert_eq!(ds.len(), 24);
        assert_eq!(bad.len(), 4);
        assert_eq!(ds.windows[1].window_start, 1.5);
        assert_eq!(ds.windows[6].window_start, 10.0);
    }

    #[test]
    fn empty_training_set_rejected() {
        let err = fit_models(&[], &ChannelMontage::standard(), &FitConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }
}
