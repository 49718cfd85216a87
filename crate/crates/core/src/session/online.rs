//! Online classification of design changes.
//!
//! Frames are clamped and causally bandpassed as they arrive. A change at
//! stream time `t` is classified from the single window
//! `[t + delay, t + delay + window)`, once its last sample has arrived.

use super::fit::AffectModelPair;
use crate::features::{FeatureVector, Prediction};
use crate::signal::{
    detect_bad_channels, extract_band_powers, interpolate, rereference_average, ChannelMontage, EegEpoch, EegFrame,
    OnlineBandpass, PipelineConfig, SignalError,
};
use std::collections::{BTreeSet, VecDeque};

/// Offset between a design change and the start of its analysis window.
pub const DEFAULT_WINDOW_DELAY_S: f64 = 0.5;
pub const DEFAULT_DEBOUNCE_S: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum OnlineError {
    #[error("insufficient data: expected {expected} samples in [{start}, {end}), found {found}")]
    InsufficientData { start: f64, end: f64, expected: usize, found: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
}

/// Rolling raw and filtered history of the live stream.
#[derive(Debug)]
pub struct OnlineClassifier {
    pipeline: PipelineConfig,
    montage: ChannelMontage,
    filter: OnlineBandpass,
    raw: VecDeque<EegFrame>,
    filtered: VecDeque<EegFrame>,
    history_s: f64,
}

impl OnlineClassifier {
    pub fn new(pipeline: PipelineConfig, montage: ChannelMontage, history_s: f64) -> Result<Self, OnlineError> {
        pipeline.validate()?;
        montage.validate()?;
        let filter = OnlineBandpass::new(pipeline.passband.low, pipeline.passband.high, pipeline.sample_rate)?;
        Ok(Self { pipeline, montage, filter, raw: VecDeque::new(), filtered: VecDeque::new(), history_s })
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn push(&mut self, frame: &EegFrame) {
        let limit = self.pipeline.clamp_uv;
        let mut clamped = frame.clone();
        clamped.samples.iter_mut().for_each(|v| *v = v.clamp(-limit, limit));
        let filtered = EegFrame::new(frame.timestamp, self.filter.process(&clamped.samples));
        self.raw.push_back(clamped);
        self.filtered.push_back(filtered);
        let horizon = frame.timestamp - self.history_s;
        while self.raw.front().is_some_and(|f| f.timestamp < horizon) {
            self.raw.pop_front();
            self.filtered.pop_front();
        }
    }

    pub fn latest_time(&self) -> Option<f64> {
        self.raw.back().map(|f| f.timestamp)
    }

    fn half_sample(&self) -> f64 {
        0.5 / self.pipeline.sample_rate
    }

    /// Whether the last sample of the window starting at `start` has arrived.
    pub fn window_ready(&self, start: f64) -> bool {
        let last = start + (self.pipeline.window_samples() - 1) as f64 / self.pipeline.sample_rate;
        self.latest_time().is_some_and(|t| t >= last - self.half_sample())
    }

    fn select(history: &VecDeque<EegFrame>, start: f64, end: f64) -> Vec<EegFrame> {
        let from = history.partition_point(|f| f.timestamp < start);
        history.iter().skip(from).take_while(|f| f.timestamp < end).cloned().collect()
    }

    /// Features of the window starting at `start`, or an error if the stream
    /// has a gap inside it.
    pub fn features_at(&self, start: f64) -> Result<(FeatureVector, BTreeSet<usize>), OnlineError> {
        let fs = self.pipeline.sample_rate;
        let n = self.pipeline.window_samples();
        let (lo, hi) = (start - self.half_sample(), start + n as f64 / fs - self.half_sample());
        let frames = Self::select(&self.filtered, lo, hi);
        let contiguous = frames.windows(2).all(|w| (w[1].timestamp - w[0].timestamp) < 1.5 / fs);
        if frames.len() != n || !contiguous {
            return Err(OnlineError::InsufficientData { start, end: start + n as f64 / fs, expected: n, found: frames.len() });
        }
        let window = EegEpoch::from_frames(&frames, fs)?;

        let recent = Self::select(&self.raw, hi - self.pipeline.flat_duration_s, hi);
        let bad = match detect_bad_channels(&EegEpoch::from_frames(&recent, fs)?, &self.pipeline) {
            Ok(bad) => bad,
            Err(SignalError::InsufficientHistory { have, need }) => {
                tracing::debug!(have, need, "short history; skipping bad-channel detection");
                BTreeSet::new()
            }
            Err(e) => return Err(e.into()),
        };
        let repaired = interpolate(&window, &bad, &self.montage)?;
        let referenced = rereference_average(&repaired)?;
        let mut bp = extract_band_powers(&referenced, &self.pipeline)?;
        bp.bad_channels = bad.clone();
        Ok((FeatureVector::from_band_powers(&bp, None), bad))
    }

    pub fn classify(&self, models: &AffectModelPair, start: f64) -> Result<(Prediction, Prediction), OnlineError> {
        let (fv, _) = self.features_at(start)?;
        let arousal = crate::features::predict(&models.arousal, &fv.values)?;
        let valence = crate::features::predict(&models.valence, &fv.values)?;
        Ok((arousal, valence))
    }
}

/// A design change waiting for its analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingChange<T> {
    pub event_time: f64,
    pub window_start: f64,
    pub tag: T,
}

/// Keeps pending changes, dropping any change followed by a newer one
/// within the debounce interval.
#[derive(Debug)]
pub struct ChangeDebouncer<T> {
    interval: f64,
    delay: f64,
    pending: Vec<PendingChange<T>>,
}

impl<T> ChangeDebouncer<T> {
    pub fn new(interval: f64, delay: f64) -> Self {
        Self { interval, delay, pending: Vec::new() }
    }

    /// Registers a change and returns the changes it supersedes.
    pub fn on_change(&mut self, event_time: f64, tag: T) -> Vec<PendingChange<T>> {
        let (superseded, kept): (Vec<_>, Vec<_>) =
            self.pending.drain(..).partition(|p| event_time - p.event_time < self.interval);
        self.pending = kept;
        self.pending.push(PendingChange { event_time, window_start: event_time + self.delay, tag });
        superseded
    }

    /// Removes and returns the changes whose window is complete.
    pub fn take_ready(&mut self, ready: impl Fn(f64) -> bool) -> Vec<PendingChange<T>> {
        let (done, waiting): (Vec<_>, Vec<_>) = self.pending.drain(..).partition(|p| ready(p.window_start));
        self.pending = waiting;
        done
    }

    /// Removes and returns the changes for which `expired` holds.
    pub fn take_expired(&mut self, expired: impl Fn(&PendingChange<T>) -> bool) -> Vec<PendingChange<T>> {
        let (gone, waiting): (Vec<_>, Vec<_>) = self.pending.drain(..).partition(|p| expired(p));
        self.pending = waiting;
        gone
    }

    pub fn clear(&mut self) {
        self.pending.clear();
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::AffectClass;
    use crate::session::fit::{captures_from_labels, fit_models, FitConfig};
    use crate::synth::{balanced_labels, generate_session, AffectSignature, StimulusLabel, SynthConfig};

    #[test]
    fn window_arithmetic() {
        let mut d = ChangeDebouncer::new(DEFAULT_DEBOUNCE_S, DEFAULT_WINDOW_DELAY_S);
        d.on_change(100.0, ());
        let ready = d.take_ready(|start| start <= 100.5);
        assert_eq!(ready[0].window_start, 100.5);
    }

    #[test]
    fn rapid_changes_latest_wins() {
        let mut d = ChangeDebouncer::new(0.5, 0.5);
        assert!(d.on_change(10.0, 1).is_empty());
        let superseded = d.on_change(10.3, 2);
        assert_eq!(superseded.len(), 1);
        assert_eq!(superseded[0].tag, 1);
        assert_eq!(d.len(), 1);
        // far enough apart: both kept
        d.on_change(11.0, 3);
        assert_eq!(d.len(), 2);
    }

    fn stream(seconds: f64) -> Vec<EegFrame> {
        let labels = vec![StimulusLabel { arousal: AffectClass::Neutral, valence: AffectClass::Neutral }];
        let config = SynthConfig { strength: 0.0, seed: 4, ..Default::default() };
        generate_session(&labels, &[seconds], &AffectSignature::default(), &config).unwrap().frames
    }

    #[test]
    fn features_need_contiguous_window() {
        let mut c = OnlineClassifier::new(PipelineConfig::default(), ChannelMontage::standard(), 30.0).unwrap();
        for (i, f) in stream(8.0).iter().enumerate() {
            // drop 0.2 s between 6.0 and 6.2 s
            if !(1500..1550).contains(&i) {
                c.push(f);
            }
        }
        assert!(c.window_ready(5.5));
        assert!(!c.window_ready(6.1));
        assert!(c.features_at(1.0).is_ok());
        assert!(matches!(c.features_at(5.5), Err(OnlineError::InsufficientData { found: 450, .. })));
    }

    #[test]
    fn online_tracks_offline_predictions() {
        let n = 24;
        let labels = balanced_labels(n, 8);
        let config = SynthConfig { seed: 8, ..Default::default() };
        let s = generate_session(&labels, &vec![10.0; n], &AffectSignature::default(), &config).unwrap();
        let caps = captures_from_labels(&s.frames, &s.labels).unwrap();
        let (models, _, _) = fit_models(&caps, &ChannelMontage::standard(), &FitConfig::default()).unwrap();
        let mut c = OnlineClassifier::new(PipelineConfig::default(), ChannelMontage::standard(), 30.0).unwrap();
        let mut hits = 0;
        for seg in &s.labels.stimuli {
            let a = (seg.start * 250.0) as usize;
            for f in &s.frames[a..a + 2500] {
                c.push(f);
            }
            // window in the middle of the segment, away from the segment edge
            let (arousal, valence) = c.classify(&models, seg.start + 4.0).unwrap();
            hits += usize::from(arousal.class == seg.arousal) + usize::from(valence.class == seg.valence);
        }
        assert!(hits as f64 / (2 * n) as f64 >= 0.75, "{hits}");
    }
}
