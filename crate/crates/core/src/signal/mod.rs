//! Deterministic EEG preprocessing.
//!
//! The offline path (training captures) runs
//! clamp → zero-phase bandpass → bad-channel detection → interpolation →
//! common average reference → windowing → Welch band powers.
//! The online path is the same chain with a causal [`filter::OnlineBandpass`]
//! carrying per-channel state between frames.

pub mod bad_channels;
pub mod bandpower;
pub mod filter;
pub mod io;
pub mod montage;
pub mod spatial;
pub mod window;

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub use bad_channels::detect_bad_channels;
pub use bandpower::{extract_band_powers, BandPowerWindow};
pub use filter::{bandpass, FilterMode, OnlineBandpass};
pub use montage::ChannelMontage;
pub use spatial::{interpolate, rereference_average};
pub use window::window_stream;

pub const N_CHANNELS: usize = 32;
pub const N_BANDS: usize = 3;
pub const N_FEATURES: usize = N_CHANNELS * N_BANDS;

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("non-finite sample at channel {channel}, sample {sample}")]
    NonFinite { channel: usize, sample: usize },
    #[error("invalid band {low}-{high} Hz for sample rate {sample_rate} Hz")]
    InvalidBand { low: f64, high: f64, sample_rate: f64 },
    #[error("insufficient history: {have:.3} s available, {need:.3} s required")]
    InsufficientHistory { have: f64, need: f64 },
    #[error("all channels are bad; epoch is unrecoverable")]
    AllChannelsBad,
    #[error("channel index {0} out of range")]
    InvalidChannel(usize),
    #[error("epoch duration mismatch: expected {expected} samples, got {got}")]
    DurationMismatch { expected: usize, got: usize },
    #[error("expected {N_CHANNELS} channels, got {0}")]
    ChannelCount(usize),
    #[error("invalid montage: {0}")]
    Montage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SignalError>;

/// One timestamped 32-channel sample vector (µV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegFrame {
    pub timestamp: f64,
    pub samples: [f64; N_CHANNELS],
}

impl EegFrame {
    pub fn new(timestamp: f64, samples: [f64; N_CHANNELS]) -> Self {
        Self { timestamp, samples }
    }

    pub fn is_finite(&self) -> bool {
        self.timestamp.is_finite() && self.samples.iter().all(|v| v.is_finite())
    }
}

/// A contiguous multichannel window, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EegEpoch {
    pub start_time: f64,
    pub sample_rate: f64,
    /// `data[channel][sample]` in µV.
    pub data: Vec<Vec<f64>>,
}

impl EegEpoch {
    pub fn new(start_time: f64, sample_rate: f64, data: Vec<Vec<f64>>) -> Result<Self> {
        let epoch = Self { start_time, sample_rate, data };
        epoch.validate()?;
        Ok(epoch)
    }

    pub fn zeros(start_time: f64, sample_rate: f64, n_samples: usize) -> Self {
        Self { start_time, sample_rate, data: vec![vec![0.0; n_samples]; N_CHANNELS] }
    }

    /// Stacks frames into an epoch. Timestamps are taken as-is; the caller is
    /// responsible for contiguity.
    pub fn from_frames(frames: &[EegFrame], sample_rate: f64) -> Result<Self> {
        let start_time = frames.first().map_or(0.0, |f| f.timestamp);
        let mut data = vec![Vec::with_capacity(frames.len()); N_CHANNELS];
        for frame in frames {
            for (row, &v) in data.iter_mut().zip(frame.samples.iter()) {
                row.push(v);
            }
        }
        Self::new(start_time, sample_rate, data)
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn duration(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != N_CHANNELS {
            return Err(SignalError::ChannelCount(self.data.len()));
        }
        let n = self.n_samples();
        for (ch, row) in self.data.iter().enumerate() {
            if row.len() != n {
                return Err(SignalError::DurationMismatch { expected: n, got: row.len() });
            }
            if let Some(sample) = row.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite { channel: ch, sample });
            }
        }
        Ok(())
    }

    /// Sub-epoch covering samples `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            start_time: self.start_time + from as f64 / self.sample_rate,
            sample_rate: self.sample_rate,
            data: self.data.iter().map(|row| row[from..to].to_vec()).collect(),
        }
    }
}

/// A half-open frequency band `[low, high)` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
}

impl Band {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low && f < self.high
    }
}

pub const THETA: Band = Band::new(4.0, 7.0);
pub const ALPHA: Band = Band::new(7.0, 15.0);
pub const BETA: Band = Band::new(15.0, 30.0);

/// Parameters of the preprocessing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sample_rate: f64,
    pub passband: Band,
    pub window_s: f64,
    pub overlap_s: f64,
    pub bands: [Band; N_BANDS],
    /// Amplitude guard standing in for artifact subspace reconstruction.
    pub clamp_uv: f64,
    pub flat_epsilon_uv: f64,
    pub flat_duration_s: f64,
    pub hf_band: Band,
    pub hf_z_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate: 250.0,
            passband: Band::new(1.0, 40.0),
            window_s: 2.0,
            overlap_s: 0.5,
            bands: [THETA, ALPHA, BETA],
            clamp_uv: 200.0,
            flat_epsilon_uv: 1e-6,
            flat_duration_s: 5.0,
            hf_band: Band::new(20.0, 40.0),
            hf_z_threshold: 4.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate / 2.0;
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(SignalError::Config(format!("sample_rate {} must be positive", self.sample_rate)));
        }
        for band in [self.passband, self.hf_band] {
            if !(band.low > 0.0 && band.low < band.high && band.high < nyquist) {
                return Err(SignalError::InvalidBand {
                    low: band.low,
                    high: band.high,
                    sample_rate: self.sample_rate,
                });
            }
        }
        for band in &self.bands {
            if !(band.low >= 0.0 && band.low < band.high && band.high <= nyquist) {
                return Err(SignalError::InvalidBand {
                    low: band.low,
                    high: band.high,
                    sample_rate: self.sample_rate,
                });
            }
        }
        if !(self.window_s > self.overlap_s && self.overlap_s >= 0.0) {
            return Err(SignalError::Config(format!(
                "window {} s must exceed overlap {} s >= 0",
                self.window_s, self.overlap_s
            )));
        }
        if self.window_samples() < 8 {
            return Err(SignalError::Config("window shorter than 8 samples".into()));
        }
        if self.clamp_uv <= 0.0 || self.flat_duration_s <= 0.0 || self.hf_z_threshold <= 0.0 {
            return Err(SignalError::Config("clamp, flat duration and z threshold must be positive".into()));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        (self.window_s * self.sample_rate).round() as usize
    }

    pub fn hop_s(&self) -> f64 {
        self.window_s - self.overlap_s
    }
}

/// Clamps every sample to `±limit`, returning the number of clamped samples.
pub fn clamp_amplitude(epoch: &mut EegEpoch, limit: f64) -> usize {
    let mut clamped = 0;
    for row in &mut epoch.data {
        for v in row.iter_mut() {
            if v.abs() > limit {
                *v = v.clamp(-limit, limit);
                clamped += 1;
            }
        }
    }
    if clamped > 0 {
        tracing::debug!(clamped, start = epoch.start_time, "amplitude guard clamped samples");
    }
    clamped
}

/// Result of running the offline chain on one continuous recording.
#[derive(Debug, Clone)]
pub struct PreprocessedRecording {
    pub epoch: EegEpoch,
    pub bad_channels: BTreeSet<usize>,
    pub clamped_samples: usize,
}

/// Offline chain up to (and including) re-referencing, for one continuous
/// recording of at least `flat_duration_s`.
pub fn preprocess_offline(
    raw: &EegEpoch,
    montage: &ChannelMontage,
    config: &PipelineConfig,
) -> Result<PreprocessedRecording> {
    raw.validate()?;
    let mut clamped = raw.clone();
    let clamped_samples = clamp_amplitude(&mut clamped, config.clamp_uv);
    let filtered = bandpass(&clamped, config.passband.low, config.passband.high, FilterMode::ZeroPhase)?;
    let bad = detect_bad_channels(&clamped, config)?;
    let repaired = interpolate(&filtered, &bad, montage)?;
    let epoch = rereference_average(&repaired)?;
    Ok(PreprocessedRecording { epoch, bad_channels: bad, clamped_samples })
}

/// Offline chain all the way to band powers for every complete window.
pub fn band_powers_offline(
    raw: &EegEpoch,
    montage: &ChannelMontage,
    config: &PipelineConfig,
) -> Result<Vec<BandPowerWindow>> {
    let pre = preprocess_offline(raw, montage, config)?;
    window::window_epoch(&pre.epoch, config.window_s, config.overlap_s)
        .into_iter()
        .map(|w| {
            let mut bp = extract_band_powers(&w, config)?;
            bp.bad_channels = pre.bad_channels.clone();
            Ok(bp)
        })
        .collect()
}
