//! Synthetic EEG with known affect signatures and injectable artifacts.
//!
//! Each stimulus segment is independent 1/f noise synthesized in the
//! frequency domain (PSD `A²/f` above 0.5 Hz). Affect is encoded by scaling
//! the spectrum inside narrow sub-bands on frontal channels:
//! arousal as 15–18 Hz beta gain on the frontal group, valence as 8–13 Hz
//! alpha asymmetry between right and left frontal groups.

use crate::features::{AffectClass, SamRating};
use crate::signal::filter::{default_padding, SosFilter};
use crate::signal::montage::LABELS;
use crate::signal::{Band, EegFrame, N_CHANNELS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("artifact outside the stream: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Lowest frequency carrying 1/f power.
pub const PINK_FLOOR_HZ: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sample_rate: f64,
    /// `A` in the one-sided PSD `A²/f`, µV.
    pub noise_amplitude_uv: f64,
    /// Exponent applied to every signature gain; 0 removes all label information.
    pub strength: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { sample_rate: 250.0, noise_amplitude_uv: 10.0, strength: 1.0, seed: 0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 2.0 * 18.0) {
            return Err(SynthError::Config(format!("sample rate {} too low", self.sample_rate)));
        }
        if !(self.noise_amplitude_uv.is_finite() && self.noise_amplitude_uv > 0.0) {
            return Err(SynthError::Config("noise amplitude must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(SynthError::Config(format!("strength {} outside [0, 1]", self.strength)));
        }
        Ok(())
    }
}

/// Amplitude gains of the affect signature. High scales by `gain`, Low by
/// `1/gain`, Neutral leaves the spectrum untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectSignature {
    pub arousal_band: Band,
    pub arousal_gain: f64,
    pub arousal_channels: Vec<usize>,
    pub valence_band: Band,
    pub valence_gain: f64,
    /// Alpha rises here for High valence ...
    pub valence_right: Vec<usize>,
    /// ... and here for Low valence.
    pub valence_left: Vec<usize>,
}

fn channels(labels: &[&str]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| LABELS.iter().position(|x| x == l).unwrap_or_else(|| panic!("unknown channel {l}")))
        .collect()
}

impl Default for AffectSignature {
    fn default() -> Self {
        Self {
            arousal_band: Band::new(15.0, 18.0),
            arousal_gain: 3f64.sqrt(),
            arousal_channels: channels(&[
                "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FT9", "FC5", "FC1", "FC2", "FC6", "FT10",
            ]),
            valence_band: Band::new(8.0, 13.0),
            valence_gain: 3f64.sqrt(),
            valence_right: channels(&["Fp2", "F8", "F4", "FC6", "FC2", "FT10"]),
            valence_left: channels(&["Fp1", "F7", "F3", "FC5", "FC1", "FT9"]),
        }
    }
}

fn class_sign(c: AffectClass) -> f64 {
    c.code() as f64
}

impl AffectSignature {
    pub fn validate(&self) -> Result<()> {
        if !(self.arousal_gain > 0.0 && self.valence_gain > 0.0) {
            return Err(SynthError::Config("signature gains must be positive".into()));
        }
        let all = self.arousal_channels.iter().chain(&self.valence_right).chain(&self.valence_left);
        if let Some(ch) = all.copied().find(|&c| c >= N_CHANNELS) {
            return Err(SynthError::Config(format!("signature channel {ch} out of range")));
        }
        Ok(())
    }

    /// Per-channel amplitude gains `(arousal band, valence band)` for one stimulus.
    pub fn channel_gains(&self, arousal: AffectClass, valence: AffectClass, strength: f64) -> [(f64, f64); N_CHANNELS] {
        let mut gains = [(1.0, 1.0); N_CHANNELS];
        let a = self.arousal_gain.powf(strength * class_sign(arousal));
        for &ch in &self.arousal_channels {
            gains[ch].0 = a;
        }
        let v = self.valence_gain.powf(strength * class_sign(valence));
        for &ch in &self.valence_right {
            gains[ch].1 = v;
        }
        for &ch in &self.valence_left {
            gains[ch].1 = 1.0 / v;
        }
        gains
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusLabel {
    pub arousal: AffectClass,
    pub valence: AffectClass,
}

/// Class sequences with each class appearing `n/3` (±1) times per axis,
/// shuffled independently per axis.
pub fn balanced_labels(n: usize, seed: u64) -> Vec<StimulusLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1abe);
    let mut axis = || {
        let mut v: Vec<AffectClass> = (0..n).map(|i| AffectClass::ALL[i % 3]).collect();
        v.shuffle(&mut rng);
        v
    };
    let arousal = axis();
    let valence = axis();
    arousal.into_iter().zip(valence).map(|(arousal, valence)| StimulusLabel { arousal, valence }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSegment {
    pub id: usize,
    pub start: f64,
    pub duration: f64,
    pub arousal: AffectClass,
    pub valence: AffectClass,
    pub sam: SamRating,
}

/// Labels sidecar written next to the replay CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLabels {
    pub sample_rate: f64,
    pub config: SynthConfig,
    pub stimuli: Vec<StimulusSegment>,
}

#[derive(Debug, Clone)]
pub struct SynthSession {
    pub frames: Vec<EegFrame>,
    pub labels: SessionLabels,
}

/// Generates contiguous stimulus segments starting at t = 0.
pub fn generate_session(
    labels: &[StimulusLabel],
    durations: &[f64],
    signature: &AffectSignature,
    config: &SynthConfig,
) -> Result<SynthSession> {
    config.validate()?;
    signature.validate()?;
    if labels.len() != durations.len() {
        return Err(SynthError::Config(format!("{} labels for {} durations", labels.len(), durations.len())));
    }
    if let Some(d) = durations.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(SynthError::Config(format!("duration {d} must be positive")));
    }
    let fs = config.sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut planner = FftPlanner::new();
    let mut frames = Vec::new();
    let mut stimuli = Vec::with_capacity(labels.len());
    for (i, (label, &duration)) in labels.iter().zip(durations).enumerate() {
        let n = (duration * fs).round() as usize;
        let first = frames.len();
        let gains = signature.channel_gains(label.arousal, label.valence, config.strength);
        let mut channels = Vec::with_capacity(N_CHANNELS);
        for &(ga, gv) in &gains {
            let gain = |f: f64| {
                let mut g = 1.0;
                if signature.arousal_band.contains(f) {
                    g *= ga;
                }
                if signature.valence_band.contains(f) {
                    g *= gv;
                }
                g
            };
            channels.push(shaped_noise(n, fs, &mut rng, &mut planner, |f| {
                if f < PINK_FLOOR_HZ {
                    0.0
                } else {
                    config.noise_amplitude_uv * f.powf(-0.5) * gain(f)
                }
            }));
        }
        for s in 0..n {
            let mut samples = [0.0; N_CHANNELS];
            for (ch, row) in channels.iter().enumerate() {
                samples[ch] = row[s];
            }
            frames.push(EegFrame::new((first + s) as f64 / fs, samples));
        }
        stimuli.push(StimulusSegment {
            id: i + 1,
            start: first as f64 / fs,
            duration: n as f64 / fs,
            arousal: label.arousal,
            valence: label.valence,
            sam: SamRating { arousal: SamRating::anchor(label.arousal), valence: SamRating::anchor(label.valence) },
        });
    }
    Ok(SynthSession { frames, labels: SessionLabels { sample_rate: fs, config: config.clone(), stimuli } })
}

/// Periodic Gaussian noise of length `n` whose one-sided amplitude spectral
/// density is `asd(f)` (µV/√Hz).
fn shaped_noise<R: Rng>(
    n: usize,
    fs: f64,
    rng: &mut R,
    planner: &mut FftPlanner<f64>,
    asd: impl Fn(f64) -> f64,
) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    // E|X_k|² = n·fs·S(f)/2 for a one-sided PSD S
    let scale = (n as f64 * fs / 2.0).sqrt();
    for k in 1..n.div_ceil(2) {
        let f = k as f64 * fs / n as f64;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let c = Complex::new(re, im) * (asd(f) * scale / std::f64::consts::SQRT_2);
        spectrum[k] = c;
        spectrum[n - k] = c.conj();
    }
    planner.plan_fft_inverse(n).process(&mut spectrum);
    spectrum.into_iter().map(|c| c.re / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Artifact {
    /// Channel held at its first value over the range.
    FlatChannel { channel: usize, start: f64, duration: f64 },
    /// Added 20–40 Hz noise with SD `factor` × the median channel's 20–40 Hz SD.
    HfNoise { channel: usize, start: f64, duration: f64, factor: f64 },
    /// Single-sample offset of `amplitude_uv`.
    Spike { channel: usize, time: f64, amplitude_uv: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub artifact: Artifact,
    /// Half-open frame-index range touched.
    pub frames: (usize, usize),
    /// Added noise SD for `HfNoise`, held value for `FlatChannel`, 0 otherwise.
    pub level: f64,
}

pub const HF_NOISE_BAND: Band = Band::new(20.0, 40.0);

/// Overlays artifacts in order and returns a ground-truth log.
pub fn inject_artifacts(
    frames: &mut [EegFrame],
    sample_rate: f64,
    artifacts: &[Artifact],
    seed: u64,
) -> Result<Vec<ArtifactRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::new();
    let t0 = frames.first().map_or(0.0, |f| f.timestamp);
    let n_frames = frames.len();
    let range = |start: f64, duration: f64, channel: usize| -> Result<(usize, usize)> {
        let a = ((start - t0) * sample_rate).round();
        let b = ((start - t0 + duration) * sample_rate).round();
        if channel >= N_CHANNELS || a < 0.0 || b > n_frames as f64 || b <= a {
            return Err(SynthError::OutOfRange(format!(
                "channel {channel}, [{start}, {}) s over {} frames",
                start + duration,
                n_frames
            )));
        }
        Ok((a as usize, b as usize))
    };
    let mut log = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let record = match *artifact {
            Artifact::FlatChannel { channel, start, duration } => {
                let (a, b) = range(start, duration, channel)?;
                let value = frames[a].samples[channel];
                frames[a..b].iter_mut().for_each(|f| f.samples[channel] = value);
                ArtifactRecord { artifact: artifact.clone(), frames: (a, b), level: value }
            }
            Artifact::HfNoise { channel, start, duration, factor } => {
                let (a, b) = range(start, duration, channel)?;
                let filter = SosFilter::bandpass(HF_NOISE_BAND.low, HF_NOISE_BAND.high, sample_rate)
                    .map_err(|e| SynthError::Config(e.to_string()))?;
                let pad = default_padding(HF_NOISE_BAND.low, sample_rate);
                let sds: Vec<f64> = (0..N_CHANNELS)
                    .map(|ch| {
                        let row: Vec<f64> = frames[a..b].iter().map(|f| f.samples[ch]).collect();
                        sample_sd(&filter.filtfilt(&row, pad))
                    })
                    .collect();
                let target = factor * crate::signal::bad_channels::median(&sds);
                let noise = shaped_noise(b - a, sample_rate, &mut rng, &mut planner, |f| {
                    f64::from(u8::from(HF_NOISE_BAND.contains(f)))
                });
                let k = target / sample_sd(&noise).max(f64::MIN_POSITIVE);
                for (f, v) in frames[a..b].iter_mut().zip(noise) {
                    f.samples[channel] += k * v;
                }
                ArtifactRecord { artifact: artifact.clone(), frames: (a, b), level: target }
            }
            Artifact::Spike { channel, time, amplitude_uv } => {
                let (a, _) = range(time, 1.0 / sample_rate, channel)?;
                frames[a].samples[channel] += amplitude_uv;
                ArtifactRecord { artifact: artifact.clone(), frames: (a, a + 1), level: 0.0 }
            }
        };
        log.push(record);
    }
    Ok(log)
}

fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{clamp_amplitude, detect_bad_channels, EegEpoch, PipelineConfig};

    fn uniform(labels: &[StimulusLabel], seconds: f64) -> Vec<f64> {
        vec![seconds; labels.len()]
    }

    /// Dense periodogram power of `x` inside `band` (one-sided, µV²).
    fn periodogram_band_power(x: &[f64], fs: f64, band: Band) -> f64 {
        let n = x.len();
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        (1..n / 2)
            .filter(|&k| band.contains(k as f64 * fs / n as f64))
            .map(|k| 2.0 * buf[k].norm_sqr() / (n as f64 * n as f64))
            .sum()
    }

    #[test]
    fn same_seed_bit_identical() {
        let labels = balanced_labels(6, 3);
        let config = SynthConfig { seed: 11, ..Default::default() };
        let a = generate_session(&labels, &uniform(&labels, 2.0), &AffectSignature::default(), &config).unwrap();
        let b = generate_session(&labels, &uniform(&labels, 2.0), &AffectSignature::default(), &config).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.frames.len(), 6 * 500);
        assert_eq!(a.labels.stimuli[3].start, 6.0);
    }

    #[test]
    fn balanced_labels_cover_classes() {
        let labels = balanced_labels(49, 1);
        for c in AffectClass::ALL {
            let n = labels.iter().filter(|l| l.arousal == c).count();
            assert!((16..=17).contains(&n));
        }
    }

    #[test]
    fn white_noise_shaping_has_expected_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = shaped_noise(100_000, 250.0, &mut rng, &mut FftPlanner::new(), |f| {
            f64::from(u8::from((10.0..20.0).contains(&f)))
        });
        // S = 1 µV²/Hz over 10 Hz
        let var = sample_sd(&x).powi(2);
        assert!((var - 10.0).abs() < 0.3, "{var}");
    }

    #[test]
    fn frontal_beta_ratio_follows_gain() {
        let sig = AffectSignature::default();
        let labels: Vec<StimulusLabel> = (0..20)
            .map(|i| StimulusLabel {
                arousal: if i % 2 == 0 { AffectClass::High } else { AffectClass::Low },
                valence: AffectClass::Neutral,
            })
            .collect();
        let config = SynthConfig { seed: 2, ..Default::default() };
        let s = generate_session(&labels, &uniform(&labels, 10.0), &sig, &config).unwrap();
        let (mut high, mut low) = (0.0, 0.0);
        for seg in &s.labels.stimuli {
            let a = (seg.start * 250.0) as usize;
            for &ch in &sig.arousal_channels {
                let x: Vec<f64> = s.frames[a..a + 2500].iter().map(|f| f.samples[ch]).collect();
                let p = periodogram_band_power(&x, 250.0, sig.arousal_band);
                if seg.arousal == AffectClass::High {
                    high += p;
                } else {
                    low += p;
                }
            }
        }
        let configured = (sig.arousal_gain / (1.0 / sig.arousal_gain)).powi(2);
        assert!(high / low >= configured * 0.8, "{} vs {}", high / low, configured);
    }

    #[test]
    fn spectrum_slope_is_minus_one() {
        let labels = vec![StimulusLabel { arousal: AffectClass::Neutral, valence: AffectClass::Neutral }; 8];
        let config = SynthConfig { strength: 0.0, seed: 3, ..Default::default() };
        let s = generate_session(&labels, &uniform(&labels, 10.0), &AffectSignature::default(), &config).unwrap();
        let x: Vec<f64> = s.frames.iter().map(|f| f.samples[4]).collect();
        let welch = crate::signal::bandpower::Welch::new(500, 250.0);
        let psd = welch.psd(&x);
        let pts: Vec<(f64, f64)> = welch
            .frequencies()
            .into_iter()
            .zip(psd)
            .filter(|(f, _)| (1.0..=40.0).contains(f))
            .map(|(f, p)| (f.log10(), p.log10()))
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() <= 0.3, "slope {slope}");
    }

    fn baseline(seed: u64) -> Vec<EegFrame> {
        let labels = vec![StimulusLabel { arousal: AffectClass::Neutral, valence: AffectClass::Neutral }];
        let config = SynthConfig { strength: 0.0, seed, ..Default::default() };
        generate_session(&labels, &[10.0], &AffectSignature::default(), &config).unwrap().frames
    }

    #[test]
    fn injected_artifacts_are_detected() {
        let mut frames = baseline(7);
        let log = inject_artifacts(
            &mut frames,
            250.0,
            &[
                Artifact::FlatChannel { channel: 7, start: 2.0, duration: 6.0 },
                Artifact::HfNoise { channel: 3, start: 0.0, duration: 10.0, factor: 10.0 },
            ],
            1,
        )
        .unwrap();
        assert_eq!(log[0].frames, (500, 2000));
        let epoch = EegEpoch::from_frames(&frames, 250.0).unwrap();
        let bad = detect_bad_channels(&epoch, &PipelineConfig::default()).unwrap();
        assert_eq!(bad.into_iter().collect::<Vec<_>>(), vec![3, 7]);
    }

    #[test]
    fn spike_is_clamped_downstream() {
        let mut frames = baseline(8);
        inject_artifacts(&mut frames, 250.0, &[Artifact::Spike { channel: 0, time: 1.0, amplitude_uv: 500.0 }], 0)
            .unwrap();
        let mut epoch = EegEpoch::from_frames(&frames, 250.0).unwrap();
        assert!(epoch.data[0][250] > 200.0);
        assert!(clamp_amplitude(&mut epoch, 200.0) >= 1);
        assert_eq!(epoch.data[0][250], 200.0);
    }

    #[test]
    fn artifact_range_checked() {
        let mut frames = baseline(9);
        let err = inject_artifacts(&mut frames, 250.0, &[Artifact::FlatChannel { channel: 7, start: 8.0, duration: 6.0 }], 0);
        assert!(matches!(err, Err(SynthError::OutOfRange(_))));
        let err = inject_artifacts(&mut frames, 250.0, &[Artifact::Spike { channel: 40, time: 1.0, amplitude_uv: 1.0 }], 0);
        assert!(matches!(err, Err(SynthError::OutOfRange(_))));
    }
}
