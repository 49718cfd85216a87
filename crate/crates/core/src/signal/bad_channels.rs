//! Bad-channel rules: flatline and excess high-frequency noise.

use super::filter::{default_padding, SosFilter};
use super::{EegEpoch, PipelineConfig, Result, SignalError};
use std::collections::BTreeSet;

/// Flatness is evaluated on sliding windows assembled from blocks of this length.
pub const FLAT_BLOCK_S: f64 = 0.25;

/// MAD-to-sigma factor for normally distributed data.
const MAD_SCALE: f64 = 1.4826;

/// Flags channels that are flat over any `flat_duration_s` stretch, or whose
/// `hf_band` residual standard deviation has a robust (median/MAD) z-score
/// above `hf_z_threshold` across channels.
pub fn detect_bad_channels(recent: &EegEpoch, config: &PipelineConfig) -> Result<BTreeSet<usize>> {
    recent.validate()?;
    let need = (config.flat_duration_s * recent.sample_rate).round() as usize;
    if recent.n_samples() < need {
        return Err(SignalError::InsufficientHistory { have: recent.duration(), need: config.flat_duration_s });
    }
    let mut bad = flat_channels(recent, config.flat_duration_s, config.flat_epsilon_uv);
    let sds = hf_residual_sds(recent, config)?;
    bad.extend(robust_outliers(&sds, config.hf_z_threshold));
    Ok(bad)
}

/// Channels whose sample standard deviation drops below `epsilon` over any
/// window of `duration` seconds (windows advance by [`FLAT_BLOCK_S`]).
pub fn flat_channels(epoch: &EegEpoch, duration: f64, epsilon: f64) -> BTreeSet<usize> {
    let block = ((FLAT_BLOCK_S * epoch.sample_rate).round() as usize).max(1);
    let blocks_per_window = ((duration * epoch.sample_rate) / block as f64).ceil() as usize;
    epoch
        .data
        .iter()
        .enumerate()
        .filter(|(_, row)| {
            let stats: Vec<Moments> = row.chunks_exact(block).map(Moments::of).collect();
            stats.windows(blocks_per_window.max(1)).any(|w| {
                let merged = w.iter().fold(Moments::default(), |acc, m| acc.merge(m));
                merged.sample_sd() < epsilon
            })
        })
        .map(|(ch, _)| ch)
        .collect()
}

/// Standard deviation of each channel after zero-phase filtering to `hf_band`.
pub fn hf_residual_sds(epoch: &EegEpoch, config: &PipelineConfig) -> Result<Vec<f64>> {
    let band = config.hf_band;
    let filter = SosFilter::bandpass(band.low, band.high, epoch.sample_rate)?;
    let pad = default_padding(band.low, epoch.sample_rate);
    Ok(epoch
        .data
        .iter()
        .map(|row| Moments::of(&filter.filtfilt(row, pad)).sample_sd())
        .collect())
}

/// Robust z-scores `(x - median) / (1.4826 * MAD)`. When the MAD is zero,
/// values above the median score `+inf` and the rest score 0.
pub fn robust_z_scores(values: &[f64]) -> Vec<f64> {
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let sigma = MAD_SCALE * median(&deviations);
    values
        .iter()
        .map(|&v| {
            if sigma > f64::EPSILON * med.abs().max(f64::MIN_POSITIVE) {
                (v - med) / sigma
            } else if v - med > 1e-9 * med.abs().max(1e-12) {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

fn robust_outliers(values: &[f64], threshold: f64) -> impl Iterator<Item = usize> {
    robust_z_scores(values)
        .into_iter()
        .enumerate()
        .filter(move |(_, z)| *z > threshold)
        .map(|(i, _)| i)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

/// Count, mean and sum of squared deviations; merged with Chan's update.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        if x.is_empty() {
            return Self::default();
        }
        let mean = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        Self { n, mean, m2 }
    }

    fn merge(self, other: &Self) -> Self {
        if self.n == 0.0 {
            return *other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }

    fn sample_sd(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0)).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::N_CHANNELS;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise_epoch(seed: u64, seconds: f64) -> EegEpoch {
        let fs = 250.0;
        let n = (seconds * fs) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 10.0).unwrap();
        let data = (0..N_CHANNELS).map(|_| (0..n).map(|_| normal.sample(&mut rng)).collect()).collect();
        EegEpoch::new(0.0, fs, data).unwrap()
    }

    #[test]
    fn constant_channel_flagged() {
        let mut epoch = noise_epoch(1, 6.0);
        epoch.data[7].iter_mut().for_each(|v| *v = 12.5);
        let bad = detect_bad_channels(&epoch, &PipelineConfig::default()).unwrap();
        assert!(bad.contains(&7));
    }

    #[test]
    fn partial_flat_stretch_over_five_seconds_flagged() {
        let mut epoch = noise_epoch(2, 10.0);
        // 5.3 s flat stretch at an unaligned offset
        for v in &mut epoch.data[11][333..333 + 1325] {
            *v = -4.0;
        }
        assert!(flat_channels(&epoch, 5.0, 1e-6).contains(&11));
        // 4 s is not enough
        let mut short = noise_epoch(3, 10.0);
        for v in &mut short.data[11][333..333 + 1000] {
            *v = -4.0;
        }
        assert!(!flat_channels(&short, 5.0, 1e-6).contains(&11));
    }

    #[test]
    fn insufficient_history_rejected() {
        let epoch = noise_epoch(4, 4.9);
        assert!(matches!(
            detect_bad_channels(&epoch, &PipelineConfig::default()),
            Err(SignalError::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn hf_noisy_channel_flagged_by_brute_force_z() {
        let fs = 250.0;
        let mut epoch = noise_epoch(5, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let normal = Normal::new(0.0, 1.0).unwrap();
        // 30 Hz component at 10x the other channels' amplitude
        for (i, v) in epoch.data[3].iter_mut().enumerate() {
            let t = i as f64 / fs;
            *v += 100.0 * (2.0 * std::f64::consts::PI * 30.0 * t).sin() + 10.0 * normal.sample(&mut rng);
        }
        let config = PipelineConfig::default();
        let sds = hf_residual_sds(&epoch, &config).unwrap();
        // brute-force robust z for channel 3
        let mut sorted = sds.clone();
        sorted.sort_by(f64::total_cmp);
        let med = (sorted[15] + sorted[16]) / 2.0;
        let mut dev: Vec<f64> = sds.iter().map(|s| (s - med).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let mad = (dev[15] + dev[16]) / 2.0;
        let z3 = (sds[3] - med) / (1.4826 * mad);
        assert!(z3 > 4.0);
        assert!((robust_z_scores(&sds)[3] - z3).abs() < 1e-9 * z3);
        let bad = detect_bad_channels(&epoch, &config).unwrap();
        assert_eq!(bad.into_iter().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn iid_channels_rarely_flagged() {
        let config = PipelineConfig::default();
        let false_flags: usize = (0..20)
            .map(|seed| detect_bad_channels(&noise_epoch(100 + seed, 6.0), &config).unwrap().len())
            .sum();
        assert!(false_flags <= 1, "{false_flags} false flags");
    }

    #[test]
    fn zero_mad_flags_only_exceeding_channel() {
        let mut values = vec![2.0; 32];
        values[9] = 2.5;
        let z = robust_z_scores(&values);
        assert!(z[9].is_infinite());
        assert!(z.iter().enumerate().all(|(i, v)| i == 9 || *v == 0.0));
    }

    #[test]
    fn moments_merge_matches_direct() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).cos() * 3.0 + 1e3).collect();
        let merged = x.chunks(7).map(Moments::of).fold(Moments::default(), |a, m| a.merge(&m));
        let direct = Moments::of(&x);
        assert!((merged.sample_sd() - direct.sample_sd()).abs() < 1e-9);
    }
}
