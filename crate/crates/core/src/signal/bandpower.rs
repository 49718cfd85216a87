//! Welch power spectral density and per-band power integration.

use super::{Band, EegEpoch, PipelineConfig, Result, SignalError, N_BANDS, N_CHANNELS};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

/// Theta/alpha/beta powers (µV²) of one analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPowerWindow {
    pub window_start: f64,
    /// `powers[channel][band]`, bands ordered theta, alpha, beta.
    pub powers: [[f64; N_BANDS]; N_CHANNELS],
    pub bad_channels: BTreeSet<usize>,
}

impl BandPowerWindow {
    /// Channel-major flattening: index `channel * 3 + band`.
    pub fn flatten(&self) -> Vec<f64> {
        self.powers.iter().flatten().copied().collect()
    }
}

/// One-sided Welch PSD estimator with a periodic Hann window, constant
/// detrending per segment and 50% segment overlap.
pub struct Welch {
    segment: usize,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
    sample_rate: f64,
}

impl Welch {
    pub fn new(segment: usize, sample_rate: f64) -> Self {
        let window: Vec<f64> = (0..segment)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment as f64).cos())
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(segment);
        Self { segment, window, window_power, fft, sample_rate }
    }

    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.segment as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..=self.segment / 2).map(|k| k as f64 * self.resolution()).collect()
    }

    /// Density in µV²/Hz at `frequencies()`.
    pub fn psd(&self, x: &[f64]) -> Vec<f64> {
        let l = self.segment;
        let step = (l / 2).max(1);
        let n_bins = l / 2 + 1;
        let mut acc = vec![0.0; n_bins];
        let mut count = 0usize;
        let mut buf = vec![Complex::new(0.0, 0.0); l];
        let mut start = 0;
        while start + l <= x.len() {
            let seg = &x[start..start + l];
            let mean = seg.iter().sum::<f64>() / l as f64;
            for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new((v - mean) * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += c.norm_sqr();
            }
            count += 1;
            start += step;
        }
        let scale = 1.0 / (self.sample_rate * self.window_power * count.max(1) as f64);
        acc.iter()
            .enumerate()
            .map(|(k, &p)| {
                let one_sided = if k == 0 || (l % 2 == 0 && k == l / 2) { 1.0 } else { 2.0 };
                p * scale * one_sided
            })
            .collect()
    }

    /// Rectangle-rule integral of the PSD over bins with frequency in `band`.
    pub fn band_power(&self, psd: &[f64], band: Band) -> f64 {
        let df = self.resolution();
        psd.iter()
            .enumerate()
            .filter(|(k, _)| band.contains(*k as f64 * df))
            .map(|(_, p)| p * df)
            .sum()
    }
}

/// Welch segment length: one second, or the whole window if shorter.
pub fn segment_len(config: &PipelineConfig) -> usize {
    (config.sample_rate.round() as usize).min(config.window_samples())
}

pub fn extract_band_powers(epoch: &EegEpoch, config: &PipelineConfig) -> Result<BandPowerWindow> {
    epoch.validate()?;
    let expected = config.window_samples();
    if epoch.n_samples() != expected {
        return Err(SignalError::DurationMismatch { expected, got: epoch.n_samples() });
    }
    let welch = Welch::new(segment_len(config), epoch.sample_rate);
    let mut powers = [[0.0; N_BANDS]; N_CHANNELS];
    for (row, out) in epoch.data.iter().zip(powers.iter_mut()) {
        let psd = welch.psd(row);
        for (p, band) in out.iter_mut().zip(&config.bands) {
            *p = welch.band_power(&psd, *band).max(0.0);
        }
    }
    Ok(BandPowerWindow { window_start: epoch.start_time, powers, bad_channels: BTreeSet::new() })
}
