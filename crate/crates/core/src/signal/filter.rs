//! Butterworth filtering as cascaded second-order sections.
//!
//! A bandpass is a 4th-order highpass at the low edge cascaded with a
//! 4th-order lowpass at the high edge, each designed by the bilinear
//! transform with prewarping, so its magnitude response is
//! `|H_hp(f)| * |H_lp(f)|` with the closed-form digital Butterworth shape.

use super::{EegEpoch, Result, SignalError, N_CHANNELS};
use std::f64::consts::PI;

pub const BUTTERWORTH_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Forward-backward filtering; magnitude response squared, no phase shift.
    ZeroPhase,
    /// Single causal pass starting from the steady state of the first sample.
    Causal,
}

/// Second-order section normalised so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn from_raw(b: [f64; 3], a: [f64; 3]) -> Self {
        Self { b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]], a: [a[1] / a[0], a[2] / a[0]] }
    }

    pub fn lowpass(f0: f64, fs: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        Self::from_raw(
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0],
            [1.0 + alpha, -2.0 * cos, 1.0 - alpha],
        )
    }

    pub fn highpass(f0: f64, fs: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        Self::from_raw(
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
            [1.0 + alpha, -2.0 * cos, 1.0 - alpha],
        )
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// `|H(e^{jω})|` evaluated from the coefficients.
    pub fn magnitude(&self, omega: f64) -> f64 {
        let eval = |c0: f64, c1: f64, c2: f64| {
            let re = c0 + c1 * omega.cos() + c2 * (2.0 * omega).cos();
            let im = -(c1 * omega.sin() + c2 * (2.0 * omega).sin());
            (re * re + im * im).sqrt()
        };
        eval(self.b[0], self.b[1], self.b[2]) / eval(1.0, self.a[0], self.a[1])
    }

    #[inline]
    fn step(&self, x: f64, s: &mut [f64; 2]) -> f64 {
        let y = self.b[0] * x + s[0];
        s[0] = self.b[1] * x - self.a[0] * y + s[1];
        s[1] = self.b[2] * x - self.a[1] * y;
        y
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

pub type SosState = Vec<[f64; 2]>;

fn butterworth_qs(order: usize) -> impl Iterator<Item = f64> {
    (1..=order / 2).map(move |k| {
        let theta = (2 * k - 1) as f64 * PI / (2 * order) as f64;
        1.0 / (2.0 * theta.cos())
    })
}

impl SosFilter {
    pub fn butterworth_lowpass(order: usize, cutoff: f64, fs: f64) -> Self {
        debug_assert!(order % 2 == 0);
        Self { sections: butterworth_qs(order).map(|q| Biquad::lowpass(cutoff, fs, q)).collect() }
    }

    pub fn butterworth_highpass(order: usize, cutoff: f64, fs: f64) -> Self {
        debug_assert!(order % 2 == 0);
        Self { sections: butterworth_qs(order).map(|q| Biquad::highpass(cutoff, fs, q)).collect() }
    }

    /// 4th-order Butterworth highpass at `low` followed by a 4th-order
    /// Butterworth lowpass at `high`.
    pub fn bandpass(low: f64, high: f64, fs: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && fs.is_finite()) || !(0.0 < low && low < high && high < fs / 2.0) {
            return Err(SignalError::InvalidBand { low, high, sample_rate: fs });
        }
        let mut sections = Self::butterworth_highpass(BUTTERWORTH_ORDER, low, fs).sections;
        sections.extend(Self::butterworth_lowpass(BUTTERWORTH_ORDER, high, fs).sections);
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Single-pass magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        let omega = 2.0 * PI * freq / fs;
        self.sections.iter().map(|s| s.magnitude(omega)).product()
    }

    pub fn zero_state(&self) -> SosState {
        vec![[0.0; 2]; self.sections.len()]
    }

    /// State the cascade would hold after an infinitely long constant input `x0`.
    pub fn steady_state(&self, x0: f64) -> SosState {
        let mut u = x0;
        self.sections
            .iter()
            .map(|s| {
                let y = s.dc_gain() * u;
                let state = [y - s.b[0] * u, s.b[2] * u - s.a[1] * y];
                u = y;
                state
            })
            .collect()
    }

    #[inline]
    pub fn step(&self, x: f64, state: &mut SosState) -> f64 {
        self.sections.iter().zip(state.iter_mut()).fold(x, |acc, (s, st)| s.step(acc, st))
    }

    pub fn filter_in_place(&self, x: &mut [f64], state: &mut SosState) {
        for v in x.iter_mut() {
            *v = self.step(*v, state);
        }
    }

    pub fn filter_causal(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        if let Some(&first) = x.first() {
            let mut state = self.steady_state(first);
            self.filter_in_place(&mut out, &mut state);
        }
        out
    }

    /// Forward-backward filtering with odd-reflection padding of
    /// `min(n - 1, pad)` samples at each end.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = pad.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut state = self.steady_state(ext[0]);
        self.filter_in_place(&mut ext, &mut state);
        ext.reverse();
        let mut state = self.steady_state(ext[0]);
        self.filter_in_place(&mut ext, &mut state);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Padding used by zero-phase filtering: three periods of the low edge.
pub fn default_padding(low: f64, fs: f64) -> usize {
    (3.0 * fs / low).ceil() as usize
}

/// Applies the bandpass to every channel of `epoch`.
pub fn bandpass(epoch: &EegEpoch, low: f64, high: f64, mode: FilterMode) -> Result<EegEpoch> {
    epoch.validate()?;
    let filter = SosFilter::bandpass(low, high, epoch.sample_rate)?;
    let pad = default_padding(low, epoch.sample_rate);
    let data = epoch
        .data
        .iter()
        .map(|row| match mode {
            FilterMode::ZeroPhase => filter.filtfilt(row, pad),
            FilterMode::Causal => filter.filter_causal(row),
        })
        .collect();
    Ok(EegEpoch { start_time: epoch.start_time, sample_rate: epoch.sample_rate, data })
}

/// Causal bandpass carrying per-channel state across frames of one stream.
#[derive(Debug, Clone)]
pub struct OnlineBandpass {
    filter: SosFilter,
    states: Option<Vec<SosState>>,
}

impl OnlineBandpass {
    pub fn new(low: f64, high: f64, fs: f64) -> Result<Self> {
        Ok(Self { filter: SosFilter::bandpass(low, high, fs)?, states: None })
    }

    /// Filters one frame. The first frame primes each channel at its steady state.
    pub fn process(&mut self, samples: &[f64; N_CHANNELS]) -> [f64; N_CHANNELS] {
        let filter = &self.filter;
        let states = self
            .states
            .get_or_insert_with(|| samples.iter().map(|&x| filter.steady_state(x)).collect());
        let mut out = [0.0; N_CHANNELS];
        for ((o, &x), st) in out.iter_mut().zip(samples).zip(states.iter_mut()) {
            *o = filter.step(x, st);
        }
        out
    }

    pub fn reset(&mut self) {
        self.states = None;
    }
}
