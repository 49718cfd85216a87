//! Paced playback of recorded frames.

use crate::signal::EegFrame;
use std::time::Duration;
use tokio::time::Instant;

/// Playback speed relative to the recording's own timestamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayRate {
    /// Multiplier on real time; 1.0 is live rate.
    Scaled(f64),
    Unlimited,
}

impl ReplayRate {
    /// `inf` (or any non-finite or non-positive value) means unlimited.
    pub fn from_multiplier(rate: f64) -> Self {
        if rate.is_finite() && rate > 0.0 {
            Self::Scaled(rate)
        } else {
            Self::Unlimited
        }
    }
}

/// Hands frames to `sink` in order. Frame `i` is released at
/// `start + (t_i - t_0) / rate`. Stops early when `sink` returns false and
/// returns the number of frames delivered.
pub async fn replay_frames<F>(frames: &[EegFrame], rate: ReplayRate, mut sink: F) -> usize
where
    F: FnMut(&EegFrame) -> bool,
{
    let Some(first) = frames.first() else {
        return 0;
    };
    let start = Instant::now();
    for (i, frame) in frames.iter().enumerate() {
        match rate {
            ReplayRate::Scaled(r) => {
                let offset = ((frame.timestamp - first.timestamp) / r).max(0.0);
                let due = start + Duration::from_secs_f64(offset);
                if due > Instant::now() {
                    tokio::time::sleep_until(due).await;
                }
            }
            ReplayRate::Unlimited => {
                if i % 4096 == 4095 {
                    tokio::task::yield_now().await;
                }
            }
        }
        if !sink(frame) {
            return i;
        }
    }
    frames.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize, fs: f64) -> Vec<EegFrame> {
        (0..n).map(|i| EegFrame::new(i as f64 / fs, [i as f64; 32])).collect()
    }

    #[tokio::test]
    async fn unlimited_preserves_order() {
        let input = frames(250, 250.0);
        let mut out = Vec::new();
        let n = replay_frames(&input, ReplayRate::from_multiplier(f64::INFINITY), |f| {
            out.push(f.clone());
            true
        })
        .await;
        assert_eq!(n, 250);
        assert_eq!(out, input);
    }

    #[tokio::test]
    async fn live_rate_takes_one_second() {
        let input = frames(251, 250.0);
        let t = std::time::Instant::now();
        replay_frames(&input, ReplayRate::Scaled(1.0), |_| true).await;
        let elapsed = t.elapsed().as_secs_f64();
        assert!((0.9..=1.1).contains(&elapsed), "{elapsed}");
    }

    #[tokio::test]
    async fn empty_and_early_stop() {
        assert_eq!(replay_frames(&[], ReplayRate::Unlimited, |_| true).await, 0);
        let input = frames(10, 250.0);
        assert_eq!(replay_frames(&input, ReplayRate::Unlimited, |f| f.timestamp < 0.02).await, 5);
    }
}
