//! Fixed-length analysis windows over frame streams and epochs.

use super::{EegEpoch, EegFrame};

/// Cuts time-ordered frames into complete windows of `window` seconds starting
/// at `t0 + k * (window - overlap)`. Windows with missing samples are skipped;
/// a stream shorter than one window yields nothing.
pub fn window_stream(frames: &[EegFrame], sample_rate: f64, window: f64, overlap: f64) -> Vec<EegEpoch> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let hop = window - overlap;
    if !(hop > 0.0 && overlap >= 0.0) {
        return Vec::new();
    }
    let n_window = (window * sample_rate).round() as usize;
    let half = 0.5 / sample_rate;
    let t0 = first.timestamp;
    let end = frames[frames.len() - 1].timestamp + 1.0 / sample_rate;
    let mut out = Vec::new();
    for k in 0.. {
        let start = t0 + k as f64 * hop;
        if start + window > end + half {
            break;
        }
        let lo = frames.partition_point(|f| f.timestamp < start - half);
        let hi = frames.partition_point(|f| f.timestamp < start + window - half);
        if hi - lo != n_window {
            tracing::debug!(start, got = hi - lo, expected = n_window, "skipping incomplete window");
            continue;
        }
        if let Ok(mut epoch) = EegEpoch::from_frames(&frames[lo..hi], sample_rate) {
            epoch.start_time = start;
            out.push(epoch);
        }
    }
    out
}

/// Same windowing over an already contiguous epoch, by sample index.
pub fn window_epoch(epoch: &EegEpoch, window: f64, overlap: f64) -> Vec<EegEpoch> {
    let n_window = (window * epoch.sample_rate).round() as usize;
    let hop = ((window - overlap) * epoch.sample_rate).round() as usize;
    if n_window == 0 || hop == 0 {
        return Vec::new();
    }
    let n = epoch.n_samples();
    (0..)
        .map(|k| k * hop)
        .take_while(|&from| from + n_window <= n)
        .map(|from| epoch.slice(from, from + n_window))
        .collect()
}
