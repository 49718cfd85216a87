//! Spatial operations: bad-channel interpolation and common average reference.

use super::{ChannelMontage, EegEpoch, Result, SignalError, N_CHANNELS};
use std::collections::BTreeSet;

/// Replaces each bad channel, sample by sample, with the average of all good
/// channels weighted by inverse squared great-circle distance.
pub fn interpolate(epoch: &EegEpoch, bad: &BTreeSet<usize>, montage: &ChannelMontage) -> Result<EegEpoch> {
    epoch.validate()?;
    if let Some(&ch) = bad.iter().find(|&&ch| ch >= N_CHANNELS) {
        return Err(SignalError::InvalidChannel(ch));
    }
    if bad.is_empty() {
        return Ok(epoch.clone());
    }
    if bad.len() == N_CHANNELS {
        return Err(SignalError::AllChannelsBad);
    }
    let good: Vec<usize> = (0..N_CHANNELS).filter(|ch| !bad.contains(ch)).collect();
    let mut out = epoch.clone();
    for &b in bad {
        let weights = interpolation_weights(b, &good, montage);
        let row = &mut out.data[b];
        for (s, v) in row.iter_mut().enumerate() {
            *v = good.iter().zip(&weights).map(|(&g, w)| w * epoch.data[g][s]).sum();
        }
    }
    Ok(out)
}

/// Normalised weights (summing to 1) of `good` channels for reconstructing `target`.
pub fn interpolation_weights(target: usize, good: &[usize], montage: &ChannelMontage) -> Vec<f64> {
    let distances: Vec<f64> = good.iter().map(|&g| montage.angular_distance(target, g)).collect();
    if let Some(i) = distances.iter().position(|&d| d < 1e-12) {
        let mut w = vec![0.0; good.len()];
        w[i] = 1.0;
        return w;
    }
    let raw: Vec<f64> = distances.iter().map(|d| 1.0 / (d * d)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Subtracts the per-sample mean across channels from every channel.
pub fn rereference_average(epoch: &EegEpoch) -> Result<EegEpoch> {
    epoch.validate()?;
    let mut out = epoch.clone();
    for s in 0..epoch.n_samples() {
        let mean = epoch.data.iter().map(|row| row[s]).sum::<f64>() / N_CHANNELS as f64;
        for row in &mut out.data {
            row[s] -= mean;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn epoch_from(f: impl Fn(usize, usize) -> f64, n: usize) -> EegEpoch {
        let data = (0..N_CHANNELS).map(|ch| (0..n).map(|s| f(ch, s)).collect()).collect();
        EegEpoch::new(0.0, 250.0, data).unwrap()
    }

    #[test]
    fn equal_good_values_interpolate_to_same_value() {
        let epoch = epoch_from(|ch, _| if ch == 5 { -99.0 } else { 3.25 }, 10);
        let bad = BTreeSet::from([5]);
        let out = interpolate(&epoch, &bad, &ChannelMontage::standard()).unwrap();
        assert!(out.data[5].iter().all(|v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn distance_d_and_2d_gives_point_eight() {
        // Hand-built montage: target at the pole, one good channel at angle d, one at 2d.
        let base = ChannelMontage::standard();
        let d: f64 = 0.3;
        let mut positions = base.positions().to_vec();
        positions[0] = [0.0, 0.0, 1.0];
        positions[1] = [d.sin(), 0.0, d.cos()];
        positions[2] = [(2.0 * d).sin(), 0.0, (2.0 * d).cos()];
        let montage = ChannelMontage::new(base.labels().to_vec(), positions).unwrap();
        let w = interpolation_weights(0, &[1, 2], &montage);
        let expected = (1.0 / (d * d)) / (1.0 / (d * d) + 1.0 / (4.0 * d * d));
        assert!((expected - 0.8).abs() < 1e-12);
        assert!((w[0] - 0.8).abs() < 1e-9, "{w:?}");
        let value = w[0] * 1.0 + w[1] * 0.0;
        assert!((value - 0.8).abs() < 1e-9);
    }

    #[test]
    fn empty_bad_set_is_identity() {
        let epoch = epoch_from(|ch, s| (ch * 31 + s) as f64 * 0.1, 20);
        let out = interpolate(&epoch, &BTreeSet::new(), &ChannelMontage::standard()).unwrap();
        assert_eq!(out, epoch);
    }

    #[test]
    fn all_bad_is_unrecoverable() {
        let epoch = epoch_from(|_, _| 1.0, 4);
        let bad: BTreeSet<usize> = (0..N_CHANNELS).collect();
        assert!(matches!(
            interpolate(&epoch, &bad, &ChannelMontage::standard()),
            Err(SignalError::AllChannelsBad)
        ));
        assert!(matches!(
            interpolate(&epoch, &BTreeSet::from([40]), &ChannelMontage::standard()),
            Err(SignalError::InvalidChannel(40))
        ));
    }

    #[test]
    fn identical_channels_rereference_to_zero() {
        let epoch = epoch_from(|_, s| s as f64 - 7.0, 50);
        let out = rereference_average(&epoch).unwrap();
        assert!(out.data.iter().flatten().all(|&v| v.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn car_zero_mean_idempotent_and_difference_preserving(
            seed in proptest::collection::vec(-100.0f64..100.0, N_CHANNELS * 8)
        ) {
            let epoch = epoch_from(|ch, s| seed[ch * 8 + s], 8);
            let once = rereference_average(&epoch).unwrap();
            let twice = rereference_average(&once).unwrap();
            for s in 0..8 {
                let mean: f64 = once.data.iter().map(|r| r[s]).sum::<f64>() / N_CHANNELS as f64;
                prop_assert!(mean.abs() < 1e-9);
                for ch in 0..N_CHANNELS {
                    prop_assert!((twice.data[ch][s] - once.data[ch][s]).abs() < 1e-9);
                    let before = epoch.data[ch][s] - epoch.data[0][s];
                    let after = once.data[ch][s] - once.data[0][s];
                    prop_assert!((before - after).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn interpolation_bounded_and_good_channels_untouched(
            values in proptest::collection::vec(-50.0f64..50.0, N_CHANNELS * 4),
            bad in proptest::collection::btree_set(0usize..N_CHANNELS, 1..10),
        ) {
            let epoch = epoch_from(|ch, s| values[ch * 4 + s], 4);
            let out = interpolate(&epoch, &bad, &ChannelMontage::standard()).unwrap();
            for s in 0..4 {
                let good: Vec<f64> = (0..N_CHANNELS).filter(|c| !bad.contains(c)).map(|c| epoch.data[c][s]).collect();
                let lo = good.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = good.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for ch in 0..N_CHANNELS {
                    if bad.contains(&ch) {
                        prop_assert!(out.data[ch][s] >= lo - 1e-9 && out.data[ch][s] <= hi + 1e-9);
                    } else {
                        prop_assert_eq!(out.data[ch][s].to_bits(), epoch.data[ch][s].to_bits());
                    }
                }
            }
        }
    }
}
