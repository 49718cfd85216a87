//! Session outcome measures from trial records.

use super::state::{TrialKind, TrialRecord, TrialResponse};
use crate::features::AffectClass;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    /// Agreed probes over answered Agree probes; absent with no Agree probes.
    pub agreement_rate: Option<f64>,
    pub n_agree_trials: usize,
    /// SAM-probe reports whose class equals the prediction, per axis.
    pub arousal_consistency: Option<f64>,
    pub valence_consistency: Option<f64>,
    pub n_sam_trials: usize,
    /// `confusion[reported][predicted]` over SAM probes.
    pub arousal_confusion: [[u32; 3]; 3],
    pub valence_confusion: [[u32; 3]; 3],
}

/// Only records with both a prediction and a response count as trials.
pub fn compute_metrics(records: &[TrialRecord]) -> SessionMetrics {
    let mut agrees = 0;
    let mut n_agree = 0;
    let mut n_sam = 0;
    let mut confusion = [[[0u32; 3]; 3]; 2];
    for r in records {
        match (r.kind, r.response, r.predicted) {
            (TrialKind::AgreeProbe, Some(TrialResponse::Agree(a)), Some(_)) => {
                n_agree += 1;
                agrees += usize::from(a);
            }
            (TrialKind::SamProbe, Some(TrialResponse::Sam(rating)), Some(p)) => {
                let Ok((ra, rv)) = rating.classes() else {
                    tracing::warn!(index = r.index, "skipping SAM probe with invalid rating");
                    continue;
                };
                n_sam += 1;
                confusion[0][ra.index()][p.arousal.index()] += 1;
                confusion[1][rv.index()][p.valence.index()] += 1;
            }
            _ => {}
        }
    }
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let diagonal = |m: &[[u32; 3]; 3]| (0..3).map(|i| m[i][i] as usize).sum::<usize>();
    SessionMetrics {
        agreement_rate: rate(agrees, n_agree),
        n_agree_trials: n_agree,
        arousal_consistency: rate(diagonal(&confusion[0]), n_sam),
        valence_consistency: rate(diagonal(&confusion[1]), n_sam),
        n_sam_trials: n_sam,
        arousal_confusion: confusion[0],
        valence_confusion: confusion[1],
    }
}

impl fmt::Display for SessionMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
        writeln!(f, "agreement rate:      {} of {} probes", pct(self.agreement_rate), self.n_agree_trials)?;
        writeln!(f, "arousal consistency: {} of {} probes", pct(self.arousal_consistency), self.n_sam_trials)?;
        writeln!(f, "valence consistency: {} of {} probes", pct(self.valence_consistency), self.n_sam_trials)?;
        for (name, m) in [("arousal", &self.arousal_confusion), ("valence", &self.valence_confusion)] {
            writeln!(f, "{name} (rows reported, cols predicted: Low Neutral High)")?;
            for (c, row) in AffectClass::ALL.iter().zip(m) {
                writeln!(f, "  {:<8}{:>4}{:>8}{:>6}", c.to_string(), row[0], row[1], row[2])?;
            }
        }
        Ok(())
    }
}
