//! 32-channel 10–20 montage with idealized unit-sphere positions.

use super::{Result, SignalError, N_CHANNELS};
use std::collections::HashSet;
use std::path::Path;

/// Channel labels in stream order.
pub const LABELS: [&str; N_CHANNELS] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FT9", "FC5", "FC1", "FC2", "FC6", "FT10", "T7", "C3", "Cz",
    "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3", "Pz", "P4", "P8", "POz", "O1", "O2",
];

// (polar angle from Cz, azimuth from nasion toward the left ear), degrees.
const SPHERICAL_DEG: [(f64, f64); N_CHANNELS] = [
    (90.0, 18.0),
    (90.0, -18.0),
    (90.0, 54.0),
    (60.0, 40.0),
    (45.0, 0.0),
    (60.0, -40.0),
    (90.0, -54.0),
    (112.0, 72.0),
    (72.0, 69.0),
    (34.0, 45.0),
    (34.0, -45.0),
    (72.0, -69.0),
    (112.0, -72.0),
    (90.0, 90.0),
    (45.0, 90.0),
    (0.0, 0.0),
    (45.0, -90.0),
    (90.0, -90.0),
    (112.0, 108.0),
    (72.0, 111.0),
    (34.0, 135.0),
    (34.0, -135.0),
    (72.0, -111.0),
    (112.0, -108.0),
    (90.0, 126.0),
    (60.0, 140.0),
    (45.0, 180.0),
    (60.0, -140.0),
    (90.0, -126.0),
    (67.5, 180.0),
    (90.0, 162.0),
    (90.0, -162.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMontage {
    labels: Vec<String>,
    positions: Vec<[f64; 3]>,
}

impl Default for ChannelMontage {
    fn default() -> Self {
        Self::standard()
    }
}

impl ChannelMontage {
    /// The headset's 32 channels on an idealized unit sphere
    /// (x toward the nasion, y toward the left ear, z toward the vertex).
    pub fn standard() -> Self {
        let positions = SPHERICAL_DEG
            .iter()
            .map(|&(polar, azimuth)| {
                let (p, a) = (polar.to_radians(), azimuth.to_radians());
                [p.sin() * a.cos(), p.sin() * a.sin(), p.cos()]
            })
            .collect();
        Self { labels: LABELS.iter().map(|s| s.to_string()).collect(), positions }
    }

    pub fn new(labels: Vec<String>, positions: Vec<[f64; 3]>) -> Result<Self> {
        let montage = Self { labels, positions };
        montage.validate()?;
        Ok(montage)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != N_CHANNELS || self.positions.len() != N_CHANNELS {
            return Err(SignalError::Montage(format!(
                "expected {N_CHANNELS} channels, got {} labels and {} positions",
                self.labels.len(),
                self.positions.len()
            )));
        }
        let unique: HashSet<&str> = self.labels.iter().map(String::as_str).collect();
        if unique.len() != N_CHANNELS {
            return Err(SignalError::Montage("duplicate channel labels".into()));
        }
        let expected: HashSet<&str> = LABELS.iter().copied().collect();
        if unique != expected {
            return Err(SignalError::Montage("label set differs from the 32-channel 10-20 list".into()));
        }
        for (label, p) in self.labels.iter().zip(&self.positions) {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
                return Err(SignalError::Montage(format!("{label} position has norm {norm}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }

    /// Great-circle distance (radians) between two channels.
    pub fn angular_distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.positions[a], self.positions[b]);
        let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        dot.clamp(-1.0, 1.0).acos()
    }

    /// Reads a `label,x,y,z` CSV.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut labels = Vec::new();
        let mut positions = Vec::new();
        for record in reader.deserialize() {
            let (label, x, y, z): (String, f64, f64, f64) = record?;
            labels.push(label);
            positions.push([x, y, z]);
        }
        Self::new(labels, positions)
    }

    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["label", "x", "y", "z"])?;
        for (label, p) in self.labels.iter().zip(&self.positions) {
            writer.serialize((label, p[0], p[1], p[2]))?;
        }
        writer.flush()?;
        Ok(())
    }
}
