//! JSON schemas of sample and prediction messages.

use super::{GatewayError, Result};
use crate::features::{AffectClass, Prediction};
use crate::signal::{EegFrame, N_CHANNELS};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// One multichannel sample: `{"t": seconds, "ch": [32 µV values]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMessage {
    pub t: f64,
    pub ch: Vec<f64>,
}

impl SampleMessage {
    pub fn from_frame(frame: &EegFrame) -> Self {
        Self { t: frame.timestamp, ch: frame.samples.to_vec() }
    }

    pub fn into_frame(self) -> Result<EegFrame> {
        if !self.t.is_finite() {
            return Err(GatewayError::Malformed("non-finite timestamp".into()));
        }
        let samples: [f64; N_CHANNELS] = self
            .ch
            .try_into()
            .map_err(|ch: Vec<f64>| GatewayError::Malformed(format!("{} channels, expected {N_CHANNELS}", ch.len())))?;
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(GatewayError::Malformed(format!("non-finite value on channel {i}")));
        }
        Ok(EegFrame::new(self.t, samples))
    }

    pub fn decode(line: &str) -> Result<EegFrame> {
        serde_json::from_str::<Self>(line)
            .map_err(|e| GatewayError::Malformed(e.to_string()))?
            .into_frame()
    }

    pub fn encode(frame: &EegFrame) -> String {
        serde_json::to_string(&Self::from_frame(frame)).expect("sample serialization cannot fail")
    }
}

/// Coarse session phase carried on the feedback channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseTag {
    Idle,
    Training,
    Fitting,
    Validation,
    FreeDesign,
    Done,
}

/// Live emotion estimate. Class codes: Low = -1, Neutral = 0, High = +1;
/// scores are indexed Low, Neutral, High.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMessage {
    pub v: u32,
    pub t: f64,
    #[serde(with = "class_code")]
    pub arousal: AffectClass,
    #[serde(with = "class_code")]
    pub valence: AffectClass,
    pub arousal_scores: [f64; 3],
    pub valence_scores: [f64; 3],
    pub session_phase: PhaseTag,
}

impl PredictionMessage {
    pub fn new(t: f64, arousal: &Prediction, valence: &Prediction, phase: PhaseTag) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            t,
            arousal: arousal.class,
            valence: valence.class,
            arousal_scores: arousal.scores,
            valence_scores: valence.scores,
            session_phase: phase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.v != PROTOCOL_VERSION {
            return Err(GatewayError::Malformed(format!("unsupported version {}", self.v)));
        }
        let finite = self.t.is_finite() && self.arousal_scores.iter().chain(&self.valence_scores).all(|s| s.is_finite());
        if !finite {
            return Err(GatewayError::Malformed("non-finite time or score".into()));
        }
        Ok(())
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("prediction serialization cannot fail")
    }

    /// Parses and validates; unknown fields are ignored.
    pub fn decode(text: &str) -> Result<Self> {
        let msg: Self = serde_json::from_str(text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
        msg.validate()?;
        Ok(msg)
    }
}

mod class_code {
    use crate::features::AffectClass;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &AffectClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(c.code())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<AffectClass, D::Error> {
        let code = i64::deserialize(d)?;
        AffectClass::from_code(code).ok_or_else(|| de::Error::custom(format!("class code {code} not in -1..=1")))
    }
}
