//! Protocol state machine.
//!
//! `Idle → Training{1..=49} → Fitting → Validation → FreeDesign{1..=3} → Done`.
//! Each training stimulus goes shown → EEG captured → rated. Validation
//! alternates Agree and SAM probes, starting with Agree, until each has run
//! six times. Each probe is design change → prediction shown → response.

use crate::design::DesignConfig;
use crate::features::{AffectClass, SamRating};
use crate::gateway::PhaseTag;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const N_STIMULI: usize = 49;
pub const PROBES_PER_KIND: u8 = 6;
pub const N_FREE_DESIGNS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    Agree,
    SamProbe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step")]
pub enum CaptureStep {
    AwaitingStimulus,
    Capturing { shown_at: f64 },
    AwaitingSam { shown_at: f64, capture: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step")]
pub enum ProbeStep {
    AwaitingChange,
    AwaitingPrediction { changed_at: f64 },
    AwaitingResponse { changed_at: f64, shown_at: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase")]
pub enum Phase {
    Idle,
    Training { stimulus_index: usize, capture: CaptureStep },
    Fitting,
    Validation { next_probe: ProbeKind, agree_done: u8, sam_done: u8, probe: ProbeStep },
    FreeDesign { design_index: u8 },
    Done,
}

impl Phase {
    pub fn tag(&self) -> PhaseTag {
        match self {
            Self::Idle => PhaseTag::Idle,
            Self::Training { .. } => PhaseTag::Training,
            Self::Fitting => PhaseTag::Fitting,
            Self::Validation { .. } => PhaseTag::Validation,
            Self::FreeDesign { .. } => PhaseTag::FreeDesign,
            Self::Done => PhaseTag::Done,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Idle => write!(f, "Idle"),
            Self::Training { stimulus_index, capture } => write!(f, "Training{{{stimulus_index}, {capture:?}}}"),
            Self::Fitting => write!(f, "Fitting"),
            Self::Validation { next_probe, agree_done, sam_done, probe } => {
                write!(f, "Validation{{next {next_probe:?}, agree {agree_done}, sam {sam_done}, {probe:?}}}")
            }
            Self::FreeDesign { design_index } => write!(f, "FreeDesign{{{design_index}}}"),
            Self::Done => write!(f, "Done"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedPair {
    pub arousal: AffectClass,
    pub valence: AffectClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SessionEvent {
    StartSession,
    StimulusShown,
    /// Issued by the runtime once the capture interval is complete.
    EegCaptured { start: f64, end: f64 },
    SamSubmitted { rating: SamRating },
    /// Issued by the runtime when both models are trained.
    FitCompleted { arousal_accuracy: f64, valence_accuracy: f64 },
    DesignChanged { design: DesignConfig },
    /// Issued by the runtime when a prediction for the latest change is emitted.
    PredictionShown { arousal: AffectClass, valence: AffectClass, window_start: f64 },
    AgreeResponse { agree: bool },
    SamProbeResponse { rating: SamRating },
    DesignFinalized,
}

impl SessionEvent {
    pub fn name(&self) -> &'static str {
        match self {
            Self::StartSession => "StartSession",
            Self::StimulusShown => "StimulusShown",
            Self::EegCaptured { .. } => "EegCaptured",
            Self::SamSubmitted { .. } => "SamSubmitted",
            Self::FitCompleted { .. } => "FitCompleted",
            Self::DesignChanged { .. } => "DesignChanged",
            Self::PredictionShown { .. } => "PredictionShown",
            Self::AgreeResponse { .. } => "AgreeResponse",
            Self::SamProbeResponse { .. } => "SamProbeResponse",
            Self::DesignFinalized => "DesignFinalized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialKind {
    TrainingStimulus,
    AgreeProbe,
    SamProbe,
    FreeChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialResponse {
    Agree(bool),
    Sam(SamRating),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub kind: TrialKind,
    /// Stimulus id, probe number or free-design index (1-based).
    pub index: usize,
    /// Stimulus onset or design change, stream seconds.
    pub event_time: f64,
    /// EEG interval the trial's label or prediction came from.
    pub capture: Option<(f64, f64)>,
    pub predicted: Option<PredictedPair>,
    pub response: Option<TrialResponse>,
    pub response_time: Option<f64>,
    pub design_before: Option<DesignConfig>,
    pub design_after: Option<DesignConfig>,
}

impl TrialRecord {
    fn new(kind: TrialKind, index: usize, event_time: f64) -> Self {
        Self {
            kind,
            index,
            event_time,
            capture: None,
            predicted: None,
            response: None,
            response_time: None,
            design_before: None,
            design_after: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub arousal_accuracy: f64,
    pub valence_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    pub records: Vec<TrialRecord>,
    pub design: DesignConfig,
    pub finalized_designs: Vec<DesignConfig>,
    pub fit: Option<FitSummary>,
    pub last_event_time: Option<f64>,
}

impl Default for SessionState {
    fn default() -> Self {
        Self {
            phase: Phase::Idle,
            records: Vec::new(),
            design: DesignConfig::default(),
            finalized_designs: Vec::new(),
            fit: None,
            last_event_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransitionError {
    #[error("event {event} is not legal in phase {phase}")]
    Illegal { phase: String, event: &'static str },
    #[error("event time {t} precedes the previous event at {last}")]
    NonMonotonic { t: f64, last: f64 },
    #[error("invalid event {event}: {reason}")]
    Invalid { event: &'static str, reason: String },
}

impl SessionState {
    /// The training or probe record currently being filled in, if any.
    pub fn open_record(&self) -> Option<&TrialRecord> {
        match self.phase {
            Phase::Training { capture: CaptureStep::AwaitingStimulus, .. }
            | Phase::Validation { probe: ProbeStep::AwaitingChange, .. }
            | Phase::Idle
            | Phase::Fitting
            | Phase::Done => None,
            _ => self.records.last(),
        }
    }

    /// Change time of the probe waiting for a prediction, in Validation.
    pub fn pending_probe_change(&self) -> Option<f64> {
        match self.phase {
            Phase::Validation { probe: ProbeStep::AwaitingPrediction { changed_at }, .. } => Some(changed_at),
            _ => None,
        }
    }

    fn record_mut(&mut self) -> &mut TrialRecord {
        self.records.last_mut().expect("open phase without a record")
    }
}

/// Applies `event` at stream time `t`. Illegal events leave `state` untouched.
pub fn advance(state: &SessionState, event: &SessionEvent, t: f64) -> Result<SessionState, TransitionError> {
    use SessionEvent as E;
    let illegal = || TransitionError::Illegal { phase: state.phase.to_string(), event: event.name() };
    let invalid = |reason: String| TransitionError::Invalid { event: event.name(), reason };
    if !t.is_finite() {
        return Err(invalid(format!("time {t} is not finite")));
    }
    if let Some(last) = state.last_event_time {
        if t < last {
            return Err(TransitionError::NonMonotonic { t, last });
        }
    }
    let mut next = state.clone();
    next.last_event_time = Some(t);

    match (&state.phase, event) {
        (Phase::Idle, E::StartSession) => {
            next.phase = Phase::Training { stimulus_index: 1, capture: CaptureStep::AwaitingStimulus };
        }

        (Phase::Training { stimulus_index, capture: CaptureStep::AwaitingStimulus }, E::StimulusShown) => {
            next.records.push(TrialRecord::new(TrialKind::TrainingStimulus, *stimulus_index, t));
            next.phase = Phase::Training { stimulus_index: *stimulus_index, capture: CaptureStep::Capturing { shown_at: t } };
        }
        (Phase::Training { stimulus_index, capture: CaptureStep::Capturing { shown_at } }, E::EegCaptured { start, end }) => {
            if !(start >= shown_at && end > start && *end <= t) {
                return Err(invalid(format!("capture [{start}, {end}) must follow onset {shown_at} and precede {t}")));
            }
            next.record_mut().capture = Some((*start, *end));
            next.phase = Phase::Training {
                stimulus_index: *stimulus_index,
                capture: CaptureStep::AwaitingSam { shown_at: *shown_at, capture: (*start, *end) },
            };
        }
        (Phase::Training { stimulus_index, capture: CaptureStep::AwaitingSam { .. } }, E::SamSubmitted { rating }) => {
            rating.validate().map_err(|e| invalid(e.to_string()))?;
            let record = next.record_mut();
            record.response = Some(TrialResponse::Sam(*rating));
            record.response_time = Some(t);
            next.phase = if *stimulus_index >= N_STIMULI {
                Phase::Fitting
            } else {
                Phase::Training { stimulus_index: stimulus_index + 1, capture: CaptureStep::AwaitingStimulus }
            };
        }

        (Phase::Fitting, E::FitCompleted { arousal_accuracy, valence_accuracy }) => {
            next.fit = Some(FitSummary { arousal_accuracy: *arousal_accuracy, valence_accuracy: *valence_accuracy });
            next.phase = Phase::Validation {
                next_probe: ProbeKind::Agree,
                agree_done: 0,
                sam_done: 0,
                probe: ProbeStep::AwaitingChange,
            };
        }

        (
            Phase::Validation { next_probe, agree_done, sam_done, probe: ProbeStep::AwaitingChange | ProbeStep::AwaitingPrediction { .. } },
            E::DesignChanged { design },
        ) => {
            let (kind, n) = match next_probe {
                ProbeKind::Agree => (TrialKind::AgreeProbe, *agree_done as usize + 1),
                ProbeKind::SamProbe => (TrialKind::SamProbe, *sam_done as usize + 1),
            };
            let mut record = TrialRecord::new(kind, n, t);
            record.design_before = Some(state.design.clone());
            record.design_after = Some(design.clone());
            if matches!(state.phase, Phase::Validation { probe: ProbeStep::AwaitingPrediction { .. }, .. }) {
                // a newer change replaces the one still waiting for its prediction
                let superseded = next.records.pop().expect("pending probe without a record");
                record.design_before = superseded.design_before;
            }
            next.records.push(record);
            next.design = design.clone();
            next.phase = Phase::Validation {
                next_probe: *next_probe,
                agree_done: *agree_done,
                sam_done: *sam_done,
                probe: ProbeStep::AwaitingPrediction { changed_at: t },
            };
        }
        (
            Phase::Validation { next_probe, agree_done, sam_done, probe: ProbeStep::AwaitingPrediction { changed_at } },
            E::PredictionShown { arousal, valence, window_start },
        ) => {
            if *window_start < *changed_at {
                return Err(invalid(format!("window at {window_start} precedes the change at {changed_at}")));
            }
            let record = next.record_mut();
            record.predicted = Some(PredictedPair { arousal: *arousal, valence: *valence });
            record.capture = Some((*window_start, t));
            next.phase = Phase::Validation {
                next_probe: *next_probe,
                agree_done: *agree_done,
                sam_done: *sam_done,
                probe: ProbeStep::AwaitingResponse { changed_at: *changed_at, shown_at: t },
            };
        }
        (
            Phase::Validation { next_probe: ProbeKind::Agree, agree_done, sam_done, probe: ProbeStep::AwaitingResponse { .. } },
            E::AgreeResponse { agree },
        ) => {
            let record = next.record_mut();
            record.response = Some(TrialResponse::Agree(*agree));
            record.response_time = Some(t);
            next.phase = after_probe(ProbeKind::SamProbe, agree_done + 1, *sam_done);
        }
        (
            Phase::Validation { next_probe: ProbeKind::SamProbe, agree_done, sam_done, probe: ProbeStep::AwaitingResponse { .. } },
            E::SamProbeResponse { rating },
        ) => {
            rating.validate().map_err(|e| invalid(e.to_string()))?;
            let record = next.record_mut();
            record.response = Some(TrialResponse::Sam(*rating));
            record.response_time = Some(t);
            next.phase = after_probe(ProbeKind::Agree, *agree_done, sam_done + 1);
        }

        (Phase::FreeDesign { design_index }, E::DesignChanged { design }) => {
            let mut record = TrialRecord::new(TrialKind::FreeChange, *design_index as usize, t);
            record.design_before = Some(state.design.clone());
            record.design_after = Some(design.clone());
            next.records.push(record);
            next.design = design.clone();
        }
        (Phase::FreeDesign { .. }, E::PredictionShown { arousal, valence, window_start }) => {
            let Some(record) = next.records.last_mut().filter(|r| r.kind == TrialKind::FreeChange && r.predicted.is_none()) else {
                return Err(illegal());
            };
            if *window_start < record.event_time {
                return Err(invalid(format!("window at {window_start} precedes the change at {}", record.event_time)));
            }
            record.predicted = Some(PredictedPair { arousal: *arousal, valence: *valence });
            record.capture = Some((*window_start, t));
        }
        (Phase::FreeDesign { design_index }, E::DesignFinalized) => {
            next.finalized_designs.push(state.design.clone());
            next.phase = if *design_index >= N_FREE_DESIGNS {
                Phase::Done
            } else {
                Phase::FreeDesign { design_index: design_index + 1 }
            };
        }

        _ => return Err(illegal()),
    }
    Ok(next)
}

fn after_probe(next_probe: ProbeKind, agree_done: u8, sam_done: u8) -> Phase {
    if agree_done >= PROBES_PER_KIND && sam_done >= PROBES_PER_KIND {
        Phase::FreeDesign { design_index: 1 }
    } else {
        Phase::Validation { next_probe, agree_done, sam_done, probe: ProbeStep::AwaitingChange }
    }
}
