//! Experiment session: protocol state machine, model fitting, online
//! classification, prompts, metrics and the HTTP control surface.

pub mod fit;
pub mod http;
pub mod log;
pub mod metrics;
pub mod online;
pub mod prompt;
pub mod runtime;
pub mod state;

use crate::design::DesignError;
use crate::features::FeatureError;
use crate::signal::SignalError;

pub use fit::{captures_from_labels, fit_dataset, fit_models, AffectModelPair, FitConfig, FitReport, TrainingCapture};
pub use http::router;
pub use log::{read_log, SessionLog};
pub use metrics::{compute_metrics, SessionMetrics};
pub use online::{ChangeDebouncer, OnlineClassifier, OnlineError};
pub use prompt::{agree_prompt_text, prompt_for};
pub use runtime::{spawn_engine, EngineConfig, EngineError, EngineHandle, PredictionLatency, StateView};
pub use state::{advance, Phase, SessionEvent, SessionState, TransitionError, TrialKind, TrialRecord, TrialResponse};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SessionError>;
