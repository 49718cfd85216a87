//! Single-writer session engine.
//!
//! One task owns the [`SessionState`]. Frames from the [`Ingestor`], user
//! events, fit results and a housekeeping tick are serialized through it.
//! The engine itself issues `EegCaptured` (after a full capture interval),
//! `FitCompleted` (when background fitting finishes) and `PredictionShown`
//! (when a change's analysis window has been classified and emitted).

use super::fit::{fit_models, AffectModelPair, FitConfig, FitReport, TrainingCapture};
use super::log::SessionLog;
use super::metrics::{compute_metrics, SessionMetrics};
use super::online::{ChangeDebouncer, OnlineClassifier, OnlineError, DEFAULT_DEBOUNCE_S, DEFAULT_WINDOW_DELAY_S};
use super::prompt::prompt_for;
use super::state::{
    advance, CaptureStep, Phase, ProbeKind, ProbeStep, SessionEvent, SessionState, TransitionError, TrialKind,
};
use crate::design::{Catalog, DesignError};
use crate::gateway::{EmitStats, IngestStats, Ingestor, PhaseTag, PredictionEmitter, PredictionMessage};
use crate::signal::{ChannelMontage, EegEpoch, EegFrame};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::Instant;

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub fit: FitConfig,
    pub montage: ChannelMontage,
    pub catalog: Catalog,
    pub capture_s: f64,
    pub debounce_s: f64,
    pub window_delay_s: f64,
    /// Wall-clock limit for a prediction; later windows are suppressed.
    pub prediction_deadline_s: f64,
    pub history_s: f64,
    pub log_path: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            montage: ChannelMontage::standard(),
            catalog: Catalog::default(),
            capture_s: 10.0,
            debounce_s: DEFAULT_DEBOUNCE_S,
            window_delay_s: DEFAULT_WINDOW_DELAY_S,
            prediction_deadline_s: 3.0,
            history_s: 30.0,
            log_path: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("session engine has stopped")]
    Closed,
}

/// Published snapshot of everything the console needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub state: SessionState,
    pub phase: PhaseTag,
    /// Agree-probe question awaiting an answer.
    pub prompt: Option<String>,
    pub last_prediction: Option<PredictionMessage>,
    pub stream_time: Option<f64>,
    pub ingest: IngestStats,
    pub emit: EmitStats,
    pub fit_error: Option<String>,
}

/// Wall-clock delay from receiving a design change to emitting its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionLatency {
    pub event_time: f64,
    pub latency_s: f64,
}

enum Command {
    Event { event: SessionEvent, t: Option<f64>, reply: oneshot::Sender<Result<StateView, EngineError>> },
}

#[derive(Debug, Clone)]
pub struct EngineHandle {
    commands: mpsc::Sender<Command>,
    view: watch::Receiver<Arc<StateView>>,
    report: Arc<Mutex<Option<FitReport>>>,
    models: Arc<Mutex<Option<AffectModelPair>>>,
    latencies: Arc<Mutex<Vec<PredictionLatency>>>,
    emitter: PredictionEmitter,
}

impl EngineHandle {
    /// Applies a user event, stamped with `t` or else the latest stream time.
    pub async fn submit(&self, event: SessionEvent, t: Option<f64>) -> Result<StateView, EngineError> {
        let (reply, rx) = oneshot::channel();
        self.commands.send(Command::Event { event, t, reply }).await.map_err(|_| EngineError::Closed)?;
        rx.await.map_err(|_| EngineError::Closed)?
    }

    pub fn view(&self) -> Arc<StateView> {
        self.view.borrow().clone()
    }

    /// Waits until the published view satisfies `pred`.
    pub async fn wait_for(&self, pred: impl Fn(&StateView) -> bool) -> Result<Arc<StateView>, EngineError> {
        let mut rx = self.view.clone();
        let view = rx.wait_for(|v| pred(v)).await.map_err(|_| EngineError::Closed)?;
        Ok(view.clone())
    }

    pub fn metrics(&self) -> SessionMetrics {
        compute_metrics(&self.view().state.records)
    }

    pub fn report(&self) -> Option<FitReport> {
        self.report.lock().expect("report lock poisoned").clone()
    }

    pub fn models(&self) -> Option<AffectModelPair> {
        self.models.lock().expect("model lock poisoned").clone()
    }

    pub fn latencies(&self) -> Vec<PredictionLatency> {
        self.latencies.lock().expect("latency lock poisoned").clone()
    }

    pub fn emitter(&self) -> &PredictionEmitter {
        &self.emitter
    }
}

struct Engine {
    config: EngineConfig,
    state: SessionState,
    classifier: OnlineClassifier,
    debouncer: ChangeDebouncer<Instant>,
    capture: Vec<EegFrame>,
    pending_capture: Option<(usize, EegEpoch)>,
    captures: Vec<TrainingCapture>,
    models: Arc<Mutex<Option<AffectModelPair>>>,
    report: Arc<Mutex<Option<FitReport>>>,
    latencies: Arc<Mutex<Vec<PredictionLatency>>>,
    fit_error: Option<String>,
    fit_tx: mpsc::Sender<Result<(AffectModelPair, FitReport), String>>,
    fitting: bool,
    last_prediction: Option<PredictionMessage>,
    ingestor: Arc<Ingestor>,
    emitter: PredictionEmitter,
    view_tx: watch::Sender<Arc<StateView>>,
    log: Option<SessionLog>,
    logged: usize,
}

/// Starts the engine task.
pub fn spawn_engine(
    config: EngineConfig,
    ingestor: Arc<Ingestor>,
    emitter: PredictionEmitter,
) -> Result<(EngineHandle, JoinHandle<()>), super::SessionError> {
    config.fit.pipeline.validate()?;
    config.catalog.validate()?;
    let classifier = OnlineClassifier::new(config.fit.pipeline.clone(), config.montage.clone(), config.history_s)
        .map_err(|e| super::SessionError::Fit(e.to_string()))?;
    let log = config.log_path.as_ref().map(SessionLog::open).transpose()?;
    let (commands, command_rx) = mpsc::channel(64);
    let (fit_tx, fit_rx) = mpsc::channel(1);
    let initial = StateView {
        state: SessionState::default(),
        phase: PhaseTag::Idle,
        prompt: None,
        last_prediction: None,
        stream_time: None,
        ingest: ingestor.stats(),
        emit: emitter.stats(),
        fit_error: None,
    };
    let (view_tx, view) = watch::channel(Arc::new(initial));
    let handle = EngineHandle {
        commands,
        view,
        report: Arc::default(),
        models: Arc::default(),
        latencies: Arc::default(),
        emitter: emitter.clone(),
    };
    let engine = Engine {
        debouncer: ChangeDebouncer::new(config.debounce_s, config.window_delay_s),
        config,
        state: SessionState::default(),
        classifier,
        capture: Vec::new(),
        pending_capture: None,
        captures: Vec::new(),
        models: handle.models.clone(),
        report: handle.report.clone(),
        latencies: handle.latencies.clone(),
        fit_error: None,
        fit_tx,
        fitting: false,
        last_prediction: None,
        ingestor,
        emitter,
        view_tx,
        log,
        logged: 0,
    };
    let task = tokio::spawn(engine.run(command_rx, fit_rx));
    Ok((handle, task))
}

impl Engine {
    async fn run(
        mut self,
        mut commands: mpsc::Receiver<Command>,
        mut fits: mpsc::Receiver<Result<(AffectModelPair, FitReport), String>>,
    ) {
        let ingestor = self.ingestor.clone();
        let mut tick = tokio::time::interval(Duration::from_millis(100));
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
        loop {
            tokio::select! {
                frame = ingestor.recv() => match frame {
                    Some(frame) => self.on_frame(frame),
                    None => {
                        tracing::info!("sample stream closed");
                        // keep serving events without a stream
                        std::future::pending::<()>().await;
                    }
                },
                cmd = commands.recv() => match cmd {
                    Some(Command::Event { event, t, reply }) => {
                        let result = self.on_user_event(event, t);
                        let _ = reply.send(result);
                    }
                    None => break,
                },
                Some(result) = fits.recv() => self.on_fit(result),
                _ = tick.tick() => {
                    self.expire_pending();
                    self.publish(false);
                }
            }
        }
    }

    fn stream_time(&self) -> f64 {
        self.classifier.latest_time().or(self.state.last_event_time).unwrap_or(0.0)
    }

    fn apply(&mut self, event: &SessionEvent, t: f64) -> Result<(), TransitionError> {
        let next = advance(&self.state, event, t)?;
        let left_probe_phase = !matches!(next.phase, Phase::Validation { .. } | Phase::FreeDesign { .. });
        self.state = next;
        if left_probe_phase {
            self.debouncer.clear();
        }
        self.flush_log();
        self.publish(true);
        Ok(())
    }

    fn on_user_event(&mut self, event: SessionEvent, t: Option<f64>) -> Result<StateView, EngineError> {
        let t = t.unwrap_or_else(|| self.stream_time()).max(self.state.last_event_time.unwrap_or(f64::NEG_INFINITY));
        if let SessionEvent::DesignChanged { design } = &event {
            self.config.catalog.check(design)?;
        }
        let before = self.state.phase.clone();
        self.apply(&event, t)?;
        match (&before, &event) {
            (Phase::Training { .. }, SessionEvent::StimulusShown) => self.capture.clear(),
            (Phase::Training { .. }, SessionEvent::SamSubmitted { rating }) => {
                if let Some((stimulus_id, epoch)) = self.pending_capture.take() {
                    self.captures.push(TrainingCapture { stimulus_id, epoch, sam: *rating });
                }
            }
            (Phase::Validation { .. } | Phase::FreeDesign { .. }, SessionEvent::DesignChanged { .. }) => {
                if self.models.lock().expect("model lock poisoned").is_some() {
                    for p in self.debouncer.on_change(t, Instant::now()) {
                        tracing::info!(event_time = p.event_time, "design change superseded by a newer one");
                    }
                } else {
                    tracing::warn!("design changed before models are available; no prediction");
                }
            }
            _ => {}
        }
        if self.state.phase == Phase::Fitting && !self.fitting {
            self.start_fit();
        }
        Ok(self.view())
    }

    fn on_frame(&mut self, frame: EegFrame) {
        self.classifier.push(&frame);
        if let Phase::Training { stimulus_index, capture: CaptureStep::Capturing { shown_at } } = self.state.phase {
            self.collect_capture(stimulus_index, shown_at, frame);
        }
        self.serve_ready_predictions();
    }

    fn collect_capture(&mut self, stimulus_index: usize, shown_at: f64, frame: EegFrame) {
        if frame.timestamp < shown_at {
            return;
        }
        let fs = self.config.fit.pipeline.sample_rate;
        if let Some(last) = self.capture.last() {
            if frame.timestamp - last.timestamp > 1.5 / fs {
                tracing::warn!(stimulus_index, at = last.timestamp, "gap in capture; restarting capture");
                self.capture.clear();
            }
        }
        self.capture.push(frame);
        let needed = (self.config.capture_s * fs).round() as usize;
        if self.capture.len() < needed {
            return;
        }
        let frames = std::mem::take(&mut self.capture);
        let start = frames[0].timestamp;
        let last = frames[frames.len() - 1].timestamp;
        match EegEpoch::from_frames(&frames, fs) {
            Ok(epoch) => {
                self.pending_capture = Some((stimulus_index, epoch));
                let end = last + 1.0 / fs;
                if let Err(e) = self.apply(&SessionEvent::EegCaptured { start, end }, end) {
                    tracing::error!(error = %e, "capture completion rejected");
                }
            }
            Err(e) => tracing::error!(error = %e, "capture could not be assembled"),
        }
    }

    fn serve_ready_predictions(&mut self) {
        if self.debouncer.is_empty() {
            return;
        }
        let classifier = &self.classifier;
        let ready = self.debouncer.take_ready(|start| classifier.window_ready(start));
        for change in ready {
            let Some(models) = self.models.lock().expect("model lock poisoned").clone() else {
                continue;
            };
            match self.classifier.classify(&models, change.window_start) {
                Ok((arousal, valence)) => {
                    let msg = PredictionMessage::new(change.event_time, &arousal, &valence, self.state.phase.tag());
                    self.emitter.emit(&msg);
                    let latency_s = change.tag.elapsed().as_secs_f64();
                    tracing::info!(event_time = change.event_time, latency_s, arousal = %arousal.class, valence = %valence.class, "prediction emitted");
                    self.latencies
                        .lock()
                        .expect("latency lock poisoned")
                        .push(PredictionLatency { event_time: change.event_time, latency_s });
                    self.last_prediction = Some(msg);
                    if self.awaits_prediction_for(change.event_time) {
                        let event = SessionEvent::PredictionShown {
                            arousal: arousal.class,
                            valence: valence.class,
                            window_start: change.window_start,
                        };
                        let t = self.stream_time();
                        if let Err(e) = self.apply(&event, t) {
                            tracing::error!(error = %e, "prediction could not be recorded");
                        }
                    } else {
                        self.publish(true);
                    }
                }
                Err(OnlineError::InsufficientData { start, end, expected, found }) => {
                    tracing::warn!(start, end, expected, found, "stream gap; prediction suppressed");
                }
                Err(e) => tracing::error!(error = %e, "online classification failed"),
            }
        }
    }

    fn awaits_prediction_for(&self, event_time: f64) -> bool {
        match self.state.phase {
            Phase::Validation { .. } => self.state.pending_probe_change() == Some(event_time),
            Phase::FreeDesign { .. } => self
                .state
                .records
                .last()
                .is_some_and(|r| r.kind == TrialKind::FreeChange && r.predicted.is_none() && r.event_time == event_time),
            _ => false,
        }
    }

    fn expire_pending(&mut self) {
        let deadline = Duration::from_secs_f64(self.config.prediction_deadline_s);
        for p in self.debouncer.take_expired(|p| p.tag.elapsed() > deadline) {
            tracing::warn!(event_time = p.event_time, "no data for the analysis window in time; prediction suppressed");
        }
    }

    fn start_fit(&mut self) {
        self.fitting = true;
        let captures = self.captures.clone();
        let montage = self.config.montage.clone();
        let fit = self.config.fit.clone();
        let tx = self.fit_tx.clone();
        tracing::info!(captures = captures.len(), "fitting models");
        tokio::task::spawn_blocking(move || {
            let result = fit_models(&captures, &montage, &fit).map(|(m, r, _)| (m, r)).map_err(|e| e.to_string());
            let _ = tx.blocking_send(result);
        });
    }

    fn on_fit(&mut self, result: Result<(AffectModelPair, FitReport), String>) {
        self.fitting = false;
        match result {
            Ok((models, report)) => {
                let event = SessionEvent::FitCompleted {
                    arousal_accuracy: report.arousal.mean_accuracy,
                    valence_accuracy: report.valence.mean_accuracy,
                };
                tracing::info!(
                    arousal = report.arousal.mean_accuracy,
                    valence = report.valence.mean_accuracy,
                    "models fitted"
                );
                *self.models.lock().expect("model lock poisoned") = Some(models);
                *self.report.lock().expect("report lock poisoned") = Some(report);
                self.fit_error = None;
                let t = self.stream_time().max(self.state.last_event_time.unwrap_or(0.0));
                if let Err(e) = self.apply(&event, t) {
                    tracing::error!(error = %e, "fit completion rejected");
                }
            }
            Err(e) => {
                tracing::error!(error = %e, "model fitting failed");
                self.fit_error = Some(e);
                self.publish(true);
            }
        }
    }

    /// Appends records that can no longer change.
    fn flush_log(&mut self) {
        let n = self.state.records.len();
        let done = self.state.phase == Phase::Done;
        while self.logged < n {
            let r = &self.state.records[self.logged];
            let is_last = self.logged + 1 == n;
            let settled = done || !is_last || (r.response.is_some() && r.kind != TrialKind::FreeChange);
            if !settled {
                break;
            }
            if let Some(log) = &mut self.log {
                if let Err(e) = log.append(r) {
                    tracing::error!(error = %e, "session log write failed");
                }
            }
            self.logged += 1;
        }
    }

    fn view(&self) -> StateView {
        let prompt = match (&self.state.phase, self.state.records.last()) {
            (
                Phase::Validation { next_probe: ProbeKind::Agree, probe: ProbeStep::AwaitingResponse { .. }, .. },
                Some(record),
            ) => record.predicted.map(|p| prompt_for(p.arousal, p.valence)),
            _ => None,
        };
        StateView {
            state: self.state.clone(),
            phase: self.state.phase.tag(),
            prompt,
            last_prediction: self.last_prediction.clone(),
            stream_time: self.classifier.latest_time(),
            ingest: self.ingestor.stats(),
            emit: self.emitter.stats(),
            fit_error: self.fit_error.clone(),
        }
    }

    fn publish(&mut self, to_feed: bool) {
        let view = Arc::new(self.view());
        if to_feed {
            let text = serde_json::json!({ "v": crate::gateway::PROTOCOL_VERSION, "state": &*view }).to_string();
            self.emitter.broadcast(text.into());
        }
        self.view_tx.send_replace(view);
    }
}
