//! Run configuration shared by the CLI and the server.
//!
//! Sources, later wins: built-in defaults, a JSON file, `AFFECTLOOP_*`
//! environment variables, command-line flags. The last two are resolved by
//! the CLI and arrive here as [`Overrides`].

use crate::design::Catalog;
use crate::features::CvConfig;
use crate::session::runtime::EngineConfig;
use crate::session::FitConfig;
use crate::signal::{ChannelMontage, PipelineConfig};
use serde::{Deserialize, Serialize};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub bind: IpAddr,
    pub http_port: u16,
    pub ingest_port: u16,
    /// Destination for prediction datagrams.
    pub udp_sink: Option<SocketAddr>,
    pub websocket: bool,
    pub queue_capacity: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            http_port: 8080,
            ingest_port: 7000,
            udp_sink: None,
            websocket: true,
            queue_capacity: crate::gateway::ingest::DEFAULT_QUEUE_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionTiming {
    pub capture_s: f64,
    pub debounce_s: f64,
    pub window_delay_s: f64,
    pub prediction_deadline_s: f64,
    pub history_s: f64,
}

impl Default for SessionTiming {
    fn default() -> Self {
        let e = EngineConfig::default();
        Self {
            capture_s: e.capture_s,
            debounce_s: e.debounce_s,
            window_delay_s: e.window_delay_s,
            prediction_deadline_s: e.prediction_deadline_s,
            history_s: e.history_s,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    /// Output directory for generated artifacts.
    pub out: Option<PathBuf>,
    /// Montage CSV; the built-in 10-20 layout when absent.
    pub montage: Option<PathBuf>,
    /// Design catalog JSON; the built-in catalog when absent.
    pub catalog: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub session_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub cv: CvConfig,
    pub network: NetworkConfig,
    pub session: SessionTiming,
    pub paths: PathConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            pipeline: PipelineConfig::default(),
            cv: CvConfig::default(),
            network: NetworkConfig::default(),
            session: SessionTiming::default(),
            paths: PathConfig::default(),
        }
    }
}

/// Values from the environment or flags that replace file settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub http_port: Option<u16>,
    pub ingest_port: Option<u16>,
    pub udp_sink: Option<SocketAddr>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, replaced field by field from `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.into(), source })
    }

    /// Loads, applies overrides and validates.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut config = Self::load(path)?;
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(port) = o.http_port {
            self.network.http_port = port;
        }
        if let Some(port) = o.ingest_port {
            self.network.ingest_port = port;
        }
        if let Some(sink) = o.udp_sink {
            self.network.udp_sink = Some(sink);
        }
        if let Some(out) = &o.out {
            self.paths.out = Some(out.clone());
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        self.pipeline.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let features = crate::signal::N_FEATURES;
        if self.cv.folds < 2 {
            return invalid(format!("cv.folds must be at least 2, got {}", self.cv.folds));
        }
        if !(1..=features).contains(&self.cv.k_features) {
            return invalid(format!("cv.k_features must be in 1..={features}, got {}", self.cv.k_features));
        }
        if !(self.cv.c.is_finite() && self.cv.c > 0.0) {
            return invalid(format!("cv.c must be positive, got {}", self.cv.c));
        }
        let n = &self.network;
        if n.http_port != 0 && n.http_port == n.ingest_port {
            return invalid(format!("http_port and ingest_port are both {}", n.http_port));
        }
        if n.queue_capacity == 0 {
            return invalid("network.queue_capacity must be positive".into());
        }
        let s = &self.session;
        for (name, v) in [
            ("capture_s", s.capture_s),
            ("debounce_s", s.debounce_s),
            ("prediction_deadline_s", s.prediction_deadline_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("session.{name} must be positive, got {v}"));
            }
        }
        if !(s.window_delay_s.is_finite() && s.window_delay_s >= 0.0) {
            return invalid(format!("session.window_delay_s must be non-negative, got {}", s.window_delay_s));
        }
        if s.capture_s < self.pipeline.window_s {
            return invalid(format!("session.capture_s {} is shorter than one window", s.capture_s));
        }
        let needed = s.window_delay_s + self.pipeline.window_s + self.pipeline.flat_duration_s;
        if s.history_s < needed {
            return invalid(format!("session.history_s must be at least {needed}, got {}", s.history_s));
        }
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig { pipeline: self.pipeline.clone(), cv: self.cv.clone() }
    }

    pub fn montage(&self) -> Result<ChannelMontage, ConfigError> {
        match &self.paths.montage {
            Some(path) => ChannelMontage::from_csv(path).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display()))),
            None => Ok(ChannelMontage::standard()),
        }
    }

    pub fn catalog(&self) -> Result<Catalog, ConfigError> {
        match &self.paths.catalog {
            Some(path) => Catalog::load(path).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display()))),
            None => Ok(Catalog::default()),
        }
    }

    pub fn engine_config(&self) -> Result<EngineConfig, ConfigError> {
        let s = &self.session;
        Ok(EngineConfig {
            fit: self.fit_config(),
            montage: self.montage()?,
            catalog: self.catalog()?,
            capture_s: s.capture_s,
            debounce_s: s.debounce_s,
            window_delay_s: s.window_delay_s,
            prediction_deadline_s: s.prediction_deadline_s,
            history_s: s.history_s,
            log_path: self.paths.session_log.clone(),
        })
    }
}
