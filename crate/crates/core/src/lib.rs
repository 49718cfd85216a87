//! Affective brain-computer-interface engine.
//!
//! Streams 32-channel EEG, extracts theta/alpha/beta band powers, classifies
//! arousal and valence with one-vs-one linear SVMs, and drives a
//! training → fitting → validation → free-design session over a
//! combinatorial lobby design space.
//!
//! Module map:
//! - [`signal`]: filtering, bad-channel handling, re-referencing, windowing, band powers
//! - [`features`]: labels, mutual information, mRMR, SVM/ECOC, chronological CV
//! - [`gateway`]: TCP sample ingestion, UDP/WebSocket prediction feed, file replay
//! - [`session`]: protocol state machine, model fitting, online classification, metrics
//! - [`design`]: mixed-radix indexing of the design space
//! - [`synth`]: synthetic EEG with known affect signatures
//! - [`config`]: run configuration shared by the CLI and server

pub mod config;
pub mod design;
pub mod features;
pub mod gateway;
pub mod server;
pub mod session;
pub mod signal;
pub mod synth;

pub use config::{ConfigError, Overrides, RunConfig};
pub use features::{AffectClass, EcocModel, FeatureVector, SamRating};
pub use signal::{ChannelMontage, EegEpoch, EegFrame, N_CHANNELS};
