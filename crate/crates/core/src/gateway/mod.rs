//! Wire-level sample ingestion and prediction emission.
//!
//! Samples arrive as newline-delimited JSON over TCP (`{"t":…,"ch":[…32]}`)
//! and flow through a bounded drop-oldest queue. Predictions leave as one
//! JSON object per UDP datagram and as WebSocket text frames with the same
//! bytes.

pub mod emit;
pub mod ingest;
pub mod message;
pub mod queue;
pub mod replay;

pub use emit::{EmitStats, PredictionEmitter};
pub use ingest::{serve_tcp, IngestStats, Ingestor};
pub use message::{PhaseTag, PredictionMessage, SampleMessage, PROTOCOL_VERSION};
pub use queue::DropOldestQueue;
pub use replay::{replay_frames, ReplayRate};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Signal(#[from] crate::signal::SignalError),
}

pub type Result<T> = std::result::Result<T, GatewayError>;
