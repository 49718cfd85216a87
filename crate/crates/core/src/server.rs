//! Wires the ingestion listener, session engine, prediction feed and HTTP
//! surface into one running server.

use crate::config::{ConfigError, RunConfig};
use crate::gateway::{serve_tcp, Ingestor, PredictionEmitter};
use crate::session::{router, spawn_engine, EngineHandle, SessionError};
use std::net::SocketAddr;
use std::sync::Arc;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct RunningServer {
    pub http_addr: SocketAddr,
    pub ingest_addr: SocketAddr,
    pub engine: EngineHandle,
    pub ingestor: Arc<Ingestor>,
    tasks: Vec<JoinHandle<()>>,
}

impl RunningServer {
    /// Stops accepting samples and requests.
    pub fn shutdown(self) {
        self.ingestor.close();
        for task in self.tasks {
            task.abort();
        }
    }
}

async fn bind(addr: SocketAddr) -> Result<TcpListener, ServerError> {
    TcpListener::bind(addr).await.map_err(|source| ServerError::Bind { addr, source })
}

/// Binds both listeners (port 0 picks a free port) and starts all tasks.
pub async fn start(config: &RunConfig) -> Result<RunningServer, ServerError> {
    config.validate()?;
    let net = &config.network;
    let ingest_listener = bind(SocketAddr::new(net.bind, net.ingest_port)).await?;
    let http_listener = bind(SocketAddr::new(net.bind, net.http_port)).await?;
    let ingest_addr = ingest_listener.local_addr()?;
    let http_addr = http_listener.local_addr()?;

    let ingestor = Arc::new(Ingestor::new(net.queue_capacity));
    let emitter = PredictionEmitter::new(net.udp_sink, net.websocket).await?;
    let (engine, engine_task) = spawn_engine(config.engine_config()?, ingestor.clone(), emitter)?;

    let ingest_task = tokio::spawn({
        let ingestor = ingestor.clone();
        async move {
            if let Err(e) = serve_tcp(ingest_listener, ingestor).await {
                tracing::error!(error = %e, "ingest listener stopped");
            }
        }
    });
    let app = router(engine.clone(), config.paths.static_dir.clone());
    let http_task = tokio::spawn(async move {
        if let Err(e) = axum::serve(http_listener, app).await {
            tracing::error!(error = %e, "HTTP server stopped");
        }
    });
    tracing::info!(%http_addr, %ingest_addr, udp_sink = ?net.udp_sink, "server listening");
    Ok(RunningServer { http_addr, ingest_addr, engine, ingestor, tasks: vec![engine_task, ingest_task, http_task] })
}
