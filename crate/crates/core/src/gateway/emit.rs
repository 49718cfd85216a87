//! Prediction fan-out: UDP datagrams and a WebSocket broadcast channel.

use super::message::PredictionMessage;
use serde::{Deserialize, Serialize};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use tokio::net::UdpSocket;
use tokio::sync::broadcast;

pub const DEFAULT_WS_BUFFER: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitStats {
    pub emitted: u64,
    pub udp_sent: u64,
    pub udp_errors: u64,
    pub ws_sent: u64,
}

#[derive(Debug, Default)]
struct Counters {
    emitted: AtomicU64,
    udp_sent: AtomicU64,
    udp_errors: AtomicU64,
    ws_sent: AtomicU64,
}

/// Sends every payload unchanged to all configured sinks without blocking.
#[derive(Debug, Clone)]
pub struct PredictionEmitter {
    udp: Option<Arc<UdpSocket>>,
    ws: Option<broadcast::Sender<Arc<str>>>,
    counters: Arc<Counters>,
}

impl PredictionEmitter {
    /// Binds an ephemeral UDP socket connected to `udp_target` when given.
    pub async fn new(udp_target: Option<SocketAddr>, websocket: bool) -> std::io::Result<Self> {
        let udp = match udp_target {
            Some(target) => {
                let bind: SocketAddr = if target.is_ipv4() { ([0, 0, 0, 0], 0).into() } else { (std::net::Ipv6Addr::UNSPECIFIED, 0).into() };
                let socket = UdpSocket::bind(bind).await?;
                socket.connect(target).await?;
                // try_send needs a readiness event from the reactor first
                socket.writable().await?;
                Some(Arc::new(socket))
            }
            None => None,
        };
        let ws = websocket.then(|| broadcast::channel(DEFAULT_WS_BUFFER).0);
        Ok(Self { udp, ws, counters: Arc::default() })
    }

    /// Receiver for WebSocket clients. Slow receivers skip the oldest payloads.
    pub fn subscribe(&self) -> Option<broadcast::Receiver<Arc<str>>> {
        self.ws.as_ref().map(broadcast::Sender::subscribe)
    }

    pub fn emit(&self, msg: &PredictionMessage) {
        self.counters.emitted.fetch_add(1, Ordering::Relaxed);
        let payload: Arc<str> = msg.encode().into();
        if self.udp.is_none() && self.ws.is_none() {
            tracing::warn!("no prediction sink configured; dropping prediction");
            return;
        }
        if let Some(socket) = &self.udp {
            match socket.try_send(payload.as_bytes()) {
                Ok(_) => self.counters.udp_sent.fetch_add(1, Ordering::Relaxed),
                Err(e) => {
                    tracing::debug!(error = %e, "UDP send failed");
                    self.counters.udp_errors.fetch_add(1, Ordering::Relaxed)
                }
            };
        }
        self.broadcast(payload);
    }

    /// Sends arbitrary text (state snapshots) to WebSocket clients only.
    pub fn broadcast(&self, text: Arc<str>) {
        if let Some(ws) = &self.ws {
            if let Ok(n) = ws.send(text) {
                self.counters.ws_sent.fetch_add(n as u64, Ordering::Relaxed);
            }
        }
    }

    pub fn stats(&self) -> EmitStats {
        EmitStats {
            emitted: self.counters.emitted.load(Ordering::Relaxed),
            udp_sent: self.counters.udp_sent.load(Ordering::Relaxed),
            udp_errors: self.counters.udp_errors.load(Ordering::Relaxed),
            ws_sent: self.counters.ws_sent.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::AffectClass;
    use crate::gateway::message::PhaseTag;

    fn msg() -> PredictionMessage {
        PredictionMessage {
            v: 1,
            t: 3.25,
            arousal: AffectClass::High,
            valence: AffectClass::Low,
            arousal_scores: [0.0, 0.0, 1.5],
            valence_scores: [2.0, 0.1, 0.0],
            session_phase: PhaseTag::FreeDesign,
        }
    }

    #[tokio::test]
    async fn identical_bytes_on_both_sinks() {
        let listener = UdpSocket::bind("127.0.0.1:0").await.unwrap();
        let emitter = PredictionEmitter::new(Some(listener.local_addr().unwrap()), true).await.unwrap();
        let mut ws = emitter.subscribe().unwrap();
        emitter.emit(&msg());
        let mut buf = vec![0u8; 4096];
        let n = tokio::time::timeout(std::time::Duration::from_secs(5), listener.recv(&mut buf)).await.unwrap().unwrap();
        let ws_text = ws.recv().await.unwrap();
        assert_eq!(&buf[..n], ws_text.as_bytes());
        assert_eq!(PredictionMessage::decode(&ws_text).unwrap(), msg());
        assert_eq!(emitter.stats().udp_sent, 1);
    }

    #[tokio::test]
    async fn unreachable_udp_never_fails_caller() {
        // nothing listens on this port; ICMP errors surface on later sends
        let target: SocketAddr = {
            let s = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
            s.local_addr().unwrap()
        };
        let emitter = PredictionEmitter::new(Some(target), false).await.unwrap();
        for _ in 0..5 {
            emitter.emit(&msg());
            tokio::time::sleep(std::time::Duration::from_millis(5)).await;
        }
        let s = emitter.stats();
        assert_eq!(s.emitted, 5);
        assert_eq!(s.udp_sent + s.udp_errors, 5);
    }

    #[tokio::test]
    async fn slow_websocket_client_skips_oldest() {
        let emitter = PredictionEmitter::new(None, true).await.unwrap();
        let mut ws = emitter.subscribe().unwrap();
        for i in 0..(DEFAULT_WS_BUFFER + 10) {
            emitter.emit(&PredictionMessage { t: i as f64, ..msg() });
        }
        assert!(matches!(ws.recv().await, Err(broadcast::error::RecvError::Lagged(10))));
        let next = PredictionMessage::decode(&ws.recv().await.unwrap()).unwrap();
        assert_eq!(next.t, 10.0);
    }

    #[tokio::test]
    async fn no_sink_is_noop() {
        let emitter = PredictionEmitter::new(None, false).await.unwrap();
        emitter.emit(&msg());
        assert_eq!(emitter.stats(), EmitStats { emitted: 1, ..Default::default() });
    }
}
