//! NDJSON sample ingestion with ordering and loss accounting.

use super::message::SampleMessage;
use super::queue::DropOldestQueue;
use crate::signal::EegFrame;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::net::TcpListener;

pub const DEFAULT_QUEUE_CAPACITY: usize = 4096;

/// Counter snapshot. Whenever no consumer is mid-`recv`,
/// `received = delivered + queued + out_of_order + overflow + malformed`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub received: u64,
    pub delivered: u64,
    pub queued: u64,
    pub out_of_order: u64,
    pub overflow: u64,
    pub malformed: u64,
}

impl IngestStats {
    pub fn dropped(&self) -> u64 {
        self.out_of_order + self.overflow
    }

    pub fn is_conserved(&self) -> bool {
        self.received == self.delivered + self.queued + self.dropped() + self.malformed
    }
}

/// Shared ingestion endpoint: lines in, ordered frames out.
#[derive(Debug)]
pub struct Ingestor {
    queue: DropOldestQueue<EegFrame>,
    last_timestamp: Mutex<f64>,
    received: AtomicU64,
    delivered: AtomicU64,
    out_of_order: AtomicU64,
    malformed: AtomicU64,
}

impl Default for Ingestor {
    fn default() -> Self {
        Self::new(DEFAULT_QUEUE_CAPACITY)
    }
}

impl Ingestor {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: DropOldestQueue::new(capacity),
            last_timestamp: Mutex::new(f64::NEG_INFINITY),
            received: AtomicU64::new(0),
            delivered: AtomicU64::new(0),
            out_of_order: AtomicU64::new(0),
            malformed: AtomicU64::new(0),
        }
    }

    /// Parses one line; malformed lines are counted and skipped.
    pub fn ingest_line(&self, line: &str) {
        if line.trim().is_empty() {
            return;
        }
        match SampleMessage::decode(line) {
            Ok(frame) => self.ingest_frame(frame),
            Err(e) => self.count_malformed(&e.to_string()),
        }
    }

    pub fn ingest_bytes(&self, line: &[u8]) {
        match std::str::from_utf8(line) {
            Ok(text) => self.ingest_line(text),
            Err(e) => self.count_malformed(&e.to_string()),
        }
    }

    fn count_malformed(&self, error: &str) {
        self.received.fetch_add(1, Ordering::Relaxed);
        self.malformed.fetch_add(1, Ordering::Relaxed);
        tracing::debug!(error, "skipping malformed sample line");
    }

    /// Accepts a frame if its timestamp is strictly later than the last accepted one.
    pub fn ingest_frame(&self, frame: EegFrame) {
        let mut last = self.last_timestamp.lock().expect("ingest lock poisoned");
        self.received.fetch_add(1, Ordering::Relaxed);
        if !frame.is_finite() {
            self.malformed.fetch_add(1, Ordering::Relaxed);
            return;
        }
        if frame.timestamp <= *last {
            self.out_of_order.fetch_add(1, Ordering::Relaxed);
            return;
        }
        *last = frame.timestamp;
        // pushed under the lock so queue order matches timestamp order
        self.queue.push(frame);
    }

    pub async fn recv(&self) -> Option<EegFrame> {
        let frame = self.queue.pop().await?;
        self.delivered.fetch_add(1, Ordering::Relaxed);
        Some(frame)
    }

    pub fn try_recv(&self) -> Option<EegFrame> {
        let frame = self.queue.try_pop()?;
        self.delivered.fetch_add(1, Ordering::Relaxed);
        Some(frame)
    }

    pub fn close(&self) {
        self.queue.close();
    }

    pub fn stats(&self) -> IngestStats {
        let _guard = self.last_timestamp.lock().expect("ingest lock poisoned");
        IngestStats {
            received: self.received.load(Ordering::SeqCst),
            delivered: self.delivered.load(Ordering::SeqCst),
            queued: self.queue.len() as u64,
            out_of_order: self.out_of_order.load(Ordering::SeqCst),
            overflow: self.queue.dropped(),
            malformed: self.malformed.load(Ordering::SeqCst),
        }
    }
}

/// Accepts producers forever; each connection's lines feed `ingestor`.
pub async fn serve_tcp(listener: TcpListener, ingestor: Arc<Ingestor>) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        tracing::info!(%peer, "sample producer connected");
        let ingestor = ingestor.clone();
        tokio::spawn(async move {
            let mut lines = BufReader::new(stream).split(b'\n');
            loop {
                match lines.next_segment().await {
                    Ok(Some(line)) => ingestor.ingest_bytes(&line),
                    Ok(None) => break,
                    Err(e) => {
                        tracing::warn!(%peer, error = %e, "producer connection failed");
                        break;
                    }
                }
            }
            tracing::info!(%peer, "sample producer disconnected");
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(t: f64) -> String {
        SampleMessage::encode(&EegFrame::new(t, [1.0; 32]))
    }

    #[test]
    fn ordering_and_counters() {
        let ing = Ingestor::new(16);
        ing.ingest_line(&line(0.004));
        ing.ingest_line("garbage");
        ing.ingest_line(&line(0.002));
        ing.ingest_line(&line(0.008));
        let mut got = Vec::new();
        while let Some(f) = ing.try_recv() {
            got.push(f.timestamp);
        }
        assert_eq!(got, vec![0.004, 0.008]);
        let s = ing.stats();
        assert_eq!((s.received, s.delivered, s.out_of_order, s.malformed), (4, 2, 1, 1));
        assert!(s.is_conserved());
    }

    #[test]
    fn overflow_drops_oldest() {
        let ing = Ingestor::new(4);
        for i in 0..10 {
            ing.ingest_line(&line(i as f64));
        }
        assert_eq!(ing.try_recv().unwrap().timestamp, 6.0);
        let s = ing.stats();
        assert_eq!(s.overflow, 6);
        assert!(s.is_conserved());
    }
}
