use affectloop::gateway::PhaseTag;
use affectloop::server::{start, RunningServer};
use affectloop::session::StateView;
use affectloop::RunConfig;
use std::time::Duration;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

async fn running() -> RunningServer {
    let mut config = RunConfig::default();
    config.network.http_port = 0;
    config.network.ingest_port = 0;
    start(&config).await.expect("server starts")
}

async fn post(server: &RunningServer, path: &str, body: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(server.http_addr).await.unwrap();
    let request = format!(
        "POST {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    let status = response[9..12].parse().unwrap();
    let body = response.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

async fn get(server: &RunningServer, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(server.http_addr).await.unwrap();
    let request = format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n");
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    let status = response[9..12].parse().unwrap();
    let body = response.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[tokio::test]
async fn tcp_samples_reach_the_engine() {
    let server = running().await;
    let mut stream = TcpStream::connect(server.ingest_addr).await.unwrap();
    let zeros = vec!["0.0"; 32].join(",");
    let mut payload = String::new();
    for i in 0..100 {
        payload.push_str(&format!("{{\"t\":{},\"ch\":[{zeros}]}}\n", i as f64 / 250.0));
    }
    payload.push_str("not json\n");
    payload.push_str(&format!("{{\"t\":0.0,\"ch\":[{zeros}]}}\n"));
    stream.write_all(payload.as_bytes()).await.unwrap();
    stream.flush().await.unwrap();

    let view = tokio::time::timeout(
        Duration::from_secs(10),
        server.engine.wait_for(|v| v.ingest.received == 102 && v.ingest.queued == 0),
    )
    .await
    .expect("samples arrive")
    .unwrap();
    assert_eq!(view.ingest.delivered, 100);
    assert_eq!(view.ingest.malformed, 1);
    assert_eq!(view.ingest.out_of_order, 1);
    assert_eq!(view.stream_time, Some(99.0 / 250.0));
    server.shutdown();
}

#[tokio::test]
async fn http_events_and_websocket_feed() {
    let server = running().await;
    let (status, body) = get(&server, "/state").await;
    assert_eq!(status, 200);
    let view: StateView = serde_json::from_str(&body).unwrap();
    assert_eq!(view.phase, PhaseTag::Idle);
    assert_eq!(get(&server, "/model/report").await.0, 404);

    let url = format!("ws://{}/feed", server.http_addr);
    let (mut feed, _) = tokio_tungstenite::connect_async(url).await.expect("websocket opens");

    let (status, _) = post(&server, "/event", r#"{"kind":"StartSession","t":1.0}"#).await;
    assert_eq!(status, 200);
    let (status, _) = post(&server, "/event", r#"{"kind":"StartSession","t":2.0}"#).await;
    assert_eq!(status, 409);
    let (status, _) = post(&server, "/event", r#"{"kind":"Nonsense"}"#).await;
    assert!((400..500).contains(&status));

    let training = tokio::time::timeout(Duration::from_secs(10), async {
        use futures_util::StreamExt;
        while let Some(msg) = feed.next().await {
            let Message::Text(text) = msg.unwrap() else { continue };
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            if value["state"]["phase"] == "Training" {
                return value;
            }
        }
        panic!("feed closed");
    })
    .await
    .expect("state snapshot on feed");
    assert_eq!(training["v"], 1);

    let (status, body) = get(&server, "/metrics").await;
    assert_eq!(status, 200);
    let metrics: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(metrics["n_agree_trials"], 0);
    server.shutdown();
}
