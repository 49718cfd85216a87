//! `affectloop` command-line entry point.

use affectloop::config::{Overrides, RunConfig};
use affectloop::design::Catalog;
use affectloop::features::{CvReport, Dataset};
use affectloop::gateway::{replay_frames, ReplayRate, SampleMessage};
use affectloop::session::{captures_from_labels, compute_metrics, fit_dataset, fit_models, read_log};
use affectloop::signal::io::{read_replay, write_replay};
use affectloop::synth::{balanced_labels, generate_session, inject_artifacts, AffectSignature, Artifact, SessionLabels, SynthConfig};
use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "affectloop", version, about = "EEG valence/arousal engine and closed-loop design session")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = "AFFECTLOOP_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "AFFECTLOOP_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "AFFECTLOOP_PORT_HTTP")]
    port_http: Option<u16>,
    #[arg(long, global = true, env = "AFFECTLOOP_PORT_INGEST")]
    port_ingest: Option<u16>,
    /// Address receiving prediction datagrams.
    #[arg(long, global = true, env = "AFFECTLOOP_UDP_SINK")]
    udp_sink: Option<SocketAddr>,
    /// Output directory.
    #[arg(long, global = true, env = "AFFECTLOOP_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic session: replay CSV plus labels JSON.
    Synth {
        #[arg(long, default_value_t = 49)]
        stimuli: usize,
        /// Seconds per stimulus.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        strength: f64,
        /// JSON list of artifacts to inject.
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Fit both models from a replay file and its labels.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Cross-validate a labeled feature CSV.
    Validate {
        #[arg(long)]
        features: PathBuf,
    },
    /// Run the session engine, ingestion listener and HTTP console API.
    Serve {
        /// Directory with the console's static files.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        session_log: Option<PathBuf>,
    },
    /// Send a replay file as NDJSON samples to a TCP endpoint or stdout.
    Replay {
        #[arg(long)]
        data: PathBuf,
        /// host:port; stdout when absent.
        #[arg(long)]
        target: Option<String>,
        /// Speed multiplier; `inf` sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Inspect the design space.
    Designspace {
        #[command(subcommand)]
        action: DesignAction,
    },
    /// Agreement and consistency metrics from a session log.
    Metrics { log: PathBuf },
    /// Configuration helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Debug, Subcommand)]
enum DesignAction {
    /// Number of distinct designs.
    Count,
    /// Describe the design at an index.
    Show { index: u64 },
    /// Draw random designs.
    Sample {
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
enum ConfigAction {
    /// Print the resolved configuration.
    Dump,
}

/// Cross-validation results for both axes as written by `train` and
/// reproduced by `validate`.
#[derive(Debug, Serialize, Deserialize)]
struct AxisReports {
    arousal: CvReport,
    valence: CvReport,
}

fn out_dir(config: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = config.paths.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn synth(config: &RunConfig, stimuli: usize, duration: f64, strength: f64, artifacts: Option<&Path>) -> anyhow::Result<()> {
    let labels = balanced_labels(stimuli, config.seed);
    let synth_config =
        SynthConfig { sample_rate: config.pipeline.sample_rate, strength, seed: config.seed, ..Default::default() };
    let mut session = generate_session(&labels, &vec![duration; stimuli], &AffectSignature::default(), &synth_config)?;
    let dir = out_dir(config)?;
    if let Some(path) = artifacts {
        let artifacts: Vec<Artifact> = read_json(path)?;
        let records = inject_artifacts(&mut session.frames, config.pipeline.sample_rate, &artifacts, config.seed)?;
        write_json(&dir.join("artifacts.json"), &records)?;
    }
    write_replay(dir.join("session.csv"), &session.frames)?;
    write_json(&dir.join("labels.json"), &session.labels)?;
    eprintln!("wrote {} frames for {stimuli} stimuli to {}", session.frames.len(), dir.display());
    Ok(())
}

fn train(config: &RunConfig, data: &Path, labels: &Path) -> anyhow::Result<()> {
    let replay = read_replay(data).with_context(|| format!("cannot read {}", data.display()))?;
    let labels: SessionLabels = read_json(labels)?;
    let captures = captures_from_labels(&replay.frames, &labels)?;
    let (models, report, dataset) = fit_models(&captures, &config.montage()?, &config.fit_config())?;
    let dir = out_dir(config)?;
    write_json(&dir.join("model.json"), &models)?;
    write_json(&dir.join("report.json"), &report)?;
    let reports = AxisReports { arousal: report.arousal.clone(), valence: report.valence.clone() };
    write_json(&dir.join("cv_report.json"), &reports)?;
    dataset.write_csv(dir.join("features.csv"))?;
    eprintln!("arousal\n{}\nvalence\n{}", report.arousal, report.valence);
    print_json(&reports)
}

fn validate(config: &RunConfig, features: &Path) -> anyhow::Result<()> {
    let dataset = Dataset::read_csv(features).with_context(|| format!("cannot read {}", features.display()))?;
    let (_, arousal, valence) = fit_dataset(&dataset, &config.fit_config())?;
    let reports = AxisReports { arousal, valence };
    if let Some(dir) = &config.paths.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("cv_report.json"), &reports)?;
    }
    print_json(&reports)
}

async fn serve(mut config: RunConfig, static_dir: Option<PathBuf>, session_log: Option<PathBuf>) -> anyhow::Result<()> {
    if static_dir.is_some() {
        config.paths.static_dir = static_dir;
    }
    if session_log.is_some() {
        config.paths.session_log = session_log;
    }
    let server = affectloop::server::start(&config).await?;
    eprintln!("HTTP on http://{}, samples on tcp://{}", server.http_addr, server.ingest_addr);
    tokio::signal::ctrl_c().await?;
    tracing::info!("shutting down");
    server.shutdown();
    Ok(())
}

async fn replay(data: &Path, target: Option<&str>, rate: f64) -> anyhow::Result<()> {
    let replay = read_replay(data).with_context(|| format!("cannot read {}", data.display()))?;
    let rate = ReplayRate::from_multiplier(rate);
    let (tx, mut rx) = tokio::sync::mpsc::unbounded_channel::<String>();
    let writer = async move {
        match target {
            Some(addr) => {
                use tokio::io::AsyncWriteExt;
                let stream = tokio::net::TcpStream::connect(addr).await.with_context(|| format!("cannot connect to {addr}"))?;
                stream.set_nodelay(true)?;
                let mut stream = tokio::io::BufWriter::new(stream);
                while let Some(line) = rx.recv().await {
                    stream.write_all(line.as_bytes()).await?;
                    if rx.is_empty() {
                        stream.flush().await?;
                    }
                }
                stream.flush().await?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut out = std::io::BufWriter::new(stdout.lock());
                while let Some(line) = rx.recv().await {
                    out.write_all(line.as_bytes())?;
                    if rx.is_empty() {
                        out.flush()?;
                    }
                }
                out.flush()?;
            }
        }
        anyhow::Ok(())
    };
    let producer = async move {
        let sent = replay_frames(&replay.frames, rate, |frame| {
            let mut line = SampleMessage::encode(frame);
            line.push('\n');
            tx.send(line).is_ok()
        })
        .await;
        drop(tx);
        sent
    };
    let (written, sent) = tokio::join!(writer, producer);
    written?;
    eprintln!("sent {sent} samples");
    Ok(())
}

fn designspace(config: &RunConfig, action: DesignAction) -> anyhow::Result<()> {
    let catalog: Catalog = config.catalog()?;
    match action {
        DesignAction::Count => print_json(&catalog.total_combinations()?)?,
        DesignAction::Show { index } => {
            let design = catalog.index_to_config(index)?;
            print_json(&catalog.describe(&design)?)?;
        }
        DesignAction::Sample { n } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            let described = (0..n)
                .map(|_| catalog.sample(&mut rng).and_then(|d| catalog.describe(&d)))
                .collect::<Result<Vec<_>, _>>()?;
            print_json(&described)?;
        }
    }
    Ok(())
}

fn metrics(log: &Path) -> anyhow::Result<()> {
    let records = read_log(log).with_context(|| format!("cannot read {}", log.display()))?;
    if records.is_empty() {
        bail!("session log {} has no records", log.display());
    }
    let m = compute_metrics(&records);
    eprintln!("{m}");
    print_json(&m)
}

async fn run(cli: Cli) -> anyhow::Result<()> {
    let overrides = Overrides {
        seed: cli.seed,
        http_port: cli.port_http,
        ingest_port: cli.port_ingest,
        udp_sink: cli.udp_sink,
        out: cli.out.clone(),
    };
    let config = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Synth { stimuli, duration, strength, artifacts } => {
            synth(&config, stimuli, duration, strength, artifacts.as_deref())
        }
        Command::Train { data, labels } => train(&config, &data, &labels),
        Command::Validate { features } => validate(&config, &features),
        Command::Serve { static_dir, session_log } => serve(config, static_dir, session_log).await,
        Command::Replay { data, target, rate } => replay(&data, target.as_deref(), rate).await,
        Command::Designspace { action } => designspace(&config, action),
        Command::Metrics { log } => metrics(&log),
        Command::Config { action: ConfigAction::Dump } => print_json(&config),
    }
}

fn fail(kind: &str, message: String, code: i32) -> ! {
    eprintln!("{}", serde_json::json!({ "error": message, "kind": kind }));
    std::process::exit(code)
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "affectloop=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => fail("usage", e.to_string().trim().to_string(), 2),
    };
    let runtime = tokio::runtime::Runtime::new().unwrap_or_else(|e| fail("runtime", e.to_string(), 1));
    if let Err(e) = runtime.block_on(run(cli)) {
        let message = format!("{:#}", e);
        tracing::debug!(error = ?e, "command failed");
        fail("error", message, 1);
    }
}
