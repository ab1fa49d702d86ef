//! `lanescan`: replay recorded analysis sessions, render synthetic plates,
//! or host the interactive analysis API.
//!
//! Exit codes: 0 success, 2 invalid input (session schema, plate spec),
//! 3 analysis failure, 4 environment failure (I/O, bind).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lanescan_core::report::format_fixed;
use lanescan_core::session::{replay, ReplayOptions, SessionFile};
use lanescan_core::{generate_plate, BaselineMode, PlateSpec};
use lanescan_service::ServiceConfig;

const EXIT_INPUT: u8 = 2;
const EXIT_ENV: u8 = 4;

#[derive(Parser)]
#[command(name = "lanescan", version, about = "Thin-layer chromatography plate densitometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a recorded session file and write the output bundle.
    Analyze {
        session: PathBuf,
        /// Override the session's baseline mode.
        #[arg(long, value_parser = parse_baseline)]
        baseline: Option<BaselineMode>,
        /// Write the bundle here instead of the folder next to the image.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render a synthetic plate and its ground-truth manifest.
    Synth {
        spec: PathBuf,
        out_image: PathBuf,
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the HTTP analysis API until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Where finalized bundles go. LANESCAN_STATE_DIR takes precedence.
        #[arg(long, default_value = "lanescan-state")]
        state_dir: PathBuf,
        /// Static web UI assets to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
    },
}

fn parse_baseline(s: &str) -> Result<BaselineMode, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            session,
            baseline,
            out_dir,
        } => cmd_analyze(&session, baseline, out_dir),
        Command::Synth {
            spec,
            out_image,
            manifest,
            seed,
        } => cmd_synth(&spec, &out_image, &manifest, seed),
        Command::Serve {
            port,
            host,
            state_dir,
            ui_dir,
            idle_minutes,
        } => {
            let state_dir = std::env::var_os("LANESCAN_STATE_DIR")
                .map(PathBuf::from)
                .unwrap_or(state_dir);
            let mut config = ServiceConfig::new(state_dir);
            config.ui_dir = ui_dir;
            config.idle_timeout = std::time::Duration::from_secs(idle_minutes * 60);
            cmd_serve(SocketAddr::new(host, port), config)
        }
    }
}

fn cmd_analyze(session_path: &Path, baseline: Option<BaselineMode>, out_dir: Option<PathBuf>) -> ExitCode {
    let fail = |e: lanescan_core::SessionError| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    };
    let session = match SessionFile::load(session_path) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let base_dir = session_path.parent().unwrap_or(Path::new("."));
    let opts = ReplayOptions {
        baseline_override: baseline,
        out_dir,
        ..ReplayOptions::default()
    };
    let output = match replay(&session, base_dir, &opts) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };

    for run in &output.runs {
        let r = &run.report;
        println!("run {} ({}, baseline {})", r.run_number, r.image_name, r.baseline_mode);
        println!("  {:>4}  {:>12}  {:>8}  {:>6}", "peak", "area", "percent", "rf");
        for p in &r.peaks {
            println!(
                "  {:>4}  {:>12}  {:>8}  {:>6}",
                p.number,
                format_fixed(p.area, 4),
                format_fixed(p.percent, 2),
                format_fixed(p.rf, 3)
            );
        }
    }
    println!("wrote {}", output.output_dir.display());
    ExitCode::SUCCESS
}

fn cmd_synth(spec_path: &Path, out_image: &Path, manifest: &Path, seed: u64) -> ExitCode {
    let text = match std::fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", spec_path.display());
            return ExitCode::from(EXIT_ENV);
        }
    };
    let spec: PlateSpec = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid plate spec: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let (image, truth) = match generate_plate(&spec, seed) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let png = match image.to_png() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ENV);
        }
    };
    let manifest_text = serde_json::to_string_pretty(&truth).expect("ground truth serializes") + "\n";
    for (path, bytes) in [(out_image, png.as_slice()), (manifest, manifest_text.as_bytes())] {
        if let Err(e) = std::fs::write(path, bytes) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_ENV);
        }
    }
    println!("wrote {} and {}", out_image.display(), manifest.display());
    ExitCode::SUCCESS
}

fn cmd_serve(addr: SocketAddr, config: ServiceConfig) -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(EXIT_ENV);
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {addr}: {e}");
                return ExitCode::from(EXIT_ENV);
            }
        };
        let local = listener.local_addr().map(|a| a.to_string()).unwrap_or_default();
        log::info!("listening on http://{local} (state dir {})", config.state_dir.display());
        match lanescan_service::serve(listener, config, shutdown_signal()).await {
            Ok(()) => {
                log::info!("shut down");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: server failed: {e}");
                ExitCode::from(EXIT_ENV)
            }
        }
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
