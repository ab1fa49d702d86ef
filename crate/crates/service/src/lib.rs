//! Stateful HTTP API for interactive lane analysis.
//!
//! Sessions live in memory and are evicted after an idle period; only
//! `finalize` writes to disk, under the configured state directory.

mod api;
mod error;
mod state;

use std::future::Future;
use std::time::{Duration, Instant};

pub use api::router;
pub use error::{ApiError, ErrorBody};
pub use state::{AnalysisSession, AppState, CompletedRun, RunState, ServiceConfig};

/// Serves until `shutdown` resolves, sweeping idle sessions in the background.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = AppState::new(config);
    let sweeper = {
        let state = state.clone();
        let period = state.config().idle_timeout.min(Duration::from_secs(60)).max(Duration::from_secs(1));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let evicted = state.evict_idle(Instant::now());
                if evicted > 0 {
                    log::info!("evicted {evicted} idle session(s)");
                }
            }
        })
    };
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    sweeper.abort();
    result
}
