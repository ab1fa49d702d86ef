//! In-memory analysis sessions.
//!
//! Each session sits behind its own async mutex so requests against one
//! session run one at a time, while different sessions proceed in parallel.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime};

use lanescan_core::{
    Chromatogram, GrayImage, LaneCrop, LaneMarks, LaneRect, PeakResult, RgbImage, RunReport,
};
use tokio::sync::Mutex as AsyncMutex;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub state_dir: PathBuf,
    pub max_upload_bytes: usize,
    pub idle_timeout: Duration,
    /// Static assets served at `/` when set.
    pub ui_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(state_dir: impl Into<PathBuf>) -> Self {
        Self {
            state_dir: state_dir.into(),
            max_upload_bytes: 32 * 1024 * 1024,
            idle_timeout: Duration::from_secs(30 * 60),
            ui_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletedRun {
    pub peaks: Vec<PeakResult>,
    pub report: RunReport,
    pub report_text: String,
}

/// Per-run progress. Each stage requires the one before it; a rotation
/// change clears everything, leaving the run stale until reselected.
#[derive(Debug, Clone, Default)]
pub struct RunState {
    pub rect: Option<LaneRect>,
    pub crop: Option<LaneCrop>,
    pub marks: Option<LaneMarks>,
    pub chromatogram: Option<Chromatogram>,
    pub completed: Option<CompletedRun>,
}

impl RunState {
    pub fn invalidate(&mut self) {
        *self = RunState::default();
    }
}

#[derive(Debug)]
pub struct AnalysisSession {
    pub id: String,
    pub image_name: String,
    pub original: RgbImage,
    pub gray: GrayImage,
    pub rotation_degrees: f64,
    pub runs: BTreeMap<u64, RunState>,
    pub next_run_id: u64,
    pub created_at: SystemTime,
}

impl AnalysisSession {
    pub fn new(id: String, image_name: String, original: RgbImage) -> Self {
        let gray = lanescan_core::to_grayscale(&original);
        Self {
            id,
            image_name,
            original,
            gray,
            rotation_degrees: 0.0,
            runs: BTreeMap::new(),
            next_run_id: 1,
            created_at: SystemTime::now(),
        }
    }
}

struct Entry {
    session: Arc<AsyncMutex<AnalysisSession>>,
    last_access: Instant,
}

/// Shared service state, cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Entry>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                config,
                sessions: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn insert(&self, session: AnalysisSession) {
        let id = session.id.clone();
        self.inner.sessions.lock().expect("session map poisoned").insert(
            id,
            Entry {
                session: Arc::new(AsyncMutex::new(session)),
                last_access: Instant::now(),
            },
        );
    }

    pub fn get(&self, id: &str) -> Option<Arc<AsyncMutex<AnalysisSession>>> {
        let mut map = self.inner.sessions.lock().expect("session map poisoned");
        map.get_mut(id).map(|e| {
            e.last_access = Instant::now();
            e.session.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.inner.sessions.lock().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than the configured timeout as of `now`.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let timeout = self.inner.config.idle_timeout;
        let mut map = self.inner.sessions.lock().expect("session map poisoned");
        let before = map.len();
        map.retain(|_, e| now.saturating_duration_since(e.last_access) <= timeout);
        before - map.len()
    }
}
