//! Recorded analysis sessions and their non-interactive replay.
//!
//! A session file stores the clicks a user would make: rotation, lane
//! rectangle, seed/front marks and peak bounds for each run. Replaying it
//! goes through the same snapping and normalization as the interactive path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chromatogram::{compute_profile, Chromatogram, ChromatogramError};
use crate::imaging::{load_image, rotate, to_grayscale, GrayImage, ImageError};
use crate::lane::{crop, make_marks, make_rect, LaneError, LaneMarks, LaneRect};
use crate::peaks::{analyze_run, BaselineMode, PeakClicks, PeakError, PeakResult};
use crate::plot::{render_chromatogram, write_chromatogram, PlotStyle};
use crate::report::{output_dir_for, write_grayscale, write_report, ReportError, RunReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    pub image: PathBuf,
    #[serde(default)]
    pub rotation_degrees: f64,
    #[serde(default)]
    pub baseline: BaselineMode,
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub rect_clicks: [[f64; 2]; 2],
    pub seed_click_y: f64,
    pub front_click_y: f64,
    pub peak_clicks: Vec<[[f64; 2]; 2]>,
    #[serde(default)]
    pub comments: String,
}

impl RunSpec {
    pub fn peak_pairs(&self) -> Vec<PeakClicks> {
        self.peak_clicks
            .iter()
            .map(|[a, b]| [(a[0], a[1]), (b[0], b[1])])
            .collect()
    }
}

/// Any failure of the lane-to-peaks chain for one run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Lane(#[from] LaneError),
    #[error(transparent)]
    Chromatogram(#[from] ChromatogramError),
    #[error(transparent)]
    Peaks(#[from] PeakError),
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("cannot read session file {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("run {run}: {source}")]
    Analysis {
        run: usize,
        #[source]
        source: AnalysisError,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl SessionError {
    /// 2 for schema problems, 3 for analysis failures, 4 for the environment.
    pub fn exit_code(&self) -> i32 {
        match self {
            SessionError::Schema { .. } => 2,
            SessionError::Analysis { .. } => 3,
            SessionError::Image(ImageError::NonFiniteAngle(_)) => 2,
            _ => 4,
        }
    }
}

impl SessionFile {
    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let session: SessionFile =
            serde_path_to_error::deserialize(de).map_err(|e| SessionError::Schema {
                field: match e.path().to_string() {
                    p if p == "." => "<root>".to_string(),
                    p => p,
                },
                message: e.inner().to_string(),
            })?;
        session.validate()?;
        Ok(session)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::Unreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let schema = |field: String, message: &str| {
            Err(SessionError::Schema {
                field,
                message: message.to_string(),
            })
        };
        if self.image.as_os_str().is_empty() {
            return schema("image".into(), "must not be empty");
        }
        if self.runs.is_empty() {
            return schema("runs".into(), "at least one run is required");
        }
        for (i, run) in self.runs.iter().enumerate() {
            if run.peak_clicks.is_empty() {
                return schema(
                    format!("runs[{i}].peak_clicks"),
                    "at least one peak click pair is required",
                );
            }
        }
        Ok(())
    }
}

/// Everything one run produces before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneAnalysis {
    pub rect: LaneRect,
    pub marks: LaneMarks,
    pub chromatogram: Chromatogram,
    pub peaks: Vec<PeakResult>,
}

/// rect -> crop -> marks -> profile -> peaks for one run on the working image.
pub fn analyze_lane(
    gray: &GrayImage,
    run: &RunSpec,
    mode: BaselineMode,
) -> Result<LaneAnalysis, AnalysisError> {
    let [a, b] = run.rect_clicks;
    let rect = make_rect((a[0], a[1]), (b[0], b[1]), gray.width(), gray.height())?;
    let lane = crop(gray, rect)?;
    let marks = make_marks(run.seed_click_y, run.front_click_y, lane.height())?;
    let lane = lane.with_marks(marks)?;
    let chromatogram = compute_profile(&lane)?;
    let peaks = analyze_run(&chromatogram, &run.peak_pairs(), mode)?;
    Ok(LaneAnalysis {
        rect,
        marks,
        chromatogram,
        peaks,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ReplayOptions {
    pub baseline_override: Option<BaselineMode>,
    /// Replaces the folder next to the image.
    pub out_dir: Option<PathBuf>,
    pub style: PlotStyle,
}

#[derive(Debug, Clone)]
pub struct ReplayedRun {
    pub report: RunReport,
    pub analysis: LaneAnalysis,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub output_dir: PathBuf,
    pub grayscale: PathBuf,
    pub runs: Vec<ReplayedRun>,
}

/// Resolves the session's image path; relative paths are taken from `base_dir`.
pub fn resolve_image_path(session: &SessionFile, base_dir: &Path) -> PathBuf {
    if session.image.is_absolute() {
        session.image.clone()
    } else {
        base_dir.join(&session.image)
    }
}

/// Runs every recorded run and writes the full output bundle.
///
/// All runs are analyzed before anything is written, so a failing run leaves
/// no partial bundle behind.
pub fn replay(
    session: &SessionFile,
    base_dir: &Path,
    opts: &ReplayOptions,
) -> Result<ReplayOutput, SessionError> {
    session.validate()?;
    let image_path = resolve_image_path(session, base_dir);
    let rgb = load_image(&image_path)?;
    let gray = rotate(&to_grayscale(&rgb), session.rotation_degrees)?;
    let mode = opts.baseline_override.unwrap_or(session.baseline);
    let image_name = image_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();

    let analyses = session
        .runs
        .iter()
        .enumerate()
        .map(|(i, run)| {
            analyze_lane(&gray, run, mode).map_err(|source| SessionError::Analysis {
                run: i + 1,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let output_dir = match &opts.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(crate::report::io_err(format!(
                "creating {}",
                dir.display()
            )))?;
            dir.clone()
        }
        None => output_dir_for(&image_path)?,
    };
    let grayscale = write_grayscale(&output_dir, &gray)?;

    let mut runs = Vec::with_capacity(analyses.len());
    for (i, (run, analysis)) in session.runs.iter().zip(analyses).enumerate() {
        let run_number = i + 1;
        let report = RunReport {
            image_name: image_name.clone(),
            run_number,
            comments: run.comments.clone(),
            baseline_mode: mode,
            marks: analysis.marks,
            rect: analysis.rect,
            peaks: analysis.peaks.clone(),
        };
        let chart = render_chromatogram(&analysis.chromatogram, &analysis.peaks, &opts.style)?;
        let (png, svg) = write_chromatogram(&output_dir, run_number, &chart)?;
        let txt = write_report(&output_dir, &report)?;
        runs.push(ReplayedRun {
            report,
            analysis,
            files: vec![png, svg, txt],
        });
    }
    Ok(ReplayOutput {
        output_dir,
        grayscale,
        runs,
    })
}
