//! Quantitative thin-layer chromatography from scanned plates.
//!
//! The pipeline mirrors how an analyst works a plate:
//!
//! 1. [`imaging`]: decode the scan, convert to grayscale, rotate upright.
//! 2. [`lane`]: pick the run rectangle and mark seed and solvent front.
//! 3. [`chromatogram`]: collapse the lane into an intensity profile.
//! 4. [`peaks`]: pick peak bounds, integrate, and derive percentages and Rf.
//! 5. [`report`] and [`plot`]: write the per-image output folder.
//!
//! [`session`] replays recorded clicks end to end and [`synth`] renders
//! plates with known ground truth for verification.

pub mod chromatogram;
pub mod imaging;
pub mod lane;
pub mod peaks;
pub mod plot;
pub mod report;
pub mod session;
pub mod synth;

pub use chromatogram::{compute_profile, Chromatogram, ChromatogramError};
pub use imaging::{decode_image, load_image, rotate, to_grayscale, GrayImage, ImageError, RgbImage};
pub use lane::{crop, make_marks, make_rect, LaneCrop, LaneError, LaneMarks, LaneRect};
pub use peaks::{
    analyze_run, compute_rf, find_apex, integrate_peak, snap_click, BaselineMode, PeakBounds,
    PeakClicks, PeakError, PeakResult,
};
pub use plot::{render_chromatogram, write_chromatogram, PlotStyle, RenderedChart};
pub use report::{
    format_report, output_dir_for, parse_report, write_grayscale, write_report, ReportError,
    RunReport,
};
pub use session::{replay, AnalysisError, ReplayOptions, SessionError, SessionFile};
pub use synth::{generate_plate, GroundTruth, PlateSpec, SpotSpec, SynthError};
