//! Peak picking on a chromatogram: click snapping, trapezoid integration,
//! apex location, Rf and area percentages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chromatogram::Chromatogram;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeakError {
    #[error("invalid peak bounds {start}..{end} for a chromatogram of length {len}")]
    InvalidBounds { start: usize, end: usize, len: usize },
    #[error("peak {number} starts and ends at index {idx}; select its start and end again")]
    DegeneratePeak { number: usize, idx: usize },
    #[error("peaks {first} and {second} overlap; select the peaks again")]
    OverlappingPeaks { first: usize, second: usize },
    #[error("no peaks were selected")]
    EmptyPeakSet,
    #[error("total peak area is zero; percentages are undefined")]
    ZeroTotalArea,
    #[error("seed index {seed_idx} is not below front index {front_idx}")]
    DegenerateFront { seed_idx: usize, front_idx: usize },
}

/// Inclusive index range of one peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakBounds {
    pub start_idx: usize,
    pub end_idx: usize,
}

impl PeakBounds {
    pub fn new(start_idx: usize, end_idx: usize) -> Self {
        Self { start_idx, end_idx }
    }

    fn validate(&self, chrom: &Chromatogram) -> Result<(), PeakError> {
        if self.start_idx >= self.end_idx || self.end_idx >= chrom.len() {
            return Err(PeakError::InvalidBounds {
                start: self.start_idx,
                end: self.end_idx,
                len: chrom.len(),
            });
        }
        Ok(())
    }
}

/// What the peak area is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BaselineMode {
    /// Area under the curve down to zero signal.
    #[default]
    #[serde(rename = "raw")]
    Raw,
    /// Area above the straight chord joining the peak's end samples.
    #[serde(rename = "linear")]
    LinearChord,
}

impl BaselineMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineMode::Raw => "raw",
            BaselineMode::LinearChord => "linear",
        }
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(BaselineMode::Raw),
            "linear" => Ok(BaselineMode::LinearChord),
            other => Err(format!("unknown baseline mode {other:?} (expected raw or linear)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakResult {
    pub number: usize,
    #[serde(flatten)]
    pub bounds: PeakBounds,
    pub area: f64,
    pub percent: f64,
    pub apex_idx: usize,
    pub rf: f64,
}

/// A pair of chart clicks marking one peak's start and end, in either order.
pub type PeakClicks = [(f64, f64); 2];

/// Maps a click on the chart onto the curve. Only the x coordinate matters.
pub fn snap_click(chrom: &Chromatogram, click_x: f64, _click_y: f64) -> (usize, f64) {
    let last = (chrom.len() - 1) as f64;
    let idx = if click_x.is_nan() {
        0
    } else {
        click_x.round().clamp(0.0, last) as usize
    };
    (idx, chrom.signal()[idx])
}

/// Trapezoid rule with unit spacing over `bounds`.
pub fn integrate_peak(
    chrom: &Chromatogram,
    bounds: PeakBounds,
    mode: BaselineMode,
) -> Result<f64, PeakError> {
    bounds.validate(chrom)?;
    let span = &chrom.signal()[bounds.start_idx..=bounds.end_idx];
    let area = match mode {
        BaselineMode::Raw => trapezoid(span.iter().copied()),
        BaselineMode::LinearChord => {
            let (first, last) = (span[0], span[span.len() - 1]);
            let steps = (span.len() - 1) as f64;
            trapezoid(span.iter().enumerate().map(|(k, &v)| {
                let chord = first + (last - first) * k as f64 / steps;
                (v - chord).max(0.0)
            }))
        }
    };
    Ok(area.max(0.0))
}

fn trapezoid(samples: impl Iterator<Item = f64>) -> f64 {
    let mut samples = samples;
    let Some(mut prev) = samples.next() else {
        return 0.0;
    };
    let mut sum = 0.0;
    for v in samples {
        sum += (prev + v) / 2.0;
        prev = v;
    }
    sum
}

/// Index of the maximum inside `bounds`; ties go to the index nearest the seed.
pub fn find_apex(chrom: &Chromatogram, bounds: PeakBounds) -> Result<usize, PeakError> {
    bounds.validate(chrom)?;
    let signal = chrom.signal();
    let mut best = bounds.start_idx;
    for i in bounds.start_idx + 1..=bounds.end_idx {
        if signal[i] > signal[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Migration distance of the apex over that of the front, clamped to [0, 1].
pub fn compute_rf(apex_idx: usize, seed_idx: usize, front_idx: usize) -> Result<f64, PeakError> {
    if seed_idx >= front_idx {
        return Err(PeakError::DegenerateFront {
            seed_idx,
            front_idx,
        });
    }
    let travelled = apex_idx as f64 - seed_idx as f64;
    let front = (front_idx - seed_idx) as f64;
    Ok((travelled / front).clamp(0.0, 1.0))
}

/// Integrates every selected peak and expresses each as a share of the total.
///
/// Peaks are numbered in click order. Adjacent peaks may share an endpoint,
/// any deeper overlap is rejected.
pub fn analyze_run(
    chrom: &Chromatogram,
    peak_clicks: &[PeakClicks],
    mode: BaselineMode,
) -> Result<Vec<PeakResult>, PeakError> {
    if peak_clicks.is_empty() {
        return Err(PeakError::EmptyPeakSet);
    }
    let mut bounds = Vec::with_capacity(peak_clicks.len());
    for (k, [a, b]) in peak_clicks.iter().enumerate() {
        let (ia, _) = snap_click(chrom, a.0, a.1);
        let (ib, _) = snap_click(chrom, b.0, b.1);
        if ia == ib {
            return Err(PeakError::DegeneratePeak {
                number: k + 1,
                idx: ia,
            });
        }
        bounds.push(PeakBounds::new(ia.min(ib), ia.max(ib)));
    }

    let mut order: Vec<usize> = (0..bounds.len()).collect();
    order.sort_by_key(|&k| bounds[k].start_idx);
    for pair in order.windows(2) {
        let (left, right) = (bounds[pair[0]], bounds[pair[1]]);
        if left.end_idx > right.start_idx {
            let (first, second) = (pair[0].min(pair[1]) + 1, pair[0].max(pair[1]) + 1);
            return Err(PeakError::OverlappingPeaks { first, second });
        }
    }

    let areas = bounds
        .iter()
        .map(|&b| integrate_peak(chrom, b, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let total: f64 = areas.iter().sum();
    if total <= 0.0 {
        return Err(PeakError::ZeroTotalArea);
    }

    bounds
        .iter()
        .zip(&areas)
        .enumerate()
        .map(|(k, (&b, &area))| {
            let apex_idx = find_apex(chrom, b)?;
            Ok(PeakResult {
                number: k + 1,
                bounds: b,
                area,
                percent: 100.0 * area / total,
                apex_idx,
                rf: compute_rf(apex_idx, chrom.seed_idx(), chrom.front_idx())?,
            })
        })
        .collect()
}
