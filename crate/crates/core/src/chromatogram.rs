//! Lane crop to 1-D intensity profile.

use serde::Serialize;
use thiserror::Error;

use crate::lane::LaneCrop;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChromatogramError {
    #[error("seed and front marks are not set on this lane")]
    MissingMarks,
    #[error("invalid chromatogram: {0}")]
    Invalid(String),
}

/// Mean inverted intensity per crop row, indexed from the bottom (seed side)
/// of the crop upward. Sample spacing is one pixel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chromatogram {
    signal: Vec<f64>,
    seed_idx: usize,
    front_idx: usize,
}

impl Chromatogram {
    pub fn new(signal: Vec<f64>, seed_idx: usize, front_idx: usize) -> Result<Self, ChromatogramError> {
        if signal.len() < 2 {
            return Err(ChromatogramError::Invalid(format!(
                "need at least 2 samples, got {}",
                signal.len()
            )));
        }
        if let Some(v) = signal.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(ChromatogramError::Invalid(format!("sample {v} outside [0, 255]")));
        }
        if seed_idx >= front_idx || front_idx >= signal.len() {
            return Err(ChromatogramError::Invalid(format!(
                "need seed_idx < front_idx < {}, got {seed_idx} and {front_idx}",
                signal.len()
            )));
        }
        Ok(Self {
            signal,
            seed_idx,
            front_idx,
        })
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    pub fn seed_idx(&self) -> usize {
        self.seed_idx
    }

    pub fn front_idx(&self) -> usize {
        self.front_idx
    }

    /// Crop row that produced sample `idx`.
    pub fn row_of(&self, idx: usize) -> usize {
        self.signal.len() - 1 - idx
    }
}

pub fn compute_profile(crop: &LaneCrop) -> Result<Chromatogram, ChromatogramError> {
    let marks = crop.marks().ok_or(ChromatogramError::MissingMarks)?;
    let img = crop.pixels();
    let height = img.height();
    let width = img.width() as f64;
    let signal = (0..height)
        .map(|i| {
            let row = img.row(height - 1 - i);
            let dark: u64 = row.iter().map(|&g| u64::from(255 - g)).sum();
            dark as f64 / width
        })
        .collect();
    Chromatogram::new(
        signal,
        height - 1 - marks.seed_row,
        height - 1 - marks.front_row,
    )
}
