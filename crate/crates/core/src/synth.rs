//! Synthetic plate scans with known ground truth.
//!
//! Spots are Gaussian along the migration axis and uniform across their
//! lane, so each spot's integrated darkness is `amplitude * sigma * sqrt(2*pi)`
//! and the expected area fractions follow from `amplitude * sigma` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{GrayImage, RgbImage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("plate spec out of bounds: {0}")]
    SpecOutOfBounds(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotSpec {
    pub center_rf: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    /// First column of the lane (inclusive).
    pub x_start: usize,
    /// One past the last column of the lane.
    pub x_end: usize,
    pub seed_row: usize,
    pub front_row: usize,
    #[serde(default)]
    pub spots: Vec<SpotSpec>,
}

impl LaneSpec {
    /// Image row of a spot's center; fractional in general.
    pub fn spot_row(&self, spot: &SpotSpec) -> f64 {
        self.seed_row as f64 - spot.center_rf * (self.seed_row as f64 - self.front_row as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateSpec {
    pub width: usize,
    pub height: usize,
    pub lanes: Vec<LaneSpec>,
    #[serde(default = "white")]
    pub background_gray: u8,
    #[serde(default)]
    pub noise_sigma: f64,
}

fn white() -> u8 {
    255
}

impl PlateSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::SpecOutOfBounds(msg));
        if self.width == 0 || self.height == 0 {
            return bad(format!("plate must be non-empty, got {}x{}", self.width, self.height));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma));
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            if lane.x_start >= lane.x_end || lane.x_end > self.width {
                return bad(format!(
                    "lane {i}: columns {}..{} not within width {}",
                    lane.x_start, lane.x_end, self.width
                ));
            }
            if lane.front_row >= lane.seed_row || lane.seed_row >= self.height {
                return bad(format!(
                    "lane {i}: need front_row < seed_row < {}, got {} and {}",
                    self.height, lane.front_row, lane.seed_row
                ));
            }
            for (j, s) in lane.spots.iter().enumerate() {
                if !(0.0..=1.0).contains(&s.center_rf) {
                    return bad(format!("lane {i} spot {j}: center_rf {} not in [0,1]", s.center_rf));
                }
                if !(s.amplitude > 0.0 && s.amplitude <= 255.0) {
                    return bad(format!("lane {i} spot {j}: amplitude {} not in (0,255]", s.amplitude));
                }
                if !(s.sigma > 0.0 && s.sigma.is_finite()) {
                    return bad(format!("lane {i} spot {j}: sigma {} must be > 0", s.sigma));
                }
            }
            for (k, other) in self.lanes.iter().enumerate().take(i) {
                if lane.x_start < other.x_end && other.x_start < lane.x_end {
                    return bad(format!("lanes {k} and {i} overlap"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotTruth {
    pub center_rf: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub expected_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneTruth {
    pub x_start: usize,
    pub x_end: usize,
    pub seed_row: usize,
    pub front_row: usize,
    pub spots: Vec<SpotTruth>,
}

/// Manifest written next to a synthetic plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub lanes: Vec<LaneTruth>,
}

fn truth_for(spec: &PlateSpec) -> GroundTruth {
    let lanes = spec
        .lanes
        .iter()
        .map(|lane| {
            let total: f64 = lane.spots.iter().map(|s| s.amplitude * s.sigma).sum();
            LaneTruth {
                x_start: lane.x_start,
                x_end: lane.x_end,
                seed_row: lane.seed_row,
                front_row: lane.front_row,
                spots: lane
                    .spots
                    .iter()
                    .map(|s| SpotTruth {
                        center_rf: s.center_rf,
                        amplitude: s.amplitude,
                        sigma: s.sigma,
                        expected_fraction: s.amplitude * s.sigma / total,
                    })
                    .collect(),
            }
        })
        .collect();
    GroundTruth { lanes }
}

/// Renders the plate. Identical `(spec, rng_seed)` pairs give identical images.
pub fn generate_plate(spec: &PlateSpec, rng_seed: u64) -> Result<(RgbImage, GroundTruth), SynthError> {
    spec.validate()?;
    let mut gray = vec![spec.background_gray; spec.width * spec.height];
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma validated"));
    let background = f64::from(spec.background_gray);

    for lane in &spec.lanes {
        let centers: Vec<f64> = lane.spots.iter().map(|s| lane.spot_row(s)).collect();
        for row in 0..spec.height {
            let darkening: f64 = lane
                .spots
                .iter()
                .zip(&centers)
                .map(|(s, &c)| {
                    let d = row as f64 - c;
                    s.amplitude * (-d * d / (2.0 * s.sigma * s.sigma)).exp()
                })
                .sum();
            let base = background - darkening;
            for x in lane.x_start..lane.x_end {
                let jitter = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                gray[row * spec.width + x] = (base + jitter).round().clamp(0.0, 255.0) as u8;
            }
        }
    }

    let gray = GrayImage::new(spec.width, spec.height, gray).expect("dimensions validated");
    Ok((RgbImage::from_gray(&gray), truth_for(spec)))
}
