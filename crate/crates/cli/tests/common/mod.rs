//! Shared fixtures: randomized synthetic plates and the clicks a careful
//! analyst would make on them.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lanescan_core::session::{RunSpec, SessionFile};
use lanescan_core::synth::LaneSpec;
use lanescan_core::{BaselineMode, PlateSpec, SpotSpec};
use rand::Rng;

pub const LANE_X: (usize, usize) = (12, 28);
pub const PLATE_WIDTH: usize = 40;

/// One lane with 2 to 4 spots, sigma in [3, 8], neighbours at least six
/// sigmas apart, amplitudes in [60, 200] on a white background.
pub fn random_plate(rng: &mut impl Rng, noise_sigma: f64) -> PlateSpec {
    let count = rng.random_range(2..=4);
    let sigmas: Vec<f64> = (0..count).map(|_| rng.random_range(3.0..=8.0)).collect();
    let amplitudes: Vec<f64> = (0..count).map(|_| rng.random_range(60.0..=200.0)).collect();

    let mut dist = Vec::with_capacity(count);
    let mut d = 3.0 * sigmas[0] + rng.random_range(2.0..10.0);
    dist.push(d);
    for i in 1..count {
        d += 6.0 * sigmas[i - 1].max(sigmas[i]) + rng.random_range(0.0..20.0);
        dist.push(d);
    }
    let span = (d + 3.0 * sigmas[count - 1] + rng.random_range(2.0..10.0)).ceil() as usize;
    let margin = 40;
    let height = span + 2 * margin;
    let seed_row = height - margin;
    let front_row = seed_row - span;

    let spots = (0..count)
        .map(|i| SpotSpec {
            center_rf: dist[i] / span as f64,
            amplitude: amplitudes[i],
            sigma: sigmas[i],
        })
        .collect();
    PlateSpec {
        width: PLATE_WIDTH,
        height,
        lanes: vec![LaneSpec {
            x_start: LANE_X.0,
            x_end: LANE_X.1,
            seed_row,
            front_row,
            spots,
        }],
        background_gray: 255,
        noise_sigma,
    }
}

/// Clicks over the whole lane: rectangle spanning every row, marks on the
/// true seed and front rows, peak bounds four sigmas out at the ends and at
/// the midpoint between neighbouring spots.
pub fn clicks_for(spec: &PlateSpec) -> RunSpec {
    let lane = &spec.lanes[0];
    let h = spec.height;
    let idx_of_row = |row: f64| (h - 1) as f64 - row;
    let centers: Vec<f64> = lane.spots.iter().map(|s| idx_of_row(lane.spot_row(s))).collect();
    let last = (h - 1) as f64;

    let mut cuts = vec![(centers[0] - 4.0 * lane.spots[0].sigma).max(0.0)];
    for w in centers.windows(2) {
        cuts.push(((w[0] + w[1]) / 2.0).round());
    }
    let n = centers.len();
    cuts.push((centers[n - 1] + 4.0 * lane.spots[n - 1].sigma).min(last));

    RunSpec {
        rect_clicks: [
            [lane.x_start as f64 + 0.3, 0.0],
            [(lane.x_end - 1) as f64 + 0.7, last],
        ],
        seed_click_y: lane.seed_row as f64,
        front_click_y: lane.front_row as f64,
        peak_clicks: cuts
            .windows(2)
            .map(|w| [[w[0], 37.0], [w[1], -12.0]])
            .collect(),
        comments: String::new(),
    }
}

pub fn session_for(image: impl Into<PathBuf>, runs: Vec<RunSpec>) -> SessionFile {
    SessionFile {
        image: image.into(),
        rotation_degrees: 0.0,
        baseline: BaselineMode::Raw,
        runs,
    }
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

pub fn lanescan() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_lanescan"))
}
