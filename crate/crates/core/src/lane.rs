//! Lane (run) selection: the clicked rectangle, its crop, and the seed and
//! solvent-front marks inside it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaneError {
    #[error("degenerate selection: {0}; select the lane rectangle again")]
    DegenerateSelection(String),
    #[error("rectangle {rect:?} lies outside the {width}x{height} image")]
    RectOutOfBounds {
        rect: LaneRect,
        width: usize,
        height: usize,
    },
    #[error("seed and front marks fall on the same row ({0}); mark them again")]
    CoincidentMarks(usize),
    #[error("invalid lane marks: {0}")]
    InvalidMarks(String),
    #[error("non-finite click coordinate")]
    NonFiniteClick,
}

/// Half-open pixel rectangle: `x0..x1` by `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl LaneRect {
    /// Checks the shape invariants; bounds against an image are checked by [`crop`].
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self, LaneError> {
        if x1 <= x0 {
            return Err(LaneError::DegenerateSelection(format!(
                "rectangle has zero width ({x0}..{x1})"
            )));
        }
        if y1 < y0 + 2 {
            return Err(LaneError::DegenerateSelection(format!(
                "rectangle must span at least 2 rows ({y0}..{y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// Seed and solvent-front rows, relative to the top of the crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneMarks {
    pub seed_row: usize,
    pub front_row: usize,
}

impl LaneMarks {
    pub fn new(seed_row: usize, front_row: usize, crop_height: usize) -> Result<Self, LaneError> {
        if front_row >= seed_row {
            return Err(LaneError::InvalidMarks(format!(
                "front row {front_row} must lie above seed row {seed_row}"
            )));
        }
        if seed_row >= crop_height {
            return Err(LaneError::InvalidMarks(format!(
                "seed row {seed_row} outside crop of height {crop_height}"
            )));
        }
        Ok(Self {
            seed_row,
            front_row,
        })
    }
}

/// The cropped lane, optionally carrying its marks.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneCrop {
    rect: LaneRect,
    pixels: GrayImage,
    marks: Option<LaneMarks>,
}

impl LaneCrop {
    pub fn rect(&self) -> LaneRect {
        self.rect
    }

    pub fn pixels(&self) -> &GrayImage {
        &self.pixels
    }

    pub fn marks(&self) -> Option<LaneMarks> {
        self.marks
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn set_marks(&mut self, marks: LaneMarks) -> Result<(), LaneError> {
        LaneMarks::new(marks.seed_row, marks.front_row, self.height())?;
        self.marks = Some(marks);
        Ok(())
    }

    pub fn with_marks(mut self, marks: LaneMarks) -> Result<Self, LaneError> {
        self.set_marks(marks)?;
        Ok(self)
    }
}

/// Builds a rectangle from two opposite-corner clicks.
///
/// Clicks clamp into the image and floor to pixel indices. The two clicked
/// pixels must differ in both column and row; otherwise the user has to
/// select again.
pub fn make_rect(
    click_a: (f64, f64),
    click_b: (f64, f64),
    image_w: usize,
    image_h: usize,
) -> Result<LaneRect, LaneError> {
    if image_w < 1 || image_h < 2 {
        return Err(LaneError::DegenerateSelection(format!(
            "image {image_w}x{image_h} is too small for a lane"
        )));
    }
    let coords = [click_a.0, click_a.1, click_b.0, click_b.1];
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(LaneError::NonFiniteClick);
    }
    let px = |v: f64, extent: usize| v.clamp(0.0, (extent - 1) as f64).floor() as usize;
    let (ax, ay) = (px(click_a.0, image_w), px(click_a.1, image_h));
    let (bx, by) = (px(click_b.0, image_w), px(click_b.1, image_h));
    if ax == bx {
        return Err(LaneError::DegenerateSelection(format!(
            "both corners are in column {ax} (zero width)"
        )));
    }
    if ay == by {
        return Err(LaneError::DegenerateSelection(format!(
            "both corners are in row {ay} (zero height)"
        )));
    }
    LaneRect::new(ax.min(bx), ay.min(by), ax.max(bx) + 1, ay.max(by) + 1)
}

/// Pixel-exact copy of the rectangle.
pub fn crop(img: &GrayImage, rect: LaneRect) -> Result<LaneCrop, LaneError> {
    if rect.x1 > img.width() || rect.y1 > img.height() || rect.x0 >= rect.x1 || rect.y0 >= rect.y1 {
        return Err(LaneError::RectOutOfBounds {
            rect,
            width: img.width(),
            height: img.height(),
        });
    }
    let mut pixels = Vec::with_capacity(rect.width() * rect.height());
    for y in rect.y0..rect.y1 {
        pixels.extend_from_slice(&img.row(y)[rect.x0..rect.x1]);
    }
    let pixels = GrayImage::new(rect.width(), rect.height(), pixels)
        .expect("crop dimensions match the rectangle");
    Ok(LaneCrop {
        rect,
        pixels,
        marks: None,
    })
}

/// Turns the two mark clicks into rows. Order does not matter: the lower
/// row on the plate is always the seed.
pub fn make_marks(
    seed_click_y: f64,
    front_click_y: f64,
    crop_height: usize,
) -> Result<LaneMarks, LaneError> {
    if crop_height < 2 {
        return Err(LaneError::InvalidMarks(format!(
            "crop height {crop_height} cannot hold two marks"
        )));
    }
    if !seed_click_y.is_finite() || !front_click_y.is_finite() {
        return Err(LaneError::NonFiniteClick);
    }
    let row = |v: f64| v.clamp(0.0, (crop_height - 1) as f64).round() as usize;
    let (a, b) = (row(seed_click_y), row(front_click_y));
    if a == b {
        return Err(LaneError::CoincidentMarks(a));
    }
    LaneMarks::new(a.max(b), a.min(b), crop_height)
}
