//! Plate image decoding, grayscale conversion and rotation correction.
//!
//! Everything downstream works on [`GrayImage`]: an 8-bit raster where row 0
//! is the top of the scan and the seed line sits near the bottom.

use std::fmt;
use std::path::Path;

use image::DynamicImage;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("cannot read image file {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported or undecodable image data: {0}")]
    UnsupportedFormat(String),
    #[error("rotation angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
}

/// 8-bit color raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Neutral color image with each channel equal to the gray value.
    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            width: gray.width,
            height: gray.height,
            pixels: gray.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        encode_png(&flat, self.width, self.height, image::ExtendedColorType::Rgb8)
    }
}

impl fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RgbImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// 8-bit grayscale raster, row-major, row 0 at the top.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Encodes as a lossless 8-bit single-channel PNG.
    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        encode_png(&self.pixels, self.width, self.height, image::ExtendedColorType::L8)
    }
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::InvalidRaster(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(ImageError::InvalidRaster(format!(
            "{len} pixels do not fill a {width}x{height} raster"
        )));
    }
    Ok(())
}

fn encode_png(
    data: &[u8],
    width: usize,
    height: usize,
    color: image::ExtendedColorType,
) -> Result<Vec<u8>, ImageError> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(data, width as u32, height as u32, color)
        .map_err(|e| ImageError::InvalidRaster(e.to_string()))?;
    Ok(out)
}

/// Reads and decodes a PNG, JPEG, BMP or TIFF file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage, ImageError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ImageError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    decode_image(&bytes)
}

/// Decodes an in-memory image. 16-bit samples keep their high byte, gray
/// sources expand to neutral RGB and alpha is composited over white.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage, ImageError> {
    if bytes.is_empty() {
        return Err(ImageError::UnsupportedFormat("empty input".into()));
    }
    let decoded =
        image::load_from_memory(bytes).map_err(|e| ImageError::UnsupportedFormat(e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);

    let pixels: Vec<[u8; 3]> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| [p.0[0]; 3]).collect(),
        DynamicImage::ImageLumaA8(buf) => buf
            .pixels()
            .map(|p| [over_white(p.0[0], p.0[1]); 3])
            .collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| p.0).collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| {
                let [r, g, b, a] = p.0;
                [over_white(r, a), over_white(g, a), over_white(b, a)]
            })
            .collect(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| [high(p.0[0]); 3]).collect(),
        DynamicImage::ImageLumaA16(buf) => buf
            .pixels()
            .map(|p| [over_white(high(p.0[0]), high(p.0[1])); 3])
            .collect(),
        DynamicImage::ImageRgb16(buf) => buf
            .pixels()
            .map(|p| [high(p.0[0]), high(p.0[1]), high(p.0[2])])
            .collect(),
        DynamicImage::ImageRgba16(buf) => buf
            .pixels()
            .map(|p| {
                let a = high(p.0[3]);
                [
                    over_white(high(p.0[0]), a),
                    over_white(high(p.0[1]), a),
                    over_white(high(p.0[2]), a),
                ]
            })
            .collect(),
        other => other
            .to_rgba8()
            .pixels()
            .map(|p| {
                let [r, g, b, a] = p.0;
                [over_white(r, a), over_white(g, a), over_white(b, a)]
            })
            .collect(),
    };
    RgbImage::new(w, h, pixels)
}

fn high(v: u16) -> u8 {
    (v >> 8) as u8
}

fn over_white(c: u8, alpha: u8) -> u8 {
    let (c, a) = (u32::from(c), u32::from(alpha));
    ((c * a + 255 * (255 - a) + 127) / 255) as u8
}

/// Rec. 601 luma with round-half-up, computed in thousandths so that ties
/// and neutral pixels are exact.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    let milli = 299 * r + 587 * g + 114 * b;
    ((milli + 500) / 1000).min(255) as u8
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| luma(p)).collect(),
    }
}

/// Gray value written where the rotated canvas is not covered by the source.
pub const FILL: u8 = 255;

/// Rotates counterclockwise about the image center by `degrees`.
///
/// The canvas grows to the rotated bounding box. Multiples of 90 degrees are
/// exact pixel permutations; everything else is bilinear inverse mapping.
pub fn rotate(img: &GrayImage, degrees: f64) -> Result<GrayImage, ImageError> {
    if !degrees.is_finite() {
        return Err(ImageError::NonFiniteAngle(degrees));
    }
    let quarter = degrees / 90.0;
    if quarter.fract() == 0.0 {
        let turns = quarter.rem_euclid(4.0) as u8;
        return Ok(rotate_quarter_turns(img, turns));
    }
    Ok(rotate_bilinear(img, degrees.to_radians()))
}

/// Output dimensions of a rotation by `degrees`: the ceiling of the rotated
/// bounding box, with exact swaps for quarter turns.
pub fn rotated_dims(width: usize, height: usize, degrees: f64) -> (usize, usize) {
    let quarter = degrees / 90.0;
    if quarter.fract() == 0.0 {
        return if quarter.rem_euclid(2.0) == 0.0 {
            (width, height)
        } else {
            (height, width)
        };
    }
    let (s, c) = degrees.to_radians().sin_cos();
    let (w, h) = (width as f64, height as f64);
    let bw = w * c.abs() + h * s.abs();
    let bh = w * s.abs() + h * c.abs();
    // Slack absorbs trig round-off so near-integral extents do not grow a pixel.
    let ceil = |v: f64| ((v - 1e-9).ceil() as usize).max(1);
    (ceil(bw), ceil(bh))
}

fn rotate_quarter_turns(img: &GrayImage, turns: u8) -> GrayImage {
    let (w, h) = (img.width, img.height);
    match turns {
        0 => img.clone(),
        2 => GrayImage {
            width: w,
            height: h,
            pixels: img.pixels.iter().rev().copied().collect(),
        },
        1 | 3 => {
            let (ow, oh) = (h, w);
            let mut pixels = Vec::with_capacity(w * h);
            for oy in 0..oh {
                for ox in 0..ow {
                    let (sx, sy) = if turns == 1 {
                        (w - 1 - oy, ox)
                    } else {
                        (oy, h - 1 - ox)
                    };
                    pixels.push(img.get(sx, sy));
                }
            }
            GrayImage {
                width: ow,
                height: oh,
                pixels,
            }
        }
        _ => unreachable!("quarter turns are reduced mod 4"),
    }
}

fn rotate_bilinear(img: &GrayImage, radians: f64) -> GrayImage {
    let (ow, oh) = rotated_dims(img.width, img.height, radians.to_degrees());
    let (s, c) = radians.sin_cos();
    let (w, h) = (img.width as f64, img.height as f64);
    let (scx, scy) = (w / 2.0, h / 2.0);
    let (ocx, ocy) = (ow as f64 / 2.0, oh as f64 / 2.0);

    let mut pixels = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        for ox in 0..ow {
            let dx = ox as f64 + 0.5 - ocx;
            let dy = oy as f64 + 0.5 - ocy;
            // Inverse of the on-screen counterclockwise rotation (y points down).
            let sx = scx + dx * c - dy * s - 0.5;
            let sy = scy + dx * s + dy * c - 0.5;
            pixels.push(sample_bilinear(img, sx, sy));
        }
    }
    GrayImage {
        width: ow,
        height: oh,
        pixels,
    }
}

/// Samples at pixel-center coordinates. Points within half a pixel of the
/// source extent clamp to the edge; anything further out is background fill.
fn sample_bilinear(img: &GrayImage, x: f64, y: f64) -> u8 {
    let (w, h) = (img.width as f64, img.height as f64);
    if x < -0.5 || y < -0.5 || x > w - 0.5 || y > h - 0.5 {
        return FILL;
    }
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p = |xx, yy| f64::from(img.get(xx, yy));
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn luma_examples() {
        assert_eq!(luma([100, 100, 100]), 100);
        assert_eq!(luma([255, 0, 0]), 76);
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([0, 0, 0]), 0);
    }

    #[test]
    fn neutral_pixels_are_fixed_points() {
        for v in 0..=255u8 {
            assert_eq!(luma([v, v, v]), v);
        }
    }

    #[test]
    fn channel_extremes_stay_in_range() {
        for r in [0u8, 1, 254, 255] {
            for g in [0u8, 1, 254, 255] {
                for b in [0u8, 1, 254, 255] {
                    let v = f64::from(luma([r, g, b]));
                    let exact = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
                    assert!((v - exact).abs() <= 0.5 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn grayscale_matches_scalar_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let px: Vec<[u8; 3]> = (0..16).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let img = RgbImage::new(4, 4, px.clone()).unwrap();
        let g = to_grayscale(&img);
        for (i, p) in px.iter().enumerate() {
            let exact = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            let oracle = (exact + 0.5).floor().clamp(0.0, 255.0) as u8;
            assert_eq!(g.pixels()[i], oracle, "pixel {i} {p:?}");
        }
    }

    #[test]
    fn rejects_bad_raster() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(RgbImage::new(1, 1, vec![]).is_err());
    }

    #[test]
    fn rotate_zero_is_identity() {
        let img = gray(3, 2, &[1, 2, 3, 4, 5, 6]);
        assert_eq!(rotate(&img, 0.0).unwrap(), img);
        assert_eq!(rotate(&img, -0.0).unwrap(), img);
        assert_eq!(rotate(&img, 360.0).unwrap(), img);
    }

    #[test]
    fn rotate_90_is_counterclockwise() {
        let img = gray(2, 1, &[10, 200]);
        let r = rotate(&img, 90.0).unwrap();
        assert_eq!((r.width(), r.height()), (1, 2));
        assert_eq!(r.get(0, 0), 200);
        assert_eq!(r.get(0, 1), 10);
        let cw = rotate(&img, -90.0).unwrap();
        assert_eq!(cw.pixels(), &[10, 200]);
        assert_eq!(rotate(&img, 270.0).unwrap(), cw);
    }

    #[test]
    fn quarter_turn_cycles() {
        let img = gray(3, 2, &[1, 2, 3, 4, 5, 6]);
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, 90.0).unwrap();
        }
        assert_eq!(r, img);
        let half = rotate(&img, 180.0).unwrap();
        assert_eq!(half.pixels(), &[6, 5, 4, 3, 2, 1]);
        assert_eq!(rotate(&half, 180.0).unwrap(), img);
    }

    #[test]
    fn non_finite_angle_rejected() {
        let img = gray(1, 1, &[0]);
        assert!(matches!(rotate(&img, f64::NAN), Err(ImageError::NonFiniteAngle(_))));
        assert!(matches!(
            rotate(&img, f64::INFINITY),
            Err(ImageError::NonFiniteAngle(_))
        ));
    }

    #[test]
    fn arbitrary_angle_dims_and_fill() {
        let img = GrayImage::filled(20, 10, 40).unwrap();
        let r = rotate(&img, 30.0).unwrap();
        let (s, c) = 30f64.to_radians().sin_cos();
        assert_eq!(r.width(), (20.0 * c + 10.0 * s).ceil() as usize);
        assert_eq!(r.height(), (20.0 * s + 10.0 * c).ceil() as usize);
        assert!(r.pixels().iter().all(|&v| v == 40 || v == FILL));
        assert_eq!(r.get(r.width() / 2, r.height() / 2), 40);
        // corners of the expanded canvas are uncovered
        assert_eq!(r.get(0, 0), FILL);
    }

    #[test]
    fn small_angle_keeps_dark_line_through_center() {
        let mut px = vec![255u8; 21 * 21];
        for x in 0..21 {
            px[10 * 21 + x] = 0;
        }
        let img = gray(21, 21, &px);
        let r = rotate(&img, 1.0).unwrap();
        let cx = r.width() / 2;
        // a one-pixel line may straddle two output rows but keeps its total darkness
        let ink: u32 = (0..r.height()).map(|y| 255 - u32::from(r.get(cx, y))).sum();
        assert!((230..=280).contains(&ink), "ink {ink}");
        assert!((0..r.height()).filter(|&y| r.get(cx, y) < 250).count() <= 3);
    }

    #[test]
    fn decodes_png_and_expands_gray() {
        let rgb = RgbImage::new(2, 1, vec![[255, 0, 0], [0, 0, 255]]).unwrap();
        let back = decode_image(&rgb.to_png().unwrap()).unwrap();
        assert_eq!(back, rgb);

        let g = gray(1, 1, &[42]);
        let back = decode_image(&g.to_png().unwrap()).unwrap();
        assert_eq!(back.pixels(), &[[42, 42, 42]]);
    }

    #[test]
    fn sixteen_bit_truncates_to_high_byte() {
        let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![0x12ff_u16, 0xff00])
            .unwrap();
        let mut bytes = std::io::Cursor::new(Vec::new());
        DynamicImage::ImageLuma16(buf)
            .write_to(&mut bytes, image::ImageFormat::Png)
            .unwrap();
        let img = decode_image(bytes.get_ref()).unwrap();
        assert_eq!(img.pixels(), &[[0x12; 3], [0xff; 3]]);
    }

    #[test]
    fn alpha_composites_over_white() {
        let buf =
            image::ImageBuffer::<image::Rgba<u8>, _>::from_raw(2, 1, vec![0, 0, 0, 0, 10, 20, 30, 255])
                .unwrap();
        let mut bytes = std::io::Cursor::new(Vec::new());
        DynamicImage::ImageRgba8(buf)
            .write_to(&mut bytes, image::ImageFormat::Png)
            .unwrap();
        let img = decode_image(bytes.get_ref()).unwrap();
        assert_eq!(img.pixels(), &[[255, 255, 255], [10, 20, 30]]);
    }

    #[test]
    fn empty_and_garbage_inputs_are_unsupported() {
        assert!(matches!(decode_image(&[]), Err(ImageError::UnsupportedFormat(_))));
        assert!(matches!(
            decode_image(b"hello, plate"),
            Err(ImageError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_image("/definitely/not/here.png").unwrap_err();
        assert!(matches!(err, ImageError::FileUnreadable { .. }));
    }
}
