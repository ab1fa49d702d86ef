//! Chromatogram rendering to PNG and SVG.
//!
//! Both renderings share one layout: signal against distance from the seed,
//! dashed seed and front markers, shaded peak spans and the peak number
//! above each apex.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use font8x8::UnicodeFonts;

use crate::chromatogram::Chromatogram;
use crate::imaging::RgbImage;
use crate::peaks::PeakResult;
use crate::report::{io_err, ReportError};

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub line_color: [u8; 3],
    pub x_label: String,
    pub y_label: String,
    pub font_size_pt: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            line_color: [31, 78, 160],
            x_label: "distance from seed (px)".into(),
            y_label: "intensity".into(),
            font_size_pt: 9.0,
            width_px: 800,
            height_px: 480,
        }
    }
}

impl PlotStyle {
    fn validate(&self) -> Result<(), ReportError> {
        if self.width_px < 160 || self.height_px < 120 {
            return Err(ReportError::Encode(format!(
                "plot must be at least 160x120 px, got {}x{}",
                self.width_px, self.height_px
            )));
        }
        if !(self.font_size_pt.is_finite() && self.font_size_pt > 0.0) {
            return Err(ReportError::Encode(format!(
                "font size must be positive, got {}",
                self.font_size_pt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RenderedChart {
    pub raster: RgbImage,
    pub svg: String,
}

pub fn chart_file_names(run_number: usize) -> (String, String) {
    (
        format!("chromatogram_run{run_number}.png"),
        format!("chromatogram_run{run_number}.svg"),
    )
}

const SHADE: [u8; 3] = [205, 222, 245];
const MARKER: [u8; 3] = [150, 150, 150];
const INK: [u8; 3] = [0, 0, 0];

struct Layout {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    len: usize,
    y_max: f64,
}

impl Layout {
    fn new(style: &PlotStyle, chrom: &Chromatogram) -> Self {
        let peak = chrom.signal().iter().copied().fold(0.0, f64::max);
        let y_max = nice_ceiling(peak.max(1.0) * 1.1);
        let text = style.font_size_pt * 4.0 / 3.0;
        Self {
            left: 30.0 + 5.0 * text,
            right: style.width_px as f64 - 20.0,
            top: 20.0 + text,
            bottom: style.height_px as f64 - 20.0 - 2.5 * text,
            len: chrom.len(),
            y_max,
        }
    }

    fn x(&self, idx: f64) -> f64 {
        self.left + (self.right - self.left) * idx / (self.len - 1) as f64
    }

    fn y(&self, value: f64) -> f64 {
        self.bottom - (self.bottom - self.top) * value / self.y_max
    }
}

fn nice_ceiling(v: f64) -> f64 {
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

fn ticks(max: f64, count: usize) -> Vec<f64> {
    let raw = max / count as f64;
    let step = nice_ceiling(raw);
    let mut out = Vec::new();
    let mut t = 0.0;
    while t <= max + 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.1}")
    }
}

pub fn render_chromatogram(
    chrom: &Chromatogram,
    peaks: &[PeakResult],
    style: &PlotStyle,
) -> Result<RenderedChart, ReportError> {
    style.validate()?;
    let layout = Layout::new(style, chrom);
    Ok(RenderedChart {
        raster: render_raster(chrom, peaks, style, &layout),
        svg: render_svg(chrom, peaks, style, &layout),
    })
}

/// Writes `chromatogram_run<N>.png` and `.svg` into `dir`.
pub fn write_chromatogram(
    dir: impl AsRef<Path>,
    run_number: usize,
    chart: &RenderedChart,
) -> Result<(PathBuf, PathBuf), ReportError> {
    let (png_name, svg_name) = chart_file_names(run_number);
    let png_path = dir.as_ref().join(png_name);
    let svg_path = dir.as_ref().join(svg_name);
    let png = chart
        .raster
        .to_png()
        .map_err(|e| ReportError::Encode(e.to_string()))?;
    fs::write(&png_path, png).map_err(io_err(format!("writing {}", png_path.display())))?;
    fs::write(&svg_path, &chart.svg).map_err(io_err(format!("writing {}", svg_path.display())))?;
    Ok((png_path, svg_path))
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render_svg(chrom: &Chromatogram, peaks: &[PeakResult], style: &PlotStyle, l: &Layout) -> String {
    let signal = chrom.signal();
    let font = style.font_size_pt;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="{font}pt">"#,
        w = style.width_px,
        h = style.height_px
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for p in peaks {
        let mut pts = format!("{:.2},{:.2}", l.x(p.bounds.start_idx as f64), l.y(0.0));
        for i in p.bounds.start_idx..=p.bounds.end_idx {
            let _ = write!(pts, " {:.2},{:.2}", l.x(i as f64), l.y(signal[i]));
        }
        let _ = write!(pts, " {:.2},{:.2}", l.x(p.bounds.end_idx as f64), l.y(0.0));
        let _ = writeln!(
            s,
            r#"<polygon class="peak-span" data-peak="{}" points="{pts}" fill="{}" stroke="none"/>"#,
            p.number,
            hex(SHADE)
        );
    }

    for (class, idx) in [("seed-marker", chrom.seed_idx()), ("front-marker", chrom.front_idx())] {
        let x = l.x(idx as f64);
        let _ = writeln!(
            s,
            r#"<line class="{class}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="6,4"/>"#,
            l.top,
            l.bottom,
            hex(MARKER)
        );
    }

    let pts: Vec<String> = signal
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", l.x(i as f64), l.y(v)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline class="signal" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
        pts.join(" "),
        hex(style.line_color)
    );

    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{:.2},{:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        l.left, l.top, l.bottom, l.right
    );
    for t in ticks((l.len - 1) as f64, 8) {
        let x = l.x(t);
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            l.bottom + font * 1.8,
            fmt_tick(t)
        );
    }
    for t in ticks(l.y_max, 5) {
        let y = l.y(t);
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{:.2}" y="{y:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            l.left - 6.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (l.left + l.right) / 2.0,
        style.height_px as f64 - 8.0,
        xml_escape(&style.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        14.0,
        (l.top + l.bottom) / 2.0,
        14.0,
        (l.top + l.bottom) / 2.0,
        xml_escape(&style.y_label)
    );

    for p in peaks {
        let _ = writeln!(
            s,
            r#"<text class="peak-number" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            l.x(p.apex_idx as f64),
            l.y(signal[p.apex_idx]) - 6.0,
            p.number
        );
    }
    s.push_str("</svg>\n");
    s
}

struct Canvas {
    w: usize,
    h: usize,
    px: Vec<[u8; 3]>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            self.px[y as usize * self.w + x as usize] = c;
        }
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, c: [u8; 3], dash: Option<(usize, usize)>) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        for k in 0..=steps {
            if let Some((on, off)) = dash {
                if k % (on + off) >= on {
                    continue;
                }
            }
            let t = k as f64 / steps as f64;
            self.put(
                (x0 + (x1 - x0) * t).round() as i64,
                (y0 + (y1 - y0) * t).round() as i64,
                c,
            );
        }
    }

    fn text(&mut self, s: &str, x: f64, y: f64, scale: usize, anchor_center: bool, c: [u8; 3]) {
        let width = (s.chars().count() * 8 * scale) as f64;
        let x0 = if anchor_center { x - width / 2.0 } else { x } as i64;
        let y0 = y as i64;
        for (k, ch) in s.chars().enumerate() {
            let Some(glyph) = font8x8::BASIC_FONTS.get(ch) else {
                continue;
            };
            for (gy, bits) in glyph.iter().enumerate() {
                for gx in 0..8 {
                    if bits >> gx & 1 == 1 {
                        for sy in 0..scale {
                            for sx in 0..scale {
                                self.put(
                                    x0 + ((k * 8 + gx) * scale + sx) as i64,
                                    y0 + (gy * scale + sy) as i64,
                                    c,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}

fn render_raster(chrom: &Chromatogram, peaks: &[PeakResult], style: &PlotStyle, l: &Layout) -> RgbImage {
    let signal = chrom.signal();
    let mut cv = Canvas {
        w: style.width_px as usize,
        h: style.height_px as usize,
        px: vec![[255; 3]; style.width_px as usize * style.height_px as usize],
    };
    let scale = ((style.font_size_pt * 4.0 / 3.0 / 8.0).round() as usize).max(1);
    let glyph = (8 * scale) as f64;

    let interp = |xf: f64| {
        let idx = (xf - l.left) / (l.right - l.left) * (l.len - 1) as f64;
        let i = (idx.floor() as usize).min(l.len - 2);
        let t = idx - i as f64;
        signal[i] * (1.0 - t) + signal[i + 1] * t
    };
    for p in peaks {
        let (xa, xb) = (l.x(p.bounds.start_idx as f64), l.x(p.bounds.end_idx as f64));
        let mut xp = xa.ceil();
        while xp <= xb {
            cv.line(xp, l.y(interp(xp)), xp, l.y(0.0), SHADE, None);
            xp += 1.0;
        }
    }
    for idx in [chrom.seed_idx(), chrom.front_idx()] {
        let x = l.x(idx as f64);
        cv.line(x, l.top, x, l.bottom, MARKER, Some((6, 4)));
    }
    for i in 1..signal.len() {
        let (xa, ya) = (l.x((i - 1) as f64), l.y(signal[i - 1]));
        let (xb, yb) = (l.x(i as f64), l.y(signal[i]));
        cv.line(xa, ya, xb, yb, style.line_color, None);
        cv.line(xa, ya + 1.0, xb, yb + 1.0, style.line_color, None);
    }
    cv.line(l.left, l.top, l.left, l.bottom, INK, None);
    cv.line(l.left, l.bottom, l.right, l.bottom, INK, None);

    for t in ticks((l.len - 1) as f64, 8) {
        let x = l.x(t);
        cv.line(x, l.bottom, x, l.bottom + 4.0, INK, None);
        cv.text(&fmt_tick(t), x, l.bottom + 7.0, scale, true, INK);
    }
    for t in ticks(l.y_max, 5) {
        let y = l.y(t);
        cv.line(l.left - 4.0, y, l.left, y, INK, None);
        let label = fmt_tick(t);
        let w = (label.len() * 8 * scale) as f64;
        cv.text(&label, l.left - 8.0 - w, y - glyph / 2.0, scale, false, INK);
    }
    cv.text(
        &style.x_label,
        (l.left + l.right) / 2.0,
        style.height_px as f64 - glyph - 4.0,
        scale,
        true,
        INK,
    );
    cv.text(&style.y_label, 4.0, 4.0, scale, false, INK);

    for p in peaks {
        cv.text(
            &p.number.to_string(),
            l.x(p.apex_idx as f64),
            l.y(signal[p.apex_idx]) - glyph - 4.0,
            scale,
            true,
            INK,
        );
    }

    RgbImage::new(cv.w, cv.h, cv.px).expect("canvas dimensions are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peaks::{analyze_run, BaselineMode};

    fn two_peak_chrom() -> Chromatogram {
        let mut signal = vec![0.0; 40];
        for (i, v) in signal.iter_mut().enumerate() {
            let a = (-((i as f64 - 10.0).powi(2)) / 8.0).exp() * 50.0;
            let b = (-((i as f64 - 28.0).powi(2)) / 8.0).exp() * 50.0;
            *v = a + b;
        }
        Chromatogram::new(signal, 2, 37).unwrap()
    }

    fn count_peak_numbers(svg: &str) -> Vec<String> {
        svg.lines()
            .filter(|l| l.contains(r#"class="peak-number""#))
            .map(|l| {
                let start = l.find('>').unwrap() + 1;
                let end = l.rfind("</text>").unwrap();
                l[start..end].to_string()
            })
            .collect()
    }

    fn attr(line: &str, name: &str) -> f64 {
        let key = format!(r#" {name}=""#);
        let start = line.find(&key).unwrap() + key.len();
        let end = start + line[start..].find('"').unwrap();
        line[start..end].parse().unwrap()
    }

    #[test]
    fn two_peaks_two_labels_at_distinct_x() {
        let c = two_peak_chrom();
        let peaks = analyze_run(
            &c,
            &[[(3.0, 0.0), (19.0, 0.0)], [(19.0, 0.0), (36.0, 0.0)]],
            BaselineMode::Raw,
        )
        .unwrap();
        // equal heights at different apexes
        assert_eq!(c.signal()[peaks[0].apex_idx], c.signal()[peaks[1].apex_idx]);
        let chart = render_chromatogram(&c, &peaks, &PlotStyle::default()).unwrap();
        assert_eq!(count_peak_numbers(&chart.svg), vec!["1", "2"]);
        let xs: Vec<f64> = chart
            .svg
            .lines()
            .filter(|l| l.contains("peak-number"))
            .map(|l| attr(l, "x"))
            .collect();
        assert!(xs[0] < xs[1]);
        assert!(chart.svg.contains("distance from seed (px)"));
        assert!(chart.svg.contains(">intensity<"));
        assert_eq!(chart.svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(chart.raster.width(), 800);
        assert_eq!(chart.raster.height(), 480);
        assert!(chart.raster.pixels().contains(&PlotStyle::default().line_color));
        assert!(chart.raster.pixels().contains(&SHADE));
    }

    #[test]
    fn single_peak_renders() {
        let c = Chromatogram::new(vec![0.0, 1.0, 0.0], 0, 2).unwrap();
        let peaks = analyze_run(&c, &[[(0.0, 0.0), (2.0, 0.0)]], BaselineMode::Raw).unwrap();
        let chart = render_chromatogram(&c, &peaks, &PlotStyle::default()).unwrap();
        assert_eq!(count_peak_numbers(&chart.svg), vec!["1"]);
        let tmp = tempfile::tempdir().unwrap();
        let (png, svg) = write_chromatogram(tmp.path(), 1, &chart).unwrap();
        assert!(png.ends_with("chromatogram_run1.png") && svg.ends_with("chromatogram_run1.svg"));
        let decoded = image::open(&png).unwrap();
        assert_eq!((decoded.width(), decoded.height()), (800, 480));
    }

    #[test]
    fn style_is_validated() {
        let c = Chromatogram::new(vec![0.0, 1.0], 0, 1).unwrap();
        let style = PlotStyle {
            font_size_pt: 0.0,
            ..PlotStyle::default()
        };
        assert!(render_chromatogram(&c, &[], &style).is_err());
        let style = PlotStyle {
            width_px: 10,
            ..PlotStyle::default()
        };
        assert!(render_chromatogram(&c, &[], &style).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let c = Chromatogram::new(vec![0.0, 1.0], 0, 1).unwrap();
        let style = PlotStyle {
            y_label: "I <mean>".into(),
            ..PlotStyle::default()
        };
        let chart = render_chromatogram(&c, &[], &style).unwrap();
        assert!(chart.svg.contains("I &lt;mean&gt;"));
    }
}
