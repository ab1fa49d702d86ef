//! Output bundle: the per-image folder, the grayscale copy and the
//! tab-separated results file.
//!
//! ```text
//! image: plate7.png
//! run: 1
//! baseline: raw
//! comments: first lane\nsilica
//! peak	area	percent	rf
//! 1	3.0000	75.00	0.500
//! 2	1.0000	25.00	0.750
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::imaging::GrayImage;
use crate::lane::{LaneMarks, LaneRect};
use crate::peaks::{BaselineMode, PeakResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("image path {0} has no file name")]
    NoFileName(PathBuf),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("report line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub(crate) fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> ReportError {
    let context = context.into();
    move |source| ReportError::Io { context, source }
}

pub const AREA_DECIMALS: usize = 4;
pub const PERCENT_DECIMALS: usize = 2;
pub const RF_DECIMALS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub image_name: String,
    pub run_number: usize,
    pub comments: String,
    pub baseline_mode: BaselineMode,
    pub marks: LaneMarks,
    pub rect: LaneRect,
    pub peaks: Vec<PeakResult>,
}

/// Sibling folder named after the image stem, created if missing.
pub fn output_dir_for(image_path: impl AsRef<Path>) -> Result<PathBuf, ReportError> {
    let dir = output_dir_path(image_path.as_ref())?;
    fs::create_dir_all(&dir).map_err(io_err(format!("creating {}", dir.display())))?;
    Ok(dir)
}

/// Where [`output_dir_for`] puts the bundle, without touching the filesystem.
pub fn output_dir_path(image_path: &Path) -> Result<PathBuf, ReportError> {
    let stem = image_path
        .file_stem()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ReportError::NoFileName(image_path.to_path_buf()))?;
    let parent = match image_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok(parent.join(stem))
}

pub fn grayscale_file_name() -> &'static str {
    "grayscale.png"
}

pub fn report_file_name(run_number: usize) -> String {
    format!("results_run{run_number}.txt")
}

pub fn write_grayscale(dir: impl AsRef<Path>, gray: &GrayImage) -> Result<PathBuf, ReportError> {
    let path = dir.as_ref().join(grayscale_file_name());
    let png = gray.to_png().map_err(|e| ReportError::Encode(e.to_string()))?;
    fs::write(&path, png).map_err(io_err(format!("writing {}", path.display())))?;
    Ok(path)
}

/// Fixed-point formatting with ties rounded away from zero.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    let scale = 10f64.powi(decimals as i32);
    let scaled = (value.abs() * scale).round();
    let sign = if value < 0.0 && scaled > 0.0 { "-" } else { "" };
    if decimals == 0 {
        return format!("{sign}{scaled:.0}");
    }
    let digits = format!("{scaled:.0}");
    let digits = format!("{digits:0>width$}", width = decimals + 1);
    let (int, frac) = digits.split_at(digits.len() - decimals);
    format!("{sign}{int}.{frac}")
}

fn escape_comments(comments: &str) -> String {
    comments.replace("\r\n", "\n").replace('\r', "\n").replace('\n', "\\n")
}

/// The results file body. The HTTP service returns exactly this text.
pub fn format_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "image: {}", report.image_name);
    let _ = writeln!(out, "run: {}", report.run_number);
    let _ = writeln!(out, "baseline: {}", report.baseline_mode);
    let _ = writeln!(out, "comments: {}", escape_comments(&report.comments));
    out.push_str("peak\tarea\tpercent\trf\n");
    for p in &report.peaks {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            p.number,
            format_fixed(p.area, AREA_DECIMALS),
            format_fixed(p.percent, PERCENT_DECIMALS),
            format_fixed(p.rf, RF_DECIMALS)
        );
    }
    out
}

pub fn write_report(dir: impl AsRef<Path>, report: &RunReport) -> Result<PathBuf, ReportError> {
    let path = dir.as_ref().join(report_file_name(report.run_number));
    fs::write(&path, format_report(report)).map_err(io_err(format!("writing {}", path.display())))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPeakRow {
    pub number: usize,
    pub area: f64,
    pub percent: f64,
    pub rf: f64,
    /// The three numeric fields as written.
    pub raw: [String; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub image_name: String,
    pub run_number: usize,
    pub baseline_mode: BaselineMode,
    /// Comments with `\n` escapes expanded.
    pub comments: String,
    pub peaks: Vec<ParsedPeakRow>,
}

/// Strict reader for the results grammar, including exact decimal counts.
pub fn parse_report(text: &str) -> Result<ParsedReport, ReportError> {
    let fail = |line: usize, message: String| ReportError::Parse { line, message };
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| fail(0, "report must end with a newline".into()))?;
    if body.contains('\r') {
        return Err(fail(0, "carriage return found; LF line endings expected".into()));
    }
    let lines: Vec<&str> = body.split('\n').collect();
    if lines.len() < 5 {
        return Err(fail(lines.len(), "truncated header".into()));
    }
    let field = |idx: usize, key: &str| -> Result<&str, ReportError> {
        lines[idx]
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(": "))
            .ok_or_else(|| fail(idx + 1, format!("expected `{key}: ...`")))
    };
    let image_name = field(0, "image")?.to_string();
    let run_number = field(1, "run")?
        .parse::<usize>()
        .map_err(|e| fail(2, e.to_string()))?;
    let baseline_mode = field(2, "baseline")?
        .parse::<BaselineMode>()
        .map_err(|e| fail(3, e))?;
    let comments = field(3, "comments")?.replace("\\n", "\n");
    if lines[4] != "peak\tarea\tpercent\trf" {
        return Err(fail(5, "bad column header".into()));
    }

    let mut peaks = Vec::new();
    for (k, line) in lines[5..].iter().enumerate() {
        let lineno = k + 6;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(fail(lineno, format!("expected 4 columns, found {}", cols.len())));
        }
        let number = cols[0].parse::<usize>().map_err(|e| fail(lineno, e.to_string()))?;
        if number != k + 1 {
            return Err(fail(lineno, format!("peak number {number}, expected {}", k + 1)));
        }
        let mut values = [0.0; 3];
        for (slot, (col, decimals)) in cols[1..]
            .iter()
            .zip([AREA_DECIMALS, PERCENT_DECIMALS, RF_DECIMALS])
            .enumerate()
        {
            values[slot] = parse_fixed(col, decimals).map_err(|m| fail(lineno, m))?;
        }
        peaks.push(ParsedPeakRow {
            number,
            area: values[0],
            percent: values[1],
            rf: values[2],
            raw: [cols[1].to_string(), cols[2].to_string(), cols[3].to_string()],
        });
    }
    Ok(ParsedReport {
        image_name,
        run_number,
        baseline_mode,
        comments,
        peaks,
    })
}

fn parse_fixed(s: &str, decimals: usize) -> Result<f64, String> {
    let (int, frac) = s
        .split_once('.')
        .ok_or_else(|| format!("{s:?} has no decimal point"))?;
    let int = int.strip_prefix('-').unwrap_or(int);
    let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int) || !all_digits(frac) || frac.len() != decimals {
        return Err(format!("{s:?} is not a number with {decimals} decimals"));
    }
    s.parse::<f64>().map_err(|e| e.to_string())
}
