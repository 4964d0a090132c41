//! Contours, label maps and their on-disk formats.
//!
//! Contour files are JSON Lines, one contour per line:
//!
//! ```text
//! {"id":3,"class":1,"points":[[0.5,-0.5],[1.5,-0.5],[1.5,-1.5]]}
//! ```
//!
//! Coordinates are written with 17 significant digits so a write/read cycle
//! reproduces every `f64` exactly.

mod labelmap;
mod tracing;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

pub use labelmap::{read_label_map, LabelMap};
pub use tracing::{trace_contours, MIN_REGION_PIXELS};

/// The five morphology classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum ShapeClass {
    Circular = 0,
    Elliptical = 1,
    Teardrop = 2,
    Triangular = 3,
    Multipolar = 4,
}

impl ShapeClass {
    pub const COUNT: usize = 5;
    pub const ALL: [ShapeClass; 5] = [
        ShapeClass::Circular,
        ShapeClass::Elliptical,
        ShapeClass::Teardrop,
        ShapeClass::Triangular,
        ShapeClass::Multipolar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Circular => "Circular",
            ShapeClass::Elliptical => "Elliptical",
            ShapeClass::Teardrop => "Teardrop",
            ShapeClass::Triangular => "Triangular",
            ShapeClass::Multipolar => "Multipolar",
        }
    }
}

impl TryFrom<i64> for ShapeClass {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        usize::try_from(v)
            .ok()
            .and_then(Self::from_index)
            .ok_or(Error::LabelOutOfRange(v))
    }
}

impl From<ShapeClass> for i64 {
    fn from(c: ShapeClass) -> i64 {
        c as i64
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An ordered, implicitly closed polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub id: i64,
    pub points: Vec<Point>,
    pub class_label: Option<ShapeClass>,
}

impl Contour {
    /// Builds a contour, dropping consecutive duplicate points (including a
    /// trailing copy of the first point). Fails if fewer than three distinct
    /// points remain or any coordinate is non-finite.
    pub fn new(id: i64, points: Vec<Point>, class_label: Option<ShapeClass>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateContour(format!(
                "contour {id} has non-finite coordinates"
            )));
        }
        let mut pts: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(Error::DegenerateContour(format!(
                "contour {id} has {} distinct points, need at least 3",
                pts.len()
            )));
        }
        Ok(Contour {
            id,
            points: pts,
            class_label,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `%.17g`-style formatting: 17 significant digits, trailing zeros removed,
/// exponent form outside `1e-5 <= |x| < 1e17`.
pub fn format_g17(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mant), sign, exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContourLine {
    id: i64,
    class: Option<i64>,
    points: Vec<Point>,
}

/// Serializes one contour as a single JSONL record (no trailing newline).
pub fn contour_to_json_line(c: &Contour) -> String {
    let mut s = String::with_capacity(24 + c.points.len() * 44);
    s.push_str("{\"id\":");
    s.push_str(&c.id.to_string());
    s.push_str(",\"class\":");
    match c.class_label {
        Some(k) => s.push_str(&k.index().to_string()),
        None => s.push_str("null"),
    }
    s.push_str(",\"points\":[");
    for (i, p) in c.points.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push('[');
        s.push_str(&format_g17(p[0]));
        s.push(',');
        s.push_str(&format_g17(p[1]));
        s.push(']');
    }
    s.push_str("]}");
    s
}

fn parse_line(line: &str, lineno: usize) -> Result<Contour> {
    let perr = |msg: String| Error::Parse { line: lineno, msg };
    let raw: ContourLine = serde_json::from_str(line).map_err(|e| perr(e.to_string()))?;
    let class = raw
        .class
        .map(ShapeClass::try_from)
        .transpose()
        .map_err(|e| perr(e.to_string()))?;
    Contour::new(raw.id, raw.points, class).map_err(|e| perr(e.to_string()))
}

/// Streaming JSONL contour reader; yields one contour per non-blank line.
pub struct ContourReader<R> {
    inner: R,
    buf: String,
    lineno: usize,
}

impl<R: BufRead> ContourReader<R> {
    pub fn new(inner: R) -> Self {
        ContourReader {
            inner,
            buf: String::new(),
            lineno: 0,
        }
    }
}

impl ContourReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(BufReader::new(f)))
    }
}

impl<R: BufRead> Iterator for ContourReader<R> {
    type Item = Result<Contour>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.lineno += 1;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.lineno,
                        msg: e.to_string(),
                    }))
                }
            }
            let line = self.buf.trim();
            if !line.is_empty() {
                return Some(parse_line(line, self.lineno));
            }
        }
    }
}

pub fn read_contours(path: impl AsRef<Path>) -> Result<Vec<Contour>> {
    ContourReader::open(path)?.collect()
}

pub fn write_contours_to<W: Write>(contours: &[Contour], mut w: W) -> std::io::Result<()> {
    for c in contours {
        w.write_all(contour_to_json_line(c).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_contours(contours: &[Contour], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_contours_to(contours, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}
