use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major raster of instance ids; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedMap(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if labels.len() != width * height {
            return Err(Error::MalformedMap(format!(
                "{width}x{height} map needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(LabelMap { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Writes a PGM file; `binary` selects P5 over P2.
    pub fn write_pgm(&self, path: impl AsRef<Path>, binary: bool) -> Result<()> {
        let path = path.as_ref();
        let maxval = self.labels.iter().copied().max().unwrap_or(0).max(1);
        if maxval > 65535 {
            return Err(Error::UnsupportedFormat(format!(
                "PGM cannot hold id {maxval} (> 65535)"
            )));
        }
        let mut out = Vec::new();
        let magic = if binary { "P5" } else { "P2" };
        writeln!(out, "{magic}\n{} {}\n{maxval}", self.width, self.height).unwrap();
        if binary {
            for &v in &self.labels {
                if maxval < 256 {
                    out.push(v as u8);
                } else {
                    out.extend_from_slice(&(v as u16).to_be_bytes());
                }
            }
        } else {
            for row in self.labels.chunks(self.width) {
                let line: Vec<String> = row.iter().map(u32::to_string).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.labels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Reads a PGM (P2 or P5, maxval up to 65535) or a plain CSV integer grid.
pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_label_map(&bytes)
}

pub(crate) fn parse_label_map(bytes: &[u8]) -> Result<LabelMap> {
    match bytes.get(..2) {
        Some(b"P2") => parse_pgm(bytes, false),
        Some(b"P5") => parse_pgm(bytes, true),
        Some([b'P', _]) => Err(Error::UnsupportedFormat("only P2/P5 graymaps are supported".into())),
        _ => {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| Error::UnsupportedFormat("not a PGM or CSV text grid".into()))?;
            parse_csv(text)
        }
    }
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        *field = tok.parse().map_err(|_| Error::Parse {
            line: line_of(bytes, start),
            msg: format!("bad PGM header field `{tok}`"),
        })?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval} outside 1..=65535"
        )));
    }
    // exactly one whitespace byte separates the header from raster data
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Parse {
            line: line_of(bytes, pos),
            msg: "missing whitespace after PGM header".into(),
        });
    }
    Ok(Header {
        width,
        height,
        maxval: maxval as u32,
        data_start: pos + 1,
    })
}

fn line_of(bytes: &[u8], pos: usize) -> usize {
    1 + bytes[..pos.min(bytes.len())].iter().filter(|&&b| b == b'\n').count()
}

fn parse_pgm(bytes: &[u8], binary: bool) -> Result<LabelMap> {
    let h = parse_pgm_header(bytes)?;
    let n = h.width * h.height;
    let data = &bytes[h.data_start.min(bytes.len())..];
    let labels: Vec<u32> = if binary {
        let wide = h.maxval > 255;
        let need = if wide { 2 * n } else { n };
        if data.len() < need {
            return Err(Error::MalformedMap(format!(
                "P5 raster truncated: need {need} bytes, got {}",
                data.len()
            )));
        }
        if wide {
            data[..need]
                .chunks_exact(2)
                .map(|b| u32::from(u16::from_be_bytes([b[0], b[1]])))
                .collect()
        } else {
            data[..n].iter().map(|&b| u32::from(b)).collect()
        }
    } else {
        let text = std::str::from_utf8(data).map_err(|_| Error::UnsupportedFormat("P2 body is not ASCII".into()))?;
        let mut out = Vec::with_capacity(n);
        let header_lines = line_of(bytes, h.data_start) - 1;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_ascii_whitespace() {
                let v: u32 = tok.parse().map_err(|_| Error::Parse {
                    line: header_lines + i + 1,
                    msg: format!("bad pixel value `{tok}`"),
                })?;
                out.push(v);
            }
        }
        out
    };
    if labels.iter().any(|&v| v > h.maxval) {
        return Err(Error::MalformedMap("pixel value exceeds maxval".into()));
    }
    LabelMap::new(h.width, h.height, labels)
}

fn parse_csv(text: &str) -> Result<LabelMap> {
    let mut labels = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for tok in line.split(',') {
            let tok = tok.trim();
            let v: u32 = tok.parse().map_err(|_| {
                if i == 0 {
                    Error::UnsupportedFormat(format!("not a PGM or integer CSV grid (`{tok}`)"))
                } else {
                    Error::Parse {
                        line: i + 1,
                        msg: format!("bad label `{tok}`"),
                    }
                }
            })?;
            labels.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("row has {count} values, expected {w}"),
                })
            }
            _ => {}
        }
        height += 1;
    }
    LabelMap::new(width.unwrap_or(0), height, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_with_comment() {
        let m = parse_label_map(b"P2\n# tiny\n3 3\n1\n0 0 0\n0 1 0\n0 0 0\n").unwrap();
        assert_eq!((m.width(), m.height()), (3, 3));
        assert_eq!(m.get(1, 1), 1);
        assert_eq!(m.labels().iter().sum::<u32>(), 1);
    }

    #[test]
    fn p5_sixteen_bit_keeps_large_ids() {
        let mut bytes = b"P5 2 2 65535\n".to_vec();
        for v in [0u16, 40000, 65535, 7] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let m = parse_label_map(&bytes).unwrap();
        assert_eq!(m.labels(), &[0, 40000, 65535, 7]);
    }

    #[test]
    fn csv_and_pgm_agree() {
        let dir = tempfile::tempdir().unwrap();
        let labels: Vec<u32> = (0..35).map(|i| (i * 7919 % 13) as u32 * 300).collect();
        let m = LabelMap::new(7, 5, labels).unwrap();
        for (name, binary) in [("a.pgm", true), ("b.pgm", false)] {
            let p = dir.path().join(name);
            m.write_pgm(&p, binary).unwrap();
            assert_eq!(read_label_map(&p).unwrap(), m);
        }
        let p = dir.path().join("c.csv");
        m.write_csv(&p).unwrap();
        assert_eq!(read_label_map(&p).unwrap(), m);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            parse_label_map(b"P6 1 1 255\n\0\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse_label_map(b"hello,world\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse_label_map(b"1,2\n3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_label_map(b"P5 4 4 255\n\0\0"),
            Err(Error::MalformedMap(_))
        ));
        assert!(matches!(LabelMap::new(2, 2, vec![0; 3]), Err(Error::MalformedMap(_))));
    }
}
