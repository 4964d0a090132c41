//! Named feature vectors and matrices, plus the feature CSV format:
//! header `id,class,<feature names...>`, class left empty when unknown.

use std::path::Path;

use crate::contour_io::format_g17;
use crate::error::{Error, Result};
use crate::ShapeClass;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Self {
        debug_assert_eq!(names.len(), values.len());
        FeatureVector { names, values }
    }

    /// Names `<prefix>1 .. <prefix>n`.
    pub fn numbered(prefix: &str, values: Vec<f64>) -> Self {
        let names = (1..=values.len()).map(|i| format!("{prefix}{i}")).collect();
        FeatureVector { names, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Rows are contours, columns are named features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub ids: Vec<i64>,
    pub labels: Vec<Option<ShapeClass>>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>) -> Self {
        FeatureMatrix {
            names,
            ..Default::default()
        }
    }

    pub fn from_rows(
        names: Vec<String>,
        ids: Vec<i64>,
        labels: Vec<Option<ShapeClass>>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut m = FeatureMatrix::new(names);
        for ((id, label), row) in ids.into_iter().zip(labels).zip(rows) {
            m.push_row(id, label, &row)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, id: i64, label: Option<ShapeClass>, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.names.len(),
                got: row.len(),
            });
        }
        self.ids.push(id);
        self.labels.push(label);
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    /// Row-major values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols() + col]
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        let mut out = FeatureMatrix::new(self.names.clone());
        for &i in idx {
            out.ids.push(self.ids[i]);
            out.labels.push(self.labels[i]);
            out.data.extend_from_slice(self.row(i));
        }
        out
    }

    /// Class indices; fails if any row is unlabeled.
    pub fn class_indices(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.map(ShapeClass::index)
                    .ok_or_else(|| Error::InsufficientData(format!("row {i} (id {}) has no class label", self.ids[i])))
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        self.write_csv_to(&mut w).map_err(|e| csv_err(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_csv_to(&mut w).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }

    fn write_csv_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> csv::Result<()> {
        let mut header = vec!["id".to_string(), "class".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            rec.clear();
            rec.push(self.ids[i].to_string());
            rec.push(self.labels[i].map(|c| c.index().to_string()).unwrap_or_default());
            rec.extend(self.row(i).iter().map(|&v| format_g17(v)));
            w.write_record(&rec)?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
        if header.len() < 2 || &header[0] != "id" || &header[1] != "class" {
            return Err(Error::Parse {
                line: 1,
                msg: "feature CSV header must start with `id,class`".into(),
            });
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut m = FeatureMatrix::new(names);
        let mut row = Vec::with_capacity(m.n_cols());
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            let perr = |msg: String| Error::Parse { line, msg };
            let id: i64 = rec[0].parse().map_err(|_| perr(format!("bad id `{}`", &rec[0])))?;
            let label = if rec[1].trim().is_empty() {
                None
            } else {
                let k: i64 = rec[1].parse().map_err(|_| perr(format!("bad class `{}`", &rec[1])))?;
                Some(ShapeClass::try_from(k).map_err(|e| perr(e.to_string()))?)
            };
            row.clear();
            for v in rec.iter().skip(2) {
                row.push(v.parse::<f64>().map_err(|_| perr(format!("bad value `{v}`")))?);
            }
            m.push_row(id, label, &row).map_err(|e| perr(e.to_string()))?;
        }
        Ok(m)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let names = vec!["a".to_string(), "b".to_string()];
        let m = FeatureMatrix::from_rows(
            names,
            vec![4, 9],
            vec![Some(ShapeClass::Triangular), None],
            vec![vec![0.1, -1e-30], vec![1.0 / 3.0, 12345.678]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        m.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("id,class,a,b\n4,3,"));
        assert!(text.contains("\n9,,"));
        assert_eq!(FeatureMatrix::read_csv(&p).unwrap(), m);
    }

    #[test]
    fn push_row_checks_width() {
        let mut m = FeatureMatrix::new(vec!["x".into()]);
        assert!(m.push_row(0, None, &[1.0, 2.0]).is_err());
    }
}
