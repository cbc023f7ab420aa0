//! Datasets and the LIBSVM / CSV loaders.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{dot, Vector};

/// Row-major feature matrix, dense or compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Sparse {
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

impl Features {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Schema(format!(
                "dense matrix {rows} x {cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self::Dense { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vector]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Schema("rows differ in length".into()));
        }
        Self::dense(rows.len(), cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        match self {
            Self::Dense { rows, .. } => *rows,
            Self::Sparse { indptr, .. } => indptr.len() - 1,
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Self::Dense { cols, .. } | Self::Sparse { cols, .. } => *cols,
        }
    }

    /// `a_i^T x`
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Self::Dense { cols, data, .. } => dot(&data[i * cols..(i + 1) * cols], x),
            Self::Sparse {
                indptr,
                indices,
                values,
                ..
            } => (indptr[i]..indptr[i + 1]).map(|k| values[k] * x[indices[k]]).sum(),
        }
    }

    /// `y += alpha a_i`
    #[inline]
    pub fn row_axpy(&self, i: usize, alpha: f64, y: &mut [f64]) {
        match self {
            Self::Dense { cols, data, .. } => {
                for (yj, aj) in y.iter_mut().zip(&data[i * cols..(i + 1) * cols]) {
                    *yj += alpha * aj;
                }
            }
            Self::Sparse {
                indptr,
                indices,
                values,
                ..
            } => {
                for k in indptr[i]..indptr[i + 1] {
                    y[indices[k]] += alpha * values[k];
                }
            }
        }
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        match self {
            Self::Dense { cols, data, .. } => data[i * cols..(i + 1) * cols].iter().map(|v| v * v).sum(),
            Self::Sparse { indptr, values, .. } => values[indptr[i]..indptr[i + 1]].iter().map(|v| v * v).sum(),
        }
    }

    /// `max_j |a_ij|`
    pub fn row_max_abs(&self, i: usize) -> f64 {
        let slice = match self {
            Self::Dense { cols, data, .. } => &data[i * cols..(i + 1) * cols],
            Self::Sparse { indptr, values, .. } => &values[indptr[i]..indptr[i + 1]],
        };
        slice.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_dense(&self, i: usize) -> Vector {
        let mut r = vec![0.0; self.n_cols()];
        self.row_axpy(i, 1.0, &mut r);
        r
    }

    /// Dense copy of the whole matrix, row-major.
    pub fn to_dense_rows(&self) -> Vec<Vector> {
        (0..self.n_rows()).map(|i| self.row_dense(i)).collect()
    }
}

/// Features with optional `+-1` labels and minority-group mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Features,
    pub labels: Option<Vec<f64>>,
    pub group_mask: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(features: Features, labels: Option<Vec<f64>>, group_mask: Option<Vec<bool>>) -> Result<Self> {
        let n = features.n_rows();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Schema(format!("{} labels for {n} rows", l.len())));
            }
            if let Some(bad) = l.iter().find(|v| **v != 1.0 && **v != -1.0) {
                return Err(Error::Schema(format!("label {bad} is not +1 or -1")));
            }
        }
        if let Some(g) = &group_mask {
            if g.len() != n {
                return Err(Error::Schema(format!("{} group flags for {n} rows", g.len())));
            }
        }
        Ok(Self {
            features,
            labels,
            group_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.features.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.n_cols()
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_label(token: &str) -> Option<f64> {
    let t = token.replace('\u{2212}', "-");
    let v = t.parse::<f64>().ok()?;
    (v == 1.0 || v == -1.0).then_some(v)
}

/// Reads `label idx:val ...` lines with 1-based, increasing indices. The
/// dimension is the largest index seen.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    load_libsvm_impl(path.as_ref(), None)
}

/// Like [`load_libsvm`] with a fixed dimension; a larger index is a schema error.
pub fn load_libsvm_with_dim(path: impl AsRef<Path>, dim: usize) -> Result<Dataset> {
    load_libsvm_impl(path.as_ref(), Some(dim))
}

fn load_libsvm_impl(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::new();
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut max_index = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label = parse_label(label_tok)
            .ok_or_else(|| parse_err(path, lineno, format!("label {label_tok:?} is not +1 or -1")))?;
        labels.push(label);
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, lineno, format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err(path, lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_err(path, lineno, "indices must be strictly increasing"));
            }
            last = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(parse_err(path, lineno, "non-finite value"));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(Error::Schema(format!(
                        "{}:{lineno}: index {idx} exceeds dimension {d}",
                        path.display()
                    )));
                }
            }
            max_index = max_index.max(idx);
            indices.push(idx - 1);
            values.push(val);
        }
        indptr.push(indices.len());
    }
    let features = Features::Sparse {
        cols: dim.unwrap_or(max_index),
        indptr,
        indices,
        values,
    };
    Dataset::new(features, Some(labels), None)
}

/// Writes a labeled dataset in LIBSVM format, skipping zero entries.
pub fn write_libsvm(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::Schema("LIBSVM output needs labels".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    for (i, label) in labels.iter().enumerate() {
        write!(w, "{}", if *label > 0.0 { "+1" } else { "-1" })?;
        for (j, v) in data.features.row_dense(i).iter().enumerate() {
            if *v != 0.0 {
                write!(w, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

/// Reads a CSV file with a header row. Every column other than the label and
/// group columns is a numeric feature.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>, group_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in {}", path.display())))
    };
    let label_idx = label_column.map(find).transpose()?;
    let group_idx = group_column.map(find).transpose()?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != label_idx && Some(*i) != group_idx)
        .collect();

    let mut data = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut groups = group_idx.map(|_| Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => Error::Schema(format!("{}: {e}", path.display())),
            _ => Error::Csv(e),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for &c in &feature_cols {
            let v: f64 = record[c]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("non-numeric feature {:?}", &record[c])))?;
            data.push(v);
        }
        if let (Some(i), Some(l)) = (label_idx, labels.as_mut()) {
            let v = parse_label(record[i].trim())
                .ok_or_else(|| parse_err(path, line, format!("label {:?} is not +1 or -1", &record[i])))?;
            l.push(v);
        }
        if let (Some(i), Some(g)) = (group_idx, groups.as_mut()) {
            let v = parse_flag(&record[i])
                .ok_or_else(|| parse_err(path, line, format!("group flag {:?} is not 0/1", &record[i])))?;
            g.push(v);
        }
    }
    let cols = feature_cols.len();
    let rows = data.len().checked_div(cols).unwrap_or(0);
    Dataset::new(Features::dense(rows, cols, data)?, labels, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn libsvm_line() {
        let f = write_tmp("+1 1:0.5 3:2\n-1\n");
        let d = load_libsvm(f.path()).unwrap();
        assert_eq!(d.labels, Some(vec![1.0, -1.0]));
        assert_eq!(d.features.row_dense(0), vec![0.5, 0.0, 2.0]);
        assert_eq!(d.features.row_dense(1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn libsvm_unicode_minus() {
        let f = write_tmp("\u{2212}1 2:1\n");
        assert_eq!(load_libsvm(f.path()).unwrap().labels, Some(vec![-1.0]));
    }

    #[test]
    fn libsvm_errors_carry_line() {
        let f = write_tmp("+1 1:0.5\n+1 2:x\n");
        match load_libsvm(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = write_tmp("+1 3:1 2:1\n");
        assert!(matches!(load_libsvm(f.path()), Err(Error::Parse { line: 1, .. })));
        let f = write_tmp("2 1:1\n");
        assert!(matches!(load_libsvm(f.path()), Err(Error::Parse { .. })));
        let f = write_tmp("+1 5:1\n");
        assert!(matches!(load_libsvm_with_dim(f.path(), 3), Err(Error::Schema(_))));
    }

    #[test]
    fn libsvm_round_trip() {
        let rows = vec![vec![0.1, 0.0, -3.25e-7], vec![0.0, 0.0, 0.0], vec![1.0 / 3.0, 2.0, 0.0]];
        let d = Dataset::new(Features::from_rows(&rows).unwrap(), Some(vec![1.0, -1.0, 1.0]), None).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_libsvm(&d, f.path()).unwrap();
        let back = load_libsvm_with_dim(f.path(), 3).unwrap();
        assert_eq!(back.features.to_dense_rows(), rows);
        assert_eq!(back.labels, d.labels);
    }

    #[test]
    fn csv_columns() {
        let f = write_tmp("a,label,b,minority\n1.5,1,2,0\n-1,-1,0.25,1\n");
        let d = load_csv(f.path(), Some("label"), Some("minority")).unwrap();
        assert_eq!(d.features.to_dense_rows(), vec![vec![1.5, 2.0], vec![-1.0, 0.25]]);
        assert_eq!(d.labels, Some(vec![1.0, -1.0]));
        assert_eq!(d.group_mask, Some(vec![false, true]));
    }

    #[test]
    fn csv_errors() {
        let f = write_tmp("a,b\n1,2\n3\n");
        assert!(matches!(load_csv(f.path(), None, None), Err(Error::Schema(_))));
        let f = write_tmp("a,b\n1,2\n3,oops\n");
        assert!(matches!(load_csv(f.path(), None, None), Err(Error::Parse { line: 3, .. })));
        let f = write_tmp("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), Some("y"), None), Err(Error::Schema(_))));
    }

    #[test]
    fn sparse_dense_agree() {
        let f = write_tmp("+1 1:0.5 3:2\n-1 2:-1\n");
        let s = load_libsvm(f.path()).unwrap().features;
        let d = Features::from_rows(&s.to_dense_rows()).unwrap();
        let x = [0.3, -0.7, 1.1];
        for i in 0..2 {
            assert_eq!(s.row_dot(i, &x), d.row_dot(i, &x));
            assert_eq!(s.row_norm_sq(i), d.row_norm_sq(i));
            assert_eq!(s.row_max_abs(i), d.row_max_abs(i));
        }
    }
}
