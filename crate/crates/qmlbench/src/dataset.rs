//! The feature-matrix + label currency passed between generators,
//! preprocessors, and classifiers.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// n rows, d columns.
    pub features: DMatrix<f64>,
    pub labels: Vec<i32>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<i32>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                got: feature_names.len(),
            });
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
        })
    }

    /// Default feature names f0..f{d-1}.
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<i32>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("ragged feature rows".into()));
        }
        let features = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        let names = (0..d).map(|j| format!("f{j}")).collect();
        Dataset::new(name, features, labels, names)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn classes(&self) -> Vec<i32> {
        self.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.features[(i, j)]).collect()
    }

    /// New dataset from a subset of row indices, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.dim();
        let features = DMatrix::from_fn(indices.len(), d, |i, j| self.features[(indices[i], j)]);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset {
            name: self.name.clone(),
            features,
            labels,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same points with a replaced feature matrix (after scaling/projection).
    pub fn with_features(&self, features: DMatrix<f64>, feature_names: Vec<String>) -> Result<Self> {
        Dataset::new(self.name.clone(), features, self.labels.clone(), feature_names)
    }

    /// CSV with header `f0,f1,...,f{d-1},label`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        write!(out, "{}", self.to_csv_string())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for name in &self.feature_names {
            s.push_str(name);
            s.push(',');
        }
        s.push_str("label\n");
        for i in 0..self.n() {
            for j in 0..self.dim() {
                s.push_str(&format!("{},", self.features[(i, j)]));
            }
            s.push_str(&format!("{}\n", self.labels[i]));
        }
        s
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv_string(&text, path.display().to_string())
    }

    pub fn from_csv_string(text: &str, name: impl Into<String>) -> Result<Dataset> {
        let name = name.into();
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::EmptyInput("dataset csv"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.last() != Some(&"label") {
            return Err(Error::MalformedRow {
                path: name,
                line: 1,
                reason: "last header column must be `label`".into(),
            });
        }
        let d = cols.len() - 1;
        let feature_names: Vec<String> = cols[..d].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != d + 1 {
                return Err(Error::MalformedRow {
                    path: name,
                    line: idx + 1,
                    reason: format!("expected {} columns, found {}", d + 1, parts.len()),
                });
            }
            let mut row = Vec::with_capacity(d);
            for p in &parts[..d] {
                row.push(p.trim().parse::<f64>().map_err(|e| Error::MalformedRow {
                    path: name.clone(),
                    line: idx + 1,
                    reason: format!("bad numeric {p:?}: {e}"),
                })?);
            }
            labels.push(parts[d].trim().parse::<i32>().map_err(|e| Error::MalformedRow {
                path: name.clone(),
                line: idx + 1,
                reason: format!("bad label {:?}: {e}", parts[d]),
            })?);
            rows.push(row);
        }
        let n = rows.len();
        let features = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        Dataset::new(name, features, labels, feature_names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_rows("toy", vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![0, 1]).unwrap()
    }

    #[test]
    fn csv_roundtrip() {
        let d = toy();
        let parsed = Dataset::from_csv_string(&d.to_csv_string(), "toy").unwrap();
        assert_eq!(d.features, parsed.features);
        assert_eq!(d.labels, parsed.labels);
    }

    #[test]
    fn label_count_mismatch_rejected() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(Dataset::new("bad", m, vec![0], vec!["f0".into()]).is_err());
    }

    #[test]
    fn subset_preserves_order() {
        let d = toy();
        let s = d.subset(&[1]);
        assert_eq!(s.labels, vec![1]);
        assert_eq!(s.features[(0, 0)], 3.0);
    }
}
