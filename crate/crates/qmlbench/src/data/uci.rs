//! Loaders for the two UCI baselines in their standard comma-separated
//! layouts: breast cancer (wdbc: id, M/B diagnosis, 30 reals) and wine
//! (class 1-3, 13 reals).

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UciKind {
    Wdbc,
    Wine,
}

impl std::str::FromStr for UciKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "wdbc" | "breast-cancer" => Ok(UciKind::Wdbc),
            "wine" => Ok(UciKind::Wine),
            other => Err(format!("unknown UCI dataset {other:?}")),
        }
    }
}

/// Parse a UCI file. Labels: wdbc B = 0, M = 1; wine classes 1-3 map to 0-2.
/// Malformed rows are rejected with their line number.
pub fn load_uci(kind: UciKind, path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_uci(kind, &text, path.display().to_string())
}

pub fn parse_uci(kind: UciKind, text: &str, source: String) -> Result<Dataset> {
    let (expected_cols, d, name) = match kind {
        UciKind::Wdbc => (32, 30, "wdbc"),
        UciKind::Wine => (14, 13, "wine"),
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != expected_cols {
            return Err(Error::MalformedRow {
                path: source.clone(),
                line: lineno,
                reason: format!("expected {expected_cols} columns, found {}", parts.len()),
            });
        }
        let (label, feature_fields) = match kind {
            UciKind::Wdbc => {
                let label = match parts[1].trim() {
                    "B" => 0,
                    "M" => 1,
                    other => {
                        return Err(Error::MalformedRow {
                            path: source.clone(),
                            line: lineno,
                            reason: format!("unknown diagnosis token {other:?}"),
                        })
                    }
                };
                (label, &parts[2..])
            }
            UciKind::Wine => {
                let class: i32 = parts[0].trim().parse().map_err(|e| Error::MalformedRow {
                    path: source.clone(),
                    line: lineno,
                    reason: format!("bad class token {:?}: {e}", parts[0]),
                })?;
                if !(1..=3).contains(&class) {
                    return Err(Error::MalformedRow {
                        path: source.clone(),
                        line: lineno,
                        reason: format!("wine class {class} outside 1..=3"),
                    });
                }
                (class - 1, &parts[1..])
            }
        };
        let mut row = Vec::with_capacity(d);
        for field in feature_fields {
            row.push(field.trim().parse::<f64>().map_err(|e| Error::MalformedRow {
                path: source.clone(),
                line: lineno,
                reason: format!("bad numeric {field:?}: {e}"),
            })?);
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("uci file"));
    }
    Dataset::from_rows(name, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn wdbc_shape() {
        let ds = load_uci(UciKind::Wdbc, fixture("wdbc.csv")).unwrap();
        assert_eq!(ds.n(), 569);
        assert_eq!(ds.dim(), 30);
        assert_eq!(ds.classes(), vec![0, 1]);
    }

    #[test]
    fn wine_shape() {
        let ds = load_uci(UciKind::Wine, fixture("wine.csv")).unwrap();
        assert_eq!(ds.n(), 178);
        assert_eq!(ds.dim(), 13);
        assert_eq!(ds.classes(), vec![0, 1, 2]);
    }

    #[test]
    fn truncated_row_names_the_line() {
        let text = "1,1.0,2.0\n";
        let err = parse_uci(UciKind::Wine, text, "inline".into()).unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_diagnosis_rejected() {
        let mut cols = vec!["1".to_string(), "X".to_string()];
        cols.extend((0..30).map(|i| format!("{i}.0")));
        let text = cols.join(",");
        assert!(parse_uci(UciKind::Wdbc, &text, "inline".into()).is_err());
    }
}
