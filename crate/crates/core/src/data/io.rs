//! On-disk dataset layout and the plain-text matrix format.
//!
//! A dataset directory holds `meta.json` plus one CSV per view:
//!
//! ```json
//! { "name": "toy", "n": 10, "classes": 3, "labels_file": "labels.csv",
//!   "views": [ { "name": "v0", "dim": 3, "file": "v0.csv" } ] }
//! ```
//!
//! View files have one sample per line, comma-separated reals, no header.
//! The labels file has one integer per line. Values are written with
//! Rust's shortest round-trip formatting, so save → load is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<String>,
    pub views: Vec<ViewMeta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewMeta {
    pub name: String,
    pub dim: usize,
    pub file: String,
}

pub fn format_row(row: &[f64]) -> String {
    let mut s = String::with_capacity(row.len() * 20);
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!("{v:?}"));
    }
    s
}

pub fn write_matrix<W: Write>(out: &mut W, t: &Tensor2) -> std::io::Result<()> {
    for r in 0..t.rows() {
        writeln!(out, "{}", format_row(t.row(r)))?;
    }
    Ok(())
}

/// Parses one CSV line; `line` is 1-based for error messages.
pub(crate) fn parse_row(text: &str, file: &str, line: usize, cols: usize) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(cols);
    for field in text.split(',') {
        let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
            file: file.to_string(),
            line,
            detail: format!("`{}` is not a number", field.trim()),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                file: file.to_string(),
                line,
            });
        }
        row.push(v);
    }
    if row.len() != cols {
        return Err(Error::ColumnCountMismatch {
            file: file.to_string(),
            line,
            expected: cols,
            found: row.len(),
        });
    }
    Ok(row)
}

/// Parses a headerless CSV matrix with a known column count. Blank lines
/// are skipped.
pub fn parse_matrix(text: &str, file: &str, cols: usize) -> Result<Tensor2> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        data.extend(parse_row(line, file, i + 1, cols)?);
        rows += 1;
    }
    Tensor2::from_vec(rows, cols, data)
}

fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_labels(text: &str, file: &str) -> Result<Vec<(usize, i64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: i64 = t.parse().map_err(|_| Error::Parse {
            file: file.to_string(),
            line: i + 1,
            detail: format!("`{t}` is not an integer label"),
        })?;
        out.push((i + 1, v));
    }
    Ok(out)
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_str(&read_text(&meta_path)?)
        .map_err(|e| Error::Meta(format!("{}: {e}", meta_path.display())))?;
    if meta.views.is_empty() {
        return Err(Error::Meta("`views` must list at least one view".into()));
    }

    let mut views = Vec::with_capacity(meta.views.len());
    let mut names = Vec::with_capacity(meta.views.len());
    for vm in &meta.views {
        if vm.dim == 0 {
            return Err(Error::Meta(format!("view `{}` has dim 0", vm.name)));
        }
        let path = dir.join(&vm.file);
        let t = parse_matrix(&read_text(&path)?, &vm.file, vm.dim)?;
        if t.rows() != meta.n {
            return Err(Error::RowCountMismatch {
                view: vm.name.clone(),
                expected: meta.n,
                found: t.rows(),
            });
        }
        views.push(t);
        names.push(vm.name.clone());
    }

    let (labels, classes) = match &meta.labels_file {
        None => (None, meta.classes),
        Some(file) => {
            let raw = parse_labels(&read_text(&dir.join(file))?, file)?;
            if raw.len() != meta.n {
                return Err(Error::RowCountMismatch {
                    view: "labels".into(),
                    expected: meta.n,
                    found: raw.len(),
                });
            }
            let classes = match meta.classes {
                Some(c) => c,
                None => raw.iter().map(|&(_, v)| v.max(0) as usize + 1).max().unwrap_or(0),
            };
            let mut labels = Vec::with_capacity(raw.len());
            for (line, v) in raw {
                if v < 0 || v as usize >= classes {
                    return Err(Error::LabelOutOfRange {
                        line,
                        label: v,
                        classes,
                    });
                }
                labels.push(v as usize);
            }
            (Some(labels), Some(classes))
        }
    };

    MultiViewDataset::new(meta.name, names, views, labels, classes)
}

/// Writes `meta.json`, one CSV per view and `labels.csv` when labelled.
pub fn save_dataset(ds: &MultiViewDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut views = Vec::new();
    for (name, t) in ds.view_names().iter().zip(ds.views()) {
        let file = format!("{name}.csv");
        let path = dir.join(&file);
        let mut buf = Vec::new();
        write_matrix(&mut buf, t).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        views.push(ViewMeta {
            name: name.clone(),
            dim: t.cols(),
            file,
        });
    }
    let labels_file = match ds.labels() {
        Some(labels) => {
            let path = dir.join("labels.csv");
            let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Some("labels.csv".to_string())
        }
        None => None,
    };
    let meta = Meta {
        name: ds.name().to_string(),
        n: ds.len(),
        classes: ds.classes(),
        labels_file,
        views,
    };
    let path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_text_parses() {
        let t = parse_matrix("1.5,2.0\n3.0,4.0", "v.csv", 2).unwrap();
        assert_eq!(t, Tensor2::from_rows(&[[1.5, 2.0], [3.0, 4.0]]).unwrap());
    }

    #[test]
    fn formatting_round_trips_awkward_values() {
        let row = [0.1, -1e-300, 123456789.123456789, 5e-324, f64::MAX, 1.0 / 3.0];
        let line = format_row(&row);
        let back = parse_row(&line, "x", 1, row.len()).unwrap();
        assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), row.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn nan_and_garbage_are_distinct_errors() {
        assert!(matches!(parse_matrix("1,NaN\n", "v", 2), Err(Error::NonFinite { line: 1, .. })));
        assert!(matches!(parse_matrix("1,2\n3,x\n", "v", 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("1,2\n3\n", "v", 2), Err(Error::ColumnCountMismatch { line: 2, .. })));
    }
}
