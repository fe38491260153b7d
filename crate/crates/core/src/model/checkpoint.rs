//! Single-file checkpoints.
//!
//! ```text
//! # mvfusion-checkpoint v1
//! # arch {"view_dims":[16,24],"output_dim":128,...}
//! # tensor enc0.0.w 16 1024
//! <16 CSV rows of 1024 values>
//! # tensor enc0.0.b 1 1024
//! ...
//! ```
//!
//! Matrix rows use the same CSV encoding as dataset view files.

use std::fs;
use std::path::Path;

use super::{ArchConfig, ModelParams};
use crate::data::{format_row, parse_row};
use crate::diffcore::{ParamSet, Tensor2};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "# mvfusion-checkpoint v1";

pub fn write_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    let arch = serde_json::to_string(params.arch()).expect("arch serializes");
    out.push_str(&format!("# arch {arch}\n"));
    for (name, t) in params.params().iter() {
        out.push_str(&format!("# tensor {name} {} {}\n", t.rows(), t.cols()));
        for r in 0..t.rows() {
            out.push_str(&format_row(t.row(r)));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let bad = |line: usize, detail: String| Error::Parse {
        file: file.clone(),
        line,
        detail,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == CHECKPOINT_MAGIC => {}
        _ => return Err(bad(1, "missing checkpoint header".into())),
    }
    let arch: ArchConfig = match lines.next() {
        Some((n, l)) if l.starts_with("# arch ") => {
            serde_json::from_str(&l["# arch ".len()..]).map_err(|e| bad(n, e.to_string()))?
        }
        _ => return Err(bad(2, "missing `# arch` line".into())),
    };

    let mut params = ParamSet::new();
    while let Some((n, header)) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [_, "tensor", name, rows, cols] = fields[..] else {
            return Err(bad(n, format!("expected `# tensor <name> <rows> <cols>`, got `{header}`")));
        };
        let rows: usize = rows.parse().map_err(|_| bad(n, "bad row count".into()))?;
        let cols: usize = cols.parse().map_err(|_| bad(n, "bad column count".into()))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| bad(n, format!("tensor `{name}` is truncated")))?;
            data.extend(parse_row(line, &file, ln, cols)?);
        }
        params.insert(name, Tensor2::from_vec(rows, cols, data)?);
    }
    ModelParams::from_parts(arch, params)
}
