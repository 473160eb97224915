//! LIBSVM text format: `label index:value index:value ...`, one sample per
//! line, indices 1-based and strictly increasing.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use vropt_core::{Dataset, DatasetKind, SparseRow};

use crate::error::{Result, VroptError};

fn parse_err(line: usize, msg: impl Into<String>) -> VroptError {
    VroptError::Parse { line, msg: msg.into() }
}

/// Parses LIBSVM text.
///
/// `dim` overrides the feature count (it must cover every index seen);
/// otherwise the largest index wins. Labels drawn only from `{-1, 0, +1}`
/// make a binary dataset with `0` mapped to `-1`; anything else is kept as a
/// regression target. Text after `#` on a line is ignored.
pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut max_index = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        let label: f64 = label.parse().map_err(|_| parse_err(lineno, format!("malformed label `{label}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, "non-finite label"));
        }
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| parse_err(lineno, format!("malformed token `{tok}`")))?;
            let i: usize = i.parse().map_err(|_| parse_err(lineno, format!("malformed index in `{tok}`")))?;
            if i == 0 {
                return Err(parse_err(lineno, "feature indices start at 1"));
            }
            if i <= last {
                return Err(parse_err(lineno, format!("index {i} does not increase")));
            }
            let v: f64 = v.parse().map_err(|_| parse_err(lineno, format!("malformed value in `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value in `{tok}`")));
            }
            last = i;
            entries.push((i - 1, v));
        }
        max_index = max_index.max(last);
        rows.push(SparseRow::new(entries).map_err(|e| parse_err(lineno, e.to_string()))?);
        targets.push(label);
    }
    if rows.is_empty() {
        return Err(vropt_core::Error::EmptyDataset.into());
    }
    let d = match dim {
        Some(d) if d < max_index => {
            return Err(VroptError::InvalidConfig(format!(
                "dimension {d} is smaller than the largest index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index.max(1),
    };
    let binary = targets.iter().all(|&t| t == 1.0 || t == -1.0 || t == 0.0);
    let kind = if binary {
        targets.iter_mut().filter(|t| **t == 0.0).for_each(|t| *t = -1.0);
        DatasetKind::BinaryLabels
    } else {
        DatasetKind::RegressionTargets
    };
    Ok(Dataset::new(rows, targets, d, kind)?)
}

pub fn parse_libsvm_str(text: &str, dim: Option<usize>) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), dim)
}

pub fn read_libsvm_file(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| VroptError::io(path, e))?;
    parse_libsvm(std::io::BufReader::new(file), dim)
}

/// Canonical LIBSVM text: labels and values in shortest round-trip form.
pub fn to_libsvm_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for (row, target) in ds.rows().iter().zip(ds.targets()) {
        let _ = write!(out, "{target}");
        for &(j, v) in row.entries() {
            let _ = write!(out, " {}:{v}", j + 1);
        }
        out.push('\n');
    }
    out
}
