//! LIBSVM text format: `label idx:val idx:val ...` with 1-based increasing indices.
//!
//! Text after `#` on a line is ignored, as are blank lines.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_MAX_ROWS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<f64>,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads at most `max_rows` data lines into a dense matrix.
pub fn parse_libsvm<R: BufRead>(reader: R, max_rows: usize) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        if rows.len() >= max_rows {
            break;
        }
        let line = line.map_err(|e| perr(lineno, e.to_string()))?;
        let body = line.split('#').next().unwrap_or("");
        let mut toks = body.split_whitespace();
        let Some(label) = toks.next() else { continue };
        let label: f64 = label
            .parse()
            .map_err(|_| perr(lineno, format!("bad label '{label}'")))?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for t in toks {
            let (idx, val) = t
                .split_once(':')
                .ok_or_else(|| perr(lineno, format!("malformed token '{t}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(lineno, format!("bad index in '{t}'")))?;
            if idx == 0 {
                return Err(perr(lineno, "index 0 is not allowed"));
            }
            if idx <= last {
                return Err(perr(lineno, format!("index {idx} does not increase")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| perr(lineno, format!("bad value in '{t}'")))?;
            last = idx;
            row.push((idx, val));
        }
        width = width.max(last);
        labels.push(label);
        rows.push(row);
    }
    let mut data = vec![0.0; rows.len() * width];
    for (r, row) in rows.iter().enumerate() {
        for &(idx, val) in row {
            data[r * width + idx - 1] = val;
        }
    }
    Ok(Dataset {
        features: Matrix::new(rows.len(), width, data)?,
        labels,
    })
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), usize::MAX)
}

/// Writes nonzero entries with shortest round-trip float formatting.
pub fn to_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for (r, label) in data.labels.iter().enumerate() {
        write!(out, "{label}").unwrap();
        for (j, v) in data.features.row(r).iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{v}", j + 1).unwrap();
            }
        }
        out.push('\n');
    }
    out
}
