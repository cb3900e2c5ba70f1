//! Matrix Market coordinate format (`real general`) reading and writing.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Renders a sparse matrix; entries in column-major order, 1-based indices,
/// values with 17 significant digits.
pub fn to_string(m: &CscMatrix<f64>) -> String {
    let mut out = String::with_capacity(32 * (m.nnz() + 2));
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

pub fn dense_to_string(m: &DMatrix<f64>) -> String {
    to_string(&CscMatrix::from_dense(m))
}

pub fn from_str(text: &str) -> Result<CscMatrix<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty Matrix Market file".into(),
    })?;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate") {
        return Err(Error::Parse {
            line: 1,
            message: "expected a coordinate Matrix Market header".into(),
        });
    }
    if !lower.contains("real") && !lower.contains("integer") {
        return Err(Error::Parse {
            line: 1,
            message: "only real or integer fields are supported".into(),
        });
    }
    let symmetric = lower.contains("symmetric");

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err("size line needs `rows cols nnz`".into()));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| parse_err(format!("bad size field `{s}`: {e}")))
                };
                size = Some((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
            }
            Some((nrows, ncols, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err("entry line needs `row col value`".into()));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|e| parse_err(format!("bad row index: {e}")))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|e| parse_err(format!("bad column index: {e}")))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| parse_err(format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(parse_err(format!("entry ({i}, {j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nrows, ncols, _) = size.ok_or(Error::Parse {
        line: 1,
        message: "missing size line".into(),
    })?;
    CscMatrix::from_triplets(nrows, ncols, &triplets)
}

pub fn write(path: &Path, m: &CscMatrix<f64>) -> Result<()> {
    std::fs::write(path, to_string(m))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<CscMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    from_str(&text)
}
