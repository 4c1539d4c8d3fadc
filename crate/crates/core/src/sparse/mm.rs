//! Matrix Market coordinate I/O and permutation files.
//!
//! Only `coordinate real general|symmetric` is accepted. Indices are 1-based
//! on disk and 0-based in memory; symmetric files are expanded to full
//! storage and duplicate coordinates are summed.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::CscMatrix;
use crate::error::{Error, Result};

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CscMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text)
}

pub fn parse_matrix_market(text: &str) -> Result<CscMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("bad header `{header}`"),
        });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Unsupported(format!("layout `{}`", fields[2])));
    }
    if fields[3] != "real" {
        return Err(Error::Unsupported(format!("field `{}`", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Unsupported(format!("symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            line: lineno + 1,
            msg: format!("{msg}: `{line}`"),
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(bad("expected `rows cols nnz`"));
                }
                let p = |t: &str| t.parse::<usize>().map_err(|_| bad("bad size line"));
                let (m, n, nnz) = (p(toks[0])?, p(toks[1])?, p(toks[2])?);
                size = Some((m, n, nnz));
                trip.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some((m, n, _)) => {
                if toks.len() != 3 {
                    return Err(bad("expected `row col value`"));
                }
                let i: usize = toks[0].parse().map_err(|_| bad("bad row index"))?;
                let j: usize = toks[1].parse().map_err(|_| bad("bad column index"))?;
                let v: f64 = toks[2].parse().map_err(|_| bad("bad value"))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::IndexOutOfBounds {
                        row: i,
                        col: j,
                        nrows: m,
                        ncols: n,
                    });
                }
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let declared = if symmetric {
        trip.iter().filter(|t| t.0 >= t.1).count()
    } else {
        trip.len()
    };
    if declared != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("declared {nnz} entries, found {declared}"),
        });
    }
    CscMatrix::from_triplets(m, n, &trip)
}

/// Serializes as `coordinate real general`. Values use the shortest
/// representation that parses back to the same bits.
pub fn format_matrix_market(a: &CscMatrix) -> String {
    let mut out = String::with_capacity(32 * a.nnz() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.nrows(), a.ncols(), a.nnz()));
    for (r, c, v) in a.triplets() {
        out.push_str(&format!("{} {} {}\n", r + 1, c + 1, v));
    }
    out
}

pub fn write_matrix_market(a: &CscMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(format_matrix_market(a).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// One 0-based index per line; must be a permutation of `0..n`.
pub fn read_permutation(path: impl AsRef<Path>, n: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut perm = Vec::with_capacity(n);
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        perm.push(line.parse::<usize>().map_err(|_| Error::Parse {
            line: k + 1,
            msg: format!("bad permutation entry `{line}`"),
        })?);
    }
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in &perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidMatrix(
                "permutation is not a bijection".into(),
            ));
        }
    }
    Ok(perm)
}
