//! Outer-loop iteration bodies of the five kernels and the whole-kernel
//! operations built from them.
//!
//! Every body computes into registers or a thread-local buffer and then
//! stores final values, so re-running an iteration (a replicated vertex)
//! writes the same bits again. The whole-kernel functions are the bodies
//! run in index order, which makes the per-iteration decomposition exact
//! by construction.

use std::cell::RefCell;

use super::shared::{SharedVec, ValueSource};
use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, CsrMatrix};

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

fn with_scratch<R>(len: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    SCRATCH.with_borrow_mut(|buf| {
        if buf.len() < len {
            buf.resize(len, 0.0);
        }
        f(&mut buf[..len])
    })
}

/// Row-wise view into a lower-triangular CSC matrix: for row `i`, the
/// columns `k <= i` holding a nonzero and the value position of `(i, k)`.
#[derive(Debug, Clone)]
pub struct RowIndex {
    rowptr: Vec<usize>,
    col: Vec<usize>,
    pos: Vec<usize>,
}

impl RowIndex {
    pub fn new(l: &CscMatrix) -> Self {
        let n = l.nrows();
        let mut rowptr = vec![0usize; n + 1];
        for &r in l.rowidx() {
            rowptr[r + 1] += 1;
        }
        for i in 0..n {
            rowptr[i + 1] += rowptr[i];
        }
        let mut next = rowptr.clone();
        let mut col = vec![0; l.nnz()];
        let mut pos = vec![0; l.nnz()];
        for j in 0..l.ncols() {
            for p in l.col_range(j) {
                let r = l.rowidx()[p];
                col[next[r]] = j;
                pos[next[r]] = p;
                next[r] += 1;
            }
        }
        Self { rowptr, col, pos }
    }

    /// `(column, value position)` pairs of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.rowptr[i]..self.rowptr[i + 1];
        self.col[r.clone()]
            .iter()
            .copied()
            .zip(self.pos[r].iter().copied())
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.rowptr[i + 1] - self.rowptr[i]
    }
}

// ---------------------------------------------------------------------------
// iteration bodies

#[inline]
pub(crate) fn spmv_csr_row<X: ValueSource + ?Sized>(a: &CsrMatrix, x: &X, y: &SharedVec, i: usize) {
    let mut acc = 0.0;
    for p in a.row_range(i) {
        acc += a.values()[p] * x.value(a.colidx()[p]);
    }
    y.set(i, acc);
}

/// Column `j` scatter `y += A[:, j] * x[j]`.
#[inline]
pub(crate) fn spmv_csc_col<X: ValueSource + ?Sized>(a: &CscMatrix, x: &X, y: &SharedVec, j: usize) {
    let r = a.col_range(j);
    if r.is_empty() {
        return;
    }
    let xj = x.value(j);
    for p in r {
        y.add(a.rowidx()[p], a.values()[p] * xj);
    }
}

/// Forward substitution row `i`; entries right of the diagonal are ignored.
#[inline]
pub(crate) fn sptrsv_csr_row<V, B>(
    l: &CsrMatrix,
    vals: &V,
    b: &B,
    x: &SharedVec,
    i: usize,
    unit: bool,
) -> Result<()>
where
    V: ValueSource + ?Sized,
    B: ValueSource + ?Sized,
{
    let mut acc = b.value(i);
    let mut diag = 0.0;
    for p in l.row_range(i) {
        let c = l.colidx()[p];
        if c < i {
            acc -= vals.value(p) * x.get(c);
        } else {
            if c == i {
                diag = vals.value(p);
            }
            break;
        }
    }
    if unit {
        x.set(i, acc);
    } else {
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
        x.set(i, acc / diag);
    }
    Ok(())
}

/// Forward substitution row `i` on a lower CSC matrix, reading row `i`
/// through `rows`.
#[inline]
pub(crate) fn sptrsv_csc_row<V, B>(
    rows: &RowIndex,
    vals: &V,
    b: &B,
    x: &SharedVec,
    i: usize,
) -> Result<()>
where
    V: ValueSource + ?Sized,
    B: ValueSource + ?Sized,
{
    let mut acc = b.value(i);
    let mut diag = 0.0;
    for (k, p) in rows.row(i) {
        if k < i {
            acc -= vals.value(p) * x.get(k);
        } else {
            diag = vals.value(p);
        }
    }
    if diag == 0.0 {
        return Err(Error::ZeroDiagonal { index: i });
    }
    x.set(i, acc / diag);
    Ok(())
}

#[inline]
pub(crate) fn dscal_csr_row(a: &CsrMatrix, d: &[f64], out: &SharedVec, i: usize) {
    for p in a.row_range(i) {
        out.set(p, d[i] * a.values()[p] * d[a.colidx()[p]]);
    }
}

#[inline]
pub(crate) fn dscal_csc_col(a: &CscMatrix, d: &[f64], out: &SharedVec, j: usize) {
    for p in a.col_range(j) {
        out.set(p, d[a.rowidx()[p]] * a.values()[p] * d[j]);
    }
}

/// Left-looking IC(0) column `j` of a lower CSC pattern whose diagonal is
/// the first entry of every column. `input` holds the values to factor
/// (positions match `l`), `factor` receives L.
pub(crate) fn ic0_col<V: ValueSource + ?Sized>(
    l: &CscMatrix,
    rows: &RowIndex,
    input: &V,
    factor: &SharedVec,
    j: usize,
) -> Result<()> {
    let cr = l.col_range(j);
    let rowidx = l.rowidx();
    with_scratch(cr.len(), |tmp| {
        for (t, p) in cr.clone().enumerate() {
            tmp[t] = input.value(p);
        }
        for (k, pjk) in rows.row(j) {
            if k >= j {
                break;
            }
            let ljk = factor.get(pjk);
            let kend = l.colptr()[k + 1];
            let (mut q, mut t) = (pjk, 0);
            while q < kend && t < tmp.len() {
                let (rq, rt) = (rowidx[q], rowidx[cr.start + t]);
                if rq == rt {
                    tmp[t] -= factor.get(q) * ljk;
                    q += 1;
                    t += 1;
                } else if rq < rt {
                    q += 1;
                } else {
                    t += 1;
                }
            }
        }
        let pivot = tmp[0];
        if !(pivot > 0.0) {
            return Err(Error::Breakdown { column: j, pivot });
        }
        let s = pivot.sqrt();
        factor.set(cr.start, s);
        for t in 1..tmp.len() {
            factor.set(cr.start + t, tmp[t] / s);
        }
        Ok(())
    })
}

/// IKJ ILU(0) row `i` of a CSR pattern. `diagpos[k]` is the value position
/// of `(k, k)`. The result is the combined factor: strict lower part holds
/// unit-diagonal L, the rest holds U.
pub(crate) fn ilu0_row<V: ValueSource + ?Sized>(
    a: &CsrMatrix,
    diagpos: &[usize],
    input: &V,
    factor: &SharedVec,
    i: usize,
) -> Result<()> {
    let rr = a.row_range(i);
    let colidx = a.colidx();
    with_scratch(rr.len(), |tmp| {
        for (t, p) in rr.clone().enumerate() {
            tmp[t] = input.value(p);
        }
        for t in 0..tmp.len() {
            let k = colidx[rr.start + t];
            if k >= i {
                break;
            }
            tmp[t] /= factor.get(diagpos[k]);
            let m = tmp[t];
            let kend = a.rowptr()[k + 1];
            let (mut q, mut u) = (diagpos[k] + 1, t + 1);
            while q < kend && u < tmp.len() {
                let (cq, cu) = (colidx[q], colidx[rr.start + u]);
                if cq == cu {
                    tmp[u] -= m * factor.get(q);
                    q += 1;
                    u += 1;
                } else if cq < cu {
                    q += 1;
                } else {
                    u += 1;
                }
            }
        }
        if tmp[diagpos[i] - rr.start] == 0.0 {
            return Err(Error::ZeroPivot { row: i });
        }
        for (t, p) in rr.clone().enumerate() {
            factor.set(p, tmp[t]);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// whole-kernel operations

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_square(nrows: usize, ncols: usize) -> Result<()> {
    check_len(nrows, ncols)
}

pub fn spmv_csr(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(a.ncols(), x.len())?;
    let y = SharedVec::zeros(a.nrows());
    for i in 0..a.nrows() {
        spmv_csr_row(a, x, &y, i);
    }
    Ok(y.to_vec())
}

pub fn spmv_csc(a: &CscMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(a.ncols(), x.len())?;
    let y = SharedVec::zeros(a.nrows());
    for j in 0..a.ncols() {
        spmv_csc_col(a, x, &y, j);
    }
    Ok(y.to_vec())
}

/// Solves `L x = b` for lower-triangular CSR `L`.
pub fn sptrsv_csr(l: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(l.nrows(), l.ncols())?;
    check_len(l.nrows(), b.len())?;
    if (0..l.nrows()).any(|i| l.colidx()[l.row_range(i)].last().is_some_and(|&c| c > i)) {
        return Err(Error::InvalidMatrix(
            "matrix is not lower triangular".into(),
        ));
    }
    let x = SharedVec::zeros(l.nrows());
    for i in 0..l.nrows() {
        sptrsv_csr_row(l, l.values(), b, &x, i, false)?;
    }
    Ok(x.to_vec())
}

/// Solves `L x = b` for lower-triangular CSC `L`.
pub fn sptrsv_csc(l: &CscMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(l.nrows(), l.ncols())?;
    check_len(l.nrows(), b.len())?;
    if (0..l.ncols()).any(|j| l.rowidx()[l.col_range(j)].first().is_some_and(|&r| r < j)) {
        return Err(Error::InvalidMatrix(
            "matrix is not lower triangular".into(),
        ));
    }
    let rows = RowIndex::new(l);
    let x = SharedVec::zeros(l.nrows());
    for i in 0..l.nrows() {
        sptrsv_csc_row(&rows, l.values(), b, &x, i)?;
    }
    Ok(x.to_vec())
}

/// Checks that a square CSC matrix is lower triangular with its diagonal
/// stored first in every column.
pub(crate) fn check_lower_with_diagonal(l: &CscMatrix) -> Result<()> {
    check_square(l.nrows(), l.ncols())?;
    for j in 0..l.ncols() {
        let r = l.col_range(j);
        match l.rowidx()[r.clone()].first() {
            Some(&d) if d == j => {}
            Some(&d) if d < j => {
                return Err(Error::InvalidMatrix(
                    "matrix is not lower triangular".into(),
                ))
            }
            _ => return Err(Error::ZeroDiagonal { index: j }),
        }
    }
    Ok(())
}

/// Zero fill-in incomplete Cholesky of the lower triangle of an SPD matrix.
pub fn spic0(a_lower: &CscMatrix) -> Result<CscMatrix> {
    check_lower_with_diagonal(a_lower)?;
    let rows = RowIndex::new(a_lower);
    let factor = SharedVec::zeros(a_lower.nnz());
    for j in 0..a_lower.ncols() {
        ic0_col(a_lower, &rows, a_lower.values(), &factor, j)?;
    }
    CscMatrix::new(
        a_lower.nrows(),
        a_lower.ncols(),
        a_lower.colptr().to_vec(),
        a_lower.rowidx().to_vec(),
        factor.to_vec(),
    )
}

/// Diagonal positions of a square CSR matrix; a missing entry is reported
/// as a zero pivot.
pub(crate) fn csr_diagonal(a: &CsrMatrix) -> Result<Vec<usize>> {
    check_square(a.nrows(), a.ncols())?;
    a.diagonal_positions()
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(Error::ZeroPivot { row: i }))
        .collect()
}

/// Zero fill-in incomplete LU; returns the combined factor (unit L below
/// the diagonal, U on and above).
pub fn spilu0(a: &CsrMatrix) -> Result<CsrMatrix> {
    let diagpos = csr_diagonal(a)?;
    let factor = SharedVec::zeros(a.nnz());
    for i in 0..a.nrows() {
        ilu0_row(a, &diagpos, a.values(), &factor, i)?;
    }
    CsrMatrix::new(
        a.nrows(),
        a.ncols(),
        a.rowptr().to_vec(),
        a.colidx().to_vec(),
        factor.to_vec(),
    )
}

/// `d_i = 1 / sqrt(|a_ii|)`.
pub fn scaling_vector(diag: impl Iterator<Item = Option<f64>>) -> Result<Vec<f64>> {
    diag.enumerate()
        .map(|(i, v)| match v {
            Some(v) if v != 0.0 => Ok(1.0 / v.abs().sqrt()),
            _ => Err(Error::ZeroDiagonal { index: i }),
        })
        .collect()
}

/// Symmetric diagonal scaling `D A D` with `d_i = 1/sqrt(|A_ii|)`.
pub fn dscal_csr(a: &CsrMatrix) -> Result<(CsrMatrix, Vec<f64>)> {
    check_square(a.nrows(), a.ncols())?;
    let d = scaling_vector((0..a.nrows()).map(|i| a.get(i, i)))?;
    let out = SharedVec::zeros(a.nnz());
    for i in 0..a.nrows() {
        dscal_csr_row(a, &d, &out, i);
    }
    let m = CsrMatrix::new(
        a.nrows(),
        a.ncols(),
        a.rowptr().to_vec(),
        a.colidx().to_vec(),
        out.to_vec(),
    )?;
    Ok((m, d))
}

pub fn dscal_csc(a: &CscMatrix) -> Result<(CscMatrix, Vec<f64>)> {
    check_square(a.nrows(), a.ncols())?;
    let d = scaling_vector((0..a.nrows()).map(|i| a.get(i, i)))?;
    let out = SharedVec::zeros(a.nnz());
    for j in 0..a.ncols() {
        dscal_csc_col(a, &d, &out, j);
    }
    let m = CscMatrix::new(
        a.nrows(),
        a.ncols(),
        a.colptr().to_vec(),
        a.rowidx().to_vec(),
        out.to_vec(),
    )?;
    Ok((m, d))
}

/// Solves `L x = b` where `L` is the unit-diagonal strict lower part of a
/// combined ILU factor; entries on and above the diagonal are ignored.
pub fn sptrsv_unit_lower(lu: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(lu.nrows(), lu.ncols())?;
    check_len(lu.nrows(), b.len())?;
    let x = SharedVec::zeros(lu.nrows());
    for i in 0..lu.nrows() {
        sptrsv_csr_row(lu, lu.values(), b, &x, i, true)?;
    }
    Ok(x.to_vec())
}
