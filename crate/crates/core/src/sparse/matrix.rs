use crate::error::{Error, Result};

/// Compressed sparse column matrix, 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
}

/// Compressed sparse row matrix, 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    rowptr: Vec<usize>,
    colidx: Vec<usize>,
    values: Vec<f64>,
}

/// Checks the shared invariants of a compressed layout (pointer array over
/// `major` slices, strictly increasing minor indices below `minor`).
fn check_compressed(
    major: usize,
    minor: usize,
    ptr: &[usize],
    idx: &[usize],
    nvals: usize,
) -> Result<()> {
    if ptr.len() != major + 1 {
        return Err(Error::InvalidMatrix(format!(
            "pointer array has length {}, expected {}",
            ptr.len(),
            major + 1
        )));
    }
    if ptr[0] != 0 || ptr[major] != idx.len() || idx.len() != nvals {
        return Err(Error::InvalidMatrix(
            "pointer bounds disagree with nnz".into(),
        ));
    }
    for s in 0..major {
        if ptr[s] > ptr[s + 1] {
            return Err(Error::InvalidMatrix(format!(
                "pointer array decreases at {s}"
            )));
        }
        let slice = &idx[ptr[s]..ptr[s + 1]];
        if slice.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMatrix(format!(
                "indices of slice {s} not strictly increasing"
            )));
        }
        if slice.last().is_some_and(|&i| i >= minor) {
            return Err(Error::InvalidMatrix(format!(
                "index out of range in slice {s}"
            )));
        }
    }
    Ok(())
}

/// Builds a compressed layout from (major, minor, value) triplets.
/// Duplicates are summed.
fn compress(
    major: usize,
    mut trip: Vec<(usize, usize, f64)>,
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    trip.sort_by_key(|t| (t.0, t.1));
    let mut ptr = vec![0usize; major + 1];
    let mut idx = Vec::with_capacity(trip.len());
    let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
    let mut last: Option<(usize, usize)> = None;
    for (ma, mi, v) in trip {
        if last == Some((ma, mi)) {
            *vals.last_mut().unwrap() += v;
            continue;
        }
        last = Some((ma, mi));
        ptr[ma + 1] += 1;
        idx.push(mi);
        vals.push(v);
    }
    for s in 0..major {
        ptr[s + 1] += ptr[s];
    }
    (ptr, idx, vals)
}

/// Transposes a compressed layout; output slices come out sorted.
fn transpose_layout(
    major: usize,
    minor: usize,
    ptr: &[usize],
    idx: &[usize],
    vals: &[f64],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let nnz = idx.len();
    let mut tptr = vec![0usize; minor + 1];
    for &i in idx {
        tptr[i + 1] += 1;
    }
    for s in 0..minor {
        tptr[s + 1] += tptr[s];
    }
    let mut next = tptr.clone();
    let mut tidx = vec![0usize; nnz];
    let mut tvals = vec![0.0; nnz];
    for s in 0..major {
        for p in ptr[s]..ptr[s + 1] {
            let dst = next[idx[p]];
            next[idx[p]] += 1;
            tidx[dst] = s;
            tvals[dst] = vals[p];
        }
    }
    (tptr, tidx, tvals)
}

impl CscMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        colptr: Vec<usize>,
        rowidx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_compressed(ncols, nrows, &colptr, &rowidx, values.len())?;
        Ok(Self {
            nrows,
            ncols,
            colptr,
            rowidx,
            values,
        })
    }

    /// Assembles from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        let (colptr, rowidx, values) =
            compress(ncols, triplets.iter().map(|&(r, c, v)| (c, r, v)).collect());
        Ok(Self {
            nrows,
            ncols,
            colptr,
            rowidx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowidx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.rowidx.len()
    }
    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }
    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Range of value positions belonging to column `j`.
    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.colptr[j]..self.colptr[j + 1]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let r = self.col_range(col);
        self.rowidx[r.clone()]
            .binary_search(&row)
            .ok()
            .map(|k| self.values[r.start + k])
    }

    /// All entries in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.ncols)
            .flat_map(|j| self.col_range(j).map(move |p| (p, j)))
            .map(|(p, j)| (self.rowidx[p], j, self.values[p]))
            .collect()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let (rowptr, colidx, values) = transpose_layout(
            self.ncols,
            self.nrows,
            &self.colptr,
            &self.rowidx,
            &self.values,
        );
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rowptr,
            colidx,
            values,
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let (colptr, rowidx, values) = transpose_layout(
            self.ncols,
            self.nrows,
            &self.colptr,
            &self.rowidx,
            &self.values,
        );
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            colptr,
            rowidx,
            values,
        }
    }

    /// Lower triangle including the diagonal. Every diagonal entry must be
    /// present and nonzero.
    pub fn lower_triangle(&self) -> Result<CscMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: self.ncols,
            });
        }
        let mut colptr = Vec::with_capacity(self.ncols + 1);
        let mut rowidx = Vec::new();
        let mut values = Vec::new();
        colptr.push(0);
        for j in 0..self.ncols {
            let r = self.col_range(j);
            let start = r.start + self.rowidx[r.clone()].partition_point(|&i| i < j);
            if start == r.end || self.rowidx[start] != j || self.values[start] == 0.0 {
                return Err(Error::ZeroDiagonal { index: j });
            }
            rowidx.extend_from_slice(&self.rowidx[start..r.end]);
            values.extend_from_slice(&self.values[start..r.end]);
            colptr.push(rowidx.len());
        }
        Ok(CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            colptr,
            rowidx,
            values,
        })
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// Symmetric permutation `P A P^T`: entry (i, j) moves to
    /// (inv[i], inv[j]) where `perm[new] = old`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<CscMatrix> {
        let n = self.nrows;
        if !self.is_square() || perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv[old] != usize::MAX {
                return Err(Error::InvalidMatrix(
                    "permutation is not a bijection".into(),
                ));
            }
            inv[old] = new;
        }
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (inv[r], inv[c], v))
            .collect();
        CscMatrix::from_triplets(n, n, &trip)
    }

    /// Dense row-major copy, for tests and small oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        rowptr: Vec<usize>,
        colidx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_compressed(nrows, ncols, &rowptr, &colidx, values.len())?;
        Ok(Self {
            nrows,
            ncols,
            rowptr,
            colidx,
            values,
        })
    }

    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        Ok(CscMatrix::from_triplets(nrows, ncols, triplets)?.to_csr())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.colidx.len()
    }
    pub fn rowptr(&self) -> &[usize] {
        &self.rowptr
    }
    pub fn colidx(&self) -> &[usize] {
        &self.colidx
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.rowptr[i]..self.rowptr[i + 1]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let r = self.row_range(row);
        self.colidx[r.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| self.values[r.start + k])
    }

    /// All entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|i| self.row_range(i).map(move |p| (i, p)))
            .map(|(i, p)| (i, self.colidx[p], self.values[p]))
            .collect()
    }

    pub fn to_csc(&self) -> CscMatrix {
        let (colptr, rowidx, values) = transpose_layout(
            self.nrows,
            self.ncols,
            &self.rowptr,
            &self.colidx,
            &self.values,
        );
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            colptr,
            rowidx,
            values,
        }
    }

    /// Position of the diagonal entry of every row, if present.
    pub fn diagonal_positions(&self) -> Vec<Option<usize>> {
        (0..self.nrows)
            .map(|i| {
                let r = self.row_range(i);
                self.colidx[r.clone()]
                    .binary_search(&i)
                    .ok()
                    .map(|k| r.start + k)
            })
            .collect()
    }
}
