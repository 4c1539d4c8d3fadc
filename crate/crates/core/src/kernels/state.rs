use super::bodies::{self, RowIndex};
use super::combo::{ComboSpec, KernelKind, KernelTag};
use super::shared::SharedVec;
use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, CsrMatrix};

/// Matrices and input vectors bound for one combo. Factor workspaces live
/// in the state's output arrays so the state can be re-run after `reset`.
#[derive(Debug)]
pub(crate) enum Binding {
    TrsvTrsv {
        l: CsrMatrix,
        b: Vec<f64>,
    },
    SpmvTrsv {
        a: CsrMatrix,
        l: CsrMatrix,
        x: Vec<f64>,
    },
    DscalIlu {
        a: CsrMatrix,
        d: Vec<f64>,
        diagpos: Vec<usize>,
    },
    TrsvSpmv {
        l: CsrMatrix,
        a: CscMatrix,
        x: Vec<f64>,
    },
    Ic0Trsv {
        l: CscMatrix,
        rows: RowIndex,
        b: Vec<f64>,
    },
    IluTrsv {
        a: CsrMatrix,
        diagpos: Vec<usize>,
        b: Vec<f64>,
    },
    DscalIc0 {
        l: CscMatrix,
        rows: RowIndex,
        d: Vec<f64>,
    },
}

/// A kernel pair bound to concrete data.
///
/// `out1` is what the first kernel writes (a vector, a scaled matrix or a
/// factor, stored by value position) and `out2` what the second writes.
#[derive(Debug)]
pub struct KernelState {
    combo: ComboSpec,
    n: usize,
    size_a: usize,
    size_l: usize,
    bind: Binding,
    out1: SharedVec,
    out2: SharedVec,
}

/// Deterministic right-hand side used when none is given.
pub fn default_rhs(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 + (i % 17) as f64 / 17.0).collect()
}

impl KernelState {
    pub fn new(combo: ComboSpec, a: &CscMatrix) -> Result<Self> {
        Self::with_rhs(combo, a, &default_rhs(a.nrows()))
    }

    /// Binds `a` (full storage) to `combo`. `rhs` is the vector input of the
    /// first vector kernel (`b` or `x` in the combo's operation).
    pub fn with_rhs(combo: ComboSpec, a: &CscMatrix, rhs: &[f64]) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "matrix is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        let lower = a.lower_triangle()?;
        let (size_a, size_l) = (a.nnz(), lower.nnz());
        let rhs = rhs.to_vec();
        let (bind, len1, len2) = match combo.id {
            1 => (
                Binding::TrsvTrsv {
                    l: lower.to_csr(),
                    b: rhs,
                },
                n,
                n,
            ),
            2 => (
                Binding::SpmvTrsv {
                    a: a.to_csr(),
                    l: lower.to_csr(),
                    x: rhs,
                },
                n,
                n,
            ),
            3 => {
                let a = a.to_csr();
                let diagpos = bodies::csr_diagonal(&a)?;
                let d = bodies::scaling_vector(diagpos.iter().map(|&p| Some(a.values()[p])))?;
                let nnz = a.nnz();
                (Binding::DscalIlu { a, d, diagpos }, nnz, nnz)
            }
            4 => (
                Binding::TrsvSpmv {
                    l: lower.to_csr(),
                    a: a.clone(),
                    x: rhs,
                },
                n,
                n,
            ),
            5 => {
                let rows = RowIndex::new(&lower);
                let nnz = lower.nnz();
                (
                    Binding::Ic0Trsv {
                        l: lower,
                        rows,
                        b: rhs,
                    },
                    nnz,
                    n,
                )
            }
            6 => {
                let a = a.to_csr();
                let diagpos = bodies::csr_diagonal(&a)?;
                let nnz = a.nnz();
                (Binding::IluTrsv { a, diagpos, b: rhs }, nnz, n)
            }
            7 => {
                let rows = RowIndex::new(&lower);
                let d = bodies::scaling_vector(
                    (0..n).map(|j| Some(lower.values()[lower.col_range(j).start])),
                )?;
                let nnz = lower.nnz();
                (Binding::DscalIc0 { l: lower, rows, d }, nnz, nnz)
            }
            _ => return Err(Error::UnknownCombo(combo.id.to_string())),
        };
        Ok(Self {
            combo,
            n,
            size_a,
            size_l,
            bind,
            out1: SharedVec::zeros(len1),
            out2: SharedVec::zeros(len2),
        })
    }

    pub fn combo(&self) -> ComboSpec {
        self.combo
    }

    /// Iterations per kernel; both kernels of every combo have `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size_a(&self) -> usize {
        self.size_a
    }

    pub fn size_l(&self) -> usize {
        self.size_l
    }

    pub fn kind(&self, tag: KernelTag) -> KernelKind {
        self.combo.kind(tag)
    }

    pub(crate) fn binding(&self) -> &Binding {
        &self.bind
    }

    #[cfg(test)]
    pub(crate) fn out1(&self) -> &SharedVec {
        &self.out1
    }

    #[cfg(test)]
    pub(crate) fn out2(&self) -> &SharedVec {
        &self.out2
    }

    /// Clears both output arrays so the state can be executed again.
    pub fn reset(&self) {
        self.out1.fill(0.0);
        self.out2.fill(0.0);
    }

    /// Executes outer-loop iteration `i` of the tagged kernel.
    #[inline]
    pub fn run_iteration(&self, tag: KernelTag, i: usize) -> Result<()> {
        let (o1, o2) = (&self.out1, &self.out2);
        match (&self.bind, tag) {
            (Binding::TrsvTrsv { l, b }, KernelTag::First) => {
                bodies::sptrsv_csr_row(l, l.values(), b, o1, i, false)
            }
            (Binding::TrsvTrsv { l, .. }, KernelTag::Second) => {
                bodies::sptrsv_csr_row(l, l.values(), o1, o2, i, false)
            }
            (Binding::SpmvTrsv { a, x, .. }, KernelTag::First) => {
                bodies::spmv_csr_row(a, x, o1, i);
                Ok(())
            }
            (Binding::SpmvTrsv { l, .. }, KernelTag::Second) => {
                bodies::sptrsv_csr_row(l, l.values(), o1, o2, i, false)
            }
            (Binding::DscalIlu { a, d, .. }, KernelTag::First) => {
                bodies::dscal_csr_row(a, d, o1, i);
                Ok(())
            }
            (Binding::DscalIlu { a, diagpos, .. }, KernelTag::Second) => {
                bodies::ilu0_row(a, diagpos, o1, o2, i)
            }
            (Binding::TrsvSpmv { l, x, .. }, KernelTag::First) => {
                bodies::sptrsv_csr_row(l, l.values(), x, o1, i, false)
            }
            (Binding::TrsvSpmv { a, .. }, KernelTag::Second) => {
                bodies::spmv_csc_col(a, o1, o2, i);
                Ok(())
            }
            (Binding::Ic0Trsv { l, rows, .. }, KernelTag::First) => {
                bodies::ic0_col(l, rows, l.values(), o1, i)
            }
            (Binding::Ic0Trsv { rows, b, .. }, KernelTag::Second) => {
                bodies::sptrsv_csc_row(rows, o1, b, o2, i)
            }
            (Binding::IluTrsv { a, diagpos, .. }, KernelTag::First) => {
                bodies::ilu0_row(a, diagpos, a.values(), o1, i)
            }
            (Binding::IluTrsv { a, b, .. }, KernelTag::Second) => {
                bodies::sptrsv_csr_row(a, o1, b, o2, i, true)
            }
            (Binding::DscalIc0 { l, d, .. }, KernelTag::First) => {
                bodies::dscal_csc_col(l, d, o1, i);
                Ok(())
            }
            (Binding::DscalIc0 { l, rows, .. }, KernelTag::Second) => {
                bodies::ic0_col(l, rows, o1, o2, i)
            }
        }
    }

    /// Both outputs, `out1` followed by `out2`.
    pub fn outputs(&self) -> Vec<f64> {
        let mut v = self.out1.to_vec();
        v.extend(self.out2.to_vec());
        v
    }

    pub fn first_output(&self) -> Vec<f64> {
        self.out1.to_vec()
    }

    pub fn second_output(&self) -> Vec<f64> {
        self.out2.to_vec()
    }

    /// Sequential composed reference built from the whole-kernel
    /// operations, laid out like `outputs`.
    pub fn reference(&self) -> Result<Vec<f64>> {
        let (o1, o2) = match &self.bind {
            Binding::TrsvTrsv { l, b } => {
                let x = bodies::sptrsv_csr(l, b)?;
                let z = bodies::sptrsv_csr(l, &x)?;
                (x, z)
            }
            Binding::SpmvTrsv { a, l, x } => {
                let y = bodies::spmv_csr(a, x)?;
                let z = bodies::sptrsv_csr(l, &y)?;
                (y, z)
            }
            Binding::DscalIlu { a, .. } => {
                let (s, _) = bodies::dscal_csr(a)?;
                let f = bodies::spilu0(&s)?;
                (s.values().to_vec(), f.values().to_vec())
            }
            Binding::TrsvSpmv { l, a, x } => {
                let y = bodies::sptrsv_csr(l, x)?;
                let z = bodies::spmv_csc(a, &y)?;
                (y, z)
            }
            Binding::Ic0Trsv { l, b, .. } => {
                let f = bodies::spic0(l)?;
                let y = bodies::sptrsv_csc(&f, b)?;
                (f.values().to_vec(), y)
            }
            Binding::IluTrsv { a, b, .. } => {
                let f = bodies::spilu0(a)?;
                let y = bodies::sptrsv_unit_lower(&f, b)?;
                (f.values().to_vec(), y)
            }
            Binding::DscalIc0 { l, .. } => {
                let (s, _) = bodies::dscal_csc(l)?;
                let f = bodies::spic0(&s)?;
                (s.values().to_vec(), f.values().to_vec())
            }
        };
        let mut v = o1;
        v.extend(o2);
        Ok(v)
    }

    /// Runs kernel 1 then kernel 2 in index order on this state.
    pub fn run_sequential(&self) -> Result<()> {
        self.reset();
        for tag in [KernelTag::First, KernelTag::Second] {
            for i in 0..self.n {
                self.run_iteration(tag, i)?;
            }
        }
        Ok(())
    }
}
