//! Dependence DAGs of single kernels, the inter-kernel dependence matrix F,
//! wavefront levels and slack, and the reuse ratio.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Binding, ComboSpec, KernelKind, KernelState};
use crate::sparse::CscMatrix;

/// Iteration DAG of one kernel. An edge `u -> v` means iteration `v` reads
/// something iteration `u` writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepDag {
    succ_ptr: Vec<usize>,
    succ: Vec<usize>,
    pred_ptr: Vec<usize>,
    pred: Vec<usize>,
    cost: Vec<u64>,
}

fn compress(nvert: usize, pairs: &mut [(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    pairs.sort_unstable();
    let mut ptr = vec![0usize; nvert + 1];
    for &(a, _) in pairs.iter() {
        ptr[a + 1] += 1;
    }
    for v in 0..nvert {
        ptr[v + 1] += ptr[v];
    }
    (ptr, pairs.iter().map(|&(_, b)| b).collect())
}

impl DepDag {
    /// Builds a DAG from an edge list; duplicate edges are dropped.
    /// Panics if an endpoint is out of range or `cost.len()` differs.
    pub fn new(nvert: usize, edges: &[(usize, usize)], cost: Vec<u64>) -> Self {
        assert_eq!(cost.len(), nvert, "one cost per vertex");
        let mut fwd: Vec<(usize, usize)> = edges.to_vec();
        fwd.sort_unstable();
        fwd.dedup();
        assert!(
            fwd.iter().all(|&(u, v)| u < nvert && v < nvert),
            "edge endpoint out of range"
        );
        let mut bwd: Vec<(usize, usize)> = fwd.iter().map(|&(u, v)| (v, u)).collect();
        let (succ_ptr, succ) = compress(nvert, &mut fwd);
        let (pred_ptr, pred) = compress(nvert, &mut bwd);
        Self {
            succ_ptr,
            succ,
            pred_ptr,
            pred,
            cost,
        }
    }

    pub fn edgeless(cost: Vec<u64>) -> Self {
        Self::new(cost.len(), &[], cost)
    }

    pub fn nvert(&self) -> usize {
        self.cost.len()
    }

    pub fn nedges(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[self.succ_ptr[v]..self.succ_ptr[v + 1]]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[self.pred_ptr[v]..self.pred_ptr[v + 1]]
    }

    pub fn cost(&self, v: usize) -> u64 {
        self.cost[v]
    }

    pub fn costs(&self) -> &[u64] {
        &self.cost
    }

    pub fn total_cost(&self) -> u64 {
        self.cost.iter().sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nvert()).flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    /// Kahn order, smallest ready vertex first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.nvert())
            .map(|v| self.predecessors(v).len())
            .collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..self.nvert())
            .filter(|&v| indeg[v] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.nvert());
        while let Some(std::cmp::Reverse(u)) = ready.pop() {
            order.push(u);
            for &v in self.successors(u) {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(std::cmp::Reverse(v));
                }
            }
        }
        if order.len() == self.nvert() {
            Ok(order)
        } else {
            Err(Error::Cycle)
        }
    }

    /// A uniformly chosen ready vertex at every step.
    pub fn random_topological_order<R: Rng>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.nvert())
            .map(|v| self.predecessors(v).len())
            .collect();
        let mut ready: Vec<usize> = (0..self.nvert()).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.nvert());
        while !ready.is_empty() {
            let u = ready.swap_remove(rng.gen_range(0..ready.len()));
            order.push(u);
            for &v in self.successors(u) {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(v);
                }
            }
        }
        if order.len() == self.nvert() {
            Ok(order)
        } else {
            Err(Error::Cycle)
        }
    }

    /// Subgraph induced by `verts` (renumbered in the given order) and the
    /// mapping back to original ids.
    pub fn induced(&self, verts: &[usize]) -> DepDag {
        let mut local = vec![usize::MAX; self.nvert()];
        for (k, &v) in verts.iter().enumerate() {
            local[v] = k;
        }
        let mut edges = Vec::new();
        for (k, &v) in verts.iter().enumerate() {
            for &w in self.successors(v) {
                if local[w] != usize::MAX {
                    edges.push((k, local[w]));
                }
            }
        }
        DepDag::new(
            verts.len(),
            &edges,
            verts.iter().map(|&v| self.cost[v]).collect(),
        )
    }

    pub fn dump(&self) -> DagDump {
        DagDump {
            nvert: self.nvert(),
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
            cost: self.cost.clone(),
        }
    }
}

/// JSON form of a [`DepDag`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DagDump {
    pub nvert: usize,
    pub edges: Vec<[usize; 2]>,
    pub cost: Vec<u64>,
}

/// Cross-kernel dependence matrix F in CSR layout: row `i` lists the
/// first-kernel iterations that second-kernel iteration `i` reads from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterDep {
    ncols: usize,
    rowptr: Vec<usize>,
    col: Vec<usize>,
}

impl InterDep {
    /// `rows[i]` need not be sorted; duplicates are removed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut rowptr = Vec::with_capacity(rows.len() + 1);
        rowptr.push(0);
        let mut col = Vec::new();
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            assert!(r.iter().all(|&c| c < ncols), "F column out of range");
            col.extend(r);
            rowptr.push(col.len());
        }
        Self { ncols, rowptr, col }
    }

    pub fn nrows(&self) -> usize {
        self.rowptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col[self.rowptr[i]..self.rowptr[i + 1]]
    }

    /// For each first-kernel iteration, the second-kernel iterations that
    /// read from it.
    pub fn transpose(&self) -> Vec<Vec<usize>> {
        let mut t = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows() {
            for &j in self.row(i) {
                t[j].push(i);
            }
        }
        t
    }
}

/// Wavefront levels (1-based), heights in edges and the critical path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelInfo {
    pub level: Vec<usize>,
    pub height: Vec<usize>,
    pub critical_path: usize,
}

impl LevelInfo {
    /// `SN(v) = P - l(v) - height(v)`: wavefronts `v` can be postponed.
    pub fn slack(&self, v: usize) -> usize {
        self.critical_path - self.level[v] - self.height[v]
    }

    /// Vertices grouped by level, ascending inside each level.
    pub fn wavefronts(&self) -> Vec<Vec<usize>> {
        let mut w = vec![Vec::new(); self.critical_path];
        for (v, &l) in self.level.iter().enumerate() {
            w[l - 1].push(v);
        }
        w
    }
}

pub fn level_info(g: &DepDag) -> Result<LevelInfo> {
    let order = g.topological_order()?;
    let n = g.nvert();
    let mut level = vec![1usize; n];
    for &u in &order {
        for &v in g.successors(u) {
            level[v] = level[v].max(level[u] + 1);
        }
    }
    let mut height = vec![0usize; n];
    for &u in order.iter().rev() {
        for &v in g.successors(u) {
            height[u] = height[u].max(height[v] + 1);
        }
    }
    let critical_path = level.iter().copied().max().unwrap_or(0);
    Ok(LevelInfo {
        level,
        height,
        critical_path,
    })
}

/// Row counts of a CSC pattern, restricted to entries with `keep(row, col)`.
fn row_counts(m: &CscMatrix, keep: impl Fn(usize, usize) -> bool) -> Vec<u64> {
    let mut c = vec![0u64; m.nrows()];
    for j in 0..m.ncols() {
        for p in m.col_range(j) {
            let i = m.rowidx()[p];
            if keep(i, j) {
                c[i] += 1;
            }
        }
    }
    c
}

/// Nonzeros touched by each outer iteration of `kind` running over `m`
/// (full storage for SpMV, DSCAL and SpILU0; the lower triangle for
/// SpTRSV and SpIC0). Every cost is at least 1.
pub fn vertex_costs(kind: KernelKind, m: &CscMatrix) -> Vec<u64> {
    let n = m.ncols();
    let col_nnz = |j: usize| m.col_range(j).len() as u64;
    let costs: Vec<u64> = match kind {
        KernelKind::SpmvCsr | KernelKind::DscalCsr => row_counts(m, |_, _| true),
        KernelKind::SpmvCsc | KernelKind::DscalCsc => (0..n).map(col_nnz).collect(),
        KernelKind::SptrsvCsr | KernelKind::SptrsvCsc => row_counts(m, |i, j| j <= i),
        KernelKind::Spic0Csc => {
            // nnz(col j) plus, per update column k, the entries of column k
            // at or below row j
            let below = |k: usize, j: usize| {
                let r = m.col_range(k);
                let rows = &m.rowidx()[r];
                (rows.len() - rows.partition_point(|&x| x < j)) as u64
            };
            let mut c: Vec<u64> = (0..n).map(col_nnz).collect();
            for k in 0..n {
                for p in m.col_range(k) {
                    let j = m.rowidx()[p];
                    if j > k {
                        c[j] += below(k, j);
                    }
                }
            }
            c
        }
        KernelKind::Spilu0Csr => {
            // nnz(row i) plus, per pivot row k < i, the entries of row k
            // right of its diagonal
            let upper = row_counts(m, |i, j| j > i);
            let mut c = row_counts(m, |_, _| true);
            for k in 0..n {
                for p in m.col_range(k) {
                    let i = m.rowidx()[p];
                    if i > k {
                        c[i] += upper[k];
                    }
                }
            }
            c
        }
    };
    costs.into_iter().map(|c| c.max(1)).collect()
}

/// Iteration DAG of `kind` over `m`: edgeless for SpMV and DSCAL,
/// otherwise `j -> i` for every strictly sub-diagonal nonzero `(i, j)`.
pub fn intra_dag(kind: KernelKind, m: &CscMatrix) -> DepDag {
    let cost = vertex_costs(kind, m);
    if !kind.loop_carried() {
        return DepDag::edgeless(cost);
    }
    let mut edges = Vec::new();
    for j in 0..m.ncols() {
        for p in m.col_range(j) {
            let i = m.rowidx()[p];
            if i > j {
                edges.push((j, i));
            }
        }
    }
    DepDag::new(m.ncols(), &edges, cost)
}

fn rows_of_lower(l: &CscMatrix) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); l.nrows()];
    for (i, j, _) in l.triplets() {
        if j <= i {
            rows[i].push(j);
        }
    }
    rows
}

/// F for a bound kernel pair, derived from the matrix patterns.
pub fn inter_dag(state: &KernelState) -> InterDep {
    let n = state.n();
    let diagonal = || (0..n).map(|i| vec![i]).collect::<Vec<_>>();
    let rows = match state.binding() {
        Binding::TrsvTrsv { .. }
        | Binding::SpmvTrsv { .. }
        | Binding::DscalIlu { .. }
        | Binding::IluTrsv { .. }
        | Binding::DscalIc0 { .. } => diagonal(),
        Binding::TrsvSpmv { a, .. } => return column_guard_f(a),
        Binding::Ic0Trsv { l, .. } => rows_of_lower(l),
    };
    InterDep::from_rows(n, rows)
}

/// F of a column-scatter consumer: iteration `j` reads `y[j]` only when
/// column `j` of `a` holds a nonzero.
pub fn column_guard_f(a: &CscMatrix) -> InterDep {
    let rows = (0..a.ncols())
        .map(|j| {
            if a.col_range(j).is_empty() {
                vec![]
            } else {
                vec![j]
            }
        })
        .collect();
    InterDep::from_rows(a.ncols(), rows)
}

/// The two iteration DAGs of a bound kernel pair.
pub fn kernel_dags(state: &KernelState) -> (DepDag, DepDag) {
    let combo = state.combo();
    let (m1, m2): (CscMatrix, CscMatrix) = match state.binding() {
        Binding::TrsvTrsv { l, .. } => (l.to_csc(), l.to_csc()),
        Binding::SpmvTrsv { a, l, .. } => (a.to_csc(), l.to_csc()),
        Binding::DscalIlu { a, .. } => (a.to_csc(), a.to_csc()),
        Binding::TrsvSpmv { l, a, .. } => (l.to_csc(), a.clone()),
        Binding::Ic0Trsv { l, .. } => (l.clone(), l.clone()),
        Binding::IluTrsv { a, .. } => (a.to_csc(), a.to_csc()),
        Binding::DscalIc0 { l, .. } => (l.clone(), l.clone()),
    };
    (intra_dag(combo.first, &m1), intra_dag(combo.second, &m2))
}

/// Everything the inspector needs about a kernel pair.
#[derive(Debug, Clone)]
pub struct PairDags {
    pub g1: DepDag,
    pub g2: DepDag,
    pub f: InterDep,
}

impl PairDags {
    pub fn build(state: &KernelState) -> Self {
        let (g1, g2) = kernel_dags(state);
        Self {
            g1,
            g2,
            f: inter_dag(state),
        }
    }

    pub fn joint(&self) -> DepDag {
        joint_dag(&self.g1, &self.g2, &self.f)
    }
}

/// Union of both DAGs (second kernel offset by `|V1|`) plus `j -> |V1|+i`
/// for every `F_ij`.
pub fn joint_dag(g1: &DepDag, g2: &DepDag, f: &InterDep) -> DepDag {
    let n1 = g1.nvert();
    let mut edges: Vec<(usize, usize)> = g1.edges().collect();
    edges.extend(g2.edges().map(|(u, v)| (u + n1, v + n1)));
    for i in 0..f.nrows() {
        edges.extend(f.row(i).iter().map(|&j| (j, n1 + i)));
    }
    let mut cost = g1.costs().to_vec();
    cost.extend_from_slice(g2.costs());
    DepDag::new(n1 + g2.nvert(), &edges, cost)
}

/// Ratio of common to maximum memory accesses of the two kernels. At or
/// above 1 the kernels share enough data that interleaving pays off.
pub fn compute_reuse(combo: ComboSpec, n: usize, size_l: usize, size_a: usize) -> f64 {
    let (n, l, a) = (n as f64, size_l as f64, size_a as f64);
    let (num, den) = match combo.id {
        1 => (2.0 * n + 2.0 * l, (2.0 * n + l).max(l + 2.0 * n)),
        2 | 4 => (2.0 * n, (2.0 * n + l).max(a + 2.0 * n)),
        3 => (2.0 * a, a.max(a + 2.0 * n)),
        5 | 7 => (2.0 * l, l.max(l + 2.0 * n)),
        6 => (2.0 * a, a.max(l + 2.0 * n)),
        _ => unreachable!("combo ids are 1..=7"),
    };
    num / den
}

/// Reuse ratio of a bound pair.
pub fn state_reuse(state: &KernelState) -> f64 {
    compute_reuse(state.combo(), state.n(), state.size_l(), state.size_a())
}

#[cfg(test)]
mod tests;
