//! Load-balanced level coarsening: splits one DAG into barrier-separated
//! s-partitions of up to `r` independent, cost-balanced w-partitions.
//!
//! Wavefronts are grouped into windows greedily. The next wavefront joins
//! the current window when the heaviest bin of the merged window is no
//! heavier than the current heaviest bin plus the heaviest bin of the
//! wavefront on its own; that is, when merging saves a barrier without
//! lengthening the critical work. Inside a window, connected components
//! are packed into at most `r` bins, largest first, each into the lightest
//! bin.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::dag::{level_info, DepDag};
use crate::error::Result;

/// `parts[i][j]` is the vertex list of w-partition `j` in s-partition `i`,
/// ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPartitioning {
    pub parts: Vec<Vec<Vec<usize>>>,
    /// Largest number of w-partitions in any s-partition.
    pub k: usize,
    /// Wavefront window `[lb, ub)` (1-based levels) of each s-partition.
    pub bounds: Vec<(usize, usize)>,
}

impl HPartitioning {
    pub fn num_spartitions(&self) -> usize {
        self.parts.len()
    }

    /// `(s, w)` of every vertex.
    pub fn locate(&self, nvert: usize) -> Vec<(usize, usize)> {
        let mut loc = vec![(usize::MAX, usize::MAX); nvert];
        for (s, sp) in self.parts.iter().enumerate() {
            for (w, wp) in sp.iter().enumerate() {
                for &v in wp {
                    loc[v] = (s, w);
                }
            }
        }
        loc
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// The smaller root survives, which keeps results order independent.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Connected components (undirected, restricted to `verts`) as
/// `(cost, vertices ascending)`, ordered by smallest vertex.
pub(crate) fn components(
    g: &DepDag,
    verts: &[usize],
    cost: impl Fn(usize) -> u64,
) -> Vec<(u64, Vec<usize>)> {
    let mut sorted = verts.to_vec();
    sorted.sort_unstable();
    let local = |v: usize| sorted.binary_search(&v).ok();
    let mut dsu = Dsu::new(sorted.len());
    for (k, &v) in sorted.iter().enumerate() {
        for &p in g.predecessors(v) {
            if let Some(q) = local(p) {
                dsu.union(k, q);
            }
        }
    }
    let mut slot = vec![usize::MAX; sorted.len()];
    let mut out: Vec<(u64, Vec<usize>)> = Vec::new();
    for (k, &v) in sorted.iter().enumerate() {
        let r = dsu.find(k);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push((0, Vec::new()));
        }
        let c = &mut out[slot[r]];
        c.0 += cost(v);
        c.1.push(v);
    }
    out
}

/// Longest-processing-time packing of `items` (cost, payload index) into
/// at most `r` bins. Returns per-bin item indices; empty bins are dropped.
pub(crate) fn lpt(costs: &[u64], r: usize) -> Vec<Vec<usize>> {
    let r = r.max(1);
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by_key(|&i| (Reverse(costs[i]), i));
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = (0..r).map(|b| Reverse((0, b))).collect();
    let mut bins = vec![Vec::new(); r];
    for i in order {
        let Reverse((load, b)) = heap.pop().expect("r >= 1");
        bins[b].push(i);
        heap.push(Reverse((load + costs[i], b)));
    }
    bins.retain(|b| !b.is_empty());
    bins
}

fn max_bin(costs: &[u64], r: usize) -> u64 {
    lpt(costs, r)
        .iter()
        .map(|b| b.iter().map(|&i| costs[i]).sum())
        .max()
        .unwrap_or(0)
}

/// Packs the components of `verts` into at most `r` w-partitions, ordered
/// by smallest vertex, vertices ascending.
pub(crate) fn pack_window(
    g: &DepDag,
    verts: &[usize],
    r: usize,
    cost: impl Fn(usize) -> u64,
) -> Vec<Vec<usize>> {
    let comps = components(g, verts, cost);
    let costs: Vec<u64> = comps.iter().map(|c| c.0).collect();
    let mut parts: Vec<Vec<usize>> = lpt(&costs, r)
        .into_iter()
        .map(|b| {
            let mut w: Vec<usize> = b.iter().flat_map(|&i| comps[i].1.iter().copied()).collect();
            w.sort_unstable();
            w
        })
        .collect();
    parts.sort_by_key(|w| w[0]);
    parts
}

pub fn lbc_partition(g: &DepDag, r: usize) -> Result<HPartitioning> {
    let r = r.max(1);
    if g.nvert() == 0 {
        return Ok(HPartitioning {
            parts: Vec::new(),
            k: 0,
            bounds: Vec::new(),
        });
    }
    let waves = level_info(g)?.wavefronts();
    let cost = |v: usize| g.cost(v);
    let wave_max: Vec<u64> = waves
        .iter()
        .map(|w| max_bin(&w.iter().map(|&v| cost(v)).collect::<Vec<_>>(), r))
        .collect();

    let mut windows: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let mut current: Vec<usize> = waves[0].clone();
    let mut current_max = wave_max[0];
    for l in 1..waves.len() {
        let mut merged = current.clone();
        merged.extend_from_slice(&waves[l]);
        let comp_costs: Vec<u64> = components(g, &merged, cost).iter().map(|c| c.0).collect();
        let merged_max = max_bin(&comp_costs, r);
        if merged_max <= current_max + wave_max[l] {
            current = merged;
            current_max = merged_max;
        } else {
            windows.push((start, l));
            start = l;
            current = waves[l].clone();
            current_max = wave_max[l];
        }
    }
    windows.push((start, waves.len()));

    let mut parts = Vec::with_capacity(windows.len());
    for &(lo, hi) in &windows {
        let verts: Vec<usize> = waves[lo..hi].iter().flatten().copied().collect();
        parts.push(pack_window(g, &verts, r, cost));
    }
    let k = parts.iter().map(Vec::len).max().unwrap_or(0);
    Ok(HPartitioning {
        parts,
        k,
        bounds: windows.iter().map(|&(lo, hi)| (lo + 1, hi + 1)).collect(),
    })
}
