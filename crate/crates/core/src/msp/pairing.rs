use serde::{Deserialize, Serialize};

use super::work::Work;
use crate::dag::{DepDag, InterDep};
use crate::error::Result;
use crate::kernels::KernelTag;
use crate::lbc::{lbc_partition, pack_window};

/// The DAG partitioned first. G2 when it has edges, otherwise G1.
pub fn choose_head(_g1: &DepDag, g2: &DepDag) -> KernelTag {
    if g2.nedges() > 0 {
        KernelTag::Second
    } else {
        KernelTag::First
    }
}

/// How far the backward BFS into G1 goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    /// Stop at G1 vertices already placed in an earlier s-partition.
    #[default]
    Incremental,
    /// Full transitive closure for every head w-partition.
    Full,
}

/// Backward BFS over G1 predecessors from `seeds`, skipping `placed`.
fn closure(
    g1: &DepDag,
    seeds: impl IntoIterator<Item = usize>,
    placed: &[bool],
    mark: &mut [u32],
    stamp: u32,
) -> Vec<usize> {
    let mut stack: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for s in seeds {
        if !placed[s] && mark[s] != stamp {
            mark[s] = stamp;
            stack.push(s);
        }
    }
    while let Some(v) = stack.pop() {
        out.push(v);
        for &u in g1.predecessors(v) {
            if !placed[u] && mark[u] != stamp {
                mark[u] = stamp;
                stack.push(u);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Head G2: T_ij (G1 closure of H_ij's F rows) at s_i, H_ij at s_{i+1}.
/// Returns the number of LBC s-partitions.
pub(crate) fn backward(
    work: &mut Work,
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
    r: usize,
    mode: Closure,
) -> Result<usize> {
    let n1 = work.n1;
    let h = lbc_partition(g2, r)?;
    let mut placed = vec![false; n1];
    let never = vec![false; n1];
    let mut mark = vec![0u32; n1];
    let mut stamp = 0;
    for (i, sp) in h.parts.iter().enumerate() {
        let mut level_t = Vec::new();
        for hw in sp {
            stamp += 1;
            let seeds = hw.iter().flat_map(|&l| f.row(l).iter().copied());
            let skip = match mode {
                Closure::Incremental => &placed,
                Closure::Full => &never,
            };
            let t = closure(g1, seeds, skip, &mut mark, stamp);
            let tid = work.add_wpart(i, t.iter().copied());
            let hid = work.add_wpart(i + 1, hw.iter().map(|&l| n1 + l));
            work.pairs.push((tid, hid));
            level_t.extend(t);
        }
        for v in level_t {
            placed[v] = true;
        }
    }
    // G1 vertices no second-kernel iteration needs: run them last
    let rest: Vec<usize> = (0..n1).filter(|&v| work.copies[v].is_empty()).collect();
    if !rest.is_empty() {
        let sub = g1.induced(&rest);
        let hr = lbc_partition(&sub, r)?;
        let base = work.sparts.len();
        for (i, sp) in hr.parts.iter().enumerate() {
            for w in sp {
                work.add_wpart(base + i, w.iter().map(|&k| rest[k]));
            }
        }
    }
    Ok(h.num_spartitions())
}

/// Head G1 (G2 edgeless): H_ij at s_i; the second-kernel iterations fed
/// only by H_ij form T_ij, the rest go to U of the w-partition holding
/// their latest dependency; both at s_{i+1}.
pub(crate) fn forward(
    work: &mut Work,
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
    r: usize,
) -> Result<usize> {
    let n1 = work.n1;
    let h = lbc_partition(g1, r)?;
    let loc = h.locate(n1);
    let mut hids: Vec<Vec<usize>> = Vec::new();
    for (i, sp) in h.parts.iter().enumerate() {
        hids.push(
            sp.iter()
                .map(|hw| work.add_wpart(i, hw.iter().copied()))
                .collect(),
        );
    }
    let mut t: Vec<Vec<Vec<usize>>> = h
        .parts
        .iter()
        .map(|sp| vec![Vec::new(); sp.len()])
        .collect();
    let mut u = t.clone();
    let mut unreached = Vec::new();
    for x in 0..g2.nvert() {
        let deps = f.row(x);
        let Some(&first) = deps.first() else {
            unreached.push(x);
            continue;
        };
        let home = loc[first];
        if deps.iter().all(|&d| loc[d] == home) {
            t[home.0][home.1].push(x);
        } else {
            let latest = deps
                .iter()
                .map(|&d| loc[d])
                .max_by_key(|&(s, w)| (s, std::cmp::Reverse(w)))
                .expect("nonempty");
            u[latest.0][latest.1].push(x);
        }
    }
    for i in 0..h.parts.len() {
        for j in 0..h.parts[i].len() {
            let tid = work.add_wpart(i + 1, t[i][j].iter().map(|&x| n1 + x));
            work.pairs.push((hids[i][j], tid));
        }
        for j in 0..h.parts[i].len() {
            if !u[i][j].is_empty() {
                work.add_wpart(i + 1, u[i][j].iter().map(|&x| n1 + x));
            }
        }
    }
    if !unreached.is_empty() {
        let sub = g2.induced(&unreached);
        let local: Vec<usize> = (0..unreached.len()).collect();
        for w in pack_window(&sub, &local, r, |k| sub.cost(k)) {
            work.add_wpart(0, w.iter().map(|&k| n1 + unreached[k]));
        }
    }
    Ok(h.num_spartitions())
}
