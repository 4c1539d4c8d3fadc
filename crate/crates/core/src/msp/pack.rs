use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::Entry;
use crate::dag::DepDag;
use crate::kernels::KernelTag;

/// Execution order of entries inside a w-partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackMode {
    /// Each second-kernel entry runs as soon as its dependencies in the
    /// partition have run; chosen when the kernels share most data.
    Interleaved,
    /// All first-kernel entries, then all second-kernel entries.
    Separated,
}

impl PackMode {
    pub fn from_reuse(ratio: f64) -> Self {
        if ratio >= 1.0 {
            PackMode::Interleaved
        } else {
            PackMode::Separated
        }
    }
}

/// Orders the joint vertices `members` of one w-partition: a topological
/// order of the joint DAG restricted to them, ties broken by kernel
/// preference, then iteration index.
pub(crate) fn pack_partition(
    joint: &DepDag,
    n1: usize,
    members: &[usize],
    mode: PackMode,
) -> Vec<Entry> {
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let local = |v: usize| sorted.binary_search(&v).ok();
    let mut indeg = vec![0usize; sorted.len()];
    for (k, &v) in sorted.iter().enumerate() {
        indeg[k] = joint
            .predecessors(v)
            .iter()
            .filter(|&&u| local(u).is_some())
            .count();
    }
    // key: (kernel rank, iteration), smallest first
    let key = |v: usize| {
        let (tag, it) = if v < n1 { (0u8, v) } else { (1u8, v - n1) };
        let rank = match mode {
            PackMode::Separated => tag,
            PackMode::Interleaved => 1 - tag,
        };
        (rank, it, v)
    };
    let mut ready: BinaryHeap<Reverse<(u8, usize, usize)>> = sorted
        .iter()
        .enumerate()
        .filter(|&(k, _)| indeg[k] == 0)
        .map(|(_, &v)| Reverse(key(v)))
        .collect();
    let mut out = Vec::with_capacity(sorted.len());
    while let Some(Reverse((_, _, v))) = ready.pop() {
        out.push(Entry::from_joint(v, n1));
        for &x in joint.successors(v) {
            if let Some(k) = local(x) {
                indeg[k] -= 1;
                if indeg[k] == 0 {
                    ready.push(Reverse(key(x)));
                }
            }
        }
    }
    debug_assert_eq!(out.len(), sorted.len());
    out
}

impl Entry {
    pub(crate) fn from_joint(v: usize, n1: usize) -> Self {
        if v < n1 {
            Entry {
                tag: KernelTag::First,
                iter: v,
            }
        } else {
            Entry {
                tag: KernelTag::Second,
                iter: v - n1,
            }
        }
    }

    pub(crate) fn joint(self, n1: usize) -> usize {
        match self.tag {
            KernelTag::First => self.iter,
            KernelTag::Second => n1 + self.iter,
        }
    }
}
