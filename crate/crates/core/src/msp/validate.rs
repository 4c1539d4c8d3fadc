use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Entry, FusedPartitioning};
use crate::dag::{joint_dag, DepDag, InterDep};
use crate::kernels::KernelTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// An iteration never appears.
    Coverage,
    /// An entry is out of range, a second-kernel iteration appears twice,
    /// or a partition holds the same entry twice.
    Duplicate,
    /// A dependency sits later in the same w-partition.
    Ordering,
    /// A dependency is neither earlier in the w-partition nor in an earlier
    /// s-partition.
    CrossPartition,
    /// A pair depends on the other kernel outside itself and outside
    /// earlier s-partitions.
    PairNotSelfContained,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub s: usize,
    pub w: usize,
    pub entry: Option<Entry>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at s{} w{}", self.kind, self.s, self.w)?;
        if let Some(e) = self.entry {
            write!(f, " entry {e}")?;
        }
        Ok(())
    }
}

/// Checks a fused schedule against the joint dependence relation.
pub fn validate_fused_partitioning(
    v: &FusedPartitioning,
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
) -> Vec<Violation> {
    let joint = joint_dag(g1, g2, f);
    let n1 = g1.nvert();
    let nj = joint.nvert();
    let mut out = Vec::new();
    // (s, w, position) of every copy
    let mut copies: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nj];
    for (s, sp) in v.spartitions.iter().enumerate() {
        for (w, wp) in sp.iter().enumerate() {
            for (p, &e) in wp.iter().enumerate() {
                let bound = match e.tag {
                    KernelTag::First => n1,
                    KernelTag::Second => g2.nvert(),
                };
                if e.iter >= bound {
                    out.push(Violation {
                        kind: ViolationKind::Duplicate,
                        s,
                        w,
                        entry: Some(e),
                    });
                    continue;
                }
                let j = e.joint(n1);
                if copies[j].iter().any(|&(s2, w2, _)| (s2, w2) == (s, w)) {
                    out.push(Violation {
                        kind: ViolationKind::Duplicate,
                        s,
                        w,
                        entry: Some(e),
                    });
                    continue;
                }
                copies[j].push((s, w, p));
            }
        }
    }
    for (j, c) in copies.iter().enumerate() {
        let e = Entry::from_joint(j, n1);
        if c.is_empty() {
            out.push(Violation {
                kind: ViolationKind::Coverage,
                s: 0,
                w: 0,
                entry: Some(e),
            });
        } else if c.len() > 1 && e.tag == KernelTag::Second {
            let (s, w, _) = c[1];
            out.push(Violation {
                kind: ViolationKind::Duplicate,
                s,
                w,
                entry: Some(e),
            });
        }
    }
    for (j, c) in copies.iter().enumerate() {
        for &(s, w, p) in c {
            for &u in joint.predecessors(j) {
                let ok = copies[u]
                    .iter()
                    .any(|&(su, wu, pu)| su < s || (su == s && wu == w && pu < p));
                if ok {
                    continue;
                }
                let later_here = copies[u].iter().any(|&(su, wu, _)| su == s && wu == w);
                let kind = if later_here {
                    ViolationKind::Ordering
                } else {
                    ViolationKind::CrossPartition
                };
                out.push(Violation {
                    kind,
                    s,
                    w,
                    entry: Some(Entry::from_joint(j, n1)),
                });
            }
        }
    }
    let first_s: Vec<usize> = copies
        .iter()
        .map(|c| c.iter().map(|x| x.0).min().unwrap_or(usize::MAX))
        .collect();
    for &(a, b) in &v.pairs {
        if !pair_contained(v, a, b, &joint, n1, &first_s) {
            out.push(Violation {
                kind: ViolationKind::PairNotSelfContained,
                s: a.0,
                w: a.1,
                entry: None,
            });
        }
    }
    out
}

/// True when every cross-kernel dependency of the pair's entries resolves
/// inside the pair or in an s-partition before the dependent entry.
/// `a` and `b` are `(s, w)` coordinates.
pub fn self_contained_check(
    v: &FusedPartitioning,
    a: (usize, usize),
    b: (usize, usize),
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
) -> bool {
    let joint = joint_dag(g1, g2, f);
    let n1 = g1.nvert();
    let mut first_s = vec![usize::MAX; joint.nvert()];
    for (s, sp) in v.spartitions.iter().enumerate() {
        for e in sp.iter().flatten() {
            let j = e.joint(n1);
            first_s[j] = first_s[j].min(s);
        }
    }
    pair_contained(v, a, b, &joint, n1, &first_s)
}

fn pair_contained(
    v: &FusedPartitioning,
    a: (usize, usize),
    b: (usize, usize),
    joint: &DepDag,
    n1: usize,
    first_s: &[usize],
) -> bool {
    let get = |(s, w): (usize, usize)| v.spartitions.get(s).and_then(|sp| sp.get(w));
    let (Some(pa), Some(pb)) = (get(a), get(b)) else {
        return false;
    };
    let inside: HashSet<usize> = pa.iter().chain(pb.iter()).map(|e| e.joint(n1)).collect();
    for (s, part) in [(a.0, pa), (b.0, pb)] {
        for e in part {
            let j = e.joint(n1);
            for &u in joint.predecessors(j) {
                let cross = (u < n1) != (j < n1);
                if cross && !inside.contains(&u) && first_s[u] >= s {
                    return false;
                }
            }
        }
    }
    true
}
