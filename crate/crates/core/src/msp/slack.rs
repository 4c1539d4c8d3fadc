use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use super::work::Work;
use crate::dag::{level_info, DepDag};

/// Partition slack numbers (by w-partition id) and the slack vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlackTable {
    pub partition_sn: Vec<usize>,
    /// Joint ids of slack vertices, ascending.
    pub slack: Vec<usize>,
}

/// Quotient DAG over w-partitions: `P -> Q` when an entry of `Q` depends
/// on a vertex that `Q` does not hold itself and whose copy in `P` runs in
/// an earlier s-partition.
pub(crate) fn quotient(work: &Work) -> DepDag {
    let mut edges = Vec::new();
    for (q, members) in work.wparts.iter().enumerate() {
        for &v in members {
            for &u in work.joint.predecessors(v) {
                if work.copies[u].contains(&q) {
                    continue;
                }
                for &p in &work.copies[u] {
                    if work.s(p) < work.s(q) {
                        edges.push((p, q));
                    }
                }
            }
        }
    }
    DepDag::new(work.wparts.len(), &edges, vec![1; work.wparts.len()])
}

pub(crate) fn slack_info(work: &Work) -> SlackTable {
    let q = quotient(work);
    let li = level_info(&q).expect("s-partition order makes the quotient acyclic");
    let partition_sn: Vec<usize> = (0..q.nvert()).map(|w| li.slack(w)).collect();
    let mut slack: Vec<usize> = (0..work.joint.nvert())
        .filter(|&v| work.copies[v].len() == 1 && partition_sn[work.copies[v][0]] > 0)
        .collect();
    slack.sort_unstable();
    SlackTable {
        partition_sn,
        slack,
    }
}

/// Merges pairs whose partitions both have zero slack into the one with
/// the smaller s-partition, single pass in pair order. A merge that would
/// break a dependence is skipped. Returns the number of merges.
pub(crate) fn merge(work: &mut Work, table: &SlackTable) -> usize {
    let mut merged = 0;
    for k in 0..work.pairs.len() {
        let (a, b) = work.pairs[k];
        if table.partition_sn[a] != 0 || table.partition_sn[b] != 0 {
            continue;
        }
        let (dst, src) = if work.s(a) <= work.s(b) {
            (a, b)
        } else {
            (b, a)
        };
        if work.wparts[src].is_empty() || work.try_merge(src, dst) {
            merged += 1;
        }
    }
    work.drop_empty_spartitions();
    merged
}

/// Balance outcome for one w-partition at the time it was processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRecord {
    /// Final coordinates; `None` when the w-partition ended up empty.
    pub s: Option<usize>,
    pub w: Option<usize>,
    pub max_diff: u64,
    pub eps: f64,
    pub pool_exhausted: bool,
}

struct Group {
    members: Vec<usize>,
    cost: u64,
    home: usize,
    lo: usize,
    hi: usize,
    placed: bool,
}

/// Raw record keyed by w-partition id, resolved to coordinates later.
pub(crate) struct RawRecord {
    pub wpart: usize,
    pub max_diff: u64,
    pub eps: f64,
    pub pool_exhausted: bool,
}

fn slack_groups(work: &Work, table: &SlackTable) -> Vec<Group> {
    // union-find over slack-internal edges within one home partition
    let mut parent: Vec<usize> = (0..work.joint.nvert()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut in_s = vec![false; work.joint.nvert()];
    for &v in &table.slack {
        in_s[v] = true;
    }
    for &v in &table.slack {
        for &u in work.joint.predecessors(v) {
            if in_s[u] && work.copies[u][0] == work.copies[v][0] {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let last = work.sparts.len() - 1;
    let mut slot = vec![usize::MAX; work.joint.nvert()];
    let mut groups: Vec<Group> = Vec::new();
    for &v in &table.slack {
        let r = find(&mut parent, v);
        if slot[r] == usize::MAX {
            let home = work.copies[v][0];
            let lo = work.s(home);
            slot[r] = groups.len();
            groups.push(Group {
                members: Vec::new(),
                cost: 0,
                home,
                lo,
                hi: (lo + table.partition_sn[home]).min(last),
                placed: false,
            });
        }
        let g = &mut groups[slot[r]];
        g.members.push(v);
        g.cost += work.joint.cost(v);
    }
    groups
}

/// Pulls slack vertices out, then rebalances every w-partition whose
/// cost trails the heaviest in its s-partition by more than `eps`:
/// first from its pair partner's slack, then from any slack group whose
/// range covers the s-partition. Leftover groups whose range ends go to
/// the cheapest valid w-partition, else back home.
pub(crate) fn slack_assign(work: &mut Work, table: &SlackTable) -> (f64, Vec<RawRecord>) {
    let mut groups = slack_groups(work, table);
    for &v in &table.slack {
        work.unplace(v);
    }
    let eps = 0.001 * work.cost.iter().sum::<u64>() as f64;
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); work.wparts.len()];
    for &(a, b) in &work.pairs {
        partners[a].push(b);
        partners[b].push(a);
    }
    let mut by_cost: Vec<usize> = (0..groups.len()).collect();
    by_cost.sort_by_key(|&g| (Reverse(groups[g].cost), g));

    let mut records = Vec::new();
    let nspart = work.sparts.len();
    for i in 0..nspart {
        let ws = work.sparts[i].clone();
        for &w in &ws {
            let diff = |work: &Work| work.max_cost(i) as f64 - work.cost[w] as f64;
            if diff(work) <= eps {
                records.push(RawRecord {
                    wpart: w,
                    max_diff: work.max_cost(i) - work.cost[w],
                    eps,
                    pool_exhausted: false,
                });
                continue;
            }
            let from_pair = |g: &Group| partners[w].contains(&g.home);
            let in_range = |g: &Group| g.lo <= i && i <= g.hi;
            for pool in 0..2 {
                for &gi in &by_cost {
                    if diff(work) <= eps {
                        break;
                    }
                    let g = &groups[gi];
                    let eligible = if pool == 0 { from_pair(g) } else { in_range(g) };
                    if !g.placed && eligible && work.try_place(&g.members, w) {
                        groups[gi].placed = true;
                    }
                }
            }
            let exhausted = diff(work) <= eps
                || !by_cost.iter().any(|&gi| {
                    let g = &groups[gi];
                    !g.placed && (from_pair(g) || in_range(g)) && probe(work, &g.members, w)
                });
            records.push(RawRecord {
                wpart: w,
                max_diff: work.max_cost(i) - work.cost[w],
                eps,
                pool_exhausted: exhausted,
            });
        }
        // assign_even for groups that cannot be postponed past s_i
        for &gi in &by_cost {
            let g = &groups[gi];
            if g.placed || !(g.hi == i || i + 1 == nspart) {
                continue;
            }
            let mut targets = work.sparts[i].clone();
            targets.sort_by_key(|&w| (work.cost[w], w));
            let members = g.members.clone();
            let home = g.home;
            let done = targets.into_iter().any(|w| work.try_place(&members, w));
            if !done {
                let ok = work.try_place(&members, home);
                debug_assert!(ok, "home placement is always consistent");
                if !ok {
                    for &v in &members {
                        work.home[v] = None;
                        work.insert(v, home);
                    }
                }
            }
            groups[gi].placed = true;
        }
    }
    (eps, records)
}

/// Whether `members` could be placed into `w` right now.
fn probe(work: &mut Work, members: &[usize], w: usize) -> bool {
    let homes: Vec<Option<usize>> = members.iter().map(|&v| work.home[v]).collect();
    if work.try_place(members, w) {
        for (&v, h) in members.iter().zip(homes) {
            work.remove(v, w);
            work.home[v] = h;
        }
        true
    } else {
        false
    }
}
