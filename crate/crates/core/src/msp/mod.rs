//! Multi-sparse DAG partitioning: turns two iteration DAGs and their
//! cross-kernel dependencies into one fused schedule.
//!
//! The steps run in order:
//! 1. partition the head DAG with LBC and pair every head w-partition with
//!    the iterations of the other kernel it feeds or needs;
//! 2. merge pairs without slack, then use vertices with slack to even out
//!    w-partition costs;
//! 3. pack each w-partition's entries, interleaved or kernel by kernel
//!    depending on the reuse ratio.

mod pack;
mod pairing;
mod slack;
mod validate;
mod work;

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use pack::PackMode;
pub use pairing::{choose_head, Closure};
pub use slack::{BalanceRecord, SlackTable};
pub use validate::{self_contained_check, validate_fused_partitioning, Violation, ViolationKind};

use crate::dag::{joint_dag, DepDag, InterDep};
use crate::error::Result;
use crate::kernels::KernelTag;
use work::Work;

/// One scheduled iteration. Serialized as `[tag, iter]` with tag 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entry {
    pub tag: KernelTag,
    pub iter: usize,
}

impl Entry {
    pub fn first(iter: usize) -> Self {
        Entry {
            tag: KernelTag::First,
            iter,
        }
    }

    pub fn second(iter: usize) -> Self {
        Entry {
            tag: KernelTag::Second,
            iter,
        }
    }
}

impl fmt::Display for Entry {
    /// First-kernel entries print with a trailing underscore: `5_` vs `5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            KernelTag::First => write!(f, "{}_", self.iter),
            KernelTag::Second => write!(f, "{}", self.iter),
        }
    }
}

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.tag.index() + 1, self.iter).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (tag, iter) = <(u8, usize)>::deserialize(d)?;
        let tag = match tag {
            1 => KernelTag::First,
            2 => KernelTag::Second,
            t => {
                return Err(D::Error::custom(format!(
                    "kernel tag must be 1 or 2, got {t}"
                )))
            }
        };
        Ok(Entry { tag, iter })
    }
}

/// Inspector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MspOptions {
    /// Maximum w-partitions per LBC s-partition, normally the thread count.
    pub r: usize,
    pub reuse_ratio: f64,
    /// Overrides the packing the reuse ratio would pick.
    pub pack: Option<PackMode>,
    pub closure: Closure,
}

impl MspOptions {
    pub fn new(r: usize, reuse_ratio: f64) -> Self {
        Self {
            r,
            reuse_ratio,
            pack: None,
            closure: Closure::Incremental,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MspStats {
    /// 1 or 2: which DAG LBC partitioned first.
    pub head: u8,
    pub closure: Closure,
    pub lbc_spartitions: usize,
    pub paired_spartitions: usize,
    pub merged_pairs: usize,
    pub slack_vertices: usize,
    pub entries: usize,
    pub redundancy_threshold: usize,
    pub eps: f64,
    pub reuse_ratio: f64,
    pub packing: PackMode,
    pub balance: Vec<BalanceRecord>,
}

/// The fused schedule: s-partitions run in order with a barrier between
/// them; the w-partitions of one s-partition are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedPartitioning {
    /// False when pairing replicated too much; run the kernels unfused.
    pub fusion: bool,
    pub spartitions: Vec<Vec<Vec<Entry>>>,
    /// `(s, w)` coordinates of paired w-partitions; both sides coincide
    /// after a merge.
    pub pairs: Vec<((usize, usize), (usize, usize))>,
    pub stats: MspStats,
}

impl FusedPartitioning {
    pub fn num_spartitions(&self) -> usize {
        self.spartitions.len()
    }

    pub fn num_entries(&self) -> usize {
        self.spartitions.iter().flatten().map(Vec::len).sum()
    }

    pub fn packing(&self) -> PackMode {
        self.stats.packing
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Balance check from the recorded outcomes: every processed
    /// w-partition ends within `eps` of the heaviest one, or no eligible
    /// slack was left to move into it.
    pub fn balance_ok(&self) -> bool {
        self.stats
            .balance
            .iter()
            .all(|b| b.max_diff as f64 <= b.eps || b.pool_exhausted)
    }
}

/// Runs the full inspector on `g1 -> g2` with dependencies `f`.
pub fn msp(g1: &DepDag, g2: &DepDag, f: &InterDep, opts: &MspOptions) -> Result<FusedPartitioning> {
    let r = opts.r.max(1);
    let n1 = g1.nvert();
    let joint = joint_dag(g1, g2, f);
    let mut work = Work::new(&joint, n1, 0);

    let head = choose_head(g1, g2);
    let lbc_spartitions = match head {
        KernelTag::Second => pairing::backward(&mut work, g1, g2, f, r, opts.closure)?,
        KernelTag::First => pairing::forward(&mut work, g1, g2, f, r)?,
    };
    let paired_spartitions = work.sparts.len();
    let entries = work.total_entries();
    let threshold = 2 * (n1 + g2.nvert());
    let packing = opts.pack.unwrap_or(PackMode::from_reuse(opts.reuse_ratio));
    let mut stats = MspStats {
        head: head.index() as u8 + 1,
        closure: opts.closure,
        lbc_spartitions,
        paired_spartitions,
        merged_pairs: 0,
        slack_vertices: 0,
        entries,
        redundancy_threshold: threshold,
        eps: 0.0,
        reuse_ratio: opts.reuse_ratio,
        packing,
        balance: Vec::new(),
    };
    if entries > threshold {
        work.drop_empty_wpartitions();
        return Ok(finish(&work, false, packing, stats, Vec::new()));
    }

    let table = slack::slack_info(&work);
    stats.merged_pairs = slack::merge(&mut work, &table);
    stats.slack_vertices = table.slack.len();
    let (eps, raw) = slack::slack_assign(&mut work, &table);
    stats.eps = eps;
    work.drop_empty_wpartitions();
    Ok(finish(&work, true, packing, stats, raw))
}

fn finish(
    work: &Work,
    fusion: bool,
    packing: PackMode,
    mut stats: MspStats,
    raw: Vec<slack::RawRecord>,
) -> FusedPartitioning {
    let mut coord = vec![None; work.wparts.len()];
    for (s, ws) in work.sparts.iter().enumerate() {
        for (w, &id) in ws.iter().enumerate() {
            coord[id] = Some((s, w));
        }
    }
    let spartitions = work
        .sparts
        .iter()
        .map(|ws| {
            ws.iter()
                .map(|&id| pack::pack_partition(work.joint, work.n1, &work.wparts[id], packing))
                .collect()
        })
        .collect();
    let pairs = work
        .pairs
        .iter()
        .filter_map(|&(a, b)| match (coord[a], coord[b]) {
            (Some(x), Some(y)) => Some((x, y)),
            (Some(x), None) | (None, Some(x)) => Some((x, x)),
            (None, None) => None,
        })
        .collect();
    stats.balance = raw
        .into_iter()
        .map(|r| BalanceRecord {
            s: coord[r.wpart].map(|c| c.0),
            w: coord[r.wpart].map(|c| c.1),
            max_diff: r.max_diff,
            eps: r.eps,
            pool_exhausted: r.pool_exhausted,
        })
        .collect();
    FusedPartitioning {
        fusion,
        spartitions,
        pairs,
        stats,
    }
}

/// Slack table of the partitioning right after pairing; exposed for
/// inspection and tests.
pub fn slack_after_pairing(
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
    r: usize,
) -> Result<(Vec<Vec<Vec<Entry>>>, Vec<Vec<usize>>)> {
    let joint = joint_dag(g1, g2, f);
    let n1 = g1.nvert();
    let mut work = Work::new(&joint, n1, 0);
    match choose_head(g1, g2) {
        KernelTag::Second => pairing::backward(&mut work, g1, g2, f, r, Closure::Incremental)?,
        KernelTag::First => pairing::forward(&mut work, g1, g2, f, r)?,
    };
    let table = slack::slack_info(&work);
    let parts = work
        .sparts
        .iter()
        .map(|ws| {
            ws.iter()
                .map(|&id| pack::pack_partition(&joint, n1, &work.wparts[id], PackMode::Separated))
                .collect()
        })
        .collect();
    let sn = work
        .sparts
        .iter()
        .map(|ws| ws.iter().map(|&id| table.partition_sn[id]).collect())
        .collect();
    Ok((parts, sn))
}
