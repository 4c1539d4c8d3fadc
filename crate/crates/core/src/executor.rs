//! Runs schedules on a fixed pool of scoped threads.
//!
//! Every executor reduces to the same shape: a sequence of s-partitions
//! separated by barriers, each holding w-partitions that workers claim
//! from a shared counter and run entry by entry on one thread.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dag::{joint_dag, kernel_dags, level_info, DepDag, InterDep};
use crate::error::{Error, Result};
use crate::kernels::{KernelState, KernelTag};
use crate::lbc::{lbc_partition, lpt};
use crate::msp::{Entry, FusedPartitioning, PackMode};

/// Flattened schedule. W-partition `w` of s-partition `s` is
/// `entries[w_ptr[w]..w_ptr[w + 1]]` for `w` in `s_ptr[s]..s_ptr[s + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedSchedule {
    pub variant: PackMode,
    /// False means run the kernels unfused.
    pub fusion: bool,
    pub s_ptr: Vec<usize>,
    pub w_ptr: Vec<usize>,
    /// Separated variant: first second-kernel entry of each w-partition.
    pub k2_start: Vec<usize>,
    pub entries: Vec<Entry>,
}

impl FusedSchedule {
    pub fn num_spartitions(&self) -> usize {
        self.s_ptr.len() - 1
    }

    pub fn num_wpartitions(&self) -> usize {
        self.w_ptr.len() - 1
    }

    fn wpart(&self, w: usize) -> &[Entry] {
        &self.entries[self.w_ptr[w]..self.w_ptr[w + 1]]
    }

    fn from_parts(parts: &[Vec<Vec<Entry>>], variant: PackMode, fusion: bool) -> Self {
        let mut s_ptr = vec![0];
        let mut w_ptr = vec![0];
        let mut k2_start = Vec::new();
        let mut entries = Vec::new();
        for sp in parts {
            for wp in sp {
                match variant {
                    PackMode::Separated => {
                        // first-kernel entries never depend on second-kernel
                        // ones, so a stable split keeps a valid order
                        entries.extend(wp.iter().filter(|e| e.tag == KernelTag::First));
                        k2_start.push(entries.len());
                        entries.extend(wp.iter().filter(|e| e.tag == KernelTag::Second));
                    }
                    PackMode::Interleaved => {
                        entries.extend_from_slice(wp);
                        k2_start.push(entries.len());
                    }
                }
                w_ptr.push(entries.len());
            }
            s_ptr.push(w_ptr.len() - 1);
        }
        FusedSchedule {
            variant,
            fusion,
            s_ptr,
            w_ptr,
            k2_start,
            entries,
        }
    }
}

/// Flattens a validated partitioning; separated iff `reuse_ratio < 1`.
pub fn compile_schedule(v: &FusedPartitioning, reuse_ratio: f64) -> Result<FusedSchedule> {
    compile_schedule_with(v, PackMode::from_reuse(reuse_ratio))
}

/// Like [`compile_schedule`] with an explicit variant.
pub fn compile_schedule_with(v: &FusedPartitioning, variant: PackMode) -> Result<FusedSchedule> {
    if v.spartitions.iter().any(|sp| sp.iter().any(Vec::is_empty)) {
        return Err(Error::InvalidSchedule("empty w-partition".into()));
    }
    Ok(FusedSchedule::from_parts(&v.spartitions, variant, v.fusion))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecStats {
    pub wall_ns: u64,
    pub barriers: usize,
    pub threads: usize,
    /// Busy time per worker.
    pub busy_ns: Vec<u64>,
    /// Per s-partition: slowest and fastest w-partition time.
    pub wpart_ns: Vec<(u64, u64)>,
    /// Sum over s-partitions of max minus mean worker busy time.
    pub imbalance_ns: u64,
    /// Whether the fused executor fell back to the unfused one.
    pub fell_back: bool,
}

impl ExecStats {
    /// Imbalance as a share of wall time.
    pub fn imbalance(&self) -> f64 {
        if self.wall_ns == 0 {
            0.0
        } else {
            self.imbalance_ns as f64 / self.wall_ns as f64
        }
    }
}

fn run_wpart(sched: &FusedSchedule, w: usize, state: &KernelState) -> Result<()> {
    match sched.variant {
        PackMode::Separated => {
            let (a, m, b) = (sched.w_ptr[w], sched.k2_start[w], sched.w_ptr[w + 1]);
            for e in &sched.entries[a..m] {
                state.run_iteration(KernelTag::First, e.iter)?;
            }
            for e in &sched.entries[m..b] {
                state.run_iteration(KernelTag::Second, e.iter)?;
            }
        }
        PackMode::Interleaved => {
            for e in sched.wpart(w) {
                state.run_iteration(e.tag, e.iter)?;
            }
        }
    }
    Ok(())
}

fn elapsed_ns(t: Instant) -> u64 {
    t.elapsed().as_nanos() as u64
}

/// The common engine: ignores the fusion flag.
fn run_schedule(sched: &FusedSchedule, state: &KernelState, nthreads: usize) -> Result<ExecStats> {
    let nthreads = nthreads.max(1);
    let ns = sched.num_spartitions();
    state.reset();
    let start = Instant::now();
    if nthreads == 1 {
        let mut wpart_ns = Vec::with_capacity(ns);
        for s in 0..ns {
            let (mut hi, mut lo) = (0, u64::MAX);
            for w in sched.s_ptr[s]..sched.s_ptr[s + 1] {
                let t = Instant::now();
                run_wpart(sched, w, state)?;
                let d = elapsed_ns(t);
                hi = hi.max(d);
                lo = lo.min(d);
            }
            wpart_ns.push((hi, lo.min(hi)));
        }
        let wall = elapsed_ns(start);
        return Ok(ExecStats {
            wall_ns: wall,
            barriers: ns.saturating_sub(1),
            threads: 1,
            busy_ns: vec![wall],
            wpart_ns,
            imbalance_ns: 0,
            fell_back: false,
        });
    }

    let claims: Vec<AtomicUsize> = (0..ns).map(|s| AtomicUsize::new(sched.s_ptr[s])).collect();
    let barrier = Barrier::new(nthreads);
    let stop = AtomicBool::new(false);
    let first_err: Mutex<Option<Error>> = Mutex::new(None);
    // per thread: per s-partition busy time, slowest and fastest w-partition
    let per_thread: Vec<Vec<(u64, u64, u64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..nthreads)
            .map(|_| {
                let (claims, barrier, stop, first_err) = (&claims, &barrier, &stop, &first_err);
                scope.spawn(move || {
                    let mut rec = Vec::with_capacity(ns);
                    for s in 0..ns {
                        let end = sched.s_ptr[s + 1];
                        let (mut busy, mut hi, mut lo) = (0, 0, u64::MAX);
                        loop {
                            let w = claims[s].fetch_add(1, Ordering::Relaxed);
                            if w >= end || stop.load(Ordering::Relaxed) {
                                break;
                            }
                            let t = Instant::now();
                            let r = run_wpart(sched, w, state);
                            let d = elapsed_ns(t);
                            busy += d;
                            hi = hi.max(d);
                            lo = lo.min(d);
                            if let Err(e) = r {
                                first_err
                                    .lock()
                                    .expect("no panics while locked")
                                    .get_or_insert(e);
                                stop.store(true, Ordering::Relaxed);
                                break;
                            }
                        }
                        rec.push((busy, hi, lo));
                        barrier.wait();
                        if stop.load(Ordering::Relaxed) {
                            break;
                        }
                    }
                    rec
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let wall = elapsed_ns(start);
    if let Some(e) = first_err.into_inner().expect("no panics while locked") {
        return Err(e);
    }
    let mut wpart_ns = Vec::with_capacity(ns);
    let mut imbalance = 0;
    for s in 0..ns {
        let busy: Vec<u64> = per_thread.iter().map(|r| r[s].0).collect();
        let max = *busy.iter().max().unwrap_or(&0);
        let mean = busy.iter().sum::<u64>() / nthreads as u64;
        imbalance += max - mean;
        let hi = per_thread.iter().map(|r| r[s].1).max().unwrap_or(0);
        let lo = per_thread.iter().map(|r| r[s].2).min().unwrap_or(0);
        wpart_ns.push((hi, lo.min(hi)));
    }
    Ok(ExecStats {
        wall_ns: wall,
        barriers: ns.saturating_sub(1),
        threads: nthreads,
        busy_ns: per_thread
            .iter()
            .map(|r| r.iter().map(|x| x.0).sum())
            .collect(),
        wpart_ns,
        imbalance_ns: imbalance,
        fell_back: false,
    })
}

/// Runs a fused schedule; falls back to [`execute_unfused`] when fusion
/// was rejected.
pub fn execute_fused(
    sched: &FusedSchedule,
    state: &KernelState,
    nthreads: usize,
) -> Result<ExecStats> {
    if !sched.fusion {
        let (g1, g2) = kernel_dags(state);
        let mut st = execute_unfused(&g1, &g2, state, nthreads)?;
        st.fell_back = true;
        return Ok(st);
    }
    run_schedule(sched, state, nthreads)
}

/// Kernel 1 then kernel 2 with the plain sequential loops.
pub fn execute_sequential(state: &KernelState) -> Result<ExecStats> {
    let start = Instant::now();
    state.run_sequential()?;
    let wall = elapsed_ns(start);
    Ok(ExecStats {
        wall_ns: wall,
        barriers: 0,
        threads: 1,
        busy_ns: vec![wall],
        wpart_ns: Vec::new(),
        imbalance_ns: 0,
        fell_back: false,
    })
}

/// Orders each w-partition by (level, index), a topological order.
fn ordered(parts: Vec<Vec<Vec<usize>>>, level: &[usize], tag: KernelTag) -> Vec<Vec<Vec<Entry>>> {
    parts
        .into_iter()
        .map(|sp| {
            sp.into_iter()
                .map(|mut w| {
                    w.sort_unstable_by_key(|&v| (level[v], v));
                    w.into_iter().map(|v| Entry { tag, iter: v }).collect()
                })
                .collect()
        })
        .collect()
}

/// Schedule of each kernel under its own LBC partitioning (one wavefront
/// when edgeless), kernel 1 first, with a barrier in between.
pub fn unfused_schedule(g1: &DepDag, g2: &DepDag, nthreads: usize) -> Result<FusedSchedule> {
    let mut parts = Vec::new();
    for (g, tag) in [(g1, KernelTag::First), (g2, KernelTag::Second)] {
        let level = level_info(g)?.level;
        parts.extend(ordered(lbc_partition(g, nthreads)?.parts, &level, tag));
    }
    Ok(FusedSchedule::from_parts(
        &parts,
        PackMode::Interleaved,
        true,
    ))
}

pub fn execute_unfused(
    g1: &DepDag,
    g2: &DepDag,
    state: &KernelState,
    nthreads: usize,
) -> Result<ExecStats> {
    run_schedule(&unfused_schedule(g1, g2, nthreads)?, state, nthreads)
}

/// One s-partition per joint-DAG wavefront, its vertices spread over
/// `nthreads` w-partitions by cost.
pub fn joint_wavefront_schedule(
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
    nthreads: usize,
) -> Result<FusedSchedule> {
    let joint = joint_dag(g1, g2, f);
    let n1 = g1.nvert();
    let parts: Vec<Vec<Vec<Entry>>> = level_info(&joint)?
        .wavefronts()
        .into_iter()
        .map(|wave| {
            let costs: Vec<u64> = wave.iter().map(|&v| joint.cost(v)).collect();
            lpt(&costs, nthreads.max(1))
                .into_iter()
                .filter(|b| !b.is_empty())
                .map(|b| {
                    b.into_iter()
                        .map(|k| Entry::from_joint(wave[k], n1))
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(FusedSchedule::from_parts(
        &parts,
        PackMode::Interleaved,
        true,
    ))
}

pub fn execute_joint_wavefront(
    g1: &DepDag,
    g2: &DepDag,
    f: &InterDep,
    state: &KernelState,
    nthreads: usize,
) -> Result<ExecStats> {
    run_schedule(
        &joint_wavefront_schedule(g1, g2, f, nthreads)?,
        state,
        nthreads,
    )
}

/// Outcome of [`replay_random`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub output: Vec<f64>,
    /// Re-running an already executed entry left every output bit unchanged.
    pub duplicates_identical: bool,
}

/// Single-threaded replay where the w-partitions of each s-partition are
/// interleaved at random, each keeping its own entry order. With
/// `check_duplicates`, every repeated entry is checked to rewrite exactly
/// the values it already produced.
pub fn replay_random(
    sched: &FusedSchedule,
    state: &KernelState,
    seed: u64,
    check_duplicates: bool,
) -> Result<ReplayReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = state.n();
    let mut seen = [vec![false; n], vec![false; n]];
    let mut identical = true;
    state.reset();
    for s in 0..sched.num_spartitions() {
        let mut cursors: Vec<(usize, usize)> = (sched.s_ptr[s]..sched.s_ptr[s + 1])
            .map(|w| (sched.w_ptr[w], sched.w_ptr[w + 1]))
            .collect();
        cursors.shuffle(&mut rng);
        while !cursors.is_empty() {
            let k = rng.gen_range(0..cursors.len());
            let e = sched.entries[cursors[k].0];
            cursors[k].0 += 1;
            if cursors[k].0 == cursors[k].1 {
                cursors.swap_remove(k);
            }
            let dup = std::mem::replace(&mut seen[e.tag.index()][e.iter], true);
            if dup && check_duplicates {
                let before = state.outputs();
                state.run_iteration(e.tag, e.iter)?;
                let after = state.outputs();
                identical &= before
                    .iter()
                    .zip(&after)
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            } else {
                state.run_iteration(e.tag, e.iter)?;
            }
        }
    }
    Ok(ReplayReport {
        output: state.outputs(),
        duplicates_identical: identical,
    })
}

#[cfg(test)]
mod tests;
