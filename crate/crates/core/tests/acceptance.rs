//! Acceptance checks, one PASS/FAIL line each.
//!
//! A check whose hardware requirement the machine cannot meet still
//! prints FAIL but does not fail the process; every other failure does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use sparse_fusion::bench::{compute_ner, run_suite, ExecutorKind, MatrixSource, Ner, SuiteConfig};
use sparse_fusion::cli;
use sparse_fusion::dag::{joint_dag, level_info, state_reuse, DepDag, InterDep, PairDags};
use sparse_fusion::executor::{
    compile_schedule, execute_fused, execute_joint_wavefront, execute_unfused, replay_random,
};
use sparse_fusion::fixtures::{broom, running_example, standard_suite, Fixture};
use sparse_fusion::kernels::{ComboSpec, KernelState, COMBOS};
use sparse_fusion::msp::{
    msp, validate_fused_partitioning, Entry, FusedPartitioning, MspOptions, PackMode,
};
use sparse_fusion::sparse::{grid_laplacian, rel_l2, write_matrix_market};

struct Outcome {
    pass: bool,
    detail: String,
    /// The machine cannot run this check meaningfully.
    hardware_limited: bool,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
        hardware_limited: false,
    }
}

fn fused(st: &KernelState, d: &PairDags, r: usize) -> FusedPartitioning {
    msp(&d.g1, &d.g2, &d.f, &MspOptions::new(r, state_reuse(st))).expect("inspection succeeds")
}

fn setup(combo: ComboSpec, fx: &Fixture) -> (KernelState, PairDags) {
    let st = KernelState::new(combo, &fx.matrix).expect("fixture binds");
    let d = PairDags::build(&st);
    (st, d)
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    for fx in standard_suite() {
        for combo in COMBOS {
            let (st, d) = setup(combo, &fx);
            let want = st.reference().unwrap();
            let reuse = state_reuse(&st);
            for threads in [1, 2, 4] {
                let sched = compile_schedule(&fused(&st, &d, threads), reuse).unwrap();
                for k in 0..3 {
                    match k {
                        0 => execute_fused(&sched, &st, threads).map(|_| ()),
                        1 => execute_unfused(&d.g1, &d.g2, &st, threads).map(|_| ()),
                        _ => execute_joint_wavefront(&d.g1, &d.g2, &d.f, &st, threads).map(|_| ()),
                    }
                    .unwrap();
                    let err = rel_l2(&st.outputs(), &want);
                    worst = worst.max(err);
                    runs += 1;
                    if !(err < 1e-10) {
                        return ok(
                            false,
                            format!(
                                "{} combo {} executor {k} threads {threads}: {err:e}",
                                fx.name, combo.id
                            ),
                        );
                    }
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok(
        secs < 120.0,
        format!("{runs} runs, worst rel. L2 {worst:.1e}, {secs:.1} s"),
    )
}

fn running_example_regression() -> Outcome {
    let st = KernelState::new(ComboSpec::by_id(4).unwrap(), &running_example()).unwrap();
    let d = PairDags::build(&st);
    let v = msp(&d.g1, &d.g2, &d.f, &MspOptions::new(3, state_reuse(&st))).unwrap();
    // 1-based iteration numbers; `true` marks the first kernel
    let set = |xs: &[(usize, bool)]| {
        let mut v: Vec<Entry> = xs
            .iter()
            .map(|&(i, first)| {
                if first {
                    Entry::first(i - 1)
                } else {
                    Entry::second(i - 1)
                }
            })
            .collect();
        v.sort();
        v
    };
    let f = |i| (i, true);
    let s = |i| (i, false);
    let want_s1 = vec![
        set(&[f(1), f(2), f(3), f(4)]),
        set(&[f(5), f(6), s(5), s(6)]),
        set(&[f(7), f(8), f(9), s(9)]),
    ];
    let want_s2w1 = set(&[f(10), f(11), s(10), s(11)]);
    let got: Vec<Vec<Vec<Entry>>> = v
        .spartitions
        .iter()
        .map(|sp| {
            let mut ws: Vec<Vec<Entry>> = sp
                .iter()
                .map(|w| {
                    let mut w = w.clone();
                    w.sort();
                    w
                })
                .collect();
            ws.sort();
            ws
        })
        .collect();
    let pass = v.fusion && got.len() == 2 && got[0] == want_s1 && got[1].contains(&want_s2w1);
    let show: Vec<String> = v
        .spartitions
        .iter()
        .map(|sp| {
            sp.iter()
                .map(|w| {
                    format!(
                        "[{}]",
                        w.iter()
                            .map(|e| format!(
                                "{}{}",
                                e.iter + 1,
                                if e.tag.index() == 0 { "_" } else { "" }
                            ))
                            .collect::<Vec<_>>()
                            .join(",")
                    )
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    ok(
        pass,
        format!("b={} {}", v.num_spartitions(), show.join(" | ")),
    )
}

fn pack_mode_classification() -> Outcome {
    let mut checked = 0;
    for fx in standard_suite() {
        for combo in COMBOS {
            let (st, d) = setup(combo, &fx);
            let reuse = state_reuse(&st);
            let high = matches!(combo.id, 1 | 3 | 5 | 6 | 7);
            let want = if high {
                PackMode::Interleaved
            } else {
                PackMode::Separated
            };
            let v = fused(&st, &d, 4);
            let sched = compile_schedule(&v, reuse).unwrap();
            if (reuse >= 1.0) != high || v.packing() != want || sched.variant != want {
                return ok(
                    false,
                    format!(
                        "{} combo {}: reuse {reuse:.3}, variant {:?}",
                        fx.name, combo.id, sched.variant
                    ),
                );
            }
            checked += 1;
        }
    }
    ok(true, format!("{checked} fixture/combo pairs"))
}

fn barrier_dominance() -> Outcome {
    let mut strict = 0;
    for fx in standard_suite() {
        for combo in COMBOS {
            let (st, d) = setup(combo, &fx);
            let joint = level_info(&joint_dag(&d.g1, &d.g2, &d.f))
                .unwrap()
                .critical_path;
            for r in [1, 2, 4] {
                let b = fused(&st, &d, r).num_spartitions();
                if b > joint {
                    return ok(
                        false,
                        format!(
                            "{} combo {} r {r}: {b} s-partitions vs {joint} wavefronts",
                            fx.name, combo.id
                        ),
                    );
                }
                let k = fx.matrix.ncols();
                let big_grid = fx.name.starts_with("laplace") && k >= 100;
                if big_grid && matches!(combo.id, 5 | 6) {
                    if b >= joint {
                        return ok(
                            false,
                            format!(
                                "{} combo {} r {r}: {b} not below {joint}",
                                fx.name, combo.id
                            ),
                        );
                    }
                    strict += 1;
                }
            }
        }
    }
    ok(
        true,
        format!("never above the joint wavefront count; strictly below in all {strict} grid cases"),
    )
}

fn redundancy_guard() -> Outcome {
    // dense F, three head w-partitions each replicating all of G1
    let g1 = DepDag::edgeless(vec![1; 12]);
    let g2 = DepDag::new(9, &[(0, 1)], vec![1; 9]);
    let f = InterDep::from_rows(12, vec![(0..12).collect(); 9]);
    let v = msp(&g1, &g2, &f, &MspOptions::new(3, 1.0)).unwrap();
    if v.fusion {
        return ok(
            false,
            format!("dense-F pair kept fusion ({} entries)", v.stats.entries),
        );
    }
    let dag_detail = format!(
        "dense F: {} > {}",
        v.stats.entries, v.stats.redundancy_threshold
    );

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broom.mtx");
    write_matrix_market(&broom(32, 8), &p).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let args = [
        "sparse-fusion",
        "fuse",
        "--combo",
        "spic0-sptrsv",
        "--matrix",
        p.to_str().unwrap(),
        "--threads",
        "4",
        "--closure",
        "full",
        "--repeats",
        "1",
    ];
    let code = cli::run(args, &mut out, &mut err);
    let text = String::from_utf8_lossy(&out);
    let fell_back = text
        .lines()
        .any(|l| l.starts_with("fusion") && l.contains("no:"));
    let correct = text
        .lines()
        .any(|l| l.starts_with("result") && l.contains("ok"));
    ok(
        code == 0 && fell_back && correct,
        format!("{dag_detail}; CLI exit {code}, unfused fallback {fell_back}, result ok {correct}"),
    )
}

fn balance_property() -> Outcome {
    let mut records = 0;
    for fx in standard_suite() {
        for combo in COMBOS {
            let (st, d) = setup(combo, &fx);
            for r in [2, 4] {
                let v = fused(&st, &d, r);
                // check from the dump, not the in-memory value
                let dumped = FusedPartitioning::from_json(&v.to_json().unwrap()).unwrap();
                if !dumped.balance_ok() {
                    let bad = dumped
                        .stats
                        .balance
                        .iter()
                        .find(|b| !(b.max_diff as f64 <= b.eps || b.pool_exhausted))
                        .unwrap();
                    return ok(
                        false,
                        format!("{} combo {} r {r}: {bad:?}", fx.name, combo.id),
                    );
                }
                records += dumped.stats.balance.len();
            }
        }
    }
    ok(
        true,
        format!("{records} w-partition records within eps or pool exhausted"),
    )
}

fn schedule_validity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut schedules = 0;
    for fx in standard_suite() {
        for combo in COMBOS {
            let (st, d) = setup(combo, &fx);
            let want = st.reference().unwrap();
            let v = fused(&st, &d, 4);
            let bad = validate_fused_partitioning(&v, &d.g1, &d.g2, &d.f);
            if let Some(x) = bad.first() {
                return ok(
                    false,
                    format!(
                        "{} combo {}: {} violations, first {x}",
                        fx.name,
                        combo.id,
                        bad.len()
                    ),
                );
            }
            let sched = compile_schedule(&v, state_reuse(&st)).unwrap();
            for seed in 0..20 {
                let r = replay_random(&sched, &st, seed, st.n() <= 200).unwrap();
                worst = worst.max(rel_l2(&r.output, &want));
                if !r.duplicates_identical {
                    return ok(
                        false,
                        format!(
                            "{} combo {} seed {seed}: duplicate rewrote different bits",
                            fx.name, combo.id
                        ),
                    );
                }
            }
            schedules += 1;
        }
    }
    ok(
        worst <= 1e-12,
        format!("{schedules} schedules valid, 20 replays each, worst rel. L2 {worst:.1e}"),
    )
}

fn ner_reporting() -> Outcome {
    if compute_ner(10.0, 5.0, 3.0) != Ner::Runs(5.0)
        || compute_ner(1.0, 5.0, 5.0) != Ner::Unamortizable
    {
        return ok(false, "formula mismatch");
    }
    let src = MatrixSource::InMemory {
        name: "laplace32".into(),
        matrix: grid_laplacian(32),
    };
    let mut cfg = SuiteConfig::new(vec![src], COMBOS.to_vec(), vec![4]);
    cfg.executors = vec![ExecutorKind::Fused];
    let recs = run_suite(&cfg);
    let mut faster = 0;
    for r in &recs {
        if !r.valid {
            return ok(false, format!("combo {} invalid: {:?}", r.combo, r.error));
        }
        if r.executor_ns < r.baseline_ns {
            faster += 1;
            match r.ner {
                Some(Ner::Runs(x)) if x.is_finite() && x >= 0.0 => {}
                other => {
                    return ok(
                        false,
                        format!("combo {} beats baseline but NER {other:?}", r.combo),
                    )
                }
            }
        } else if r.ner != Some(Ner::Unamortizable) {
            return ok(
                false,
                format!("combo {} slower than baseline but NER {:?}", r.combo, r.ner),
            );
        }
    }
    ok(
        true,
        format!(
            "10/(5-3)=5; {faster} of {} combos beat the baseline at 4 threads (finite NER), the rest report unamortizable",
            recs.len()
        ),
    )
}

fn scaling_smoke() -> Outcome {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let st = KernelState::new(ComboSpec::by_id(5).unwrap(), &grid_laplacian(512)).unwrap();
    let d = PairDags::build(&st);
    let want = st.reference().unwrap();
    let mut med = Vec::new();
    for threads in [1, 8] {
        let v = fused(&st, &d, threads);
        let sched = compile_schedule(&v, state_reuse(&st)).unwrap();
        execute_fused(&sched, &st, threads).unwrap();
        let err = rel_l2(&st.outputs(), &want);
        if !(err < 1e-10) {
            return ok(false, format!("{threads} threads: rel. L2 {err:e}"));
        }
        let mut t: Vec<u64> = (0..3)
            .map(|_| execute_fused(&sched, &st, threads).unwrap().wall_ns)
            .collect();
        t.sort_unstable();
        med.push(t[1]);
    }
    let speedup = med[0] as f64 / med[1] as f64;
    Outcome {
        pass: speedup > 1.0,
        detail: format!(
            "nnz {}, 8-thread speedup over 1 thread {speedup:.2} on {cpus} CPU(s)",
            st.size_a()
        ),
        hardware_limited: cpus < 8,
    }
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("running-example regression", running_example_regression),
        ("pack-mode classification", pack_mode_classification),
        ("barrier dominance", barrier_dominance),
        ("redundancy guard", redundancy_guard),
        ("balance property", balance_property),
        ("schedule validity", schedule_validity),
        ("NER reporting", ner_reporting),
        ("scaling smoke", scaling_smoke),
    ];
    let mut hard_failures = 0;
    for (name, check) in checks {
        let o = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            ok(false, format!("panicked: {msg}"))
        });
        let mut line = format!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass && o.hardware_limited {
            line.push_str(" (needs at least 8 CPUs; not counted)");
        } else if !o.pass {
            hard_failures += 1;
        }
        println!("{line}");
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
