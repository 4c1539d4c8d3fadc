use super::*;
use crate::dag::{state_reuse, PairDags};
use crate::fixtures::{running_example, standard_suite};
use crate::kernels::{ComboSpec, COMBOS};
use crate::msp::{msp, MspOptions};
use crate::sparse::{banded_spd, grid_laplacian, rel_l2, CscMatrix};

fn setup(combo: u8, m: &CscMatrix, r: usize) -> (KernelState, PairDags, FusedPartitioning) {
    let st = KernelState::new(ComboSpec::by_id(combo).unwrap(), m).unwrap();
    let d = PairDags::build(&st);
    let v = msp(&d.g1, &d.g2, &d.f, &MspOptions::new(r, state_reuse(&st))).unwrap();
    (st, d, v)
}

#[test]
fn variant_follows_reuse_ratio() {
    let (_, _, v) = setup(4, &running_example(), 3);
    assert_eq!(
        compile_schedule(&v, 0.18).unwrap().variant,
        PackMode::Separated
    );
    assert_eq!(
        compile_schedule(&v, 1.0).unwrap().variant,
        PackMode::Interleaved
    );
    let s = compile_schedule(&v, 0.18).unwrap();
    for w in 0..s.num_wpartitions() {
        let (a, m, b) = (s.w_ptr[w], s.k2_start[w], s.w_ptr[w + 1]);
        assert!(s.entries[a..m].iter().all(|e| e.tag == KernelTag::First));
        assert!(s.entries[m..b].iter().all(|e| e.tag == KernelTag::Second));
    }
}

#[test]
fn running_example_has_one_barrier() {
    let (st, _, v) = setup(4, &running_example(), 3);
    let s = compile_schedule(&v, 0.5).unwrap();
    let stats = execute_fused(&s, &st, 3).unwrap();
    assert_eq!(stats.barriers, 1);
    assert!(rel_l2(&st.outputs(), &st.reference().unwrap()) < 1e-12);
}

#[test]
fn one_thread_is_bitwise_schedule_order() {
    for combo in COMBOS {
        let (st, _, v) = setup(combo.id, &grid_laplacian(6), 2);
        let s = compile_schedule(&v, 1.0).unwrap();
        st.reset();
        for e in v.spartitions.iter().flatten().flatten() {
            st.run_iteration(e.tag, e.iter).unwrap();
        }
        let want = st.outputs();
        execute_fused(&s, &st, 1).unwrap();
        let got = st.outputs();
        assert!(
            want.iter()
                .zip(&got)
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            "combo {}",
            combo.id
        );
    }
}

#[test]
fn all_executors_match_sequential() {
    for fx in standard_suite()
        .into_iter()
        .filter(|f| f.matrix.ncols() <= 100)
    {
        for combo in COMBOS {
            let (st, d, v) = setup(combo.id, &fx.matrix, 4);
            execute_sequential(&st).unwrap();
            let want = st.outputs();
            assert!(rel_l2(&want, &st.reference().unwrap()) < 1e-10);
            for t in [1, 2, 4, 8] {
                let s = compile_schedule(&v, state_reuse(&st)).unwrap();
                let runs = [
                    execute_fused(&s, &st, t).map(|_| st.outputs()),
                    execute_unfused(&d.g1, &d.g2, &st, t).map(|_| st.outputs()),
                    execute_joint_wavefront(&d.g1, &d.g2, &d.f, &st, t).map(|_| st.outputs()),
                ];
                for (k, got) in runs.into_iter().enumerate() {
                    let err = rel_l2(&got.unwrap(), &want);
                    assert!(
                        err < 1e-10,
                        "{} combo {} t {t} executor {k}: {err}",
                        fx.name,
                        combo.id
                    );
                }
            }
        }
    }
}

#[test]
fn barrier_counts() {
    let st = KernelState::new(ComboSpec::by_id(2).unwrap(), &grid_laplacian(5)).unwrap();
    let d = PairDags::build(&st);
    assert_eq!(execute_sequential(&st).unwrap().barriers, 0);
    let u = unfused_schedule(&d.g1, &d.g2, 2).unwrap();
    let k2 = lbc_partition(&d.g2, 2).unwrap().num_spartitions();
    // SpMV is one wavefront
    assert_eq!(u.num_spartitions(), 1 + k2);
    assert_eq!(execute_unfused(&d.g1, &d.g2, &st, 2).unwrap().barriers, k2);

    let g = DepDag::edgeless(vec![1; 4]);
    let f = InterDep::from_rows(4, vec![Vec::new(); 4]);
    assert_eq!(
        joint_wavefront_schedule(&g, &g, &f, 2)
            .unwrap()
            .num_spartitions(),
        1
    );
    let chain1 = DepDag::new(2, &[(0, 1)], vec![1; 2]);
    let one = DepDag::edgeless(vec![1]);
    let f = InterDep::from_rows(2, vec![vec![1]]);
    assert_eq!(
        joint_wavefront_schedule(&chain1, &one, &f, 2)
            .unwrap()
            .num_spartitions(),
        3
    );
}

#[test]
fn numeric_error_propagates_from_workers() {
    // IC0 breaks down on an indefinite matrix
    let m = CscMatrix::from_triplets(
        3,
        3,
        &[
            (0, 0, 1.0),
            (1, 0, 2.0),
            (1, 1, 1.0),
            (2, 1, 0.5),
            (2, 2, 1.0),
        ],
    )
    .unwrap();
    let st = KernelState::new(ComboSpec::by_id(5).unwrap(), &m).unwrap();
    let d = PairDags::build(&st);
    let v = msp(&d.g1, &d.g2, &d.f, &MspOptions::new(2, 1.0)).unwrap();
    let s = compile_schedule(&v, 1.0).unwrap();
    for t in [1, 2, 4] {
        let e = execute_fused(&s, &st, t).unwrap_err();
        assert!(e.is_numeric(), "{e}");
    }
    assert!(execute_sequential(&st).unwrap_err().is_numeric());
}

#[test]
fn unfused_fallback_when_fusion_rejected() {
    let (st, _, v) = setup(5, &banded_spd(40, 6, 0.5, 3), 4);
    let mut s = compile_schedule(&v, 1.0).unwrap();
    s.fusion = false;
    let stats = execute_fused(&s, &st, 2).unwrap();
    assert!(stats.fell_back);
    assert!(rel_l2(&st.outputs(), &st.reference().unwrap()) < 1e-10);
}

#[test]
fn random_replays_agree_and_duplicates_match() {
    for combo in COMBOS {
        let (st, _, v) = setup(combo.id, &grid_laplacian(5), 3);
        let s = compile_schedule(&v, 1.0).unwrap();
        let want = st.reference().unwrap();
        for seed in 0..20 {
            let rep = replay_random(&s, &st, seed, true).unwrap();
            assert!(
                rel_l2(&rep.output, &want) < 1e-12,
                "combo {} seed {seed}",
                combo.id
            );
            assert!(rep.duplicates_identical, "combo {} seed {seed}", combo.id);
        }
    }
}
