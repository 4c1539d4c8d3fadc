use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kernels::shared::trace;
use crate::kernels::{KernelTag, COMBOS};
use crate::sparse::{banded_spd, grid_laplacian, rel_l2, CsrMatrix};

fn chain3() -> DepDag {
    DepDag::new(3, &[(0, 1), (1, 2)], vec![1; 3])
}

#[test]
fn intra_dag_examples() {
    let a = grid_laplacian(3);
    let five = CscMatrix::from_triplets(
        5,
        5,
        &(0..5)
            .map(|i| (i, i, 1.0))
            .chain([(3, 1, 2.0)])
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let g = intra_dag(KernelKind::SpmvCsr, &five);
    assert_eq!((g.nvert(), g.nedges()), (5, 0));
    assert_eq!(intra_dag(KernelKind::DscalCsc, &a).nedges(), 0);

    let l = CscMatrix::from_triplets(
        3,
        3,
        &[
            (0, 0, 1.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (2, 1, 1.0),
            (2, 2, 1.0),
        ],
    )
    .unwrap();
    let g = intra_dag(KernelKind::SptrsvCsr, &l);
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    assert_eq!(g.costs(), &[1, 2, 2]);
}

#[test]
fn level_info_examples() {
    let li = level_info(&chain3()).unwrap();
    assert_eq!(li.level, vec![1, 2, 3]);
    assert_eq!(li.height, vec![2, 1, 0]);
    assert_eq!(li.critical_path, 3);
    assert!((0..3).all(|v| li.slack(v) == 0));

    let li = level_info(&DepDag::edgeless(vec![1; 4])).unwrap();
    assert_eq!(li.level, vec![1; 4]);
    assert_eq!(li.height, vec![0; 4]);
    assert_eq!(li.critical_path, 1);

    let g = DepDag::new(4, &[(0, 1), (1, 2)], vec![1; 4]);
    assert_eq!(level_info(&g).unwrap().slack(3), 2);

    let cyc = DepDag::new(2, &[(0, 1), (1, 0)], vec![1; 2]);
    assert!(matches!(level_info(&cyc), Err(Error::Cycle)));
}

#[test]
fn reuse_examples() {
    let c = |id| ComboSpec::by_id(id).unwrap();
    assert!((compute_reuse(c(2), 1000, 5000, 9000) - 2000.0 / 11000.0).abs() < 1e-15);
    assert!(compute_reuse(c(1), 10, 3, 1000) >= 1.0);
    assert_eq!(compute_reuse(c(4), 100, 200, 200), 0.5);
}

#[test]
fn joint_dag_examples() {
    let g1 = DepDag::new(2, &[(0, 1)], vec![1, 1]);
    let g2 = DepDag::edgeless(vec![1]);
    let empty = InterDep::from_rows(2, vec![vec![]]);
    let j = joint_dag(&g1, &g2, &empty);
    assert_eq!((j.nvert(), j.nedges()), (3, 1));
    let f = InterDep::from_rows(2, vec![vec![1]]);
    let j = joint_dag(&g1, &g2, &f);
    assert_eq!(level_info(&j).unwrap().critical_path, 3);
}

#[test]
fn combo4_f_follows_column_guard() {
    let st = KernelState::new(COMBOS[3], &grid_laplacian(3)).unwrap();
    let f = inter_dag(&st);
    assert!((0..9).all(|i| f.row(i) == [i]));
    // column 1 empty
    let a = CscMatrix::new(
        3,
        3,
        vec![0, 2, 2, 4],
        vec![0, 2, 0, 2],
        vec![2.0, 1.0, 1.0, 2.0],
    )
    .unwrap();
    let f = column_guard_f(&a);
    assert_eq!(
        (f.row(0), f.row(1), f.row(2)),
        (&[0][..], &[][..], &[2][..])
    );
}

#[test]
fn costs_match_brute_force_counts() {
    let tri = CsrMatrix::from_triplets(
        8,
        8,
        &(0..8)
            .flat_map(|i| {
                let mut v = vec![(i, i, 2.0)];
                if i > 0 {
                    v.push((i, i - 1, -1.0));
                    v.push((i - 1, i, -1.0));
                }
                v
            })
            .collect::<Vec<_>>(),
    )
    .unwrap()
    .to_csc();
    let lower = tri.lower_triangle().unwrap();
    // column j of a tridiagonal factor: own 2 entries (1 for the last),
    // plus entries of column j-1 at rows >= j: exactly 1
    let expect: Vec<u64> = (0..8)
        .map(|j| if j == 7 { 1 } else { 2 } + if j > 0 { 1 } else { 0 })
        .collect();
    assert_eq!(vertex_costs(KernelKind::Spic0Csc, &lower), expect);
    assert_eq!(
        vertex_costs(KernelKind::SpmvCsr, &CscMatrix::identity(4)),
        vec![1; 4]
    );

    let a = banded_spd(24, 5, 0.6, 3);
    let d = a.to_dense();
    let nz = |i: usize, j: usize| d[i][j] != 0.0;
    let lc = vertex_costs(KernelKind::Spic0Csc, &a.lower_triangle().unwrap());
    let uc = vertex_costs(KernelKind::Spilu0Csr, &a);
    for j in 0..24 {
        let mut c = (j..24).filter(|&r| nz(r, j)).count();
        let mut u = (0..24).filter(|&r| nz(j, r)).count();
        for k in 0..j {
            if nz(j, k) {
                c += (j..24).filter(|&r| nz(r, k)).count();
                u += (k + 1..24).filter(|&r| nz(k, r)).count();
            }
        }
        assert_eq!(lc[j], c as u64);
        assert_eq!(uc[j], u as u64);
    }
}

fn fixtures() -> Vec<CscMatrix> {
    vec![
        grid_laplacian(3),
        grid_laplacian(4),
        banded_spd(8, 3, 0.7, 1),
        banded_spd(12, 4, 0.5, 2),
        banded_spd(16, 6, 0.4, 3),
    ]
}

type Sets = (BTreeSet<usize>, BTreeSet<usize>);

/// Per-iteration read and write sets over one shared array.
fn access_sets(st: &KernelState, tag: KernelTag, array: usize) -> Vec<Sets> {
    (0..st.n())
        .map(|i| {
            let log = trace::capture(|| st.run_iteration(tag, i).unwrap());
            let mut r = BTreeSet::new();
            let mut w = BTreeSet::new();
            for (id, idx, write) in log {
                if id == array {
                    if write {
                        w.insert(idx);
                    } else {
                        r.insert(idx);
                    }
                }
            }
            (r, w)
        })
        .collect()
}

#[test]
fn f_equals_read_write_intersection() {
    for a in fixtures() {
        for c in COMBOS {
            let st = KernelState::new(c, &a).unwrap();
            st.reset();
            let out1 = st.out1().id();
            let k1 = access_sets(&st, KernelTag::First, out1);
            let k2 = access_sets(&st, KernelTag::Second, out1);
            let f = inter_dag(&st);
            for i in 0..st.n() {
                let expect: Vec<usize> = (0..st.n())
                    .filter(|&j| !k1[j].1.is_disjoint(&k2[i].0))
                    .collect();
                assert_eq!(f.row(i), expect.as_slice(), "combo {} row {i}", c.id);
            }
        }
    }
}

#[test]
fn intra_dags_equal_read_write_intersection() {
    for a in fixtures() {
        for c in COMBOS {
            let st = KernelState::new(c, &a).unwrap();
            let (g1, g2) = kernel_dags(&st);
            for (tag, g, arr) in [
                (KernelTag::First, &g1, st.out1().id()),
                (KernelTag::Second, &g2, st.out2().id()),
            ] {
                if st.kind(tag) == KernelKind::SpmvCsc {
                    // scatter-adds commute; the DAG is edgeless by design
                    continue;
                }
                st.run_sequential().unwrap();
                let sets = access_sets(&st, tag, arr);
                for i in 0..st.n() {
                    let expect: Vec<usize> = (0..st.n())
                        .filter(|&j| j != i && !sets[j].1.is_disjoint(&sets[i].0))
                        .collect();
                    assert_eq!(
                        g.predecessors(i),
                        expect.as_slice(),
                        "combo {} {tag:?} vertex {i}",
                        c.id
                    );
                }
            }
        }
    }
}

#[test]
fn random_topological_replays_match_reference() {
    for a in fixtures() {
        for c in COMBOS {
            let st = KernelState::new(c, &a).unwrap();
            let reference = st.reference().unwrap();
            let pd = PairDags::build(&st);
            let joint = pd.joint();
            let n1 = pd.g1.nvert();
            for seed in 0..10 {
                let order = joint
                    .random_topological_order(&mut ChaCha8Rng::seed_from_u64(seed))
                    .unwrap();
                st.reset();
                for v in order {
                    if v < n1 {
                        st.run_iteration(KernelTag::First, v).unwrap();
                    } else {
                        st.run_iteration(KernelTag::Second, v - n1).unwrap();
                    }
                }
                let got = st.outputs();
                if c.second == KernelKind::SpmvCsc {
                    assert!(rel_l2(&got, &reference) <= 1e-12);
                } else {
                    assert_eq!(got, reference, "combo {} seed {seed}", c.id);
                }
            }
        }
    }
}

#[test]
fn dag_dump_round_trips() {
    let d = chain3().dump();
    let s = serde_json::to_string(&d).unwrap();
    assert_eq!(s, r#"{"nvert":3,"edges":[[0,1],[1,2]],"cost":[1,1,1]}"#);
    assert_eq!(serde_json::from_str::<DagDump>(&s).unwrap(), d);
}

fn arb_dag() -> impl Strategy<Value = DepDag> {
    (1usize..30).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (u.min(v), u.max(v)))
                .collect();
            DepDag::new(n, &edges, vec![1; n])
        })
    })
}

proptest! {
    #[test]
    fn level_info_invariants(g in arb_dag()) {
        let li = level_info(&g).unwrap();
        for (u, v) in g.edges() {
            prop_assert!(li.level[u] < li.level[v]);
            prop_assert!(li.height[u] > li.height[v]);
        }
        for v in 0..g.nvert() {
            prop_assert_eq!(li.level[v] == 1, g.predecessors(v).is_empty());
            prop_assert_eq!(li.height[v] == 0, g.successors(v).is_empty());
            prop_assert!(li.level[v] + li.height[v] <= li.critical_path);
        }
        prop_assert_eq!(li.critical_path, li.level.iter().copied().max().unwrap());
    }

    /// Rows 2 and 4 stay below 1 for any sizes at least n. Rows 1 and 6
    /// stay at or above 1 whenever size_A >= size_L >= n. Rows 3, 5 and 7
    /// need the shared structure to be at least 2n entries.
    #[test]
    fn reuse_sign_matches_table(n in 1usize..10_000, extra_l in 0usize..50_000, extra_a in 0usize..50_000) {
        let l = 2 * n + extra_l;
        let a = 2 * l + extra_a;
        for c in COMBOS {
            let r = compute_reuse(c, n, l, a);
            if matches!(c.id, 2 | 4) {
                prop_assert!(r < 1.0);
            } else {
                prop_assert!(r >= 1.0, "combo {} ratio {}", c.id, r);
            }
        }
    }
}
