//! Small named matrices used by tests, examples and the benchmark suite.

use crate::sparse::{banded_spd, grid_laplacian, CscMatrix};

/// Lower-triangular pattern of the 11x11 running example, 1-based rows:
/// each entry lists the columns holding a nonzero in that row.
pub const RUNNING_EXAMPLE_ROWS: [&[usize]; 11] = [
    &[1],
    &[2],
    &[1, 2, 3],
    &[3, 4],
    &[5],
    &[5, 6],
    &[7],
    &[8],
    &[7, 8, 9],
    &[3, 4, 6, 8, 9, 10],
    &[1, 2, 3, 5, 7, 10, 11],
];

/// Symmetric matrix whose lower triangle has the running-example pattern:
/// diagonal 10, off-diagonals -1. Strictly diagonally dominant, so SPD.
pub fn running_example() -> CscMatrix {
    let mut t = Vec::new();
    for (i, cols) in RUNNING_EXAMPLE_ROWS.iter().enumerate() {
        for &c in cols.iter() {
            let j = c - 1;
            if i == j {
                t.push((i, i, 10.0));
            } else {
                t.push((i, j, -1.0));
                t.push((j, i, -1.0));
            }
        }
    }
    CscMatrix::from_triplets(11, 11, &t).expect("fixture indices are in range")
}

/// Arrow matrix: dense first and last rows and columns on top of a
/// diagonal. Every SpTRSV row depends on row 0, and the last row depends
/// on all others. Makes F dense for the factor-to-solve pairs.
pub fn arrow(n: usize) -> CscMatrix {
    assert!(n >= 3);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, n as f64 * 4.0));
    }
    for i in 1..n {
        t.push((i, 0, -1.0));
        t.push((0, i, -1.0));
    }
    for j in 1..n - 1 {
        t.push((n - 1, j, -1.0));
        t.push((j, n - 1, -1.0));
    }
    CscMatrix::from_triplets(n, n, &t).expect("arrow indices are in range")
}

/// A path of `handle` vertices with `bristles` extra rows hanging off the
/// last one. Under full closure every bristle w-partition replicates the
/// whole handle, which trips the replication guard for the
/// factor-to-solve pairs.
pub fn broom(handle: usize, bristles: usize) -> CscMatrix {
    assert!(handle >= 2);
    let n = handle + bristles;
    let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, (bristles + 4) as f64)).collect();
    let edges = (1..handle)
        .map(|i| (i, i - 1))
        .chain((handle..n).map(|k| (k, handle - 1)));
    for (i, j) in edges {
        t.push((i, j, -1.0));
        t.push((j, i, -1.0));
    }
    CscMatrix::from_triplets(n, n, &t).expect("broom indices are in range")
}

/// A named test matrix.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub matrix: CscMatrix,
}

/// Grid Laplacians `k in {4, 10, 32}` and seeded banded SPD matrices
/// `n in {8, 64, 512}`.
pub fn standard_suite() -> Vec<Fixture> {
    let mut v: Vec<Fixture> = [4, 10, 32]
        .into_iter()
        .map(|k| Fixture {
            name: format!("laplace{k}"),
            matrix: grid_laplacian(k),
        })
        .collect();
    for (n, seed) in [(8usize, 11u64), (64, 12), (512, 13)] {
        let bw = (n / 8).clamp(2, 24);
        v.push(Fixture {
            name: format!("banded{n}"),
            matrix: banded_spd(n, bw, 0.5, seed),
        });
    }
    v
}
