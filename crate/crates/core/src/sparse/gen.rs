//! Synthetic SPD fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CscMatrix;

/// 5-point Laplacian on a `k x k` grid in natural (row-major) ordering.
/// `k >= 2`.
pub fn grid_laplacian(k: usize) -> CscMatrix {
    assert!(k >= 2, "grid side must be at least 2");
    let n = k * k;
    let mut trip = Vec::with_capacity(5 * n);
    for gy in 0..k {
        for gx in 0..k {
            let v = gy * k + gx;
            trip.push((v, v, 4.0));
            if gx > 0 {
                trip.push((v, v - 1, -1.0));
            }
            if gx + 1 < k {
                trip.push((v, v + 1, -1.0));
            }
            if gy > 0 {
                trip.push((v, v - k, -1.0));
            }
            if gy + 1 < k {
                trip.push((v, v + k, -1.0));
            }
        }
    }
    CscMatrix::from_triplets(n, n, &trip).expect("stencil indices are in range")
}

/// Random symmetric banded matrix made SPD by strict diagonal dominance.
///
/// Each off-diagonal position within `bandwidth` of the diagonal is kept
/// with probability `density`; kept values are drawn from `[-1, -0.1)`.
pub fn banded_spd(n: usize, bandwidth: usize, density: f64, seed: u64) -> CscMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    let mut rowsum = vec![0.0f64; n];
    for j in 0..n {
        for i in j + 1..n.min(j + bandwidth + 1) {
            if rng.gen_bool(density) {
                let v: f64 = -rng.gen_range(0.1..1.0);
                trip.push((i, j, v));
                trip.push((j, i, v));
                rowsum[i] += v.abs();
                rowsum[j] += v.abs();
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        trip.push((i, i, s + 1.0 + rng.gen_range(0.0..1.0)));
    }
    CscMatrix::from_triplets(n, n, &trip).expect("band indices are in range")
}
