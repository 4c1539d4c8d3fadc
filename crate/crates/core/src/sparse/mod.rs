//! Sparse matrix storage, Matrix Market ingestion and fixture generators.

mod gen;
mod matrix;
mod mm;

pub use gen::{banded_spd, grid_laplacian};
pub use matrix::{CscMatrix, CsrMatrix};
pub use mm::{
    format_matrix_market, parse_matrix_market, read_matrix_market, read_permutation,
    write_matrix_market,
};

/// Relative L2 distance `|a - b| / |b|`, or the absolute distance when `b`
/// is zero.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
