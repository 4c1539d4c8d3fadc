//! Generate a test matrix, round-trip it through Matrix Market and look
//! at both storage orders.
//!
//! cargo run --example matrix_io

use sparse_fusion::sparse::{
    banded_spd, format_matrix_market, grid_laplacian, parse_matrix_market,
};

fn main() -> sparse_fusion::Result<()> {
    let a = grid_laplacian(3);
    let text = format_matrix_market(&a);
    println!("{text}");

    let back = parse_matrix_market(&text)?;
    assert_eq!(back.triplets(), a.triplets());

    let csr = a.to_csr();
    println!(
        "9x9 Laplacian: nnz {}, symmetric {}",
        a.nnz(),
        a.is_symmetric()
    );
    println!(
        "row 4 of the CSR copy: {:?}",
        &csr.colidx()[csr.row_range(4)]
    );
    println!("lower triangle nnz: {}", a.lower_triangle()?.nnz());

    // same seed, same matrix
    let b1 = banded_spd(32, 4, 0.5, 7);
    let b2 = banded_spd(32, 4, 0.5, 7);
    assert_eq!(b1.triplets(), b2.triplets());
    println!("banded 32x32 (bw 4): nnz {}", b1.nnz());
    Ok(())
}
