//! Run every kernel pair iteration by iteration and compare with the
//! whole-kernel reference.
//!
//! cargo run --example kernels

use sparse_fusion::kernels::{KernelState, COMBOS};
use sparse_fusion::sparse::{grid_laplacian, rel_l2};

fn main() -> sparse_fusion::Result<()> {
    let a = grid_laplacian(8);
    for combo in COMBOS {
        let st = KernelState::new(combo, &a)?;
        st.run_sequential()?;
        let err = rel_l2(&st.outputs(), &st.reference()?);
        println!(
            "{:<32} {:<24} rel. L2 vs reference {err:.1e}",
            combo.to_string(),
            combo.operation
        );
    }
    Ok(())
}
