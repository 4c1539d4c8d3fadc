//! When pairing would replicate too much of the first kernel, fusion is
//! switched off and the executor falls back to running the kernels apart.
//!
//! cargo run --example redundancy_guard

use sparse_fusion::dag::{state_reuse, PairDags};
use sparse_fusion::executor::{compile_schedule, execute_fused};
use sparse_fusion::fixtures::broom;
use sparse_fusion::kernels::{ComboSpec, KernelState};
use sparse_fusion::msp::{msp, Closure, MspOptions};
use sparse_fusion::sparse::rel_l2;

fn main() -> sparse_fusion::Result<()> {
    let st = KernelState::new(ComboSpec::by_id(5).expect("combo 5 exists"), &broom(32, 8))?;
    let d = PairDags::build(&st);
    for closure in [Closure::Incremental, Closure::Full] {
        let mut o = MspOptions::new(4, state_reuse(&st));
        o.closure = closure;
        let v = msp(&d.g1, &d.g2, &d.f, &o)?;
        let stats = execute_fused(&compile_schedule(&v, o.reuse_ratio)?, &st, 4)?;
        println!(
            "{closure:?}: {} entries (limit {}), fusion {}, fell back {}, rel. L2 {:.1e}",
            v.stats.entries,
            v.stats.redundancy_threshold,
            v.fusion,
            stats.fell_back,
            rel_l2(&st.outputs(), &st.reference()?)
        );
    }
    Ok(())
}
