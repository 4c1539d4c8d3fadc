//! Check a schedule, replay it in random interleavings, then break it on
//! purpose and watch the checker catch it.
//!
//! cargo run --example validate_schedule

use sparse_fusion::dag::{state_reuse, PairDags};
use sparse_fusion::executor::{compile_schedule, replay_random};
use sparse_fusion::kernels::{ComboSpec, KernelState};
use sparse_fusion::msp::{msp, validate_fused_partitioning, MspOptions};
use sparse_fusion::sparse::{grid_laplacian, rel_l2};

fn main() -> sparse_fusion::Result<()> {
    let st = KernelState::new(
        ComboSpec::by_id(5).expect("combo 5 exists"),
        &grid_laplacian(6),
    )?;
    let d = PairDags::build(&st);
    let v = msp(&d.g1, &d.g2, &d.f, &MspOptions::new(4, state_reuse(&st)))?;
    println!(
        "violations: {}",
        validate_fused_partitioning(&v, &d.g1, &d.g2, &d.f).len()
    );

    let sched = compile_schedule(&v, state_reuse(&st))?;
    let want = st.reference()?;
    for seed in 0..5 {
        let r = replay_random(&sched, &st, seed, true)?;
        println!(
            "replay {seed}: rel. L2 {:.1e}, duplicates identical {}",
            rel_l2(&r.output, &want),
            r.duplicates_identical
        );
    }

    let mut broken = v.clone();
    if let Some(w) = broken
        .spartitions
        .iter_mut()
        .flatten()
        .find(|w| w.len() > 2)
    {
        w.reverse();
    }
    for x in validate_fused_partitioning(&broken, &d.g1, &d.g2, &d.f)
        .iter()
        .take(5)
    {
        println!("  {x}");
    }
    Ok(())
}
