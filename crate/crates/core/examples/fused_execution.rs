//! Inspect once, then run the fused schedule and the two baselines.
//!
//! cargo run --release --example fused_execution -- 64 4

use sparse_fusion::dag::{state_reuse, PairDags};
use sparse_fusion::executor::{
    compile_schedule, execute_fused, execute_joint_wavefront, execute_sequential, execute_unfused,
};
use sparse_fusion::kernels::{KernelState, COMBOS};
use sparse_fusion::msp::{msp, MspOptions};
use sparse_fusion::sparse::{grid_laplacian, rel_l2};

fn main() -> sparse_fusion::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("numeric argument"));
    let k = args.next().unwrap_or(64);
    let threads = args.next().unwrap_or(4);
    let a = grid_laplacian(k);

    println!(
        "{:<16} {:>10} {:>10} {:>10} {:>10}   barriers (fused/unfused/wavefront)",
        "combo", "seq ms", "fused", "unfused", "wavefront"
    );
    for combo in COMBOS {
        let st = KernelState::new(combo, &a)?;
        let d = PairDags::build(&st);
        let reuse = state_reuse(&st);
        let v = msp(&d.g1, &d.g2, &d.f, &MspOptions::new(threads, reuse))?;
        let sched = compile_schedule(&v, reuse)?;
        let want = st.reference()?;

        let seq = execute_sequential(&st)?;
        let fused = execute_fused(&sched, &st, threads)?;
        assert!(rel_l2(&st.outputs(), &want) < 1e-10);
        let unfused = execute_unfused(&d.g1, &d.g2, &st, threads)?;
        let wave = execute_joint_wavefront(&d.g1, &d.g2, &d.f, &st, threads)?;
        let ms = |ns: u64| ns as f64 / 1e6;
        println!(
            "{:<16} {:>10.3} {:>10.3} {:>10.3} {:>10.3}   {}/{}/{}",
            combo.alias,
            ms(seq.wall_ns),
            ms(fused.wall_ns),
            ms(unfused.wall_ns),
            ms(wave.wall_ns),
            fused.barriers,
            unfused.barriers,
            wave.barriers
        );
    }
    Ok(())
}
