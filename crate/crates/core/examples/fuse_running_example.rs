//! Fuse the 11-iteration running example and print the partitioning.
//! First-kernel iterations carry a trailing underscore.
//!
//! cargo run --example fuse_running_example

use sparse_fusion::dag::{state_reuse, PairDags};
use sparse_fusion::fixtures::running_example;
use sparse_fusion::kernels::{ComboSpec, KernelState};
use sparse_fusion::msp::{msp, MspOptions};

fn main() -> sparse_fusion::Result<()> {
    let st = KernelState::new(
        ComboSpec::by_id(4).expect("combo 4 exists"),
        &running_example(),
    )?;
    let d = PairDags::build(&st);
    let v = msp(&d.g1, &d.g2, &d.f, &MspOptions::new(3, state_reuse(&st)))?;

    for (s, sp) in v.spartitions.iter().enumerate() {
        for (w, wp) in sp.iter().enumerate() {
            let items: Vec<String> = wp
                .iter()
                .map(|e| {
                    format!(
                        "{}{}",
                        e.iter + 1,
                        if e.tag.index() == 0 { "_" } else { "" }
                    )
                })
                .collect();
            println!("s{} w{}: [{}]", s + 1, w + 1, items.join(", "));
        }
    }
    let st = &v.stats;
    println!(
        "head G{}, {} LBC s-partitions, {} after pairing, {} merged pairs, {} slack vertices, eps {}",
        st.head, st.lbc_spartitions, st.paired_spartitions, st.merged_pairs, st.slack_vertices, st.eps
    );
    println!(
        "{} entries (limit {}), packing {:?}",
        st.entries, st.redundancy_threshold, st.packing
    );
    Ok(())
}
