//! Dependence DAGs of a kernel pair: levels, slack and the reuse ratio.
//!
//! cargo run --example dependence_dags

use sparse_fusion::dag::{level_info, state_reuse, PairDags};
use sparse_fusion::fixtures::running_example;
use sparse_fusion::kernels::{ComboSpec, KernelState};

fn main() -> sparse_fusion::Result<()> {
    let combo: ComboSpec = "sptrsv-spmv".parse()?;
    let st = KernelState::new(combo, &running_example())?;
    let d = PairDags::build(&st);

    println!(
        "G1 ({}): {} vertices, {} edges",
        combo.first.name(),
        d.g1.nvert(),
        d.g1.nedges()
    );
    println!(
        "G2 ({}): {} vertices, {} edges",
        combo.second.name(),
        d.g2.nvert(),
        d.g2.nedges()
    );
    println!("F: {} cross-kernel dependencies", d.f.nnz());

    let li = level_info(&d.g1)?;
    println!("G1 critical path {}", li.critical_path);
    for v in 0..d.g1.nvert() {
        println!(
            "  v{:<2} level {} height {} slack {} cost {}",
            v + 1,
            li.level[v],
            li.height[v],
            li.slack(v),
            d.g1.cost(v)
        );
    }

    let joint = d.joint();
    println!(
        "joint DAG: {} wavefronts",
        level_info(&joint)?.critical_path
    );
    println!("reuse ratio {:.3}", state_reuse(&st));
    println!("{}", serde_json::to_string(&d.g1.dump())?);
    Ok(())
}
