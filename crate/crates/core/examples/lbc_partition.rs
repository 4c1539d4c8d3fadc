//! Load-balanced level coarsening of a triangular-solve DAG.
//!
//! cargo run --example lbc_partition -- 6 3

use sparse_fusion::dag::{intra_dag, level_info};
use sparse_fusion::kernels::KernelKind;
use sparse_fusion::lbc::lbc_partition;
use sparse_fusion::sparse::grid_laplacian;

fn main() -> sparse_fusion::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("numeric argument"));
    let k = args.next().unwrap_or(6);
    let r = args.next().unwrap_or(3);

    let g = intra_dag(KernelKind::SptrsvCsr, &grid_laplacian(k).lower_triangle()?);
    let waves = level_info(&g)?.critical_path;
    let h = lbc_partition(&g, r)?;
    println!(
        "{} vertices, {waves} wavefronts -> {} s-partitions (r = {r})",
        g.nvert(),
        h.num_spartitions()
    );
    for (i, sp) in h.parts.iter().enumerate() {
        let costs: Vec<u64> = sp
            .iter()
            .map(|w| w.iter().map(|&v| g.cost(v)).sum())
            .collect();
        println!("s{}: {} w-partitions, costs {costs:?}", i + 1, sp.len());
    }
    Ok(())
}
