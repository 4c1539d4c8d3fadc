//! Time every executor over the built-in fixtures and print CSV.
//!
//! cargo run --release --example bench_suite

use sparse_fusion::bench::{run_suite, write_report, MatrixSource, ReportFormat, SuiteConfig};
use sparse_fusion::fixtures::standard_suite;
use sparse_fusion::kernels::COMBOS;

fn main() -> sparse_fusion::Result<()> {
    let matrices = standard_suite()
        .into_iter()
        .filter(|f| f.matrix.ncols() <= 100)
        .map(|f| MatrixSource::InMemory {
            name: f.name,
            matrix: f.matrix,
        })
        .collect();
    let mut cfg = SuiteConfig::new(matrices, COMBOS.to_vec(), vec![1, 2]);
    cfg.repeats = 3;
    let records = run_suite(&cfg);
    write_report(&records, ReportFormat::Csv, std::io::stdout().lock())
}
