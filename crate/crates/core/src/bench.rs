//! Timing harness and report output.
//!
//! Every timed run is first checked against the sequential reference; a
//! run that fails the check is recorded without timings.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dag::{state_reuse, PairDags};
use crate::error::{Error, Result};
use crate::executor::{
    compile_schedule_with, execute_fused, execute_joint_wavefront, execute_sequential,
    execute_unfused, joint_wavefront_schedule, unfused_schedule, ExecStats,
};
use crate::kernels::{ComboSpec, KernelState};
use crate::msp::{msp, validate_fused_partitioning, Closure, MspOptions, PackMode};
use crate::sparse::{read_matrix_market, rel_l2, CscMatrix};

/// Results further than this from the reference invalidate a run.
pub const TOLERANCE: f64 = 1e-10;

/// Executor runs needed to pay back inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ner {
    Runs(f64),
    /// The executor is no faster than the baseline.
    Unamortizable,
}

impl fmt::Display for Ner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ner::Runs(x) => write!(f, "{x}"),
            Ner::Unamortizable => f.write_str("unamortizable"),
        }
    }
}

impl Serialize for Ner {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ner::Runs(x) => s.serialize_f64(*x),
            Ner::Unamortizable => s.serialize_str("unamortizable"),
        }
    }
}

impl<'de> Deserialize<'de> for Ner {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Ner::Runs(x)),
            Raw::Text(t) if t == "unamortizable" => Ok(Ner::Unamortizable),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad NER value `{t}`"))),
        }
    }
}

/// `inspector / (baseline - executor)`.
pub fn compute_ner(inspector: f64, baseline: f64, executor: f64) -> Ner {
    if executor >= baseline {
        Ner::Unamortizable
    } else {
        Ner::Runs(inspector / (baseline - executor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutorKind {
    Sequential,
    Fused,
    Unfused,
    JointWavefront,
}

impl ExecutorKind {
    pub const ALL: [ExecutorKind; 4] = [
        ExecutorKind::Sequential,
        ExecutorKind::Fused,
        ExecutorKind::Unfused,
        ExecutorKind::JointWavefront,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExecutorKind::Sequential => "sequential",
            ExecutorKind::Fused => "fused",
            ExecutorKind::Unfused => "unfused",
            ExecutorKind::JointWavefront => "joint-wavefront",
        }
    }
}

/// One cell of a suite. Times are nanoseconds; timings are absent when
/// the run failed validation or could not be set up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub combo: u8,
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub threads: usize,
    pub executor: ExecutorKind,
    pub variant: Option<PackMode>,
    pub valid: bool,
    pub inspector_ns: Option<u64>,
    pub executor_ns: Option<u64>,
    pub baseline_ns: Option<u64>,
    pub speedup: Option<f64>,
    pub ner: Option<Ner>,
    pub barriers: Option<usize>,
    pub imbalance: Option<f64>,
    pub fusion: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub enum MatrixSource {
    Path(PathBuf),
    InMemory { name: String, matrix: CscMatrix },
}

impl MatrixSource {
    pub fn name(&self) -> String {
        match self {
            MatrixSource::Path(p) => p.file_stem().map_or_else(
                || p.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            ),
            MatrixSource::InMemory { name, .. } => name.clone(),
        }
    }

    fn load(&self) -> Result<CscMatrix> {
        match self {
            MatrixSource::Path(p) => read_matrix_market(p),
            MatrixSource::InMemory { matrix, .. } => Ok(matrix.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub matrices: Vec<MatrixSource>,
    pub combos: Vec<ComboSpec>,
    pub threads: Vec<usize>,
    pub executors: Vec<ExecutorKind>,
    pub warmup: usize,
    pub repeats: usize,
    /// Forces a packing instead of the one the reuse ratio picks.
    pub variant: Option<PackMode>,
    pub closure: Closure,
}

impl SuiteConfig {
    pub fn new(matrices: Vec<MatrixSource>, combos: Vec<ComboSpec>, threads: Vec<usize>) -> Self {
        Self {
            matrices,
            combos,
            threads,
            executors: ExecutorKind::ALL.to_vec(),
            warmup: 2,
            repeats: 5,
            variant: None,
            closure: Closure::Incremental,
        }
    }
}

/// Median; the mean of the middle two for an even count.
pub fn median(xs: &[u64]) -> u64 {
    let mut v = xs.to_vec();
    v.sort_unstable();
    match v.len() {
        0 => 0,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2,
    }
}

type Runner = Box<dyn Fn(&KernelState) -> Result<ExecStats>>;

struct Prepared {
    run: Runner,
    inspector_ns: u64,
    variant: Option<PackMode>,
    fusion: Option<bool>,
}

fn prepare(
    kind: ExecutorKind,
    st: &KernelState,
    threads: usize,
    cfg: &SuiteConfig,
) -> Result<Prepared> {
    let t = Instant::now();
    match kind {
        ExecutorKind::Sequential => Ok(Prepared {
            run: Box::new(execute_sequential),
            inspector_ns: 0,
            variant: None,
            fusion: None,
        }),
        ExecutorKind::Fused => {
            let d = PairDags::build(st);
            let reuse = state_reuse(st);
            let mut o = MspOptions::new(threads, reuse);
            o.pack = cfg.variant;
            o.closure = cfg.closure;
            let v = msp(&d.g1, &d.g2, &d.f, &o)?;
            let variant = cfg.variant.unwrap_or(PackMode::from_reuse(reuse));
            let sched = compile_schedule_with(&v, variant)?;
            let inspector_ns = t.elapsed().as_nanos() as u64;
            if let Some(bad) = validate_fused_partitioning(&v, &d.g1, &d.g2, &d.f).first() {
                return Err(Error::InvalidSchedule(bad.to_string()));
            }
            Ok(Prepared {
                run: Box::new(move |s| execute_fused(&sched, s, threads)),
                inspector_ns,
                variant: Some(variant),
                fusion: Some(v.fusion),
            })
        }
        ExecutorKind::Unfused => {
            let d = PairDags::build(st);
            let _ = unfused_schedule(&d.g1, &d.g2, threads)?;
            let inspector_ns = t.elapsed().as_nanos() as u64;
            Ok(Prepared {
                run: Box::new(move |s| execute_unfused(&d.g1, &d.g2, s, threads)),
                inspector_ns,
                variant: None,
                fusion: None,
            })
        }
        ExecutorKind::JointWavefront => {
            let d = PairDags::build(st);
            let _ = joint_wavefront_schedule(&d.g1, &d.g2, &d.f, threads)?;
            let inspector_ns = t.elapsed().as_nanos() as u64;
            Ok(Prepared {
                run: Box::new(move |s| execute_joint_wavefront(&d.g1, &d.g2, &d.f, s, threads)),
                inspector_ns,
                variant: None,
                fusion: None,
            })
        }
    }
}

/// Warmups then timed repeats; returns the median wall time and the
/// stats of the median run. Fails if the first run is wrong.
fn time_runs(
    p: &Prepared,
    st: &KernelState,
    want: &[f64],
    cfg: &SuiteConfig,
) -> Result<(u64, ExecStats)> {
    (p.run)(st)?;
    let err = rel_l2(&st.outputs(), want);
    if !(err < TOLERANCE) {
        return Err(Error::InvalidSchedule(format!(
            "result differs from reference (rel. L2 {err:e})"
        )));
    }
    for _ in 1..cfg.warmup {
        (p.run)(st)?;
    }
    let mut runs: Vec<ExecStats> = (0..cfg.repeats.max(1))
        .map(|_| (p.run)(st))
        .collect::<Result<_>>()?;
    runs.sort_by_key(|s| s.wall_ns);
    let times: Vec<u64> = runs.iter().map(|s| s.wall_ns.max(1)).collect();
    Ok((median(&times), runs.swap_remove(runs.len() / 2)))
}

fn blank(
    combo: u8,
    matrix: &str,
    n: usize,
    nnz: usize,
    threads: usize,
    executor: ExecutorKind,
    error: String,
) -> BenchRecord {
    BenchRecord {
        combo,
        matrix: matrix.to_string(),
        n,
        nnz,
        threads,
        executor,
        variant: None,
        valid: false,
        inspector_ns: None,
        executor_ns: None,
        baseline_ns: None,
        speedup: None,
        ner: None,
        barriers: None,
        imbalance: None,
        fusion: None,
        error: Some(error),
    }
}

/// Runs every (matrix, combo, threads, executor) cell. Failures become
/// invalid records; the suite always continues.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<BenchRecord> {
    let mut out = Vec::new();
    for src in &cfg.matrices {
        let name = src.name();
        let m = match src.load() {
            Ok(m) => m,
            Err(e) => {
                for c in &cfg.combos {
                    for &t in &cfg.threads {
                        for &k in &cfg.executors {
                            out.push(blank(c.id, &name, 0, 0, t, k, e.to_string()));
                        }
                    }
                }
                continue;
            }
        };
        let (n, nnz) = (m.ncols(), m.nnz());
        for &c in &cfg.combos {
            let cell = |t: usize, k: ExecutorKind, e: Error| {
                blank(c.id, &name, n, nnz, t, k, e.to_string())
            };
            let st = match KernelState::new(c, &m) {
                Ok(st) => st,
                Err(e) => {
                    for &t in &cfg.threads {
                        for &k in &cfg.executors {
                            out.push(cell(t, k, Error::InvalidMatrix(e.to_string())));
                        }
                    }
                    continue;
                }
            };
            let want = st.reference();
            let baseline = want.as_ref().ok().and_then(|w| {
                let p = prepare(ExecutorKind::Sequential, &st, 1, cfg).ok()?;
                time_runs(&p, &st, w, cfg).ok().map(|r| r.0)
            });
            for &t in &cfg.threads {
                for &k in &cfg.executors {
                    let want = match &want {
                        Ok(w) => w,
                        Err(e) => {
                            out.push(blank(c.id, &name, n, nnz, t, k, e.to_string()));
                            continue;
                        }
                    };
                    let res = prepare(k, &st, t, cfg)
                        .and_then(|p| time_runs(&p, &st, want, cfg).map(|r| (p, r)));
                    let (p, (exec_ns, stats)) = match res {
                        Ok(x) => x,
                        Err(e) => {
                            out.push(cell(t, k, e));
                            continue;
                        }
                    };
                    let mut rec = blank(c.id, &name, n, nnz, t, k, String::new());
                    rec.error = None;
                    rec.valid = true;
                    rec.variant = p.variant;
                    rec.fusion = p.fusion;
                    rec.inspector_ns = Some(p.inspector_ns);
                    rec.executor_ns = Some(exec_ns);
                    rec.baseline_ns = baseline;
                    rec.speedup = baseline.map(|b| b as f64 / exec_ns as f64);
                    rec.ner = baseline
                        .map(|b| compute_ner(p.inspector_ns as f64, b as f64, exec_ns as f64));
                    rec.barriers = Some(stats.barriers);
                    rec.imbalance = Some(stats.imbalance());
                    out.push(rec);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Unsupported(format!("report format `{s}`"))),
        }
    }
}

/// Writes records in a fixed column order (the field order of
/// [`BenchRecord`]).
pub fn write_report<W: Write>(
    records: &[BenchRecord],
    format: ReportFormat,
    mut w: W,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            for r in records {
                wr.serialize(r)?;
            }
            wr.flush().map_err(|e| Error::io("<report>", e))?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, records)?;
            writeln!(w).map_err(|e| Error::io("<report>", e))?;
        }
    }
    Ok(())
}

pub fn emit_report(records: &[BenchRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(records, format, std::io::BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::grid_laplacian;

    #[test]
    fn ner_examples() {
        assert_eq!(compute_ner(10.0, 5.0, 3.0), Ner::Runs(5.0));
        assert_eq!(compute_ner(10.0, 5.0, 5.0), Ner::Unamortizable);
        assert_eq!(compute_ner(10.0, 5.0, 7.0), Ner::Unamortizable);
        assert_eq!(compute_ner(0.0, 5.0, 3.0), Ner::Runs(0.0));
    }

    #[test]
    fn median_ignores_order() {
        assert_eq!(median(&[5, 1, 3]), 3);
        assert_eq!(median(&[3, 5, 1]), 3);
        assert_eq!(median(&[4, 1, 3, 2]), 2);
    }

    fn small_suite() -> SuiteConfig {
        let src = MatrixSource::InMemory {
            name: "lap4".into(),
            matrix: grid_laplacian(4),
        };
        let mut cfg = SuiteConfig::new(vec![src], vec![ComboSpec::by_id(5).unwrap()], vec![1, 4]);
        cfg.warmup = 1;
        cfg.repeats = 3;
        cfg
    }

    #[test]
    fn suite_cardinality_and_validity() {
        let recs = run_suite(&small_suite());
        assert_eq!(recs.len(), 8);
        for r in &recs {
            assert!(r.valid, "{r:?}");
            assert!(r.executor_ns.unwrap() > 0);
            let s = r.baseline_ns.unwrap() as f64 / r.executor_ns.unwrap() as f64;
            assert!((r.speedup.unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn failed_cells_carry_no_timing() {
        let mut cfg = small_suite();
        cfg.matrices
            .push(MatrixSource::Path("/nonexistent/m.mtx".into()));
        // not positive definite: IC0 breaks down
        let bad =
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 3.0), (0, 1, 3.0), (1, 1, 1.0)])
                .unwrap();
        cfg.matrices.push(MatrixSource::InMemory {
            name: "indef".into(),
            matrix: bad,
        });
        let recs = run_suite(&cfg);
        assert_eq!(recs.len(), 24);
        for r in &recs[8..] {
            assert!(!r.valid);
            assert!(r.executor_ns.is_none() && r.speedup.is_none() && r.ner.is_none());
            assert!(r.error.is_some());
        }
    }

    #[test]
    fn reports_are_stable() {
        let mut recs = run_suite(&small_suite());
        recs.truncate(1);
        recs[0].ner = Some(Ner::Unamortizable);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_report(&recs, ReportFormat::Csv, &mut a).unwrap();
        write_report(&recs, ReportFormat::Csv, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("combo,matrix,n,nnz,threads,executor,variant,valid,"));
        assert!(text.contains("unamortizable"));

        let mut j = Vec::new();
        write_report(&recs, ReportFormat::Json, &mut j).unwrap();
        let back: Vec<BenchRecord> = serde_json::from_slice(&j).unwrap();
        assert_eq!(back, recs);
    }
}
