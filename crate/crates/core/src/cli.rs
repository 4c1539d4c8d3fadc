//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 file or input error,
//! 3 numeric breakdown in a kernel, 4 validation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    compute_ner, emit_report, run_suite, write_report, MatrixSource, ReportFormat, SuiteConfig,
};
use crate::dag::{state_reuse, PairDags};
use crate::error::{Error, Result};
use crate::executor::{compile_schedule_with, execute_fused, execute_sequential, replay_random};
use crate::fixtures::standard_suite;
use crate::kernels::{ComboSpec, KernelState, COMBOS};
use crate::msp::{
    msp, validate_fused_partitioning, Closure, FusedPartitioning, MspOptions, PackMode,
};
use crate::sparse::{
    banded_spd, grid_laplacian, read_matrix_market, read_permutation, rel_l2, write_matrix_market,
    CscMatrix,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Environment variable for the thread count when `--threads` is absent.
pub const THREADS_ENV: &str = "SPARSE_FUSION_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "sparse-fusion",
    version,
    about = "Fuse and run pairs of sparse kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write Laplacian or banded SPD test matrices in Matrix Market format.
    Gen(GenArgs),
    /// Inspect, run and time one kernel pair on one matrix.
    Fuse(FuseArgs),
    /// Check schedules and results without timing.
    Validate(ValidateArgs),
    /// Time every executor over a directory of matrices.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Auto,
    Separated,
    Interleaved,
}

impl VariantArg {
    fn force(self) -> Option<PackMode> {
        match self {
            VariantArg::Auto => None,
            VariantArg::Separated => Some(PackMode::Separated),
            VariantArg::Interleaved => Some(PackMode::Interleaved),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClosureArg {
    Incremental,
    Full,
}

impl From<ClosureArg> for Closure {
    fn from(c: ClosureArg) -> Self {
        match c {
            ClosureArg::Incremental => Closure::Incremental,
            ClosureArg::Full => Closure::Full,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// 2-D five-point Laplacian on a k x k grid.
    #[arg(long, value_name = "K", conflicts_with_all = ["banded", "standard_suite"])]
    pub laplacian: Option<usize>,
    /// Random banded SPD matrix of order N.
    #[arg(long, value_name = "N", conflicts_with = "standard_suite")]
    pub banded: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub bandwidth: usize,
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Write the whole standard fixture suite into the `--out` directory.
    #[arg(long)]
    pub standard_suite: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Combination id (1-7) or alias such as `spic0-sptrsv`.
    #[arg(long, value_parser = parse_combo)]
    pub combo: ComboSpec,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, env = THREADS_ENV, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Auto)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = ClosureArg::Incremental)]
    pub closure: ClosureArg,
    /// Symmetric permutation applied to the matrix first, one index per line.
    #[arg(long)]
    pub perm: Option<PathBuf>,
    /// Write the fused schedule as JSON.
    #[arg(long)]
    pub dump_schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Matrices to check; the built-in fixture suite when absent.
    #[arg(long)]
    pub matrix: Vec<PathBuf>,
    /// Combination id or alias, or `all`.
    #[arg(long, default_value = "all")]
    pub combo: String,
    #[arg(long, env = THREADS_ENV, default_value_t = 4)]
    pub threads: usize,
    /// Check this schedule instead of computing one (needs one matrix and one combo).
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ClosureArg::Incremental)]
    pub closure: ClosureArg,
    #[arg(long, default_value_t = 20)]
    pub replays: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of `.mtx` files.
    #[arg(long)]
    pub suite: PathBuf,
    /// Comma-separated ids or aliases, or `all`.
    #[arg(long, default_value = "all")]
    pub combos: String,
    #[arg(long, env = THREADS_ENV, value_delimiter = ',', default_value = "1")]
    pub threads: Vec<usize>,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    pub format: ReportFormat,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantArg::Auto)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

fn parse_combo(s: &str) -> std::result::Result<ComboSpec, String> {
    s.parse::<ComboSpec>().map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse::<ReportFormat>().map_err(|e| e.to_string())
}

fn parse_combos(s: &str) -> Result<Vec<ComboSpec>> {
    if s == "all" {
        return Ok(COMBOS.to_vec());
    }
    s.split(',').map(|c| c.trim().parse()).collect()
}

fn exit_code(e: &Error) -> i32 {
    match e {
        e if e.is_numeric() => EXIT_NUMERIC,
        Error::UnknownCombo(_) => EXIT_USAGE,
        Error::InvalidSchedule(_) => EXIT_INVALID,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Fuse(a) => cmd_fuse(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    if a.standard_suite {
        std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
        for fx in standard_suite() {
            let p = a.out.join(format!("{}.mtx", fx.name));
            write_matrix_market(&fx.matrix, &p)?;
            writeln!(
                out,
                "wrote {} ({} x {}, {} nonzeros)",
                p.display(),
                fx.matrix.nrows(),
                fx.matrix.ncols(),
                fx.matrix.nnz()
            )
            .map_err(io)?;
        }
        return Ok(EXIT_OK);
    }
    let m = match (a.laplacian, a.banded) {
        (Some(k), _) => grid_laplacian(k),
        (None, Some(n)) => banded_spd(n, a.bandwidth, a.density, a.seed),
        (None, None) => {
            return Err(Error::Unsupported(
                "gen needs --laplacian, --banded or --standard-suite".into(),
            ));
        }
    };
    write_matrix_market(&m, &a.out)?;
    writeln!(
        out,
        "wrote {} ({} x {}, {} nonzeros)",
        a.out.display(),
        m.nrows(),
        m.ncols(),
        m.nnz()
    )
    .map_err(io)?;
    Ok(EXIT_OK)
}

fn load(path: &Path, perm: Option<&Path>) -> Result<CscMatrix> {
    let m = read_matrix_market(path)?;
    match perm {
        Some(p) => m.permute_symmetric(&read_permutation(p, m.ncols())?),
        None => Ok(m),
    }
}

fn ns(x: u64) -> String {
    format!("{:.3} ms", x as f64 / 1e6)
}

pub fn cmd_fuse(a: &FuseArgs, out: &mut dyn Write) -> Result<i32> {
    let m = load(&a.matrix, a.perm.as_deref())?;
    let st = KernelState::new(a.combo, &m)?;
    let threads = a.threads.max(1);

    let t = Instant::now();
    let d = PairDags::build(&st);
    let reuse = state_reuse(&st);
    let mut o = MspOptions::new(threads, reuse);
    o.pack = a.variant.force();
    o.closure = a.closure.into();
    let v = msp(&d.g1, &d.g2, &d.f, &o)?;
    let variant = o.pack.unwrap_or(PackMode::from_reuse(reuse));
    let sched = compile_schedule_with(&v, variant)?;
    let inspector = t.elapsed().as_nanos() as u64;
    if let Some(p) = &a.dump_schedule {
        std::fs::write(p, v.to_json()?).map_err(|e| Error::io(p, e))?;
    }

    let violations = validate_fused_partitioning(&v, &d.g1, &d.g2, &d.f);
    let want = st.reference()?;
    let first = execute_fused(&sched, &st, threads)?;
    let err = rel_l2(&st.outputs(), &want);
    let w = |out: &mut dyn Write, k: &str, v: String| writeln!(out, "{k:<14}{v}").map_err(io);
    w(out, "combo", format!("{} ({})", a.combo.id, a.combo.alias))?;
    w(
        out,
        "matrix",
        format!("{} (n {}, nnz {})", a.matrix.display(), m.ncols(), m.nnz()),
    )?;
    w(out, "threads", threads.to_string())?;
    w(out, "reuse ratio", format!("{reuse:.3}"))?;
    let how = if o.pack.is_some() {
        "override"
    } else {
        "from reuse ratio"
    };
    w(out, "variant", format!("{} ({how})", variant_name(variant)))?;
    if !violations.is_empty() || !(err < crate::bench::TOLERANCE) {
        for x in violations.iter().take(10) {
            w(out, "violation", x.to_string())?;
        }
        w(out, "result", format!("INVALID (rel. L2 error {err:e})"))?;
        return Ok(EXIT_INVALID);
    }
    if v.fusion {
        w(
            out,
            "fusion",
            format!("yes, {} s-partitions", v.num_spartitions()),
        )?;
    } else {
        w(
            out,
            "fusion",
            "no: too much replication, ran the kernels unfused".into(),
        )?;
    }
    w(out, "barriers", first.barriers.to_string())?;

    let time = |f: &dyn Fn() -> Result<u64>| -> Result<u64> {
        f()?;
        let mut v: Vec<u64> = (0..a.repeats.max(1)).map(|_| f()).collect::<Result<_>>()?;
        v.sort_unstable();
        Ok(v[v.len() / 2].max(1))
    };
    let exec = time(&|| execute_fused(&sched, &st, threads).map(|s| s.wall_ns))?;
    let base = time(&|| execute_sequential(&st).map(|s| s.wall_ns))?;
    w(out, "inspector", ns(inspector))?;
    w(out, "executor", ns(exec))?;
    w(out, "baseline", ns(base))?;
    w(out, "speedup", format!("{:.3}", base as f64 / exec as f64))?;
    w(
        out,
        "NER",
        compute_ner(inspector as f64, base as f64, exec as f64).to_string(),
    )?;
    w(out, "result", format!("ok (rel. L2 error {err:.2e})"))?;
    Ok(EXIT_OK)
}

fn variant_name(p: PackMode) -> &'static str {
    match p {
        PackMode::Separated => "separated",
        PackMode::Interleaved => "interleaved",
    }
}

struct Report<'a> {
    out: &'a mut dyn Write,
    failed: usize,
}

impl Report<'_> {
    fn check(&mut self, ok: bool, what: String) -> Result<()> {
        if !ok {
            self.failed += 1;
        }
        writeln!(self.out, "{} {what}", if ok { "PASS" } else { "FAIL" }).map_err(io)
    }
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let combos = parse_combos(&a.combo)?;
    let mats: Vec<(String, CscMatrix)> = if a.matrix.is_empty() {
        standard_suite()
            .into_iter()
            .map(|f| (f.name.to_string(), f.matrix))
            .collect()
    } else {
        a.matrix
            .iter()
            .map(|p| Ok((p.display().to_string(), read_matrix_market(p)?)))
            .collect::<Result<_>>()?
    };
    let given = match &a.schedule {
        Some(p) => {
            if mats.len() != 1 || combos.len() != 1 {
                return Err(Error::Unsupported(
                    "--schedule needs exactly one --matrix and one --combo".into(),
                ));
            }
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(FusedPartitioning::from_json(&text)?)
        }
        None => None,
    };
    let threads = a.threads.max(1);
    let mut rep = Report { out, failed: 0 };
    for (name, m) in &mats {
        for &c in &combos {
            let st = KernelState::new(c, m)?;
            let d = PairDags::build(&st);
            let reuse = state_reuse(&st);
            let v = match &given {
                Some(v) => {
                    let n = st.n();
                    if v.spartitions
                        .iter()
                        .flatten()
                        .flatten()
                        .any(|e| e.iter >= n)
                    {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: v
                                .spartitions
                                .iter()
                                .flatten()
                                .flatten()
                                .map(|e| e.iter + 1)
                                .max()
                                .unwrap_or(0),
                        });
                    }
                    v.clone()
                }
                None => {
                    let mut o = MspOptions::new(threads, reuse);
                    o.closure = a.closure.into();
                    msp(&d.g1, &d.g2, &d.f, &o)?
                }
            };
            let tag = format!("{name} combo {}", c.id);
            let bad = validate_fused_partitioning(&v, &d.g1, &d.g2, &d.f);
            let detail = bad.first().map_or(String::new(), |x| {
                format!(": {} violations, first {x}", bad.len())
            });
            rep.check(bad.is_empty(), format!("{tag} schedule checker{detail}"))?;
            if !bad.is_empty() {
                continue;
            }
            rep.check(v.balance_ok(), format!("{tag} balance"))?;
            let want = st.reference()?;
            let sched = compile_schedule_with(&v, PackMode::from_reuse(reuse))?;
            let mut worst: f64 = 0.0;
            let mut dup_ok = true;
            for s in 0..a.replays {
                let r = replay_random(&sched, &st, a.seed.wrapping_add(s), st.n() <= 200)?;
                worst = worst.max(rel_l2(&r.output, &want));
                dup_ok &= r.duplicates_identical;
            }
            rep.check(
                worst < 1e-12 && dup_ok,
                format!(
                    "{tag} {} random replays (worst rel. L2 {worst:.1e})",
                    a.replays
                ),
            )?;
            execute_fused(&sched, &st, threads)?;
            let err = rel_l2(&st.outputs(), &want);
            rep.check(
                err < crate::bench::TOLERANCE,
                format!("{tag} fused executor vs reference at {threads} threads ({err:.1e})"),
            )?;
        }
    }
    let failed = rep.failed;
    writeln!(rep.out, "{} failed", failed).map_err(io)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_INVALID })
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let rd = std::fs::read_dir(&a.suite).map_err(|e| Error::io(&a.suite, e))?;
    let mut paths: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mtx"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::io(
            &a.suite,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no .mtx files"),
        ));
    }
    let mut cfg = SuiteConfig::new(
        paths.into_iter().map(MatrixSource::Path).collect(),
        parse_combos(&a.combos)?,
        a.threads.iter().map(|&t| t.max(1)).collect(),
    );
    cfg.warmup = a.warmup;
    cfg.repeats = a.repeats;
    cfg.variant = a.variant.force();
    let recs = run_suite(&cfg);
    match &a.out {
        Some(p) => emit_report(&recs, a.format, p)?,
        None => write_report(&recs, a.format, &mut *out)?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("sparse-fusion").chain(args.iter().copied()),
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(
            run_str(&["fuse", "--combo", "nope", "--matrix", "x.mtx"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn gen_then_fuse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lap10.mtx");
        let ps = p.to_str().unwrap();
        let (code, o, _) = run_str(&["gen", "--laplacian", "10", "--out", ps]);
        assert_eq!(code, 0, "{o}");
        let m = read_matrix_market(&p).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (100, 100));

        let (code, o, e) = run_str(&[
            "fuse",
            "--combo",
            "4",
            "--matrix",
            ps,
            "--threads",
            "4",
            "--repeats",
            "1",
        ]);
        assert_eq!(code, 0, "{o}{e}");
        assert!(o.contains("speedup") && o.contains("NER"), "{o}");

        let (code, o, _) = run_str(&[
            "fuse",
            "--combo",
            "sptrsv-sptrsv",
            "--matrix",
            ps,
            "--variant",
            "separated",
            "--repeats",
            "1",
        ]);
        assert_eq!(code, 0);
        assert!(o.contains("separated (override)"), "{o}");
    }

    #[test]
    fn missing_inputs_exit_two() {
        assert_eq!(
            run_str(&["fuse", "--combo", "1", "--matrix", "/nonexistent.mtx"]).0,
            EXIT_INPUT
        );
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            run_str(&["bench", "--suite", dir.path().to_str().unwrap()]).0,
            EXIT_INPUT
        );
    }
}
