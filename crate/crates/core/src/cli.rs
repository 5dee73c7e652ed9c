//! Command-line harness: `simulate`, `assemble`, `evaluate`, `bench`, `theory`.
//!
//! Exit codes: 0 success, 1 internal, 2 input error, 3 numerical failure.
//! `--config FILE` supplies `key=value` lines that mirror long flags; flags
//! given on the command line win.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    mean_mec_rate, run_compare, run_fig2, run_table3, write_compare_csv, write_fig2_csv, write_table3_csv,
    CompareSpec, CsvOptions, Fig2Spec, Table3Spec,
};
use crate::error::{Error, Result};
use crate::fragmat::{parse_fragments, write_fragments, FragmentMatrix, Haplotype};
use crate::metrics::{evaluate, EvalReport};
use crate::simread::{read_truth, write_truth, ObservationModel, Placement, ReadLengths, SimulationSpec};
use crate::solver::{assemble, Algorithm, Reference, SolverConfig};
use crate::svtbase::SvtConfig;
use crate::theory::{self, TheoryParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hapaltmin", version, about = "Haplotype assembly by rank-one matrix completion")]
pub struct Cli {
    /// File of `key=value` lines mirroring long flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a fragment matrix and its ground truth.
    Simulate(SimulateArgs),
    /// Recover a haplotype from a fragment file.
    Assemble(AssembleArgs),
    /// Score a haplotype against fragments and, optionally, the truth.
    Evaluate(EvaluateArgs),
    /// Run a benchmark suite and write a CSV table.
    Bench(BenchArgs),
    /// Evaluate the closed-form recovery guarantees.
    Theory(TheoryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Uniform,
    Contiguous,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of SNPs.
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = Model::Contiguous)]
    pub model: Model,
    /// Number of reads (uniform model).
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample probability (uniform model).
    #[arg(long)]
    pub p: Option<f64>,
    /// Mean per-SNP coverage (contiguous model).
    #[arg(long, default_value_t = 5.0)]
    pub coverage: f64,
    /// Read length `L` or range `MIN-MAX` (contiguous model).
    #[arg(long, default_value_t = ReadLengths::default())]
    pub read_length: ReadLengths,
    #[arg(long, default_value_t = Placement::default())]
    pub placement: Placement,
    #[arg(long, default_value_t = 0.0)]
    pub error_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// File stem for `<name>.frag` and `<name>.truth`.
    #[arg(long, default_value = "sim")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = Algorithm::Soft)]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub power_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub power_tol: f64,
    #[arg(long, default_value_t = 2.0)]
    pub clip_factor: f64,
    /// Override of the sample probability used by the initializer.
    #[arg(long)]
    pub p_hat: Option<f64>,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            algorithm: self.algorithm,
            max_outer_iters: self.max_iters,
            tol: self.tol,
            power_iters: self.power_iters,
            power_tol: self.power_tol,
            clip_factor: self.clip_factor,
            p_hat: self.p_hat,
            init_seed: seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Fragment file.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Haplotype output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Truth sidecar; enables the distance column of the trace.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Fragment file.
    #[arg(long)]
    pub input: PathBuf,
    /// Haplotype file (one line of 0/1).
    #[arg(long)]
    pub haplotype: PathBuf,
    /// Truth sidecar.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Omit the CSV header line.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Reconstruction rate over error rate × coverage.
    Table3,
    /// Alternating solver against SVT over sample size.
    Fig2,
    /// Paired MEC rate of solver variants.
    Compare,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Suite::Table3)]
    pub suite: Suite,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SNPs per instance (table3, compare).
    #[arg(long, default_value_t = 700)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2, 0.3])]
    pub error_rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 5.0, 8.0, 10.0])]
    pub coverages: Vec<f64>,
    /// Algorithms to run; defaults to `soft` (table3) or `hard,soft` (compare).
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = ReadLengths::default())]
    pub read_length: ReadLengths,
    #[arg(long, default_value_t = Placement::default())]
    pub placement: Placement,
    /// Matrix shapes `MxN` (fig2).
    #[arg(long, value_delimiter = ',', default_values = ["50x100", "250x500"], value_parser = parse_dims)]
    pub dims: Vec<(usize, usize)>,
    /// Sample sizes as multiples of n (fig2).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0])]
    pub samples_per_read: Vec<f64>,
    /// Error rate of the fig2 and compare suites.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Coverage of the compare suite.
    #[arg(long, default_value_t = 5.0)]
    pub compare_coverage: f64,
    #[arg(long, default_value_t = 500)]
    pub svt_max_iters: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the `# generated` line.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Write `NA` for runtimes so the output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(|| format!("`{s}` is not MxN"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{s}` is not MxN"));
    Ok((parse(m)?, parse(n)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Closed-form quantities only.
    None,
    /// Spectral norm of the observed noise against its bound.
    Noise,
    /// Error and MEC of solved instances against their bounds.
    Recovery,
    /// Per-half-step contraction of noiseless runs.
    Contraction,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub p_e: f64,
    /// Defaults to the middle of the admissible range.
    #[arg(long)]
    pub delta2: Option<f64>,
    /// Defaults to `1e-3 ‖M‖_F`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_prime: f64,
    #[arg(long, value_enum, default_value_t = Check::None)]
    pub check: Check,
    /// Sample probability for checks; defaults to the threshold, capped at 1.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Maps a library error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Splices `key=value` lines from `--config` into `args`, skipping keys given explicitly.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| Error::invalid("--config needs a file"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path)?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        rest.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("{path}:{}: expected key=value", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if given(&key) {
            continue;
        }
        match value {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    rest.extend(extra);
    Ok(rest)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(args: Vec<String>) -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(&a, err),
        Command::Assemble(a) => cmd_assemble(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Theory(a) => cmd_theory(&a, out),
    }
}

fn read_fragments(path: &Path) -> Result<FragmentMatrix> {
    parse_fragments(BufReader::new(File::open(path)?))
}

fn read_haplotype(path: &Path) -> Result<Haplotype> {
    let text = fs::read_to_string(path)?;
    Haplotype::parse_allele_string(text.lines().next().unwrap_or("").trim())
}

/// Writes to `path`, or to `out` when `path` is absent.
fn with_output(path: Option<&Path>, out: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(out),
    }
}

pub fn cmd_simulate(a: &SimulateArgs, err: &mut dyn Write) -> Result<()> {
    let model = match a.model {
        Model::Uniform => {
            let n = a.n.ok_or_else(|| Error::invalid("--model uniform needs --n"))?;
            let p = a.p.ok_or_else(|| Error::invalid("--model uniform needs --p"))?;
            ObservationModel::Uniform { n, p }
        }
        Model::Contiguous => {
            ObservationModel::Contiguous { coverage: a.coverage, lengths: a.read_length, placement: a.placement }
        }
    };
    let spec = SimulationSpec { m: a.m, model, error_rate: a.error_rate, seed: a.seed };
    let (truth, f) = spec.simulate()?;
    fs::create_dir_all(&a.out)?;
    let frag_path = a.out.join(format!("{}.frag", a.name));
    let truth_path = a.out.join(format!("{}.truth", a.name));
    with_output(Some(&frag_path), &mut io::sink(), |w| write_fragments(&f, w))?;
    with_output(Some(&truth_path), &mut io::sink(), |w| write_truth(&truth, &spec.echo(), w))?;
    writeln!(err, "wrote {} ({} x {}, |Ω| = {}) and {}", frag_path.display(), f.m(), f.n(), f.nnz(), truth_path.display())?;
    Ok(())
}

pub fn cmd_assemble(a: &AssembleArgs, out: &mut dyn Write) -> Result<()> {
    let f = read_fragments(&a.input)?;
    let reference = match &a.truth {
        Some(p) => {
            let t = read_truth(BufReader::new(File::open(p)?))?.truth;
            if t.m() != f.m() || t.n() != f.n() {
                return Err(Error::DimensionMismatch { expected: f.m() * f.n(), found: t.m() * t.n() });
            }
            Some(Reference::from(&t))
        }
        None => None,
    };
    let result = assemble(&f, &a.solver.config(a.seed), reference.as_ref())?;
    with_output(a.out.as_deref(), out, |w| {
        writeln!(w, "{}", result.haplotype.to_allele_string())?;
        Ok(())
    })?;
    if let Some(p) = &a.trace {
        with_output(Some(p), &mut io::sink(), |w| result.trace.write_csv(w))?;
    }
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let f = read_fragments(&a.input)?;
    let h = read_haplotype(&a.haplotype)?;
    let truth = match &a.truth {
        Some(p) => Some(read_truth(BufReader::new(File::open(p)?))?.truth),
        None => None,
    };
    let report = evaluate(&f, &h, truth.as_ref())?;
    if !a.no_header {
        writeln!(out, "{}", EvalReport::CSV_HEADER)?;
    }
    writeln!(out, "{}", report.csv_row())?;
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let Some(threads) = a.threads else { return run_bench(a, out, err) };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::invalid(e.to_string()))?;
    let (result, o, e) = pool.install(|| {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        (run_bench(a, &mut o, &mut e), o, e)
    });
    out.write_all(&o)?;
    err.write_all(&e)?;
    result
}

fn run_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let opts = CsvOptions { timestamp: !a.no_timestamp, timing: !a.no_timing };
    let solver = a.solver.config(0);
    match a.suite {
        Suite::Table3 => {
            let spec = Table3Spec {
                m: a.m,
                error_rates: a.error_rates.clone(),
                coverages: a.coverages.clone(),
                algorithms: if a.algorithms.is_empty() { vec![Algorithm::Soft] } else { a.algorithms.clone() },
                replicates: a.replicates.unwrap_or(100),
                seed: a.seed,
                lengths: a.read_length,
                placement: a.placement,
                solver,
            };
            let rows = run_table3(&spec)?;
            with_output(a.out.as_deref(), out, |w| write_table3_csv(&rows, w, opts))
        }
        Suite::Fig2 => {
            let spec = Fig2Spec {
                dims: a.dims.clone(),
                samples_per_read: a.samples_per_read.clone(),
                error_rate: a.noise,
                replicates: a.replicates.unwrap_or(100),
                seed: a.seed,
                solver,
                svt: SvtConfig { max_iters: a.svt_max_iters, ..SvtConfig::default() },
            };
            let rows = run_fig2(&spec)?;
            with_output(a.out.as_deref(), out, |w| write_fig2_csv(&rows, w, opts))
        }
        Suite::Compare => {
            let spec = CompareSpec {
                m: a.m,
                coverage: a.compare_coverage,
                error_rate: a.noise,
                instances: a.replicates.unwrap_or(50),
                algorithms: if a.algorithms.is_empty() {
                    vec![Algorithm::Hard, Algorithm::Soft]
                } else {
                    a.algorithms.clone()
                },
                seed: a.seed,
                lengths: a.read_length,
                placement: a.placement,
                solver,
            };
            let rows = run_compare(&spec)?;
            for &alg in &spec.algorithms {
                writeln!(err, "{alg}: mean MEC rate {:.6}", mean_mec_rate(&rows, alg))?;
            }
            with_output(a.out.as_deref(), out, |w| write_compare_csv(&rows, w, opts))
        }
    }
}

pub fn cmd_theory(a: &TheoryArgs, out: &mut dyn Write) -> Result<()> {
    let mut tp = TheoryParams::new(a.m, a.n, a.p_e);
    tp.mu = a.mu;
    tp.c = a.c;
    tp.c_prime = a.c_prime;
    tp.delta2 = a.delta2.unwrap_or(0.5 * tp.delta2_max());
    if let Some(e) = a.epsilon {
        tp.epsilon = e;
    }
    tp.validate()?;
    writeln!(out, "quantity,value")?;
    for (k, v) in theory::report(&tp)? {
        writeln!(out, "{k},{v:.6e}")?;
    }
    let p = match a.p {
        Some(p) => p,
        None => theory::sample_prob_threshold(&tp)?.min(1.0),
    };
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|s| a.seed + s).collect();
    match a.check {
        Check::None => {}
        Check::Noise => {
            let v = theory::validate_noise_bound(&tp, p, &seeds)?;
            let max = v.measured.iter().cloned().fold(0.0, f64::max);
            writeln!(out, "check_p,{p}")?;
            writeln!(out, "noise_max_measured,{max:.6e}")?;
            writeln!(out, "noise_pass_rate,{:.4}", v.pass_rate())?;
        }
        Check::Recovery => {
            let checks = theory::validate_recovery(&tp, p, &SolverConfig::default(), &seeds)?;
            let rate = |f: &dyn Fn(&theory::RecoveryCheck) -> bool| {
                checks.iter().filter(|c| f(c)).count() as f64 / checks.len().max(1) as f64
            };
            writeln!(out, "check_p,{p}")?;
            writeln!(out, "error_pass_rate,{:.4}", rate(&|c| c.error_ok()))?;
            writeln!(out, "mec_pass_rate,{:.4}", rate(&|c| c.mec_ok()))?;
        }
        Check::Contraction => {
            let mut verdicts = Vec::new();
            for &seed in &seeds {
                let (truth, f) = SimulationSpec::uniform(tp.m, tp.n, p, 0.0, seed).simulate()?;
                let cfg = SolverConfig { init_seed: seed, ..SolverConfig::default() };
                let r = assemble(&f, &cfg, Some(&Reference::from(&truth)))?;
                verdicts.extend(theory::contraction_check(&r.trace, &tp, 1e-6, 1e-10)?);
            }
            writeln!(out, "check_p,{p}")?;
            writeln!(out, "half_steps_checked,{}", verdicts.len())?;
            writeln!(out, "contraction_compliance,{:.4}", theory::compliance(&verdicts))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn run_capture(s: &str) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(args(s), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_required_flag_is_usage_error() {
        let (code, _, err) = run_capture("hapaltmin simulate --out /tmp/x");
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("--m"));
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run_capture("hapaltmin --help").0, EXIT_OK);
    }

    #[test]
    fn theory_prints_report() {
        let (code, out, _) = run_capture("hapaltmin theory --m 100 --n 200 --p-e 0.01");
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("quantity,value\n"));
        assert!(out.contains("sample_prob_threshold,"));
    }

    #[test]
    fn theory_rejects_bad_shape() {
        assert_eq!(run_capture("hapaltmin theory --m 200 --n 100").0, EXIT_INPUT);
    }

    #[test]
    fn config_lines_fill_missing_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\nm = 30\np_e=0.02\nn=10\n").unwrap();
        let expanded =
            expand_config(args(&format!("hapaltmin theory --config {} --n 60", cfg.display()))).unwrap();
        assert_eq!(expanded, args("hapaltmin theory --n 60 --m=30 --p-e=0.02"));
    }

    #[test]
    fn dims_parser() {
        assert_eq!(parse_dims("50x100").unwrap(), (50, 100));
        assert!(parse_dims("50").is_err());
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::InitFailure("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_INPUT);
    }
}
