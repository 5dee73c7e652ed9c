//! Benchmark grids: reconstruction rate over error rate × coverage, the
//! alternating solver against singular value thresholding over sample size,
//! and a paired MEC comparison between solver variants.
//!
//! Every replicate draws its instance from a seed derived from the seed base,
//! the grid cell and the replicate index, so cells can be run alone or in any
//! order and give the same numbers.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fragmat::FragmentMatrix;
use crate::metrics::{mec_score, reconstruction_rate, HaplotypePair};
use crate::rng::derive_seed;
use crate::simread::{ObservationModel, Placement, ReadLengths, SimulationSpec};
use crate::solver::{assemble, Algorithm, SolverConfig};
use crate::svtbase::{svt_complete, SvtConfig};
use crate::theory::{check_recovery, TheoryParams};

pub const TABLE3_HEADER: &str =
    "error_rate,coverage,algorithm,replicates,mean_rate,sd_rate,mean_mec_norm,mean_runtime_ms,bound_pass_rate";
pub const FIG2_HEADER: &str = "m,n,p,sample_size,method,replicates,mean_mec_norm,mean_mec_rate,mean_runtime_ms";
pub const COMPARE_HEADER: &str = "instance,seed,algorithm,mec,observed,mec_rate";

/// Seed of replicate `rep` in the grid cell identified by `cell`.
pub fn replicate_seed(base: u64, cell: &[f64], rep: usize) -> u64 {
    let key = cell.iter().fold(0x51_7cc1_b727_220a, |acc, x| derive_seed(acc, x.to_bits()));
    derive_seed(derive_seed(base, key), rep as u64)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; `0` for fewer than two values.
fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Theory parameters for an `m × n` instance, transposed when `n < m`
/// (rank-one completion is symmetric under transposition).
fn theory_params(m: usize, n: usize, p_e: f64) -> TheoryParams {
    TheoryParams::new(m.min(n), m.max(n), p_e)
}

/// Reconstruction-rate grid over sequencing error rate and coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct Table3Spec {
    pub m: usize,
    pub error_rates: Vec<f64>,
    pub coverages: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub replicates: usize,
    pub seed: u64,
    pub lengths: ReadLengths,
    pub placement: Placement,
    pub solver: SolverConfig,
}

impl Default for Table3Spec {
    fn default() -> Self {
        Table3Spec {
            m: 700,
            error_rates: vec![0.0, 0.1, 0.2, 0.3],
            coverages: vec![3.0, 5.0, 8.0, 10.0],
            algorithms: vec![Algorithm::Soft],
            replicates: 100,
            seed: 0,
            lengths: ReadLengths::default(),
            placement: Placement::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl Table3Spec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be >= 1"));
        }
        if self.error_rates.is_empty() || self.coverages.is_empty() || self.algorithms.is_empty() {
            return Err(Error::invalid("benchmark grids must be non-empty"));
        }
        if self.m < 2 {
            return Err(Error::invalid("m must be >= 2"));
        }
        self.solver.validate()
    }
}

/// One solved replicate of a reconstruction-rate cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Table3Replicate {
    pub rate: f64,
    /// `MEC(û)/(mn)`.
    pub mec_norm: f64,
    /// `MEC(û)/|Ω|`.
    pub mec_rate: f64,
    pub runtime_ms: f64,
    /// Normalized MEC of `sign(û v̂ᵀ)` within the MEC bound; absent when the
    /// bound is undefined for the cell.
    pub bound_ok: Option<bool>,
}

/// Solves one replicate of cell `(error_rate, coverage)` with `algorithm`.
/// The instance does not depend on the algorithm, so variants are paired.
pub fn table3_replicate(
    spec: &Table3Spec,
    error_rate: f64,
    coverage: f64,
    algorithm: Algorithm,
    rep: usize,
) -> Result<Table3Replicate> {
    let seed = replicate_seed(spec.seed, &[error_rate, coverage], rep);
    let sim = SimulationSpec {
        m: spec.m,
        model: ObservationModel::Contiguous { coverage, lengths: spec.lengths, placement: spec.placement },
        error_rate,
        seed,
    };
    let (truth, f) = sim.simulate()?;
    let f = &f;
    let cfg = SolverConfig { algorithm, init_seed: seed, ..spec.solver.clone() };
    let start = Instant::now();
    let result = assemble(f, &cfg, None)?;
    let runtime_ms = elapsed_ms(start);

    let rate = reconstruction_rate(
        &HaplotypePair::complementary(&truth.haplotype),
        &HaplotypePair::complementary(&result.haplotype),
    )?;
    let mec = mec_score(f, &result.haplotype)? as f64;
    let tp = theory_params(f.m(), f.n(), error_rate);
    let bound_ok = check_recovery(&tp, f, &truth, &result.u, &result.v).ok().map(|c| c.mec_ok());
    Ok(Table3Replicate {
        rate,
        mec_norm: mec / (f.m() * f.n()) as f64,
        mec_rate: mec / f.nnz() as f64,
        runtime_ms,
        bound_ok,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Row {
    pub error_rate: f64,
    pub coverage: f64,
    pub algorithm: Algorithm,
    pub replicates: usize,
    pub mean_rate: f64,
    pub sd_rate: f64,
    pub mean_mec_norm: f64,
    pub mean_runtime_ms: f64,
    pub bound_pass_rate: Option<f64>,
    /// Per-replicate reconstruction rates, in replicate order.
    pub rates: Vec<f64>,
}

/// Runs one grid cell for one algorithm, replicates in parallel.
pub fn run_table3_cell(spec: &Table3Spec, error_rate: f64, coverage: f64, algorithm: Algorithm) -> Result<Table3Row> {
    let reps = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| table3_replicate(spec, error_rate, coverage, algorithm, rep))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = reps.iter().map(|r| r.rate).collect();
    let verdicts: Vec<bool> = reps.iter().filter_map(|r| r.bound_ok).collect();
    Ok(Table3Row {
        error_rate,
        coverage,
        algorithm,
        replicates: reps.len(),
        mean_rate: mean(&rates),
        sd_rate: sd(&rates),
        mean_mec_norm: mean(&reps.iter().map(|r| r.mec_norm).collect::<Vec<_>>()),
        mean_runtime_ms: mean(&reps.iter().map(|r| r.runtime_ms).collect::<Vec<_>>()),
        bound_pass_rate: (!verdicts.is_empty())
            .then(|| verdicts.iter().filter(|&&ok| ok).count() as f64 / verdicts.len() as f64),
        rates,
    })
}

/// Runs the whole grid; rows ordered by error rate, coverage, algorithm.
pub fn run_table3(spec: &Table3Spec) -> Result<Vec<Table3Row>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &e in &spec.error_rates {
        for &c in &spec.coverages {
            for &alg in &spec.algorithms {
                rows.push(run_table3_cell(spec, e, c, alg)?);
            }
        }
    }
    Ok(rows)
}

/// CSV output options shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    /// Emit a `# generated ...` first line.
    pub timestamp: bool,
    /// Emit measured runtimes; otherwise the column reads `NA` so output is byte-reproducible.
    pub timing: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { timestamp: true, timing: true }
    }
}

fn write_preamble<W: Write>(out: &mut W, opts: CsvOptions, header: &str) -> Result<()> {
    if opts.timestamp {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        writeln!(out, "# generated unix_time={secs}")?;
    }
    writeln!(out, "{header}")?;
    Ok(())
}

fn runtime_field(ms: f64, opts: CsvOptions) -> String {
    if opts.timing {
        format!("{ms:.3}")
    } else {
        "NA".into()
    }
}

pub fn write_table3_csv<W: Write>(rows: &[Table3Row], mut out: W, opts: CsvOptions) -> Result<()> {
    write_preamble(&mut out, opts, TABLE3_HEADER)?;
    for r in rows {
        let bound = r.bound_pass_rate.map(|b| format!("{b:.4}")).unwrap_or_else(|| "NA".into());
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6e},{},{}",
            r.error_rate,
            r.coverage,
            r.algorithm,
            r.replicates,
            r.mean_rate,
            r.sd_rate,
            r.mean_mec_norm,
            runtime_field(r.mean_runtime_ms, opts),
            bound
        )?;
    }
    Ok(())
}

/// Alternating solver versus singular value thresholding on uniform samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Spec {
    pub dims: Vec<(usize, usize)>,
    /// Sample sizes as multiples of `n` (observed SNPs per read on average).
    pub samples_per_read: Vec<f64>,
    pub error_rate: f64,
    pub replicates: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub svt: SvtConfig,
}

impl Default for Fig2Spec {
    fn default() -> Self {
        Fig2Spec {
            dims: vec![(50, 100), (250, 500)],
            samples_per_read: vec![1.0, 2.0, 4.0, 8.0],
            error_rate: 0.05,
            replicates: 100,
            seed: 0,
            solver: SolverConfig::default(),
            svt: SvtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    AltMin,
    Svt,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AltMin => "altmin",
            Method::Svt => "svt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Row {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub sample_size: usize,
    pub method: Method,
    pub replicates: usize,
    /// Mean `MEC(ĥ)/(mn)`.
    pub mean_mec_norm: f64,
    /// Mean `MEC(ĥ)/|Ω|`.
    pub mean_mec_rate: f64,
    pub mean_runtime_ms: f64,
}

/// MEC of both methods on one shared instance: `(altmin, svt)` as `(mec, runtime_ms)`, plus `|Ω|`.
fn fig2_replicate(spec: &Fig2Spec, m: usize, n: usize, p: f64, rep: usize) -> Result<([(f64, f64); 2], usize)> {
    let seed = replicate_seed(spec.seed, &[m as f64, n as f64, p], rep);
    let (_, f) = SimulationSpec::uniform(m, n, p, spec.error_rate, seed).simulate()?;
    if f.nnz() == 0 {
        return Ok(([(0.0, 0.0), (0.0, 0.0)], 0));
    }
    let worst = f.nnz() as f64;

    let start = Instant::now();
    let alt = assemble(&f, &SolverConfig { init_seed: seed, ..spec.solver.clone() }, None);
    let alt_ms = elapsed_ms(start);
    // A failed start leaves no haplotype; score it as every observation wrong.
    let alt_mec = match alt {
        Ok(r) => mec_score(&f, &r.haplotype)? as f64,
        Err(e) if e.is_numerical() => worst,
        Err(e) => return Err(e),
    };

    let start = Instant::now();
    let svt = svt_complete(&f, &SvtConfig { seed, ..spec.svt.clone() })?;
    let svt_ms = elapsed_ms(start);
    let svt_mec = match svt.haplotype() {
        Some(h) => mec_score(&f, &h)? as f64,
        None => worst,
    };
    Ok(([(alt_mec, alt_ms), (svt_mec, svt_ms)], f.nnz()))
}

pub fn run_fig2(spec: &Fig2Spec) -> Result<Vec<Fig2Row>> {
    if spec.replicates == 0 || spec.dims.is_empty() || spec.samples_per_read.is_empty() {
        return Err(Error::invalid("fig2 grids and replicates must be non-empty"));
    }
    spec.solver.validate()?;
    spec.svt.validate()?;
    let mut rows = Vec::new();
    for &(m, n) in &spec.dims {
        for &k in &spec.samples_per_read {
            let p = k / m as f64;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("{k} samples per read exceeds m = {m}")));
            }
            let reps = (0..spec.replicates)
                .into_par_iter()
                .map(|rep| fig2_replicate(spec, m, n, p, rep))
                .collect::<Result<Vec<_>>>()?;
            let mn = (m * n) as f64;
            for (idx, method) in [Method::AltMin, Method::Svt].into_iter().enumerate() {
                let norm: Vec<f64> = reps.iter().map(|(r, _)| r[idx].0 / mn).collect();
                let rate: Vec<f64> =
                    reps.iter().filter(|(_, o)| *o > 0).map(|(r, o)| r[idx].0 / *o as f64).collect();
                rows.push(Fig2Row {
                    m,
                    n,
                    p,
                    sample_size: (p * mn).round() as usize,
                    method,
                    replicates: reps.len(),
                    mean_mec_norm: mean(&norm),
                    mean_mec_rate: mean(&rate),
                    mean_runtime_ms: mean(&reps.iter().map(|(r, _)| r[idx].1).collect::<Vec<_>>()),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_fig2_csv<W: Write>(rows: &[Fig2Row], mut out: W, opts: CsvOptions) -> Result<()> {
    write_preamble(&mut out, opts, FIG2_HEADER)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6e},{:.6},{}",
            r.m,
            r.n,
            r.p,
            r.sample_size,
            r.method.name(),
            r.replicates,
            r.mean_mec_norm,
            r.mean_mec_rate,
            runtime_field(r.mean_runtime_ms, opts)
        )?;
    }
    Ok(())
}

/// Paired MEC comparison of solver variants on contiguous-read instances.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    pub m: usize,
    pub coverage: f64,
    pub error_rate: f64,
    pub instances: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub lengths: ReadLengths,
    pub placement: Placement,
    pub solver: SolverConfig,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            m: 700,
            coverage: 5.0,
            error_rate: 0.05,
            instances: 50,
            algorithms: vec![Algorithm::Hard, Algorithm::Soft],
            seed: 0,
            lengths: ReadLengths::default(),
            placement: Placement::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub instance: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mec: usize,
    pub observed: usize,
}

impl CompareRow {
    /// `MEC/|Ω|`.
    pub fn mec_rate(&self) -> f64 {
        self.mec as f64 / self.observed as f64
    }
}

fn compare_instance(spec: &CompareSpec, instance: usize) -> Result<(u64, FragmentMatrix)> {
    let seed = replicate_seed(spec.seed, &[spec.m as f64, spec.coverage, spec.error_rate], instance);
    let sim = SimulationSpec {
        m: spec.m,
        model: ObservationModel::Contiguous { coverage: spec.coverage, lengths: spec.lengths, placement: spec.placement },
        error_rate: spec.error_rate,
        seed,
    };
    Ok((seed, sim.simulate()?.1))
}

pub fn run_compare(spec: &CompareSpec) -> Result<Vec<CompareRow>> {
    if spec.instances == 0 || spec.algorithms.is_empty() {
        return Err(Error::invalid("comparison needs at least one instance and one algorithm"));
    }
    spec.solver.validate()?;
    let per_instance = (0..spec.instances)
        .into_par_iter()
        .map(|i| {
            let (seed, f) = compare_instance(spec, i)?;
            spec.algorithms
                .iter()
                .map(|&algorithm| {
                    let cfg = SolverConfig { algorithm, init_seed: seed, ..spec.solver.clone() };
                    let r = assemble(&f, &cfg, None)?;
                    Ok(CompareRow { instance: i, seed, algorithm, mec: mec_score(&f, &r.haplotype)?, observed: f.nnz() })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

/// Mean MEC rate of one algorithm over a comparison.
pub fn mean_mec_rate(rows: &[CompareRow], algorithm: Algorithm) -> f64 {
    mean(&rows.iter().filter(|r| r.algorithm == algorithm).map(CompareRow::mec_rate).collect::<Vec<_>>())
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], mut out: W, opts: CsvOptions) -> Result<()> {
    write_preamble(&mut out, CsvOptions { timing: false, ..opts }, COMPARE_HEADER)?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{:.6}", r.instance, r.seed, r.algorithm, r.mec, r.observed, r.mec_rate())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_table3() -> Table3Spec {
        Table3Spec {
            m: 60,
            error_rates: vec![0.0, 0.1],
            coverages: vec![3.0, 6.0],
            algorithms: vec![Algorithm::Soft, Algorithm::Hard],
            replicates: 3,
            seed: 11,
            ..Table3Spec::default()
        }
    }

    #[test]
    fn table3_is_deterministic_and_cell_independent() {
        let spec = small_table3();
        let rows = run_table3(&spec).unwrap();
        assert_eq!(rows.len(), 8);
        let again = run_table3(&spec).unwrap();
        let csv = |rows: &[Table3Row]| {
            let mut buf = Vec::new();
            write_table3_csv(rows, &mut buf, CsvOptions { timestamp: false, timing: false }).unwrap();
            String::from_utf8(buf).unwrap()
        };
        assert_eq!(csv(&rows), csv(&again));
        let alone = run_table3_cell(&spec, 0.1, 6.0, Algorithm::Hard).unwrap();
        let in_grid = rows.iter().find(|r| r.error_rate == 0.1 && r.coverage == 6.0 && r.algorithm == Algorithm::Hard);
        assert_eq!(alone.rates, in_grid.unwrap().rates);
    }

    #[test]
    fn table3_csv_schema() {
        let rows = run_table3(&Table3Spec { error_rates: vec![0.0], coverages: vec![4.0], ..small_table3() }).unwrap();
        let mut buf = Vec::new();
        write_table3_csv(&rows, &mut buf, CsvOptions::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# generated"));
        assert_eq!(lines[1], TABLE3_HEADER);
        assert_eq!(lines.len(), 2 + rows.len());
        for l in &lines[2..] {
            assert_eq!(l.split(',').count(), TABLE3_HEADER.split(',').count());
        }
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let a = replicate_seed(0, &[0.1, 3.0], 0);
        assert_ne!(a, replicate_seed(0, &[0.1, 3.0], 1));
        assert_ne!(a, replicate_seed(0, &[0.1, 5.0], 0));
        assert_ne!(a, replicate_seed(1, &[0.1, 3.0], 0));
    }

    #[test]
    fn fig2_rows_pair_methods() {
        let spec = Fig2Spec {
            dims: vec![(20, 40)],
            samples_per_read: vec![2.0, 8.0],
            replicates: 2,
            svt: SvtConfig { max_iters: 30, ..SvtConfig::default() },
            ..Fig2Spec::default()
        };
        let rows = run_fig2(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].method, Method::AltMin);
        assert_eq!(rows[1].method, Method::Svt);
        assert_eq!(rows[0].sample_size, 80);
        let mut buf = Vec::new();
        write_fig2_csv(&rows, &mut buf, CsvOptions { timestamp: false, timing: true }).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(FIG2_HEADER));
    }

    #[test]
    fn compare_rows_are_paired() {
        let spec = CompareSpec { m: 80, instances: 3, ..CompareSpec::default() };
        let rows = run_compare(&spec).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].observed, rows[1].observed);
        assert!(mean_mec_rate(&rows, Algorithm::Soft).is_finite());
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((sd(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(sd(&[4.0]), 0.0);
    }
}
