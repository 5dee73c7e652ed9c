//! Rank-one alternating minimization for haplotype assembly.
//!
//! All three variants share the same start: the top left singular vector of
//! `P_Ω(R)/p̂` from the power method, with entries above `c/√m` in magnitude
//! zeroed and the result renormalized. They then alternate a read-membership
//! update and a haplotype update:
//!
//! * [`Algorithm::LeastSquares`] solves each coordinate in closed form,
//!   `v̂_j = Σ R_ij û_i / Σ û_i²`, and rounds only at the end.
//! * [`Algorithm::Hard`] projects every update onto `{±1}`: `v̂_j = sign(Σ R_ij û_i)`.
//! * [`Algorithm::Soft`] replaces the sign by `f(x) = (eˣ-1)/(eˣ+1)` applied to
//!   the sum scaled by `1/m` (resp. `1/n`), normalizing after each half-step.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fragmat::{sign, FragmentMatrix, Haplotype};
use crate::linalg::{all_finite, diff_norm, norm, normalized, power_method, random_unit};
use crate::metrics::{mec_of_signs, principal_angle_dist};
use crate::simread::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    /// Real-valued least-squares updates, rounded at the end.
    LeastSquares,
    /// Updates projected onto `{±1}` at every step.
    Hard,
    /// Logistic relaxation of the hard updates.
    #[default]
    Soft,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::LeastSquares, Algorithm::Hard, Algorithm::Soft];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LeastSquares => "ls",
            Algorithm::Hard => "hard",
            Algorithm::Soft => "soft",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "least_squares" | "least-squares" => Ok(Algorithm::LeastSquares),
            "hard" => Ok(Algorithm::Hard),
            "soft" => Ok(Algorithm::Soft),
            other => Err(Error::invalid(format!("unknown algorithm `{other}` (expected ls, hard or soft)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Outer iteration budget `T`.
    pub max_outer_iters: usize,
    /// Stop once the normalized iterate moves less than this.
    pub tol: f64,
    pub power_iters: usize,
    /// Relative change of the singular-value estimate that ends the power method.
    pub power_tol: f64,
    /// Clipping threshold is `clip_factor / √m`.
    pub clip_factor: f64,
    /// Scale for the power step; defaults to the sample probability.
    pub p_hat: Option<f64>,
    /// Seed of the power method's random start vector.
    pub init_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Soft,
            max_outer_iters: 100,
            tol: 1e-6,
            power_iters: 200,
            power_tol: 1e-10,
            clip_factor: 2.0,
            p_hat: None,
            init_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        SolverConfig { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(Error::invalid("max_outer_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if !(self.clip_factor > 0.0) {
            return Err(Error::invalid("clip_factor must be positive"));
        }
        if self.power_iters == 0 {
            return Err(Error::invalid("power_iters must be >= 1"));
        }
        if let Some(p) = self.p_hat {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("p_hat must lie in (0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Output of the power-iteration-and-clipping start.
#[derive(Debug, Clone)]
pub struct InitOutcome {
    /// Clipped, renormalized start vector `û^(0)`.
    pub u: Vec<f64>,
    /// Top singular value of `P_Ω(R)/p̂`.
    pub sigma: f64,
    pub power_iterations: usize,
    pub power_converged: bool,
    pub clipped: usize,
}

/// Power iteration on `P_Ω(R)/p̂` followed by clipping at `c/√m`.
pub fn init_power_clip(f: &FragmentMatrix, cfg: &SolverConfig) -> Result<InitOutcome> {
    if f.nnz() == 0 {
        return Err(Error::InitFailure("no observed entries".into()));
    }
    let p_hat = cfg.p_hat.unwrap_or_else(|| f.sample_probability());
    if !(p_hat > 0.0) {
        return Err(Error::InitFailure(format!("p_hat must be positive, got {p_hat}")));
    }
    let scale = 1.0 / p_hat;
    let apply = |y: &[f64]| (0..f.m()).map(|i| f.row_dot(i, y) * scale).collect::<Vec<_>>();
    let apply_t = |x: &[f64]| (0..f.n()).map(|j| f.column_dot(j, x) * scale).collect::<Vec<_>>();
    let start = random_unit(f.n(), cfg.init_seed);
    let top = power_method(apply, apply_t, start, cfg.power_iters, cfg.power_tol).map_err(|e| match e {
        Error::ZeroVector => Error::InitFailure("observed matrix annihilates the start vector".into()),
        other => other,
    })?;

    let threshold = cfg.clip_factor / (f.m() as f64).sqrt();
    let mut clipped = 0;
    let u: Vec<f64> = top
        .left
        .iter()
        .map(|&x| {
            if x.abs() > threshold {
                clipped += 1;
                0.0
            } else {
                x
            }
        })
        .collect();
    let u = normalized(&u).map_err(|_| Error::InitFailure(format!("all {clipped} nonzero entries were clipped")))?;
    Ok(InitOutcome {
        u,
        sigma: top.sigma,
        power_iterations: top.iterations,
        power_converged: top.converged,
        clipped,
    })
}

/// Least-squares half-step output.
#[derive(Debug, Clone, PartialEq)]
pub struct LsUpdate {
    pub values: Vec<f64>,
    /// Coordinates with empty support or zero denominator, set to `0`.
    pub degenerate: Vec<usize>,
}

fn ls_coordinate(terms: impl Iterator<Item = (i8, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (r, x) in terms {
        num += f64::from(r) * x;
        den += x * x;
    }
    (den > 0.0).then(|| num / den)
}

fn collect_ls(len: usize, coord: impl Fn(usize) -> Option<f64>) -> LsUpdate {
    let mut degenerate = Vec::new();
    let values = (0..len)
        .map(|k| {
            coord(k).unwrap_or_else(|| {
                degenerate.push(k);
                0.0
            })
        })
        .collect();
    LsUpdate { values, degenerate }
}

/// `v̂_j = Σ_{i|(i,j)∈Ω} R_ij û_i / Σ_{i|(i,j)∈Ω} û_i²`.
pub fn update_v_least_squares(f: &FragmentMatrix, u: &[f64]) -> LsUpdate {
    collect_ls(f.n(), |j| ls_coordinate(f.column(j).map(|(i, r)| (r, u[i]))))
}

/// `û_i = Σ_{j|(i,j)∈Ω} R_ij v̂_j / Σ_{j|(i,j)∈Ω} v̂_j²`.
pub fn update_u_least_squares(f: &FragmentMatrix, v: &[f64]) -> LsUpdate {
    collect_ls(f.m(), |i| ls_coordinate(f.row(i).map(|(j, r)| (r, v[j]))))
}

/// `v̂_j = +1` if `Σ R_ij û_i ≥ 0`, else `-1`.
pub fn update_v_hard(f: &FragmentMatrix, u: &[f64]) -> Vec<i8> {
    (0..f.n()).map(|j| sign(f.column_dot(j, u))).collect()
}

/// `û_i = +1` if `Σ R_ij v̂_j ≥ 0`, else `-1`.
pub fn update_u_hard(f: &FragmentMatrix, v: &[f64]) -> Vec<i8> {
    (0..f.m()).map(|i| sign(f.row_dot(i, v))).collect()
}

/// `f(x) = (eˣ - 1)/(eˣ + 1)`, evaluated as `tanh(x/2)`.
pub fn logistic(x: f64) -> f64 {
    (0.5 * x).tanh()
}

/// `v̂_j = f((1/m) Σ R_ij u_i)` for the normalized iterate `u`.
pub fn update_v_soft(f: &FragmentMatrix, u: &[f64]) -> Vec<f64> {
    let scale = 1.0 / f.m() as f64;
    (0..f.n()).map(|j| logistic(scale * f.column_dot(j, u))).collect()
}

/// `û_i = f((1/n) Σ R_ij v_j)` for the normalized iterate `v`.
pub fn update_u_soft(f: &FragmentMatrix, v: &[f64]) -> Vec<f64> {
    let scale = 1.0 / f.n() as f64;
    (0..f.m()).map(|i| logistic(scale * f.row_dot(i, v))).collect()
}

/// Reference factors used only for tracing.
#[derive(Debug, Clone)]
pub struct Reference {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl From<&GroundTruth> for Reference {
    fn from(t: &GroundTruth) -> Self {
        Reference { u: t.u_star(), v: t.v_star() }
    }
}

/// One outer iteration. Row `0` describes the start vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub dist_u: Option<f64>,
    pub dist_v: Option<f64>,
    /// MEC of the entrywise sign of the current haplotype iterate.
    pub mec: usize,
    /// `‖u^(t) - u^(t-1)‖` on normalized iterates; absent for row `0`.
    pub delta: Option<f64>,
    /// Least-squares coordinates that fell back to `0` in this iteration.
    pub degenerate: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub power_iterations: usize,
    pub power_converged: bool,
    pub clipped: usize,
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    /// `dist(u^(t), u_ref)` for `t = 0, 1, ...` when a reference was supplied.
    pub fn dist_u(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.dist_u).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,dist,mec,delta")?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_default();
        for r in &self.records {
            writeln!(out, "{},{},{},{}", r.iteration, opt(r.dist_u), r.mec, opt(r.delta))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AssemblyResult {
    /// Rounded haplotype, oriented so its first entry is `+1`.
    pub haplotype: Haplotype,
    /// Rounded read memberships, in the same orientation.
    pub membership: Vec<i8>,
    pub iterations: usize,
    pub converged: bool,
    /// Final normalized real iterates, in the same orientation.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub trace: SolverTrace,
}

/// Runs the configured variant from the power-iteration start.
pub fn assemble(f: &FragmentMatrix, cfg: &SolverConfig, reference: Option<&Reference>) -> Result<AssemblyResult> {
    cfg.validate()?;
    let init = init_power_clip(f, cfg)?;
    let mut result = assemble_from(f, cfg, init.u, reference)?;
    result.trace.power_iterations = init.power_iterations;
    result.trace.power_converged = init.power_converged;
    result.trace.clipped = init.clipped;
    Ok(result)
}

/// Runs the configured variant from a caller-supplied start vector.
pub fn assemble_from(
    f: &FragmentMatrix,
    cfg: &SolverConfig,
    init: Vec<f64>,
    reference: Option<&Reference>,
) -> Result<AssemblyResult> {
    cfg.validate()?;
    if init.len() != f.m() {
        return Err(Error::DimensionMismatch { expected: f.m(), found: init.len() });
    }
    if let Some(r) = reference {
        if r.u.len() != f.m() || r.v.len() != f.n() {
            return Err(Error::invalid("reference dimensions do not match the fragment matrix"));
        }
    }
    let mut u = normalized(&init).map_err(|_| Error::InitFailure("start vector is zero".into()))?;
    let mut v = vec![0.0; f.n()];

    let dist = |x: &[f64], reference: &[f64]| principal_angle_dist(reference, x).ok();
    let mut trace = SolverTrace::default();
    trace.records.push(TraceRecord {
        iteration: 0,
        dist_u: reference.and_then(|r| dist(&u, &r.u)),
        dist_v: None,
        mec: mec_of_signs(f, &signs(&u)),
        delta: None,
        degenerate: 0,
    });

    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=cfg.max_outer_iters {
        let (v_next, u_next, degenerate) = match cfg.algorithm {
            Algorithm::LeastSquares => {
                let vs = update_v_least_squares(f, &u);
                let us = update_u_least_squares(f, &vs.values);
                let degenerate = vs.degenerate.len() + us.degenerate.len();
                (vs.values, us.values, degenerate)
            }
            Algorithm::Hard => {
                let vs = to_f64(&update_v_hard(f, &u));
                let us = to_f64(&update_u_hard(f, &vs));
                (vs, us, 0)
            }
            Algorithm::Soft => {
                let vs = renormalize(update_v_soft(f, &u), "membership update")?;
                let us = renormalize(update_u_soft(f, &vs), "haplotype update")?;
                (vs, us, 0)
            }
        };
        if !all_finite(&v_next) || !all_finite(&u_next) {
            return Err(Error::NonFinite("alternating update"));
        }
        iterations = t;

        // The least-squares iterate may legitimately vanish (e.g. all SNPs
        // uncovered); keep comparing on the unit sphere whenever possible.
        let u_unit = if norm(&u_next) > 0.0 { normalized(&u_next)? } else { u_next.clone() };
        let delta = diff_norm(&u_unit, &u);
        trace.records.push(TraceRecord {
            iteration: t,
            dist_u: reference.and_then(|r| dist(&u_unit, &r.u)),
            dist_v: reference.and_then(|r| dist(&v_next, &r.v)),
            mec: mec_of_signs(f, &signs(&u_unit)),
            delta: Some(delta),
            degenerate,
        });
        u = u_unit;
        v = v_next;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }

    let mut haplotype = signs(&u);
    let mut membership = signs(&v);
    let mut v = if norm(&v) > 0.0 { normalized(&v)? } else { v };
    if haplotype.first() == Some(&-1) {
        for x in haplotype.iter_mut().chain(membership.iter_mut()) {
            *x = -*x;
        }
        for x in u.iter_mut().chain(v.iter_mut()) {
            *x = -*x;
        }
    }
    Ok(AssemblyResult {
        haplotype: Haplotype::from_signs(haplotype)?,
        membership,
        iterations,
        converged,
        u,
        v,
        trace,
    })
}

fn signs(x: &[f64]) -> Vec<i8> {
    x.iter().map(|&v| sign(v)).collect()
}

fn to_f64(x: &[i8]) -> Vec<f64> {
    x.iter().map(|&v| f64::from(v)).collect()
}

fn renormalize(x: Vec<f64>, stage: &'static str) -> Result<Vec<f64>> {
    normalized(&x).map_err(|e| match e {
        Error::ZeroVector => Error::InitFailure(format!("{stage} produced the zero vector")),
        Error::NonFinite(_) => Error::NonFinite(stage),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragmat::{parse_fragments, Entry};
    use crate::metrics::mec_score;
    use crate::simread::{generate_truth, observe_uniform};

    fn unit(x: &[f64]) -> Vec<f64> {
        normalized(x).unwrap()
    }

    #[test]
    fn init_recovers_exact_rank_one() {
        let t = generate_truth(40, 70, 2).unwrap();
        let init = init_power_clip(&t.full_matrix(), &SolverConfig::default()).unwrap();
        assert!(principal_angle_dist(&init.u, &t.u_star()).unwrap() < 1e-8);
        assert_eq!(init.clipped, 0);
    }

    #[test]
    fn init_failures() {
        let empty = FragmentMatrix::from_entries(3, 3, vec![]).unwrap();
        assert!(matches!(init_power_clip(&empty, &SolverConfig::default()), Err(Error::InitFailure(_))));
        // A single observed cell concentrates all mass on one SNP of nine.
        let spike = FragmentMatrix::from_entries(9, 3, vec![Entry::new(4, 1, 1)]).unwrap();
        let err = init_power_clip(&spike, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InitFailure(_)), "{err}");
        assert!(err.is_numerical());
    }

    #[test]
    fn least_squares_examples() {
        let f = FragmentMatrix::from_entries(3, 2, vec![Entry::new(0, 0, 1), Entry::new(1, 0, 1)]).unwrap();
        let up = update_v_least_squares(&f, &[2.0, 1.0, 5.0]);
        assert!((up.values[0] - 0.6).abs() < 1e-15);
        assert_eq!(up.values[1], 0.0);
        assert_eq!(up.degenerate, vec![1]);
    }

    #[test]
    fn least_squares_on_exact_model() {
        let t = generate_truth(10, 12, 4).unwrap();
        let f = t.full_matrix();
        let up = update_v_least_squares(&f, &t.u_star());
        // v̂_j = σ*·v*_j / ‖u*‖² = √m · v̂*_j
        for (vj, &tj) in up.values.iter().zip(&t.membership) {
            assert!((vj - 10f64.sqrt() * f64::from(tj)).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_update_examples() {
        let f = parse_fragments("3 2\n1 1 0 2 0 3 1\n".as_bytes()).unwrap();
        let u = unit(&[1.0, 1.0, 1.0]);
        assert_eq!(update_v_hard(&f, &u), vec![1, 1]);
        let tie = FragmentMatrix::from_entries(3, 1, vec![Entry::new(0, 0, 1), Entry::new(1, 0, -1)]).unwrap();
        assert_eq!(update_v_hard(&tie, &unit(&[1.0, 1.0, 0.0])), vec![1]);
    }

    #[test]
    fn logistic_matches_definition() {
        for &x in &[-3.0, -0.5, -1e-3, 0.0, 1e-7, 0.25, 1.0, 4.0] {
            let direct = (f64::exp(x) - 1.0) / (f64::exp(x) + 1.0);
            assert!((logistic(x) - direct).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn soft_update_on_exact_model() {
        let (m, n) = (16usize, 9usize);
        let t = generate_truth(m, n, 6).unwrap();
        let f = t.full_matrix();
        let v = update_v_soft(&f, &t.u_star());
        let expected = logistic(1.0 / (m as f64).sqrt());
        for (vj, &tj) in v.iter().zip(&t.membership) {
            assert!((vj - expected * f64::from(tj)).abs() < 1e-15);
        }
        let empty = FragmentMatrix::from_entries(2, 2, vec![Entry::new(0, 0, 1)]).unwrap();
        assert_eq!(update_v_soft(&empty, &[1.0, 0.0])[1], 0.0);
    }

    #[test]
    fn every_algorithm_recovers_noiseless_full_matrix() {
        let t = generate_truth(30, 45, 8).unwrap();
        let f = t.full_matrix();
        for alg in Algorithm::ALL {
            let r = assemble(&f, &SolverConfig::with_algorithm(alg), Some(&Reference::from(&t))).unwrap();
            assert_eq!(r.haplotype, t.haplotype.canonical(), "{alg}");
            assert_eq!(mec_score(&f, &r.haplotype).unwrap(), 0);
            assert_eq!(r.haplotype.values()[0], 1);
            assert!(r.trace.records.len() == r.iterations + 1);
        }
    }

    #[test]
    fn flipped_start_gives_same_canonical_output() {
        let t = generate_truth(40, 80, 1).unwrap();
        let f = observe_uniform(&t, 0.4, 0.05, 3).unwrap();
        for alg in Algorithm::ALL {
            let cfg = SolverConfig::with_algorithm(alg);
            let init = init_power_clip(&f, &cfg).unwrap().u;
            let neg: Vec<f64> = init.iter().map(|x| -x).collect();
            let a = assemble_from(&f, &cfg, init, None).unwrap();
            let b = assemble_from(&f, &cfg, neg, None).unwrap();
            assert_eq!(a.haplotype, b.haplotype, "{alg}");
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_record() {
        let t = generate_truth(12, 20, 3).unwrap();
        let f = observe_uniform(&t, 0.6, 0.0, 1).unwrap();
        let r = assemble(&f, &SolverConfig::default(), Some(&Reference::from(&t))).unwrap();
        let mut buf = Vec::new();
        r.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.trace.records.len() + 1);
        assert!(text.starts_with("iteration,dist,mec,delta\n"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        cfg.max_outer_iters = 0;
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { tol: 0.0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { clip_factor: -1.0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
        assert_eq!("ls".parse::<Algorithm>().unwrap(), Algorithm::LeastSquares);
        assert!("svt".parse::<Algorithm>().is_err());
    }
}
