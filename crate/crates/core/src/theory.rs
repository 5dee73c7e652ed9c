//! Closed-form recovery guarantees and empirical checks against them.
//!
//! Logarithms are natural. `M = σ* u* v*ᵀ` with `σ* = ‖M‖_F = √(mn)`.

use crate::error::{Error, Result};
use crate::linalg::{dot, power_method, random_unit};
use crate::metrics::sign_mismatches;
use crate::simread::{generate_truth, observe_uniform, GroundTruth, N_MAX};
use crate::solver::{assemble, Reference, SolverConfig, SolverTrace};
use crate::fragmat::FragmentMatrix;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub m: usize,
    pub n: usize,
    pub p_e: f64,
    pub n_max: f64,
    pub delta2: f64,
    /// Target accuracy `ε` in Frobenius norm.
    pub epsilon: f64,
    /// Incoherence of the truth; `μ₁ = 8μ`.
    pub mu: f64,
    pub c: f64,
    pub c_prime: f64,
}

impl TheoryParams {
    /// `δ₂` at the middle of its admissible range, `ε = 10⁻³‖M‖_F`, `C = C′ = 1`.
    pub fn new(m: usize, n: usize, p_e: f64) -> Self {
        let mut tp = TheoryParams {
            m,
            n,
            p_e,
            n_max: N_MAX,
            delta2: 0.0,
            epsilon: 1e-3 * ((m * n) as f64).sqrt(),
            mu: 1.0,
            c: 1.0,
            c_prime: 1.0,
        };
        tp.delta2 = 0.5 * tp.delta2_max();
        tp
    }

    pub fn alpha(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn sigma_star(&self) -> f64 {
        ((self.m * self.n) as f64).sqrt()
    }

    /// `‖M‖_F`, equal to `σ*` for a rank-one sign matrix.
    pub fn frobenius_m(&self) -> f64 {
        self.sigma_star()
    }

    pub fn mu1(&self) -> f64 {
        8.0 * self.mu
    }

    /// Upper end of the admissible `δ₂` interval, `(3.93 − C′ N_max p_e)/21`.
    pub fn delta2_max(&self) -> f64 {
        (3.93 - self.c_prime * self.n_max * self.p_e) / 21.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("m and n must be positive"));
        }
        if self.n < self.m {
            return Err(Error::invalid(format!("alpha = n/m must be >= 1, got {}", self.alpha())));
        }
        if !(0.0..1.0).contains(&self.p_e) {
            return Err(Error::invalid(format!("p_e must lie in [0, 1), got {}", self.p_e)));
        }
        for (name, v) in [("n_max", self.n_max), ("mu", self.mu), ("C", self.c), ("C'", self.c_prime), ("epsilon", self.epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let hi = self.delta2_max();
        if !(0.0..=hi).contains(&self.delta2) {
            return Err(Error::invalid(format!("delta2 = {} outside admissible range [0, {hi:.6}]", self.delta2)));
        }
        Ok(())
    }

    fn checked_delta2(&self) -> Result<f64> {
        self.validate()?;
        if self.delta2 == 0.0 {
            return Err(Error::invalid("delta2 must be positive for this bound"));
        }
        Ok(self.delta2)
    }
}

/// `C √α/(m δ₂²) · ln n · ln(‖M‖_F/ε) · (p_e + 64δ₂/3)`.
pub fn sample_prob_threshold(tp: &TheoryParams) -> Result<f64> {
    let d = tp.checked_delta2()?;
    let log_acc = (tp.frobenius_m() / tp.epsilon).ln();
    Ok(tp.c * tp.alpha().sqrt() / (tp.m as f64 * d * d)
        * (tp.n as f64).ln()
        * log_acc
        * (tp.p_e + 64.0 / 3.0 * d))
}

/// Expected reads per SNP at the threshold probability, `p·n`.
pub fn coverage_requirement(tp: &TheoryParams) -> Result<f64> {
    Ok(sample_prob_threshold(tp)? * tp.n as f64)
}

/// High-probability bound on `‖P_Ω(N)‖₂ / p`: `2 N_max p_e √(mn)`.
pub fn noise_spectral_bound(tp: &TheoryParams) -> f64 {
    2.0 * tp.n_max * tp.p_e * tp.sigma_star()
}

/// The same bound in the dimensionally different `2 N_max p_e m √n` form.
pub fn noise_spectral_bound_as_stated(tp: &TheoryParams) -> f64 {
    2.0 * tp.n_max * tp.p_e * tp.m as f64 * (tp.n as f64).sqrt()
}

/// `ε + 16 p_e σ*/(3δ₂) · (2 + (2 + 3N_max)δ₂)`.
pub fn error_bound(tp: &TheoryParams) -> Result<f64> {
    let d = tp.checked_delta2()?;
    Ok(tp.epsilon + 16.0 * tp.p_e * tp.sigma_star() / (3.0 * d) * (2.0 + (2.0 + 3.0 * tp.n_max) * d))
}

/// `ε/√(mn) + 16p_e/(3δ₂) · (2 + (2+3N_max)δ₂) + ‖P_Ω(N)‖_F/√(mn)`.
pub fn mec_bound(tp: &TheoryParams, observed_noise_frobenius: f64) -> Result<f64> {
    let d = tp.checked_delta2()?;
    let s = tp.sigma_star();
    Ok(tp.epsilon / s + 16.0 * tp.p_e / (3.0 * d) * (2.0 + (2.0 + 3.0 * tp.n_max) * d) + observed_noise_frobenius / s)
}

/// Limit of the distance after many iterations: `(4/3) μ₁ p_e/δ₂ + ε/(2‖M‖_F)`.
pub fn plateau_limit(tp: &TheoryParams) -> Result<f64> {
    let d = tp.checked_delta2()?;
    Ok(4.0 / 3.0 * tp.mu1() * tp.p_e / d + tp.epsilon / (2.0 * tp.frobenius_m()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfStep {
    /// `dist(v^(t), v*)` against `dist(u^(t-1), u*)`.
    Membership,
    /// `dist(u^(t), u*)` against `dist(v^(t), v*)`.
    Haplotype,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionVerdict {
    pub iteration: usize,
    pub half: HalfStep,
    pub previous: f64,
    pub current: f64,
    /// `previous/4 + μ₁ p_e/δ₂`.
    pub limit: f64,
    pub ok: bool,
}

/// Checks `dist_next ≤ dist_prev/4 + μ₁p_e/δ₂ + slack` for every half-step.
///
/// Half-steps whose previous distance is below `floor` are not checked.
/// Traces recorded without a reference produce no verdicts.
pub fn contraction_check(trace: &SolverTrace, tp: &TheoryParams, slack: f64, floor: f64) -> Result<Vec<ContractionVerdict>> {
    let offset = tp.mu1() * tp.p_e / tp.checked_delta2()?;
    let mut out = Vec::new();
    let mut push = |iteration, half, previous: f64, current: f64| {
        if previous < floor {
            return;
        }
        let limit = 0.25 * previous + offset;
        out.push(ContractionVerdict { iteration, half, previous, current, limit, ok: current <= limit + slack });
    };
    for w in trace.records.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        if let (Some(du), Some(dv)) = (prev.dist_u, next.dist_v) {
            push(next.iteration, HalfStep::Membership, du, dv);
        }
        if let (Some(dv), Some(du)) = (next.dist_v, next.dist_u) {
            push(next.iteration, HalfStep::Haplotype, dv, du);
        }
    }
    Ok(out)
}

/// Pass fraction of a set of verdicts; `1` when empty.
pub fn compliance(verdicts: &[ContractionVerdict]) -> f64 {
    if verdicts.is_empty() {
        return 1.0;
    }
    verdicts.iter().filter(|v| v.ok).count() as f64 / verdicts.len() as f64
}

/// Outcome of a batch of seeded checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub bound: f64,
    pub measured: Vec<f64>,
    pub passed: usize,
}

impl Validation {
    pub fn pass_rate(&self) -> f64 {
        if self.measured.is_empty() {
            0.0
        } else {
            self.passed as f64 / self.measured.len() as f64
        }
    }
}

/// Observed noise `P_Ω(R − M)` as a fragment-shaped list of values in `{0, ±2}`.
fn observed_noise(f: &FragmentMatrix, truth: &GroundTruth) -> Vec<(usize, usize, f64)> {
    f.entries()
        .filter_map(|e| {
            let diff = f64::from(e.value - truth.value(e.snp, e.read));
            (diff != 0.0).then_some((e.snp, e.read, diff))
        })
        .collect()
}

/// `‖P_Ω(N)‖_F`.
pub fn observed_noise_frobenius(f: &FragmentMatrix, truth: &GroundTruth) -> f64 {
    observed_noise(f, truth).iter().map(|(_, _, x)| x * x).sum::<f64>().sqrt()
}

/// `‖P_Ω(N)‖₂` by the power method.
pub fn observed_noise_spectral(f: &FragmentMatrix, truth: &GroundTruth, seed: u64) -> Result<f64> {
    let noise = observed_noise(f, truth);
    if noise.is_empty() {
        return Ok(0.0);
    }
    let (m, n) = (f.m(), f.n());
    let apply = |y: &[f64]| {
        let mut out = vec![0.0; m];
        for &(i, j, x) in &noise {
            out[i] += x * y[j];
        }
        out
    };
    let apply_t = |z: &[f64]| {
        let mut out = vec![0.0; n];
        for &(i, j, x) in &noise {
            out[j] += x * z[i];
        }
        out
    };
    Ok(power_method(apply, apply_t, random_unit(n, seed), 1000, 1e-10)?.sigma)
}

/// Draws `seeds` uniform instances at probability `p` and checks
/// `‖P_Ω(N)‖₂/p ≤ 2 N_max p_e √(mn)` on each.
pub fn validate_noise_bound(tp: &TheoryParams, p: f64, seeds: &[u64]) -> Result<Validation> {
    let bound = noise_spectral_bound(tp);
    let mut measured = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let truth = generate_truth(tp.m, tp.n, seed)?;
        let f = observe_uniform(&truth, p, tp.p_e, derive_seed(seed, 1))?;
        measured.push(observed_noise_spectral(&f, &truth, seed)? / p);
    }
    let passed = measured.iter().filter(|&&x| x <= bound).count();
    Ok(Validation { bound, measured, passed })
}

/// Per-run measurements against the recovery guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryCheck {
    pub error: f64,
    pub error_bound: f64,
    pub normalized_mec: f64,
    pub mec_bound: f64,
}

impl RecoveryCheck {
    pub fn error_ok(&self) -> bool {
        self.error <= self.error_bound
    }

    pub fn mec_ok(&self) -> bool {
        self.normalized_mec <= self.mec_bound
    }
}

/// `‖M − σ* u vᵀ‖_F` for unit `u`, `v`: `σ* √(2 − 2⟨u,u*⟩⟨v,v*⟩)`.
pub fn rank_one_error(truth: &GroundTruth, u: &[f64], v: &[f64]) -> f64 {
    let c = dot(u, &truth.u_star()) * dot(v, &truth.v_star());
    truth.sigma_star() * (2.0 - 2.0 * c).max(0.0).sqrt()
}

/// Checks one solved instance against the error and MEC bounds. `M̂ = σ* u vᵀ`
/// with the solver's final unit iterates; the MEC term is
/// `‖P_Ω(R − sign(u vᵀ))‖₀/(mn)`.
pub fn check_recovery(
    tp: &TheoryParams,
    f: &FragmentMatrix,
    truth: &GroundTruth,
    u: &[f64],
    v: &[f64],
) -> Result<RecoveryCheck> {
    let normalized_mec = sign_mismatches(f, |i, j| u[i] * v[j]) as f64 / (f.m() * f.n()) as f64;
    Ok(RecoveryCheck {
        error: rank_one_error(truth, u, v),
        error_bound: error_bound(tp)?,
        normalized_mec,
        mec_bound: mec_bound(tp, observed_noise_frobenius(f, truth))?,
    })
}

/// Simulates and solves one uniform instance per seed and checks the recovery guarantees.
pub fn validate_recovery(tp: &TheoryParams, p: f64, cfg: &SolverConfig, seeds: &[u64]) -> Result<Vec<RecoveryCheck>> {
    seeds
        .iter()
        .map(|&seed| {
            let truth = generate_truth(tp.m, tp.n, seed)?;
            let f = observe_uniform(&truth, p, tp.p_e, derive_seed(seed, 1))?;
            let cfg = SolverConfig { init_seed: seed, ..cfg.clone() };
            let r = assemble(&f, &cfg, Some(&Reference::from(&truth)))?;
            check_recovery(tp, &f, &truth, &r.u, &r.v)
        })
        .collect()
}

/// Every closed-form quantity for one parameter set, as `(name, value)` pairs.
pub fn report(tp: &TheoryParams) -> Result<Vec<(&'static str, f64)>> {
    Ok(vec![
        ("alpha", tp.alpha()),
        ("sigma_star", tp.sigma_star()),
        ("delta2", tp.delta2),
        ("delta2_max", tp.delta2_max()),
        ("epsilon", tp.epsilon),
        ("sample_prob_threshold", sample_prob_threshold(tp)?),
        ("coverage_requirement", coverage_requirement(tp)?),
        ("noise_spectral_bound", noise_spectral_bound(tp)),
        ("noise_spectral_bound_as_stated", noise_spectral_bound_as_stated(tp)),
        ("error_bound", error_bound(tp)?),
        ("mec_bound_noise_free_part", mec_bound(tp, 0.0)?),
        ("plateau_limit", plateau_limit(tp)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Algorithm, TraceRecord};

    fn tp(m: usize, n: usize, p_e: f64) -> TheoryParams {
        TheoryParams::new(m, n, p_e)
    }

    #[test]
    fn threshold_matches_formula_by_hand() {
        let mut t = tp(1000, 1000, 0.0);
        t.delta2 = t.delta2_max();
        t.epsilon = t.frobenius_m() / std::f64::consts::E;
        let d = 3.93 / 21.0;
        let expected = 1.0 / (1000.0 * d * d) * 1000f64.ln() * 1.0 * (64.0 / 3.0 * d);
        assert!((sample_prob_threshold(&t).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn threshold_monotonicity() {
        let base = tp(500, 1000, 0.02);
        let at = |f: &dyn Fn(&mut TheoryParams)| {
            let mut t = base.clone();
            f(&mut t);
            sample_prob_threshold(&t).unwrap()
        };
        let p0 = sample_prob_threshold(&base).unwrap();
        assert!((at(&|t| t.c = 2.0) - 2.0 * p0).abs() < 1e-12 * p0);
        assert!(at(&|t| t.p_e = 0.05) > p0);
        let mut prev = f64::INFINITY;
        for m in [100, 200, 400, 800, 1000] {
            let p = at(&|t| t.m = m);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn delta2_range_is_enforced() {
        let mut t = tp(100, 100, 0.05);
        t.delta2 = t.delta2_max() * 1.01;
        assert!(sample_prob_threshold(&t).is_err());
        t.delta2 = 0.0;
        assert!(t.validate().is_ok());
        assert!(error_bound(&t).is_err());
        assert!(tp(200, 100, 0.0).validate().is_err());
    }

    #[test]
    fn noise_bound_scaling() {
        assert_eq!(noise_spectral_bound(&tp(100, 100, 0.0)), 0.0);
        let a = noise_spectral_bound(&tp(50, 80, 0.05));
        let doubled = noise_spectral_bound(&tp(100, 160, 0.05));
        assert!((doubled - 2.0 * a).abs() < 1e-12);
        let quadrupled = noise_spectral_bound(&tp(200, 320, 0.05));
        assert!((quadrupled - 4.0 * a).abs() < 1e-12);
        let t = tp(50, 80, 0.05);
        let ratio = noise_spectral_bound_as_stated(&t) / noise_spectral_bound(&t);
        assert!((ratio - 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_observed_noise_is_zero() {
        let truth = generate_truth(30, 40, 1).unwrap();
        let f = observe_uniform(&truth, 0.5, 0.0, 2).unwrap();
        assert_eq!(observed_noise_spectral(&f, &truth, 0).unwrap(), 0.0);
        assert_eq!(observed_noise_frobenius(&f, &truth), 0.0);
    }

    #[test]
    fn error_bound_vanishes_without_noise() {
        let mut t = tp(100, 200, 0.0);
        t.epsilon = 1e-12;
        assert!(error_bound(&t).unwrap() < 1e-11);
        assert!(mec_bound(&t, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn coverage_requirement_properties() {
        let t = tp(100, 100, 0.0);
        let c = coverage_requirement(&t).unwrap();
        assert!(c > 0.0);
        assert!((c - sample_prob_threshold(&t).unwrap() * 100.0).abs() < 1e-9);
        let mut prev = c;
        for n in [200, 400, 800] {
            let mut w = t.clone();
            w.n = n;
            let next = coverage_requirement(&w).unwrap();
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn constant_zero_trace_is_compliant() {
        let rec = |iteration| TraceRecord {
            iteration,
            dist_u: Some(0.0),
            dist_v: if iteration == 0 { None } else { Some(0.0) },
            mec: 0,
            delta: None,
            degenerate: 0,
        };
        let trace = SolverTrace { records: (0..5).map(rec).collect(), ..SolverTrace::default() };
        let verdicts = contraction_check(&trace, &tp(10, 10, 0.0), 0.0, 0.0).unwrap();
        assert_eq!(verdicts.len(), 8);
        assert_eq!(compliance(&verdicts), 1.0);
    }

    #[test]
    fn rank_one_error_matches_dense() {
        let truth = generate_truth(6, 9, 3).unwrap();
        let u = crate::linalg::random_unit(6, 1);
        let v = crate::linalg::random_unit(9, 2);
        let s = truth.sigma_star();
        let mut sq = 0.0;
        for i in 0..6 {
            for j in 0..9 {
                sq += (f64::from(truth.value(i, j)) - s * u[i] * v[j]).powi(2);
            }
        }
        assert!((rank_one_error(&truth, &u, &v) - sq.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn recovery_check_on_small_instance() {
        let t = tp(40, 80, 0.02);
        let checks = validate_recovery(&t, 1.0, &SolverConfig::with_algorithm(Algorithm::Soft), &[1, 2]).unwrap();
        assert_eq!(checks.len(), 2);
        assert!(checks.iter().all(|c| c.error_ok() && c.mec_ok()));
    }
}
