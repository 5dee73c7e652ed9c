//! Singular value thresholding baseline.
//!
//! Iterates `X_k = shrink_τ(Y_{k-1})`, `Y_k = Y_{k-1} + δ P_Ω(R − X_k)`.
//! `Y` is supported on `Ω` and stored sparsely; `X` is kept as a short sum of
//! rank-one terms and only materialized densely on return. The singular
//! triples of `Y` above `τ` come from block power iterations warm-started
//! at the previous iterate's singular vectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fragmat::{FragmentMatrix, Haplotype};
use crate::linalg::{dot, norm, power_method, random_unit};
use crate::rng::derive_seed;

/// Relative residual beyond which the iteration is treated as diverged.
const DIVERGENCE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct SvtConfig {
    /// Shrinkage threshold; defaults to `5√(mn)`.
    pub tau: Option<f64>,
    /// Dual step; defaults to `1.2/p̂`.
    pub delta: Option<f64>,
    pub max_iters: usize,
    /// Stop once `‖P_Ω(X − R)‖_F / ‖P_Ω(R)‖_F` drops below this.
    pub tol: f64,
    /// Most singular triples kept per shrinkage.
    pub max_rank: usize,
    /// Block power passes per shrinkage, on top of the warm start.
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvtConfig {
    fn default() -> Self {
        SvtConfig { tau: None, delta: None, max_iters: 500, tol: 1e-4, max_rank: 50, power_iters: 2, seed: 0 }
    }
}

impl SvtConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: Option<f64>| x.map_or(true, |v| v > 0.0 && v.is_finite());
        if !positive(self.tau) {
            return Err(Error::invalid("svt threshold must be positive"));
        }
        if !positive(self.delta) {
            return Err(Error::invalid("svt step size must be positive"));
        }
        if self.max_iters == 0 || self.max_rank == 0 || self.power_iters == 0 {
            return Err(Error::invalid("svt iteration budgets must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("svt tolerance must be positive"));
        }
        Ok(())
    }

    pub fn resolved_tau(&self, f: &FragmentMatrix) -> f64 {
        self.tau.unwrap_or_else(|| 5.0 * ((f.m() * f.n()) as f64).sqrt())
    }

    pub fn resolved_delta(&self, f: &FragmentMatrix) -> f64 {
        self.delta.unwrap_or_else(|| 1.2 / f.sample_probability())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: bad.len() });
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn frobenius_distance(&self, other: &DenseMatrix) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch { expected: self.data.len(), found: other.data.len() });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    fn add_rank_one(&mut self, scale: f64, left: &[f64], right: &[f64]) {
        for (i, &l) in left.iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, &r) in row.iter_mut().zip(right) {
                *x += scale * l * r;
            }
        }
    }
}

/// Entrywise sign with ties going to `+1`.
pub fn round_to_sign(x: &DenseMatrix) -> DenseMatrix {
    DenseMatrix {
        rows: x.rows,
        cols: x.cols,
        data: x.data.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct SvtOutcome {
    /// Primal iterate with the smallest observed residual.
    pub estimate: DenseMatrix,
    /// Residual tolerance reached. `false` after an exhausted budget or divergence.
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    /// `‖P_Ω(X_k − R)‖_F / ‖P_Ω(R)‖_F` after every iteration.
    pub residuals: Vec<f64>,
    /// Number of singular values above `τ` in the returned iterate.
    pub rank: usize,
    /// Leading left singular vector of the returned iterate, if it is nonzero.
    pub leading_left: Option<Vec<f64>>,
}

impl SvtOutcome {
    /// Haplotype read off the estimate: signs of its leading left singular vector.
    pub fn haplotype(&self) -> Option<Haplotype> {
        self.leading_left.as_deref().map(|u| Haplotype::from_reals(u).canonical())
    }
}

#[derive(Debug, Clone)]
struct Term {
    sigma: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Sparse matrix on the pattern of `F`, column-major.
struct Pattern {
    m: usize,
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
}

impl Pattern {
    fn new(f: &FragmentMatrix) -> (Self, Vec<f64>) {
        let mut col_ptr = Vec::with_capacity(f.n() + 1);
        let mut rows = Vec::with_capacity(f.nnz());
        let mut values = Vec::with_capacity(f.nnz());
        col_ptr.push(0);
        for j in 0..f.n() {
            for (i, r) in f.column(j) {
                rows.push(i);
                values.push(f64::from(r));
            }
            col_ptr.push(rows.len());
        }
        (Pattern { m: f.m(), n: f.n(), col_ptr, rows }, values)
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |j| (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (k, self.rows[k], j)))
    }

    /// `S y` for values `s` on the pattern.
    fn apply(&self, s: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (k, i, j) in self.entries() {
            out[i] += s[k] * y[j];
        }
        out
    }

    /// `Sᵀ x` for values `s` on the pattern.
    fn apply_t(&self, s: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (self.col_ptr[j]..self.col_ptr[j + 1]).map(|k| s[k] * x[self.rows[k]]).sum())
            .collect()
    }
}

/// Gram-Schmidt (applied twice) in place; drops vectors that become numerically dependent.
fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        let original = norm(&v);
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let nrm = norm(&v);
        if nrm > 1e-10 * original && nrm > 0.0 {
            v.iter_mut().for_each(|x| *x /= nrm);
            out.push(v);
        }
    }
    *vs = out;
}

/// Singular triples of the sparse `Y` above `tau`, by subspace iteration
/// warm-started from the previous right singular vectors. The block grows by
/// five until its smallest Ritz value falls below `tau` or `max_rank` is hit.
fn shrink(pattern: &Pattern, y: &[f64], tau: f64, cfg: &SvtConfig, warm: &[Term], round: u64) -> Result<Vec<Term>> {
    let cap = cfg.max_rank.min(pattern.m).min(pattern.n);
    let mut k = (warm.len() + 1).min(cap);
    let mut block: Vec<Vec<f64>> = warm.iter().map(|t| t.right.clone()).collect();
    let mut fill = 0u64;
    loop {
        while block.len() < k {
            fill += 1;
            block.push(random_unit(pattern.n, derive_seed(cfg.seed, round.wrapping_mul(1 << 20) + fill)));
        }
        orthonormalize(&mut block);
        for _ in 0..cfg.power_iters {
            let mut left: Vec<Vec<f64>> = block.iter().map(|v| pattern.apply(y, v)).collect();
            orthonormalize(&mut left);
            block = left.iter().map(|u| pattern.apply_t(y, u)).collect();
            orthonormalize(&mut block);
        }
        // Rayleigh-Ritz on span(Y V): Y ≈ U Wᵀ with W = Yᵀ U.
        let mut left: Vec<Vec<f64>> = block.iter().map(|v| pattern.apply(y, v)).collect();
        orthonormalize(&mut left);
        let w: Vec<Vec<f64>> = left.iter().map(|u| pattern.apply_t(y, u)).collect();
        let r = w.len();
        if r == 0 {
            return Ok(Vec::new());
        }
        let gram = DMatrix::from_fn(r, r, |a, b| dot(&w[a], &w[b]));
        if !gram.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("svt partial decomposition"));
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut terms = Vec::with_capacity(r);
        for &c in &order {
            let sigma = eig.eigenvalues[c].max(0.0).sqrt();
            if sigma == 0.0 {
                break;
            }
            let combine = |basis: &[Vec<f64>], len: usize, scale: f64| {
                let mut out = vec![0.0; len];
                for (a, b) in basis.iter().enumerate() {
                    let coef = eig.eigenvectors[(a, c)] * scale;
                    out.iter_mut().zip(b).for_each(|(o, x)| *o += coef * x);
                }
                out
            };
            terms.push(Term { sigma, left: combine(&left, pattern.m, 1.0), right: combine(&w, pattern.n, 1.0 / sigma) });
        }
        let smallest = terms.last().map_or(0.0, |t| t.sigma);
        if smallest > tau && r == k && k < cap {
            k = (k + 5).min(cap);
            block = terms.into_iter().map(|t| t.right).collect();
            continue;
        }
        terms.retain(|t| t.sigma > tau);
        return Ok(terms);
    }
}

fn materialize(m: usize, n: usize, terms: &[Term], tau: f64) -> DenseMatrix {
    let mut x = DenseMatrix::zeros(m, n);
    for t in terms {
        x.add_rank_one(t.sigma - tau, &t.left, &t.right);
    }
    x
}

/// Runs singular value thresholding on the observed entries of `f`.
pub fn svt_complete(f: &FragmentMatrix, cfg: &SvtConfig) -> Result<SvtOutcome> {
    cfg.validate()?;
    if f.nnz() == 0 {
        return Err(Error::invalid("svt needs at least one observed entry"));
    }
    let tau = cfg.resolved_tau(f);
    let delta = cfg.resolved_delta(f);
    let (pattern, observed) = Pattern::new(f);
    let observed_norm = norm(&observed);

    // Kick start: jump straight to the first iterate with a nonzero shrinkage.
    let top = power_method(
        |v: &[f64]| pattern.apply(&observed, v),
        |u: &[f64]| pattern.apply_t(&observed, u),
        random_unit(pattern.n, cfg.seed),
        cfg.power_iters,
        1e-9,
    )?;
    let k0 = (tau / (delta * top.sigma)).ceil().max(1.0);
    let mut y: Vec<f64> = observed.iter().map(|r| k0 * delta * r).collect();

    let mut terms: Vec<Term> = Vec::new();
    let mut residuals = Vec::with_capacity(cfg.max_iters);
    let mut best: (f64, Vec<Term>) = (f64::INFINITY, Vec::new());
    let mut converged = false;

    for round in 0..cfg.max_iters {
        terms = match shrink(&pattern, &y, tau, cfg, &terms, round as u64) {
            Ok(t) => t,
            Err(Error::NonFinite(_)) => break,
            Err(e) => return Err(e),
        };
        let mut residual = vec![0.0; observed.len()];
        for (k, i, j) in pattern.entries() {
            let x: f64 = terms.iter().map(|t| (t.sigma - tau) * t.left[i] * t.right[j]).sum();
            residual[k] = observed[k] - x;
        }
        let rel = norm(&residual) / observed_norm;
        // A diverging dual (possible for large steps on noisy data) ends the run.
        if !rel.is_finite() || rel > DIVERGENCE {
            residuals.push(rel);
            break;
        }
        residuals.push(rel);
        if rel < best.0 {
            best = (rel, terms.clone());
        }
        if rel < cfg.tol {
            converged = true;
            break;
        }
        for (yk, rk) in y.iter_mut().zip(&residual) {
            *yk += delta * rk;
        }
    }

    Ok(SvtOutcome {
        estimate: materialize(f.m(), f.n(), &best.1, tau),
        converged,
        diverged: residuals.last().is_some_and(|r| !r.is_finite() || *r > DIVERGENCE) || residuals.len() < cfg.max_iters && !converged,
        iterations: residuals.len(),
        residuals,
        rank: best.1.len(),
        leading_left: best.1.first().map(|t| t.left.clone()),
    })
}
