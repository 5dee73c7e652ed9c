//! Evaluation quantities: MEC score, reconstruction rate, principal-angle
//! distance and incoherence.

use std::fmt;

use crate::error::{Error, Result};
use crate::fragmat::{sign, FragmentMatrix, Haplotype};
use crate::linalg::{dot, norm, normalized};
use crate::simread::GroundTruth;

/// Largest `m` accepted by [`mec_bruteforce`].
pub const BRUTEFORCE_MAX_M: usize = 22;

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Mismatches of read `j` against `h` and against its complement.
fn read_distances(f: &FragmentMatrix, j: usize, h: &[i8]) -> (usize, usize) {
    let covered = f.column_len(j);
    let to_h = f.column(j).filter(|&(i, v)| v != h[i]).count();
    (to_h, covered - to_h)
}

/// Minimum error correction score of `h` and its complement.
///
/// Each read is charged its generalized Hamming distance to the closer of
/// the two haplotypes; uncovered positions never count.
pub fn mec_score(f: &FragmentMatrix, h: &Haplotype) -> Result<usize> {
    check_len(f.m(), h.len())?;
    Ok(mec_of_signs(f, h.values()))
}

pub(crate) fn mec_of_signs(f: &FragmentMatrix, h: &[i8]) -> usize {
    (0..f.n())
        .map(|j| {
            let (a, b) = read_distances(f, j, h);
            a.min(b)
        })
        .sum()
}

/// Read memberships that realize the MEC of `h` (ties go to `+1`).
pub fn best_membership(f: &FragmentMatrix, h: &Haplotype) -> Result<Vec<i8>> {
    check_len(f.m(), h.len())?;
    Ok((0..f.n())
        .map(|j| {
            let (a, b) = read_distances(f, j, h.values());
            if a <= b {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Exact minimum MEC over all haplotypes, with a minimizer whose first entry is `+1`.
pub fn mec_bruteforce(f: &FragmentMatrix) -> Result<(usize, Haplotype)> {
    let m = f.m();
    if m > BRUTEFORCE_MAX_M {
        return Err(Error::TooLarge { m, max: BRUTEFORCE_MAX_M });
    }
    if m == 0 {
        return Err(Error::invalid("matrix has no SNP rows"));
    }
    // Bit i set in `mask` when SNP i is covered, in `minus` when the value is -1.
    let reads: Vec<(u32, u32, u32)> = (0..f.n())
        .filter(|&j| f.column_len(j) > 0)
        .map(|j| {
            let (mut mask, mut minus) = (0u32, 0u32);
            for (i, v) in f.column(j) {
                mask |= 1 << i;
                if v < 0 {
                    minus |= 1 << i;
                }
            }
            (mask, minus, mask.count_ones())
        })
        .collect();

    let mut best = (usize::MAX, 0u32);
    // Flip symmetry: SNP 0 fixed to +1 (bit clear).
    for bits in (0..1u32 << (m - 1)).map(|b| b << 1) {
        let mut score = 0usize;
        for &(mask, minus, len) in &reads {
            let d = ((minus ^ bits) & mask).count_ones();
            score += d.min(len - d) as usize;
            if score >= best.0 {
                break;
            }
        }
        if score < best.0 {
            best = (score, bits);
        }
    }
    let values = (0..m).map(|i| if best.1 & (1 << i) != 0 { -1 } else { 1 }).collect();
    Ok((best.0, Haplotype::from_signs(values)?))
}

/// An unordered pair of haplotypes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaplotypePair {
    pub first: Haplotype,
    pub second: Haplotype,
}

impl HaplotypePair {
    /// The diploid pair `(h, -h)`.
    pub fn complementary(h: &Haplotype) -> Self {
        HaplotypePair { first: h.clone(), second: h.complement() }
    }
}

fn hamming(a: &Haplotype, b: &Haplotype) -> usize {
    a.values().iter().zip(b.values()).filter(|(x, y)| x != y).count()
}

/// `1 - min(D(h1,ĥ1) + D(h2,ĥ2), D(h1,ĥ2) + D(h2,ĥ1)) / (2m)`.
pub fn reconstruction_rate(truth: &HaplotypePair, estimate: &HaplotypePair) -> Result<f64> {
    let m = truth.first.len();
    for h in [&truth.second, &estimate.first, &estimate.second] {
        check_len(m, h.len())?;
    }
    if m == 0 {
        return Err(Error::invalid("empty haplotypes"));
    }
    let straight = hamming(&truth.first, &estimate.first) + hamming(&truth.second, &estimate.second);
    let crossed = hamming(&truth.first, &estimate.second) + hamming(&truth.second, &estimate.first);
    Ok(1.0 - straight.min(crossed) as f64 / (2 * m) as f64)
}

/// Principal-angle distance `√(1 - ⟨u,w⟩²)` between the directions of `u` and `w`.
///
/// Evaluated as the mean of the two projection residuals `‖w - ⟨u,w⟩u‖`
/// and `‖u - ⟨u,w⟩w‖`, which stays accurate near zero and is exactly
/// symmetric and flip-invariant.
pub fn principal_angle_dist(u: &[f64], w: &[f64]) -> Result<f64> {
    check_len(u.len(), w.len())?;
    let u = normalized(u)?;
    let w = normalized(w)?;
    let c = dot(&u, &w);
    let r1: f64 = w.iter().zip(&u).map(|(wi, ui)| (wi - c * ui).powi(2)).sum::<f64>().sqrt();
    let r2: f64 = u.iter().zip(&w).map(|(ui, wi)| (ui - c * wi).powi(2)).sum::<f64>().sqrt();
    Ok((0.5 * (r1 + r2)).min(1.0))
}

/// Incoherence `√m · max_i |u_i|` of a unit vector.
pub fn incoherence(u: &[f64]) -> Result<f64> {
    let nrm = norm(u);
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("incoherence needs a unit vector, norm is {nrm}")));
    }
    let max = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok((u.len() as f64).sqrt() * max)
}

/// `‖P_Ω(R - sign(X))‖₀` for an estimate `X` given entrywise.
pub fn sign_mismatches<F: Fn(usize, usize) -> f64>(f: &FragmentMatrix, estimate: F) -> usize {
    f.entries().filter(|e| sign(estimate(e.snp, e.read)) != e.value).count()
}

/// Evaluation summary for one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mec: usize,
    /// `mec / (m n)`.
    pub normalized_mec: f64,
    /// `mec / |Ω|`: mismatches per observed allele.
    pub mec_rate: f64,
    pub reconstruction_rate: Option<f64>,
    pub dist_u: Option<f64>,
    pub dist_v: Option<f64>,
    pub incoherence_u: f64,
    pub incoherence_v: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "mec,normalized_mec,mec_rate,reconstruction_rate,dist_u,dist_v,incoherence_u,incoherence_v";

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{:.8},{:.8},{},{},{},{:.6},{:.6}",
            self.mec,
            self.normalized_mec,
            self.mec_rate,
            opt(self.reconstruction_rate),
            opt(self.dist_u),
            opt(self.dist_v),
            self.incoherence_u,
            self.incoherence_v
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.csv_row())
    }
}

/// Scores a haplotype estimate against the fragments and, when given, the truth.
///
/// The membership estimate is the MEC-optimal assignment of each read.
pub fn evaluate(f: &FragmentMatrix, estimate: &Haplotype, truth: Option<&GroundTruth>) -> Result<EvalReport> {
    let mec = mec_score(f, estimate)?;
    let membership = best_membership(f, estimate)?;
    let cells = (f.m() * f.n()).max(1) as f64;
    let u_hat = normalized(&estimate.to_f64())?;
    let v_hat = if membership.is_empty() {
        Vec::new()
    } else {
        normalized(&membership.iter().map(|&v| f64::from(v)).collect::<Vec<_>>())?
    };

    let (rate, dist_u, dist_v) = match truth {
        Some(t) => {
            check_len(t.m(), estimate.len())?;
            let rate = reconstruction_rate(
                &HaplotypePair::complementary(&t.haplotype),
                &HaplotypePair::complementary(estimate),
            )?;
            let dist_u = principal_angle_dist(&t.u_star(), &u_hat)?;
            let dist_v = if t.n() == membership.len() && !membership.is_empty() {
                Some(principal_angle_dist(&t.v_star(), &v_hat)?)
            } else {
                None
            };
            (Some(rate), Some(dist_u), dist_v)
        }
        None => (None, None, None),
    };

    Ok(EvalReport {
        mec,
        normalized_mec: mec as f64 / cells,
        mec_rate: if f.nnz() == 0 { 0.0 } else { mec as f64 / f.nnz() as f64 },
        reconstruction_rate: rate,
        dist_u,
        dist_v,
        incoherence_u: incoherence(&u_hat)?,
        incoherence_v: if v_hat.is_empty() { 0.0 } else { incoherence(&v_hat)? },
    })
}
