//! Synthetic haplotypes, read memberships and noisy read observations.
//!
//! The clean matrix is `M = û* (v̂*)ᵀ` with `û*` the haplotype and `v̂*` the
//! read membership, both over `{+1, -1}`. An observed entry is flipped
//! (`N_ij = -2 M_ij`) independently with the sequencing error probability.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, ParseErrorKind, Result};
use crate::fragmat::{Entry, FragmentMatrix, Haplotype};
use crate::rng::substream;

/// Bound on `|N_ij|` for `±1` labels.
pub const N_MAX: f64 = 2.0;

const STREAM_HAPLOTYPE: u64 = 1;
const STREAM_MEMBERSHIP: u64 = 2;
const STREAM_MASK: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_READS: u64 = 5;

/// Haplotype, read membership and the rank-one matrix they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub haplotype: Haplotype,
    pub membership: Vec<i8>,
}

impl GroundTruth {
    pub fn new(haplotype: Haplotype, membership: Vec<i8>) -> Result<Self> {
        if membership.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("membership entries must be ±1"));
        }
        Ok(GroundTruth { haplotype, membership })
    }

    pub fn m(&self) -> usize {
        self.haplotype.len()
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    /// `M_ij = û*_i v̂*_j`.
    pub fn value(&self, i: usize, j: usize) -> i8 {
        self.haplotype.values()[i] * self.membership[j]
    }

    /// Singular value of `M`, `√(mn)`.
    pub fn sigma_star(&self) -> f64 {
        ((self.m() * self.n()) as f64).sqrt()
    }

    /// Normalized left singular vector `u*`, entries `±1/√m`.
    pub fn u_star(&self) -> Vec<f64> {
        let s = (self.m() as f64).sqrt();
        self.haplotype.values().iter().map(|&v| f64::from(v) / s).collect()
    }

    /// Normalized right singular vector `v*`, entries `±1/√n`.
    pub fn v_star(&self) -> Vec<f64> {
        let s = (self.n() as f64).sqrt();
        self.membership.iter().map(|&v| f64::from(v) / s).collect()
    }

    /// Fully observed noiseless matrix.
    pub fn full_matrix(&self) -> FragmentMatrix {
        FragmentMatrix::from_rank_one(self.haplotype.values(), &self.membership)
            .expect("±1 rank-one matrix is always valid")
    }
}

/// Draws `û*` and `v̂*` with i.i.d. uniform signs.
pub fn generate_truth(m: usize, n: usize, seed: u64) -> Result<GroundTruth> {
    if m < 2 || n < 2 {
        return Err(Error::invalid(format!("need m >= 2 and n >= 2, got m = {m}, n = {n}")));
    }
    let haplotype = Haplotype::from_signs(random_signs(m, seed, STREAM_HAPLOTYPE))?;
    let membership = random_signs(n, seed, STREAM_MEMBERSHIP);
    GroundTruth::new(haplotype, membership)
}

fn random_signs(len: usize, seed: u64, stream: u64) -> Vec<i8> {
    let mut rng = substream(seed, stream);
    (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

fn check_error_rate(p_e: f64) -> Result<()> {
    if (0.0..0.5).contains(&p_e) {
        Ok(())
    } else {
        Err(Error::invalid(format!("error rate must lie in [0, 0.5), got {p_e}")))
    }
}

/// Observes every cell independently with probability `p`, then flips
/// each observed value with probability `p_e`.
pub fn observe_uniform(truth: &GroundTruth, p: f64, p_e: f64, seed: u64) -> Result<FragmentMatrix> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("sample probability must lie in (0, 1], got {p}")));
    }
    check_error_rate(p_e)?;
    let mut mask = substream(seed, STREAM_MASK);
    let mut noise = substream(seed, STREAM_NOISE);
    let mut entries = Vec::with_capacity(((truth.m() * truth.n()) as f64 * p * 1.05) as usize + 16);
    for j in 0..truth.n() {
        for i in 0..truth.m() {
            if p < 1.0 && mask.random::<f64>() >= p {
                continue;
            }
            let mut value = truth.value(i, j);
            if p_e > 0.0 && noise.random::<f64>() < p_e {
                value = -value;
            }
            entries.push(Entry::new(i, j, value));
        }
    }
    FragmentMatrix::from_entries(truth.m(), truth.n(), entries)
}

/// Distribution of read lengths, in SNPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadLengths {
    Fixed(usize),
    /// Uniform integer in `[min, max]`.
    Uniform { min: usize, max: usize },
}

impl Default for ReadLengths {
    fn default() -> Self {
        ReadLengths::Uniform { min: 3, max: 7 }
    }
}

impl ReadLengths {
    fn validate(self) -> Result<()> {
        let ok = match self {
            ReadLengths::Fixed(l) => l >= 2,
            ReadLengths::Uniform { min, max } => min >= 2 && max >= min,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("read lengths must be >= 2: {self}")))
        }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> usize {
        match self {
            ReadLengths::Fixed(l) => l,
            ReadLengths::Uniform { min, max } => rng.random_range(min..=max),
        }
    }

    pub fn min(self) -> usize {
        match self {
            ReadLengths::Fixed(l) | ReadLengths::Uniform { min: l, .. } => l,
        }
    }

    pub fn max(self) -> usize {
        match self {
            ReadLengths::Fixed(l) | ReadLengths::Uniform { max: l, .. } => l,
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            ReadLengths::Fixed(l) => l as f64,
            ReadLengths::Uniform { min, max } => (min + max) as f64 / 2.0,
        }
    }
}

impl fmt::Display for ReadLengths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadLengths::Fixed(l) => write!(f, "{l}"),
            ReadLengths::Uniform { min, max } => write!(f, "{min}-{max}"),
        }
    }
}

impl FromStr for ReadLengths {
    type Err = Error;

    /// Accepts `L` or `MIN-MAX`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad read length `{s}`")));
        let lengths = match s.split_once('-') {
            Some((a, b)) => ReadLengths::Uniform { min: parse(a)?, max: parse(b)? },
            None => ReadLengths::Fixed(parse(s)?),
        };
        lengths.validate()?;
        Ok(lengths)
    }
}

/// How contiguous reads are laid out along the haplotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Each read starts at an independent uniformly random SNP.
    UniformStart,
    /// Reads are laid down in layers; each layer tiles the haplotype from a
    /// uniformly random phase, so every SNP gains one unit of coverage per
    /// completed layer. Tiles after the first layer are shifted by one SNP
    /// when they would end at a cut no earlier read spans, so two or more
    /// layers always leave the reads connected.
    #[default]
    Tiled,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::UniformStart => "uniform-start",
            Placement::Tiled => "tiled",
        })
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-start" => Ok(Placement::UniformStart),
            "tiled" => Ok(Placement::Tiled),
            other => Err(Error::invalid(format!("unknown placement `{other}`"))),
        }
    }
}

/// Read intervals `[start, end)` reaching the requested mean coverage.
fn lay_out_reads<R: Rng>(
    m: usize,
    coverage: f64,
    lengths: ReadLengths,
    placement: Placement,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let target = coverage * m as f64;
    let mut reads = Vec::new();
    let mut total = 0usize;
    match placement {
        Placement::UniformStart => {
            while (total as f64) < target {
                let len = lengths.draw(rng).min(m);
                let start = rng.random_range(0..=m - len);
                reads.push((start, start + len));
                total += len;
            }
        }
        Placement::Tiled => {
            // spanned[k]: some read covers both SNP k-1 and SNP k.
            let mut spanned = vec![false; m];
            let mut layer = 0usize;
            'layers: while (total as f64) < target {
                // The first tile straddles position 0 at a uniform phase.
                let first = lengths.draw(rng);
                let mut start = 0usize;
                let mut end = rng.random_range(1..=first).min(m);
                loop {
                    // From the second layer on, never end where every earlier layer also ends.
                    if layer > 0 && end < m && !spanned[end] {
                        let len = end - start;
                        end = if len + 1 <= lengths.max() || len <= lengths.min() { end + 1 } else { end - 1 };
                    }
                    // Fold a would-be single-SNP tile into its neighbour.
                    if end - start < 2 {
                        end = (start + 2).min(m);
                    }
                    if m - end < 2 {
                        end = m;
                    }
                    reads.push((start, end));
                    for s in &mut spanned[start + 1..end] {
                        *s = true;
                    }
                    total += end - start;
                    if (total as f64) >= target {
                        break 'layers;
                    }
                    if end == m {
                        break;
                    }
                    start = end;
                    end = (start + lengths.draw(rng)).min(m);
                }
                layer += 1;
            }
        }
    }
    reads
}

/// Result of a contiguous-read simulation.
#[derive(Debug, Clone)]
pub struct ContiguousSample {
    pub membership: Vec<i8>,
    pub fragments: FragmentMatrix,
}

/// Generates contiguous reads over `haplotype` until the mean per-SNP
/// coverage reaches `coverage`. Each read picks a parent haplotype
/// uniformly at random; observed values are flipped with probability `p_e`.
pub fn observe_contiguous(
    haplotype: &Haplotype,
    coverage: f64,
    lengths: ReadLengths,
    placement: Placement,
    p_e: f64,
    seed: u64,
) -> Result<ContiguousSample> {
    let m = haplotype.len();
    if m < 2 {
        return Err(Error::invalid("contiguous reads need m >= 2"));
    }
    if !(coverage > 0.0 && coverage.is_finite()) {
        return Err(Error::invalid(format!("coverage must be positive, got {coverage}")));
    }
    lengths.validate()?;
    check_error_rate(p_e)?;

    let mut rng = substream(seed, STREAM_READS);
    let reads = lay_out_reads(m, coverage, lengths, placement, &mut rng);
    let membership = random_signs(reads.len(), seed, STREAM_MEMBERSHIP);
    let mut noise = substream(seed, STREAM_NOISE);

    let mut entries = Vec::with_capacity(reads.iter().map(|(s, e)| e - s).sum());
    for (j, &(start, end)) in reads.iter().enumerate() {
        for i in start..end {
            let mut value = haplotype.values()[i] * membership[j];
            if p_e > 0.0 && noise.random::<f64>() < p_e {
                value = -value;
            }
            entries.push(Entry::new(i, j, value));
        }
    }
    let fragments = FragmentMatrix::from_entries(m, reads.len(), entries)?;
    Ok(ContiguousSample { membership, fragments })
}

/// How observed cells are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationModel {
    /// Every cell of an `m x n` matrix observed independently with probability `p`.
    Uniform { n: usize, p: f64 },
    /// Contiguous reads at a target mean coverage; `n` follows from the layout.
    Contiguous { coverage: f64, lengths: ReadLengths, placement: Placement },
}

/// Full description of one simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub m: usize,
    pub model: ObservationModel,
    pub error_rate: f64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn uniform(m: usize, n: usize, p: f64, error_rate: f64, seed: u64) -> Self {
        SimulationSpec { m, model: ObservationModel::Uniform { n, p }, error_rate, seed }
    }

    pub fn contiguous(m: usize, coverage: f64, error_rate: f64, seed: u64) -> Self {
        SimulationSpec {
            m,
            model: ObservationModel::Contiguous {
                coverage,
                lengths: ReadLengths::default(),
                placement: Placement::default(),
            },
            error_rate,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_error_rate(self.error_rate)?;
        match self.model {
            ObservationModel::Uniform { p, .. } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::invalid(format!("sample probability must lie in (0, 1], got {p}")))
            }
            ObservationModel::Contiguous { coverage, lengths, .. } => {
                if !(coverage > 0.0) {
                    return Err(Error::invalid("coverage must be positive"));
                }
                lengths.validate()
            }
            _ => Ok(()),
        }
    }

    /// Generates truth and observations.
    pub fn simulate(&self) -> Result<(GroundTruth, FragmentMatrix)> {
        self.validate()?;
        match self.model {
            ObservationModel::Uniform { n, p } => {
                let truth = generate_truth(self.m, n, self.seed)?;
                let f = observe_uniform(&truth, p, self.error_rate, self.seed)?;
                Ok((truth, f))
            }
            ObservationModel::Contiguous { coverage, lengths, placement } => {
                if self.m < 2 {
                    return Err(Error::invalid("need m >= 2"));
                }
                let haplotype = Haplotype::from_signs(random_signs(self.m, self.seed, STREAM_HAPLOTYPE))?;
                let sample = observe_contiguous(&haplotype, coverage, lengths, placement, self.error_rate, self.seed)?;
                let truth = GroundTruth::new(haplotype, sample.membership)?;
                Ok((truth, sample.fragments))
            }
        }
    }

    /// `key=value` pairs describing this spec.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![("seed".to_string(), self.seed.to_string()), ("m".to_string(), self.m.to_string())];
        match self.model {
            ObservationModel::Uniform { n, p } => {
                out.push(("model".into(), "uniform".into()));
                out.push(("n".into(), n.to_string()));
                out.push(("p".into(), p.to_string()));
            }
            ObservationModel::Contiguous { coverage, lengths, placement } => {
                out.push(("model".into(), "contiguous".into()));
                out.push(("coverage".into(), coverage.to_string()));
                out.push(("read_length".into(), lengths.to_string()));
                out.push(("placement".into(), placement.to_string()));
            }
        }
        out.push(("error_rate".into(), self.error_rate.to_string()));
        out.push(("n_max".into(), N_MAX.to_string()));
        out
    }
}

/// Contents of a truth sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthFile {
    pub truth: GroundTruth,
    pub params: BTreeMap<String, String>,
}

/// Writes the three-line truth sidecar: haplotype, membership, `key=value` echo.
pub fn write_truth<W: Write>(truth: &GroundTruth, params: &[(String, String)], mut out: W) -> Result<()> {
    writeln!(out, "{}", truth.haplotype.to_allele_string())?;
    let membership: Vec<String> = truth.membership.iter().map(|v| v.to_string()).collect();
    writeln!(out, "{}", membership.join(" "))?;
    let echo: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "{}", echo.join(" "))?;
    Ok(())
}

pub fn read_truth<R: BufRead>(reader: R) -> Result<TruthFile> {
    let mut lines = reader.lines();
    let mut next = |line: usize| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::parse(line, ParseErrorKind::Malformed("truth file is truncated".into())))
    };
    let haplotype = Haplotype::parse_allele_string(&next(1)?)?;
    let membership = next(2)?
        .split_whitespace()
        .map(|t| match t {
            "1" | "+1" => Ok(1),
            "-1" => Ok(-1),
            other => Err(Error::parse(2, ParseErrorKind::Malformed(format!("membership `{other}` is not ±1")))),
        })
        .collect::<Result<Vec<i8>>>()?;
    let mut params = BTreeMap::new();
    if let Ok(line) = next(3) {
        for kv in line.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::parse(3, ParseErrorKind::Malformed(format!("`{kv}` is not key=value"))))?;
            params.insert(k.to_string(), v.to_string());
        }
    }
    Ok(TruthFile { truth: GroundTruth::new(haplotype, membership)?, params })
}
