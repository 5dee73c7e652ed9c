//! Sparse SNP-fragment matrix.
//!
//! Rows are SNP positions, columns are reads. Every observed cell holds
//! `+1` or `-1`; unobserved cells are implicitly zero and never stored.
//! The matrix is indexed twice (column-major and row-major) because the
//! membership update walks columns while the haplotype update walks rows.
//!
//! The on-disk fragment format is 1-based:
//!
//! ```text
//! # comment
//! m n
//! j i1 a1 i2 a2 ...
//! ```
//!
//! where `j` is the read, `i_k` are strictly increasing SNP indices and
//! `a_k` are alleles. Allele `0` maps to `+1`, allele `1` maps to `-1`.

use std::io::{BufRead, Write};

use crate::error::{Error, ParseErrorKind, Result};

/// One observed cell of the fragment matrix, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub snp: usize,
    pub read: usize,
    pub value: i8,
}

impl Entry {
    pub fn new(snp: usize, read: usize, value: i8) -> Self {
        Entry { snp, read, value }
    }
}

/// Observed entries `P_Ω(R)` of an `m x n` SNP-fragment matrix.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentMatrix {
    m: usize,
    n: usize,
    col_ptr: Vec<usize>,
    col_snp: Vec<usize>,
    col_val: Vec<i8>,
    row_ptr: Vec<usize>,
    row_read: Vec<usize>,
    row_val: Vec<i8>,
}

impl FragmentMatrix {
    /// Builds a matrix from a list of observed entries.
    ///
    /// Rejects out-of-range indices, values other than `±1` and repeated cells.
    pub fn from_entries(m: usize, n: usize, mut entries: Vec<Entry>) -> Result<Self> {
        for e in &entries {
            if e.snp >= m {
                return Err(Error::invalid(format!("SNP index {} out of bounds for m = {m}", e.snp)));
            }
            if e.read >= n {
                return Err(Error::invalid(format!("read index {} out of bounds for n = {n}", e.read)));
            }
            if e.value != 1 && e.value != -1 {
                return Err(Error::invalid(format!("entry value {} is not ±1", e.value)));
            }
        }
        entries.sort_unstable_by_key(|e| (e.read, e.snp));
        if let Some(w) = entries.windows(2).find(|w| w[0].read == w[1].read && w[0].snp == w[1].snp) {
            return Err(Error::invalid(format!(
                "duplicate entry at SNP {} read {}",
                w[0].snp, w[0].read
            )));
        }
        Ok(Self::from_sorted_unique(m, n, &entries))
    }

    /// Builds from entries already sorted by `(read, snp)` without duplicates.
    fn from_sorted_unique(m: usize, n: usize, entries: &[Entry]) -> Self {
        let nnz = entries.len();
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_ptr = vec![0usize; m + 1];
        for e in entries {
            col_ptr[e.read + 1] += 1;
            row_ptr[e.snp + 1] += 1;
        }
        for k in 0..n {
            col_ptr[k + 1] += col_ptr[k];
        }
        for k in 0..m {
            row_ptr[k + 1] += row_ptr[k];
        }
        let col_snp = entries.iter().map(|e| e.snp).collect();
        let col_val = entries.iter().map(|e| e.value).collect();

        // Scanning in column order fills each row in increasing read order.
        let mut row_read = vec![0usize; nnz];
        let mut row_val = vec![0i8; nnz];
        let mut cursor = row_ptr.clone();
        for e in entries {
            let slot = cursor[e.snp];
            row_read[slot] = e.read;
            row_val[slot] = e.value;
            cursor[e.snp] += 1;
        }
        FragmentMatrix { m, n, col_ptr, col_snp, col_val, row_ptr, row_read, row_val }
    }

    /// Fully observed matrix `u vᵀ` for sign vectors `u`, `v`.
    pub fn from_rank_one(u: &[i8], v: &[i8]) -> Result<Self> {
        let mut entries = Vec::with_capacity(u.len() * v.len());
        for (j, &vj) in v.iter().enumerate() {
            for (i, &ui) in u.iter().enumerate() {
                entries.push(Entry::new(i, j, ui * vj));
            }
        }
        Self::from_entries(u.len(), v.len(), entries)
    }

    /// Number of SNP positions (rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of reads (columns).
    pub fn n(&self) -> usize {
        self.n
    }

    /// `|Ω|`.
    pub fn nnz(&self) -> usize {
        self.col_snp.len()
    }

    /// Covered SNPs of read `j` with their values, in increasing SNP order.
    pub fn column(&self, j: usize) -> impl ExactSizeIterator<Item = (usize, i8)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_snp[r.clone()].iter().copied().zip(self.col_val[r].iter().copied())
    }

    /// Reads covering SNP `i` with their values, in increasing read order.
    pub fn row(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, i8)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_read[r.clone()].iter().copied().zip(self.row_val[r].iter().copied())
    }

    pub fn column_len(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// All entries in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = Entry> + '_ {
        (0..self.n).flat_map(move |j| self.column(j).map(move |(i, v)| Entry::new(i, j, v)))
    }

    /// Value at `(i, j)` if observed.
    pub fn get(&self, i: usize, j: usize) -> Option<i8> {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_snp[r.clone()]
            .binary_search(&i)
            .ok()
            .map(|k| self.col_val[r.start + k])
    }

    /// Sample probability `|Ω| / (m n)`; zero for an empty shape.
    pub fn sample_probability(&self) -> f64 {
        let cells = self.m * self.n;
        if cells == 0 {
            0.0
        } else {
            self.nnz() as f64 / cells as f64
        }
    }

    /// `Σ_{i | (i,j) ∈ Ω} R_ij u_i`.
    pub fn column_dot(&self, j: usize, u: &[f64]) -> f64 {
        self.column(j).map(|(i, v)| f64::from(v) * u[i]).sum()
    }

    /// `Σ_{j | (i,j) ∈ Ω} R_ij v_j`.
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        self.row(i).map(|(j, r)| f64::from(r) * v[j]).sum()
    }

    /// `P_Ω(R) y` for `y` of length `n`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, y.len())?;
        Ok((0..self.m).map(|i| self.row_dot(i, y)).collect())
    }

    /// `P_Ω(R)ᵀ x` for `x` of length `m`.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m, x.len())?;
        Ok((0..self.n).map(|j| self.column_dot(j, x)).collect())
    }

    /// Dense row-major copy, unobserved cells as `0`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.m];
        for e in self.entries() {
            dense[e.snp][e.read] = f64::from(e.value);
        }
        dense
    }

    /// Reads covering at most one SNP. Such reads carry no phasing information.
    pub fn short_reads(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.column_len(j) <= 1).collect()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Parses the fragment text format into a validated matrix.
pub fn parse_fragments<R: BufRead>(reader: R) -> Result<FragmentMatrix> {
    let mut header: Option<(usize, usize)> = None;
    let mut entries = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((m, n)) = header else {
            if tokens.len() != 2 {
                return Err(Error::parse(line_no, ParseErrorKind::MissingHeader));
            }
            let m = parse_usize(tokens[0], line_no)?;
            let n = parse_usize(tokens[1], line_no)?;
            header = Some((m, n));
            continue;
        };

        if tokens.len() % 2 == 0 {
            return Err(Error::parse(
                line_no,
                ParseErrorKind::Malformed("expected a read index followed by SNP/allele pairs".into()),
            ));
        }
        let read = parse_usize(tokens[0], line_no)?;
        if read == 0 || read > n {
            return Err(Error::parse(
                line_no,
                ParseErrorKind::IndexOutOfBounds { what: "read", index: read, bound: n },
            ));
        }
        let mut last_snp = 0usize;
        for pair in tokens[1..].chunks_exact(2) {
            let snp = parse_usize(pair[0], line_no)?;
            if snp == 0 || snp > m {
                return Err(Error::parse(
                    line_no,
                    ParseErrorKind::IndexOutOfBounds { what: "SNP", index: snp, bound: m },
                ));
            }
            if snp <= last_snp {
                return Err(Error::parse(
                    line_no,
                    ParseErrorKind::Malformed(format!(
                        "SNP indices must be strictly increasing ({snp} after {last_snp})"
                    )),
                ));
            }
            last_snp = snp;
            let value = match pair[1] {
                "0" => 1,
                "1" => -1,
                other => return Err(Error::parse(line_no, ParseErrorKind::InvalidAllele(other.into()))),
            };
            entries.push((line_no, Entry::new(snp - 1, read - 1, value)));
        }
    }

    let Some((m, n)) = header else {
        return Err(Error::parse(0, ParseErrorKind::MissingHeader));
    };

    // A read may be split over several lines; a repeated cell is reported
    // at the later of its two lines.
    entries.sort_by_key(|(line, e)| (e.read, e.snp, *line));
    for w in entries.windows(2) {
        let (a, b) = (&w[0].1, &w[1].1);
        if a.read == b.read && a.snp == b.snp {
            return Err(Error::parse(
                w[1].0,
                ParseErrorKind::DuplicateEntry { snp: a.snp + 1, read: a.read + 1 },
            ));
        }
    }
    let entries: Vec<Entry> = entries.into_iter().map(|(_, e)| e).collect();
    Ok(FragmentMatrix::from_sorted_unique(m, n, &entries))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(line, ParseErrorKind::Malformed(format!("`{tok}` is not a non-negative integer"))))
}

/// Writes the matrix in fragment format. Reads without observations are omitted.
pub fn write_fragments<W: Write>(f: &FragmentMatrix, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", f.m(), f.n())?;
    for j in 0..f.n() {
        if f.column_len(j) == 0 {
            continue;
        }
        write!(out, "{}", j + 1)?;
        for (i, v) in f.column(j) {
            write!(out, " {} {}", i + 1, if v > 0 { 0 } else { 1 })?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Fragment-format text of `f`.
pub fn to_fragment_string(f: &FragmentMatrix) -> String {
    let mut buf = Vec::new();
    write_fragments(f, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("fragment format is ASCII")
}

/// Mapping between allele symbols and matrix signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlleleConvention {
    /// Allele `0` is `+1`, allele `1` is `-1`.
    #[default]
    ZeroIsPlus,
}

impl AlleleConvention {
    pub fn sign_of(self, allele: u8) -> Option<i8> {
        match (self, allele) {
            (AlleleConvention::ZeroIsPlus, b'0') => Some(1),
            (AlleleConvention::ZeroIsPlus, b'1') => Some(-1),
            _ => None,
        }
    }

    pub fn allele_of(self, sign: i8) -> char {
        match self {
            AlleleConvention::ZeroIsPlus => {
                if sign >= 0 {
                    '0'
                } else {
                    '1'
                }
            }
        }
    }
}

/// A haplotype over `{+1, -1}`. Its complement is the other haplotype of the pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Haplotype {
    values: Vec<i8>,
    convention: AlleleConvention,
}

impl Haplotype {
    pub fn from_signs(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::invalid(format!("haplotype entry {bad} is not ±1")));
        }
        Ok(Haplotype { values, convention: AlleleConvention::default() })
    }

    /// Entrywise sign of a real vector, zero mapping to `+1`.
    pub fn from_reals(x: &[f64]) -> Self {
        Haplotype { values: x.iter().map(|&v| sign(v)).collect(), convention: AlleleConvention::default() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn convention(&self) -> AlleleConvention {
        self.convention
    }

    pub fn complement(&self) -> Self {
        Haplotype { values: self.values.iter().map(|v| -v).collect(), convention: self.convention }
    }

    /// Orients the haplotype so that its first entry is `+1`.
    pub fn canonical(&self) -> Self {
        match self.values.first() {
            Some(&v) if v < 0 => self.complement(),
            _ => self.clone(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    /// The `0/1` string form used by the haplotype output file.
    pub fn to_allele_string(&self) -> String {
        self.values.iter().map(|&v| self.convention.allele_of(v)).collect()
    }

    pub fn parse_allele_string(s: &str) -> Result<Self> {
        let convention = AlleleConvention::default();
        let values = s
            .trim()
            .bytes()
            .enumerate()
            .map(|(k, b)| {
                convention.sign_of(b).ok_or_else(|| {
                    Error::parse(1, ParseErrorKind::InvalidAllele(format!("{} at position {}", b as char, k + 1)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Haplotype { values, convention })
    }
}

/// Sign with the tie rule `sign(0) = +1`.
pub fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "3 2\n1 1 0 2 0 3 1\n2 1 1 2 1\n";

    fn parse(s: &str) -> Result<FragmentMatrix> {
        parse_fragments(s.as_bytes())
    }

    #[test]
    fn parses_reference_example() {
        let f = parse(EXAMPLE).unwrap();
        assert_eq!((f.m(), f.n(), f.nnz()), (3, 2, 5));
        assert_eq!(f.column(0).collect::<Vec<_>>(), vec![(0, 1), (1, 1), (2, -1)]);
        assert_eq!(f.column(1).collect::<Vec<_>>(), vec![(0, -1), (1, -1)]);
        assert_eq!(f.get(2, 1), None);
        assert!((f.sample_probability() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_body_is_valid() {
        let f = parse("# nothing observed\n4 3\n").unwrap();
        assert_eq!(f.nnz(), 0);
        assert_eq!(f.sample_probability(), 0.0);
    }

    #[test]
    fn out_of_bounds_snp_is_rejected() {
        let err = parse("3 2\n1 5 0 6 1\n").unwrap_err();
        assert!(err.to_string().contains("index out of bounds"), "{err}");
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn duplicate_cell_is_rejected_with_line_number() {
        let err = parse("3 2\n1 1 0 2 0\n\n1 2 1\n").unwrap_err();
        match err {
            Error::Parse { line, kind: ParseErrorKind::DuplicateEntry { snp, read } } => {
                assert_eq!((line, snp, read), (4, 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_allele_and_shape_errors() {
        assert!(matches!(
            parse("3 2\n1 1 2\n").unwrap_err(),
            Error::Parse { line: 2, kind: ParseErrorKind::InvalidAllele(_) }
        ));
        assert!(matches!(
            parse("3 2\n1 1 0 2\n").unwrap_err(),
            Error::Parse { line: 2, kind: ParseErrorKind::Malformed(_) }
        ));
        assert!(matches!(
            parse("3 2\n1 2 0 1 0\n").unwrap_err(),
            Error::Parse { line: 2, kind: ParseErrorKind::Malformed(_) }
        ));
        assert!(matches!(parse("3\n").unwrap_err(), Error::Parse { kind: ParseErrorKind::MissingHeader, .. }));
        assert!(matches!(parse("").unwrap_err(), Error::Parse { kind: ParseErrorKind::MissingHeader, .. }));
        assert!(matches!(
            parse("3 2\n3 1 0\n").unwrap_err(),
            Error::Parse { kind: ParseErrorKind::IndexOutOfBounds { what: "read", .. }, .. }
        ));
    }

    #[test]
    fn short_reads_are_flagged() {
        let f = parse("3 3\n1 1 0 2 0\n2 3 1\n").unwrap();
        assert_eq!(f.short_reads(), vec![1, 2]);
    }

    #[test]
    fn sample_probability_full() {
        let f = FragmentMatrix::from_rank_one(&[1, -1, 1, 1], &[1, 1, -1, 1]).unwrap();
        assert_eq!(f.sample_probability(), 1.0);
    }

    #[test]
    fn column_dot_examples() {
        let f = parse(EXAMPLE).unwrap();
        assert_eq!(f.column_dot(0, &[1.0, 1.0, 1.0]), 1.0);
        let empty = parse("3 2\n1 1 0 3 1\n").unwrap();
        assert_eq!(empty.column_dot(1, &[1.0, 2.0, 3.0]), 0.0);
        // 0.5 * 1 + 0.25 * (-1)
        assert!((empty.column_dot(0, &[0.5, 9.0, 0.25]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn apply_identity_pattern() {
        let f = FragmentMatrix::from_entries(2, 2, vec![Entry::new(0, 0, 1), Entry::new(1, 1, 1)]).unwrap();
        assert_eq!(f.apply(&[3.0, -7.0]).unwrap(), vec![3.0, -7.0]);
        assert_eq!(f.apply_transpose(&[3.0, -7.0]).unwrap(), vec![3.0, -7.0]);
    }

    #[test]
    fn apply_rank_one_gives_scaled_u() {
        let u = [1i8, -1, -1];
        let v = [1i8, 1, -1, 1];
        let f = FragmentMatrix::from_rank_one(&u, &v).unwrap();
        let vf: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
        let out = f.apply(&vf).unwrap();
        for (o, &ui) in out.iter().zip(&u) {
            assert_eq!(*o, 4.0 * f64::from(ui));
        }
    }

    #[test]
    fn apply_dimension_mismatch() {
        let f = parse(EXAMPLE).unwrap();
        assert!(matches!(f.apply(&[1.0]), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
        assert!(matches!(f.apply_transpose(&[1.0]), Err(Error::DimensionMismatch { expected: 3, found: 1 })));
    }

    #[test]
    fn from_entries_validation() {
        assert!(FragmentMatrix::from_entries(2, 2, vec![Entry::new(0, 0, 0)]).is_err());
        assert!(FragmentMatrix::from_entries(2, 2, vec![Entry::new(2, 0, 1)]).is_err());
        assert!(FragmentMatrix::from_entries(2, 2, vec![Entry::new(0, 0, 1), Entry::new(0, 0, -1)]).is_err());
    }

    #[test]
    fn haplotype_string_convention() {
        let h = Haplotype::from_signs(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(h.to_allele_string(), "0110");
        assert_eq!(Haplotype::parse_allele_string("0110\n").unwrap(), h);
        assert!(Haplotype::parse_allele_string("01-0").is_err());
        assert_eq!(h.complement().canonical(), h);
        assert_eq!(Haplotype::from_reals(&[0.0, -0.1, 2.0]).values(), &[1, -1, 1]);
    }
}
