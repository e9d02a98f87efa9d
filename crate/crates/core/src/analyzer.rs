//! Classification of the left null space into small and large dependencies.
//!
//! Every nonzero codeword is enumerated (the dimension is tiny in practice),
//! then sorted by weight into the small band `w <= ω`, the large band
//! `|w - n/2| <= √(a n ln n)`, or flagged as an anomaly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{gf2_rank_nullspace, BitMatrix, BitVec, NullSpaceBasis, XorBasis};
use crate::theory::{default_omega, large_band_halfwidth};
use crate::unionfind::UnionFind;

pub const DEFAULT_GUARD: usize = 20;
pub const DEFAULT_WINDOW_A: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerParams {
    pub omega: usize,
    pub a: f64,
    pub guard: usize,
}

impl AnalyzerParams {
    /// ω = ⌈ln² n⌉, a = 4, guard 20.
    pub fn for_n(n: usize) -> Self {
        AnalyzerParams {
            omega: default_omega(n),
            a: DEFAULT_WINDOW_A,
            guard: DEFAULT_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    pub support: BitVec,
    pub weight: usize,
    /// Which basis vectors were summed, bit i for vector i.
    pub mask: u32,
}

/// All `2^d - 1` nonzero codewords in Gray-code order.
pub fn enumerate_codewords(basis: &NullSpaceBasis, guard: usize) -> Result<Vec<Codeword>> {
    let d = basis.dimension();
    if d > guard || d > 31 {
        return Err(Error::GuardExceeded { dim: d, guard });
    }
    let mut out = Vec::with_capacity((1usize << d) - 1);
    let mut acc = BitVec::zeros(basis.n_rows());
    let mut mask = 0u32;
    for i in 1u32..(1u32 << d) {
        let bit = i.trailing_zeros() as usize;
        acc.xor_assign(&basis.vectors()[bit]);
        mask ^= 1 << bit;
        out.push(Codeword {
            weight: acc.weight(),
            support: acc.clone(),
            mask,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Small,
    Large,
    Anomalous,
}

pub fn band(weight: usize, n: usize, omega: usize, a: f64) -> Band {
    if weight <= omega {
        Band::Small
    } else if in_window(weight, n, a) {
        Band::Large
    } else {
        Band::Anomalous
    }
}

fn in_window(weight: usize, n: usize, a: f64) -> bool {
    (weight as f64 - n as f64 / 2.0).abs() <= large_band_halfwidth(n, a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSmall {
    pub supports: Vec<BitVec>,
    pub disjoint: bool,
    pub overlapping_pairs: usize,
}

/// Small codewords whose support strictly contains no other codeword's
/// support. Pairwise disjointness is checked and reported, not enforced.
pub fn fundamental_small(codewords: &[Codeword], omega: usize) -> FundamentalSmall {
    let small: Vec<&Codeword> = codewords.iter().filter(|c| c.weight <= omega).collect();
    // Anything inside a small support is itself small, so only small
    // codewords can witness non-minimality.
    let supports: Vec<BitVec> = small
        .iter()
        .filter(|c| {
            !small
                .iter()
                .any(|o| o.weight < c.weight && o.support.is_subset_of(&c.support))
        })
        .map(|c| c.support.clone())
        .collect();
    let mut overlapping_pairs = 0;
    for (i, a) in supports.iter().enumerate() {
        for b in &supports[i + 1..] {
            if a.intersects(b) {
                overlapping_pairs += 1;
            }
        }
    }
    FundamentalSmall {
        disjoint: overlapping_pairs == 0,
        overlapping_pairs,
        supports,
    }
}

/// Whether the rows of `support` are linked into one piece by the columns.
///
/// Two support rows are joined whenever some column has nonzero entries in
/// both. When every column meets the support in 0 or 2 rows (always the case
/// for a dependency with `s <= 3`), a disconnected support splits into smaller
/// dependencies and a connected one cannot, so this is the minimality test.
pub fn connected_functional_digraph(m: &BitMatrix, support: &BitVec) -> Result<bool> {
    if !m.is_left_dependency(support)? {
        return Err(Error::NotADependency);
    }
    Ok(support_components(m, support, None) <= 1)
}

/// Connectivity of the functional digraph D_S alone: only the columns whose
/// diagonal unit sits inside the support (column `j*n + i` for `i` in S).
/// Can call a minimal support disconnected when some outside column carries
/// the only link; kept as a diagnostic.
pub fn connected_on_own_columns(m: &BitMatrix, support: &BitVec) -> Result<bool> {
    if !m.is_left_dependency(support)? {
        return Err(Error::NotADependency);
    }
    let n = m.n_rows();
    let own = |c: usize| support.get(c % n);
    Ok(support_components(m, support, Some(&own)) <= 1)
}

fn support_components(m: &BitMatrix, support: &BitVec, keep: Option<&dyn Fn(usize) -> bool>) -> usize {
    let rows: Vec<usize> = support.ones().collect();
    if rows.is_empty() {
        return 0;
    }
    let mut uf = UnionFind::new(rows.len());
    let mut first_in_col: std::collections::HashMap<usize, usize> = Default::default();
    for (idx, &r) in rows.iter().enumerate() {
        for c in m.row_ones(r) {
            if keep.is_some_and(|k| !k(c)) {
                continue;
            }
            match first_in_col.entry(c) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    uf.union(*e.get(), idx);
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(idx);
                }
            }
        }
    }
    uf.components()
}

/// True iff every nonempty XOR of `large_basis` has weight in the window
/// `|w - n/2| <= √(a n ln n)`.
pub fn is_simple_sequence(large_basis: &[BitVec], n: usize, a: f64) -> bool {
    let k = large_basis.len();
    if k == 0 {
        return true;
    }
    assert!(k < 32, "large basis too big to enumerate");
    let mut acc = BitVec::zeros(large_basis[0].len());
    for i in 1u32..(1u32 << k) {
        acc.xor_assign(&large_basis[i.trailing_zeros() as usize]);
        if !in_window(acc.weight(), n, a) {
            return false;
        }
    }
    true
}

/// Venn-cell sizes |I_x| of k large dependencies. Pattern `x` has bit `i` set
/// for rows inside `B_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionStructure {
    pub k: usize,
    pub sizes: Vec<usize>,
    /// Patterns whose size falls outside `n/2^k (1 ± 4^k √(ln n / n))`.
    pub flagged: Vec<usize>,
}

pub fn intersection_structure(large_basis: &[BitVec], n: usize) -> Result<IntersectionStructure> {
    let k = large_basis.len();
    if k > 20 {
        return Err(Error::OutOfRange(format!("{k} large vectors is too many cells")));
    }
    if let Some(b) = large_basis.iter().find(|b| b.len() != n) {
        return Err(Error::Dimension(format!("vector of length {} for n = {n}", b.len())));
    }
    let mut sizes = vec![0usize; 1 << k];
    for row in 0..n {
        let x = large_basis
            .iter()
            .enumerate()
            .fold(0usize, |x, (i, b)| x | (usize::from(b.get(row)) << i));
        sizes[x] += 1;
    }
    let nf = n as f64;
    let centre = nf / (1u64 << k) as f64;
    let slack = 4f64.powi(k as i32) * (nf.ln() / nf).sqrt();
    let flagged = sizes
        .iter()
        .enumerate()
        .filter(|(_, &s)| ((s as f64) - centre).abs() > centre * slack)
        .map(|(x, _)| x)
        .collect();
    Ok(IntersectionStructure { k, sizes, flagged })
}

/// U(x, y) = parity of Σ x_i y_i over nonzero x, y in {0,1}^k; row and
/// column `x - 1` hold pattern `x`.
pub fn build_u(k: u32) -> Result<BitMatrix> {
    if !(1..=12).contains(&k) {
        return Err(Error::OutOfRange(format!("k = {k} outside 1..=12")));
    }
    let size = (1usize << k) - 1;
    let mut u = BitMatrix::zeros(size, size)?;
    for x in 1..=size {
        for y in 1..=size {
            if (x & y).count_ones() % 2 == 1 {
                u.set(x - 1, y - 1, true);
            }
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceReport {
    pub n: usize,
    pub rank: usize,
    pub d: usize,
    /// Codeword weights in enumeration order.
    pub weights: Vec<usize>,
    pub sigma: usize,
    pub lambda: usize,
    pub fundamental_count: usize,
    pub small_supports: Vec<Vec<usize>>,
    pub small_disjoint: bool,
    /// Weights outside both bands.
    pub anomalies: Vec<usize>,
    pub omega: usize,
    pub a: f64,
    pub large_basis_weights: Vec<usize>,
    pub large_basis_matches_lambda: bool,
    pub simple_a1: Option<bool>,
    pub simple_a4: Option<bool>,
    pub intersection: Option<IntersectionStructure>,
    pub small_checked: usize,
    /// Small codewords where minimality and connectivity disagree.
    pub connectivity_mismatches: usize,
    /// Small codewords where minimality and D_S-only connectivity disagree.
    pub own_column_mismatches: usize,
    #[serde(skip)]
    pub large_basis: Vec<BitVec>,
}

/// Classification from the codeword list alone; `n` is the row count.
pub fn classify(codewords: &[Codeword], n: usize, omega: usize, a: f64) -> NullSpaceReport {
    let d = (codewords.len() + 1).trailing_zeros() as usize;
    debug_assert_eq!(codewords.len() + 1, 1 << d);
    let anomalies = codewords
        .iter()
        .filter(|c| band(c.weight, n, omega, a) == Band::Anomalous)
        .map(|c| c.weight)
        .collect();
    let fundamentals = fundamental_small(codewords, omega);
    let mut span = XorBasis::new();
    for s in &fundamentals.supports {
        span.insert(s);
    }
    let sigma = span.dimension();
    let lambda = d - sigma;
    let mut large_basis = Vec::new();
    for c in codewords {
        if band(c.weight, n, omega, a) == Band::Large && span.insert(&c.support) {
            large_basis.push(c.support.clone());
        }
    }
    NullSpaceReport {
        n,
        rank: n - d,
        d,
        weights: codewords.iter().map(|c| c.weight).collect(),
        sigma,
        lambda,
        fundamental_count: fundamentals.supports.len(),
        small_supports: fundamentals
            .supports
            .iter()
            .map(|s| s.ones().collect())
            .collect(),
        small_disjoint: fundamentals.disjoint,
        anomalies,
        omega,
        a,
        large_basis_weights: large_basis.iter().map(BitVec::weight).collect(),
        large_basis_matches_lambda: large_basis.len() == lambda,
        large_basis,
        ..Default::default()
    }
}

/// Full analysis of a GF(2) matrix: rank, codewords, classification, and the
/// structural checks on both the small and the large part.
pub fn analyze_gf2(m: &BitMatrix, params: &AnalyzerParams) -> Result<NullSpaceReport> {
    let reduction = gf2_rank_nullspace(m)?;
    let codewords = enumerate_codewords(&reduction.basis, params.guard)?;
    let n = m.n_rows();
    let mut report = classify(&codewords, n, params.omega, params.a);
    report.rank = reduction.rank;

    for c in codewords.iter().filter(|c| c.weight <= params.omega) {
        let minimal = !codewords
            .iter()
            .any(|o| o.weight < c.weight && o.support.is_subset_of(&c.support));
        let connected = connected_functional_digraph(m, &c.support)?;
        let own = connected_on_own_columns(m, &c.support)?;
        report.small_checked += 1;
        report.connectivity_mismatches += usize::from(minimal != connected);
        report.own_column_mismatches += usize::from(minimal != own);
    }

    if !report.large_basis.is_empty() {
        let a1 = is_simple_sequence(&report.large_basis, n, 1.0);
        let a4 = is_simple_sequence(&report.large_basis, n, DEFAULT_WINDOW_A);
        report.simple_a1 = Some(a1);
        report.simple_a4 = Some(a4);
        if a4 {
            report.intersection = Some(intersection_structure(&report.large_basis, n)?);
        }
    }
    Ok(report)
}
