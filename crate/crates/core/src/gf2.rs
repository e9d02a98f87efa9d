//! Bit-packed linear algebra over GF(2).
//!
//! The product of elimination here is the **left** null space `{x : xM = 0}`:
//! sets of rows that sum to zero. Most libraries hand back the column kernel
//! `{y : My = 0}` instead; that is not what this module computes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Fixed-length bit vector. Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec[{}]{:?}", self.len, self.ones().collect::<Vec<_>>())
    }
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index, true);
        v
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.set(i, true);
        }
        v
    }

    /// Takes ownership of packed words, clearing any bits past `len`.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let tail = len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        BitVec { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of bit vectors of different length");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// `self ⊆ other` as supports.
    pub fn is_subset_of(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &BitVec) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }
}

/// Row-major bit-packed matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.n_rows, self.n_cols)?;
        for r in 0..self.n_rows.min(32) {
            let line: String = (0..self.n_cols.min(64))
                .map(|c| if self.get(r, c) { '1' } else { '.' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyMatrix {
                rows: n_rows,
                cols: n_cols,
            });
        }
        let stride = words_for(n_cols);
        Ok(BitMatrix {
            n_rows,
            n_cols,
            stride,
            data: vec![0; n_rows * stride],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    pub fn from_rows(n_cols: usize, rows: &[BitVec]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), n_cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {r} has {} bits, expected {n_cols}",
                    row.len()
                )));
            }
            m.row_words_mut(r).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Builds from a dense 0/1 table; any nonzero byte is a one.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), n_cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!("ragged dense row {r}")));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.set(r, c, true);
                }
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.n_rows && c < self.n_cols);
        self.data[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.n_rows && c < self.n_cols);
        let w = &mut self.data[r * self.stride + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// GF(2) accumulation of a unit into entry `(r, c)`.
    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        assert!(r < self.n_rows && c < self.n_cols);
        self.data[r * self.stride + c / WORD_BITS] ^= 1u64 << (c % WORD_BITS);
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec::from_words(self.n_cols, self.row_words(r).to_vec())
    }

    pub fn column(&self, c: usize) -> BitVec {
        BitVec::from_indices(self.n_rows, (0..self.n_rows).filter(|&r| self.get(r, c)))
    }

    /// Column indices holding a one in row `r`.
    pub fn row_ones(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        let words = self.row_words(r);
        words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.n_cols, self.n_rows).expect("nonempty");
        for r in 0..self.n_rows {
            for c in self.row_ones(r) {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.n_cols];
        for r in 0..self.n_rows {
            for c in self.row_ones(r) {
                w[c] += 1;
            }
        }
        w
    }

    /// Row-vector product `xM`: the GF(2) sum of the rows selected by `x`.
    pub fn left_mul(&self, x: &BitVec) -> Result<BitVec> {
        if x.len() != self.n_rows {
            return Err(Error::Dimension(format!(
                "left vector has {} bits, matrix has {} rows",
                x.len(),
                self.n_rows
            )));
        }
        let mut acc = vec![0u64; self.stride];
        for r in x.ones() {
            for (a, b) in acc.iter_mut().zip(self.row_words(r)) {
                *a ^= *b;
            }
        }
        Ok(BitVec::from_words(self.n_cols, acc))
    }

    pub fn is_left_dependency(&self, x: &BitVec) -> Result<bool> {
        Ok(self.left_mul(x)?.is_zero())
    }

    pub fn permute_rows(&self, perm: &[usize]) -> BitMatrix {
        assert_eq!(perm.len(), self.n_rows);
        let mut out = self.clone();
        for (dst, &src) in perm.iter().enumerate() {
            out.row_words_mut(dst).copy_from_slice(self.row_words(src));
        }
        out
    }

    pub fn permute_cols(&self, perm: &[usize]) -> BitMatrix {
        assert_eq!(perm.len(), self.n_cols);
        let mut out = BitMatrix::zeros(self.n_rows, self.n_cols).expect("nonempty");
        for r in 0..self.n_rows {
            for (dst, &src) in perm.iter().enumerate() {
                if self.get(r, src) {
                    out.set(r, dst, true);
                }
            }
        }
        out
    }
}

/// Basis of the left null space of a matrix; each vector selects a set of rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullSpaceBasis {
    n_rows: usize,
    vectors: Vec<BitVec>,
}

impl NullSpaceBasis {
    pub fn new(n_rows: usize, vectors: Vec<BitVec>) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != n_rows) {
            return Err(Error::Dimension(format!(
                "basis vector of length {} for {n_rows} rows",
                v.len()
            )));
        }
        Ok(NullSpaceBasis { n_rows, vectors })
    }

    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn vectors(&self) -> &[BitVec] {
        &self.vectors
    }
}

/// Result of transform-carrying elimination.
#[derive(Debug, Clone)]
pub struct Gf2Reduction {
    pub rank: usize,
    pub basis: NullSpaceBasis,
}

/// Rank and left-null-space basis of `m`.
///
/// Rows are eliminated while carrying an `n_rows x n_rows` transform that
/// starts as the identity. Forward elimination is enough: rows that end up
/// zero in the matrix part carry, in their transform part, a set of original
/// rows summing to zero, and those rows are independent because the transform
/// stays invertible throughout.
pub fn gf2_rank_nullspace(m: &BitMatrix) -> Result<Gf2Reduction> {
    let n_rows = m.n_rows();
    let n_cols = m.n_cols();
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::EmptyMatrix {
            rows: n_rows,
            cols: n_cols,
        });
    }
    let mwords = words_for(n_cols);
    let twords = words_for(n_rows);
    let stride = mwords + twords;
    let mut data = vec![0u64; n_rows * stride];
    for r in 0..n_rows {
        let row = &mut data[r * stride..(r + 1) * stride];
        row[..mwords].copy_from_slice(m.row_words(r));
        row[mwords + r / WORD_BITS] |= 1u64 << (r % WORD_BITS);
    }

    let rank = forward_eliminate(&mut data, n_rows, n_cols, stride);

    let vectors = (rank..n_rows)
        .map(|r| {
            let row = &data[r * stride..(r + 1) * stride];
            debug_assert!(row[..mwords].iter().all(|&w| w == 0));
            BitVec::from_words(n_rows, row[mwords..].to_vec())
        })
        .collect();
    Ok(Gf2Reduction {
        rank,
        basis: NullSpaceBasis::new(n_rows, vectors)?,
    })
}

/// Rank only; skips the transform.
pub fn gf2_rank(m: &BitMatrix) -> usize {
    let stride = words_for(m.n_cols());
    let mut data = m.data.clone();
    forward_eliminate(&mut data, m.n_rows(), m.n_cols(), stride)
}

/// Column-ordered forward elimination on packed rows of `stride` words whose
/// first `n_cols` bits are the matrix part. Returns the rank; rows
/// `rank..n_rows` are zero in the matrix part afterwards.
fn forward_eliminate(data: &mut [u64], n_rows: usize, n_cols: usize, stride: usize) -> usize {
    let mut pivot = 0;
    for col in 0..n_cols {
        if pivot == n_rows {
            break;
        }
        let w = col / WORD_BITS;
        let bit = 1u64 << (col % WORD_BITS);
        let Some(found) = (pivot..n_rows).find(|&r| data[r * stride + w] & bit != 0) else {
            continue;
        };
        if found != pivot {
            let (head, tail) = data.split_at_mut(found * stride);
            head[pivot * stride..(pivot + 1) * stride].swap_with_slice(&mut tail[..stride]);
        }
        // Every remaining row is zero left of `col`, so the XOR can start at word `w`.
        let (head, tail) = data.split_at_mut((pivot + 1) * stride);
        let prow = &head[pivot * stride + w..];
        for row in tail.chunks_exact_mut(stride) {
            if row[w] & bit != 0 {
                for (a, b) in row[w..].iter_mut().zip(prow) {
                    *a ^= *b;
                }
            }
        }
        pivot += 1;
    }
    pivot
}

/// GF(2) sum of the basis vectors selected by `mask`.
pub fn combine_codewords(basis: &NullSpaceBasis, mask: &[bool]) -> Result<BitVec> {
    if mask.len() != basis.dimension() {
        return Err(Error::Dimension(format!(
            "mask of length {} for basis of dimension {}",
            mask.len(),
            basis.dimension()
        )));
    }
    let mut acc = BitVec::zeros(basis.n_rows());
    for (v, _) in basis.vectors().iter().zip(mask).filter(|(_, &m)| m) {
        acc.xor_assign(v);
    }
    Ok(acc)
}

/// Incremental GF(2) span membership over bit vectors, kept in echelon form
/// keyed by leading bit.
#[derive(Debug, Clone, Default)]
pub struct XorBasis {
    rows: Vec<(usize, BitVec)>,
}

impl XorBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (lead, row) in &self.rows {
            if v.get(*lead) {
                v.xor_assign(row);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` if it is independent of the current span; returns whether it was added.
    pub fn insert(&mut self, v: &BitVec) -> bool {
        let r = self.reduce(v);
        let Some(lead) = r.ones().next() else {
            return false;
        };
        for (_, row) in self.rows.iter_mut() {
            if row.get(lead) {
                row.xor_assign(&r);
            }
        }
        self.rows.push((lead, r));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_full_rank() {
        let m = BitMatrix::identity(70).unwrap();
        let red = gf2_rank_nullspace(&m).unwrap();
        assert_eq!(red.rank, 70);
        assert_eq!(red.basis.dimension(), 0);
    }

    #[test]
    fn duplicated_last_row_gives_first_plus_last() {
        let n = 9;
        let mut m = BitMatrix::identity(n).unwrap();
        m.set(n - 1, n - 1, false);
        m.set(n - 1, 0, true);
        let red = gf2_rank_nullspace(&m).unwrap();
        assert_eq!(red.rank, n - 1);
        assert_eq!(red.basis.vectors(), &[BitVec::from_indices(n, [0, n - 1])]);
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(matches!(
            BitMatrix::zeros(0, 3),
            Err(Error::EmptyMatrix { .. })
        ));
        assert!(BitMatrix::from_dense(&[]).is_err());
    }

    #[test]
    fn combine_examples() {
        let n = 5;
        let e1 = BitVec::unit(n, 0);
        let e12 = BitVec::from_indices(n, [0, 1]);
        let basis = NullSpaceBasis::new(n, vec![e1.clone(), e12]).unwrap();
        assert!(combine_codewords(&basis, &[false, false]).unwrap().is_zero());
        assert_eq!(combine_codewords(&basis, &[true, false]).unwrap(), e1);
        assert_eq!(
            combine_codewords(&basis, &[true, true]).unwrap(),
            BitVec::unit(n, 1)
        );
        assert!(combine_codewords(&basis, &[true]).is_err());
    }

    #[test]
    fn bits_past_length_stay_clear() {
        let v = BitVec::from_words(3, vec![u64::MAX]);
        assert_eq!(v.weight(), 3);
        let m = BitMatrix::from_dense(&[vec![1, 1, 1], vec![1, 0, 1]]).unwrap();
        assert_eq!(m.row(0).words(), &[0b111]);
    }

    #[test]
    fn wide_and_tall_shapes() {
        // 3 x 130: three distinct nonzero rows, one of them the sum of the others.
        let mut a = BitVec::zeros(130);
        a.set(129, true);
        a.set(3, true);
        let mut b = BitVec::zeros(130);
        b.set(64, true);
        let mut c = a.clone();
        c.xor_assign(&b);
        let m = BitMatrix::from_rows(130, &[a, b, c]).unwrap();
        let red = gf2_rank_nullspace(&m).unwrap();
        assert_eq!(red.rank, 2);
        assert_eq!(red.basis.vectors()[0].weight(), 3);
        // tall: more rows than columns forces co-rank >= n_rows - n_cols
        let tall = BitMatrix::from_dense(&vec![vec![1, 0]; 5]).unwrap();
        let red = gf2_rank_nullspace(&tall).unwrap();
        assert_eq!(red.rank, 1);
        assert_eq!(red.basis.dimension(), 4);
        for v in red.basis.vectors() {
            assert!(tall.is_left_dependency(v).unwrap());
        }
    }

    #[test]
    fn xor_basis_tracks_span() {
        let n = 6;
        let mut xb = XorBasis::new();
        assert!(xb.insert(&BitVec::from_indices(n, [0, 1])));
        assert!(xb.insert(&BitVec::from_indices(n, [1, 2])));
        assert!(!xb.insert(&BitVec::from_indices(n, [0, 2])));
        assert!(xb.contains(&BitVec::from_indices(n, [0, 2])));
        assert!(!xb.contains(&BitVec::unit(n, 5)));
        assert_eq!(xb.dimension(), 2);
    }
}
