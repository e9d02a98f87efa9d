//! Dense linear algebra over GF(p) for primes p < 2^16.
//!
//! Like the GF(2) engine, elimination produces the left null space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_MODULUS: u64 = 1 << 16;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Barrett reduction for inputs below 2^32.
///
/// With `m = floor(2^32 / p)` the quotient estimate is off by at most one, so a
/// single conditional subtract finishes the job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulus {
    p: u32,
    m: u64,
}

impl Modulus {
    pub fn new(p: u64) -> Result<Self> {
        if p >= MAX_MODULUS || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Modulus {
            p: p as u32,
            m: (1u64 << 32) / p,
        })
    }

    #[inline]
    pub fn value(&self) -> u32 {
        self.p
    }

    #[inline(always)]
    pub fn reduce(&self, x: u32) -> u32 {
        let q = ((x as u64 * self.m) >> 32) as u32;
        let r = x - q * self.p;
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.reduce(a * b)
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero residue by Fermat.
    pub fn inv(&self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "zero has no inverse");
        self.pow(a, self.p as u64 - 2)
    }
}

/// Dense row-major matrix with residues in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeFieldMatrix {
    modulus: u32,
    n_rows: usize,
    n_cols: usize,
    entries: Vec<u32>,
}

impl PrimeFieldMatrix {
    pub fn zeros(modulus: u64, n_rows: usize, n_cols: usize) -> Result<Self> {
        Modulus::new(modulus)?;
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyMatrix {
                rows: n_rows,
                cols: n_cols,
            });
        }
        Ok(PrimeFieldMatrix {
            modulus: modulus as u32,
            n_rows,
            n_cols,
            entries: vec![0; n_rows * n_cols],
        })
    }

    pub fn identity(modulus: u64, n: usize) -> Result<Self> {
        let mut m = Self::zeros(modulus, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn from_rows(modulus: u64, rows: &[Vec<u32>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(modulus, rows.len(), n_cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!("ragged row {r}")));
            }
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, v)?;
            }
        }
        Ok(m)
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        assert!(r < self.n_rows && c < self.n_cols);
        self.entries[r * self.n_cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: u32) -> Result<()> {
        assert!(r < self.n_rows && c < self.n_cols);
        if value >= self.modulus {
            return Err(Error::EntryOutOfRange {
                row: r,
                col: c,
                value,
                modulus: self.modulus,
            });
        }
        self.entries[r * self.n_cols + c] = value;
        Ok(())
    }

    /// Adds `value` into entry `(r, c)` modulo p.
    pub fn accumulate(&mut self, r: usize, c: usize, value: u32) {
        assert!(r < self.n_rows && c < self.n_cols);
        let e = &mut self.entries[r * self.n_cols + c];
        *e = ((*e as u64 + value as u64) % self.modulus as u64) as u32;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.entries[r * self.n_cols..(r + 1) * self.n_cols]
    }

    /// Row-vector product `xM` modulo p.
    pub fn left_mul(&self, x: &[u32]) -> Result<Vec<u32>> {
        if x.len() != self.n_rows {
            return Err(Error::Dimension(format!(
                "left vector has {} entries, matrix has {} rows",
                x.len(),
                self.n_rows
            )));
        }
        let p = self.modulus as u64;
        let mut acc = vec![0u64; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0 {
                continue;
            }
            for (a, &v) in acc.iter_mut().zip(self.row(r)) {
                *a = (*a + xr as u64 * v as u64) % p;
            }
        }
        Ok(acc.into_iter().map(|v| v as u32).collect())
    }
}

#[derive(Debug, Clone)]
pub struct GfpReduction {
    pub rank: usize,
    /// Left null space basis; each vector has one residue per row.
    pub basis: Vec<Vec<u32>>,
}

/// Rank and left-null-space basis over GF(p), by forward elimination while
/// carrying an identity transform.
pub fn gfp_rank_nullspace(m: &PrimeFieldMatrix) -> Result<GfpReduction> {
    let n_rows = m.n_rows;
    let n_cols = m.n_cols;
    let stride = n_cols + n_rows;
    let mut data = vec![0u32; n_rows * stride];
    for r in 0..n_rows {
        let row = &mut data[r * stride..(r + 1) * stride];
        row[..n_cols].copy_from_slice(m.row(r));
        row[n_cols + r] = 1;
    }
    let md = Modulus::new(m.modulus as u64)?;
    let rank = forward_eliminate(&mut data, n_rows, n_cols, stride, md);
    let basis = (rank..n_rows)
        .map(|r| data[r * stride + n_cols..(r + 1) * stride].to_vec())
        .collect();
    Ok(GfpReduction { rank, basis })
}

/// Rank only.
pub fn gfp_rank(m: &PrimeFieldMatrix) -> Result<usize> {
    let md = Modulus::new(m.modulus as u64)?;
    let mut data = m.entries.clone();
    Ok(forward_eliminate(&mut data, m.n_rows, m.n_cols, m.n_cols, md))
}

fn forward_eliminate(
    data: &mut [u32],
    n_rows: usize,
    n_cols: usize,
    stride: usize,
    md: Modulus,
) -> usize {
    let mut pivot = 0;
    for col in 0..n_cols {
        if pivot == n_rows {
            break;
        }
        let Some(found) = (pivot..n_rows).find(|&r| data[r * stride + col] != 0) else {
            continue;
        };
        if found != pivot {
            let (head, tail) = data.split_at_mut(found * stride);
            head[pivot * stride..(pivot + 1) * stride].swap_with_slice(&mut tail[..stride]);
        }
        let inv = md.inv(data[pivot * stride + col]);
        for v in &mut data[pivot * stride + col..(pivot + 1) * stride] {
            *v = md.mul(*v, inv);
        }
        let (head, tail) = data.split_at_mut((pivot + 1) * stride);
        let prow = &head[pivot * stride + col..];
        for row in tail.chunks_exact_mut(stride) {
            let lead = row[col];
            if lead == 0 {
                continue;
            }
            // a + f*b < p + p^2 <= 2^32 for p < 2^16
            let f = md.neg(lead);
            for (a, &b) in row[col..].iter_mut().zip(prow) {
                *a = md.reduce(*a + f * b);
            }
        }
        pivot += 1;
    }
    pivot
}
