//! Mantel permutation test of the correlation between two square matrices.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Data("matrix rows must all have length equal to the row count".into()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Matrix with rows and columns relabeled: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    /// Sum of entries strictly above the diagonal.
    pub fn upper_sum(&self) -> f64 {
        (0..self.n).map(|i| ((i + 1)..self.n).map(|j| self.get(i, j)).sum::<f64>()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MantelReport {
    /// Pearson correlation of the off-diagonal entries.
    pub r: f64,
    /// One-sided permutation p-value, `P(r* ≥ r)`.
    pub p: f64,
    pub permutations: usize,
}

/// Relative slack when comparing permuted correlations with the observed one.
const TIE_TOL: f64 = 1e-12;
const CHUNK: usize = 64;

/// Upper-triangle entries of `a`, centered and scaled to unit norm.
fn standardized_upper(m: &SquareMatrix, which: &str) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            v.push(m.get(i, j));
        }
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateMatrix(format!("off-diagonal entries of {which} have zero variance")));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

struct Prepared {
    n: usize,
    a: Vec<f64>,
    /// Full symmetric matrix of standardized B entries.
    b: Vec<f64>,
    r: f64,
}

fn prepare(a: &SquareMatrix, b: &SquareMatrix) -> Result<Prepared> {
    if a.dim() != b.dim() {
        return Err(Error::Data(format!("matrix dimensions differ: {} vs {}", a.dim(), b.dim())));
    }
    let n = a.dim();
    if n < 3 {
        return Err(Error::InsufficientData(format!("Mantel test needs n ≥ 3, got {n}")));
    }
    for (m, name) in [(a, "A"), (b, "B")] {
        if !m.is_symmetric() {
            return Err(Error::Data(format!("matrix {name} is not symmetric")));
        }
    }
    let za = standardized_upper(a, "A")?;
    let zb_upper = standardized_upper(b, "B")?;
    let mut zb = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            zb[i * n + j] = zb_upper[k];
            zb[j * n + i] = zb_upper[k];
            k += 1;
        }
    }
    let identity: Vec<usize> = (0..n).collect();
    let mut p = Prepared { n, a: za, b: zb, r: 0.0 };
    p.r = p.correlation(&identity);
    Ok(p)
}

impl Prepared {
    fn correlation(&self, perm: &[usize]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        let mut k = 0;
        for i in 0..n {
            let row = perm[i] * n;
            for j in (i + 1)..n {
                s += self.a[k] * self.b[row + perm[j]];
                k += 1;
            }
        }
        s.clamp(-1.0, 1.0)
    }

    fn at_least_observed(&self, r_star: f64) -> bool {
        r_star >= self.r - TIE_TOL * self.r.abs().max(1.0)
    }
}

/// Mantel test with `permutations` random simultaneous row/column
/// permutations of `b`. The identity is counted, so `p ≥ 1/(permutations+1)`.
pub fn mantel_test<R: Rng + ?Sized>(
    a: &SquareMatrix,
    b: &SquareMatrix,
    permutations: usize,
    rng: &mut R,
) -> Result<MantelReport> {
    let prep = prepare(a, b)?;
    let key = rng.next_u64();
    let chunks = permutations.div_ceil(CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng::substream(key, &[c as u64]);
            let mut perm: Vec<usize> = (0..prep.n).collect();
            let count = CHUNK.min(permutations - c * CHUNK);
            (0..count)
                .filter(|_| {
                    perm.shuffle(&mut stream);
                    prep.at_least_observed(prep.correlation(&perm))
                })
                .count()
        })
        .sum();
    Ok(MantelReport { r: prep.r, p: (hits + 1) as f64 / (permutations + 1) as f64, permutations })
}

/// Mantel test over all `n!` permutations (n ≤ 9).
pub fn mantel_test_exhaustive(a: &SquareMatrix, b: &SquareMatrix) -> Result<MantelReport> {
    if a.dim() > 9 {
        return Err(Error::InvalidConfig(format!("exhaustive Mantel test is limited to n ≤ 9, got {}", a.dim())));
    }
    let prep = prepare(a, b)?;
    let mut perm: Vec<usize> = (0..prep.n).collect();
    let mut hits = 0;
    let mut total = 0;
    // Heap's algorithm
    let mut c = vec![0usize; prep.n];
    let mut visit = |perm: &[usize]| {
        total += 1;
        if prep.at_least_observed(prep.correlation(perm)) {
            hits += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < prep.n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(MantelReport { r: prep.r, p: hits as f64 / total as f64, permutations: total })
}

/// Symmetric matrix with zero diagonal stored by its nonzero upper-triangle entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseSymmetric {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SparseSymmetric {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    fn key(i: usize, j: usize) -> (usize, usize) {
        if i < j {
            (i, j)
        } else {
            (j, i)
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`; diagonal additions are ignored.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index ({i}, {j}) outside {}", self.n);
        if i != j && v != 0.0 {
            *self.entries.entry(Self::key(i, j)).or_insert(0.0) += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.entries.get(&Self::key(i, j)).copied().unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Nonzero upper-triangle entries `(i, j, v)` with `i < j`, sorted.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x)).collect()
    }

    pub fn upper_sum(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Same matrix in a larger (zero-padded) dimension with node `i` renamed `map[i]`.
    pub fn relabeled(&self, map: &[usize], n: usize) -> Self {
        let mut out = Self::new(n);
        for (&(i, j), &v) in &self.entries {
            out.add(map[i], map[j], v);
        }
        out
    }

    pub fn to_dense(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.n);
        for (&(i, j), &v) in &self.entries {
            m.set(i, j, v);
            m.set(j, i, v);
        }
        m
    }
}

struct SparseMoments {
    sum: f64,
    centered_norm: f64,
}

fn sparse_moments(m: &SparseSymmetric, pairs: f64, which: &str) -> Result<SparseMoments> {
    let sum: f64 = m.entries.values().sum();
    let sq: f64 = m.entries.values().map(|v| v * v).sum();
    let ss = sq - sum * sum / pairs;
    if !(ss > 1e-12 * sq.max(1.0)) {
        return Err(Error::DegenerateMatrix(format!("off-diagonal entries of {which} have zero variance")));
    }
    Ok(SparseMoments { sum, centered_norm: ss.sqrt() })
}

/// [`mantel_test`] for sparse matrices; cost per permutation is linear in the
/// nonzeros of `a`.
pub fn mantel_test_sparse<R: Rng + ?Sized>(
    a: &SparseSymmetric,
    b: &SparseSymmetric,
    permutations: usize,
    rng: &mut R,
) -> Result<MantelReport> {
    if a.dim() != b.dim() {
        return Err(Error::Data(format!("matrix dimensions differ: {} vs {}", a.dim(), b.dim())));
    }
    let n = a.dim();
    if n < 3 {
        return Err(Error::InsufficientData(format!("Mantel test needs n ≥ 3, got {n}")));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let ma = sparse_moments(a, pairs, "A")?;
    let mb = sparse_moments(b, pairs, "B")?;
    let entries = a.upper_entries();
    let corr = |perm: Option<&[usize]>| -> f64 {
        let cross: f64 = entries
            .iter()
            .map(|&(i, j, v)| match perm {
                Some(p) => v * b.get(p[i], p[j]),
                None => v * b.get(i, j),
            })
            .sum();
        ((cross - ma.sum * mb.sum / pairs) / (ma.centered_norm * mb.centered_norm)).clamp(-1.0, 1.0)
    };
    let r = corr(None);
    if permutations == 0 {
        return Ok(MantelReport { r, p: 1.0, permutations });
    }
    let key = rng.next_u64();
    let tol = TIE_TOL * r.abs().max(1.0);
    let hits: usize = (0..permutations.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut stream = rng::substream(key, &[c as u64]);
            let mut perm: Vec<usize> = (0..n).collect();
            let count = CHUNK.min(permutations - c * CHUNK);
            (0..count)
                .filter(|_| {
                    perm.shuffle(&mut stream);
                    corr(Some(&perm)) >= r - tol
                })
                .count()
        })
        .sum();
    Ok(MantelReport { r, p: (hits + 1) as f64 / (permutations + 1) as f64, permutations })
}
