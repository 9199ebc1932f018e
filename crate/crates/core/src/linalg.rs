//! Compressed-row matrices and a banded Doolittle LU without pivoting.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicates are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        let mut keep_c = Vec::with_capacity(col_idx.len());
        let mut keep_v = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_c.push(c);
                keep_v.push(v);
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n_rows, n_cols, row_ptr, col_idx: keep_c, values: keep_v }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(out.len(), self.n_rows);
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *o = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// (lower, upper) half-bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut lo, mut up) = (0, 0);
        for r in 0..self.n_rows {
            for (c, _) in self.row(r) {
                if c < r {
                    lo = lo.max(r - c);
                } else {
                    up = up.max(c - r);
                }
            }
        }
        (lo, up)
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n_rows).map(|r| self.row_ptr[r + 1] - self.row_ptr[r]).max().unwrap_or(0)
    }

    /// Smallest (|a_ii| − Σ_{j≠i}|a_ij|)/|a_ii| over rows; negative when some row is not dominant.
    pub fn dominance_margin(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| {
                let (mut d, mut off) = (0.0f64, 0.0f64);
                for (c, v) in self.row(r) {
                    if c == r {
                        d = v.abs();
                    } else {
                        off += v.abs();
                    }
                }
                if d == 0.0 { f64::NEG_INFINITY } else { (d - off) / d }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// One `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("% {} {} {}\n", self.n_rows, self.n_cols, self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                s.push_str(&format!("{r} {c} {v:.17e}\n"));
            }
        }
        s
    }
}

/// Dot product with eight independent accumulators in a fixed order, so the
/// result is reproducible while the loop still vectorises.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[derive(Debug)]
pub struct ZeroPivot {
    pub row: usize,
    pub pivot: f64,
}

/// Banded LU factors; row i stores columns i−kl ..= i+ku contiguously.
#[derive(Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    band: Vec<f64>,
    matrix: SparseMatrix,
    factor_count: usize,
    solve_count: AtomicUsize,
    refinement_count: AtomicUsize,
    pub dominance_margin: f64,
}

impl BandLu {
    #[inline]
    fn w(&self) -> usize {
        self.kl + self.ku + 1
    }

    pub fn factorize(m: &SparseMatrix) -> std::result::Result<Self, ZeroPivot> {
        assert_eq!(m.n_rows, m.n_cols, "LU needs a square matrix");
        let n = m.n_rows;
        let (kl, ku) = m.bandwidths();
        let w = kl + ku + 1;
        let mut band = vec![0.0; n * w];
        let mut row_max = vec![0.0f64; n];
        for r in 0..n {
            for (c, v) in m.row(r) {
                band[r * w + c + kl - r] = v;
                row_max[r] = row_max[r].max(v.abs());
            }
        }
        for k in 0..n {
            let pivot = band[k * w + kl];
            if !(pivot.abs() >= 1e-14 * row_max[k]) || pivot == 0.0 {
                return Err(ZeroPivot { row: k, pivot });
            }
            let last = (k + ku).min(n - 1);
            let (head, tail) = band.split_at_mut((k + 1) * w);
            let urow = &head[k * w + kl + 1..k * w + kl + 1 + (last - k)];
            for i in k + 1..=(k + kl).min(n - 1) {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                let at = k + kl - i;
                if row[at] == 0.0 {
                    continue;
                }
                let l = row[at] / pivot;
                row[at] = l;
                for (a, u) in row[at + 1..at + 1 + urow.len()].iter_mut().zip(urow) {
                    *a -= l * u;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            band,
            matrix: m.clone(),
            factor_count: 1,
            solve_count: AtomicUsize::new(0),
            refinement_count: AtomicUsize::new(0),
            dominance_margin: m.dominance_margin(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }
    pub fn factor_count(&self) -> usize {
        self.factor_count
    }
    pub fn solve_count(&self) -> usize {
        self.solve_count.load(Ordering::Relaxed)
    }
    pub fn refinement_count(&self) -> usize {
        self.refinement_count.load(Ordering::Relaxed)
    }

    fn substitute(&self, x: &mut [f64]) {
        let (n, kl, w) = (self.n, self.kl, self.w());
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let row = &self.band[i * w + lo + kl - i..i * w + kl];
            x[i] -= dot(row, &x[lo..i]);
        }
        for i in (0..n).rev() {
            let hi = (i + self.ku).min(n - 1);
            let row = &self.band[i * w + kl + 1..i * w + kl + 1 + (hi - i)];
            x[i] = (x[i] - dot(row, &x[i + 1..=hi])) / self.band[i * w + kl];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Forward/back substitution, plus one refinement step when the relative
    /// residual exceeds 1e−11.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("rhs has length {}, system has {}", x.len(), self.n)));
        }
        self.solve_count.fetch_add(1, Ordering::Relaxed);
        let b = x.to_vec();
        self.substitute(x);
        let mut r = self.matrix.matvec(x);
        let mut rmax = 0.0f64;
        let mut bmax = 0.0f64;
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri = bi - *ri;
            rmax = rmax.max(ri.abs());
            bmax = bmax.max(bi.abs());
        }
        if rmax > 1e-11 * bmax {
            self.refinement_count.fetch_add(1, Ordering::Relaxed);
            self.substitute(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        Ok(())
    }
}
