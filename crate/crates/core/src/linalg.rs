//! Dense matrices over prime fields F_p (p < 2³¹).
//!
//! Row operations accumulate without reduction while the entries provably fit
//! in a `u32`, which keeps the inner loops branch-free for the small primes the
//! modular-symbol engine uses.

use std::fmt;

use crate::arith::pow_mod;

#[derive(Clone, PartialEq, Eq)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FpMatrix mod {} ({}x{})", self.p, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

pub fn inv_fp(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a as u64, p as u64 - 2, p as u64) as u32
}

/// Reduce a signed integer into [0, p).
pub fn to_fp(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

/// How many multiply-adds of reduced values a u32 entry absorbs before it must be reduced.
fn lazy_budget(p: u32) -> u64 {
    let q = (p as u64 - 1) * (p as u64 - 1);
    if q == 0 {
        return u64::MAX;
    }
    (u32::MAX as u64 - p as u64) / q
}

impl FpMatrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        assert!((2..(1 << 31)).contains(&p));
        FpMatrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Build from signed integer rows (all of equal length).
    pub fn from_rows(p: u32, rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(p, rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, to_fp(x, p));
            }
        }
        m
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.p;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.p, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// self − a·I (square matrices).
    pub fn minus_scalar(&self, a: u32) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let neg = (self.p - a % self.p) % self.p;
        for i in 0..self.rows {
            let v = m.get(i, i);
            m.set(i, i, v + neg);
        }
        m
    }

    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.p, other.p);
        let p = self.p as u64;
        let mut out = FpMatrix::zeros(self.p, self.rows, other.cols);
        let mut acc = vec![0u64; other.cols];
        let budget = (u64::MAX / ((p - 1) * (p - 1)).max(1)).saturating_sub(1);
        for i in 0..self.rows {
            acc.iter_mut().for_each(|x| *x = 0);
            let mut used = 0u64;
            for k in 0..self.cols {
                let a = self.get(i, k) as u64;
                if a == 0 {
                    continue;
                }
                if used == budget {
                    acc.iter_mut().for_each(|x| *x %= p);
                    used = 1;
                }
                used += 1;
                for (x, &b) in acc.iter_mut().zip(other.row(k)) {
                    *x += a * b as u64;
                }
            }
            for (o, x) in out.row_mut(i).iter_mut().zip(&acc) {
                *o = (*x % p) as u32;
            }
        }
        out
    }

    pub fn mul_vec_left(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.rows);
        let p = self.p as u64;
        let mut acc = vec![0u64; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (x, &b) in acc.iter_mut().zip(self.row(i)) {
                *x = (*x + a as u64 * b as u64) % p;
            }
        }
        acc.into_iter().map(|x| x as u32).collect()
    }

    /// Stack rows of `other` under `self`.
    pub fn vstack(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        FpMatrix { p: self.p, rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Keep the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> FpMatrix {
        let mut out = FpMatrix::zeros(self.p, self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out.data[i * cols.len() + jj] = self.get(i, j);
            }
        }
        out
    }

    /// Keep the first `n` columns.
    pub fn truncate_columns(&self, n: usize) -> FpMatrix {
        let cols: Vec<usize> = (0..n).collect();
        self.select_columns(&cols)
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    /// Zero rows are dropped, so afterwards `nrows() == rank`.
    pub fn rref(&mut self) -> Vec<usize> {
        let p = self.p;
        let p64 = p as u64;
        let budget = lazy_budget(p);
        let cols = self.cols;
        let mut used = vec![0u64; self.rows];
        let mut pivots = Vec::new();
        let mut rank = 0usize;
        for c in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(r) = (rank..self.rows).find(|&r| !self.data[r * cols + c].is_multiple_of(p)) else {
                continue;
            };
            if r != rank {
                for j in 0..cols {
                    self.data.swap(r * cols + j, rank * cols + j);
                }
                used.swap(r, rank);
            }
            // normalize the pivot row
            let inv = inv_fp(self.data[rank * cols + c] % p, p) as u64;
            for x in &mut self.data[rank * cols + c..(rank + 1) * cols] {
                *x = ((*x % p) as u64 * inv % p64) as u32;
            }
            used[rank] = 0;
            let (before, rest) = self.data.split_at_mut(rank * cols);
            let (piv, after) = rest.split_at_mut(cols);
            let piv = &piv[c..];
            let eliminate = |row: &mut [u32], u: &mut u64| {
                let f = row[c] % p;
                if f == 0 {
                    row[c] = 0;
                    return;
                }
                if budget == 0 {
                    let g = (p - f) as u64;
                    for (x, &y) in row[c..].iter_mut().zip(piv) {
                        *x = ((*x as u64 + g * y as u64) % p64) as u32;
                    }
                    return;
                }
                if *u >= budget {
                    for x in row[c..].iter_mut() {
                        *x %= p;
                    }
                    *u = 0;
                }
                let g = p - f;
                for (x, &y) in row[c..].iter_mut().zip(piv) {
                    *x += g * y;
                }
                *u += 1;
                row[c] = 0;
            };
            for (i, row) in before.chunks_exact_mut(cols).enumerate() {
                eliminate(row, &mut used[i]);
            }
            for (i, row) in after.chunks_exact_mut(cols).enumerate() {
                eliminate(row, &mut used[rank + 1 + i]);
            }
            pivots.push(c);
            rank += 1;
        }
        for x in &mut self.data[..rank * cols] {
            *x %= p;
        }
        self.data.truncate(rank * cols);
        self.rows = rank;
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis (as rows) of {v : M·v = 0}, in free-variable form.
    pub fn kernel(&self) -> FpMatrix {
        let mut r = self.clone();
        let pivots = r.rref();
        let p = self.p;
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut out = FpMatrix::zeros(p, free.len(), self.cols);
        for (k, &f) in free.iter().enumerate() {
            out.data[k * self.cols + f] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                let v = r.get(i, f);
                if v != 0 {
                    out.data[k * self.cols + pc] = p - v;
                }
            }
        }
        out
    }

    /// Basis (as rows) of {v : v·M = 0}.
    pub fn left_kernel(&self) -> FpMatrix {
        self.transpose().kernel()
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }

    /// Inverse of a square matrix, if it exists.
    pub fn inverse(&self) -> Option<FpMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = FpMatrix::zeros(self.p, n, 2 * n);
        for i in 0..n {
            aug.data[i * 2 * n..i * 2 * n + n].copy_from_slice(self.row(i));
            aug.data[i * 2 * n + n + i] = 1;
        }
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(aug.select_columns(&cols))
    }

    /// Rows spanning the left generalized eigenspace {v : v·(M − a)^k = 0 for some k}.
    /// The result is in reduced row echelon form.
    pub fn generalized_left_eigenspace(&self, a: u32) -> FpMatrix {
        let n = self.rows;
        let shifted = self.minus_scalar(a);
        let mut k = shifted.left_kernel();
        k.rref();
        loop {
            if k.rows == 0 || k.rows == n {
                return k;
            }
            // z·(M − a) ∈ rowspace(K)  ⟺  (z, c) in the left kernel of [M − a; K]
            let stacked = shifted.vstack(&k);
            let mut next = stacked.left_kernel().truncate_columns(n);
            next.rref();
            if next.rows == k.rows {
                return k;
            }
            k = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rref_and_kernel() {
        let m = FpMatrix::from_rows(5, &[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.nrows(), 1);
        let v = k.row(0).to_vec();
        for i in 0..3 {
            let s: u64 = (0..3).map(|j| m.get(i, j) as u64 * v[j] as u64).sum();
            assert_eq!(s % 5, 0);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = FpMatrix::from_rows(7, &[vec![2, 1], vec![1, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), FpMatrix::identity(7, 2));
        assert!(FpMatrix::from_rows(7, &[vec![1, 2], vec![2, 4]]).inverse().is_none());
    }

    #[test]
    fn generalized_eigenspace_of_jordan_block() {
        // [[2,1,0],[0,2,0],[0,0,3]] over F_5: eigenvalue 2 has a 2-dim generalized space
        let m = FpMatrix::from_rows(5, &[vec![2, 1, 0], vec![0, 2, 0], vec![0, 0, 3]]);
        assert_eq!(m.minus_scalar(2).left_kernel().nrows(), 1);
        assert_eq!(m.generalized_left_eigenspace(2).nrows(), 2);
        assert_eq!(m.generalized_left_eigenspace(3).nrows(), 1);
        assert_eq!(m.generalized_left_eigenspace(4).nrows(), 0);
    }

    #[test]
    fn large_prime_path() {
        let p = 2_147_483_647u32;
        let m = FpMatrix::from_rows(p, &[vec![3, 5], vec![7, 11]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), FpMatrix::identity(p, 2));
    }

    fn mat(p: u32, n: usize) -> impl Strategy<Value = FpMatrix> {
        proptest::collection::vec(0..p as i64, n * n).prop_map(move |v| {
            let rows: Vec<Vec<i64>> = v.chunks(n).map(|c| c.to_vec()).collect();
            FpMatrix::from_rows(p, &rows)
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in mat(7, 6)) {
            prop_assert_eq!(m.rank() + m.kernel().nrows(), 6);
            let k = m.kernel();
            prop_assert!(m.mul(&k.transpose()).is_zero());
        }

        #[test]
        fn generalized_dims_sum(m in mat(5, 5)) {
            let total: usize = (0..5).map(|a| m.generalized_left_eigenspace(a).nrows()).sum();
            // sum over F_5-rational eigenvalues is at most the dimension
            prop_assert!(total <= 5);
            for a in 0..5u32 {
                let g = m.generalized_left_eigenspace(a);
                // stable under right multiplication by M
                let img = g.mul(&m);
                prop_assert_eq!(g.vstack(&img).rank(), g.nrows());
            }
        }
    }
}
