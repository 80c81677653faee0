//! Compressed-sparse-row complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![ONE; n],
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v));
        Self::from_triplets(diag.len(), diag.len(), triplets)
    }

    /// Sums duplicate entries; exact zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        Self::from_rows(nrows, ncols, rows)
    }

    fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != ZERO {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn from_dense(m: &DMatrix<Complex64>, drop_below: f64) -> Self {
        let trip = (0..m.nrows()).flat_map(|r| {
            (0..m.ncols()).filter_map(move |c| {
                let v = m[(r, c)];
                (v.norm() > drop_below).then_some((r, c, v))
            })
        });
        Self::from_triplets(m.nrows(), m.ncols(), trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.data[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.data[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out.prune_exact_zeros()
    }

    fn prune_exact_zeros(self) -> Self {
        if self.data.iter().all(|v| *v != ZERO) {
            return self;
        }
        let (nrows, ncols) = (self.nrows, self.ncols);
        let rows = (0..nrows).map(|r| self.row(r).collect()).collect();
        Self::from_rows(nrows, ncols, rows)
    }

    /// Drops entries with modulus at or below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let rows = (0..self.nrows)
            .map(|r| self.row(r).filter(|(_, v)| v.norm() > tol).collect())
            .collect();
        Self::from_rows(self.nrows, self.ncols, rows)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: Complex64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|r| self.row(r).chain(other.row(r).map(|(c, v)| (c, alpha * v))).collect())
            .collect();
        Self::from_rows(self.nrows, self.ncols, rows)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -ONE)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut acc = vec![ZERO; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols = Vec::new();
        let mut rows = Vec::with_capacity(self.nrows);
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            let mut row = Vec::with_capacity(cols.len());
            for &c in &cols {
                row.push((c, acc[c]));
                acc[c] = ZERO;
                touched[c] = false;
            }
            cols.clear();
            rows.push(row);
        }
        Self::from_rows(self.nrows, other.ncols, rows)
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.iter().map(|(r, c, v)| (c, r, v.conj()));
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||self - other||_F` without materialising the difference.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).frobenius_norm()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// `||M + M^dagger||_F`.
    pub fn anti_hermiticity_defect(&self) -> f64 {
        self.add(&self.adjoint()).frobenius_norm()
    }

    /// `||M - M^dagger||_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// `||M^dagger M - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).distance(&Self::identity(self.ncols))
    }

    /// Connected components of the undirected graph with an edge for every
    /// stored off-diagonal entry. Each component is sorted ascending; components
    /// are ordered by their smallest index.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        assert!(self.is_square());
        let n = self.nrows;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (r, c, _) in self.iter() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Dense sub-block on the given row/column index set.
    pub fn dense_block(&self, idx: &[usize]) -> DMatrix<Complex64> {
        let pos: std::collections::HashMap<usize, usize> =
            idx.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (k, &r) in idx.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(&kc) = pos.get(&c) {
                    m[(k, kc)] = v;
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(1.0)), (1, 0, c(-1.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
        assert_eq!(m.get(1, 0), c(0.0));
    }

    #[test]
    fn product_matches_dense() {
        let a = SparseMatrix::from_triplets(3, 3, [(0, 1, c(2.0)), (1, 2, c(-1.0)), (2, 0, Complex64::new(0.0, 1.0))]);
        let b = SparseMatrix::from_triplets(3, 3, [(1, 1, c(3.0)), (2, 0, c(1.0)), (0, 2, c(4.0))]);
        let dense = a.to_dense() * b.to_dense();
        assert!((a.mul(&b).to_dense() - dense).norm() < 1e-15);
    }

    #[test]
    fn components() {
        let m = SparseMatrix::from_triplets(5, 5, [(0, 3, c(1.0)), (3, 4, c(1.0))]);
        assert_eq!(m.connected_components(), vec![vec![0, 3, 4], vec![1], vec![2]]);
    }
}
