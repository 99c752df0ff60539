//! Compressed-row storage for the lattice operators.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{ComplexField, DMatrix};

use crate::Complex64;

/// Scalars the operators are built over: `f64` and `Complex64`.
pub trait Entry: ComplexField<RealField = f64> + Copy {
    /// Fixes the free phase of a normalized eigenvector: positive sum for
    /// real vectors, otherwise the sum (or the largest entry if the sum
    /// nearly cancels) is rotated onto the positive real axis.
    fn fix_phase(v: &mut [Self]);
}

impl Entry for f64 {
    fn fix_phase(v: &mut [f64]) {
        let s: f64 = v.iter().sum();
        let flip = if s.abs() > 1e-12 {
            s < 0.0
        } else {
            let big = v.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            big < 0.0
        };
        if flip {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

impl Entry for Complex64 {
    fn fix_phase(v: &mut [Complex64]) {
        let s: Complex64 = v.iter().sum();
        let anchor = if s.norm() > 1e-12 {
            s
        } else {
            v.iter().cloned().fold(Complex64::new(0.0, 0.0), |a, x| if x.norm() > a.norm() { x } else { a })
        };
        if anchor.norm() > 0.0 {
            let rot = anchor.conj() / anchor.norm();
            v.iter_mut().for_each(|x| *x *= rot);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Entry> CsrMatrix<T> {
    /// Builds an `n × n` matrix, summing duplicate coordinates and dropping
    /// entries that cancel to exactly zero.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}×{n}");
            if let (Some(&li), Some(&lj)) = (rows.last(), cols.last()) {
                if li == i && lj == j {
                    let last = vals.last_mut().unwrap();
                    *last += v;
                    continue;
                }
            }
            rows.push(i);
            cols.push(j);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((i, j), v) in rows.into_iter().zip(cols).zip(vals) {
            if v == T::zero() {
                continue;
            }
            row_ptr[i + 1] += 1;
            keep_cols.push(j);
            keep_vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols: keep_cols, vals: keep_vals }
    }

    pub fn from_dense(a: &DMatrix<T>) -> Self {
        let n = a.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != T::zero() {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, T::one())).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().cloned().zip(self.vals[r].iter().cloned())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n).map(|i| self.row_ptr[i + 1] - self.row_ptr[i]).max().unwrap_or(0)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut a = DMatrix::<T>::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            a[(i, j)] = v;
        }
        a
    }

    /// `max |a_ij - conj(a_ji)|`; zero for exactly Hermitian storage.
    pub fn hermitian_defect(&self) -> f64 {
        self.iter().map(|(i, j, v)| (v - self.get(j, i).conjugate()).modulus()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.modulus()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn map<U: Entry, F: Fn(T) -> U>(&self, f: F) -> CsrMatrix<U> {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl CsrMatrix<Complex64> {
    /// Real part, if every imaginary part vanishes exactly.
    pub fn to_real(&self) -> Option<CsrMatrix<f64>> {
        if self.vals.iter().any(|v| v.im != 0.0) {
            return None;
        }
        Some(self.map(|v| v.re))
    }
}

impl CsrMatrix<f64> {
    pub fn to_complex(&self) -> CsrMatrix<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

/// Where an operator lives.
#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    /// Finite-difference grid on the torus `Λ_n` with `m` points per cell side.
    Grid { dim: usize, n: usize, m: usize },
    /// One unit cell with `m` points per side.
    Cell { dim: usize, m: usize },
    /// Lattice sites `Z^d / (2n+1) Z^d`.
    Sites { dim: usize, n: usize },
    /// No geometric interpretation (test matrices).
    Abstract,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Periodic,
    QuasiPeriodic { theta: Vec<f64> },
}

/// A symmetric (real) or Hermitian (complex) sparse operator plus metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeOperator<T> {
    pub matrix: CsrMatrix<T>,
    pub layout: Layout,
    pub boundary: Boundary,
    /// Energy subtracted from the diagonal at assembly time.
    pub shift: f64,
}

impl<T: Entry> LatticeOperator<T> {
    pub fn abstract_matrix(matrix: CsrMatrix<T>) -> Self {
        LatticeOperator { matrix, layout: Layout::Abstract, boundary: Boundary::Periodic, shift: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Plain-text `row col re im` lines; a debugging aid, not a stable format.
    pub fn write_coordinates<W: fmt::Write>(&self, out: &mut W) -> fmt::Result {
        writeln!(out, "% {} x {} nnz {}", self.dim(), self.dim(), self.matrix.nnz())?;
        for (i, j, v) in self.matrix.iter() {
            writeln!(out, "{i} {j} {:e} {:e}", v.real(), v.imaginary())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    #[test]
    fn triplets_sum_and_cancel() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 2, 1.0), (1, 2, -1.0), (2, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.nnz(), 2);
        let mut y = [0.0; 3];
        a.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, [3.0, 0.0, 4.0]);
    }

    #[test]
    fn coordinate_dump() {
        let op = LatticeOperator::abstract_matrix(CsrMatrix::<f64>::identity(2));
        let mut s = String::new();
        op.write_coordinates(&mut s).unwrap();
        assert!(s.starts_with("% 2 x 2 nnz 2\n0 0 1e0 0e0\n"));
    }
}
