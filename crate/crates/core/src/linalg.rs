//! Dense row-major matrices and the Cholesky routines used by the damped
//! Gauss-Newton trainers.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `Aᵀ·v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    /// `AᵀA`, always exactly symmetric.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in 0..self.rows {
            accumulate_outer_upper(&mut g, self.row(r));
        }
        g.mirror_upper();
        g
    }

    /// Copies the upper triangle onto the lower one.
    pub fn mirror_upper(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                self.data[i * n + j] = self.data[j * n + i];
            }
        }
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Adds `v·vᵀ` to the upper triangle (diagonal included) of square `m`.
pub(crate) fn accumulate_outer_upper(m: &mut Matrix, v: &[f64]) {
    let n = m.cols;
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        let row = &mut m.data[i * n + i..(i + 1) * n];
        for (mij, &vj) in row.iter_mut().zip(&v[i..]) {
            *mij += vi * vj;
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`. Only the lower
/// triangle of `a` is read. Returns `None` when `a` is not numerically
/// positive definite.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Option<Self> {
        assert_eq!(a.rows, a.cols, "cholesky needs a square matrix");
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.data[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = libm::sqrt(d);
            l[j * n + j] = djj;
            for i in j + 1..n {
                let (li, lj) = (i * n, j * n);
                let mut s = a.data[li + j];
                for k in 0..j {
                    s -= l[li + k] * l[lj + k];
                }
                l[li + j] = s / djj;
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// `tr(A⁻¹) = ‖L⁻¹‖²_F`, by forward substitution against each unit vector.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.n;
        let mut col = vec![0.0; n];
        let mut total = 0.0;
        for e in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            // Entries above `e` of L⁻¹·e_e are zero.
            for i in e..n {
                let mut s = if i == e { 1.0 } else { 0.0 };
                for k in e..i {
                    s -= self.l[i * n + k] * col[k];
                }
                col[i] = s / self.l[i * n + i];
                total += col[i] * col[i];
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd() -> Matrix {
        Matrix::from_row_major(3, 3, vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0])
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = spd();
        let ch = Cholesky::factor(&a).unwrap();
        let x = ch.solve(&[1.0, -2.0, 0.5]);
        for r in 0..3 {
            let ax: f64 = (0..3).map(|c| a[(r, c)] * x[c]).sum();
            assert!((ax - [1.0, -2.0, 0.5][r]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_trace_matches_column_solves() {
        let a = spd();
        let ch = Cholesky::factor(&a).unwrap();
        let mut tr = 0.0;
        for e in 0..3 {
            let mut b = [0.0; 3];
            b[e] = 1.0;
            tr += ch.solve(&b)[e];
        }
        assert!((tr - ch.inverse_trace()).abs() < 1e-12);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::factor(&a).is_none());
    }

    #[test]
    fn gram_is_symmetric_product() {
        let j = Matrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 2.0]);
        let g = j.gram();
        assert_eq!(g[(0, 0)], 2.0);
        assert_eq!(g[(0, 2)], 1.0);
        assert_eq!(g[(2, 0)], 1.0);
        assert_eq!(g[(2, 2)], 13.0);
        assert_eq!(j.transpose_mul_vec(&[1.0, 1.0]), vec![0.0, 2.0, 5.0]);
    }
}
