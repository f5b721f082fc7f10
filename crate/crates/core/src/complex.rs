//! Dense complex matrices, column-major.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{shape, Result};
use crate::exec;

pub type C64 = Complex64;

pub(crate) const CZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const CONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix in column-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![CZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = CONE;
        }
        m
    }

    /// `rows x cols` identity-like matrix with ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = CONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Wraps column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape(format!("expected {} entries, got {}", rows * cols, data.len()));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Two distinct mutable columns.
    pub fn col_pair_mut(&mut self, a: usize, b: usize) -> (&mut [C64], &mut [C64]) {
        assert_ne!(a, b);
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            let (x, y) = (&mut hi[..r], &mut lo[b * r..(b + 1) * r]);
            (x, y)
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.conj()).collect() }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.shape() != other.shape() {
            return shape(format!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return shape(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, other.rows, other.cols));
        }
        let (m, n) = (self.rows, self.cols);
        let mut out = CMatrix::zeros(m, other.cols);
        if m == 0 {
            return Ok(out);
        }
        let kernel = |j: usize, dst: &mut [C64]| {
            for k in 0..n {
                let b = other[(k, j)];
                if b == CZERO {
                    continue;
                }
                for (d, a) in dst.iter_mut().zip(self.col(k)) {
                    *d += a * b;
                }
            }
        };
        if exec::parallel_for(4 * m * n * other.cols) {
            out.data.par_chunks_mut(m).enumerate().for_each(|(j, c)| kernel(j, c));
        } else {
            out.data.chunks_mut(m).enumerate().for_each(|(j, c)| kernel(j, c));
        }
        Ok(out)
    }

    /// `self^H * other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.rows != other.rows {
            return shape("adjoint_mul needs equal row counts");
        }
        Ok(CMatrix::from_fn(self.cols, other.cols, |i, j| dotc(self.col(i), other.col(j))))
    }

    /// Selected columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> CMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        CMatrix { rows: self.rows, cols: idx.len(), data }
    }

    pub fn col_range(&self, c0: usize, c1: usize) -> CMatrix {
        CMatrix { rows: self.rows, cols: c1 - c0, data: self.data[c0 * self.rows..c1 * self.rows].to_vec() }
    }

    pub fn hcat(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.rows != other.rows {
            return shape("hcat needs equal row counts");
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(CMatrix { rows: self.rows, cols: self.cols + other.cols, data })
    }

    pub fn push_col(&mut self, col: &[C64]) {
        assert_eq!(col.len(), self.rows);
        self.data.extend_from_slice(col);
        self.cols += 1;
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.rows + i]
    }
}

/// `sum conj(a_i) b_i`.
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
