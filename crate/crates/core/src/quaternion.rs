//! Quaternion scalars and dense quaternion matrices.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use rayon::prelude::*;

use crate::error::{shape, Result};
use crate::exec;

/// A quaternion `w + x i + y j + z k`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Quaternion::new(w, 0.0, 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Multiplicative inverse; infinite components for zero.
    pub fn inv(self) -> Self {
        let n = self.norm_sqr();
        let c = self.conj();
        Quaternion::new(c.w / n, c.x / n, c.y / n, c.z / n)
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        Quaternion::new(self.w / s, self.x / s, self.y / s, self.z / s)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:+}i {:+}j {:+}k", self.w, self.x, self.y, self.z)
    }
}

/// Dense quaternion matrix stored as four row-major real planes.
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        QMatrix { rows, cols, w: vec![0.0; n], x: vec![0.0; n], y: vec![0.0; n], z: vec![0.0; n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m.w[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from four row-major planes.
    pub fn from_planes(rows: usize, cols: usize, w: Vec<f64>, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let n = rows * cols;
        if w.len() != n || x.len() != n || y.len() != n || z.len() != n {
            return shape(format!("planes must hold {rows}x{cols} = {n} values"));
        }
        Ok(QMatrix { rows, cols, w, x, y, z })
    }

    /// Real matrix from a row-major slice.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return shape(format!("expected {} values, got {}", rows * cols, data.len()));
        }
        let mut m = QMatrix::zeros(rows, cols);
        m.w.copy_from_slice(data);
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = QMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Square diagonal matrix with real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = QMatrix::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.w[i * n + i] = v;
        }
        m
    }

    /// Square diagonal matrix with quaternion entries.
    pub fn diag(d: &[Quaternion]) -> Self {
        let n = d.len();
        let mut m = QMatrix::zeros(n, n);
        for (i, &q) in d.iter().enumerate() {
            m.set(i, i, q);
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

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Quaternion {
        let k = i * self.cols + j;
        Quaternion::new(self.w[k], self.x[k], self.y[k], self.z[k])
    }

    pub fn set(&mut self, i: usize, j: usize, q: Quaternion) {
        let k = i * self.cols + j;
        self.w[k] = q.w;
        self.x[k] = q.x;
        self.y[k] = q.y;
        self.z[k] = q.z;
    }

    /// Planes in the order w, x, y, z.
    pub fn planes(&self) -> [&[f64]; 4] {
        [&self.w, &self.x, &self.y, &self.z]
    }

    pub fn planes_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w, &mut self.x, &mut self.y, &mut self.z]
    }

    pub fn into_planes(self) -> [Vec<f64>; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> QMatrix {
        let (m, n) = (self.rows, self.cols);
        let mut out = QMatrix::zeros(n, m);
        for (p, (src, dst)) in self.planes().into_iter().zip(out.planes_mut()).enumerate() {
            let sign = if p == 0 { 1.0 } else { -1.0 };
            for i in 0..m {
                for j in 0..n {
                    dst[j * m + i] = sign * src[i * n + j];
                }
            }
        }
        out
    }

    /// Entrywise quaternion conjugate (no transpose).
    pub fn conj(&self) -> QMatrix {
        let mut out = self.clone();
        for p in &mut out.planes_mut()[1..] {
            p.iter_mut().for_each(|v| *v = -*v);
        }
        out
    }

    pub fn fro_norm_sqr(&self) -> f64 {
        self.planes().iter().map(|p| p.iter().map(|v| v * v).sum::<f64>()).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.planes().iter().flat_map(|p| p.iter()).fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> QMatrix {
        let mut out = self.clone();
        for p in out.planes_mut() {
            p.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    fn zip_with(&self, other: &QMatrix, f: impl Fn(f64, f64) -> f64) -> Result<QMatrix> {
        if self.shape() != other.shape() {
            return shape(format!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        let mut out = self.clone();
        for (dst, src) in out.planes_mut().into_iter().zip(other.planes()) {
            dst.iter_mut().zip(src).for_each(|(a, &b)| *a = f(*a, b));
        }
        Ok(out)
    }

    pub fn add(&self, other: &QMatrix) -> Result<QMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &QMatrix) -> Result<QMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &QMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return shape(format!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        for (dst, src) in self.planes_mut().into_iter().zip(other.planes()) {
            dst.iter_mut().zip(src).for_each(|(a, &b)| *a += b);
        }
        Ok(())
    }

    /// `alpha * self + beta * other`.
    pub fn lincomb(&self, alpha: f64, other: &QMatrix, beta: f64) -> Result<QMatrix> {
        self.zip_with(other, |a, b| alpha * a + beta * b)
    }

    pub fn matmul(&self, other: &QMatrix) -> Result<QMatrix> {
        let mut out = QMatrix::zeros(self.rows, other.cols);
        out.mul_acc(self, other)?;
        Ok(out)
    }

    /// Accumulates `self += a * b`.
    ///
    /// Each output entry receives the terms of the inner sum in increasing
    /// index order, so splitting `a`'s columns (and `b`'s rows) into
    /// consecutive blocks and accumulating block by block reproduces the
    /// monolithic product exactly.
    pub fn mul_acc(&mut self, a: &QMatrix, b: &QMatrix) -> Result<()> {
        if a.cols != b.rows {
            return shape(format!("cannot multiply {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols));
        }
        if self.rows != a.rows || self.cols != b.cols {
            return shape(format!(
                "accumulator is {}x{}, product is {}x{}",
                self.rows, self.cols, a.rows, b.cols
            ));
        }
        let (n, p) = (a.cols, b.cols);
        if p == 0 || self.rows == 0 {
            return Ok(());
        }
        let row_kernel = |i: usize, cw: &mut [f64], cx: &mut [f64], cy: &mut [f64], cz: &mut [f64]| {
            for k in 0..n {
                let ia = i * n + k;
                let (aw, ax, ay, az) = (a.w[ia], a.x[ia], a.y[ia], a.z[ia]);
                let rb = k * p..(k + 1) * p;
                let (bw, bx, by, bz) = (&b.w[rb.clone()], &b.x[rb.clone()], &b.y[rb.clone()], &b.z[rb]);
                for j in 0..p {
                    cw[j] += aw * bw[j] - ax * bx[j] - ay * by[j] - az * bz[j];
                    cx[j] += aw * bx[j] + ax * bw[j] + ay * bz[j] - az * by[j];
                    cy[j] += aw * by[j] - ax * bz[j] + ay * bw[j] + az * bx[j];
                    cz[j] += aw * bz[j] + ax * by[j] - ay * bx[j] + az * bw[j];
                }
            }
        };
        let [cw, cx, cy, cz] = self.planes_mut();
        if exec::parallel_for(16 * a.rows * n * p) {
            cw.par_chunks_mut(p)
                .zip(cx.par_chunks_mut(p))
                .zip(cy.par_chunks_mut(p))
                .zip(cz.par_chunks_mut(p))
                .enumerate()
                .for_each(|(i, (((w, x), y), z))| row_kernel(i, w, x, y, z));
        } else {
            for (i, (((w, x), y), z)) in
                cw.chunks_mut(p).zip(cx.chunks_mut(p)).zip(cy.chunks_mut(p)).zip(cz.chunks_mut(p)).enumerate()
            {
                row_kernel(i, w, x, y, z);
            }
        }
        Ok(())
    }

    /// Rows `r0..r1` as a new matrix.
    pub fn row_block(&self, r0: usize, r1: usize) -> QMatrix {
        assert!(r0 <= r1 && r1 <= self.rows, "row range out of bounds");
        let c = self.cols;
        let s = r0 * c..r1 * c;
        QMatrix {
            rows: r1 - r0,
            cols: c,
            w: self.w[s.clone()].to_vec(),
            x: self.x[s.clone()].to_vec(),
            y: self.y[s.clone()].to_vec(),
            z: self.z[s].to_vec(),
        }
    }

    /// Columns `c0..c1` as a new matrix.
    pub fn col_block(&self, c0: usize, c1: usize) -> QMatrix {
        assert!(c0 <= c1 && c1 <= self.cols, "column range out of bounds");
        let w = c1 - c0;
        let mut out = QMatrix::zeros(self.rows, w);
        for (dst, src) in out.planes_mut().into_iter().zip(self.planes()) {
            for i in 0..self.rows {
                dst[i * w..(i + 1) * w].copy_from_slice(&src[i * self.cols + c0..i * self.cols + c1]);
            }
        }
        out
    }

    /// Overwrites rows starting at `r0` with `block`.
    pub fn set_row_block(&mut self, r0: usize, block: &QMatrix) -> Result<()> {
        if block.cols != self.cols || r0 + block.rows > self.rows {
            return shape("row block does not fit");
        }
        let c = self.cols;
        for (dst, src) in self.planes_mut().into_iter().zip(block.planes()) {
            dst[r0 * c..(r0 + block.rows) * c].copy_from_slice(src);
        }
        Ok(())
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.rows != other.rows {
            return shape("hcat needs equal row counts");
        }
        let n = self.cols + other.cols;
        let mut out = QMatrix::zeros(self.rows, n);
        for ((dst, a), b) in out.planes_mut().into_iter().zip(self.planes()).zip(other.planes()) {
            for i in 0..self.rows {
                dst[i * n..i * n + self.cols].copy_from_slice(&a[i * self.cols..(i + 1) * self.cols]);
                dst[i * n + self.cols..(i + 1) * n].copy_from_slice(&b[i * other.cols..(i + 1) * other.cols]);
            }
        }
        Ok(out)
    }

    /// Multiplies column `j` by the real `d[j]`, i.e. `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> QMatrix {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        let c = self.cols;
        for p in out.planes_mut() {
            for row in p.chunks_mut(c.max(1)) {
                row.iter_mut().zip(d).for_each(|(v, s)| *v *= s);
            }
        }
        out
    }

    /// Transposes real planes without conjugation.
    pub fn transpose(&self) -> QMatrix {
        self.adjoint().conj()
    }

    /// Largest entrywise plane difference.
    pub fn max_abs_diff(&self, other: &QMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.planes()
            .iter()
            .zip(other.planes())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max)
    }
}

/// `A * B`.
pub fn qmat_mul(a: &QMatrix, b: &QMatrix) -> Result<QMatrix> {
    a.matmul(b)
}

/// `A*`.
pub fn qmat_adjoint(a: &QMatrix) -> QMatrix {
    a.adjoint()
}

/// Frobenius norm.
pub fn qmat_fro_norm(a: &QMatrix) -> f64 {
    a.fro_norm()
}
