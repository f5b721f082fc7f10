//! Householder QR for complex matrices.

use rayon::prelude::*;

use crate::complex::{dotc, norm2, CMatrix, C64, CONE, CZERO};
use crate::exec;

/// Unit vector `u` with `(I - 2uu^H) x = beta e_1`, or `None` when `x = 0`.
pub(crate) fn reflector(x: &[C64]) -> Option<(Vec<C64>, C64)> {
    let alpha = norm2(x);
    if alpha == 0.0 {
        return None;
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 { CONE } else { x0 / x0.norm() };
    let mut u = x.to_vec();
    u[0] += phase * alpha;
    let un = norm2(&u);
    u.iter_mut().for_each(|v| *v /= un);
    Some((u, -phase * alpha))
}

/// `y <- (I - 2uu^H) y`.
#[inline]
pub(crate) fn reflect(u: &[C64], y: &mut [C64]) {
    let d = dotc(u, y) * 2.0;
    for (yi, ui) in y.iter_mut().zip(u) {
        *yi -= d * ui;
    }
}

/// Applies the reflector to rows `off..` of columns `c0..` of `a`.
pub(crate) fn reflect_cols(u: &[C64], a: &mut CMatrix, off: usize, c0: usize) {
    let rows = a.rows();
    if rows == 0 || c0 >= a.cols() {
        return;
    }
    let work = u.len() * (a.cols() - c0) * 8;
    let data = &mut a.as_mut_slice()[c0 * rows..];
    if exec::parallel_for(work) {
        data.par_chunks_mut(rows).for_each(|c| reflect(u, &mut c[off..]));
    } else {
        data.chunks_mut(rows).for_each(|c| reflect(u, &mut c[off..]));
    }
}

/// Packed Householder QR of a `p x q` matrix with `p >= q`.
pub(crate) struct QrFactor {
    a: CMatrix,
    us: Vec<Option<Vec<C64>>>,
}

impl QrFactor {
    pub fn new(m: &CMatrix) -> Self {
        let (p, q) = m.shape();
        assert!(p >= q, "QR needs at least as many rows as columns");
        let mut a = m.clone();
        let mut us = Vec::with_capacity(q);
        for k in 0..q {
            match reflector(&a.col(k)[k..]) {
                Some((u, beta)) => {
                    reflect_cols(&u, &mut a, k, k + 1);
                    let col = a.col_mut(k);
                    col[k] = beta;
                    col[k + 1..].iter_mut().for_each(|v| *v = CZERO);
                    us.push(Some(u));
                }
                None => us.push(None),
            }
        }
        QrFactor { a, us }
    }

    /// Upper triangle before the phase normalization.
    pub fn r_raw(&self) -> CMatrix {
        let q = self.a.cols();
        CMatrix::from_fn(q, q, |i, j| if i <= j { self.a[(i, j)] } else { CZERO })
    }

    /// `b <- Q_raw^H b`.
    pub fn apply_qh(&self, b: &mut CMatrix) {
        for (k, u) in self.us.iter().enumerate() {
            if let Some(u) = u {
                reflect_cols(u, b, k, 0);
            }
        }
    }

    /// First `q` columns of `Q_raw`.
    pub fn q_raw(&self) -> CMatrix {
        let (p, q) = self.a.shape();
        let mut out = CMatrix::eye(p, q);
        for (k, u) in self.us.iter().enumerate().rev() {
            if let Some(u) = u {
                reflect_cols(u, &mut out, k, k);
            }
        }
        out
    }
}

/// Thin QR with real nonnegative diagonal of `R`.
pub(crate) fn householder_qr(m: &CMatrix) -> (CMatrix, CMatrix) {
    let f = QrFactor::new(m);
    let mut q = f.q_raw();
    let mut r = f.r_raw();
    for k in 0..r.rows() {
        let d = r[(k, k)];
        let n = d.norm();
        if n == 0.0 {
            continue;
        }
        let ph = d / n;
        for j in k..r.cols() {
            r[(k, j)] *= ph.conj();
        }
        r[(k, k)] = C64::new(n, 0.0);
        q.col_mut(k).iter_mut().for_each(|v| *v *= ph);
    }
    (q, r)
}
