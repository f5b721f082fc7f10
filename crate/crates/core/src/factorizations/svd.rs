//! Complex SVD: Householder bidiagonalization followed by implicit-shift
//! QR sweeps on the real bidiagonal.

use crate::complex::{CMatrix, C64, CZERO};

use super::qr::{reflect_cols, reflector, QrFactor};

pub(crate) struct SvdOut {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Thin SVD `m = u diag(s) v^H` with `s` nonincreasing.
pub(crate) fn golub_kahan_svd(m: &CMatrix, vectors: bool) -> SvdOut {
    if m.rows() < m.cols() {
        let t = golub_kahan_svd(&m.adjoint(), vectors);
        return SvdOut { u: t.v, s: t.s, v: t.u };
    }
    let (p, q) = m.shape();
    if q == 0 {
        return SvdOut { u: CMatrix::zeros(p, 0), s: vec![], v: CMatrix::zeros(0, 0) };
    }
    if p > q {
        // QR first: the left vectors then span range(Q) to working accuracy
        // even when the columns are strongly graded.
        let f = QrFactor::new(m);
        let t = golub_kahan_svd(&f.r_raw(), vectors);
        let u = if vectors { f.q_raw().matmul(&t.u).expect("conforming") } else { t.u };
        return SvdOut { u, s: t.s, v: t.v };
    }

    // Bidiagonalize: a = P_0..P_{q-1} B Q_{q-2}..Q_0.
    let mut a = m.clone();
    let mut left: Vec<Option<Vec<C64>>> = Vec::with_capacity(q);
    let mut right: Vec<Option<Vec<C64>>> = Vec::with_capacity(q);
    for k in 0..q {
        match reflector(&a.col(k)[k..]) {
            Some((u, beta)) => {
                reflect_cols(&u, &mut a, k, k + 1);
                let col = a.col_mut(k);
                col[k] = beta;
                col[k + 1..].iter_mut().for_each(|v| *v = CZERO);
                left.push(Some(u));
            }
            None => left.push(None),
        }
        if k + 2 < q {
            let row: Vec<C64> = (k + 1..q).map(|j| a[(k, j)].conj()).collect();
            match reflector(&row) {
                Some((w, beta)) => {
                    // a[k.., k+1..] <- a[k.., k+1..] (I - 2ww^H)
                    let mut t = vec![CZERO; p - k];
                    for (jj, wj) in w.iter().enumerate() {
                        let col = &a.col(k + 1 + jj)[k..];
                        for (ti, ci) in t.iter_mut().zip(col) {
                            *ti += ci * wj;
                        }
                    }
                    for (jj, wj) in w.iter().enumerate() {
                        let f = wj.conj() * 2.0;
                        let col = &mut a.col_mut(k + 1 + jj)[k..];
                        for (ci, ti) in col.iter_mut().zip(&t) {
                            *ci -= ti * f;
                        }
                    }
                    a[(k, k + 1)] = beta.conj();
                    for j in k + 2..q {
                        a[(k, j)] = CZERO;
                    }
                    right.push(Some(w));
                }
                None => right.push(None),
            }
        }
    }

    let mut dc: Vec<C64> = (0..q).map(|k| a[(k, k)]).collect();
    let mut ec: Vec<C64> = (0..q - 1).map(|k| a[(k, k + 1)]).collect();

    let (mut u, mut v) = if vectors {
        let mut u = CMatrix::eye(p, q);
        for (k, r) in left.iter().enumerate().rev() {
            if let Some(r) = r {
                reflect_cols(r, &mut u, k, k);
            }
        }
        let mut v = CMatrix::identity(q);
        for (k, r) in right.iter().enumerate().rev() {
            if let Some(r) = r {
                reflect_cols(r, &mut v, k + 1, k + 1);
            }
        }
        (u, v)
    } else {
        (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0))
    };

    // Rotate phases so the bidiagonal is real and nonnegative.
    for k in 0..q {
        let n = dc[k].norm();
        if n > 0.0 {
            let ph = dc[k] / n;
            dc[k] = C64::new(n, 0.0);
            if k + 1 < q {
                ec[k] *= ph.conj();
            }
            if vectors {
                u.col_mut(k).iter_mut().for_each(|x| *x *= ph);
            }
        }
        if k + 1 < q {
            let n = ec[k].norm();
            if n > 0.0 {
                let ph = ec[k] / n;
                ec[k] = C64::new(n, 0.0);
                dc[k + 1] *= ph.conj();
                if vectors {
                    v.col_mut(k + 1).iter_mut().for_each(|x| *x *= ph.conj());
                }
            }
        }
    }
    let mut d: Vec<f64> = dc.iter().map(|c| c.re).collect();
    let mut e: Vec<f64> = ec.iter().map(|c| c.re).collect();

    let mut acc = Accum { u: vectors.then_some(&mut u), v: vectors.then_some(&mut v) };
    bidiagonal_qr(&mut d, &mut e, &mut acc);

    // Sign fix and descending sort.
    for k in 0..q {
        if d[k] < 0.0 {
            d[k] = -d[k];
            if vectors {
                v.col_mut(k).iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let s: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    if vectors {
        SvdOut { u: u.select_cols(&order), s, v: v.select_cols(&order) }
    } else {
        SvdOut { u, s, v }
    }
}

struct Accum<'a> {
    u: Option<&'a mut CMatrix>,
    v: Option<&'a mut CMatrix>,
}

/// `(col_i, col_j) <- (c col_i + s col_j, -s col_i + c col_j)`.
fn rot_cols(m: &mut CMatrix, i: usize, j: usize, c: f64, s: f64) {
    let (a, b) = m.col_pair_mut(i, j);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = xv * c + yv * s;
        *y = yv * c - xv * s;
    }
}

impl Accum<'_> {
    fn left(&mut self, i: usize, j: usize, c: f64, s: f64) {
        if let Some(u) = self.u.as_deref_mut() {
            rot_cols(u, i, j, c, s);
        }
    }
    fn right(&mut self, i: usize, j: usize, c: f64, s: f64) {
        if let Some(v) = self.v.as_deref_mut() {
            rot_cols(v, i, j, c, s);
        }
    }
}

/// `(c, s, r)` with `c f + s g = r` and `-s f + c g = 0`.
fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        return (1.0, 0.0, f);
    }
    if f == 0.0 {
        return (0.0, 1.0, g);
    }
    let r = f.hypot(g);
    (f / r, g / r, r)
}

/// Diagonalizes the upper bidiagonal `(d, e)` in place.
fn bidiagonal_qr(d: &mut [f64], e: &mut [f64], acc: &mut Accum<'_>) {
    let n = d.len();
    if n < 2 {
        return;
    }
    let eps = f64::EPSILON;
    let anorm = d.iter().chain(e.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    if anorm == 0.0 {
        return;
    }
    let dtol = eps * anorm;
    let max_iter = 100 * n * n;
    let mut iter = 0;
    loop {
        for i in 0..n - 1 {
            if e[i].abs() <= eps * (d[i].abs() + d[i + 1].abs()) || e[i].abs() <= f64::MIN_POSITIVE {
                e[i] = 0.0;
            }
        }
        let mut hi = n - 1;
        while hi > 0 && e[hi - 1] == 0.0 {
            hi -= 1;
        }
        if hi == 0 {
            break;
        }
        let mut lo = hi - 1;
        while lo > 0 && e[lo - 1] != 0.0 {
            lo -= 1;
        }
        iter += 1;
        if iter > max_iter {
            break;
        }

        if let Some(k) = (lo..hi).find(|&k| d[k].abs() <= dtol) {
            // Zero diagonal: push e[k] along row k to the right.
            d[k] = 0.0;
            let mut f = e[k];
            e[k] = 0.0;
            for j in k + 1..=hi {
                let (c, s, r) = givens(d[j], f);
                d[j] = r;
                acc.left(j, k, c, s);
                if j < hi {
                    f = -s * e[j];
                    e[j] *= c;
                }
            }
            continue;
        }
        if d[hi].abs() <= dtol {
            // Zero last diagonal: push e[hi-1] up column hi.
            d[hi] = 0.0;
            let mut f = e[hi - 1];
            e[hi - 1] = 0.0;
            for j in (lo..hi).rev() {
                let (c, s, r) = givens(d[j], f);
                d[j] = r;
                acc.right(j, hi, c, s);
                if j > lo {
                    f = -s * e[j - 1];
                    e[j - 1] *= c;
                }
            }
            continue;
        }

        // Wilkinson shift from the trailing 2x2 of B^T B.
        let t11 = d[hi - 1] * d[hi - 1] + if hi - 1 > lo { e[hi - 2] * e[hi - 2] } else { 0.0 };
        let t12 = d[hi - 1] * e[hi - 1];
        let t22 = d[hi] * d[hi] + e[hi - 1] * e[hi - 1];
        let delta = 0.5 * (t11 - t22);
        let denom = delta.abs() + delta.hypot(t12);
        let mu = if denom == 0.0 { t22 } else { t22 - delta.signum_nonzero() * t12 * t12 / denom };

        let mut y = d[lo] * d[lo] - mu;
        let mut z = d[lo] * e[lo];
        for k in lo..hi {
            let (c, s, r) = givens(y, z);
            if k > lo {
                e[k - 1] = r;
            }
            let (dk, ek) = (d[k], e[k]);
            d[k] = c * dk + s * ek;
            e[k] = -s * dk + c * ek;
            let bulge = s * d[k + 1];
            d[k + 1] *= c;
            acc.right(k, k + 1, c, s);

            let (c, s, r) = givens(d[k], bulge);
            d[k] = r;
            let (ek, dk1) = (e[k], d[k + 1]);
            e[k] = c * ek + s * dk1;
            d[k + 1] = -s * ek + c * dk1;
            acc.left(k, k + 1, c, s);
            if k + 1 < hi {
                y = e[k];
                z = s * e[k + 1];
                e[k + 1] *= c;
            }
        }
    }
}

trait SignNonzero {
    fn signum_nonzero(self) -> f64;
}

impl SignNonzero for f64 {
    fn signum_nonzero(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}
