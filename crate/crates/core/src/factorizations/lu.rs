//! Partially pivoted LU and triangular solves for complex systems.

use crate::complex::{CMatrix, C64, CZERO};

pub(crate) struct LuFactor {
    lu: CMatrix,
    perm: Vec<usize>,
    singular: bool,
}

impl LuFactor {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.rows();
        assert_eq!(n, m.cols(), "LU needs a square matrix");
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
            }
            let inv = C64::new(1.0, 0.0) / lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let (cj, ck) = lu.col_pair_mut(j, k);
                let f = cj[k];
                if f == CZERO {
                    continue;
                }
                for i in k + 1..n {
                    cj[i] -= f * ck[i];
                }
            }
        }
        LuFactor { lu, perm, singular }
    }

    /// Solves `m x = b` in place for every column of `b`.
    pub fn solve(&self, b: &mut CMatrix) {
        let n = self.lu.rows();
        for j in 0..b.cols() {
            let col = b.col_mut(j);
            let mut x: Vec<C64> = self.perm.iter().map(|&p| col[p]).collect();
            for i in 0..n {
                let mut s = x[i];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[k];
                }
                x[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[k];
                }
                x[i] = s / self.lu[(i, i)];
            }
            col.copy_from_slice(&x);
        }
    }

    /// Solves `m^H x = b` in place.
    fn solve_adjoint(&self, b: &mut [C64]) {
        let n = self.lu.rows();
        // m = P^T L U, so m^H = U^H L^H P.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[(k, i)].conj() * y[k];
            }
            y[i] = s / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[(k, i)].conj() * y[k];
            }
            y[i] = s;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = y[i];
        }
    }

    /// Reciprocal 1-norm condition estimate (Hager's method).
    pub fn rcond(&self, m: &CMatrix) -> f64 {
        if self.singular {
            return 0.0;
        }
        let anorm = one_norm(m);
        if anorm == 0.0 {
            return 0.0;
        }
        let inv = hager_inverse_norm(
            m.rows(),
            |x| {
                let mut b = CMatrix::from_col_major(x.len(), 1, x.to_vec()).unwrap();
                self.solve(&mut b);
                x.copy_from_slice(b.col(0));
            },
            |x| self.solve_adjoint(x),
        );
        if !inv.is_finite() {
            return 0.0;
        }
        1.0 / (anorm * inv)
    }
}

pub(crate) fn one_norm(m: &CMatrix) -> f64 {
    (0..m.cols()).map(|j| m.col(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Lower bound on `||M^{-1}||_1` from a few Hager iterations, refined with
/// the alternating-sign test vector of Higham.
pub(crate) fn hager_inverse_norm(
    n: usize,
    mut solve: impl FnMut(&mut [C64]),
    mut solve_adj: impl FnMut(&mut [C64]),
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0f64;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        solve(&mut x);
        let norm: f64 = x.iter().map(|v| v.norm()).sum();
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        if norm <= est {
            break;
        }
        est = norm;
        let mut xi: Vec<C64> =
            x.iter().map(|v| if v.norm() == 0.0 { C64::new(1.0, 0.0) } else { v / v.norm() }).collect();
        solve_adj(&mut xi);
        let (j, _) = xi.iter().enumerate().fold((0, -1.0), |a, (i, v)| if v.norm() > a.1 { (i, v.norm()) } else { a });
        if j == last_j {
            break;
        }
        last_j = j;
        x = vec![CZERO; n];
        x[j] = C64::new(1.0, 0.0);
    }
    let mut alt: Vec<C64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
        })
        .collect();
    solve(&mut alt);
    let alt_est = 2.0 * alt.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
    est.max(alt_est)
}

/// Solves `r x = b` for upper triangular `r` (first `r.cols()` rows of `b`).
pub(crate) fn upper_solve(r: &CMatrix, b: &mut [C64]) {
    let n = r.cols();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= r[(i, k)] * b[k];
        }
        b[i] = s / r[(i, i)];
    }
}

/// Solves `r^H x = b` for upper triangular `r`.
pub(crate) fn upper_adjoint_solve(r: &CMatrix, b: &mut [C64]) {
    let n = r.cols();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= r[(k, i)].conj() * b[k];
        }
        b[i] = s / r[(i, i)].conj();
    }
}

/// Reciprocal 1-norm condition estimate of an upper triangular matrix.
pub(crate) fn triangular_rcond(r: &CMatrix) -> f64 {
    let n = r.cols();
    if (0..n).any(|i| r[(i, i)].norm() == 0.0) {
        return 0.0;
    }
    let anorm = one_norm(r);
    if anorm == 0.0 {
        return 0.0;
    }
    let inv = hager_inverse_norm(n, |x| upper_solve(r, x), |x| upper_adjoint_solve(r, x));
    if !inv.is_finite() {
        return 0.0;
    }
    1.0 / (anorm * inv)
}
