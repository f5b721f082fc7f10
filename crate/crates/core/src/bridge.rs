//! Complex representations of quaternion matrices and the quaternion solver.
//!
//! A quaternion matrix `Q = Q0 + Q1 j` with `Q0 = Qw + Qx i`, `Q1 = Qy + Qz i`
//! has the compact form `Q_c = [Q0; -conj(Q1)]` and the full form
//! `chi(Q) = [[Q0, Q1], [-conj(Q1), conj(Q0)]] = [Q_c, J conj(Q_c)]`.

use crate::complex::{CMatrix, C64};
use crate::error::{shape, Error, Result};
use crate::factorizations::lu::{triangular_rcond, upper_solve, LuFactor};
use crate::factorizations::qr::QrFactor;
use crate::quaternion::QMatrix;

/// Reciprocal condition estimate below which a system counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// `A_c`, of size `2m x n`.
pub fn to_compact(a: &QMatrix) -> CMatrix {
    let (m, n) = a.shape();
    let [w, x, y, z] = a.planes();
    CMatrix::from_fn(2 * m, n, |i, j| {
        if i < m {
            let k = i * n + j;
            C64::new(w[k], x[k])
        } else {
            let k = (i - m) * n + j;
            C64::new(-y[k], z[k])
        }
    })
}

/// `chi(A)`, of size `2m x 2n`.
pub fn to_full(a: &QMatrix) -> CMatrix {
    let (m, n) = a.shape();
    let [w, x, y, z] = a.planes();
    CMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let (bi, bj) = (i >= m, j >= n);
        let k = (i % m.max(1)) * n + (j % n.max(1));
        match (bi, bj) {
            (false, false) => C64::new(w[k], x[k]),
            (false, true) => C64::new(y[k], z[k]),
            (true, false) => C64::new(-y[k], z[k]),
            (true, true) => C64::new(w[k], -x[k]),
        }
    })
}

/// Inverse of [`to_compact`]: `[Z0; Z1]` maps to `Z0 - conj(Z1) j`.
pub fn from_compact(zc: &CMatrix) -> Result<QMatrix> {
    if zc.rows() % 2 != 0 {
        return shape(format!("compact form needs an even row count, got {}", zc.rows()));
    }
    let (m, n) = (zc.rows() / 2, zc.cols());
    let mut out = QMatrix::zeros(m, n);
    let [w, x, y, z] = out.planes_mut();
    for j in 0..n {
        let col = zc.col(j);
        for i in 0..m {
            let k = i * n + j;
            w[k] = col[i].re;
            x[k] = col[i].im;
            y[k] = -col[m + i].re;
            z[k] = col[m + i].im;
        }
    }
    Ok(out)
}

/// `J conj(v)` for a single column: top becomes `-conj(bottom)`, bottom
/// becomes `conj(top)`.
pub(crate) fn j_conj_vec(v: &[C64]) -> Vec<C64> {
    let m = v.len() / 2;
    let mut out = Vec::with_capacity(v.len());
    out.extend(v[m..].iter().map(|c| -c.conj()));
    out.extend(v[..m].iter().map(|c| c.conj()));
    out
}

/// `J conj(U)` for a `2m x k` matrix.
pub fn j_mul_conj(u: &CMatrix) -> Result<CMatrix> {
    if u.rows() % 2 != 0 {
        return shape(format!("J needs an even row count, got {}", u.rows()));
    }
    let mut data = Vec::with_capacity(u.rows() * u.cols());
    for j in 0..u.cols() {
        data.extend(j_conj_vec(u.col(j)));
    }
    CMatrix::from_col_major(u.rows(), u.cols(), data)
}

/// The symplectic `J = [[0, -I_m], [I_m, 0]]`, applied without storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticContext {
    pub m: usize,
}

impl SymplecticContext {
    pub fn new(m: usize) -> Self {
        SymplecticContext { m }
    }

    /// `J U`.
    pub fn apply(&self, u: &CMatrix) -> Result<CMatrix> {
        if u.rows() != 2 * self.m {
            return shape(format!("J of size {} applied to {} rows", 2 * self.m, u.rows()));
        }
        let m = self.m;
        Ok(CMatrix::from_fn(2 * m, u.cols(), |i, j| if i < m { -u[(i + m, j)] } else { u[(i - m, j)] }))
    }

    /// `J^* U = -J U`.
    pub fn apply_adjoint(&self, u: &CMatrix) -> Result<CMatrix> {
        Ok(self.apply(u)?.scale(-1.0))
    }

    /// `J conj(U)`.
    pub fn apply_conj(&self, u: &CMatrix) -> Result<CMatrix> {
        if u.rows() != 2 * self.m {
            return shape(format!("J of size {} applied to {} rows", 2 * self.m, u.rows()));
        }
        j_mul_conj(u)
    }
}

enum Factor {
    Lu(LuFactor),
    Qr(QrFactor),
}

/// Factorization of `chi(A)` reused across right-hand sides.
pub struct QuaternionSolver {
    factor: Factor,
    rows: usize,
    cols: usize,
    rcond: f64,
}

impl QuaternionSolver {
    /// Factors `chi(A)` with the default singularity tolerance.
    pub fn new(a: &QMatrix) -> Result<Self> {
        Self::with_tolerance(a, SINGULAR_RCOND)
    }

    /// Factors `chi(A)`; fails when the reciprocal condition estimate is
    /// below `tol`.
    pub fn with_tolerance(a: &QMatrix, tol: f64) -> Result<Self> {
        let (n1, n2) = a.shape();
        if n1 < n2 {
            return shape(format!("underdetermined system {n1}x{n2} is not supported"));
        }
        if n2 == 0 {
            return shape("system has no unknowns");
        }
        let chi = to_full(a);
        let (factor, rcond) = if n1 == n2 {
            let lu = LuFactor::new(&chi);
            let rc = lu.rcond(&chi);
            (Factor::Lu(lu), rc)
        } else {
            let qr = QrFactor::new(&chi);
            let rc = triangular_rcond(&qr.r_raw());
            (Factor::Qr(qr), rc)
        };
        if !(rcond >= tol) {
            return Err(Error::Singular { cond: if rcond > 0.0 { 1.0 / rcond } else { f64::INFINITY } });
        }
        Ok(QuaternionSolver { factor, rows: n1, cols: n2, rcond })
    }

    /// Reciprocal 1-norm condition estimate of `chi(A)`.
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Least-squares solution of `A X = B`.
    pub fn solve(&self, b: &QMatrix) -> Result<QMatrix> {
        if b.rows() != self.rows {
            return shape(format!("right-hand side has {} rows, system has {}", b.rows(), self.rows));
        }
        let mut bc = to_compact(b);
        match &self.factor {
            Factor::Lu(lu) => {
                lu.solve(&mut bc);
                from_compact(&bc)
            }
            Factor::Qr(qr) => {
                qr.apply_qh(&mut bc);
                let r = qr.r_raw();
                let q = 2 * self.cols;
                let mut z = CMatrix::zeros(q, bc.cols());
                for j in 0..bc.cols() {
                    let col = &mut z.col_mut(j);
                    col.copy_from_slice(&bc.col(j)[..q]);
                    upper_solve(&r, col);
                }
                from_compact(&z)
            }
        }
    }
}

/// Solves `A X = B` through `chi(A) Z = B_c`; least squares when `A` is tall.
pub fn solve_quaternion_linear(a: &QMatrix, b: &QMatrix) -> Result<QMatrix> {
    QuaternionSolver::new(a)?.solve(b)
}
