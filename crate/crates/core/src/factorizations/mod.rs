//! Complex QR/SVD, quaternion SVD and pseudoinverse.

pub(crate) mod lu;
pub(crate) mod pairing;
pub(crate) mod qr;
mod svd;

use crate::bridge::{from_compact, to_full};
use crate::complex::{CMatrix, C64};
use crate::error::{shape, Result};
use crate::quaternion::QMatrix;

pub use pairing::BadPath;
use pairing::{choose_path, partition, repair_block, JBasis};

/// Two `chi` singular values within `PAIR_TOL * s_1` belong to one pair.
pub const PAIR_TOL: f64 = 1e-8;
/// Values below `ZERO_TOL * s_1` are treated as numerically zero.
pub const ZERO_TOL: f64 = 1e-13;

/// Thin QR with a real nonnegative diagonal in `r`.
#[derive(Clone, Debug)]
pub struct ComplexQr {
    pub q: CMatrix,
    pub r: CMatrix,
}

/// Thin SVD `m = u diag(sigma) v^H`, `sigma` nonincreasing.
#[derive(Clone, Debug)]
pub struct ComplexSvd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// Dense complex kernels the quaternion layer is built on.
pub trait ComplexBackend: Send + Sync {
    /// Thin QR of a `p x q` matrix, `p >= q`.
    fn qr(&self, m: &CMatrix) -> ComplexQr;
    /// Thin SVD.
    fn svd(&self, m: &CMatrix) -> ComplexSvd;
    /// Singular values only.
    fn singular_values(&self, m: &CMatrix) -> Vec<f64> {
        self.svd(m).sigma
    }
}

/// Householder QR and Golub-Kahan SVD written against [`CMatrix`].
#[derive(Clone, Copy, Debug, Default)]
pub struct NativeBackend;

impl ComplexBackend for NativeBackend {
    fn qr(&self, m: &CMatrix) -> ComplexQr {
        let (q, r) = qr::householder_qr(m);
        ComplexQr { q, r }
    }

    fn svd(&self, m: &CMatrix) -> ComplexSvd {
        let o = svd::golub_kahan_svd(m, true);
        ComplexSvd { u: o.u, sigma: o.s, v: o.v }
    }

    fn singular_values(&self, m: &CMatrix) -> Vec<f64> {
        svd::golub_kahan_svd(m, false).s
    }
}

/// Thin QR with the nonnegative-diagonal convention.
pub fn complex_qr(m: &CMatrix) -> Result<ComplexQr> {
    if m.rows() < m.cols() {
        return shape(format!("QR needs rows >= cols, got {}x{}", m.rows(), m.cols()));
    }
    Ok(NativeBackend.qr(m))
}

/// Thin SVD with nonincreasing singular values.
pub fn complex_svd(m: &CMatrix) -> ComplexSvd {
    NativeBackend.svd(m)
}

pub(crate) fn complex_svd_vectors(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let s = NativeBackend.svd(m);
    (s.u, s.sigma, s.v)
}

/// Quaternion SVD `A = U diag(sigma) V*`.
#[derive(Clone, Debug)]
pub struct QsvdFactors {
    pub u: QMatrix,
    pub sigma: Vec<f64>,
    pub v: QMatrix,
}

impl QsvdFactors {
    /// `U diag(sigma) V*`.
    pub fn reconstruct(&self) -> QMatrix {
        self.u.scale_cols(&self.sigma).matmul(&self.v.adjoint()).expect("conforming factors")
    }

    /// Leading `r` triplets.
    pub fn truncate(&self, r: usize) -> QsvdFactors {
        let r = r.min(self.sigma.len());
        QsvdFactors { u: self.u.col_block(0, r), sigma: self.sigma[..r].to_vec(), v: self.v.col_block(0, r) }
    }
}

const QSVD_REPAIR_SEED: u64 = 0x9e37_79b9;

/// Quaternion SVD through the complex SVD of `chi(A)`.
pub fn qsvd(a: &QMatrix) -> QsvdFactors {
    qsvd_with(&NativeBackend, a)
}

/// [`qsvd`] on an explicit backend.
pub fn qsvd_with(backend: &dyn ComplexBackend, a: &QMatrix) -> QsvdFactors {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return QsvdFactors { u: QMatrix::zeros(m, 0), sigma: vec![], v: QMatrix::zeros(n, 0) };
    }
    let chi = to_full(a);
    let ComplexSvd { u: cu, sigma: cs, v: cv } = backend.svd(&chi);
    let part = partition(&cs);

    // Left basis, in spectral order; remember which bad block each came from.
    enum Unit {
        Good(usize),
        Bad(usize),
    }
    let mut units: Vec<(usize, Unit)> = part.good.iter().map(|&g| (g, Unit::Good(g))).collect();
    units.extend(part.bad.iter().enumerate().map(|(b, idx)| (idx[0], Unit::Bad(b))));
    units.sort_by_key(|u| u.0);

    let mut left = JBasis::new();
    let mut qcols: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut origin: Vec<Option<usize>> = Vec::with_capacity(k);
    for (_, unit) in &units {
        match unit {
            Unit::Good(g) => {
                let got = left.accept(cu.col(*g).to_vec());
                match got {
                    Some(q) => {
                        qcols.push(q);
                        origin.push(None);
                    }
                    None => {
                        // Fully absorbed by earlier vectors; fill from its pair.
                        let picked = left.select_pivoted(vec![cu.col(*g + 1).to_vec()], 1);
                        for q in picked {
                            qcols.push(q);
                            origin.push(None);
                        }
                    }
                }
            }
            Unit::Bad(b) => {
                let idx = &part.bad[*b];
                let block = cu.select_cols(idx);
                let path = choose_path(idx.len() / 2, k);
                for q in repair_block(&mut left, &block, path, QSVD_REPAIR_SEED ^ *b as u64) {
                    qcols.push(q);
                    origin.push(Some(*b));
                }
            }
        }
    }
    if qcols.len() < k {
        let dim = 2 * m;
        let cands = (0..dim)
            .map(|i| {
                let mut e = vec![C64::new(0.0, 0.0); dim];
                e[i] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        for q in left.select_pivoted(cands, k - qcols.len()) {
            qcols.push(q);
            origin.push(Some(usize::MAX));
        }
    }
    qcols.truncate(k);
    origin.truncate(k);

    let mut uc = CMatrix::zeros(2 * m, 0);
    for q in &qcols {
        uc.push_col(q);
    }
    let u = from_compact(&uc).expect("even rows");

    // Rows of U* A give sigma_i p_i*.
    let b = u.adjoint().matmul(a).expect("conforming");
    let bstar = b.adjoint();
    let s1 = cs[0];
    let mut sigma = Vec::with_capacity(k);
    let mut right = JBasis::new();
    let mut vcols: Vec<Option<Vec<C64>>> = vec![None; k];
    let bc = crate::bridge::to_compact(&bstar);
    for i in 0..k {
        let col = bc.col(i).to_vec();
        let nrm = crate::complex::norm2(&col);
        sigma.push(nrm);
        if nrm > ZERO_TOL * s1 && nrm > 0.0 {
            vcols[i] = right.accept(col);
        }
    }
    // Directions with (numerically) zero singular value: complete from the
    // right singular vectors of the matching block, then from unit vectors.
    let mut groups: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
    for i in (0..k).filter(|&i| vcols[i].is_none()) {
        let key = origin[i].filter(|&b| b != usize::MAX);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    for (key, slots) in groups {
        let cands: Vec<Vec<C64>> = match key {
            Some(bidx) => part.bad[bidx].iter().map(|&j| cv.col(j).to_vec()).collect(),
            None => (0..cv.cols()).map(|j| cv.col(j).to_vec()).collect(),
        };
        let mut picked = right.select_pivoted(cands, slots.len());
        if picked.len() < slots.len() {
            let all = (0..cv.cols()).map(|j| cv.col(j).to_vec()).collect();
            picked.extend(right.select_pivoted(all, slots.len() - picked.len()));
        }
        for (i, v) in slots.into_iter().zip(picked) {
            vcols[i] = Some(v);
        }
    }
    let mut vc = CMatrix::zeros(2 * n, 0);
    for v in &vcols {
        vc.push_col(v.as_ref().expect("completion always succeeds"));
    }
    let v = from_compact(&vc).expect("even rows");

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));
    let pick = |q: &QMatrix| {
        let mut out = QMatrix::zeros(q.rows(), k);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..q.rows() {
                out.set(r, dst, q.get(r, src));
            }
        }
        out
    };
    QsvdFactors { u: pick(&u), sigma: order.iter().map(|&i| sigma[i]).collect(), v: pick(&v) }
}

/// Quaternion singular values (each `chi` pair reported once).
pub fn singular_values(a: &QMatrix) -> Vec<f64> {
    let s = NativeBackend.singular_values(&to_full(a));
    s.chunks(2).map(|p| 0.5 * (p[0] + p[p.len() - 1])).collect()
}

/// Moore-Penrose pseudoinverse `V diag(1/sigma) U*`.
pub fn qmat_pinv(a: &QMatrix) -> QMatrix {
    let f = qsvd(a);
    let smax = f.sigma.first().copied().unwrap_or(0.0);
    let tol = a.rows().max(a.cols()) as f64 * f64::EPSILON * smax;
    let inv: Vec<f64> = f.sigma.iter().map(|&s| if s > tol { 1.0 / s } else { 0.0 }).collect();
    f.v.scale_cols(&inv).matmul(&f.u.adjoint()).expect("conforming factors")
}

/// Numerical rank with the pseudoinverse cutoff.
pub fn numerical_rank(a: &QMatrix) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = a.rows().max(a.cols()) as f64 * f64::EPSILON * smax;
    s.iter().filter(|&&v| v > tol).count()
}

/// Largest singular value.
pub fn spectral_norm(a: &QMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    NativeBackend.singular_values(&to_full(a))[0]
}

/// `sigma_max / sigma_min`; infinite for zero or column-rank-deficient input.
pub fn condition_number(a: &QMatrix) -> f64 {
    if a.is_empty() || a.rows() < a.cols() {
        return f64::INFINITY;
    }
    let s = NativeBackend.singular_values(&to_full(a));
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if hi == 0.0 || lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::Quaternion;

    #[test]
    fn qr_of_scaled_basis_vector() {
        let mut m = CMatrix::zeros(4, 1);
        m[(0, 0)] = C64::new(2.0, 0.0);
        let f = complex_qr(&m).unwrap();
        assert!((f.r[(0, 0)] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((f.q[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn qr_of_identity() {
        let f = complex_qr(&CMatrix::identity(3)).unwrap();
        assert!(f.q.max_abs_diff(&CMatrix::identity(3)) < 1e-15);
        assert!(f.r.max_abs_diff(&CMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn svd_of_diagonal_and_zero() {
        let s = complex_svd(&CMatrix::diag_real(&[1.0, 3.0]));
        assert!((s.sigma[0] - 3.0).abs() < 1e-15 && (s.sigma[1] - 1.0).abs() < 1e-15);
        assert_eq!(complex_svd(&CMatrix::zeros(2, 2)).sigma, vec![0.0, 0.0]);
    }

    #[test]
    fn qsvd_of_real_diagonal() {
        let a = QMatrix::diag_real(&[2.0, 1.0]);
        let f = qsvd(&a);
        assert!((f.sigma[0] - 2.0).abs() < 1e-14 && (f.sigma[1] - 1.0).abs() < 1e-14);
        assert!(f.reconstruct().max_abs_diff(&a) < 1e-14);
        for i in 0..2 {
            assert!((f.u.get(i, i).norm() - 1.0).abs() < 1e-14);
            assert!((f.v.get(i, i).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn qsvd_of_i() {
        let a = QMatrix::from_fn(1, 1, |_, _| Quaternion::I);
        let f = qsvd(&a);
        assert!((f.sigma[0] - 1.0).abs() < 1e-15);
        let uv = f.u.matmul(&f.v.adjoint()).unwrap().get(0, 0);
        assert!((uv - Quaternion::I).norm() < 1e-14);
    }

    #[test]
    fn pinv_of_singular_diagonal() {
        let p = qmat_pinv(&QMatrix::diag_real(&[2.0, 0.0]));
        assert!(p.max_abs_diff(&QMatrix::diag_real(&[0.5, 0.0])) < 1e-15);
    }

    #[test]
    fn norms_of_diagonal() {
        let a = QMatrix::diag_real(&[2.0, 1.0]);
        assert!((spectral_norm(&a) - 2.0).abs() < 1e-15);
        assert!((condition_number(&a) - 2.0).abs() < 1e-14);
        assert!(condition_number(&QMatrix::zeros(3, 2)).is_infinite());
    }
}
