//! Singular-pair bookkeeping for the full complex representation.
//!
//! Singular values of `chi(A)` come in equal pairs. A pair whose two values
//! agree and stand apart from their neighbours yields one quaternion
//! singular vector directly. Everything else (tight clusters, values near
//! zero) is repaired by building a basis that is orthonormal in the
//! quaternion sense, i.e. orthogonal to its own `J conj` partners.

use crate::bridge::j_conj_vec;
use crate::complex::{dotc, norm2, CMatrix, C64, CZERO};
use crate::exec;
use crate::rng::Stream;

use rayon::prelude::*;

use super::{complex_svd_vectors, PAIR_TOL, ZERO_TOL};

/// Which bad-block repair was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BadPath {
    /// Complex SVD of the randomly rescaled bad block.
    Svd,
    /// Pivoted Gram-Schmidt selection against `J conj` partners.
    GramSchmidt,
}

#[derive(Debug, Default)]
pub(crate) struct Partition {
    /// Position of the representative column of each good pair.
    pub good: Vec<usize>,
    /// Groups of bad positions, each of even size, in spectral order.
    pub bad: Vec<Vec<usize>>,
}

impl Partition {
    pub fn bad_flat(&self) -> Vec<usize> {
        self.bad.iter().flatten().copied().collect()
    }
}

/// Splits nonincreasing singular values of a full representation.
pub(crate) fn partition(s: &[f64]) -> Partition {
    let mut out = Partition::default();
    if s.is_empty() {
        return out;
    }
    let s1 = s[0];
    if s1 == 0.0 {
        out.bad.push((0..s.len()).collect());
        return out;
    }
    let floor = ZERO_TOL * s1;
    let gap = PAIR_TOL * s1;
    let live = s.iter().take_while(|&&v| v > floor).count();

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..live {
        match clusters.last_mut() {
            Some(c) if s[*c.last().unwrap()] - s[i] <= gap => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut pending: Vec<usize> = Vec::new();
    for c in clusters {
        if c.len() == 2 && pending.is_empty() {
            out.good.push(c[0]);
        } else {
            pending.extend(c);
            if pending.len() % 2 == 0 {
                out.bad.push(std::mem::take(&mut pending));
            }
        }
    }
    pending.extend(live..s.len());
    if !pending.is_empty() {
        out.bad.push(pending);
    }
    out
}

/// Orthonormal set of compact columns closed under `J conj`.
pub(crate) struct JBasis {
    vecs: Vec<Vec<C64>>,
}

impl JBasis {
    pub fn new() -> Self {
        JBasis { vecs: Vec::new() }
    }

    /// Removes the components along the basis; classical Gram-Schmidt,
    /// two passes.
    pub fn project_out(&self, v: &mut [C64]) {
        if self.vecs.is_empty() {
            return;
        }
        let par = exec::parallel_for(self.vecs.len() * v.len());
        for _ in 0..2 {
            let coef: Vec<C64> = if par {
                self.vecs.par_iter().map(|b| dotc(b, v)).collect()
            } else {
                self.vecs.iter().map(|b| dotc(b, v)).collect()
            };
            let update = |(off, chunk): (usize, &mut [C64])| {
                for (b, c) in self.vecs.iter().zip(&coef) {
                    for (vi, bi) in chunk.iter_mut().zip(&b[off..]) {
                        *vi -= c * bi;
                    }
                }
            };
            if par {
                v.par_chunks_mut(64).enumerate().map(|(i, c)| (i * 64, c)).for_each(update);
            } else {
                update((0, v));
            }
        }
    }

    /// Adds a unit vector already orthogonal to the basis, with its partner.
    fn push_unit(&mut self, q: Vec<C64>) {
        let mut p = j_conj_vec(&q);
        // `<q, J conj q> = 0` holds exactly in exact arithmetic; clean rounding.
        let c = dotc(&q, &p);
        for (pi, qi) in p.iter_mut().zip(&q) {
            *pi -= c * qi;
        }
        let n = norm2(&p);
        p.iter_mut().for_each(|x| *x /= n);
        self.vecs.push(q);
        self.vecs.push(p);
    }

    /// Orthogonalizes `v` against the basis and appends it.
    /// Returns the normalized vector, or `None` if `v` lies in the span.
    pub fn accept(&mut self, mut v: Vec<C64>) -> Option<Vec<C64>> {
        let n0 = norm2(&v);
        self.project_out(&mut v);
        let n = norm2(&v);
        if n == 0.0 || n <= 1e-10 * n0 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= n);
        self.push_unit(v.clone());
        Some(v)
    }

    /// Picks `count` new quaternion directions from the candidates, always
    /// taking the candidate with the largest remaining component. Unit
    /// vectors are used as fallback candidates when the span runs out.
    pub fn select_pivoted(&mut self, cands: Vec<Vec<C64>>, count: usize) -> Vec<Vec<C64>> {
        let dim = cands.first().map_or(0, Vec::len);
        let mut res: Vec<Vec<C64>> = cands
            .into_iter()
            .map(|mut v| {
                self.project_out(&mut v);
                v
            })
            .collect();
        let mut out = Vec::with_capacity(count);
        let mut fallback_added = false;
        while out.len() < count {
            let best = res
                .iter()
                .enumerate()
                .map(|(i, v)| (i, norm2(v)))
                .fold((usize::MAX, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            if best.0 == usize::MAX || best.1 < 1e-6 {
                if fallback_added || dim == 0 {
                    break;
                }
                fallback_added = true;
                for k in 0..dim {
                    let mut e = vec![CZERO; dim];
                    e[k] = C64::new(1.0, 0.0);
                    self.project_out(&mut e);
                    res.push(e);
                }
                continue;
            }
            let v = res.swap_remove(best.0);
            if let Some(q) = self.accept(v) {
                let p = self.vecs.last().unwrap().clone();
                for r in res.iter_mut() {
                    let c1 = dotc(&q, r);
                    let c2 = dotc(&p, r);
                    for ((ri, qi), pi) in r.iter_mut().zip(&q).zip(&p) {
                        *ri -= c1 * qi + c2 * pi;
                    }
                }
                out.push(q);
            }
        }
        out
    }
}

/// Orthonormal quaternion basis (compact columns) for the span of `block`,
/// a set of `2t` compact vectors, orthogonal to everything in `basis`.
pub(crate) fn repair_block(basis: &mut JBasis, block: &CMatrix, path: BadPath, seed: u64) -> Vec<Vec<C64>> {
    let t = block.cols() / 2;
    let mut cols: Vec<Vec<C64>> = (0..block.cols())
        .map(|j| {
            let mut v = block.col(j).to_vec();
            basis.project_out(&mut v);
            v
        })
        .collect();
    match path {
        BadPath::GramSchmidt => basis.select_pivoted(cols, t),
        BadPath::Svd => {
            let mut rng = Stream::new(seed, 0xb10c);
            for c in cols.iter_mut() {
                let f = rng.uniform() + 1.0;
                c.iter_mut().for_each(|x| *x *= f);
            }
            let rows = block.rows();
            let mut hb = CMatrix::zeros(rows, 0);
            for c in &cols {
                hb.push_col(c);
            }
            for c in &cols {
                hb.push_col(&j_conj_vec(c));
            }
            let (u, _s, _v) = complex_svd_vectors(&hb);
            let lead = (2 * t).min(u.cols());
            let cands = (0..lead).map(|j| u.col(j).to_vec()).collect();
            basis.select_pivoted(cands, t)
        }
    }
}

/// Bad-path rule: SVD repair for small blocks, Gram-Schmidt otherwise.
pub(crate) fn choose_path(t: usize, s: usize) -> BadPath {
    if t <= s.div_ceil(2) {
        BadPath::Svd
    } else {
        BadPath::GramSchmidt
    }
}
