//! Pseudo-QR and pseudo-SVD rangefinders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bridge::{from_compact, to_compact, to_full, SINGULAR_RCOND};
use crate::complex::{dotc, norm2, CMatrix, C64};
use crate::error::{param, shape, Error, Result};
use crate::factorizations::lu::{triangular_rcond, upper_adjoint_solve, upper_solve};
use crate::factorizations::pairing::{choose_path, partition, repair_block, JBasis};
use crate::factorizations::qr::QrFactor;
use crate::factorizations::{complex_qr, condition_number, BadPath, ComplexBackend, NativeBackend};
use crate::quaternion::QMatrix;
use crate::rng::Stream;

/// Upper end of the admissible `delta` range, `sqrt(7)/2`.
pub const DELTA_MAX: f64 = 1.322_875_655_532_295_3;

/// Correction stops once the estimated condition number is at most this.
pub const KAPPA_TARGET: f64 = 10.0;

/// Pivot ratio of the compact QR below which `Y` counts as rank deficient.
const QR_RANK_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangefinderMethod {
    PseudoQr,
    PseudoSvd,
}

impl fmt::Display for RangefinderMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RangefinderMethod::PseudoQr => "pseudo-qr",
            RangefinderMethod::PseudoSvd => "pseudo-svd",
        })
    }
}

impl FromStr for RangefinderMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudo-qr" => Ok(RangefinderMethod::PseudoQr),
            "pseudo-svd" => Ok(RangefinderMethod::PseudoSvd),
            other => param(format!("unknown rangefinder '{other}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RangefinderReport {
    pub h: QMatrix,
    pub kappa_before: f64,
    pub kappa_after: f64,
    pub correction_steps_used: usize,
    pub method: RangefinderMethod,
    /// `||HH^+ - YY^+||_F` when measured.
    pub range_distance: Option<f64>,
    /// Step sizes used by the correction iterations.
    pub epsilons: Vec<f64>,
    /// `kappa(H_k)` before each correction step and after the last one.
    pub kappa_history: Vec<f64>,
    /// Number of quaternion directions rebuilt by the bad-block repair.
    pub bad_pairs: usize,
    pub bad_path: Option<BadPath>,
}

impl RangefinderReport {
    /// Fills in `range_distance` against the sketch it was built from.
    pub fn measure_range_distance(&mut self, y: &QMatrix) -> Result<f64> {
        let d = crate::analysis::range_distance(&self.h, y)?;
        self.range_distance = Some(d);
        Ok(d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoQrConfig {
    pub max_correction_steps: usize,
    pub power_iters_for_epsilon: usize,
    pub delta_budget: f64,
    /// Seed of the power-iteration start vector.
    pub seed: u64,
}

impl Default for PseudoQrConfig {
    fn default() -> Self {
        PseudoQrConfig { max_correction_steps: 3, power_iters_for_epsilon: 3, delta_budget: 1.2, seed: 0x5eed }
    }
}

impl PseudoQrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1.0..=DELTA_MAX).contains(&self.delta_budget) {
            return param(format!("delta_budget must lie in [1, {DELTA_MAX:.4}], got {}", self.delta_budget));
        }
        if self.power_iters_for_epsilon == 0 {
            return param("power_iters_for_epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoSvdConfig {
    /// Seed of the column rescaling in the SVD repair path.
    pub seed: u64,
}

impl Default for PseudoSvdConfig {
    fn default() -> Self {
        PseudoSvdConfig { seed: 0xf00d }
    }
}

/// A configured rangefinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Rangefinder {
    PseudoQr(PseudoQrConfig),
    PseudoSvd(PseudoSvdConfig),
}

impl Rangefinder {
    pub fn pseudo_qr() -> Self {
        Rangefinder::PseudoQr(PseudoQrConfig::default())
    }

    pub fn pseudo_svd() -> Self {
        Rangefinder::PseudoSvd(PseudoSvdConfig::default())
    }

    pub fn from_method(m: RangefinderMethod) -> Self {
        match m {
            RangefinderMethod::PseudoQr => Self::pseudo_qr(),
            RangefinderMethod::PseudoSvd => Self::pseudo_svd(),
        }
    }

    pub fn method(&self) -> RangefinderMethod {
        match self {
            Rangefinder::PseudoQr(_) => RangefinderMethod::PseudoQr,
            Rangefinder::PseudoSvd(_) => RangefinderMethod::PseudoSvd,
        }
    }

    pub fn apply(&self, y: &QMatrix) -> Result<RangefinderReport> {
        match self {
            Rangefinder::PseudoQr(c) => pseudo_qr(y, c),
            Rangefinder::PseudoSvd(c) => pseudo_svd_with(y, c),
        }
    }
}

fn check_tall(y: &QMatrix) -> Result<()> {
    if y.cols() == 0 {
        return shape("sketch has no columns");
    }
    if y.rows() <= y.cols() {
        return shape(format!("rangefinder needs m > s, got {}x{}", y.rows(), y.cols()));
    }
    Ok(())
}

fn rank_error(detail: &str) -> Error {
    Error::RankDeficient(format!("{detail}; the sketch is numerically rank deficient, use pseudo_svd instead"))
}

/// Pseudo-QR: `H_c` is the Q factor of `Y_c`, followed by up to
/// `max_correction_steps` conditioning corrections.
pub fn pseudo_qr(y: &QMatrix, cfg: &PseudoQrConfig) -> Result<RangefinderReport> {
    cfg.validate()?;
    check_tall(y)?;
    let f = complex_qr(&to_compact(y))?;
    let diag: Vec<f64> = (0..f.r.cols()).map(|k| f.r[(k, k)].re).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmax == 0.0 || dmin <= QR_RANK_TOL * dmax {
        return Err(rank_error("compact QR has a vanishing pivot"));
    }
    let mut h = from_compact(&f.q)?;
    let kappa_before = condition_number(&h);
    let mut epsilons = Vec::new();
    let mut kappa_history = Vec::new();
    for step in 0..cfg.max_correction_steps {
        let gi = GramInverse::new(&h).map_err(|e| match e {
            Error::Singular { cond } => rank_error(&format!("H is numerically singular (condition {cond:.2e})")),
            other => other,
        })?;
        let kappa = gi.kappa();
        kappa_history.push(kappa);
        if kappa <= KAPPA_TARGET {
            break;
        }
        let eps = gi.epsilon(cfg.power_iters_for_epsilon, cfg.delta_budget, cfg.seed ^ step as u64)?;
        h = gi.correct(&h, eps)?;
        epsilons.push(eps);
    }
    let kappa_after = condition_number(&h);
    if kappa_history.len() == epsilons.len() {
        kappa_history.push(kappa_after);
    }
    Ok(RangefinderReport {
        kappa_before,
        kappa_after,
        kappa_history,
        correction_steps_used: epsilons.len(),
        h,
        method: RangefinderMethod::PseudoQr,
        range_distance: None,
        epsilons,
        bad_pairs: 0,
        bad_path: None,
    })
}

/// `chi(H*H)^{-1} = R^{-1} R^{-*}` from the triangular factor of `chi(H)`,
/// so the Gram matrix is never formed.
struct GramInverse {
    r: CMatrix,
    s: usize,
}

impl GramInverse {
    fn new(h: &QMatrix) -> Result<Self> {
        let (m, s) = h.shape();
        if s == 0 || m < s {
            return shape(format!("H must be tall with columns, got {m}x{s}"));
        }
        let r = QrFactor::new(&to_full(h)).r_raw();
        let rc = triangular_rcond(&r);
        if !(rc >= SINGULAR_RCOND) {
            return Err(Error::Singular { cond: if rc > 0.0 { 1.0 / rc } else { f64::INFINITY } });
        }
        Ok(GramInverse { r, s })
    }

    /// `kappa(H) = kappa(R)`.
    fn kappa(&self) -> f64 {
        let sv = NativeBackend.singular_values(&self.r);
        let lo = sv[sv.len() - 1];
        if lo > 0.0 {
            sv[0] / lo
        } else {
            f64::INFINITY
        }
    }

    fn apply(&self, v: &mut [C64]) {
        upper_adjoint_solve(&self.r, v);
        upper_solve(&self.r, v);
    }

    /// `(H*H)^{-1}` as a quaternion matrix, from its compact form.
    fn inverse(&self) -> Result<QMatrix> {
        let mut mc = CMatrix::eye(2 * self.s, self.s);
        for j in 0..self.s {
            self.apply(mc.col_mut(j));
        }
        from_compact(&mc)
    }

    fn correct(&self, h: &QMatrix, epsilon: f64) -> Result<QMatrix> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return param(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        let c = QMatrix::identity(self.s).lincomb(1.0 - epsilon, &self.inverse()?, epsilon)?;
        h.matmul(&c)
    }

    fn epsilon(&self, power_iters: usize, delta: f64, seed: u64) -> Result<f64> {
        const MAX_ITERS: usize = 50;
        let n = 2 * self.s;
        let mut rng = Stream::new(seed, 0xe95);
        let mut x: Vec<C64> = (0..n).map(|_| C64::new(rng.normal(), rng.normal())).collect();
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let settle = (delta * delta - 1.0) * 1e-2;
        let mut prev = 0.0;
        let mut lambda = 0.0;
        for it in 0..MAX_ITERS.max(power_iters) {
            let mut y = x.clone();
            self.apply(&mut y);
            lambda = dotc(&x, &y).re;
            let ny = norm2(&y);
            if !(ny.is_finite() && ny > 0.0) {
                return Err(Error::Singular { cond: f64::INFINITY });
            }
            x = y.into_iter().map(|v| v / ny).collect();
            if it + 1 >= power_iters && lambda - prev <= settle * lambda {
                break;
            }
            prev = lambda;
        }
        if !(lambda > 0.0) {
            return Err(Error::Singular { cond: f64::INFINITY });
        }
        Ok((1.0 / lambda.sqrt()).clamp(f64::MIN_POSITIVE, 0.999))
    }
}

/// `H_new = (1 - eps) H + eps (H^+)*` with `(H^+)* = H (H*H)^{-1}`, which
/// keeps `range(H_new) = range(H)` up to one product's rounding.
pub fn correction_step(h: &QMatrix, epsilon: f64) -> Result<QMatrix> {
    GramInverse::new(h)?.correct(h, epsilon)
}

/// Estimate of `sigma_min(H)` with the default `delta` budget.
pub fn estimate_epsilon(h: &QMatrix, power_iters: usize) -> Result<f64> {
    estimate_epsilon_with(h, power_iters, PseudoQrConfig::default().delta_budget, PseudoQrConfig::default().seed)
}

/// Power iteration on `(H*H)^{-1}` through triangular solves. The Rayleigh
/// quotient never exceeds `1/sigma_min^2`, so the returned value is at least
/// `sigma_min`; iterations continue past `power_iters` until the quotient
/// settles to a fraction of the `delta` budget. Clamped to `(0, 0.999]`.
pub fn estimate_epsilon_with(h: &QMatrix, power_iters: usize, delta: f64, seed: u64) -> Result<f64> {
    if power_iters == 0 {
        return param("power_iters must be positive");
    }
    GramInverse::new(h)?.epsilon(power_iters, delta, seed)
}

/// `kappa(H)` from the triangular factor of `chi(H)`.
pub fn qr_condition(h: &QMatrix) -> Result<f64> {
    Ok(GramInverse::new(h)?.kappa())
}

/// Pseudo-SVD with the default seed.
pub fn pseudo_svd(y: &QMatrix) -> Result<RangefinderReport> {
    pseudo_svd_with(y, &PseudoSvdConfig::default())
}

/// Orthonormal `H` from the SVD of `chi(Y)` with bad-block repair.
pub fn pseudo_svd_with(y: &QMatrix, cfg: &PseudoSvdConfig) -> Result<RangefinderReport> {
    check_tall(y)?;
    let (hc, bad_pairs, bad_path) = orthonormal_compact_basis(y, cfg.seed);
    let h = from_compact(&hc)?;
    let kappa = condition_number(&h);
    Ok(RangefinderReport {
        h,
        kappa_before: kappa,
        kappa_after: kappa,
        kappa_history: vec![kappa],
        correction_steps_used: 0,
        method: RangefinderMethod::PseudoSvd,
        range_distance: None,
        epsilons: vec![],
        bad_pairs,
        bad_path,
    })
}

/// Compact form of an orthonormal basis `[H_g, H_b]` for `range(Y)`,
/// `m >= s`.
pub(crate) fn orthonormal_compact_basis(y: &QMatrix, seed: u64) -> (CMatrix, usize, Option<BadPath>) {
    let s = y.cols();
    let svd = NativeBackend.svd(&to_full(y));
    let u = &svd.u;
    let part = partition(&svd.sigma);
    let mut basis = JBasis::new();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(s);
    for &g in &part.good {
        match basis.accept(u.col(g).to_vec()) {
            Some(q) => cols.push(q),
            None => cols.extend(basis.select_pivoted(vec![u.col(g + 1).to_vec()], 1)),
        }
    }
    let bad = part.bad_flat();
    let t = s - cols.len();
    let mut path = None;
    if t > 0 {
        let p = choose_path(t, s);
        path = Some(p);
        let mut block = u.select_cols(&bad);
        if block.cols() < 2 * t {
            // Good pairs that collapsed leave their partners unused.
            for j in 0..u.cols() {
                if block.cols() >= 2 * t {
                    break;
                }
                if !bad.contains(&j) {
                    block.push_col(u.col(j));
                }
            }
        }
        let mut got = repair_block(&mut basis, &block, p, seed);
        if got.len() < t {
            let cands = (0..u.cols()).map(|j| u.col(j).to_vec()).collect();
            got.extend(basis.select_pivoted(cands, t - got.len()));
        }
        cols.extend(got);
    }
    let mut hc = CMatrix::zeros(u.rows(), 0);
    for c in cols.iter().take(s) {
        hc.push_col(c);
    }
    (hc, t, path)
}
