//! Random test matrices, two-sketch state with linear updates, and the
//! one-pass QB and truncation stages.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::QuaternionSolver;
use crate::error::{param, shape, Error, Result};
use crate::exec;
use crate::factorizations::{condition_number, qsvd};
use crate::quaternion::QMatrix;
use crate::rangefinders::{Rangefinder, RangefinderMethod, RangefinderReport};
use crate::rng::Stream;

/// Default nonzero probability of the sparse embeddings.
pub const DEFAULT_DENSITY: f64 = 0.1;

/// Distribution of each real plane entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestMatrixKind {
    Gaussian,
    Rademacher,
    SparseGaussian(f64),
    SparseRademacher(f64),
}

impl TestMatrixKind {
    /// Builds a kind from its command-line name.
    pub fn from_name(name: &str, density: f64) -> Result<Self> {
        let k = match name {
            "gaussian" => TestMatrixKind::Gaussian,
            "rademacher" => TestMatrixKind::Rademacher,
            "sparse-gaussian" => TestMatrixKind::SparseGaussian(density),
            "sparse-rademacher" => TestMatrixKind::SparseRademacher(density),
            other => return param(format!("unknown embedding '{other}'")),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestMatrixKind::Gaussian => "gaussian",
            TestMatrixKind::Rademacher => "rademacher",
            TestMatrixKind::SparseGaussian(_) => "sparse-gaussian",
            TestMatrixKind::SparseRademacher(_) => "sparse-rademacher",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            TestMatrixKind::Gaussian => 0,
            TestMatrixKind::Rademacher => 1,
            TestMatrixKind::SparseGaussian(_) => 2,
            TestMatrixKind::SparseRademacher(_) => 3,
        }
    }

    pub fn from_tag(tag: u8, density: f64) -> Result<Self> {
        let k = match tag {
            0 => TestMatrixKind::Gaussian,
            1 => TestMatrixKind::Rademacher,
            2 => TestMatrixKind::SparseGaussian(density),
            3 => TestMatrixKind::SparseRademacher(density),
            t => return param(format!("unknown test matrix tag {t}")),
        };
        k.validate()?;
        Ok(k)
    }

    /// Density; 1 for the dense kinds.
    pub fn density(&self) -> f64 {
        match *self {
            TestMatrixKind::SparseGaussian(d) | TestMatrixKind::SparseRademacher(d) => d,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.density();
        if !(d > 0.0 && d <= 1.0) {
            return param(format!("density must lie in (0, 1], got {d}"));
        }
        Ok(())
    }

    /// Stream words consumed per entry, fixed so entries are addressable.
    fn words(&self) -> u64 {
        match self {
            TestMatrixKind::Gaussian => 2,
            TestMatrixKind::Rademacher => 1,
            TestMatrixKind::SparseGaussian(_) => 3,
            TestMatrixKind::SparseRademacher(_) => 2,
        }
    }

    #[inline]
    fn draw(&self, s: &mut Stream) -> f64 {
        match *self {
            TestMatrixKind::Gaussian => s.normal(),
            TestMatrixKind::Rademacher => s.sign(),
            TestMatrixKind::SparseGaussian(d) => {
                let keep = s.uniform() < d;
                let v = s.normal();
                if keep {
                    v / d.sqrt()
                } else {
                    0.0
                }
            }
            TestMatrixKind::SparseRademacher(d) => {
                let keep = s.uniform() < d;
                let v = s.sign();
                if keep {
                    v / d.sqrt()
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for TestMatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestMatrixKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestMatrixKind::from_name(s, DEFAULT_DENSITY)
    }
}

/// A reproducible random test matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestMatrixSpec {
    pub kind: TestMatrixKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl TestMatrixSpec {
    pub fn new(kind: TestMatrixKind, rows: usize, cols: usize, seed: u64) -> Self {
        TestMatrixSpec { kind, rows, cols, seed }
    }

    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        Self::new(TestMatrixKind::Gaussian, rows, cols, seed)
    }

    pub fn generate(&self) -> QMatrix {
        self.block(0, self.rows, 0, self.cols)
    }

    /// Entries `[r0, r1) x [c0, c1)` of the full matrix.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> QMatrix {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols, "block out of range");
        let (h, w) = (r1 - r0, c1 - c0);
        let mut out = QMatrix::zeros(h, w);
        if h == 0 || w == 0 {
            return out;
        }
        let kind = self.kind;
        let words = kind.words();
        let fill = |plane: usize, dst: &mut [f64]| {
            let mut s = Stream::new(self.seed, plane as u64);
            for (i, row) in dst.chunks_mut(w).enumerate() {
                s.seek(((r0 + i) * self.cols + c0) as u64 * words);
                for v in row.iter_mut() {
                    *v = kind.draw(&mut s);
                }
            }
        };
        let planes = out.planes_mut();
        if exec::parallel_for(h * w * 64) {
            planes.into_par_iter().enumerate().for_each(|(p, d)| fill(p, d));
        } else {
            planes.into_iter().enumerate().for_each(|(p, d)| fill(p, d));
        }
        out
    }
}

/// Generates the matrix described by `spec`.
pub fn gen_test_matrix(spec: &TestMatrixSpec) -> Result<QMatrix> {
    spec.kind.validate()?;
    Ok(spec.generate())
}

/// A test matrix that is either regenerated from a spec or held explicitly.
#[derive(Clone, Debug, PartialEq)]
pub enum TestMatrix {
    Spec(TestMatrixSpec),
    Explicit(QMatrix),
}

impl TestMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            TestMatrix::Spec(s) => (s.rows, s.cols),
            TestMatrix::Explicit(m) => m.shape(),
        }
    }

    pub fn materialize(&self) -> QMatrix {
        match self {
            TestMatrix::Spec(s) => s.generate(),
            TestMatrix::Explicit(m) => m.clone(),
        }
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> QMatrix {
        match self {
            TestMatrix::Spec(s) => s.block(r0, r1, c0, c1),
            TestMatrix::Explicit(m) => m.row_block(r0, r1).col_block(c0, c1),
        }
    }

    pub fn spec(&self) -> Option<&TestMatrixSpec> {
        match self {
            TestMatrix::Spec(s) => Some(s),
            TestMatrix::Explicit(_) => None,
        }
    }
}

/// Target rank `r`, range sketch size `s` and co-range sketch size `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchSizes {
    pub r: usize,
    pub s: usize,
    pub l: usize,
}

impl SketchSizes {
    pub fn new(r: usize, s: usize, l: usize) -> Result<Self> {
        if r == 0 {
            return param("rank must be positive");
        }
        if !(r <= s && s <= l) {
            return param(format!("sketch sizes need r <= s <= l, got r={r}, s={s}, l={l}"));
        }
        Ok(SketchSizes { r, s, l })
    }

    /// `s = r + 5`, `l = 2s` unless given.
    pub fn with_defaults(r: usize, s: Option<usize>, l: Option<usize>) -> Result<Self> {
        let s = s.unwrap_or(r + 5);
        let l = l.unwrap_or(2 * s);
        Self::new(r, s, l)
    }

    pub fn check_fits(&self, m: usize, n: usize) -> Result<()> {
        if self.l > m.min(n) {
            return param(format!("sketch size l={} exceeds min(m, n)={}", self.l, m.min(n)));
        }
        Ok(())
    }
}

/// Embedding distribution and seeds of the two test matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub kind: TestMatrixKind,
    pub omega_seed: u64,
    pub psi_seed: u64,
}

impl EmbeddingConfig {
    pub fn gaussian(omega_seed: u64, psi_seed: u64) -> Self {
        EmbeddingConfig { kind: TestMatrixKind::Gaussian, omega_seed, psi_seed }
    }

    /// Two independent seeds derived from one.
    pub fn from_seed(kind: TestMatrixKind, seed: u64) -> Self {
        EmbeddingConfig {
            kind,
            omega_seed: crate::rng::derive_seed(seed, 0x0e9a),
            psi_seed: crate::rng::derive_seed(seed, 0x951),
        }
    }
}

/// `Y = A Omega` and `W = Psi A`, kept up to date under linear updates.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchState {
    pub y: QMatrix,
    pub w: QMatrix,
    pub omega: TestMatrix,
    pub psi: TestMatrix,
    pub sizes: SketchSizes,
}

/// A linear change to the sketched matrix.
#[derive(Clone, Copy, Debug)]
pub enum SketchDelta<'a> {
    /// `A <- A + delta` with `delta` of the full shape.
    Additive(&'a QMatrix),
    /// Rows `row0..row0 + block.rows()` of `A` receive `block`.
    RowBlock { row0: usize, block: &'a QMatrix },
}

impl SketchState {
    /// Zero sketches of an `m x n` matrix.
    pub fn empty(m: usize, n: usize, sizes: SketchSizes, emb: &EmbeddingConfig) -> Result<Self> {
        emb.kind.validate()?;
        sizes.check_fits(m, n)?;
        Ok(SketchState {
            y: QMatrix::zeros(m, sizes.s),
            w: QMatrix::zeros(sizes.l, n),
            omega: TestMatrix::Spec(TestMatrixSpec::new(emb.kind, n, sizes.s, emb.omega_seed)),
            psi: TestMatrix::Spec(TestMatrixSpec::new(emb.kind, sizes.l, m, emb.psi_seed)),
            sizes,
        })
    }

    /// Zero sketches with explicitly supplied test matrices.
    pub fn empty_with(omega: QMatrix, psi: QMatrix, sizes: SketchSizes) -> Result<Self> {
        let (n, s) = omega.shape();
        let (l, m) = psi.shape();
        if s != sizes.s || l != sizes.l {
            return shape(format!("test matrices {n}x{s} and {l}x{m} do not match s={}, l={}", sizes.s, sizes.l));
        }
        Ok(SketchState {
            y: QMatrix::zeros(m, s),
            w: QMatrix::zeros(l, n),
            omega: TestMatrix::Explicit(omega),
            psi: TestMatrix::Explicit(psi),
            sizes,
        })
    }

    /// Rows and columns of the sketched matrix.
    pub fn source_shape(&self) -> (usize, usize) {
        (self.y.rows(), self.w.cols())
    }

    pub fn omega_spec(&self) -> Option<&TestMatrixSpec> {
        self.omega.spec()
    }

    pub fn psi_spec(&self) -> Option<&TestMatrixSpec> {
        self.psi.spec()
    }

    /// Applies a linear update in place.
    pub fn apply(&mut self, delta: SketchDelta<'_>) -> Result<()> {
        let (m, n) = self.source_shape();
        match delta {
            SketchDelta::Additive(d) => {
                if d.shape() != (m, n) {
                    return shape(format!("update is {:?}, sketched matrix is {m}x{n}", d.shape()));
                }
                self.y.mul_acc(d, &self.omega.materialize())?;
                self.w.mul_acc(&self.psi.materialize(), d)?;
            }
            SketchDelta::RowBlock { row0, block } => {
                let r1 = row0 + block.rows();
                if block.cols() != n || r1 > m {
                    return shape(format!("row block {:?} at row {row0} does not fit {m}x{n}", block.shape()));
                }
                let mut yb = self.y.row_block(row0, r1);
                yb.mul_acc(block, &self.omega.materialize())?;
                self.y.set_row_block(row0, &yb)?;
                let psi_cols = self.psi.block(0, self.sizes.l, row0, r1);
                self.w.mul_acc(&psi_cols, block)?;
            }
        }
        Ok(())
    }
}

/// Functional form of [`SketchState::apply`].
pub fn sketch_update(state: &SketchState, delta: SketchDelta<'_>) -> Result<SketchState> {
    let mut s = state.clone();
    s.apply(delta)?;
    Ok(s)
}

/// Sketches `A` with Gaussian test matrices.
pub fn make_sketch(a: &QMatrix, sizes: SketchSizes, omega_seed: u64, psi_seed: u64) -> Result<SketchState> {
    make_sketch_with(a, sizes, &EmbeddingConfig::gaussian(omega_seed, psi_seed))
}

pub fn make_sketch_with(a: &QMatrix, sizes: SketchSizes, emb: &EmbeddingConfig) -> Result<SketchState> {
    let (m, n) = a.shape();
    let mut st = SketchState::empty(m, n, sizes, emb)?;
    st.apply(SketchDelta::Additive(a))?;
    Ok(st)
}

/// Sketches `A` with caller-supplied `Omega` and `Psi`.
pub fn make_sketch_injected(a: &QMatrix, sizes: SketchSizes, omega: QMatrix, psi: QMatrix) -> Result<SketchState> {
    if omega.rows() != a.cols() || psi.cols() != a.rows() {
        return shape("test matrices do not conform with A");
    }
    let mut st = SketchState::empty_with(omega, psi, sizes)?;
    st.apply(SketchDelta::Additive(a))?;
    Ok(st)
}

/// Row-block access to a matrix that may live outside memory.
pub trait MatrixSource {
    fn shape(&self) -> (usize, usize);
    fn read_rows(&mut self, r0: usize, r1: usize) -> Result<QMatrix>;
}

impl MatrixSource for QMatrix {
    fn shape(&self) -> (usize, usize) {
        QMatrix::shape(self)
    }
    fn read_rows(&mut self, r0: usize, r1: usize) -> Result<QMatrix> {
        Ok(self.row_block(r0, r1))
    }
}

impl<T: MatrixSource + ?Sized> MatrixSource for &mut T {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn read_rows(&mut self, r0: usize, r1: usize) -> Result<QMatrix> {
        (**self).read_rows(r0, r1)
    }
}

/// Sketches a source by streaming row blocks of at most `block_rows` rows.
pub fn sketch_source(
    src: &mut dyn MatrixSource,
    sizes: SketchSizes,
    emb: &EmbeddingConfig,
    block_rows: usize,
) -> Result<SketchState> {
    if block_rows == 0 {
        return param("block_rows must be positive");
    }
    let (m, n) = src.shape();
    let mut st = SketchState::empty(m, n, sizes, emb)?;
    let mut r0 = 0;
    while r0 < m {
        let r1 = (r0 + block_rows).min(m);
        let block = src.read_rows(r0, r1)?;
        st.apply(SketchDelta::RowBlock { row0: r0, block: &block })?;
        r0 = r1;
    }
    Ok(st)
}

/// Output of the QB stage: `A ~ H X`.
#[derive(Clone, Debug)]
pub struct QbOutput {
    pub h: QMatrix,
    pub x: QMatrix,
    pub report: RangefinderReport,
    pub rangefinder_secs: f64,
    pub solve_secs: f64,
}

/// `H = rangefinder(Y)` and `X = argmin ||(Psi H) X - W||_F`.
pub fn qb_stage(state: &SketchState, rangefinder: &Rangefinder) -> Result<QbOutput> {
    qb_stage_with(state, rangefinder, false)
}

/// [`qb_stage`]; with `fallback`, a rank-deficient sketch under pseudo-QR is
/// retried with pseudo-SVD.
pub fn qb_stage_with(state: &SketchState, rangefinder: &Rangefinder, fallback: bool) -> Result<QbOutput> {
    let t0 = Instant::now();
    let report = match rangefinder.apply(&state.y) {
        Err(Error::RankDeficient(_)) if fallback && rangefinder.method() == RangefinderMethod::PseudoQr => {
            Rangefinder::pseudo_svd().apply(&state.y)?
        }
        other => other?,
    };
    let t1 = Instant::now();
    let psi_h = state.psi.materialize().matmul(&report.h)?;
    let x = QuaternionSolver::new(&psi_h)?.solve(&state.w)?;
    let t2 = Instant::now();
    Ok(QbOutput {
        h: report.h.clone(),
        x,
        report,
        rangefinder_secs: (t1 - t0).as_secs_f64(),
        solve_secs: (t2 - t1).as_secs_f64(),
    })
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub sketch: f64,
    pub rangefinder: f64,
    pub solve: f64,
    pub truncate: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.sketch + self.rangefinder + self.solve + self.truncate
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Rangefinder that produced `H`.
    pub rangefinder: RangefinderMethod,
    pub kappa_h: f64,
    pub correction_steps: usize,
    /// `||A - H X||_F / ||A||_F`, when `A` is available.
    pub qb_residual: Option<f64>,
    /// `||A - H diag(sigma) V*||_F / ||A||_F`, when `A` is available.
    pub relative_error: Option<f64>,
    pub timings: StageTimings,
}

/// Rank-`r` factors `A ~ H diag(sigma) V*`.
#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub h: QMatrix,
    pub sigma: Vec<f64>,
    pub v: QMatrix,
    pub diagnostics: Diagnostics,
}

impl ApproxResult {
    /// `H diag(sigma) V*`.
    pub fn reconstruct(&self) -> QMatrix {
        self.h.scale_cols(&self.sigma).matmul(&self.v.adjoint()).expect("conforming factors")
    }
}

/// Keeps the leading `r` singular triplets of `X` and maps them through `H`.
pub fn truncate_stage(h: &QMatrix, x: &QMatrix, r: usize) -> Result<ApproxResult> {
    if h.cols() != x.rows() {
        return shape(format!("H has {} columns, X has {} rows", h.cols(), x.rows()));
    }
    if r == 0 || r > x.rows() {
        return param(format!("rank {r} must lie in 1..={}", x.rows()));
    }
    let t0 = Instant::now();
    let f = qsvd(x).truncate(r);
    let hu = h.matmul(&f.u)?;
    let secs = t0.elapsed().as_secs_f64();
    Ok(ApproxResult {
        h: hu,
        sigma: f.sigma,
        v: f.v,
        diagnostics: Diagnostics {
            rangefinder: RangefinderMethod::PseudoSvd,
            kappa_h: condition_number(h),
            correction_steps: 0,
            qb_residual: None,
            relative_error: None,
            timings: StageTimings { truncate: secs, ..Default::default() },
        },
    })
}

/// Parameters of the one-pass pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnePassConfig {
    pub sizes: SketchSizes,
    pub rangefinder: Rangefinder,
    pub embedding: EmbeddingConfig,
    /// Retry with pseudo-SVD when pseudo-QR reports a rank-deficient sketch.
    pub fallback_to_svd: bool,
}

impl OnePassConfig {
    /// Defaults `s = r + 5`, `l = 2s`, pseudo-QR, Gaussian embeddings.
    pub fn new(r: usize, seed: u64) -> Result<Self> {
        Ok(OnePassConfig {
            sizes: SketchSizes::with_defaults(r, None, None)?,
            rangefinder: Rangefinder::pseudo_qr(),
            embedding: EmbeddingConfig::from_seed(TestMatrixKind::Gaussian, seed),
            fallback_to_svd: true,
        })
    }
}

/// Rank-`r` approximation from an existing sketch; never touches `A`.
/// Pseudo-QR falls back to pseudo-SVD on a rank-deficient sketch.
pub fn approx_from_sketch(state: &SketchState, rangefinder: &Rangefinder, r: usize) -> Result<ApproxResult> {
    if r > state.sizes.s {
        return param(format!("rank {r} exceeds sketch size s={}", state.sizes.s));
    }
    let qb = qb_stage_with(state, rangefinder, true)?;
    let mut out = truncate_stage(&qb.h, &qb.x, r)?;
    out.diagnostics.rangefinder = qb.report.method;
    out.diagnostics.kappa_h = qb.report.kappa_after;
    out.diagnostics.correction_steps = qb.report.correction_steps_used;
    out.diagnostics.timings.rangefinder = qb.rangefinder_secs;
    out.diagnostics.timings.solve = qb.solve_secs;
    Ok(out)
}

/// Sketch, QB and truncation in one go, with error diagnostics against `A`.
pub fn one_pass_approx(a: &QMatrix, cfg: &OnePassConfig) -> Result<ApproxResult> {
    let t0 = Instant::now();
    let state = make_sketch_with(a, cfg.sizes, &cfg.embedding)?;
    let sketch_secs = t0.elapsed().as_secs_f64();
    let qb = qb_stage_with(&state, &cfg.rangefinder, cfg.fallback_to_svd)?;
    let mut out = truncate_stage(&qb.h, &qb.x, cfg.sizes.r)?;
    out.diagnostics.rangefinder = qb.report.method;
    let an = a.fro_norm();
    let rel = |e: f64| if an > 0.0 { e / an } else { e };
    let hx = qb.h.matmul(&qb.x)?;
    out.diagnostics.qb_residual = Some(rel(a.sub(&hx)?.fro_norm()));
    out.diagnostics.relative_error = Some(rel(a.sub(&out.reconstruct())?.fro_norm()));
    out.diagnostics.kappa_h = qb.report.kappa_after;
    out.diagnostics.correction_steps = qb.report.correction_steps_used;
    out.diagnostics.timings.sketch = sketch_secs;
    out.diagnostics.timings.rangefinder = qb.rangefinder_secs;
    out.diagnostics.timings.solve = qb.solve_secs;
    Ok(out)
}
