//! Test matrices with planted spectra, and RGB images as pure quaternions.

use serde::{Deserialize, Serialize};

use crate::error::{param, shape, Error, Result};
use crate::factorizations::QsvdFactors;
use crate::quaternion::{QMatrix, Quaternion};
use crate::rng::{derive_seed, Stream};
use crate::sketching::TestMatrixSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param")]
pub enum SpectrumKind {
    /// `diag(1, ..., 1, 0, ..., 0)` plus `xi / n` times a Gaussian matrix.
    LowRankPlusNoise(f64),
    /// `(1, ..., 1, 2^-p, 3^-p, ...)`.
    PolyDecay(f64),
    /// `(1, ..., 1, 10^-q, 10^-2q, ...)`.
    ExpDecay(f64),
}

impl SpectrumKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpectrumKind::LowRankPlusNoise(_) => "lowrank-noise",
            SpectrumKind::PolyDecay(_) => "pds",
            SpectrumKind::ExpDecay(_) => "eds",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            SpectrumKind::LowRankPlusNoise(v) | SpectrumKind::PolyDecay(v) | SpectrumKind::ExpDecay(v) => v,
        }
    }

    pub fn from_name(name: &str, value: f64) -> Result<Self> {
        match name {
            "lowrank-noise" => Ok(SpectrumKind::LowRankPlusNoise(value)),
            "pds" => Ok(SpectrumKind::PolyDecay(value)),
            "eds" => Ok(SpectrumKind::ExpDecay(value)),
            other => param(format!("unknown spectrum '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub m: usize,
    pub n: usize,
    /// Number of leading unit singular values.
    pub big_r: usize,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn new(kind: SpectrumKind, m: usize, n: usize, big_r: usize, seed: u64) -> Self {
        SpectrumSpec { kind, m, n, big_r, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.big_r <= self.n && self.n <= self.m) {
            return param(format!("need R <= n <= m, got R={}, n={}, m={}", self.big_r, self.n, self.m));
        }
        if self.n == 0 {
            return param("n must be positive");
        }
        let v = self.kind.parameter();
        if !(v > 0.0 && v.is_finite()) {
            return param(format!("spectrum parameter must be positive, got {v}"));
        }
        Ok(())
    }

    /// The planted singular values (for low rank plus noise, those of the
    /// noiseless part).
    pub fn sigma(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (n, r) = (self.n, self.big_r);
        Ok((0..n)
            .map(|i| {
                if i < r {
                    return 1.0;
                }
                let k = (i - r + 1) as f64;
                match self.kind {
                    SpectrumKind::LowRankPlusNoise(_) => 0.0,
                    SpectrumKind::PolyDecay(p) => (k + 1.0).powf(-p),
                    SpectrumKind::ExpDecay(q) => 10f64.powf(-k * q),
                }
            })
            .collect())
    }
}

/// `rows x cols` matrix with orthonormal columns, `rows >= cols`, from a
/// seeded quaternion Gaussian.
pub fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> Result<QMatrix> {
    if cols > rows {
        return param(format!("cannot fit {cols} orthonormal columns in dimension {rows}"));
    }
    orthonormalize(&TestMatrixSpec::gaussian(rows, cols, seed).generate())
}

/// Block Gram-Schmidt with reorthogonalization in quaternion arithmetic.
/// Fails if a column is numerically dependent on the previous ones.
pub fn orthonormalize(a: &QMatrix) -> Result<QMatrix> {
    const BLOCK: usize = 32;
    let (m, n) = a.shape();
    let mut q = QMatrix::zeros(m, 0);
    let mut c0 = 0;
    while c0 < n {
        let c1 = (c0 + BLOCK).min(n);
        let mut b = a.col_block(c0, c1);
        let norms: Vec<f64> = (0..c1 - c0).map(|j| b.col_block(j, j + 1).fro_norm()).collect();
        if q.cols() > 0 {
            for _ in 0..2 {
                let c = q.adjoint().matmul(&b)?;
                b = b.lincomb(1.0, &q.matmul(&c)?, -1.0)?;
            }
        }
        for j in 0..c1 - c0 {
            let mut v = b.col_block(j, j + 1);
            if j > 0 {
                let qb = q.col_block(c0, c0 + j);
                for _ in 0..2 {
                    let c = qb.adjoint().matmul(&v)?;
                    v = v.lincomb(1.0, &qb.matmul(&c)?, -1.0)?;
                }
            }
            let nv = v.fro_norm();
            if !(nv > 1e-10 * norms[j]) {
                return Err(Error::RankDeficient(format!("column {} is numerically dependent", c0 + j)));
            }
            q = q.hcat(&v.scale(1.0 / nv))?;
        }
        c0 = c1;
    }
    Ok(q)
}

/// `U diag(sigma) V*` with random orthonormal `U` (`m x k`) and `V`
/// (`n x k`), `k = sigma.len()`.
pub fn planted_matrix(m: usize, n: usize, sigma: &[f64], seed: u64) -> Result<(QMatrix, QsvdFactors)> {
    let k = sigma.len();
    if k > m.min(n) {
        return param(format!("{k} singular values do not fit {m}x{n}"));
    }
    let u = random_orthonormal(m, k, derive_seed(seed, 1))?;
    let v = random_orthonormal(n, k, derive_seed(seed, 2))?;
    let a = u.scale_cols(sigma).matmul(&v.adjoint())?;
    Ok((a, QsvdFactors { u, sigma: sigma.to_vec(), v }))
}

/// `U diag(sigma) P` with random orthonormal `U` and `P` a random column
/// permutation with unit quaternion phases; its columns are mutually
/// orthogonal, so the range is known to working accuracy for any spread
/// of `sigma`.
pub fn graded_matrix(m: usize, sigma: &[f64], seed: u64) -> Result<QMatrix> {
    let k = sigma.len();
    let u = random_orthonormal(m, k, derive_seed(seed, 1))?;
    let mut rng = Stream::new(derive_seed(seed, 4), 0);
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    let mut p = QMatrix::zeros(k, k);
    for (j, &i) in perm.iter().enumerate() {
        let q = Quaternion::new(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        p.set(i, j, q.scale(1.0 / q.norm()));
    }
    u.scale_cols(sigma).matmul(&p)
}

/// Benchmark matrix and its ground-truth factors.
pub fn synth_matrix(spec: &SpectrumSpec) -> Result<(QMatrix, QsvdFactors)> {
    let sigma = spec.sigma()?;
    let (mut a, truth) = planted_matrix(spec.m, spec.n, &sigma, spec.seed)?;
    if let SpectrumKind::LowRankPlusNoise(xi) = spec.kind {
        let e = TestMatrixSpec::gaussian(spec.n, spec.n, derive_seed(spec.seed, 3)).generate();
        let noise = truth.u.matmul(&e)?.matmul(&truth.v.adjoint())?;
        a = a.lincomb(1.0, &noise, xi / spec.n as f64)?;
    }
    Ok((a, truth))
}

/// Row-major `rows x cols x 3` image with channels in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pixels {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Pixels {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * channels {
            return shape(format!("{} samples for a {rows}x{cols}x{channels} image", data.len()));
        }
        Ok(Pixels { rows, cols, channels, data })
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.cols + j) * self.channels + c]
    }

    /// Samples quantized to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_u8(rows: usize, cols: usize, channels: usize, data: &[u8]) -> Result<Self> {
        Self::new(rows, cols, channels, data.iter().map(|&b| b as f64 / 255.0).collect())
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// RGB channels into the `x, y, z` planes of a pure quaternion matrix.
pub fn image_to_qmatrix(p: &Pixels) -> Result<QMatrix> {
    if p.channels != 3 {
        return shape(format!("expected 3 channels, got {}", p.channels));
    }
    Ok(QMatrix::from_fn(p.rows, p.cols, |i, j| Quaternion::new(0.0, p.get(i, j, 0), p.get(i, j, 1), p.get(i, j, 2))))
}

/// Inverse of [`image_to_qmatrix`]; samples are clamped to `[0, 1]` and the
/// number of clamped samples is returned.
pub fn qmatrix_to_image(a: &QMatrix) -> (Pixels, usize) {
    let (m, n) = a.shape();
    let [_, x, y, z] = a.planes();
    let mut clamped = 0;
    let mut data = Vec::with_capacity(3 * m * n);
    for k in 0..m * n {
        for v in [x[k], y[k], z[k]] {
            let c = v.clamp(0.0, 1.0);
            if c != v {
                clamped += 1;
            }
            data.push(c);
        }
    }
    (Pixels { rows: m, cols: n, channels: 3, data }, clamped)
}

/// Peak signal to noise ratio of 8-bit quantized images, peak 255.
pub fn psnr_8bit(reference: &Pixels, test: &Pixels) -> Result<f64> {
    if reference.data.len() != test.data.len() {
        return shape("images differ in size");
    }
    let mse = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(&a, &b)| {
            let d = quantize(a) as f64 - quantize(b) as f64;
            d * d
        })
        .sum::<f64>()
        / reference.data.len().max(1) as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0 * 255.0 / mse).log10() })
}

/// Rank-one image `a_i b_j c` with smooth profiles and channel weights `c`.
pub fn rank_one_image(rows: usize, cols: usize) -> Pixels {
    let a = |i: usize| 0.3 + 0.7 * (i as f64 + 0.5) / rows as f64;
    let b = |j: usize| 0.5 + 0.5 * (std::f64::consts::PI * j as f64 / cols.max(1) as f64).sin();
    let c = [0.9, 0.6, 0.3];
    let mut data = Vec::with_capacity(rows * cols * 3);
    for i in 0..rows {
        for j in 0..cols {
            data.extend(c.iter().map(|w| a(i) * b(j) * w));
        }
    }
    Pixels { rows, cols, channels: 3, data }
}
