//! Error metrics, closed-form bounds and Monte Carlo checks.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, shape, Error, Result};
use crate::exec;
use crate::factorizations::{qsvd, singular_values};
use crate::quaternion::QMatrix;
use crate::rng::derive_seed;
use crate::sketching::{ApproxResult, TestMatrixKind, TestMatrixSpec};

/// `||A - H diag(sigma) V*||_F / ||A||_F`.
pub fn relative_error(a: &QMatrix, approx: &ApproxResult) -> Result<f64> {
    let an = a.fro_norm();
    if an == 0.0 {
        return Err(Error::ZeroNorm("relative error of a zero matrix".into()));
    }
    let r = approx.reconstruct();
    if r.shape() != a.shape() {
        return shape(format!("approximation is {:?}, matrix is {:?}", r.shape(), a.shape()));
    }
    Ok(a.sub(&r)?.fro_norm() / an)
}

/// Orthonormal basis of `range(a)`; fails unless `a` has full column rank.
pub fn orthonormal_range(a: &QMatrix) -> Result<QMatrix> {
    let n = a.cols();
    let f = qsvd(a);
    let smax = f.sigma.first().copied().unwrap_or(0.0);
    let tol = a.rows().max(n) as f64 * f64::EPSILON * smax;
    let rank = f.sigma.iter().filter(|&&s| s > tol).count();
    if rank < n || smax == 0.0 {
        return Err(Error::RankDeficient(format!("numerical rank {rank} < {n} columns")));
    }
    Ok(f.u)
}

/// `||H H^+ - Y Y^+||_F`, from orthonormal bases `P`, `Q` of the two ranges
/// as `sqrt(||P - Q Q* P||^2 + ||Q - P P* Q||^2)`.
pub fn range_distance(h: &QMatrix, y: &QMatrix) -> Result<f64> {
    if h.rows() != y.rows() {
        return shape(format!("H has {} rows, Y has {}", h.rows(), y.rows()));
    }
    let p = orthonormal_range(h)?;
    let q = orthonormal_range(y)?;
    let off = |a: &QMatrix, b: &QMatrix| -> Result<f64> {
        let proj = b.matmul(&b.adjoint().matmul(a)?)?;
        Ok(a.sub(&proj)?.fro_norm_sqr())
    };
    Ok((off(&p, &q)? + off(&q, &p)?).sqrt())
}

/// Partition of a spectrum at rank `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTail {
    pub sigma: Vec<f64>,
    pub r: usize,
    /// `||Sigma_2||_F`.
    pub tail_fro: f64,
    /// `sigma_{r+1}`, zero when there is none.
    pub tail_spec: f64,
}

impl SpectrumTail {
    pub fn new(sigma: &[f64], r: usize) -> Self {
        let tail = sigma.get(r..).unwrap_or(&[]);
        SpectrumTail {
            sigma: sigma.to_vec(),
            r,
            tail_fro: tail.iter().map(|s| s * s).sum::<f64>().sqrt(),
            tail_spec: tail.first().copied().unwrap_or(0.0),
        }
    }
}

/// `f(n, m) = 4n / (4(m - n) + 2)`.
pub fn f_ratio(n: usize, m: usize) -> f64 {
    4.0 * n as f64 / (4.0 * (m as f64 - n as f64) + 2.0)
}

fn check_sizes(r: usize, s: usize, l: usize) -> Result<()> {
    if !(r < s && s < l) {
        return param(format!("bound needs r < s < l, got r={r}, s={s}, l={l}"));
    }
    Ok(())
}

/// `(1 + f(s, l))(1 + f(r, s)) * tail_fro^2`, the expected squared QB error
/// bound for Gaussian test matrices.
pub fn gaussian_qb_bound(r: usize, s: usize, l: usize, tail_fro: f64) -> Result<f64> {
    check_sizes(r, s, l)?;
    Ok((1.0 + f_ratio(s, l)) * (1.0 + f_ratio(r, s)) * tail_fro * tail_fro)
}

/// Same bound as `(2l+1)/(2(l-s)+1) * (2s+1)/(2(s-r)+1) * tail_fro^2`.
pub fn gaussian_qb_bound_closed(r: usize, s: usize, l: usize, tail_fro: f64) -> Result<f64> {
    check_sizes(r, s, l)?;
    let (r, s, l) = (r as f64, s as f64, l as f64);
    Ok((2.0 * l + 1.0) / (2.0 * (l - s) + 1.0) * (2.0 * s + 1.0) / (2.0 * (s - r) + 1.0) * tail_fro * tail_fro)
}

/// `((1 + kappa) sqrt((1 + f(s,l))(1 + f(r,s))) + kappa) * tail_fro`.
pub fn fixed_rank_bound(r: usize, s: usize, l: usize, kappa_h: f64, tail_fro: f64) -> Result<f64> {
    check_sizes(r, s, l)?;
    if !(kappa_h >= 1.0) {
        return param(format!("kappa_H must be at least 1, got {kappa_h}"));
    }
    let c = ((1.0 + f_ratio(s, l)) * (1.0 + f_ratio(r, s))).sqrt();
    Ok(((1.0 + kappa_h) * c + kappa_h) * tail_fro)
}

/// Bounds next to an empirical mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub r: usize,
    pub s: usize,
    pub l: usize,
    pub kappa_h: f64,
    pub qb_bound: f64,
    pub fixed_rank_bound: f64,
    pub empirical_mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl BoundReport {
    pub fn new(r: usize, s: usize, l: usize, kappa_h: f64, tail_fro: f64, samples: &[f64]) -> Result<Self> {
        let (mean, se) = mean_std_err(samples);
        Ok(BoundReport {
            r,
            s,
            l,
            kappa_h,
            qb_bound: gaussian_qb_bound(r, s, l, tail_fro)?,
            fixed_rank_bound: fixed_rank_bound(r, s, l, kappa_h.max(1.0), tail_fro)?,
            empirical_mean: mean,
            std_err: se,
            trials: samples.len(),
        })
    }

    /// Mean squared QB error against the bound inflated by `1 + 3/sqrt(trials)`.
    pub fn qb_check(&self) -> CheckReport {
        let slack = 1.0 + 3.0 / (self.trials.max(1) as f64).sqrt();
        CheckReport {
            metric: format!("qb_mean_sq_error_r{}_s{}_l{}", self.r, self.s, self.l),
            theory: self.qb_bound,
            empirical: self.empirical_mean,
            std_err: self.std_err,
            trials: self.trials,
            pass: self.empirical_mean <= self.qb_bound * slack,
        }
    }
}

/// One row of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub metric: String,
    pub theory: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub trials: usize,
    pub pass: bool,
}

impl CheckReport {
    /// Passes when `|empirical - theory| <= 3 std_err`.
    pub fn three_sigma(metric: impl Into<String>, theory: f64, samples: &[f64]) -> Self {
        let (mean, se) = mean_std_err(samples);
        CheckReport {
            metric: metric.into(),
            theory,
            empirical: mean,
            std_err: se,
            trials: samples.len(),
            pass: (mean - theory).abs() <= 3.0 * se + 1e-12 * theory.abs(),
        }
    }
}

/// CSV column order of [`CheckReport`].
pub const CHECK_CSV_HEADER: [&str; 6] = ["metric", "theory", "empirical", "std_err", "trials", "pass"];

/// Writes reports as CSV with [`CHECK_CSV_HEADER`].
pub fn write_checks_csv<W: Write>(out: W, rows: &[CheckReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CHECK_CSV_HEADER).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Sample mean and its standard error.
pub fn mean_std_err(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Empirical quantile with linear interpolation, `q` in `[0, 1]`.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    v[i] + (pos - i as f64) * (v[j] - v[i])
}

/// Runs `f(trial_seed)` for each trial; results are in trial order.
fn run_trials<T: Send>(trials: usize, seed: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let seeds: Vec<u64> = (0..trials as u64).map(|t| derive_seed(seed, t)).collect();
    if exec::is_serial() {
        seeds.into_iter().map(&f).collect()
    } else {
        seeds.into_par_iter().map(&f).collect()
    }
}

/// `E ||S G T||_F^2 = 4 ||S||_F^2 ||T||_F^2` for quaternion Gaussian `G`.
pub fn mc_check_sgt(s: &QMatrix, t: &QMatrix, trials: usize, seed: u64) -> Result<CheckReport> {
    if trials < 100 {
        return param(format!("at least 100 trials needed, got {trials}"));
    }
    let (gr, gc) = (s.cols(), t.rows());
    let samples: Vec<f64> = run_trials(trials, seed, |ts| {
        let g = TestMatrixSpec::gaussian(gr, gc, ts).generate();
        s.matmul(&g).and_then(|sg| sg.matmul(t)).map(|m| m.fro_norm_sqr()).unwrap_or(f64::NAN)
    });
    let theory = 4.0 * s.fro_norm_sqr() * t.fro_norm_sqr();
    let metric = format!("sgt_{}x{}_{}x{}", s.rows(), s.cols(), t.rows(), t.cols());
    Ok(CheckReport::three_sigma(metric, theory, &samples))
}

/// `E ||G^+||_F^2 = m / (4(n - m) + 2)` for an `m x n` quaternion Gaussian.
pub fn mc_check_pinv_norm(m: usize, n: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    if !(0 < m && m < n) {
        return param(format!("need 0 < m < n, got m={m}, n={n}"));
    }
    if trials < 200 {
        return param(format!("at least 200 trials needed, got {trials}"));
    }
    let samples: Vec<f64> = run_trials(trials, seed, |ts| {
        let g = TestMatrixSpec::gaussian(m, n, ts).generate();
        singular_values(&g).iter().map(|s| 1.0 / (s * s)).sum()
    });
    Ok(CheckReport::three_sigma(format!("pinv_norm_{m}x{n}"), pinv_norm_theory(m, n), &samples))
}

/// `m / (4(n - m) + 2)`.
pub fn pinv_norm_theory(m: usize, n: usize) -> f64 {
    m as f64 / (4.0 * (n as f64 - m as f64) + 2.0)
}

/// Extreme singular values of tall random quaternion matrices, scaled by
/// `2 sqrt(N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeReport {
    pub big_n: usize,
    pub n: usize,
    pub kind: TestMatrixKind,
    pub min_ratios: Vec<f64>,
    pub max_ratios: Vec<f64>,
    /// `1 - C_fit sqrt(n/N) - slack`.
    pub lower_envelope: f64,
    /// `1 + C_fit sqrt(n/N) + slack`.
    pub upper_envelope: f64,
    pub pass: bool,
}

impl ExtremeReport {
    /// True when every ratio lies in `[lo, hi]`.
    pub fn all_within(&self, lo: f64, hi: f64) -> bool {
        self.min_ratios.iter().chain(&self.max_ratios).all(|&r| (lo..=hi).contains(&r))
    }

    pub fn rows(&self) -> Vec<CheckReport> {
        let tag = format!("{}_{}x{}", self.kind.name(), self.big_n, self.n);
        let lo = self.min_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.max_ratios.iter().cloned().fold(0.0, f64::max);
        let (_, se_lo) = mean_std_err(&self.min_ratios);
        let (_, se_hi) = mean_std_err(&self.max_ratios);
        vec![
            CheckReport {
                metric: format!("smin_ratio_floor_{tag}"),
                theory: self.lower_envelope,
                empirical: lo,
                std_err: se_lo,
                trials: self.min_ratios.len(),
                pass: lo >= self.lower_envelope,
            },
            CheckReport {
                metric: format!("smax_ratio_ceiling_{tag}"),
                theory: self.upper_envelope,
                empirical: hi,
                std_err: se_hi,
                trials: self.max_ratios.len(),
                pass: hi <= self.upper_envelope,
            },
        ]
    }
}

/// Empirical constant of the extreme singular value envelope.
pub const C_FIT: f64 = 2.0;
/// Additive slack of the envelope.
pub const ENVELOPE_SLACK: f64 = 0.1;

pub fn mc_extreme_singvals(
    big_n: usize,
    n: usize,
    trials: usize,
    seed: u64,
    kind: TestMatrixKind,
) -> Result<ExtremeReport> {
    if n == 0 || big_n <= 4 * n {
        return param(format!("need N > 4n, got N={big_n}, n={n}"));
    }
    kind.validate()?;
    let scale = 2.0 * (big_n as f64).sqrt();
    let pairs: Vec<(f64, f64)> = run_trials(trials, seed, |ts| {
        let g = TestMatrixSpec::new(kind, big_n, n, ts).generate();
        let s = singular_values(&g);
        (s[s.len() - 1] / scale, s[0] / scale)
    });
    let spread = C_FIT * (n as f64 / big_n as f64).sqrt() + ENVELOPE_SLACK;
    let (min_ratios, max_ratios): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let mut rep = ExtremeReport {
        big_n,
        n,
        kind,
        min_ratios,
        max_ratios,
        lower_envelope: 1.0 - spread,
        upper_envelope: 1.0 + spread,
        pass: false,
    };
    rep.pass = rep.all_within(rep.lower_envelope, rep.upper_envelope);
    Ok(rep)
}

/// Distribution of `||A V Omega||_F / (2 sqrt(s) ||A||_F)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvOmegaReport {
    pub s: usize,
    pub ratios: Vec<f64>,
    pub median: f64,
    pub p99: f64,
}

/// Samples the scaled norm of `A V Omega` over Gaussian `Omega`.
pub fn mc_check_avomega(a: &QMatrix, v: &QMatrix, s: usize, trials: usize, seed: u64) -> Result<AvOmegaReport> {
    if a.cols() != v.rows() {
        return shape(format!("A is {:?}, V is {:?}", a.shape(), v.shape()));
    }
    if s == 0 {
        return param("s must be positive");
    }
    let gram = v.matmul(&v.adjoint())?;
    let dev = gram.sub(&QMatrix::identity(v.rows()))?.fro_norm();
    if dev > 1e-8 {
        return Err(Error::Precondition(format!("V is not row-orthonormal, ||VV* - I||_F = {dev:.2e}")));
    }
    let an = a.fro_norm();
    let av = a.matmul(v)?;
    let denom = 2.0 * (s as f64).sqrt() * an;
    let ratios: Vec<f64> = run_trials(trials, seed, |ts| {
        if an == 0.0 {
            return 0.0;
        }
        let om = TestMatrixSpec::gaussian(av.cols(), s, ts).generate();
        av.matmul(&om).map(|m| m.fro_norm() / denom).unwrap_or(f64::NAN)
    });
    Ok(AvOmegaReport { s, median: quantile(&ratios, 0.5), p99: quantile(&ratios, 0.99), ratios })
}

/// Runs [`mc_check_avomega`] over a grid of `s` and checks that the 99th
/// percentile grows no faster than `sqrt(log(s * d))`, `d = min(dims)`.
pub fn mc_avomega_scaling(
    a: &QMatrix,
    v: &QMatrix,
    grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<(Vec<AvOmegaReport>, bool)> {
    let d = a.rows().min(v.cols()).max(2) as f64;
    let mut reps = Vec::with_capacity(grid.len());
    for (i, &s) in grid.iter().enumerate() {
        reps.push(mc_check_avomega(a, v, s, trials, derive_seed(seed, i as u64))?);
    }
    let ok = reps.windows(2).all(|w| {
        let growth = ((w[1].s as f64 * d).ln() / (w[0].s as f64 * d).ln()).sqrt();
        w[1].p99 <= w[0].p99 * growth + 1e-12
    });
    Ok((reps, ok))
}

/// Terms of `||A - HX||_F^2 = ||A - QQ*A||_F^2 + ||(Psi Q)^+ Psi (A - QQ*A)||_F^2`
/// for an orthonormal basis `Q` of `range(Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QbDecomposition {
    pub projection_sq: f64,
    pub sketch_sq: f64,
}

impl QbDecomposition {
    pub fn total(&self) -> f64 {
        self.projection_sq + self.sketch_sq
    }
}

pub fn qb_decomposition(a: &QMatrix, y: &QMatrix, psi: &QMatrix) -> Result<QbDecomposition> {
    let q = orthonormal_range(y)?;
    let resid = a.sub(&q.matmul(&q.adjoint().matmul(a)?)?)?;
    let psi_q = psi.matmul(&q)?;
    let z = crate::bridge::solve_quaternion_linear(&psi_q, &psi.matmul(&resid)?)?;
    Ok(QbDecomposition { projection_sq: resid.fro_norm_sqr(), sketch_sq: z.fro_norm_sqr() })
}
