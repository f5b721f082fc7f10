//! Verification suites run by `qlra verify`.

use anyhow::Result;
use clap::ValueEnum;
use rayon::prelude::*;

use qlra::analysis::{
    mc_avomega_scaling, mc_check_pinv_norm, mc_check_sgt, mc_extreme_singvals, range_distance, BoundReport,
    CheckReport, SpectrumTail,
};
use qlra::rng::derive_seed;
use qlra::sketching::{qb_stage_with, truncate_stage};
use qlra::synthetic::{graded_matrix, planted_matrix, random_orthonormal, synth_matrix, SpectrumKind, SpectrumSpec};
use qlra::{
    condition_number, exec, make_sketch_with, EmbeddingConfig, QMatrix, Rangefinder, SketchSizes, TestMatrixKind,
    TestMatrixSpec,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    GaussianBounds,
    Lemmas,
    Extreme,
    Rangefinder,
    Avomega,
    All,
}

/// Runs `f` over trial indices, in parallel unless serial mode is on.
fn trials_map<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    if exec::is_serial() {
        (0..n as u64).map(&f).collect()
    } else {
        (0..n as u64).into_par_iter().map(&f).collect()
    }
}

fn max_of(x: &[f64]) -> f64 {
    // NaN (a failed trial) must propagate into a failed check.
    x.iter().fold(0.0, |m: f64, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// A worst-case row: passes when the largest sample is at most `limit`.
fn ceiling(metric: impl Into<String>, limit: f64, samples: &[f64]) -> CheckReport {
    let worst = max_of(samples);
    CheckReport {
        metric: metric.into(),
        theory: limit,
        empirical: worst,
        std_err: qlra::analysis::mean_std_err(samples).1,
        trials: samples.len(),
        pass: worst <= limit,
    }
}

pub fn run_suite(suite: Suite, trials: Option<usize>, seed: u64, kappa: f64) -> Result<Vec<CheckReport>> {
    Ok(match suite {
        Suite::GaussianBounds => gaussian_bounds(trials.unwrap_or(300), seed)?,
        Suite::Lemmas => lemmas(trials.unwrap_or(500), seed)?,
        Suite::Extreme => extreme(trials.unwrap_or(50), seed)?,
        Suite::Rangefinder => rangefinder(trials.unwrap_or(20), seed, kappa)?,
        Suite::Avomega => avomega(trials.unwrap_or(200), seed)?,
        Suite::All => {
            let mut v = Vec::new();
            for s in [Suite::GaussianBounds, Suite::Lemmas, Suite::Extreme, Suite::Rangefinder, Suite::Avomega] {
                v.extend(run_suite(s, trials, seed, kappa)?);
            }
            v
        }
    })
}

/// Mean squared QB error against the Gaussian bound, and the per-instance
/// truncation bound, on a 120x100 polynomially decaying spectrum.
pub fn gaussian_bounds(trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let (r, s, l) = (5, 10, 20);
    let spec = SpectrumSpec::new(SpectrumKind::PolyDecay(2.0), 120, 100, r, derive_seed(seed, 100));
    let (a, truth) = synth_matrix(&spec)?;
    let tail = SpectrumTail::new(&truth.sigma, r).tail_fro;
    let sizes = SketchSizes::new(r, s, l)?;
    let rf = Rangefinder::pseudo_qr();
    let out: Vec<(f64, f64, f64)> = trials_map(trials, |t| {
        let run = || -> qlra::Result<(f64, f64, f64)> {
            let emb = EmbeddingConfig::from_seed(TestMatrixKind::Gaussian, derive_seed(seed, t));
            let st = make_sketch_with(&a, sizes, &emb)?;
            let qb = qb_stage_with(&st, &rf, true)?;
            let hx = qb.h.matmul(&qb.x)?;
            let resid = a.sub(&hx)?.fro_norm();
            let trunc = truncate_stage(&qb.h, &qb.x, r)?.reconstruct();
            let lhs = trunc.sub(&hx)?.fro_norm();
            let kappa = condition_number(&qb.h);
            Ok((resid * resid, lhs, kappa * (resid + tail) + 1e-9))
        };
        run().unwrap_or((f64::NAN, f64::NAN, f64::NAN))
    });
    let sq: Vec<f64> = out.iter().map(|o| o.0).collect();
    let slack: Vec<f64> = out.iter().map(|o| o.1 - o.2).collect();
    let report = BoundReport::new(r, s, l, 1.0, tail, &sq)?;
    Ok(vec![report.qb_check(), ceiling("truncation_bound_excess_max", 0.0, &slack)])
}

pub fn lemmas(trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rows = Vec::new();
    for (i, &(sr, sc, tr, tc)) in [(2, 3, 4, 2), (4, 4, 4, 4), (3, 8, 6, 5)].iter().enumerate() {
        let k = 10 * i as u64;
        let s = TestMatrixSpec::gaussian(sr, sc, derive_seed(seed, 200 + k)).generate();
        let t = TestMatrixSpec::gaussian(tr, tc, derive_seed(seed, 201 + k)).generate();
        rows.push(mc_check_sgt(&s, &t, trials, derive_seed(seed, 202 + k))?);
    }
    for (i, &(m, n)) in [(3, 5), (2, 10), (4, 12)].iter().enumerate() {
        rows.push(mc_check_pinv_norm(m, n, trials, derive_seed(seed, 300 + i as u64))?);
    }
    Ok(rows)
}

pub fn extreme(trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rows = Vec::new();
    for (i, kind) in [TestMatrixKind::Gaussian, TestMatrixKind::Rademacher].into_iter().enumerate() {
        let rep = mc_extreme_singvals(400, 10, trials, derive_seed(seed, 400 + i as u64), kind)?;
        rows.extend(rep.rows());
        let all: Vec<f64> = rep.min_ratios.iter().chain(&rep.max_ratios).copied().collect();
        let inside = all.iter().filter(|r| (0.8..=1.2).contains(*r)).count();
        rows.push(CheckReport {
            metric: format!("ratios_within_0.8_1.2_{}", kind.name()),
            theory: 1.0,
            empirical: inside as f64 / all.len().max(1) as f64,
            std_err: 0.0,
            trials,
            pass: inside == all.len(),
        });
    }
    Ok(rows)
}

/// `kappa^(-i/(k-1))`, `i = 0..k`.
pub fn geometric_sigma(k: usize, kappa: f64) -> Vec<f64> {
    (0..k).map(|i| kappa.powf(-(i as f64) / (k - 1).max(1) as f64)).collect()
}

fn orth_defect(h: &QMatrix) -> f64 {
    h.adjoint()
        .matmul(h)
        .and_then(|g| g.sub(&QMatrix::identity(h.cols())))
        .map(|d| d.fro_norm())
        .unwrap_or(f64::NAN)
}

/// Range preservation on 400x40 sketches with planted condition number.
///
/// Pseudo-QR rows appear while its accuracy regime allows (range distance
/// up to kappa 1e6, conditioning up to 1e8). Pseudo-SVD is checked on graded
/// sketches, whose range is known to working accuracy at any kappa.
pub fn rangefinder(trials: usize, seed: u64, kappa: f64) -> Result<Vec<CheckReport>> {
    if !(kappa >= 1.0) {
        anyhow::bail!("--kappa must be at least 1");
    }
    let (m, k) = (400, 40);
    let sigma = geometric_sigma(k, kappa);
    let nan = f64::NAN;
    let out: Vec<[f64; 5]> = trials_map(trials, |t| {
        let ts = derive_seed(seed, 500 + t);
        let mixed = planted_matrix(m, k, &sigma, ts).map(|p| p.0);
        let graded = graded_matrix(m, &sigma, ts);
        let (Ok(mixed), Ok(graded)) = (mixed, graded) else { return [nan; 5] };
        let qr = Rangefinder::pseudo_qr().apply(&mixed);
        let qr_dist = qr.as_ref().ok().and_then(|r| range_distance(&r.h, &mixed).ok()).unwrap_or(nan);
        let qr_kappa = qr.as_ref().map(|r| condition_number(&r.h)).unwrap_or(nan);
        let svd = Rangefinder::pseudo_svd();
        let (g_dist, g_orth) = match svd.apply(&graded) {
            Ok(r) => (range_distance(&r.h, &graded).unwrap_or(nan), orth_defect(&r.h)),
            Err(_) => (nan, nan),
        };
        let m_dist = svd.apply(&mixed).ok().and_then(|r| range_distance(&r.h, &mixed).ok()).unwrap_or(nan);
        [qr_dist, qr_kappa, g_dist, g_orth, m_dist]
    });
    let col = |i: usize| -> Vec<f64> { out.iter().map(|o| o[i]).collect() };
    let tag = format!("kappa{kappa:.0e}");
    let mut rows = Vec::new();
    if kappa <= 1e6 {
        rows.push(ceiling(format!("pseudo_qr_range_distance_max_{tag}"), 1e-7, &col(0)));
        rows.push(ceiling(format!("pseudo_svd_mixed_range_distance_max_{tag}"), 1e-7, &col(4)));
    }
    if kappa <= 1e8 {
        let kap: Vec<f64> = col(1);
        let mut c = ceiling(format!("pseudo_qr_kappa_h_max_{tag}"), 10.0, &kap);
        c.pass = max_of(&kap) < 10.0;
        rows.push(c);
    }
    rows.push(ceiling(format!("pseudo_svd_graded_range_distance_max_{tag}"), 1e-7, &col(2)));
    rows.push(ceiling(format!("pseudo_svd_orthonormality_max_{tag}"), 1e-8, &col(3)));
    Ok(rows)
}

/// Growth of the 99th percentile of `||A V Omega||_F` over a grid of `s`.
pub fn avomega(trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let spec = SpectrumSpec::new(SpectrumKind::PolyDecay(1.0), 120, 100, 5, derive_seed(seed, 600));
    let (a, _) = synth_matrix(&spec)?;
    let v = random_orthonormal(100, 100, derive_seed(seed, 601))?;
    let grid = [5, 10, 20, 40];
    let (reps, _) = mc_avomega_scaling(&a, &v, &grid, trials, derive_seed(seed, 602))?;
    let d = 100.0f64;
    let mut rows = Vec::new();
    for w in reps.windows(2) {
        let growth = ((w[1].s as f64 * d).ln() / (w[0].s as f64 * d).ln()).sqrt();
        let limit = w[0].p99 * growth;
        rows.push(CheckReport {
            metric: format!("avomega_p99_s{}_vs_s{}", w[1].s, w[0].s),
            theory: limit,
            empirical: w[1].p99,
            std_err: 0.0,
            trials,
            pass: w[1].p99 <= limit + 1e-12,
        });
    }
    Ok(rows)
}
