//! Expected QB error under Gaussian test matrices against its closed-form
//! bound, and the per-instance truncation bound.

use qlra::analysis::{BoundReport, SpectrumTail};
use qlra::rng::derive_seed;
use qlra::sketching::{qb_stage_with, truncate_stage};
use qlra::synthetic::{synth_matrix, SpectrumKind, SpectrumSpec};
use qlra::{condition_number, make_sketch_with, EmbeddingConfig, Rangefinder, SketchSizes, TestMatrixKind};

fn main() {
    let (r, s, l) = (5, 10, 20);
    let (a, truth) = synth_matrix(&SpectrumSpec::new(SpectrumKind::PolyDecay(1.5), 120, 100, r, 1)).unwrap();
    let tail = SpectrumTail::new(&truth.sigma, r).tail_fro;
    let sizes = SketchSizes::new(r, s, l).unwrap();
    let mut sq = Vec::new();
    let mut worst: f64 = 0.0;
    let mut kappa_max: f64 = 1.0;
    for t in 0..100 {
        let st = make_sketch_with(&a, sizes, &EmbeddingConfig::from_seed(TestMatrixKind::Gaussian, derive_seed(2, t))).unwrap();
        let qb = qb_stage_with(&st, &Rangefinder::pseudo_qr(), true).unwrap();
        let hx = qb.h.matmul(&qb.x).unwrap();
        let resid = a.sub(&hx).unwrap().fro_norm();
        sq.push(resid * resid);
        let kappa = condition_number(&qb.h);
        kappa_max = kappa_max.max(kappa);
        let lhs = truncate_stage(&qb.h, &qb.x, r).unwrap().reconstruct().sub(&hx).unwrap().fro_norm();
        worst = worst.max(lhs / (kappa * (resid + tail)));
    }
    let rep = BoundReport::new(r, s, l, kappa_max, tail, &sq).unwrap();
    println!("mean ||A - HX||^2 = {:.4e} +- {:.1e}, bound {:.4e}", rep.empirical_mean, rep.std_err, rep.qb_bound);
    println!("fixed-rank bound at kappa {kappa_max:.2}: {:.4e}", rep.fixed_rank_bound);
    println!("truncation bound: worst lhs/rhs {worst:.3}");
}
