//! One-pass low-rank approximation of a synthetic benchmark matrix.

use qlra::synthetic::{synth_matrix, SpectrumKind, SpectrumSpec};
use qlra::{one_pass_approx, OnePassConfig, Rangefinder};

fn main() {
    let spec = SpectrumSpec::new(SpectrumKind::PolyDecay(2.0), 200, 160, 10, 3);
    let (a, truth) = synth_matrix(&spec).unwrap();
    for r in [10, 20, 40] {
        for rf in [Rangefinder::pseudo_qr(), Rangefinder::pseudo_svd()] {
            let cfg = OnePassConfig { rangefinder: rf, ..OnePassConfig::new(r, 42).unwrap() };
            let res = one_pass_approx(&a, &cfg).unwrap();
            let d = &res.diagnostics;
            let best: f64 = truth.sigma[r..].iter().map(|s| s * s).sum::<f64>().sqrt() / a.fro_norm();
            println!(
                "r={r:<3} {:<10} rel err {:.3e} (optimal {best:.3e}), kappa(H) {:.2}, {:.3}s",
                d.rangefinder.to_string(),
                d.relative_error.unwrap(),
                d.kappa_h,
                d.timings.total()
            );
        }
    }
}
