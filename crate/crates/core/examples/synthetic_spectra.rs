//! Benchmark matrices with planted spectra.

use qlra::synthetic::{synth_matrix, SpectrumKind, SpectrumSpec};
use qlra::factorizations::singular_values;

fn main() {
    for kind in [SpectrumKind::LowRankPlusNoise(0.5), SpectrumKind::PolyDecay(2.0), SpectrumKind::ExpDecay(0.25)] {
        let spec = SpectrumSpec::new(kind, 80, 60, 5, 1);
        let (a, truth) = synth_matrix(&spec).unwrap();
        let sv = singular_values(&a);
        let head = |v: &[f64]| v[3..9].iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
        println!("{:<14} planted  {}", kind.name(), head(&truth.sigma));
        println!("{:<14} computed {}", "", head(&sv));
    }
}
