//! Pseudo-QR and pseudo-SVD on sketches of increasing condition number.

use qlra::synthetic::planted_matrix;
use qlra::Rangefinder;

fn main() {
    let (m, k) = (300, 30);
    for kappa in [1e2f64, 1e4, 1e6] {
        let sigma: Vec<f64> = (0..k).map(|i| kappa.powf(-(i as f64) / (k - 1) as f64)).collect();
        let (y, _) = planted_matrix(m, k, &sigma, 1).unwrap();
        for rf in [Rangefinder::pseudo_qr(), Rangefinder::pseudo_svd()] {
            let mut rep = rf.apply(&y).unwrap();
            let d = rep.measure_range_distance(&y).unwrap();
            println!(
                "kappa(Y) {kappa:.0e}  {:<10}  kappa(H) {:>6.3} after {} corrections, range distance {d:.1e}",
                rep.method.to_string(),
                rep.kappa_after,
                rep.correction_steps_used
            );
        }
    }
}
