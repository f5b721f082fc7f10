//! An RGB image as a pure quaternion matrix, compressed from row-streamed
//! sketches.

use qlra::sketching::sketch_source;
use qlra::synthetic::{image_to_qmatrix, psnr_8bit, qmatrix_to_image, Pixels};
use qlra::{approx_from_sketch, EmbeddingConfig, Rangefinder, SketchSizes, TestMatrixKind};

fn main() {
    let (rows, cols) = (96, 128);
    let mut data = Vec::with_capacity(rows * cols * 3);
    for i in 0..rows {
        for j in 0..cols {
            let (u, v) = (i as f64 / rows as f64, j as f64 / cols as f64);
            data.push(0.5 + 0.4 * (6.0 * u * v).sin());
            data.push(0.5 + 0.4 * (4.0 * (u - v)).cos());
            data.push(0.5 + 0.3 * (9.0 * u * u).sin() * v);
        }
    }
    let px = Pixels::new(rows, cols, 3, data).unwrap();
    let a = image_to_qmatrix(&px).unwrap();
    for r in [1, 4, 8, 16] {
        let sizes = SketchSizes::with_defaults(r, None, None).unwrap();
        let st = sketch_source(&mut a.clone(), sizes, &EmbeddingConfig::from_seed(TestMatrixKind::Gaussian, 3), 16).unwrap();
        let res = approx_from_sketch(&st, &Rangefinder::pseudo_qr(), r).unwrap();
        let (img, clamped) = qmatrix_to_image(&res.reconstruct());
        let ratio = (3 * rows * cols) as f64 / (4 * r * (rows + cols) + r) as f64;
        println!(
            "r={r:<3} PSNR {:>6.2} dB, compression {ratio:>6.2}x, clamped samples {clamped}",
            psnr_8bit(&px, &img).unwrap()
        );
    }
}
