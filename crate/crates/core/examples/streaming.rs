//! Row-block streaming, linear updates and a sketch checkpoint.

use qlra::io::{read_sketch, write_sketch};
use qlra::sketching::sketch_source;
use qlra::synthetic::{synth_matrix, SpectrumKind, SpectrumSpec};
use qlra::{approx_from_sketch, EmbeddingConfig, QMatrix, Rangefinder, SketchDelta, SketchSizes, TestMatrixKind};

fn main() {
    let (a, _) = synth_matrix(&SpectrumSpec::new(SpectrumKind::ExpDecay(0.5), 120, 90, 5, 9)).unwrap();
    let sizes = SketchSizes::with_defaults(8, None, None).unwrap();
    let emb = EmbeddingConfig::from_seed(TestMatrixKind::SparseRademacher(0.2), 5);

    // Rows arrive in blocks of 25; only the sketches are kept.
    let mut st = sketch_source(&mut a.clone(), sizes, &emb, 25).unwrap();

    // Later the first ten rows change.
    let bump = QMatrix::identity(10).hcat(&QMatrix::zeros(10, 80)).unwrap().scale(0.01);
    st.apply(SketchDelta::RowBlock { row0: 0, block: &bump }).unwrap();

    let mut buf = Vec::new();
    write_sketch(&mut buf, &st).unwrap();
    println!("checkpoint size {} bytes for a {}x{} matrix", buf.len(), a.rows(), a.cols());

    let restored = read_sketch(&mut buf.as_slice()).unwrap();
    let res = approx_from_sketch(&restored, &Rangefinder::pseudo_qr(), 8).unwrap();
    let mut updated = a.clone();
    let top = updated.row_block(0, 10).add(&bump).unwrap();
    updated.set_row_block(0, &top).unwrap();
    let err = updated.sub(&res.reconstruct()).unwrap().fro_norm() / updated.fro_norm();
    println!("rank-8 approximation of the updated matrix: relative error {err:.3e}");
}
