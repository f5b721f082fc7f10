//! Randomized low-rank approximation of quaternion matrices.

pub mod analysis;
pub mod bridge;
pub mod complex;
pub mod error;
pub mod exec;
pub mod factorizations;
pub mod io;
pub mod quaternion;
pub mod rangefinders;
pub mod rng;
pub mod sketching;
pub mod synthetic;

pub use bridge::{from_compact, j_mul_conj, solve_quaternion_linear, to_compact, to_full, QuaternionSolver};
pub use complex::{CMatrix, C64};
pub use error::{Error, Result};
pub use factorizations::{
    complex_qr, complex_svd, condition_number, qmat_pinv, qsvd, spectral_norm, ComplexQr, ComplexSvd, QsvdFactors,
};
pub use quaternion::{qmat_adjoint, qmat_fro_norm, qmat_mul, QMatrix, Quaternion};
pub use rangefinders::{pseudo_qr, pseudo_svd, PseudoQrConfig, PseudoSvdConfig, Rangefinder, RangefinderMethod, RangefinderReport};
pub use sketching::{
    approx_from_sketch, gen_test_matrix, make_sketch, make_sketch_with, one_pass_approx, qb_stage, sketch_update,
    truncate_stage, ApproxResult, EmbeddingConfig, OnePassConfig, SketchDelta, SketchSizes, SketchState, TestMatrixKind,
    TestMatrixSpec,
};
