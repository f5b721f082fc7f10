//! Quaternion arithmetic and quaternion matrices.

use qlra::{QMatrix, Quaternion, TestMatrixSpec};

fn main() {
    let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
    println!("i*j = {}, j*i = {}, i*j*k = {}", i * j, j * i, i * j * k);

    let q = Quaternion::new(1.0, 2.0, -1.0, 0.5);
    println!("q = {q}, |q| = {:.4}, q * q^-1 = {}", q.norm(), q * q.inv());

    let a = TestMatrixSpec::gaussian(4, 3, 7).generate();
    let b = TestMatrixSpec::gaussian(3, 2, 8).generate();
    let ab = a.matmul(&b).unwrap();
    let gap = ab.adjoint().sub(&b.adjoint().matmul(&a.adjoint()).unwrap()).unwrap().fro_norm();
    println!("(AB)* - B*A* = {gap:.1e}");
    println!("||I_3||_F = {:.4}", QMatrix::identity(3).fro_norm());
}
