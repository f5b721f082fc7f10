//! Compact and full complex representations, and a quaternion solve through
//! the full representation.

use qlra::{from_compact, solve_quaternion_linear, to_compact, to_full, QMatrix, TestMatrixSpec};

fn main() {
    let a = TestMatrixSpec::gaussian(3, 3, 1).generate().add(&QMatrix::identity(3).scale(2.0)).unwrap();
    let b = TestMatrixSpec::gaussian(3, 3, 2).generate();

    let c = to_compact(&a);
    println!("compact form is {}x{}, round trip exact: {}", c.rows(), c.cols(), from_compact(&c).unwrap() == a);

    let lhs = to_full(&a.matmul(&b).unwrap());
    let rhs = to_full(&a).matmul(&to_full(&b)).unwrap();
    println!("chi(AB) - chi(A)chi(B) = {:.1e}", lhs.max_abs_diff(&rhs));

    let rhs_b = TestMatrixSpec::gaussian(3, 2, 3).generate();
    let x = solve_quaternion_linear(&a, &rhs_b).unwrap();
    let resid = a.matmul(&x).unwrap().sub(&rhs_b).unwrap().fro_norm();
    println!("solve AX = B, residual {resid:.1e}");
}
