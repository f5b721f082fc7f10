//! Quaternion SVD, pseudoinverse and condition number.

use qlra::synthetic::planted_matrix;
use qlra::{condition_number, qmat_pinv, qsvd};

fn main() {
    let sigma = [10.0, 5.0, 5.0, 1.0, 1e-3];
    let (a, _) = planted_matrix(30, 20, &sigma, 4).unwrap();
    let f = qsvd(&a);
    let shown: Vec<String> = f.sigma.iter().take(6).map(|s| format!("{s:.3e}")).collect();
    println!("leading singular values: {}", shown.join(" "));
    println!("reconstruction error {:.1e}", f.reconstruct().sub(&a).unwrap().fro_norm());

    let r5 = f.truncate(5);
    println!("rank-5 truncation error {:.1e}", r5.reconstruct().sub(&a).unwrap().fro_norm());

    let p = qmat_pinv(&r5.reconstruct());
    println!("||A^+||_F = {:.1}, kappa of U diag(sigma) = {:.1e}", p.fro_norm(), condition_number(&r5.u.scale_cols(&r5.sigma)));
}
