//! Quaternion arithmetic and complex representation invariants.

use proptest::prelude::*;
use qlra::{from_compact, j_mul_conj, solve_quaternion_linear, to_compact, to_full, QMatrix, Quaternion, TestMatrixSpec};

fn quat() -> impl Strategy<Value = Quaternion> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z))
}

fn qclose(a: Quaternion, b: Quaternion, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn gauss(m: usize, n: usize, seed: u64) -> QMatrix {
    TestMatrixSpec::gaussian(m, n, seed).generate()
}

/// Hamilton product written out from the unit rules, as an oracle.
fn hamilton(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

#[test]
fn unit_rules() {
    let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
    let m1 = Quaternion::real(-1.0);
    assert_eq!(i * i, m1);
    assert_eq!(j * j, m1);
    assert_eq!(k * k, m1);
    assert_eq!(i * j * k, m1);
    assert_eq!(i * j, k);
    assert_eq!(j * i, -k);
}

proptest! {
    #[test]
    fn product_matches_hamilton(a in quat(), b in quat()) {
        prop_assert!(qclose(a * b, hamilton(a, b), 1e-14));
    }

    #[test]
    fn associative_and_norm_multiplicative(a in quat(), b in quat(), c in quat()) {
        prop_assert!(qclose((a * b) * c, a * (b * c), 1e-12));
        prop_assert!(((a * b).norm() - a.norm() * b.norm()).abs() <= 1e-12 * (1.0 + a.norm() * b.norm()));
        prop_assert!(qclose((a * b).conj(), b.conj() * a.conj(), 1e-13));
    }

    #[test]
    fn inverse(a in quat()) {
        prop_assume!(a.norm() > 1e-3);
        prop_assert!(qclose(a * a.inv(), Quaternion::ONE, 1e-12));
        prop_assert!(qclose(a.inv() * a, Quaternion::ONE, 1e-12));
    }

    #[test]
    fn matrix_product_adjoint(m in 1..6usize, k in 1..6usize, n in 1..6usize, seed in any::<u64>()) {
        let a = gauss(m, k, seed);
        let b = gauss(k, n, seed ^ 1);
        let ab = a.matmul(&b).unwrap();
        let lhs = ab.adjoint();
        let rhs = b.adjoint().matmul(&a.adjoint()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + ab.max_abs()));
        // Entry oracle from scalar products.
        for i in 0..m {
            for j in 0..n {
                let mut s = Quaternion::ZERO;
                for t in 0..k {
                    s += a.get(i, t) * b.get(t, j);
                }
                prop_assert!(qclose(ab.get(i, j), s, 1e-12));
            }
        }
    }

    #[test]
    fn full_representation_is_a_homomorphism(m in 1..6usize, k in 1..6usize, n in 1..6usize, seed in any::<u64>()) {
        let a = gauss(m, k, seed);
        let b = gauss(k, n, seed ^ 2);
        let lhs = to_full(&a.matmul(&b).unwrap());
        let rhs = to_full(&a).matmul(&to_full(&b)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + lhs.fro_norm()));
        let adj = to_full(&a.adjoint());
        prop_assert!(adj.max_abs_diff(&to_full(&a).adjoint()) == 0.0);
    }

    #[test]
    fn compact_round_trip_and_structure(m in 1..7usize, n in 1..7usize, seed in any::<u64>()) {
        let a = gauss(m, n, seed);
        let c = to_compact(&a);
        prop_assert_eq!(c.shape(), (2 * m, n));
        prop_assert_eq!(from_compact(&c).unwrap(), a.clone());
        // chi = [A_c, J conj(A_c)].
        let full = to_full(&a);
        let right = j_mul_conj(&c).unwrap();
        for i in 0..2 * m {
            for j in 0..n {
                prop_assert_eq!(full[(i, j)], c[(i, j)]);
                prop_assert_eq!(full[(i, j + n)], right[(i, j)]);
            }
        }
        // Top block holds w + x i, bottom block -(y) + z i.
        let q = a.get(0, 0);
        prop_assert_eq!((c[(0, 0)].re, c[(0, 0)].im), (q.w, q.x));
        prop_assert_eq!((c[(m, 0)].re, c[(m, 0)].im), (-q.y, q.z));
    }

    #[test]
    fn square_solve_residual(n in 1..7usize, k in 1..4usize, seed in any::<u64>()) {
        let a = gauss(n, n, seed).add(&QMatrix::identity(n).scale(3.0)).unwrap();
        let b = gauss(n, k, seed ^ 3);
        let x = solve_quaternion_linear(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap().fro_norm();
        prop_assert!(r <= 1e-10 * (1.0 + b.fro_norm()));
    }

    #[test]
    fn least_squares_normal_equations(m in 4..10usize, n in 1..4usize, seed in any::<u64>()) {
        let a = gauss(m, n, seed);
        let b = gauss(m, 2, seed ^ 4);
        let x = solve_quaternion_linear(&a, &b).unwrap();
        let resid = a.matmul(&x).unwrap().sub(&b).unwrap();
        let g = a.adjoint().matmul(&resid).unwrap();
        prop_assert!(g.fro_norm() <= 1e-10 * (1.0 + a.fro_norm() * b.fro_norm()));
    }
}

#[test]
fn singular_system_is_reported() {
    let mut a = gauss(3, 3, 9);
    let row = a.row_block(0, 1);
    a.set_row_block(1, &row).unwrap();
    assert!(matches!(solve_quaternion_linear(&a, &gauss(3, 1, 1)), Err(qlra::Error::Singular { .. })));
    assert!(solve_quaternion_linear(&gauss(2, 3, 1), &gauss(2, 1, 1)).is_err());
}
