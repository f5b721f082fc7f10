//! Monte Carlo checks of Gaussian matrix identities and extreme singular
//! values of tall random matrices.

use qlra::analysis::{mc_check_pinv_norm, mc_check_sgt, mc_extreme_singvals, write_checks_csv};
use qlra::{TestMatrixKind, TestMatrixSpec};

fn main() {
    let s = TestMatrixSpec::gaussian(3, 4, 1).generate();
    let t = TestMatrixSpec::gaussian(5, 2, 2).generate();
    let mut rows = vec![mc_check_sgt(&s, &t, 400, 3).unwrap(), mc_check_pinv_norm(3, 5, 400, 4).unwrap()];
    for kind in [TestMatrixKind::Gaussian, TestMatrixKind::SparseGaussian(0.2)] {
        rows.extend(mc_extreme_singvals(400, 10, 30, 5, kind).unwrap().rows());
    }
    write_checks_csv(std::io::stdout(), &rows).unwrap();
}
