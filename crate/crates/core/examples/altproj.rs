//! Batch robust PCA by alternating projections on a rank-2 matrix with 1%
//! gross corruptions.

use nalgebra::DMatrix;
use slr::linalg::rel_frobenius_error;
use slr::rpca::{altproj_observed, AltProjConfig};
use slr::synth::{gen_outliers, gen_uniform_support, standard_normal_matrix, MagnitudeLaw};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 60;
    let l = standard_normal_matrix(n, 2, 1, 1) * standard_normal_matrix(n, 2, 1, 2).transpose();
    let support = gen_uniform_support(n, n, 36, 1)?;
    let s: DMatrix<f64> = gen_outliers(&support, MagnitudeLaw::Interval { min: 10.0, max: 20.0 }, 1)?;
    let m = &l + &s;

    let out = altproj_observed(&m, &AltProjConfig::new(2), |k, t, lhat, _| {
        if t == 0 {
            println!("stage {k}: rel. error {:.2e}", rel_frobenius_error(lhat, &l));
        }
    })?;
    let found = out.shat.iter().filter(|x| **x != 0.0).count();
    println!(
        "final rel. error {:.2e} after {} iterations; {found} of {} outliers located",
        rel_frobenius_error(&out.lhat, &l),
        out.iterations_used,
        support.nnz()
    );
    Ok(())
}
