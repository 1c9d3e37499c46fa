//! Recovers a sparse outlier vector hidden behind a low-rank component by
//! projecting the low-rank part away and solving an l1 problem.

use nalgebra::DVector;
use slr::linalg::orthonormalize;
use slr::sparse::{l1_bpdn, ls_on_support, support_threshold, L1Problem, OrthoProjector, SensingOperator};
use slr::synth::standard_normal_matrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, r) = (200, 10);
    let p = orthonormalize(&standard_normal_matrix(n, r, 3, 1))?;
    let l = p.as_matrix() * standard_normal_matrix(r, 1, 3, 2).column(0) * 5.0;

    let mut x = DVector::zeros(n);
    for (k, i) in [4, 17, 33, 90, 121, 150, 188].into_iter().enumerate() {
        x[i] = if k % 2 == 0 { 12.0 } else { -15.0 };
    }
    let m = &l + &x;

    let psi = OrthoProjector::complement_of(&p);
    let y = psi.apply(&m);
    let xcs = l1_bpdn(&L1Problem::new(SensingOperator::Projector(psi.clone()), y.clone(), 1e-6))?;
    let support = support_threshold(&xcs, 5.0);
    let xhat = ls_on_support(&psi, &y, &support)?;

    println!("detected support {support:?}");
    println!("|x_hat - x| = {:.2e}", (&xhat - &x).norm());
    println!("|l_hat - l| = {:.2e}", (&m - &xhat - &l).norm());
    Ok(())
}
