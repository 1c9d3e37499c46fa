//! Principal component pursuit, and its modified form that is told part of
//! the column space in advance.

use slr::linalg::{orthonormalize, rel_frobenius_error};
use slr::rpca::{default_lambda, modified_pcp, pcp_admm};
use slr::synth::{gen_bernoulli_support, gen_outliers, standard_normal_matrix, MagnitudeLaw};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, d, r) = (50, 80, 4);
    let u = standard_normal_matrix(n, r, 5, 1);
    let l = &u * standard_normal_matrix(d, r, 5, 2).transpose();
    let support = gen_bernoulli_support(n, d, 0.05, 5)?;
    let m = &l + gen_outliers(&support, MagnitudeLaw::Symmetric { a: 10.0 }, 5)?;
    let lambda = default_lambda(n, d);

    let plain = pcp_admm(&m, lambda, 1e-7, 1000)?;
    println!(
        "PCP: rel. error {:.2e} in {} iterations",
        rel_frobenius_error(&plain.lhat, &l),
        plain.iterations_used
    );

    // three of the four directions known
    let g = orthonormalize(&u.columns(0, 3).into_owned())?;
    let known = modified_pcp(&m, &g, lambda, 0.0, 1e-7, 1000)?;
    println!(
        "modified PCP: rel. error {:.2e} in {} iterations",
        rel_frobenius_error(&known.lhat, &l),
        known.iterations_used
    );
    Ok(())
}
