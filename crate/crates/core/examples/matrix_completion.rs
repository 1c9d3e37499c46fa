//! Low-rank matrix completion by alternating minimization, then streaming
//! subspace tracking from incomplete vectors with GROUSE.

use slr::linalg::{orthonormalize, rel_frobenius_error};
use slr::mc::{mc_altmin, track_missing, AltMinMode, AltMinOptions, GrouseStep, MaskedMatrix};
use slr::synth::{gen_missing_mask, standard_normal_matrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, d, r) = (200, 240, 3);
    let l = standard_normal_matrix(n, r, 2, 1) * standard_normal_matrix(d, r, 2, 2).transpose();
    let y = MaskedMatrix::new(&l, gen_missing_mask(n, d, 0.6, 2)?)?;
    println!("observed {:.0}% of the entries", 100.0 * y.p_hat());

    // the partitioned variant spends fresh samples on every half-step, so it
    // can only afford a few sweeps
    for (mode, sweeps) in [(AltMinMode::AllSamples, None), (AltMinMode::Partitioned, Some(2))] {
        let opts = AltMinOptions { mode, sweeps, ..AltMinOptions::default() };
        let out = mc_altmin(&y, r, &opts)?;
        println!(
            "{mode:?}: rel. error {:.2e} after {} sweeps",
            rel_frobenius_error(&out.lhat, &l),
            out.sweeps_used
        );
    }

    let p = orthonormalize(&standard_normal_matrix(n, r, 2, 3))?;
    let coeffs = standard_normal_matrix(r, 3000, 2, 4);
    let mask = gen_missing_mask(n, 3000, 0.3, 4)?;
    let stream = (0..3000).map(|t| {
        let omega = mask.column_indices(t);
        (p.as_matrix() * coeffs.column(t), omega)
    });
    let p0 = orthonormalize(&standard_normal_matrix(n, r, 2, 5))?;
    let truth = |_: usize| &p;
    let res = track_missing(stream, p0, GrouseStep::Greedy, Some(&truth))?;
    for t in [0, 100, 500, 1000, 2999] {
        println!("GROUSE step {t}: sum sin^2 = {:.2e}", res.eps_trace[t]);
    }
    Ok(())
}
