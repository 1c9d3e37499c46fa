//! Builds the desk moving-object scenario and prints what the generator
//! produced. Pass a directory to also save it (`slr run --data` reads it).
//!
//!     cargo run --release --example synth_scenario -- /tmp/scene

use slr::bench::presets;
use slr::linalg::{incoherence, subspace_error};
use slr::synth::assemble_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = presets::desk_moving_object(7);
    let truth = assemble_scenario(&cfg)?;

    println!("M is {}x{}, r = {}", truth.m.nrows(), truth.m.ncols(), cfg.r);
    for (j, w) in truth.bases.windows(2).enumerate() {
        println!(
            "change {} at t = {}: SE(P_{j}, P_{}) = {:.2e}",
            j + 1,
            cfg.change_times[j],
            j + 1,
            subspace_error(&w[0], &w[1])?
        );
    }
    println!("incoherence of P_0: {:.2}", incoherence(&truth.bases[0]));

    let post = truth.support.slice(cfg.t_train, cfg.tmax);
    println!(
        "outliers after training: {} entries, max column fraction {:.3}, max row fraction over 120 frames {:.3}",
        post.nnz(),
        post.outfrac_col(),
        post.outfrac_row(120)
    );
    let smin = truth.s.iter().filter(|x| **x != 0.0).fold(f64::INFINITY, |a, b| a.min(b.abs()));
    println!("smallest outlier magnitude {smin:.2}");

    if let Some(dir) = std::env::args().nth(1) {
        truth.save(&dir)?;
        println!("saved to {dir}");
    }
    Ok(())
}
