//! Online tracking of a piecewise-constant subspace through dense Bernoulli
//! outliers, followed by the offline smoothing pass.
//!
//!     cargo run --release --example norst_tracking -- 3

use slr::bench::presets;
use slr::linalg::{rel_frobenius_error, subspace_error};
use slr::norst::{norst_offline, norst_run_observed, TrackerEvent};
use slr::synth::assemble_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let cfg = presets::desk_bernoulli(seed);
    let truth = assemble_scenario(&cfg)?;
    let params = presets::desk_norst().resolve(&cfg)?;
    println!("K = {}, alpha = {}, changes at {:?}", params.k, params.alpha, cfg.change_times);

    let run = norst_run_observed(&truth.m, &params, |f| match f.event {
        Some(TrackerEvent::Detected { j, t_hat }) => println!("t = {t_hat}: change {j} detected"),
        Some(TrackerEvent::Updated { .. }) | None => {}
    })?;
    for u in &run.updates {
        println!(
            "t = {}: estimate {} of segment {}, SE {:.2e}",
            u.t,
            u.k,
            u.j,
            subspace_error(&u.basis, truth.basis_at(u.t))?
        );
    }

    let post = |lhat: &nalgebra::DMatrix<f64>| {
        let w = cfg.tmax - cfg.t_train;
        rel_frobenius_error(&lhat.columns(cfg.t_train, w).into_owned(), &truth.l.columns(cfg.t_train, w).into_owned())
    };
    println!("online rel. error {:.2e}", post(&run.lhat));
    let offline = norst_offline(&truth.m, &run, &params)?;
    println!("offline rel. error {:.2e}", post(&offline.lhat));
    Ok(())
}
