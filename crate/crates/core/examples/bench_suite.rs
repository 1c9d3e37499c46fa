//! A small Monte-Carlo suite: two scenarios, three algorithms, three trials,
//! written out as CSV/JSON with a gnuplot script.
//!
//!     cargo run --release --example bench_suite -- /tmp/bench

use std::collections::BTreeMap;

use slr::bench::{monte_carlo, presets, report, AlgorithmSpec, BenchSuite, NorstSpec, SuiteEntry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bench_out".into());
    let norst = NorstSpec { alpha: Some(60), ..NorstSpec::default() };
    let entries = [presets::desk_bernoulli(0), presets::desk_moving_object(0)]
        .into_iter()
        .map(|mut scenario| {
            scenario.tmax = 1200;
            scenario.r = 5;
            scenario.change_times = vec![600];
            scenario.deltas = vec![1e-3];
            SuiteEntry {
                scenario,
                algorithms: vec![
                    AlgorithmSpec::Norst(norst.clone()),
                    AlgorithmSpec::NorstOffline(norst.clone()),
                    AlgorithmSpec::from_id("altproj").unwrap(),
                ],
                checkpoint_every: 100,
            }
        })
        .collect();
    let suite = BenchSuite {
        name: "small".into(),
        base_seed: 10,
        trials: 3,
        entries,
        thresholds: BTreeMap::new(),
        verify_tol: 1e-9,
    };

    let rep = monte_carlo(&suite)?;
    for c in &rep.cells {
        println!(
            "{:<20} {:<14} rel. error {:.2e} ± {:.1e}, {:.3} ms/frame",
            c.scenario,
            c.algo,
            c.final_rel_err.mean,
            c.final_rel_err.std,
            c.time_per_frame_ms()
        );
    }
    report(&rep, &out)?;
    println!("wrote {out}; `slr verify --golden {out}` reruns and compares it");
    Ok(())
}
