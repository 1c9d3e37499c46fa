//! Ready-made scenarios and suites. The desk presets keep the full
//! acceptance run to minutes; the full presets run at n = 1000, d = 12000.

use std::collections::BTreeMap;

use super::{AlgorithmSpec, BenchSuite, NorstSpec, SuiteEntry};
use crate::error::{Error, Result};
use crate::synth::{CoeffModel, MagnitudeLaw, OutlierModel, OutlierSegment, ScenarioConfig};

/// Window length of the desk NORST preset.
pub const DESK_ALPHA: usize = 120;
/// Accuracy target of the desk NORST preset: `K = ⌈ln 200⌉ = 6` and
/// `ω_evals = 2 · 0.005² · λ⁺`.
pub const DESK_EPS: f64 = 0.005;

struct Shape {
    n: usize,
    tmax: usize,
    r: usize,
    change_times: Vec<usize>,
    tau: usize,
}

fn desk_shape() -> Shape {
    Shape {
        n: 200,
        tmax: 3000,
        r: 10,
        change_times: vec![1000, 2000],
        tau: DESK_ALPHA,
    }
}

fn full_shape() -> Shape {
    Shape {
        n: 1000,
        tmax: 12000,
        r: 30,
        change_times: vec![3000, 8000],
        tau: 300,
    }
}

fn scenario(id: &str, shape: Shape, early: OutlierModel, late: OutlierModel, seed: u64) -> ScenarioConfig {
    let deltas = vec![1e-3; shape.change_times.len()];
    ScenarioConfig {
        id: id.into(),
        n: shape.n,
        tmax: shape.tmax,
        r: shape.r,
        change_times: shape.change_times,
        deltas,
        coeff_model: CoeffModel::BoundedUnif { f: 50.0 },
        outliers: vec![
            OutlierSegment { start: 0, model: early },
            OutlierSegment { start: 100, model: late },
        ],
        magnitude: MagnitudeLaw::Interval { min: 10.0, max: 20.0 },
        noise_variance: 0.0,
        t_train: 100,
        seed,
    }
}

fn bernoulli(id: &str, shape: Shape, seed: u64) -> ScenarioConfig {
    scenario(
        id,
        shape,
        OutlierModel::Bernoulli { rho: 0.01 },
        OutlierModel::Bernoulli { rho: 0.3 },
        seed,
    )
}

fn moving_object(id: &str, shape: Shape, seed: u64) -> ScenarioConfig {
    let (n, tau) = (shape.n, shape.tau);
    scenario(
        id,
        shape,
        OutlierModel::MovingObject {
            s: n / 100,
            tau,
            c0: None,
            b0: Some(0.01),
        },
        OutlierModel::MovingObject {
            s: n / 20,
            tau,
            c0: None,
            b0: Some(0.3),
        },
        seed,
    )
}

/// `n = 200, d = 3000, r = 10`, changes at 1000 and 2000 with `δ = 10⁻³`,
/// Bernoulli outliers with `ρ = 0.01` on the training frames and `0.3` after.
pub fn desk_bernoulli(seed: u64) -> ScenarioConfig {
    bernoulli("desk-bernoulli", desk_shape(), seed)
}

/// Desk shape with moving-object outliers (`s/n = 0.01, b0 = 0.01` then
/// `s/n = 0.05, b0 = 0.3`).
pub fn desk_moving_object(seed: u64) -> ScenarioConfig {
    moving_object("desk-moving-object", desk_shape(), seed)
}

/// `n = 1000, d = 12000, r = 30`, changes at 3000 and 8000.
pub fn full_bernoulli(seed: u64) -> ScenarioConfig {
    bernoulli("full-bernoulli", full_shape(), seed)
}

pub fn full_moving_object(seed: u64) -> ScenarioConfig {
    moving_object("full-moving-object", full_shape(), seed)
}

pub fn desk_norst() -> NorstSpec {
    NorstSpec {
        eps: Some(DESK_EPS),
        alpha: Some(DESK_ALPHA),
        ..NorstSpec::default()
    }
}

pub fn full_norst() -> NorstSpec {
    NorstSpec {
        eps: Some(0.01),
        k: Some(8),
        alpha: Some(300),
        omega_evals: Some(7.5e-4),
        xi: None,
    }
}

fn table_algorithms(norst: NorstSpec) -> Vec<AlgorithmSpec> {
    vec![
        AlgorithmSpec::Norst(norst.clone()),
        AlgorithmSpec::NorstOffline(norst),
        AlgorithmSpec::from_id("altproj").expect("known id"),
    ]
}

/// Both desk scenarios against NORST, offline NORST and AltProj.
pub fn desk_suite(trials: usize) -> BenchSuite {
    let entries = [desk_bernoulli(0), desk_moving_object(0)]
        .into_iter()
        .map(|scenario| SuiteEntry {
            scenario,
            algorithms: table_algorithms(desk_norst()),
            checkpoint_every: DESK_ALPHA,
        })
        .collect();
    BenchSuite {
        name: "desk".into(),
        base_seed: 0,
        trials,
        entries,
        thresholds: BTreeMap::from([("norst".into(), 1e-2), ("norst-offline".into(), 1e-2)]),
        verify_tol: 1e-9,
    }
}

pub fn full_suite(trials: usize) -> BenchSuite {
    let entries = [full_bernoulli(0), full_moving_object(0)]
        .into_iter()
        .map(|scenario| SuiteEntry {
            scenario,
            algorithms: table_algorithms(full_norst()),
            checkpoint_every: 300,
        })
        .collect();
    BenchSuite {
        name: "full".into(),
        base_seed: 0,
        trials,
        entries,
        thresholds: BTreeMap::new(),
        verify_tol: 1e-9,
    }
}

/// Looks up a suite preset by name (`desk` or `full`); `trials` defaults to
/// 10 and 100 respectively.
pub fn suite(name: &str, trials: Option<usize>) -> Result<BenchSuite> {
    match name {
        "desk" => Ok(desk_suite(trials.unwrap_or(10))),
        "full" => Ok(full_suite(trials.unwrap_or(100))),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset {other:?}; expected desk or full"
        ))),
    }
}
