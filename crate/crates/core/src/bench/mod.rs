//! Monte-Carlo experiment runner: scenario assembly, algorithm dispatch,
//! per-checkpoint metrics, trial aggregation and reporting.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, rel_frobenius_error, subspace_error, topr_svd};
use crate::mc::{fit_observed, grouse_step, mc_altmin, AltMinOptions, GrouseStep, MaskedMatrix};
use crate::norst::{norst_init, norst_offline, norst_run_observed, NorstParams, XiMode};
use crate::rng::streams;
use crate::rpca::{altproj, default_lambda, modified_pcp, pcp_admm, AltProjConfig, SlrDecomposition};
use crate::synth::{assemble_scenario, gen_missing_mask, standard_normal_matrix, GroundTruth, ScenarioConfig};

pub mod presets;
mod report;

pub use report::{read_metrics_csv, report, verify, write_metrics_csv, VerifyOutcome};

/// Overrides on top of the parameter rules in [`NorstParams::new`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NorstSpec {
    /// Accuracy target; drives `K` and `ω_evals`. Default `0.01`.
    pub eps: Option<f64>,
    pub k: Option<usize>,
    pub alpha: Option<usize>,
    pub omega_evals: Option<f64>,
    pub xi: Option<f64>,
}

impl NorstSpec {
    pub fn resolve(&self, cfg: &ScenarioConfig) -> Result<NorstParams> {
        let xmin = cfg.magnitude.min_abs();
        let mut p = NorstParams::new(cfg.n, cfg.r, xmin, self.eps.unwrap_or(0.01), cfg.t_train);
        if let Some(k) = self.k {
            p.k = k;
        }
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        if let Some(xi) = self.xi {
            p.xi = XiMode::Fixed { xi };
        }
        p.omega_evals = self.omega_evals;
        p.validate()?;
        Ok(p)
    }
}

fn default_pcp_tol() -> f64 {
    1e-7
}

fn default_pcp_iters() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Altproj {
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        t_per_stage: Option<usize>,
    },
    Pcp {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default = "default_pcp_tol")]
        tol: f64,
        #[serde(default = "default_pcp_iters")]
        max_iters: usize,
    },
    /// Modified PCP with `G` taken from the NORST initialization on the
    /// training frames.
    Modpcp {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default = "default_pcp_tol")]
        tol: f64,
        #[serde(default = "default_pcp_iters")]
        max_iters: usize,
        #[serde(default)]
        eps_noise: f64,
    },
    Norst(NorstSpec),
    NorstOffline(NorstSpec),
    /// Completes `L + noise` observed with probability `p` per entry.
    McAltmin {
        p: f64,
        #[serde(default)]
        options: AltMinOptions,
    },
    /// Tracks the columns of `L + noise` observed with probability `p`.
    Grouse { p: f64, step: GrouseStep },
}

pub const ALGORITHM_IDS: [&str; 7] = [
    "altproj",
    "pcp",
    "modpcp",
    "norst",
    "norst-offline",
    "mc-altmin",
    "grouse",
];

impl AlgorithmSpec {
    pub fn id(&self) -> &'static str {
        match self {
            AlgorithmSpec::Altproj { .. } => "altproj",
            AlgorithmSpec::Pcp { .. } => "pcp",
            AlgorithmSpec::Modpcp { .. } => "modpcp",
            AlgorithmSpec::Norst(_) => "norst",
            AlgorithmSpec::NorstOffline(_) => "norst-offline",
            AlgorithmSpec::McAltmin { .. } => "mc-altmin",
            AlgorithmSpec::Grouse { .. } => "grouse",
        }
    }

    /// Default parameters for an algorithm id.
    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "altproj" => AlgorithmSpec::Altproj {
                eps: None,
                beta: None,
                t_per_stage: None,
            },
            "pcp" => AlgorithmSpec::Pcp {
                lambda: None,
                tol: default_pcp_tol(),
                max_iters: default_pcp_iters(),
            },
            "modpcp" => AlgorithmSpec::Modpcp {
                lambda: None,
                tol: default_pcp_tol(),
                max_iters: default_pcp_iters(),
                eps_noise: 0.0,
            },
            "norst" => AlgorithmSpec::Norst(NorstSpec::default()),
            "norst-offline" => AlgorithmSpec::NorstOffline(NorstSpec::default()),
            "mc-altmin" => AlgorithmSpec::McAltmin {
                p: 0.8,
                options: AltMinOptions::default(),
            },
            "grouse" => AlgorithmSpec::Grouse {
                p: 1.0,
                step: GrouseStep::Greedy,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown algorithm {other:?}; expected one of {}",
                    ALGORITHM_IDS.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub t: usize,
    #[serde(rename = "SE")]
    pub se: f64,
    pub rel_err: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub algo: String,
    pub params: AlgorithmSpec,
    pub seed: u64,
    /// Time-ordered checkpoints.
    pub rows: Vec<MetricRow>,
    /// `‖L̂ − L‖_F / ‖L‖_F` over columns `t ≥ t_train`.
    pub final_rel_err: Option<f64>,
    pub total_ms: f64,
    #[serde(default)]
    pub change_estimates: Vec<usize>,
    /// Fraction of frames `t ≥ t_train` with `T̂_t = T_t`.
    #[serde(default)]
    pub support_exact_fraction: Option<f64>,
    #[serde(default)]
    pub error: Option<String>,
}

/// Checkpoint frames `t_train + kΔ − 1`, plus the last frame.
pub fn checkpoint_grid(t_train: usize, tmax: usize, every: usize) -> Vec<usize> {
    let every = every.max(1);
    let mut grid: Vec<usize> = (1..)
        .map(|k| t_train + k * every - 1)
        .take_while(|&t| t < tmax)
        .collect();
    if tmax > t_train && grid.last() != Some(&(tmax - 1)) {
        grid.push(tmax - 1);
    }
    grid
}

fn window_metrics(truth: &GroundTruth, lhat: &DMatrix<f64>, start: usize, t: usize) -> (f64, f64) {
    let l = truth.l.columns(start, t + 1 - start);
    let lh = lhat.columns(start, t + 1 - start);
    let rel = rel_frobenius_error(&lh.into_owned(), &l.into_owned());
    let r = truth.config.r.min(t + 1 - start);
    let se = topr_svd(&lh.into_owned(), r)
        .and_then(|s| subspace_error(&s.u, truth.basis_at(t)))
        .unwrap_or(f64::NAN);
    (se, rel)
}

fn tail_error(truth: &GroundTruth, lhat: &DMatrix<f64>) -> f64 {
    let t0 = truth.config.t_train;
    let len = truth.config.tmax - t0;
    rel_frobenius_error(&lhat.columns(t0, len).into_owned(), &truth.l.columns(t0, len).into_owned())
}

fn batch_rows(truth: &GroundTruth, lhat: &DMatrix<f64>, grid: &[usize], ms: f64) -> Vec<MetricRow> {
    let mut start = truth.config.t_train;
    grid.iter()
        .map(|&t| {
            let (se, rel_err) = window_metrics(truth, lhat, start, t);
            start = t + 1;
            MetricRow {
                t,
                se,
                rel_err,
                wall_ms: ms,
            }
        })
        .collect()
}

struct Outcome {
    lhat: DMatrix<f64>,
    rows: Option<Vec<MetricRow>>,
    change_estimates: Vec<usize>,
    supports: Option<Vec<Vec<usize>>>,
}

impl Outcome {
    fn batch(dec: SlrDecomposition) -> Self {
        Self {
            lhat: dec.lhat,
            rows: None,
            change_estimates: Vec::new(),
            supports: None,
        }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn lambda_or_default(lambda: Option<f64>, m: &DMatrix<f64>) -> f64 {
    lambda.unwrap_or_else(|| default_lambda(m.nrows(), m.ncols()))
}

/// Accepts the last iterate of a solver that hit its iteration cap.
fn last_iterate(res: Result<SlrDecomposition>) -> Result<SlrDecomposition> {
    match res {
        Err(Error::IterationLimit {
            last: crate::error::LastIterate::Decomposition(d),
            ..
        }) => Ok(*d),
        other => other,
    }
}

fn dispatch(truth: &GroundTruth, algo: &AlgorithmSpec, grid: &[usize], start: Instant) -> Result<Outcome> {
    let cfg = &truth.config;
    let m = &truth.m;
    match algo {
        AlgorithmSpec::Altproj { eps, beta, t_per_stage } => {
            let mut c = AltProjConfig::new(cfg.r);
            if let Some(e) = eps {
                c.eps = *e;
            }
            c.beta = *beta;
            c.t_per_stage = *t_per_stage;
            Ok(Outcome::batch(altproj(m, &c)?))
        }
        AlgorithmSpec::Pcp { lambda, tol, max_iters } => Ok(Outcome::batch(last_iterate(pcp_admm(
            m,
            lambda_or_default(*lambda, m),
            *tol,
            *max_iters,
        ))?)),
        AlgorithmSpec::Modpcp {
            lambda,
            tol,
            max_iters,
            eps_noise,
        } => {
            let t_train = cfg.t_train.max(cfg.r);
            let init = m.columns(0, t_train).into_owned();
            let (g, _) = norst_init(&init, cfg.r, 10)?;
            Ok(Outcome::batch(last_iterate(modified_pcp(
                m,
                &g,
                lambda_or_default(*lambda, m),
                *eps_noise,
                *tol,
                *max_iters,
            ))?))
        }
        AlgorithmSpec::Norst(spec) | AlgorithmSpec::NorstOffline(spec) => {
            let params = spec.resolve(cfg)?;
            let mut stamps = BTreeMap::new();
            let mut next = 0;
            let run = norst_run_observed(m, &params, |out| {
                if grid.get(next) == Some(&out.t) {
                    stamps.insert(out.t, elapsed_ms(start));
                    next += 1;
                }
            })?;
            if let AlgorithmSpec::NorstOffline(_) = algo {
                let off = norst_offline(m, &run, &params)?;
                return Ok(Outcome {
                    lhat: off.lhat,
                    rows: None,
                    change_estimates: off.change_estimates,
                    supports: Some(off.supports),
                });
            }
            let mut window_start = cfg.t_train;
            let rows = grid
                .iter()
                .map(|&t| {
                    let (_, rel_err) = window_metrics(truth, &run.lhat, window_start, t);
                    window_start = t + 1;
                    let se = subspace_error(run.basis_after(t), truth.basis_at(t)).unwrap_or(f64::NAN);
                    MetricRow {
                        t,
                        se,
                        rel_err,
                        wall_ms: stamps.get(&t).copied().unwrap_or(f64::NAN),
                    }
                })
                .collect();
            Ok(Outcome {
                lhat: run.lhat,
                rows: Some(rows),
                change_estimates: run.change_estimates,
                supports: Some(run.supports),
            })
        }
        AlgorithmSpec::McAltmin { p, options } => {
            let mask = gen_missing_mask(cfg.n, cfg.tmax, *p, cfg.seed)?;
            let y = MaskedMatrix::new(&(&truth.l + &truth.noise), mask)?;
            let mut opts = options.clone();
            opts.seed = cfg.seed;
            Ok(Outcome {
                lhat: mc_altmin(&y, cfg.r, &opts)?.lhat,
                rows: None,
                change_estimates: Vec::new(),
                supports: None,
            })
        }
        AlgorithmSpec::Grouse { p, step } => {
            let mask = gen_missing_mask(cfg.n, cfg.tmax, *p, cfg.seed)?;
            let data = &truth.l + &truth.noise;
            let mut phat = orthonormalize(&standard_normal_matrix(cfg.n, cfg.r, cfg.seed, streams::GROUSE_INIT))?;
            let mut lhat = DMatrix::zeros(cfg.n, cfg.tmax);
            let mut rows = Vec::with_capacity(grid.len());
            let mut next = 0;
            let mut window_start = cfg.t_train;
            for t in 0..cfg.tmax {
                let y = data.column(t).into_owned();
                let omega = mask.column_indices(t);
                if let Some(fit) = fit_observed(&phat, &y, &omega) {
                    lhat.set_column(t, &fit);
                }
                phat = grouse_step(&phat, &y, &omega, *step)?.0;
                if grid.get(next) == Some(&t) {
                    let (_, rel_err) = window_metrics(truth, &lhat, window_start, t);
                    window_start = t + 1;
                    rows.push(MetricRow {
                        t,
                        se: subspace_error(&phat, truth.basis_at(t))?,
                        rel_err,
                        wall_ms: elapsed_ms(start),
                    });
                    next += 1;
                }
            }
            Ok(Outcome {
                lhat,
                rows: Some(rows),
                change_estimates: Vec::new(),
                supports: None,
            })
        }
    }
}

/// Runs one algorithm on an assembled scenario. Solver errors are recorded
/// in the returned record.
pub fn run_on(truth: &GroundTruth, algo: &AlgorithmSpec, checkpoint_every: usize) -> RunRecord {
    let cfg = &truth.config;
    let grid = checkpoint_grid(cfg.t_train, cfg.tmax, checkpoint_every);
    let start = Instant::now();
    let outcome = dispatch(truth, algo, &grid, start);
    let total_ms = elapsed_ms(start);
    let mut record = RunRecord {
        scenario: cfg.id.clone(),
        algo: algo.id().to_string(),
        params: algo.clone(),
        seed: cfg.seed,
        rows: Vec::new(),
        final_rel_err: None,
        total_ms,
        change_estimates: Vec::new(),
        support_exact_fraction: None,
        error: None,
    };
    match outcome {
        Ok(out) => {
            record.rows = out
                .rows
                .unwrap_or_else(|| batch_rows(truth, &out.lhat, &grid, total_ms));
            record.final_rel_err = Some(tail_error(truth, &out.lhat));
            record.change_estimates = out.change_estimates;
            record.support_exact_fraction = out.supports.map(|s| {
                let frames = cfg.t_train..cfg.tmax;
                let total = frames.len().max(1);
                let exact = frames.filter(|&t| s[t] == truth.support.column(t)).count();
                exact as f64 / total as f64
            });
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Assembles `scenario` and runs `algo` on it.
pub fn run_once(scenario: &ScenarioConfig, algo: &AlgorithmSpec, checkpoint_every: usize) -> RunRecord {
    match assemble_scenario(scenario) {
        Ok(truth) => run_on(&truth, algo, checkpoint_every),
        Err(e) => RunRecord {
            scenario: scenario.id.clone(),
            algo: algo.id().to_string(),
            params: algo.clone(),
            seed: scenario.seed,
            rows: Vec::new(),
            final_rel_err: None,
            total_ms: 0.0,
            change_estimates: Vec::new(),
            support_exact_fraction: None,
            error: Some(e.to_string()),
        },
    }
}

fn default_checkpoint() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
}

fn default_trials() -> usize {
    1
}

fn default_verify_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSuite {
    pub name: String,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub entries: Vec<SuiteEntry>,
    /// Upper bounds on the mean final relative error, keyed by algorithm id.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    /// Relative tolerance for golden-file comparison.
    #[serde(default = "default_verify_tol")]
    pub verify_tol: f64,
}

impl BenchSuite {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trial count must be at least 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entries {
            e.scenario.validate()?;
            if e.scenario.id.is_empty() {
                return Err(Error::InvalidConfig("every suite scenario needs an id".into()));
            }
            for a in &e.algorithms {
                if !seen.insert((e.scenario.id.clone(), a.id())) {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate (scenario, algorithm) pair ({}, {})",
                        e.scenario.id,
                        a.id()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and sample standard deviation; the values are sorted first so
    /// the result does not depend on their order.
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: usize,
    pub se: Stat,
    pub rel_err: Stat,
    pub wall_ms: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub scenario: String,
    pub algo: String,
    pub frames: usize,
    pub trials: usize,
    pub failures: usize,
    pub final_rel_err: Stat,
    pub total_ms: Stat,
    pub rows: Vec<AggregateRow>,
    /// Per-trial records, ordered by seed.
    pub records: Vec<RunRecord>,
}

impl CellReport {
    /// Aggregates the records of one (scenario, algorithm) pair.
    pub fn aggregate(mut records: Vec<RunRecord>, frames: usize) -> Self {
        records.sort_by_key(|r| r.seed);
        let ok: Vec<&RunRecord> = records.iter().filter(|r| r.error.is_none()).collect();
        // t -> (SE, rel_err, wall_ms) samples
        type Samples = (Vec<f64>, Vec<f64>, Vec<f64>);
        let mut by_t: BTreeMap<usize, Samples> = BTreeMap::new();
        for r in &ok {
            for row in &r.rows {
                let e = by_t.entry(row.t).or_default();
                e.0.push(row.se);
                e.1.push(row.rel_err);
                e.2.push(row.wall_ms);
            }
        }
        let rows = by_t
            .into_iter()
            .map(|(t, (se, rel, ms))| AggregateRow {
                t,
                se: Stat::of(&se),
                rel_err: Stat::of(&rel),
                wall_ms: Stat::of(&ms),
            })
            .collect();
        let finals: Vec<f64> = ok.iter().filter_map(|r| r.final_rel_err).collect();
        let times: Vec<f64> = ok.iter().map(|r| r.total_ms).collect();
        Self {
            scenario: records.first().map(|r| r.scenario.clone()).unwrap_or_default(),
            algo: records.first().map(|r| r.algo.clone()).unwrap_or_default(),
            frames,
            trials: records.len(),
            failures: records.len() - ok.len(),
            final_rel_err: Stat::of(&finals),
            total_ms: Stat::of(&times),
            rows,
            records,
        }
    }

    /// Mean wall time per frame, in milliseconds.
    pub fn time_per_frame_ms(&self) -> f64 {
        self.total_ms.mean / self.frames.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: BenchSuite,
    pub cells: Vec<CellReport>,
}

impl SuiteReport {
    pub fn cell(&self, scenario: &str, algo: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.scenario == scenario && c.algo == algo)
    }

    /// `(scenario, algo, mean, bound)` for every threshold that is exceeded
    /// (or cannot be evaluated because every trial failed).
    pub fn threshold_failures(&self) -> Vec<(String, String, f64, f64)> {
        let mut out = Vec::new();
        for c in &self.cells {
            if let Some(&bound) = self.suite.thresholds.get(&c.algo) {
                let mean = c.final_rel_err.mean;
                if !(mean <= bound) {
                    out.push((c.scenario.clone(), c.algo.clone(), mean, bound));
                }
            }
        }
        out
    }
}

/// Runs every (scenario, algorithm) pair for `suite.trials` trials. Trial
/// `i` uses scenario seed `base_seed + i`; trials run on the rayon pool.
pub fn monte_carlo(suite: &BenchSuite) -> Result<SuiteReport> {
    suite.validate()?;
    let jobs: Vec<(usize, u64)> = (0..suite.entries.len())
        .flat_map(|e| (0..suite.trials as u64).map(move |i| (e, suite.base_seed + i)))
        .collect();
    let results: Vec<(usize, Vec<RunRecord>)> = jobs
        .par_iter()
        .map(|&(e, seed)| {
            let entry = &suite.entries[e];
            let mut scenario = entry.scenario.clone();
            scenario.seed = seed;
            let records = match assemble_scenario(&scenario) {
                Ok(truth) => entry
                    .algorithms
                    .iter()
                    .map(|a| run_on(&truth, a, entry.checkpoint_every))
                    .collect(),
                Err(_) => entry
                    .algorithms
                    .iter()
                    .map(|a| run_once(&scenario, a, entry.checkpoint_every))
                    .collect(),
            };
            (e, records)
        })
        .collect();
    let mut cells = Vec::new();
    for (e, entry) in suite.entries.iter().enumerate() {
        let frames = entry.scenario.tmax - entry.scenario.t_train;
        for (a, _) in entry.algorithms.iter().enumerate() {
            let records: Vec<RunRecord> = results
                .iter()
                .filter(|(idx, _)| *idx == e)
                .map(|(_, recs)| recs[a].clone())
                .collect();
            cells.push(CellReport::aggregate(records, frames));
        }
    }
    Ok(SuiteReport {
        suite: suite.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{CoeffModel, MagnitudeLaw, OutlierModel, OutlierSegment};

    fn clean(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            id: "clean".into(),
            n: 40,
            tmax: 60,
            r: 2,
            change_times: vec![],
            deltas: vec![],
            coeff_model: CoeffModel::Gaussian1OverD,
            outliers: vec![],
            magnitude: MagnitudeLaw::Interval { min: 10.0, max: 20.0 },
            noise_variance: 0.0,
            t_train: 0,
            seed,
        }
    }

    #[test]
    fn grid_ends_at_last_frame() {
        assert_eq!(checkpoint_grid(100, 400, 120), vec![219, 339, 399]);
        assert_eq!(checkpoint_grid(0, 10, 5), vec![4, 9]);
    }

    #[test]
    fn altproj_on_clean_data_is_exact() {
        let rec = run_once(&clean(1), &AlgorithmSpec::from_id("altproj").unwrap(), 20);
        assert!(rec.error.is_none());
        assert!(rec.final_rel_err.unwrap() <= 1e-8);
        assert_eq!(rec.rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![19, 39, 59]);
    }

    #[test]
    fn runs_are_deterministic_apart_from_time() {
        let mut cfg = clean(2);
        cfg.outliers = vec![OutlierSegment {
            start: 0,
            model: OutlierModel::Bernoulli { rho: 0.02 },
        }];
        let algo = AlgorithmSpec::from_id("altproj").unwrap();
        let strip = |r: RunRecord| -> Vec<(usize, f64, f64)> { r.rows.iter().map(|m| (m.t, m.se, m.rel_err)).collect() };
        assert_eq!(strip(run_once(&cfg, &algo, 20)), strip(run_once(&cfg, &algo, 20)));
    }

    #[test]
    fn solver_errors_are_recorded() {
        let mut cfg = clean(3);
        cfg.t_train = 1;
        let rec = run_once(&cfg, &AlgorithmSpec::Norst(NorstSpec::default()), 20);
        assert!(rec.error.is_some());
        assert!(rec.final_rel_err.is_none());
    }

    #[test]
    fn unknown_algorithm_is_rejected() {
        assert!(AlgorithmSpec::from_id("rpca-gd").is_err());
        for id in ALGORITHM_IDS {
            assert_eq!(AlgorithmSpec::from_id(id).unwrap().id(), id);
        }
    }

    #[test]
    fn single_trial_aggregate_equals_record() {
        let suite = BenchSuite {
            name: "one".into(),
            base_seed: 5,
            trials: 1,
            entries: vec![SuiteEntry {
                scenario: clean(0),
                algorithms: vec![AlgorithmSpec::from_id("altproj").unwrap()],
                checkpoint_every: 30,
            }],
            thresholds: BTreeMap::new(),
            verify_tol: 1e-9,
        };
        let rep = monte_carlo(&suite).unwrap();
        let cell = rep.cell("clean", "altproj").unwrap();
        let rec = &cell.records[0];
        assert_eq!(rec.seed, 5);
        assert_eq!(cell.final_rel_err.mean, rec.final_rel_err.unwrap());
        assert_eq!(cell.final_rel_err.std, 0.0);
        for (agg, row) in cell.rows.iter().zip(&rec.rows) {
            assert_eq!((agg.t, agg.se.mean, agg.rel_err.mean), (row.t, row.se, row.rel_err));
        }
    }

    #[test]
    fn zero_trials_are_rejected() {
        let suite = BenchSuite {
            name: "none".into(),
            base_seed: 0,
            trials: 0,
            entries: vec![],
            thresholds: BTreeMap::new(),
            verify_tol: 1e-9,
        };
        assert!(matches!(monte_carlo(&suite), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn stat_is_order_invariant() {
        let a = Stat::of(&[0.1, 0.7, 0.3, 1e-9]);
        let b = Stat::of(&[1e-9, 0.3, 0.7, 0.1]);
        assert_eq!(a, b);
        assert_eq!(Stat::of(&[2.5, 2.5, 2.5]).std, 0.0);
    }
}
