use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slr::bench::{self, presets, AlgorithmSpec};
use slr::norst::{Norst, TrackerEvent};
use slr::synth::{assemble_scenario, GroundTruth, ScenarioConfig};

/// Sparse + low-rank decomposition and robust subspace tracking.
#[derive(Parser)]
#[command(name = "slr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize a scenario into a directory of matrices.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm on a scenario and print its record as JSON.
    Run {
        #[arg(long)]
        algo: String,
        /// Scenario config; assembled on the fly.
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        config: Option<PathBuf>,
        /// Directory written by `slr gen`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// JSON algorithm spec overriding the defaults for `--algo`.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        checkpoint_every: usize,
        /// For norst: print one CSV line per frame instead of the record.
        #[arg(long)]
        stream: bool,
    },
    /// Monte-Carlo suite with CSV/JSON/plot output.
    Bench {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        suite: Option<PathBuf>,
        /// `desk` or `full`.
        #[arg(long)]
        preset: Option<String>,
        /// Required to run the full-size preset.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerun a stored suite and compare against its outputs.
    Verify {
        #[arg(long)]
        golden: PathBuf,
    },
}

fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var("SLR_SEED") {
        Ok(s) => Ok(Some(s.trim().parse().map_err(|e| anyhow::anyhow!("SLR_SEED={s:?}: {e}"))?)),
        Err(_) => Ok(None),
    }
}

fn load_truth(config: Option<PathBuf>, data: Option<PathBuf>) -> anyhow::Result<GroundTruth> {
    if let Some(dir) = data {
        return Ok(GroundTruth::load(dir)?);
    }
    let mut cfg = ScenarioConfig::load(config.expect("clap requires one source"))?;
    if let Some(seed) = env_seed()? {
        cfg.seed = seed;
    }
    Ok(assemble_scenario(&cfg)?)
}

fn stream_norst(truth: &GroundTruth, algo: &AlgorithmSpec) -> anyhow::Result<()> {
    let AlgorithmSpec::Norst(spec) = algo else {
        anyhow::bail!("--stream is only available for norst");
    };
    let cfg = &truth.config;
    let params = spec.resolve(cfg)?;
    let init = truth.m.columns(0, params.t_train).into_owned();
    let mut tracker = Norst::initialize(params.clone(), &init)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "t,phase,k,support_size,residual,event")?;
    for t in params.t_train..cfg.tmax {
        let f = tracker.process(&truth.m.column(t).into_owned())?;
        let event = match f.event {
            Some(TrackerEvent::Detected { j, .. }) => format!("detected:{j}"),
            Some(TrackerEvent::Updated { j, k }) => format!("updated:{j}:{k}"),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{:?},{},{},{:?},{}",
            f.t,
            f.phase,
            f.k,
            f.recovery.support.len(),
            f.recovery.residual,
            event
        )?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Gen { config, out } => {
            let mut cfg = ScenarioConfig::load(config)?;
            if let Some(seed) = env_seed()? {
                cfg.seed = seed;
            }
            assemble_scenario(&cfg)?.save(&out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Run {
            algo,
            config,
            data,
            params,
            checkpoint_every,
            stream,
        } => {
            let spec = match params {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => AlgorithmSpec::from_id(&algo)?,
            };
            if spec.id() != algo {
                anyhow::bail!("--params describes {}, not {algo}", spec.id());
            }
            let truth = load_truth(config, data)?;
            if stream {
                stream_norst(&truth, &spec)?;
            } else {
                let rec = bench::run_on(&truth, &spec, checkpoint_every);
                println!("{}", serde_json::to_string_pretty(&rec)?);
                if let Some(e) = rec.error {
                    anyhow::bail!("{algo} failed: {e}");
                }
            }
        }
        Command::Bench {
            suite,
            preset,
            full,
            trials,
            out,
        } => {
            let mut s = match (suite, preset) {
                (Some(path), _) => bench::BenchSuite::load(path)?,
                (None, Some(name)) => {
                    if name == "full" && !full {
                        anyhow::bail!("the full preset is large; pass --full to run it");
                    }
                    presets::suite(&name, None)?
                }
                (None, None) => unreachable!("clap requires a suite source"),
            };
            if let Some(n) = trials {
                s.trials = n;
            }
            if let Some(seed) = env_seed()? {
                s.base_seed = seed;
            }
            let rep = bench::monte_carlo(&s)?;
            bench::report(&rep, &out)?;
            for c in &rep.cells {
                println!(
                    "{:<24} {:<14} rel_err {:.3e} ± {:.1e}  {:.3} ms/frame  failures {}/{}",
                    c.scenario,
                    c.algo,
                    c.final_rel_err.mean,
                    c.final_rel_err.std,
                    c.time_per_frame_ms(),
                    c.failures,
                    c.trials
                );
            }
            let failures = rep.threshold_failures();
            for (sc, algo, mean, bound) in &failures {
                eprintln!("threshold exceeded: {sc}/{algo} mean rel_err {mean:e} > {bound:e}");
            }
            if !failures.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Verify { golden } => {
            let outcome = bench::verify(&golden)?;
            for m in &outcome.mismatches {
                eprintln!("mismatch: {m}");
            }
            println!(
                "compared {} rows, {} mismatches",
                outcome.compared,
                outcome.mismatches.len()
            );
            if !outcome.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
