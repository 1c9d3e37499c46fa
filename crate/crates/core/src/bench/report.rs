use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{monte_carlo, BenchSuite, MetricRow, SuiteReport};
use crate::error::{Error, Result};

/// Comparison methods that have no implementation here.
const NOT_IMPLEMENTED: [&str; 3] = ["GRASTA", "ORPCA", "RPCA-GD"];

const HEADER: [&str; 4] = ["t", "SE", "rel_err", "wall_ms"];

/// Writes `t,SE,rel_err,wall_ms` rows; floats use the shortest
/// representation that parses back to the same value.
pub fn write_metrics_csv<W: Write>(w: W, rows: &[MetricRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(HEADER)?;
    for r in rows {
        wtr.write_record([
            r.t.to_string(),
            format!("{:?}", r.se),
            format!("{:?}", r.rel_err),
            format!("{:?}", r.wall_ms),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(r: R) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
    };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(MetricRow {
                t: rec[0]
                    .parse()
                    .map_err(|e| Error::Format(format!("bad frame index {:?}: {e}", &rec[0])))?,
                se: num(&rec[1])?,
                rel_err: num(&rec[2])?,
                wall_ms: num(&rec[3])?,
            })
        })
        .collect()
}

fn csv_name(scenario: &str, algo: &str) -> String {
    format!("{scenario}__{algo}.csv")
}

fn summary(rep: &SuiteReport) -> Value {
    let mut table = Map::new();
    for c in &rep.cells {
        let row = table
            .entry(c.scenario.clone())
            .or_insert_with(|| Value::Object(Map::new()));
        row.as_object_mut().expect("object").insert(
            c.algo.clone(),
            json!({
                "rel_err_mean": c.final_rel_err.mean,
                "rel_err_std": c.final_rel_err.std,
                "time_per_frame_ms": c.time_per_frame_ms(),
                "trials": c.trials,
                "failures": c.failures,
            }),
        );
    }
    let expected: Map<String, Value> = NOT_IMPLEMENTED
        .iter()
        .map(|m| (m.to_string(), json!("expected failure: method not implemented")))
        .collect();
    json!({
        "suite": rep.suite.name,
        "trials": rep.suite.trials,
        "base_seed": rep.suite.base_seed,
        "metric": "rel_err = ||Lhat - L||_F / ||L||_F over frames t >= t_train",
        "table": table,
        "expected_failures": expected,
    })
}

fn plot_script(rep: &SuiteReport) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\nset logscale y\nset xlabel \"t\"\nset ylabel \"SE\"\nset terminal pngcairo size 900,600\n");
    let mut scenarios: Vec<&str> = rep.cells.iter().map(|c| c.scenario.as_str()).collect();
    scenarios.dedup();
    for sc in scenarios {
        let _ = writeln!(s, "set output \"{sc}_se.png\"\nset title \"{sc}\"");
        let plots: Vec<String> = rep
            .cells
            .iter()
            .filter(|c| c.scenario == sc)
            .map(|c| format!("\"{}\" using 1:2 skip 1 with linespoints title \"{}\"", csv_name(sc, &c.algo), c.algo))
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}

/// Writes one mean-metric CSV per (scenario, algorithm), `summary.json`,
/// `records.json`, `suite.json` and `plot.gp` into `dir`.
pub fn report(rep: &SuiteReport, dir: impl AsRef<Path>) -> Result<()> {
    if rep.cells.is_empty() {
        return Err(Error::Precondition("no records to report".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for c in &rep.cells {
        let rows: Vec<MetricRow> = c
            .rows
            .iter()
            .map(|r| MetricRow {
                t: r.t,
                se: r.se.mean,
                rel_err: r.rel_err.mean,
                wall_ms: r.wall_ms.mean,
            })
            .collect();
        let f = fs::File::create(dir.join(csv_name(&c.scenario, &c.algo)))?;
        write_metrics_csv(std::io::BufWriter::new(f), &rows)?;
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary(rep))?)?;
    let records: Vec<_> = rep.cells.iter().flat_map(|c| &c.records).collect();
    fs::write(dir.join("records.json"), serde_json::to_string_pretty(&records)?)?;
    fs::write(dir.join("suite.json"), serde_json::to_string_pretty(&rep.suite)?)?;
    fs::write(dir.join("plot.gp"), plot_script(rep))?;
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOutcome {
    pub compared: usize,
    pub mismatches: Vec<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= tol * b.abs().max(1e-300)
}

/// Reruns the suite stored in `golden/suite.json` and compares every CSV
/// (wall times excluded) against the stored files.
pub fn verify(golden: impl AsRef<Path>) -> Result<VerifyOutcome> {
    let golden = golden.as_ref();
    let suite = BenchSuite::load(golden.join("suite.json"))?;
    let rep = monte_carlo(&suite)?;
    let mut out = VerifyOutcome::default();
    for c in &rep.cells {
        let name = csv_name(&c.scenario, &c.algo);
        let expected = match fs::File::open(golden.join(&name)) {
            Ok(f) => read_metrics_csv(f)?,
            Err(e) => {
                out.mismatches.push(format!("{name}: {e}"));
                continue;
            }
        };
        if expected.len() != c.rows.len() {
            out.mismatches.push(format!(
                "{name}: {} rows, golden has {}",
                c.rows.len(),
                expected.len()
            ));
            continue;
        }
        for (got, want) in c.rows.iter().zip(&expected) {
            out.compared += 1;
            let ok = got.t == want.t
                && close(got.se.mean, want.se, suite.verify_tol)
                && close(got.rel_err.mean, want.rel_err, suite.verify_tol);
            if !ok {
                out.mismatches.push(format!(
                    "{name} t={}: SE {:e} vs {:e}, rel_err {:e} vs {:e}",
                    got.t, got.se.mean, want.se, got.rel_err.mean, want.rel_err
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{AggregateRow, CellReport, Stat};
    use proptest::prelude::*;

    fn row_strategy() -> impl Strategy<Value = MetricRow> {
        (0usize..100_000, any::<f64>(), -1e300f64..1e300, 0.0f64..1e9).prop_map(|(t, se, rel_err, wall_ms)| MetricRow {
            t,
            se,
            rel_err,
            wall_ms,
        })
    }

    proptest! {
        #[test]
        fn metrics_csv_roundtrips(rows in proptest::collection::vec(row_strategy(), 0..20)) {
            let mut buf = Vec::new();
            write_metrics_csv(&mut buf, &rows).unwrap();
            let back = read_metrics_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in back.iter().zip(&rows) {
                prop_assert_eq!(a.t, b.t);
                prop_assert!(a.se.to_bits() == b.se.to_bits() || (a.se.is_nan() && b.se.is_nan()));
                prop_assert_eq!(a.rel_err, b.rel_err);
                prop_assert_eq!(a.wall_ms, b.wall_ms);
            }
        }
    }

    fn empty_report() -> SuiteReport {
        SuiteReport {
            suite: crate::bench::presets::desk_suite(1),
            cells: vec![],
        }
    }

    #[test]
    fn empty_report_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report(&empty_report(), dir.path()), Err(Error::Precondition(_))));
    }

    #[test]
    fn summary_keys_follow_cells() {
        let stat = Stat { mean: 0.5, std: 0.0 };
        let cell = |sc: &str, algo: &str| CellReport {
            scenario: sc.into(),
            algo: algo.into(),
            frames: 10,
            trials: 1,
            failures: 0,
            final_rel_err: stat,
            total_ms: stat,
            rows: vec![AggregateRow { t: 9, se: stat, rel_err: stat, wall_ms: stat }],
            records: vec![],
        };
        let mut rep = empty_report();
        rep.cells = vec![cell("a", "norst"), cell("a", "altproj"), cell("b", "norst")];
        let s = summary(&rep);
        let table = s["table"].as_object().unwrap();
        assert_eq!(table.keys().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(table["a"].as_object().unwrap().len(), 2);
        assert_eq!(table["b"].as_object().unwrap().len(), 1);
        assert_eq!(s["expected_failures"].as_object().unwrap().len(), 3);
        let dir = tempfile::tempdir().unwrap();
        report(&rep, dir.path()).unwrap();
        let script = fs::read_to_string(dir.path().join("plot.gp")).unwrap();
        assert!(script.contains("a__altproj.csv") && script.contains("b__norst.csv"));
    }
}
