//! Result rows, the results/aggregate CSV formats and final-step summaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use modest_core::envs::EnvSpec;
use modest_core::learner::Algorithm;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::stats::{mean, sample_std};

pub const RESULTS_HEADER: [&str; 6] = ["env", "algo", "seed", "step", "error_avg", "error_max"];

pub const AGGREGATE_HEADER: [&str; 8] =
    ["env", "algo", "step", "runs", "mean_error_avg", "std_error_avg", "mean_error_max", "std_error_max"];

/// Errors of one run at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub env: EnvSpec,
    pub algo: Algorithm,
    pub seed: u64,
    pub step: u64,
    pub error_avg: f64,
    pub error_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub env: EnvSpec,
    pub algo: Algorithm,
    pub step: u64,
    pub runs: usize,
    pub mean_error_avg: f64,
    pub std_error_avg: f64,
    pub mean_error_max: f64,
    pub std_error_max: f64,
}

/// Ten significant digits.
pub fn fmt_err(x: f64) -> String {
    format!("{x:.9e}")
}

fn timestamp_line() -> String {
    format!("# generated {}", chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn write_header(out: &mut impl Write, timestamp: bool) -> std::io::Result<()> {
    if timestamp {
        writeln!(out, "{}", timestamp_line())?;
    }
    Ok(())
}

/// Writes the results CSV, preceded by a `#` timestamp line when asked.
pub fn write_results(out: impl Write, rows: &[ResultRow], timestamp: bool) -> Result<()> {
    let mut out = out;
    write_header(&mut out, timestamp).map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.env.to_string(),
            r.algo.to_string(),
            r.seed.to_string(),
            r.step.to_string(),
            fmt_err(r.error_avg),
            fmt_err(r.error_max),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_aggregate(out: impl Write, rows: &[AggregateRow], timestamp: bool) -> Result<()> {
    let mut out = out;
    write_header(&mut out, timestamp).map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.env.to_string(),
            r.algo.to_string(),
            r.step.to_string(),
            r.runs.to_string(),
            fmt_err(r.mean_error_avg),
            fmt_err(r.std_error_avg),
            fmt_err(r.mean_error_max),
            fmt_err(r.std_error_max),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parses a results CSV. `#` lines are skipped, the header must match
/// exactly and steps must increase within each run.
pub fn read_results(input: impl Read) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(CliError::Malformed(format!("expected header `{}`, found `{}`", RESULTS_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows: Vec<ResultRow> = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        let row: ResultRow = rec.map_err(|e| CliError::Malformed(format!("row {}: {e}", i + 1)))?;
        if let Some(prev) = rows.last() {
            let same_run = prev.env == row.env && prev.algo == row.algo && prev.seed == row.seed;
            if same_run && row.step <= prev.step {
                return Err(CliError::Malformed(format!("row {}: step {} does not increase", i + 1, row.step)));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

type GroupKey = (EnvSpec, Algorithm);

/// Groups rows by `(env, algo)` in order of first appearance.
fn groups<T>(rows: &[ResultRow], mut init: impl FnMut() -> T, mut add: impl FnMut(&mut T, &ResultRow)) -> Vec<(GroupKey, T)> {
    let mut out: Vec<(GroupKey, T)> = Vec::new();
    for r in rows {
        let key = (r.env, r.algo);
        let idx = match out.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                out.push((key, init()));
                out.len() - 1
            }
        };
        add(&mut out[idx].1, r);
    }
    out
}

/// Mean and sample std over seeds, per `(env, algo, step)`.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let grouped = groups(rows, BTreeMap::<u64, Vec<(f64, f64)>>::new, |m, r| {
        m.entry(r.step).or_default().push((r.error_avg, r.error_max));
    });
    let mut out = Vec::new();
    for ((env, algo), steps) in grouped {
        for (step, vals) in steps {
            let avg: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let max: Vec<f64> = vals.iter().map(|v| v.1).collect();
            out.push(AggregateRow {
                env,
                algo,
                step,
                runs: vals.len(),
                mean_error_avg: mean(&avg),
                std_error_avg: sample_std(&avg),
                mean_error_max: mean(&max),
                std_error_max: sample_std(&max),
            });
        }
    }
    out
}

/// Errors at the last checkpoint of every run of one `(env, algo)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalErrors {
    pub env: EnvSpec,
    pub algo: Algorithm,
    pub step: u64,
    pub error_avg: Vec<f64>,
    pub error_max: Vec<f64>,
}

pub fn final_errors(rows: &[ResultRow]) -> Vec<FinalErrors> {
    let grouped = groups(rows, BTreeMap::<u64, (u64, f64, f64)>::new, |m, r| {
        let e = m.entry(r.seed).or_insert((r.step, r.error_avg, r.error_max));
        if r.step >= e.0 {
            *e = (r.step, r.error_avg, r.error_max);
        }
    });
    grouped
        .into_iter()
        .map(|((env, algo), seeds)| FinalErrors {
            env,
            algo,
            step: seeds.values().map(|v| v.0).max().unwrap_or(0),
            error_avg: seeds.values().map(|v| v.1).collect(),
            error_max: seeds.values().map(|v| v.2).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, step: u64, e: f64) -> ResultRow {
        ResultRow { env: EnvSpec::Wheel { size: 5 }, algo: Algorithm::MaxEnt, seed, step, error_avg: e, error_max: 2.0 * e }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_results(&mut buf, &[row(0, 1, 0.5)], false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "env,algo,seed,step,error_avg,error_max\nwheel:5,maxent,0,1,5.000000000e-1,1.000000000e0\n");
    }

    #[test]
    fn timestamp_is_skipped_on_read() {
        let mut buf = Vec::new();
        write_results(&mut buf, &[row(0, 1, 0.5), row(0, 2, 0.25)], true).unwrap();
        assert!(buf.starts_with(b"# generated "));
        assert_eq!(read_results(buf.as_slice()).unwrap().len(), 2);
    }

    #[test]
    fn non_increasing_steps_are_rejected() {
        let mut buf = Vec::new();
        write_results(&mut buf, &[row(0, 2, 0.5), row(0, 2, 0.25)], false).unwrap();
        assert!(read_results(buf.as_slice()).is_err());
        assert!(read_results("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn aggregate_over_seeds() {
        let rows = [row(0, 10, 1.0), row(0, 20, 0.5), row(1, 10, 3.0), row(1, 20, 0.5)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].mean_error_avg, 2.0);
        assert!((agg[0].std_error_avg - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg[1].std_error_avg, 0.0);
        let fin = final_errors(&rows);
        assert_eq!(fin[0].step, 20);
        assert_eq!(fin[0].error_avg, vec![0.5, 0.5]);
    }
}
