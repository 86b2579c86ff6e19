//! Seeded multi-run orchestration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use modest_core::envs::EnvSpec;
use modest_core::fw_modest::fw_modest_run;
use modest_core::learner::{Algorithm, EpisodeRecord, RunOutput};
use modest_core::weighted_maxent::weighted_maxent_run;
use modest_core::TabularMdp;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::results::{aggregate, write_aggregate, write_results, ResultRow};

/// One run-log line: the episode record tagged with its run.
#[derive(Debug, Clone, Serialize)]
pub struct LogLine {
    pub env: EnvSpec,
    pub algo: Algorithm,
    pub seed: u64,
    #[serde(flatten)]
    pub record: EpisodeRecord,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    pub log: Vec<LogLine>,
}

/// Runs one learner once.
pub fn run_single(mdp: &TabularMdp, config: &ExperimentConfig, algo: Algorithm, seed: u64) -> modest_core::Result<RunOutput> {
    match algo {
        Algorithm::FwModEst => fw_modest_run(mdp, &config.fw_config(), seed),
        _ => weighted_maxent_run(mdp, &config.wme_config(algo), seed),
    }
}

/// Runs `runs` seeds of every `(env, algo)`; run `r` uses `seed_base + r`.
/// Output order is `(env, algo, seed)` in config order, whatever the
/// completion order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let mdps: Vec<TabularMdp> = config.envs.iter().map(|e| e.build()).collect::<modest_core::Result<_>>()?;
    let mut tasks = Vec::new();
    for e in 0..config.envs.len() {
        for a in 0..config.algorithms.len() {
            for r in 0..config.runs {
                tasks.push((e, a, config.seed_base + r));
            }
        }
    }
    let mut outputs: Vec<((usize, usize, u64), RunOutput)> = tasks
        .into_par_iter()
        .map(|(e, a, seed)| {
            let (env, algo) = (config.envs[e], config.algorithms[a]);
            run_single(&mdps[e], config, algo, seed)
                .map(|out| ((e, a, seed), out))
                .map_err(|source| CliError::Run { env, algo, seed, source })
        })
        .collect::<Result<_>>()?;
    outputs.sort_by_key(|(key, _)| *key);

    let mut results = ExperimentResults::default();
    for ((e, a, seed), out) in outputs {
        let (env, algo) = (config.envs[e], config.algorithms[a]);
        results.rows.extend(out.curve.iter().map(|p| ResultRow {
            env,
            algo,
            seed,
            step: p.step,
            error_avg: p.error_avg,
            error_max: p.error_max,
        }));
        results.log.extend(out.log.into_iter().map(|record| LogLine { env, algo, seed, record }));
    }
    Ok(results)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes the results CSV, the aggregate CSV and the JSON-lines run log.
pub fn write_outputs(config: &ExperimentConfig, results: &ExperimentResults) -> Result<()> {
    let path = config.results_path();
    write_results(create(&path)?, &results.rows, true)?;
    write_aggregate(create(&config.aggregate_path())?, &aggregate(&results.rows), true)?;
    let log_path = config.log_path();
    let mut log = create(&log_path)?;
    for line in &results.log {
        serde_json::to_writer(&mut log, line)?;
        log.write_all(b"\n").map_err(|e| CliError::io(&log_path, e))?;
    }
    log.flush().map_err(|e| CliError::io(&log_path, e))
}
