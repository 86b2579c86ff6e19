use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use modest_core::envs::EnvSpec;
use modest_core::optimal::FwSettings;
use modest_cli::offline::{self, AllocationKind};
use modest_cli::plot::{emit_plot, Metric};
use modest_cli::results::{final_errors, read_results};
use modest_cli::stats::{mean, sample_std};
use modest_cli::table::render_table;
use modest_cli::{run_experiment, write_outputs, CliError, ExperimentConfig, Result};

const CONFIG_HELP: &str = "\
The config is one JSON document; every key is optional:

  env | envs        environment id or list      default \"noisyriverswim:12\"
                    ids: noisyriverswim:<S>, wheel:<S>, garnet:<S>x<A>x<b>:<seed>
  algorithms        list of fw-modest, weighted-maxent, maxent, uniform   default all four
  budget            steps per run               default 200000
  runs              seeds per (env, algo)       default 20
  seed_base         run r uses seed_base + r    default 0
  delta             confidence level            default 0.1
  eta               FW-ModEst occupancy floor   default 0.0001
  mu                entropy smoothing, null = 1/(n^(1/3) S^(2/3))   default null
  checkpoints       {\"log_spaced\": {\"first\": 100, \"points\": 40}} (default),
                    {\"geometric\": {\"ratio\": r}} or {\"explicit\": [t1, t2, ...]}
  fw_objective      \"avg_surrogate\" (default) or \"lse_worst_surrogate\"
  fw_schedule       \"cubic\" (default, 3k^2-3k+1) or {\"fixed\": L}
  strict_all_pairs  doubling test over all pairs   default false
  output            {\"results\": path, \"aggregate\": path, \"log\": path}
                    default results.csv, <stem>.aggregate.csv, <stem>.log.jsonl

`modest config` prints the defaults as JSON.";

#[derive(Parser)]
#[command(name = "modest", version, about = "Reward-free exploration experiments for tabular MDP model estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Avg,
    Max,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded multi-run experiment and write results, aggregate and log files.
    #[command(after_long_help = CONFIG_HELP)]
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Results CSV; overrides `output.results`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default experiment config.
    Config,
    /// Optimal allocation under the known model and its sampling-protocol error.
    Optimal {
        #[arg(long)]
        env: EnvSpec,
        /// maxent, weighted-maxent or fw-modest.
        #[arg(long)]
        objective: AllocationKind,
        /// Sample budget of the evaluation protocol.
        #[arg(long, default_value_t = 2_000_000)]
        n: u64,
        /// Occupancy floor [default: 1e-4 for fw-modest, 0 for the entropies].
        #[arg(long)]
        eta: Option<f64>,
        /// Entropy smoothing; 0 selects the 1e-12 guard.
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Evaluation seeds averaged over.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Frank-Wolfe iteration cap.
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        /// Write lam* as CSV (rows = states, columns = actions).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot mean error curves with +-1 std bands.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricArg::Avg)]
        metric: MetricArg,
    },
    /// Final-step mean +- std of both errors per environment and algorithm.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical simulation-lemma check on a sampled model.
    Simlemma {
        #[arg(long)]
        env: EnvSpec,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Next-state draws per pair for the estimated model.
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| CliError::io("<stdout>", e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if out.is_some() {
                cfg.output.results = out;
            }
            let results = run_experiment(&cfg)?;
            write_outputs(&cfg, &results)?;
            let mut stdout = io::stdout().lock();
            for f in final_errors(&results.rows) {
                writeln!(
                    stdout,
                    "{} {} step {}: E = {:.4e} ± {:.1e}, W = {:.4e} ± {:.1e}",
                    f.env,
                    f.algo,
                    f.step,
                    mean(&f.error_avg),
                    sample_std(&f.error_avg),
                    mean(&f.error_max),
                    sample_std(&f.error_max)
                )
                .map_err(|e| CliError::io("<stdout>", e))?;
            }
            Ok(())
        }
        Command::Config => print_json(&ExperimentConfig::default()),
        Command::Optimal { env, objective, n, eta, mu, seeds, seed_base, iterations, out } => {
            let mdp = env.build()?;
            let eta = eta.unwrap_or(objective.default_eta());
            let settings = FwSettings { iterations, eta, ..FwSettings::default() };
            let alloc = offline::optimal_allocation(&mdp, objective, mu, &settings)?;
            let errors = offline::table1_errors(&mdp, &alloc, n, seeds, seed_base)?;
            if let Some(path) = out {
                let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
                offline::write_lam_csv(BufWriter::new(file), &alloc)?;
            }
            print_json(&offline::summarize(&env.to_string(), objective, eta, mu, &alloc, n, &errors))
        }
        Command::Plot { input, out, metric } => {
            let metric = match metric {
                MetricArg::Avg => Metric::Average,
                MetricArg::Max => Metric::Worst,
            };
            emit_plot(&input, &out, metric)
        }
        Command::Table { input, out } => {
            let file = File::open(&input).map_err(|e| CliError::io(&input, e))?;
            let rows = read_results(file)?;
            if rows.is_empty() {
                return Err(CliError::Malformed("no result rows".into()));
            }
            let table = render_table(&rows);
            match out {
                Some(path) => std::fs::write(&path, table).map_err(|e| CliError::io(&path, e)),
                None => io::stdout().write_all(table.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
            }
        }
        Command::Simlemma { env, gamma, trials, samples, seed } => {
            let mdp = env.build()?;
            print_json(&offline::simlemma(&mdp, gamma, trials, samples, seed)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            let report = serde_json::json!({ "error": "usage", "message": message });
            eprintln!("{report}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::to_string(&e.report())
                .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.kind()));
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
