//! Experiment configuration, read from a single JSON document.

use std::path::{Path, PathBuf};

use modest_core::envs::EnvSpec;
use modest_core::fw_modest::{EpisodeSchedule, FwConfig, FwObjective};
use modest_core::learner::{Algorithm, CheckpointGrid};
use modest_core::weighted_maxent::{WeightMode, WmeConfig};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, Result};

/// Where a run writes its files. Unset paths are derived from `results`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub results: Option<PathBuf>,
    pub aggregate: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One environment id or a list of them.
    #[serde(alias = "env", deserialize_with = "one_or_many")]
    pub envs: Vec<EnvSpec>,
    pub algorithms: Vec<Algorithm>,
    pub budget: u64,
    pub runs: u64,
    pub delta: f64,
    /// Occupancy floor of FW-ModEst.
    pub eta: f64,
    /// Entropy smoothing of the entropy learners; `null` picks the default.
    pub mu: Option<f64>,
    pub seed_base: u64,
    pub checkpoints: CheckpointGrid,
    pub fw_objective: FwObjective,
    pub fw_schedule: EpisodeSchedule,
    /// Doubling test over all pairs instead of the pair being played.
    pub strict_all_pairs: bool,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            envs: vec![EnvSpec::NoisyRiverSwim { size: 12 }],
            algorithms: Algorithm::ALL.to_vec(),
            budget: 200_000,
            runs: 20,
            delta: 0.1,
            eta: 1e-4,
            mu: None,
            seed_base: 0,
            checkpoints: CheckpointGrid::harness_default(),
            fw_objective: FwObjective::AvgSurrogate,
            fw_schedule: EpisodeSchedule::Cubic,
            strict_all_pairs: false,
            output: OutputPaths::default(),
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<EnvSpec>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(EnvSpec),
        Many(Vec<EnvSpec>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(e) => vec![e],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        if self.envs.is_empty() || self.algorithms.is_empty() {
            return Err(CliError::Config("at least one environment and one algorithm are required".into()));
        }
        for env in &self.envs {
            let mdp = env.build()?;
            let (s, a) = (mdp.num_states(), mdp.num_actions());
            for algo in &self.algorithms {
                match algo {
                    Algorithm::FwModEst => self.fw_config().validate(s, a)?,
                    _ => self.wme_config(*algo).validate(s)?,
                }
            }
        }
        Ok(())
    }

    pub fn fw_config(&self) -> FwConfig {
        FwConfig {
            eta: self.eta,
            delta: self.delta,
            budget: self.budget,
            objective: self.fw_objective,
            schedule: self.fw_schedule,
            checkpoints: self.checkpoints.clone(),
            oracle: false,
        }
    }

    /// Settings of the entropy learners and the uniform baseline.
    pub fn wme_config(&self, algo: Algorithm) -> WmeConfig {
        let weights = match algo {
            Algorithm::MaxEnt => WeightMode::UnitWeightsMaxEnt,
            Algorithm::Uniform => WeightMode::UniformBaseline,
            _ => WeightMode::OptimisticVplus,
        };
        WmeConfig {
            mu: self.mu,
            delta: self.delta,
            budget: self.budget,
            weights,
            strict_all_pairs: self.strict_all_pairs,
            checkpoints: self.checkpoints.clone(),
        }
    }

    pub fn results_path(&self) -> PathBuf {
        self.output.results.clone().unwrap_or_else(|| PathBuf::from("results.csv"))
    }

    /// `<results>.aggregate.csv` unless set.
    pub fn aggregate_path(&self) -> PathBuf {
        self.output.aggregate.clone().unwrap_or_else(|| sibling(&self.results_path(), "aggregate.csv"))
    }

    /// `<results>.log.jsonl` unless set.
    pub fn log_path(&self) -> PathBuf {
        self.output.log.clone().unwrap_or_else(|| sibling(&self.results_path(), "log.jsonl"))
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_env_alias() {
        let c = ExperimentConfig::from_json(r#"{"env": "wheel:5", "runs": 2}"#).unwrap();
        assert_eq!(c.envs, vec![EnvSpec::Wheel { size: 5 }]);
        assert_eq!(c.budget, 200_000);
    }

    #[test]
    fn derived_paths() {
        let c = ExperimentConfig::from_json(r#"{"output": {"results": "out/fig2.csv"}}"#).unwrap();
        assert_eq!(c.aggregate_path(), PathBuf::from("out/fig2.aggregate.csv"));
        assert_eq!(c.log_path(), PathBuf::from("out/fig2.log.jsonl"));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_json(r#"{"runs": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"delta": 1.5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"algorithms": ["fw-modest"], "eta": 0.5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"budgett": 10}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"env": "lake:4"}"#).is_err());
    }

    #[test]
    fn schedule_syntax() {
        let c = ExperimentConfig::from_json(r#"{"fw_schedule": {"fixed": 1000}}"#).unwrap();
        assert_eq!(c.fw_schedule, EpisodeSchedule::Fixed(1000));
    }
}
