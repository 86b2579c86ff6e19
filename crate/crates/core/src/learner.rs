//! Pieces shared by the exploration learners: checkpoint grids, error curves,
//! per-episode run logs and the step recorder.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{ceil, pow, round};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::Counters;
use crate::mdp::{StationaryPolicy, TabularMdp, Trajectory, Transition};
use crate::objectives::estimation_errors;
use crate::Rng;

/// State every run starts from.
pub const INITIAL_STATE: usize = 0;

/// Steps at which errors are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointGrid {
    /// `{ceil(n * ratio^-j) : j >= 0}`.
    Geometric { ratio: f64 },
    /// `points` log-spaced steps from `first` to `n`.
    LogSpaced { first: u64, points: usize },
    /// The given steps that do not exceed `n`, plus `n` itself.
    Explicit(Vec<u64>),
}

impl CheckpointGrid {
    pub fn fw_default() -> Self {
        CheckpointGrid::Geometric { ratio: 1.25 }
    }

    pub fn harness_default() -> Self {
        CheckpointGrid::LogSpaced { first: 100, points: 40 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CheckpointGrid::Geometric { ratio } if !(*ratio > 1.0) => {
                Err(Error::InvalidConfig(format!("geometric grid ratio must exceed 1, got {ratio}")))
            }
            CheckpointGrid::LogSpaced { first, points } if *first == 0 || *points == 0 => {
                Err(Error::InvalidConfig("log-spaced grid needs first >= 1 and points >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Strictly increasing steps in `1..=n`, always ending at `n`.
    pub fn steps(&self, n: u64) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        if n == 0 {
            return out;
        }
        match self {
            CheckpointGrid::Geometric { ratio } => {
                let mut j = 0;
                loop {
                    let t = ceil(n as f64 * pow(*ratio, -(j as f64))) as u64;
                    out.push(t.max(1));
                    if t <= 1 {
                        break;
                    }
                    j += 1;
                }
            }
            CheckpointGrid::LogSpaced { first, points } => {
                let first = if *first >= n { 1 } else { *first };
                let span = n as f64 / first as f64;
                let m = (*points).max(1);
                for i in 0..m {
                    let frac = if m == 1 { 1.0 } else { i as f64 / (m - 1) as f64 };
                    out.push(round(first as f64 * pow(span, frac)) as u64);
                }
            }
            CheckpointGrid::Explicit(steps) => out.extend(steps.iter().copied().filter(|&t| t >= 1 && t <= n)),
        }
        out.push(n);
        out.retain(|&t| t >= 1 && t <= n);
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Errors of the plug-in model after `step` transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub step: u64,
    pub error_avg: f64,
    pub error_max: f64,
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Scheduled length reached.
    Length,
    /// Gradient drift exceeded the threshold.
    Drift,
    /// A pair doubled its count.
    Doubling,
    /// The step budget ran out.
    Budget,
}

/// One run-log record per episode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub k: u64,
    /// Step count before the episode.
    pub t_k: u64,
    /// Steps actually taken.
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planned_length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
    /// `"uniform"`, `"optimal"` or an error description.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_downgrades: Option<usize>,
    /// LP optimum, or the EVI gain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    /// Whether `lam` was clipped into the surrogate domain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clipped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evi_sweeps: Option<usize>,
}

/// Everything a learner run produces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub curve: Vec<ErrorPoint>,
    pub log: Vec<EpisodeRecord>,
}

/// Learner identifiers as used in configs and result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    FwModEst,
    WeightedMaxEnt,
    MaxEnt,
    Uniform,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::FwModEst, Algorithm::WeightedMaxEnt, Algorithm::MaxEnt, Algorithm::Uniform];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::FwModEst => "fw-modest",
            Algorithm::WeightedMaxEnt => "weighted-maxent",
            Algorithm::MaxEnt => "maxent",
            Algorithm::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "fwmodest" => Ok(Algorithm::FwModEst),
            "weightedmaxent" => Ok(Algorithm::WeightedMaxEnt),
            "maxent" => Ok(Algorithm::MaxEnt),
            "uniform" => Ok(Algorithm::Uniform),
            _ => Err(Error::InvalidConfig(format!("unknown algorithm `{s}`"))),
        }
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.id().into()
    }
}

/// Drives the environment and records counters, the trajectory and the
/// error curve.
pub(crate) struct Recorder<'a> {
    pub mdp: &'a TabularMdp,
    pub counters: Counters,
    pub state: usize,
    pub rng: Rng,
    budget: u64,
    checkpoints: Vec<u64>,
    next_checkpoint: usize,
    out: RunOutput,
}

impl<'a> Recorder<'a> {
    pub fn new(mdp: &'a TabularMdp, budget: u64, grid: &CheckpointGrid, seed: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least one step".into()));
        }
        grid.validate()?;
        Ok(Self {
            mdp,
            counters: Counters::for_mdp(mdp),
            state: INITIAL_STATE,
            rng: crate::rng_from_seed(seed),
            budget,
            checkpoints: grid.steps(budget),
            next_checkpoint: 0,
            out: RunOutput { trajectory: Trajectory { steps: Vec::new(), seed }, ..RunOutput::default() },
        })
    }

    pub fn t(&self) -> u64 {
        self.counters.total()
    }

    pub fn done(&self) -> bool {
        self.counters.total() >= self.budget
    }

    /// Plays `action` in the current state.
    pub fn act(&mut self, action: usize) -> Transition {
        let next_state = self.mdp.step(self.state, action, &mut self.rng);
        let tr = Transition { state: self.state, action, next_state };
        self.counters.update(tr);
        self.out.trajectory.steps.push(tr);
        self.state = next_state;
        if self.checkpoints.get(self.next_checkpoint) == Some(&self.counters.total()) {
            self.next_checkpoint += 1;
            let model = self.counters.empirical_model();
            let (error_avg, error_max) =
                estimation_errors(model.p_hat(), self.mdp.transitions(), self.mdp.num_states())
                    .expect("model and truth share a shape");
            self.out.curve.push(ErrorPoint { step: self.counters.total(), error_avg, error_max });
        }
        tr
    }

    /// Draws an action from `policy` and plays it.
    pub fn act_with(&mut self, policy: &StationaryPolicy) -> Transition {
        let a = policy.sample(self.state, &mut self.rng);
        self.act(a)
    }

    pub fn log(&mut self, record: EpisodeRecord) {
        self.out.log.push(record);
    }

    pub fn finish(self) -> RunOutput {
        self.out
    }
}

/// Plays the uniform policy for `n` steps.
pub fn uniform_baseline_run(mdp: &TabularMdp, n: u64, grid: &CheckpointGrid, seed: u64) -> Result<RunOutput> {
    let mut rec = Recorder::new(mdp, n, grid, seed)?;
    let policy = StationaryPolicy::uniform(mdp.num_states(), mdp.num_actions());
    while !rec.done() {
        rec.act_with(&policy);
    }
    rec.log(EpisodeRecord { k: 1, t_k: 0, steps: n, stop: Some(StopReason::Budget), ..EpisodeRecord::default() });
    Ok(rec.finish())
}
