//! FW-ModEst: episodic Frank-Wolfe over empirical state-action frequencies.
//! Each episode maximises the optimistic negative gradient of the error
//! surrogate with the extended LP and plays the extracted policy.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    bernstein_halfwidths, noise_upper_bound, transitional_noise, ConfidenceSet, Counters,
    EmpiricalModel,
};
use crate::learner::{CheckpointGrid, EpisodeRecord, Recorder, RunOutput, StopReason};
use crate::lp::{extract_occupancy, extract_policy, solve_extended_lp};
use crate::mdp::{StationaryPolicy, TabularMdp};
use crate::objectives::Objective;

/// Surrogate minimised by the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwObjective {
    #[default]
    AvgSurrogate,
    LseWorstSurrogate,
}

/// Episode lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeSchedule {
    /// `3k^2 - 3k + 1`, so that `k` episodes take `k^3` steps.
    #[default]
    Cubic,
    Fixed(u64),
}

/// Length of episode `k >= 1`.
pub fn episode_length(k: u64, schedule: EpisodeSchedule) -> u64 {
    match schedule {
        EpisodeSchedule::Cubic => 3 * k * k - 3 * k + 1,
        EpisodeSchedule::Fixed(len) => len,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FwConfig {
    pub eta: f64,
    pub delta: f64,
    pub budget: u64,
    pub objective: FwObjective,
    pub schedule: EpisodeSchedule,
    pub checkpoints: CheckpointGrid,
    /// Use the true noise, the true model and zero-width intervals.
    pub oracle: bool,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            eta: 1e-4,
            delta: 0.1,
            budget: 10_000,
            objective: FwObjective::AvgSurrogate,
            schedule: EpisodeSchedule::Cubic,
            checkpoints: CheckpointGrid::fw_default(),
            oracle: false,
        }
    }
}

impl FwConfig {
    pub fn validate(&self, num_states: usize, num_actions: usize) -> Result<()> {
        if !(self.eta >= 0.0) || self.eta * (num_states * num_actions) as f64 > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "eta={} must satisfy 0 <= eta*S*A <= 1 for S*A={}",
                self.eta,
                num_states * num_actions
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least one step".into()));
        }
        if self.schedule == EpisodeSchedule::Fixed(0) {
            return Err(Error::InvalidConfig("fixed episode length must be positive".into()));
        }
        self.checkpoints.validate()
    }

    fn surrogate(&self, num_states: usize, num_actions: usize, noise: Vec<f64>) -> Objective {
        let obj = match self.objective {
            FwObjective::AvgSurrogate => Objective::avg_surrogate(num_states, num_actions, noise, self.budget),
            FwObjective::LseWorstSurrogate => {
                Objective::lse_worst_surrogate(num_states, num_actions, noise, self.budget)
            }
        };
        obj.with_eta(self.eta)
    }
}

/// Reward of the next episode, `-grad L(lam)` with `V` replaced by `noise`
/// and `lam = max(T/t, eta/2)`. Also reports whether clipping was active.
pub fn optimistic_gradient(counters: &Counters, noise: &[f64], config: &FwConfig) -> Result<(Vec<f64>, bool)> {
    let (ns, na) = (counters.num_states(), counters.num_actions());
    let floor = config.eta / 2.0;
    let mut clipped = false;
    let lam: Vec<f64> = counters
        .frequencies()
        .into_iter()
        .map(|l| {
            if l < floor {
                clipped = true;
                floor
            } else {
                l
            }
        })
        .collect();
    let obj = config.surrogate(ns, na, noise.to_vec());
    let g = obj.loss_gradient(&lam)?;
    Ok((g.into_iter().map(|x| -x).collect(), clipped))
}

/// One FW-ModEst run from state 0.
pub fn fw_modest_run(mdp: &TabularMdp, config: &FwConfig, seed: u64) -> Result<RunOutput> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    config.validate(ns, na)?;
    let mut rec = Recorder::new(mdp, config.budget, &config.checkpoints, seed)?;
    let true_noise = config.oracle.then(|| transitional_noise(mdp));
    let mut k = 0u64;
    while !rec.done() {
        k += 1;
        let t_k = rec.t();
        let planned = episode_length(k, config.schedule);
        let mut record = EpisodeRecord { k, t_k, planned_length: Some(planned), ..EpisodeRecord::default() };
        let policy = if k == 1 {
            record.lp_status = Some("uniform".into());
            StationaryPolicy::uniform(ns, na)
        } else {
            let (model, conf, noise) = if let Some(v) = &true_noise {
                (EmpiricalModel::from_mdp(mdp), ConfidenceSet::exact(ns, na), v.clone())
            } else {
                let model = rec.counters.empirical_model();
                let conf = bernstein_halfwidths(&rec.counters, &model, config.delta)?;
                let noise = noise_upper_bound(&rec.counters, &model, config.delta)?.into_vec();
                (model, conf, noise)
            };
            let (reward, clipped) = optimistic_gradient(&rec.counters, &noise, config)?;
            record.clipped = Some(clipped);
            let sol = solve_extended_lp(&reward, &model, &conf, config.eta)?;
            record.lp_status = Some("optimal".into());
            record.eta_used = Some(sol.eta_used);
            record.eta_downgrades = Some(sol.downgrades);
            record.objective = Some(sol.value);
            extract_policy(&extract_occupancy(&sol.q))
        };
        let mut taken = 0;
        while taken < planned && !rec.done() {
            rec.act_with(&policy);
            taken += 1;
        }
        record.steps = taken;
        record.stop = Some(if taken == planned { StopReason::Length } else { StopReason::Budget });
        rec.log(record);
    }
    Ok(rec.finish())
}
