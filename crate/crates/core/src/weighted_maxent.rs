//! Weighted-MaxEnt: optimistic weighted-entropy gradients used as rewards of
//! extended value iteration, with episodes ended by gradient drift or count
//! doubling. Unit weights give the MaxEnt baseline.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{bernstein_halfwidths, noise_upper_bound, transitional_noise, Counters};
use crate::evi::evi;
use crate::learner::{uniform_baseline_run, CheckpointGrid, EpisodeRecord, Recorder, RunOutput, StopReason};
use crate::mdp::TabularMdp;
use crate::objectives::{modest_weights, smoothed_entropy_gradient};

/// Source of the entropy weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `V_hat+ / sqrt(S log(SA/delta))`, recomputed every episode.
    #[default]
    OptimisticVplus,
    /// Same scaling with the true noise.
    KnownV,
    /// Unit weights (MaxEnt).
    UnitWeightsMaxEnt,
    /// No learning: the uniform policy.
    UniformBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WmeConfig {
    /// Smoothing; `None` selects `1 / (n^(1/3) S^(2/3))`.
    pub mu: Option<f64>,
    pub delta: f64,
    pub budget: u64,
    pub weights: WeightMode,
    /// End the episode when any pair doubles, not only the one being played.
    pub strict_all_pairs: bool,
    pub checkpoints: CheckpointGrid,
}

impl Default for WmeConfig {
    fn default() -> Self {
        Self {
            mu: None,
            delta: 0.1,
            budget: 10_000,
            weights: WeightMode::OptimisticVplus,
            strict_all_pairs: false,
            checkpoints: CheckpointGrid::fw_default(),
        }
    }
}

/// `1 / (n^(1/3) S^(2/3))`.
pub fn default_mu(budget: u64, num_states: usize) -> f64 {
    1.0 / libm::cbrt(budget as f64 * (num_states * num_states) as f64)
}

/// Drift threshold `Q = 2 log(1/mu)`.
pub fn gradient_threshold(mu: f64) -> f64 {
    2.0 * log(1.0 / mu)
}

impl WmeConfig {
    pub fn maxent() -> Self {
        Self { weights: WeightMode::UnitWeightsMaxEnt, ..Self::default() }
    }

    pub fn resolved_mu(&self, num_states: usize) -> f64 {
        self.mu.unwrap_or_else(|| default_mu(self.budget, num_states))
    }

    pub fn validate(&self, num_states: usize) -> Result<()> {
        let mu = self.resolved_mu(num_states);
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!("learner smoothing mu must be positive, got {mu}")));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least one step".into()));
        }
        self.checkpoints.validate()
    }
}

/// `grad H_{w,mu}(lam)` with `w = V_hat+ / sqrt(S log(SA/delta))`.
pub fn optimistic_weighted_entropy_gradient(
    counters: &Counters,
    mu: f64,
    delta: f64,
    lam: &[f64],
) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("entropy gradient needs mu > 0, got {mu}")));
    }
    let model = counters.empirical_model();
    let noise = noise_upper_bound(counters, &model, delta)?;
    let w = modest_weights(noise.values(), counters.num_states(), counters.num_actions(), delta)?;
    smoothed_entropy_gradient(&w, lam, mu)
}

fn episode_weights(mode: WeightMode, counters: &Counters, true_noise: &[f64], delta: f64) -> Result<Vec<f64>> {
    let (ns, na) = (counters.num_states(), counters.num_actions());
    match mode {
        WeightMode::OptimisticVplus => {
            let model = counters.empirical_model();
            let noise = noise_upper_bound(counters, &model, delta)?;
            modest_weights(noise.values(), ns, na, delta)
        }
        WeightMode::KnownV => modest_weights(true_noise, ns, na, delta),
        WeightMode::UnitWeightsMaxEnt | WeightMode::UniformBaseline => Ok(vec![1.0; ns * na]),
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// One Weighted-MaxEnt (or MaxEnt, or uniform) run from state 0.
pub fn weighted_maxent_run(mdp: &TabularMdp, config: &WmeConfig, seed: u64) -> Result<RunOutput> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    config.validate(ns)?;
    if config.weights == WeightMode::UniformBaseline {
        return uniform_baseline_run(mdp, config.budget, &config.checkpoints, seed);
    }
    let mu = config.resolved_mu(ns);
    let threshold = gradient_threshold(mu);
    let true_noise = if config.weights == WeightMode::KnownV { transitional_noise(mdp) } else { Vec::new() };
    let mut rec = Recorder::new(mdp, config.budget, &config.checkpoints, seed)?;
    let mut k = 0;
    while !rec.done() {
        k += 1;
        let t_k = rec.t();
        let start_counts = rec.counters.visit_counts().to_vec();
        let w = episode_weights(config.weights, &rec.counters, &true_noise, config.delta)?;
        let theta_ref = smoothed_entropy_gradient(&w, &rec.counters.frequencies(), mu)?;
        let model = rec.counters.empirical_model();
        let conf = bernstein_halfwidths(&rec.counters, &model, config.delta)?;
        let plan = evi(&theta_ref, &model, &conf, 1.0 / sqrt(t_k.max(1) as f64))?;
        let mut nu = vec![0u64; ns * na];
        let mut drift = 0.0;
        let mut taken = 0u64;
        let stop = loop {
            if rec.done() {
                break StopReason::Budget;
            }
            let a = plan.actions[rec.state];
            if taken > 0 {
                if drift > threshold {
                    break StopReason::Drift;
                }
                let doubled = |pair: usize| nu[pair] >= start_counts[pair].max(1);
                let hit = if config.strict_all_pairs {
                    (0..ns * na).any(doubled)
                } else {
                    doubled(rec.state * na + a)
                };
                if hit {
                    break StopReason::Doubling;
                }
            }
            let tr = rec.act(a);
            nu[tr.state * na + tr.action] += 1;
            taken += 1;
            let theta = smoothed_entropy_gradient(&w, &rec.counters.frequencies(), mu)?;
            drift += distance(&theta, &theta_ref);
        };
        rec.log(EpisodeRecord {
            k,
            t_k,
            steps: taken,
            stop: Some(stop),
            objective: Some(plan.gain),
            threshold: Some(threshold),
            drift: Some(drift),
            evi_sweeps: Some(plan.iterations),
            ..EpisodeRecord::default()
        });
    }
    Ok(rec.finish())
}
