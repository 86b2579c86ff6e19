//! Offline computations behind the `optimal` and `simlemma` commands.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use modest_core::estimation::Counters;
use modest_core::optimal::{
    fw_modest_allocation, maxent_allocation, table1_error, weighted_maxent_allocation, FwSettings,
    OptimalAllocation, SURROGATE_ETA,
};
use modest_core::simlemma::{simulation_lemma_check, SimLemmaReport};
use modest_core::{TabularMdp, Transition};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::stats::{mean, sample_std};

/// Objective whose optimal allocation is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AllocationKind {
    #[serde(rename = "maxent")]
    MaxEnt,
    #[serde(rename = "weighted-maxent")]
    WeightedMaxEnt,
    #[serde(rename = "fw-modest")]
    FwModEst,
}

impl AllocationKind {
    /// Occupancy floor when none is given: `1e-4` for the surrogate, none
    /// for the entropies.
    pub fn default_eta(self) -> f64 {
        match self {
            AllocationKind::FwModEst => SURROGATE_ETA,
            _ => 0.0,
        }
    }
}

impl fmt::Display for AllocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationKind::MaxEnt => "maxent",
            AllocationKind::WeightedMaxEnt => "weighted-maxent",
            AllocationKind::FwModEst => "fw-modest",
        })
    }
}

impl FromStr for AllocationKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxent" => Ok(AllocationKind::MaxEnt),
            "weighted-maxent" => Ok(AllocationKind::WeightedMaxEnt),
            "fw-modest" => Ok(AllocationKind::FwModEst),
            _ => Err(CliError::Config(format!("unknown objective `{s}`; expected maxent, weighted-maxent or fw-modest"))),
        }
    }
}

pub fn optimal_allocation(mdp: &TabularMdp, kind: AllocationKind, mu: f64, settings: &FwSettings) -> Result<OptimalAllocation> {
    Ok(match kind {
        AllocationKind::MaxEnt => maxent_allocation(mdp, mu, settings)?,
        AllocationKind::WeightedMaxEnt => weighted_maxent_allocation(mdp, mu, settings)?,
        AllocationKind::FwModEst => fw_modest_allocation(mdp, settings)?,
    })
}

/// Sampling-protocol errors of `lam` for seeds `seed_base..seed_base + seeds`.
pub fn table1_errors(mdp: &TabularMdp, alloc: &OptimalAllocation, n: u64, seeds: u64, seed_base: u64) -> Result<Vec<f64>> {
    (seed_base..seed_base + seeds).map(|s| Ok(table1_error(mdp, &alloc.lam_star, n, s)?)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalSummary {
    pub env: String,
    pub objective: AllocationKind,
    pub eta: f64,
    pub mu: f64,
    pub value: f64,
    pub iterations: usize,
    pub gap: f64,
    pub best_gap: f64,
    pub smoothing_bias: f64,
    pub n: u64,
    pub seeds: u64,
    pub error_avg_mean: f64,
    pub error_avg_std: f64,
    /// Rows are states, columns actions.
    pub lam_star: Vec<Vec<f64>>,
}

pub fn lam_rows(alloc: &OptimalAllocation) -> Vec<Vec<f64>> {
    let lam = &alloc.lam_star;
    (0..lam.num_states()).map(|s| (0..lam.num_actions()).map(|a| lam.get(s, a)).collect()).collect()
}

pub fn summarize(
    env: &str,
    kind: AllocationKind,
    eta: f64,
    mu: f64,
    alloc: &OptimalAllocation,
    n: u64,
    errors: &[f64],
) -> OptimalSummary {
    OptimalSummary {
        env: env.to_string(),
        objective: kind,
        eta,
        mu,
        value: alloc.value,
        iterations: alloc.iterations,
        gap: alloc.gap,
        best_gap: alloc.best_gap,
        smoothing_bias: alloc.smoothing_bias,
        n,
        seeds: errors.len() as u64,
        error_avg_mean: mean(errors),
        error_avg_std: sample_std(errors),
        lam_star: lam_rows(alloc),
    }
}

/// `lam*` as CSV: one row per state, columns `a0..a{A-1}`.
pub fn write_lam_csv(out: impl Write, alloc: &OptimalAllocation) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let na = alloc.lam_star.num_actions();
    let mut header = vec!["state".to_string()];
    header.extend((0..na).map(|a| format!("a{a}")));
    w.write_record(&header)?;
    for (s, row) in lam_rows(alloc).into_iter().enumerate() {
        let mut rec = vec![s.to_string()];
        rec.extend(row.iter().map(|x| format!("{x:.9e}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Plug-in model from `samples` draws of every row.
pub fn sampled_model(mdp: &TabularMdp, samples: u64, seed: u64) -> Result<TabularMdp> {
    if samples == 0 {
        return Err(CliError::Config("samples per pair must be at least 1".into()));
    }
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut rng = modest_core::rng_from_seed(seed);
    let mut counters = Counters::new(ns, na);
    for s in 0..ns {
        for a in 0..na {
            for _ in 0..samples {
                let next_state = mdp.step(s, a, &mut rng);
                counters.update(Transition { state: s, action: a, next_state });
            }
        }
    }
    Ok(TabularMdp::new(ns, na, counters.empirical_model().p_hat().to_vec())?)
}

pub fn simlemma(mdp: &TabularMdp, gamma: f64, trials: usize, samples: u64, seed: u64) -> Result<SimLemmaReport> {
    let p_hat = sampled_model(mdp, samples, seed)?;
    Ok(simulation_lemma_check(mdp, &p_hat, gamma, trials, seed.wrapping_add(1))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in [AllocationKind::MaxEnt, AllocationKind::WeightedMaxEnt, AllocationKind::FwModEst] {
            assert_eq!(k.to_string().parse::<AllocationKind>().unwrap(), k);
        }
        assert!("entropy".parse::<AllocationKind>().is_err());
    }

    #[test]
    fn sampled_model_rows_sum_to_one() {
        let mdp = modest_core::envs::build_wheel(5).unwrap();
        let p = sampled_model(&mdp, 20, 3).unwrap();
        for pair in 0..p.num_pairs() {
            let row = &p.transitions()[pair * 5..(pair + 1) * 5];
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
