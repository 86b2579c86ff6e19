//! Visit counters, the plug-in transition estimate, empirical Bernstein
//! confidence sets and optimistic transitional-noise bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Transition};

/// Visit counts `T(s,a)`, `T(s,a,s')` and the total step count `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    num_states: usize,
    num_actions: usize,
    visits: Vec<u64>,
    transitions: Vec<u64>,
    total: u64,
}

impl Counters {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            visits: vec![0; num_states * num_actions],
            transitions: vec![0; num_states * num_actions * num_states],
            total: 0,
        }
    }

    pub fn for_mdp(mdp: &TabularMdp) -> Self {
        Self::new(mdp.num_states(), mdp.num_actions())
    }

    pub fn from_transitions<'a>(
        num_states: usize,
        num_actions: usize,
        steps: impl IntoIterator<Item = &'a Transition>,
    ) -> Self {
        let mut c = Self::new(num_states, num_actions);
        steps.into_iter().for_each(|t| c.update(*t));
        c
    }

    pub fn update(&mut self, t: Transition) {
        let pair = t.state * self.num_actions + t.action;
        self.visits[pair] += 1;
        self.transitions[pair * self.num_states + t.next_state] += 1;
        self.total += 1;
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.num_actions + a]
    }

    /// Flat `T(s,a)` vector, row-major.
    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    pub fn count(&self, s: usize, a: usize, next: usize) -> u64 {
        self.transitions[(s * self.num_actions + a) * self.num_states + next]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical state-action frequency `T(s,a)/t`; uniform before any step.
    pub fn frequencies(&self) -> Vec<f64> {
        if self.total == 0 {
            let n = self.visits.len();
            return vec![1.0 / n as f64; n];
        }
        let t = self.total as f64;
        self.visits.iter().map(|&v| v as f64 / t).collect()
    }

    /// Plug-in estimate `T(s,a,s') / max(T(s,a), 1)`; unvisited rows are
    /// replaced by the uniform row and flagged.
    pub fn empirical_model(&self) -> EmpiricalModel {
        let ns = self.num_states;
        let mut p_hat = vec![0.0; self.transitions.len()];
        let mut sigma2 = vec![0.0; self.transitions.len()];
        let mut visited = vec![false; self.visits.len()];
        for (pair, &n) in self.visits.iter().enumerate() {
            let row = &mut p_hat[pair * ns..(pair + 1) * ns];
            if n == 0 {
                row.fill(1.0 / ns as f64);
                // Zero variance: the raw estimate of an unvisited row is all-zero.
                continue;
            }
            visited[pair] = true;
            let counts = &self.transitions[pair * ns..(pair + 1) * ns];
            let var = &mut sigma2[pair * ns..(pair + 1) * ns];
            for ((p, v), &c) in row.iter_mut().zip(var.iter_mut()).zip(counts) {
                *p = c as f64 / n as f64;
                *v = *p * (1.0 - *p);
            }
        }
        EmpiricalModel { num_states: ns, num_actions: self.num_actions, p_hat, sigma2, visited }
    }
}

/// Plug-in transition estimate and its empirical variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModel {
    num_states: usize,
    num_actions: usize,
    p_hat: Vec<f64>,
    sigma2: Vec<f64>,
    visited: Vec<bool>,
}

impl EmpiricalModel {
    /// Model equal to the true rows of `mdp`, all flagged visited.
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let p_hat = mdp.transitions().to_vec();
        let sigma2 = p_hat.iter().map(|&p| p * (1.0 - p)).collect();
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            p_hat,
            sigma2,
            visited: vec![true; mdp.num_pairs()],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Flat `p_hat[s][a][s']`.
    pub fn p_hat(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.p_hat[start..start + self.num_states]
    }

    /// Flat empirical variances `p_hat (1 - p_hat)`; zero on unvisited rows.
    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn is_visited(&self, s: usize, a: usize) -> bool {
        self.visited[s * self.num_actions + a]
    }

    /// The estimate as an MDP (every row is a distribution).
    pub fn to_mdp(&self) -> TabularMdp {
        TabularMdp::new(self.num_states, self.num_actions, self.p_hat.clone())
            .unwrap_or_else(|_| {
                // Rows are exact ratios of integers; renormalise away rounding.
                let mut p = self.p_hat.clone();
                for row in p.chunks_mut(self.num_states) {
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= sum);
                }
                TabularMdp::new(self.num_states, self.num_actions, p).expect("normalised rows")
            })
    }
}

/// Per-entry half-widths `B(s,a,s')` of the Bernstein confidence set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    num_states: usize,
    num_actions: usize,
    half_widths: Vec<f64>,
    pub delta: f64,
    pub t: u64,
}

impl ConfidenceSet {
    /// Zero-width set: the estimate is taken as exact.
    pub fn exact(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            half_widths: vec![0.0; num_states * num_actions * num_states],
            delta: 0.0,
            t: 0,
        }
    }

    /// Set with the given flat half-widths.
    pub fn from_half_widths(num_states: usize, num_actions: usize, half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.len() != num_states * num_actions * num_states {
            return Err(Error::ShapeMismatch(format!(
                "{} half-widths for a {num_states}x{num_actions} model",
                half_widths.len()
            )));
        }
        if half_widths.iter().any(|&b| !(b >= 0.0)) {
            return Err(Error::InvalidConfig("half-widths must be non-negative".into()));
        }
        Ok(Self { num_states, num_actions, half_widths, delta: 0.0, t: 0 })
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.half_widths[start..start + self.num_states]
    }

    /// Whether `p(.|s,a)` lies within the set around `p_hat` for every pair.
    pub fn contains(&self, model: &EmpiricalModel, mdp: &TabularMdp) -> bool {
        self.half_widths
            .iter()
            .zip(model.p_hat())
            .zip(mdp.transitions())
            .all(|((&b, &ph), &p)| (ph - p).abs() <= b)
    }
}

/// Optimistic transitional-noise bound `V+(s,a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBound {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl NoiseBound {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("confidence delta must lie in (0,1), got {delta}")))
    }
}

/// `max(log(x), 1)`.
fn floored_log(x: f64) -> f64 {
    log(x).max(1.0)
}

/// `2 sqrt(sigma2 l / T+) + 6 l / T+` with `l = log(6 S A T+ / delta)`.
pub fn bernstein_half_width(sigma2: f64, visits: u64, num_states: usize, num_actions: usize, delta: f64) -> f64 {
    let tp = visits.max(1) as f64;
    let l = floored_log(6.0 * (num_states * num_actions) as f64 * tp / delta);
    2.0 * sqrt(sigma2 * l / tp) + 6.0 * l / tp
}

/// `sqrt(2 l' / T+)` with `l' = log(4 S^2 A T+^2 / delta)`: the per-entry
/// slack of the noise upper bound.
pub fn noise_slack(visits: u64, num_states: usize, num_actions: usize, delta: f64) -> f64 {
    let tp = visits.max(1) as f64;
    let s = num_states as f64;
    let l = floored_log(4.0 * s * s * num_actions as f64 * tp * tp / delta);
    sqrt(2.0 * l / tp)
}

pub fn bernstein_halfwidths(counters: &Counters, model: &EmpiricalModel, delta: f64) -> Result<ConfidenceSet> {
    check_delta(delta)?;
    let (ns, na) = (counters.num_states(), counters.num_actions());
    let mut half_widths = vec![0.0; ns * na * ns];
    for (pair, &n) in counters.visit_counts().iter().enumerate() {
        for j in 0..ns {
            let idx = pair * ns + j;
            half_widths[idx] = bernstein_half_width(model.sigma2()[idx], n, ns, na, delta);
        }
    }
    Ok(ConfidenceSet { num_states: ns, num_actions: na, half_widths, delta, t: counters.total() })
}

pub fn noise_upper_bound(counters: &Counters, model: &EmpiricalModel, delta: f64) -> Result<NoiseBound> {
    check_delta(delta)?;
    let (ns, na) = (counters.num_states(), counters.num_actions());
    let root_s = sqrt(ns as f64);
    let values = counters
        .visit_counts()
        .iter()
        .enumerate()
        .map(|(pair, &n)| {
            let sigma: f64 = model.sigma2()[pair * ns..(pair + 1) * ns].iter().map(|&v| sqrt(v)).sum();
            (sigma + ns as f64 * noise_slack(n, ns, na, delta)) / root_s
        })
        .collect();
    Ok(NoiseBound { num_states: ns, num_actions: na, values })
}

/// `V(s,a) = sum_{s'} sqrt(p (1-p)) / sqrt(S)`.
pub fn true_transitional_noise(mdp: &TabularMdp, s: usize, a: usize) -> f64 {
    row_noise(mdp.row(s, a))
}

/// [`true_transitional_noise`] for every pair, row-major.
pub fn transitional_noise(mdp: &TabularMdp) -> Vec<f64> {
    mdp.transitions().chunks(mdp.num_states()).map(row_noise).collect()
}

fn row_noise(row: &[f64]) -> f64 {
    row.iter().map(|&p| sqrt(p * (1.0 - p))).sum::<f64>() / sqrt(row.len() as f64)
}
