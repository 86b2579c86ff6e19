//! Empirical check of the simulation lemma: a policy that is optimal for an
//! estimated model loses at most `O(eps / (1 - gamma)^2)` in the true one,
//! where `eps` is the worst-case row error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::objectives::error_max;

/// Span tolerance of discounted value iteration.
pub const VI_TOLERANCE: f64 = 1e-10;

const VI_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLemmaReport {
    pub gamma: f64,
    /// `W(p_hat, p)`.
    pub epsilon: f64,
    /// `eps / (1 - gamma)^2`.
    pub scale: f64,
    pub trials: usize,
    pub max_suboptimality: f64,
    /// Largest `suboptimality / scale`; zero when `eps = 0`.
    pub max_ratio: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("discount must lie in (0,1), got {gamma}")))
    }
}

fn backup(mdp: &TabularMdp, reward: &[f64], gamma: f64, v: &[f64], s: usize, a: usize) -> f64 {
    let row = mdp.row(s, a);
    reward[s * mdp.num_actions() + a] + gamma * row.iter().zip(v).map(|(p, x)| p * x).sum::<f64>()
}

fn iterate(mut update: impl FnMut(&[f64]) -> Vec<f64>, ns: usize, gamma: f64) -> Result<Vec<f64>> {
    let mut v = vec![0.0; ns];
    for _ in 0..VI_MAX_ITERATIONS {
        let next = update(&v);
        let diff: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
        let span = diff.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - diff.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        v = next;
        if span <= VI_TOLERANCE && sup * gamma / (1.0 - gamma) <= VI_TOLERANCE {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { what: "discounted value iteration", iterations: VI_MAX_ITERATIONS })
}

/// Optimal discounted values and a greedy deterministic policy.
pub fn discounted_value_iteration(mdp: &TabularMdp, reward: &[f64], gamma: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    check_gamma(gamma)?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let v = iterate(
        |v| (0..ns).map(|s| (0..na).map(|a| backup(mdp, reward, gamma, v, s, a)).fold(f64::MIN, f64::max)).collect(),
        ns,
        gamma,
    )?;
    let policy = (0..ns)
        .map(|s| {
            let mut best = (f64::NEG_INFINITY, 0);
            for a in 0..na {
                let q = backup(mdp, reward, gamma, &v, s, a);
                if q > best.0 {
                    best = (q, a);
                }
            }
            best.1
        })
        .collect();
    Ok((v, policy))
}

/// Discounted values of a deterministic policy.
pub fn evaluate_policy(mdp: &TabularMdp, reward: &[f64], gamma: f64, policy: &[usize]) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let ns = mdp.num_states();
    iterate(|v| (0..ns).map(|s| backup(mdp, reward, gamma, v, s, policy[s])).collect(), ns, gamma)
}

/// Solves `trials` random reward functions in `[0,1]` on both models and
/// reports the worst loss of the estimated-model policy relative to
/// `W / (1 - gamma)^2`.
pub fn simulation_lemma_check(
    mdp: &TabularMdp,
    p_hat: &TabularMdp,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<SimLemmaReport> {
    check_gamma(gamma)?;
    if p_hat.num_states() != mdp.num_states() || p_hat.num_actions() != mdp.num_actions() {
        return Err(Error::ShapeMismatch("estimated and true models differ in size".into()));
    }
    let epsilon = error_max(p_hat.transitions(), mdp.transitions(), mdp.num_states())?;
    let scale = epsilon / ((1.0 - gamma) * (1.0 - gamma));
    let mut rng = crate::rng_from_seed(seed);
    let mut max_suboptimality: f64 = 0.0;
    for _ in 0..trials {
        let reward: Vec<f64> = (0..mdp.num_pairs()).map(|_| rng.random::<f64>()).collect();
        let (v_star, _) = discounted_value_iteration(mdp, &reward, gamma)?;
        let (_, pi_hat) = discounted_value_iteration(p_hat, &reward, gamma)?;
        let v_hat = evaluate_policy(mdp, &reward, gamma, &pi_hat)?;
        let gap = v_star.iter().zip(&v_hat).map(|(a, b)| a - b).fold(0.0, f64::max);
        max_suboptimality = max_suboptimality.max(gap);
    }
    let max_ratio = if epsilon == 0.0 { 0.0 } else { max_suboptimality / scale };
    Ok(SimLemmaReport { gamma, epsilon, scale, trials, max_suboptimality, max_ratio })
}
