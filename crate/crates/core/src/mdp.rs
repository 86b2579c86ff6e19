//! Tabular MDPs, stationary policies, simulation and occupancy measures.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{graph, linalg};

/// Row-sum tolerance for transition rows and policy rows.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Reward-free tabular MDP with a dense transition tensor `p[s][a][s']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<f64>,
}

impl TabularMdp {
    /// Validates and wraps a row-major `S x A x S` tensor.
    pub fn new(num_states: usize, num_actions: usize, transitions: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidSpec(format!(
                "need at least one state and one action, got S={num_states} A={num_actions}"
            )));
        }
        let expected = num_states * num_actions * num_states;
        if transitions.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "transition tensor has {} entries, expected {expected}",
                transitions.len()
            )));
        }
        for (idx, row) in transitions.chunks(num_states).enumerate() {
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "row (s={}, a={}) has a negative or non-finite entry",
                    idx / num_actions,
                    idx % num_actions
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidSpec(format!(
                    "row (s={}, a={}) sums to {sum}",
                    idx / num_actions,
                    idx % num_actions
                )));
            }
        }
        Ok(Self { num_states, num_actions, transitions })
    }

    /// Builds an MDP by filling each zero-initialised row with `fill(s, a, row)`.
    pub fn from_rows(
        num_states: usize,
        num_actions: usize,
        mut fill: impl FnMut(usize, usize, &mut [f64]),
    ) -> Result<Self> {
        let mut transitions = vec![0.0; num_states * num_actions * num_states];
        for (idx, row) in transitions.chunks_mut(num_states.max(1)).enumerate() {
            fill(idx / num_actions, idx % num_actions, row);
        }
        Self::new(num_states, num_actions, transitions)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    /// Flat row-major tensor.
    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.row(s, a)[next]
    }

    /// Number of strictly positive entries of `p(.|s,a)`.
    pub fn support_size(&self, s: usize, a: usize) -> usize {
        self.row(s, a).iter().filter(|&&x| x > 0.0).count()
    }

    /// Largest support size over all pairs.
    pub fn max_support(&self) -> usize {
        (0..self.num_states)
            .flat_map(|s| (0..self.num_actions).map(move |a| (s, a)))
            .map(|(s, a)| self.support_size(s, a))
            .max()
            .unwrap_or(0)
    }

    /// Samples the next state by inverse CDF over a single uniform draw.
    pub fn step<R: rand::Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        sample_row(self.row(s, a), u)
    }

    /// Whether the union of all transition supports is strongly connected,
    /// i.e. every state can reach every other one under some policy.
    pub fn is_communicating(&self) -> bool {
        graph::is_strongly_connected(self.num_states, |i, j| {
            (0..self.num_actions).any(|a| self.prob(i, a, j) > 0.0)
        })
    }

    /// State-to-state kernel `P_pi[s][s'] = sum_a pi(a|s) p(s'|s,a)`.
    pub fn policy_kernel(&self, policy: &StationaryPolicy) -> Vec<f64> {
        let n = self.num_states;
        let mut kernel = vec![0.0; n * n];
        for s in 0..n {
            for a in 0..self.num_actions {
                let w = policy.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                for (k, &p) in kernel[s * n..(s + 1) * n].iter_mut().zip(self.row(s, a)) {
                    *k += w * p;
                }
            }
        }
        kernel
    }

    /// Exact state-action stationary distribution of `policy`.
    ///
    /// Fails when the induced chain has more than one recurrent class.
    pub fn stationary_distribution(&self, policy: &StationaryPolicy) -> Result<OccupancyMeasure> {
        self.check_policy(policy)?;
        let n = self.num_states;
        let kernel = self.policy_kernel(policy);
        let classes = graph::closed_class_count(n, |i, j| kernel[i * n + j] > 0.0);
        if classes != 1 {
            return Err(Error::NonUniqueStationary { classes });
        }
        // (P^T - I) nu = 0 with the last equation replaced by sum(nu) = 1.
        let mut system = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                system[i * n + j] = kernel[j * n + i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..n {
            system[(n - 1) * n + j] = 1.0;
        }
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = 1.0;
        let mut nu = linalg::solve_refined(&system, &rhs, n)
            .ok_or(Error::NonUniqueStationary { classes })?;
        for x in nu.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let total: f64 = nu.iter().sum();
        nu.iter_mut().for_each(|x| *x /= total);

        let mut lam = vec![0.0; self.num_pairs()];
        for s in 0..n {
            for a in 0..self.num_actions {
                lam[s * self.num_actions + a] = nu[s] * policy.prob(s, a);
            }
        }
        Ok(OccupancyMeasure {
            num_states: n,
            num_actions: self.num_actions,
            lam,
            validity: Validity::FlowFeasible,
        })
    }

    /// Rolls out `policy` for `steps` transitions from `start`.
    pub fn simulate<R: rand::Rng + ?Sized>(
        &self,
        policy: &StationaryPolicy,
        start: usize,
        steps: usize,
        rng: &mut R,
    ) -> Vec<Transition> {
        let mut out = Vec::with_capacity(steps);
        let mut s = start;
        for _ in 0..steps {
            let a = policy.sample(s, rng);
            let next = self.step(s, a, rng);
            out.push(Transition { state: s, action: a, next_state: next });
            s = next;
        }
        out
    }

    fn check_policy(&self, policy: &StationaryPolicy) -> Result<()> {
        if policy.num_states != self.num_states || policy.num_actions != self.num_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy is {}x{}, MDP is {}x{}",
                policy.num_states, policy.num_actions, self.num_states, self.num_actions
            )));
        }
        Ok(())
    }
}

/// Inverse-CDF lookup of `u in [0,1)` in a probability row.
pub(crate) fn sample_row(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding left `acc` slightly below one.
    last_positive
}

/// Stochastic stationary policy `pi[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl StationaryPolicy {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_states * num_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                num_states * num_actions
            )));
        }
        for (s, row) in probs.chunks(num_actions).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidConfig(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(Self { num_states, num_actions, probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    /// Deterministic policy from one action per state.
    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * num_actions + a] = 1.0;
        }
        Self { num_states: actions.len(), num_actions, probs }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Draws an action; deterministic rows consume no randomness.
    pub fn sample<R: rand::Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        let row = self.row(s);
        if let Some(a) = row.iter().position(|&p| p == 1.0) {
            return a;
        }
        sample_row(row, rng.random())
    }
}

/// One observed transition `(s, a, s')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
}

/// Ordered transitions of one run together with its seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
    pub seed: u64,
}

impl Trajectory {
    /// Whether each step starts where the previous one ended.
    pub fn is_chained(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].next_state == w[1].state)
    }
}

/// What an [`OccupancyMeasure`] is known to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity {
    /// Only a point of the simplex over state-action pairs.
    SimplexOnly,
    /// Satisfies the flow-conservation equalities of the model it came from.
    FlowFeasible,
}

/// Distribution over state-action pairs, stored row-major `lam[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    num_states: usize,
    num_actions: usize,
    lam: Vec<f64>,
    validity: Validity,
}

impl OccupancyMeasure {
    pub fn new(num_states: usize, num_actions: usize, lam: Vec<f64>, validity: Validity) -> Result<Self> {
        if lam.len() != num_states * num_actions {
            return Err(Error::ShapeMismatch(format!(
                "occupancy has {} entries, expected {}",
                lam.len(),
                num_states * num_actions
            )));
        }
        Ok(Self { num_states, num_actions, lam, validity })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let n = num_states * num_actions;
        Self {
            num_states,
            num_actions,
            lam: vec![1.0 / n as f64; n],
            validity: Validity::SimplexOnly,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lam
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.lam
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.lam[s * self.num_actions + a]
    }

    pub fn validity(&self) -> Validity {
        self.validity
    }

    /// `sum_b lam(s, b)` for every state.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.lam.chunks(self.num_actions).map(|r| r.iter().sum()).collect()
    }

    /// Largest violation of `sum_b lam(s,b) = sum_{s',a} p(s|s',a) lam(s',a)`.
    pub fn flow_residual(&self, mdp: &TabularMdp) -> f64 {
        flow_residual(mdp, &self.lam)
    }

    /// Normalised policy `pi(a|s) = lam(s,a) / sum_b lam(s,b)`; states with no
    /// mass get the uniform row.
    pub fn to_policy(&self) -> StationaryPolicy {
        policy_from_occupancy(self.num_states, self.num_actions, &self.lam)
    }
}

pub(crate) fn flow_residual(mdp: &TabularMdp, lam: &[f64]) -> f64 {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut balance: Vec<f64> = lam.chunks(na).map(|r| r.iter().sum()).collect();
    for s in 0..ns {
        for a in 0..na {
            let l = lam[s * na + a];
            if l == 0.0 {
                continue;
            }
            for (b, &p) in balance.iter_mut().zip(mdp.row(s, a)) {
                *b -= p * l;
            }
        }
    }
    balance.iter().fold(0.0, |m, b| m.max(b.abs()))
}

pub(crate) fn policy_from_occupancy(num_states: usize, num_actions: usize, lam: &[f64]) -> StationaryPolicy {
    let mut probs = vec![0.0; num_states * num_actions];
    for s in 0..num_states {
        let row = &lam[s * num_actions..(s + 1) * num_actions];
        let mass: f64 = row.iter().map(|x| x.max(0.0)).sum();
        let out = &mut probs[s * num_actions..(s + 1) * num_actions];
        if mass > 0.0 {
            for (o, &x) in out.iter_mut().zip(row) {
                *o = x.max(0.0) / mass;
            }
        } else {
            out.fill(1.0 / num_actions as f64);
        }
    }
    StationaryPolicy { num_states, num_actions, probs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    fn two_state_cycle() -> TabularMdp {
        TabularMdp::from_rows(2, 1, |s, _, row| row[1 - s] = 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(TabularMdp::new(2, 1, vec![0.5, 0.4, 0.0, 1.0]).is_err());
        assert!(TabularMdp::new(2, 1, vec![1.5, -0.5, 0.0, 1.0]).is_err());
        assert!(TabularMdp::new(2, 1, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn deterministic_row_always_same_state() {
        let mdp = two_state_cycle();
        let mut rng = rng_from_seed(7);
        for _ in 0..100 {
            assert_eq!(mdp.step(0, 0, &mut rng), 1);
        }
    }

    #[test]
    fn single_state_stationary_is_policy() {
        let mdp = TabularMdp::from_rows(1, 3, |_, _, row| row[0] = 1.0).unwrap();
        let pi = StationaryPolicy::new(1, 3, vec![0.2, 0.5, 0.3]).unwrap();
        let lam = mdp.stationary_distribution(&pi).unwrap();
        assert_eq!(lam.as_slice(), &[0.2, 0.5, 0.3]);
    }

    #[test]
    fn two_state_cycle_is_balanced() {
        let mdp = two_state_cycle();
        let lam = mdp.stationary_distribution(&StationaryPolicy::uniform(2, 1)).unwrap();
        assert!((lam.get(0, 0) - 0.5).abs() < 1e-14);
        assert!((lam.get(1, 0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_absorbing_states_are_rejected() {
        let mdp = TabularMdp::from_rows(2, 1, |s, _, row| row[s] = 1.0).unwrap();
        let err = mdp.stationary_distribution(&StationaryPolicy::uniform(2, 1)).unwrap_err();
        assert_eq!(err, Error::NonUniqueStationary { classes: 2 });
    }

    #[test]
    fn transient_states_get_zero_mass() {
        // 0 -> 1, 1 -> 1
        let mdp = TabularMdp::from_rows(2, 1, |_, _, row| row[1] = 1.0).unwrap();
        let lam = mdp.stationary_distribution(&StationaryPolicy::uniform(2, 1)).unwrap();
        assert_eq!(lam.get(0, 0), 0.0);
        assert!((lam.get(1, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_mass_state_gets_uniform_policy_row() {
        let pi = policy_from_occupancy(2, 2, &[0.0, 0.0, 0.3, 0.7]);
        assert_eq!(pi.row(0), &[0.5, 0.5]);
        assert!((pi.prob(1, 1) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn simulation_chains() {
        let mdp = TabularMdp::from_rows(3, 2, |_, _, row| row.fill(1.0 / 3.0)).unwrap();
        let mut rng = rng_from_seed(3);
        let steps = mdp.simulate(&StationaryPolicy::uniform(3, 2), 0, 500, &mut rng);
        assert!(Trajectory { steps, seed: 3 }.is_chained());
    }
}
