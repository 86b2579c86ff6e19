//! Occupancy-measure LPs: the dual LP of a known model and the extended LP
//! over `q(s,a,s')` for a confidence set of models.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{solve_lp, LinearProgram};
use crate::error::{Error, Result};
use crate::estimation::{ConfidenceSet, EmpiricalModel};
use crate::mdp::{policy_from_occupancy, OccupancyMeasure, StationaryPolicy, TabularMdp, Validity};

fn check_eta(eta: f64, pairs: usize) -> Result<()> {
    if !(eta >= 0.0) {
        return Err(Error::InvalidConfig(format!("eta must be non-negative, got {eta}")));
    }
    if eta * pairs as f64 > 1.0 + 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "eta={eta} times {pairs} pairs exceeds one: the restricted simplex is empty"
        )));
    }
    Ok(())
}

fn check_reward(reward: &[f64], pairs: usize) -> Result<()> {
    if reward.len() != pairs {
        return Err(Error::ShapeMismatch(format!("reward has {} entries, expected {pairs}", reward.len())));
    }
    Ok(())
}

/// `max r.lam` over flow-feasible `lam >= eta`, as a minimisation LP over
/// the variables `lam(s,a)`.
pub fn build_known_model_lp(mdp: &TabularMdp, reward: &[f64], eta: f64) -> Result<LinearProgram> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let pairs = ns * na;
    check_reward(reward, pairs)?;
    check_eta(eta, pairs)?;
    let mut lp = LinearProgram::new(pairs);
    lp.objective = reward.iter().map(|r| -r).collect();
    lp.lower_bounds = vec![eta; pairs];
    for j in 0..ns {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for s in 0..ns {
            for a in 0..na {
                let mut c = -mdp.prob(s, a, j);
                if s == j {
                    c += 1.0;
                }
                if c != 0.0 {
                    coeffs.push((s * na + a, c));
                }
            }
        }
        lp.add_eq(coeffs, 0.0);
    }
    lp.add_eq((0..pairs).map(|i| (i, 1.0)).collect(), 1.0);
    Ok(lp)
}

/// Occupancy measure maximising `r.lam` over `Lambda_eta` of a known model.
pub fn solve_known_model_lp(mdp: &TabularMdp, reward: &[f64], eta: f64) -> Result<OccupancyMeasure> {
    let lp = build_known_model_lp(mdp, reward, eta)?;
    let sol = solve_lp(&lp)?;
    let lam = sol.x.into_iter().map(|x| x.max(eta)).collect();
    OccupancyMeasure::new(mdp.num_states(), mdp.num_actions(), lam, Validity::FlowFeasible)
}

/// State-action-next-state occupancy `q(s,a,s')`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOccupancy {
    num_states: usize,
    num_actions: usize,
    q: Vec<f64>,
}

impl ExtendedOccupancy {
    pub fn new(num_states: usize, num_actions: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != num_states * num_actions * num_states {
            return Err(Error::ShapeMismatch(format!("q has {} entries", q.len())));
        }
        Ok(Self { num_states, num_actions, q })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn get(&self, s: usize, a: usize, next: usize) -> f64 {
        self.q[(s * self.num_actions + a) * self.num_states + next]
    }

    pub fn total_mass(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Largest violation of `sum_{a,s} q(j,a,s) = sum_{s,a} q(s,a,j)`.
    pub fn flow_residual(&self) -> f64 {
        let ns = self.num_states;
        let mut balance = vec![0.0; ns];
        for (idx, row) in self.q.chunks(ns).enumerate() {
            let s = idx / self.num_actions;
            for (j, &v) in row.iter().enumerate() {
                balance[s] += v;
                balance[j] -= v;
            }
        }
        balance.iter().fold(0.0, |m, b| m.max(b.abs()))
    }

    /// Largest amount by which the implied model `q(s,a,.)/phi(s,a)` leaves
    /// the clipped intervals `[p_hat - B, p_hat + B]`, over pairs with
    /// `phi(s,a) >= min_mass`.
    pub fn interval_violation(&self, model: &EmpiricalModel, conf: &ConfidenceSet, min_mass: f64) -> f64 {
        let ns = self.num_states;
        let mut worst: f64 = 0.0;
        for (pair, row) in self.q.chunks(ns).enumerate() {
            let phi: f64 = row.iter().sum();
            if phi < min_mass || phi <= 0.0 {
                continue;
            }
            let (s, a) = (pair / self.num_actions, pair % self.num_actions);
            for (j, &v) in row.iter().enumerate() {
                let implied = v / phi;
                let (p, b) = (model.row(s, a)[j], conf.row(s, a)[j]);
                let lo = (p - b).max(0.0);
                let hi = (p + b).min(1.0);
                worst = worst.max(lo - implied).max(implied - hi);
            }
        }
        worst
    }
}

/// `phi(s,a) = sum_{s'} q(s,a,s')`.
pub fn extract_occupancy(q: &ExtendedOccupancy) -> OccupancyMeasure {
    let lam = q.q.chunks(q.num_states).map(|row| row.iter().sum::<f64>().max(0.0)).collect();
    OccupancyMeasure::new(q.num_states, q.num_actions, lam, Validity::SimplexOnly)
        .expect("shape follows q")
}

/// `pi(a|s) = phi(s,a) / sum_b phi(s,b)`; zero-mass states act uniformly.
pub fn extract_policy(occ: &OccupancyMeasure) -> StationaryPolicy {
    policy_from_occupancy(occ.num_states(), occ.num_actions(), occ.as_slice())
}

/// Extended LP over `q(s,a,s')`: maximise `sum r(s,a) q(s,a,s')` subject to
/// flow conservation, the per-entry model intervals `[p_hat - B, p_hat + B]`
/// clipped to `[0,1]`, `sum_{s'} q(s,a,s') >= eta` and total mass one (stated
/// explicitly rather than left to the simplex domain of `q`).
///
/// Interval rows that the clipping makes vacuous are omitted.
pub fn build_extended_lp(
    reward: &[f64],
    model: &EmpiricalModel,
    conf: &ConfidenceSet,
    eta: f64,
) -> Result<LinearProgram> {
    let (ns, na) = (model.num_states(), model.num_actions());
    let pairs = ns * na;
    check_reward(reward, pairs)?;
    check_eta(eta, pairs)?;
    if conf.half_widths().len() != pairs * ns {
        return Err(Error::ShapeMismatch("confidence set does not match the model".into()));
    }
    let var = |pair: usize, j: usize| pair * ns + j;
    let mut lp = LinearProgram::new(pairs * ns);
    for pair in 0..pairs {
        for j in 0..ns {
            lp.objective[var(pair, j)] = -reward[pair];
        }
    }
    // Flow conservation at every state.
    for j in 0..ns {
        let mut coeffs = vec![0.0; pairs * ns];
        for a in 0..na {
            for s2 in 0..ns {
                coeffs[var(j * na + a, s2)] += 1.0;
            }
        }
        for pair in 0..pairs {
            coeffs[var(pair, j)] -= 1.0;
        }
        lp.add_eq(coeffs.into_iter().enumerate().filter(|&(_, c)| c != 0.0).collect(), 0.0);
    }
    lp.add_eq((0..pairs * ns).map(|i| (i, 1.0)).collect(), 1.0);

    for pair in 0..pairs {
        let (s, a) = (pair / na, pair % na);
        let (p_row, b_row) = (model.row(s, a), conf.row(s, a));
        for j in 0..ns {
            let hi = (p_row[j] + b_row[j]).min(1.0);
            if hi < 1.0 {
                // q(s,a,j) - hi * sum_{s'} q(s,a,s') <= 0
                let coeffs = (0..ns).map(|k| (var(pair, k), if k == j { 1.0 - hi } else { -hi })).collect();
                lp.add_le(coeffs, 0.0);
            }
            let lo = (p_row[j] - b_row[j]).max(0.0);
            if lo > 0.0 {
                // -q(s,a,j) + lo * sum_{s'} q(s,a,s') <= 0
                let coeffs = (0..ns).map(|k| (var(pair, k), if k == j { lo - 1.0 } else { lo })).collect();
                lp.add_le(coeffs, 0.0);
            }
        }
        if eta > 0.0 {
            lp.add_ge((0..ns).map(|k| (var(pair, k), 1.0)).collect(), eta);
        }
    }
    Ok(lp)
}

/// Result of [`solve_extended_lp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLpSolution {
    pub q: ExtendedOccupancy,
    /// Optimal `sum r(s,a) q(s,a,s')`.
    pub value: f64,
    /// Floor actually used after any downgrades.
    pub eta_used: f64,
    /// How many times `eta` was divided by ten (or dropped to zero).
    pub downgrades: usize,
    pub pivots: usize,
}

/// Solves the extended LP, retrying with `eta / 10` (and finally zero) while
/// it is infeasible.
pub fn solve_extended_lp(
    reward: &[f64],
    model: &EmpiricalModel,
    conf: &ConfidenceSet,
    eta: f64,
) -> Result<ExtendedLpSolution> {
    let mut eta_used = eta;
    let mut downgrades = 0;
    loop {
        let lp = build_extended_lp(reward, model, conf, eta_used)?;
        match solve_lp(&lp) {
            Ok(sol) => {
                let q = ExtendedOccupancy::new(model.num_states(), model.num_actions(), sol.x)?;
                return Ok(ExtendedLpSolution {
                    q,
                    value: -sol.objective,
                    eta_used,
                    downgrades,
                    pivots: sol.pivots,
                });
            }
            Err(Error::Infeasible) if eta_used > 0.0 => {
                downgrades += 1;
                eta_used = if eta_used > eta * 1e-6 { eta_used / 10.0 } else { 0.0 };
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::Counters;
    use crate::mdp::Transition;

    fn cycle_model() -> (TabularMdp, EmpiricalModel) {
        // Two states, two actions: action 0 stays, action 1 switches.
        let mdp = TabularMdp::from_rows(2, 2, |s, a, row| row[if a == 0 { s } else { 1 - s }] = 1.0).unwrap();
        let mut c = Counters::for_mdp(&mdp);
        for s in 0..2 {
            for a in 0..2 {
                let next = if a == 0 { s } else { 1 - s };
                c.update(Transition { state: s, action: a, next_state: next });
            }
        }
        let model = c.empirical_model();
        (mdp, model)
    }

    #[test]
    fn known_model_lp_concentrates_on_self_loop() {
        let (mdp, _) = cycle_model();
        let lam = solve_known_model_lp(&mdp, &[0.0, 0.0, 1.0, 0.0], 0.0).unwrap();
        assert!((lam.get(1, 0) - 1.0).abs() < 1e-12);
        assert!(lam.flow_residual(&mdp) < 1e-12);
    }

    #[test]
    fn extended_lp_with_exact_model_matches_known_model() {
        let (mdp, model) = cycle_model();
        let conf = ConfidenceSet::exact(2, 2);
        let reward = [0.2, 0.5, 0.3, 0.1];
        let ext = solve_extended_lp(&reward, &model, &conf, 0.0).unwrap();
        let known = solve_known_model_lp(&mdp, &reward, 0.0).unwrap();
        let known_value: f64 = known.as_slice().iter().zip(&reward).map(|(l, r)| l * r).sum();
        assert!((ext.value - known_value).abs() < 1e-10);
        assert!(ext.q.flow_residual() < 1e-12);
    }

    #[test]
    fn eta_bound_is_enforced() {
        let (_, model) = cycle_model();
        let conf = ConfidenceSet::exact(2, 2);
        assert!(matches!(build_extended_lp(&[0.0; 4], &model, &conf, 0.3), Err(Error::InvalidConfig(_))));
        let sol = solve_extended_lp(&[1.0, 0.0, 0.0, 0.0], &model, &conf, 0.1).unwrap();
        let occ = extract_occupancy(&sol.q);
        assert!(occ.as_slice().iter().all(|&l| l >= 0.1 - 1e-12));
        assert!((occ.get(0, 0) - 0.7).abs() < 1e-10);
    }

    #[test]
    fn uniform_q_gives_uniform_policy() {
        let q = ExtendedOccupancy::new(2, 3, vec![1.0 / 12.0; 12]).unwrap();
        let pi = extract_policy(&extract_occupancy(&q));
        assert!(pi.probs().iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }
}
