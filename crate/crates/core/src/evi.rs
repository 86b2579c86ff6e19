//! Extended value iteration for average-reward optimism over per-entry
//! transition intervals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::{ConfidenceSet, EmpiricalModel};
use crate::mdp::{StationaryPolicy, TabularMdp};

/// Default sweep cap.
pub const EVI_MAX_ITERATIONS: usize = 100_000;

/// Self-loop mixing of the aperiodicity transform `tau P + (1 - tau) I`.
/// The transform leaves gains and optimal policies unchanged.
pub const APERIODICITY_TAU: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct EviResult {
    /// Greedy deterministic policy of the last sweep.
    pub policy: StationaryPolicy,
    pub actions: Vec<usize>,
    /// Midpoint of the last value difference.
    pub gain: f64,
    /// Final `span(u' - u)`.
    pub span: f64,
    pub iterations: usize,
    /// Bias estimate, shifted so its minimum is zero.
    pub values: Vec<f64>,
}

/// Maximises `p . u` over `p` in `[lo, hi]` with `sum p = 1`: start from the
/// lower ends and pour the remaining mass into the best states first.
/// `order` sorts states by decreasing `u`.
fn optimistic_dot(p_hat: &[f64], widths: &[f64], order: &[usize], u: &[f64]) -> f64 {
    let mut mass = 1.0;
    let mut dot = 0.0;
    for (j, (&p, &b)) in p_hat.iter().zip(widths).enumerate() {
        let lo = (p - b).max(0.0);
        mass -= lo;
        dot += lo * u[j];
    }
    for &j in order {
        if mass <= 0.0 {
            break;
        }
        let lo = (p_hat[j] - widths[j]).max(0.0);
        let hi = (p_hat[j] + widths[j]).min(1.0);
        let add = (hi - lo).min(mass);
        mass -= add;
        dot += add * u[j];
    }
    dot
}

/// Core iteration on flat row-major tensors.
pub fn evi_raw(
    num_states: usize,
    num_actions: usize,
    reward: &[f64],
    p_hat: &[f64],
    half_widths: &[f64],
    eps: f64,
    max_iterations: usize,
) -> Result<EviResult> {
    let (ns, na) = (num_states, num_actions);
    let pairs = ns * na;
    if reward.len() != pairs || p_hat.len() != pairs * ns || half_widths.len() != pairs * ns {
        return Err(Error::ShapeMismatch(format!("EVI inputs do not match a {ns}x{na} model")));
    }
    if reward.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidConfig("EVI reward must be finite".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("EVI accuracy must be positive, got {eps}")));
    }
    let tau = APERIODICITY_TAU;
    let mut u: Vec<f64> = vec![0.0; ns];
    let mut next = vec![0.0; ns];
    let mut actions = vec![0usize; ns];
    let mut order: Vec<usize> = (0..ns).collect();
    for it in 1..=max_iterations {
        order.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for a in 0..na {
                let pair = s * na + a;
                let rows = pair * ns..(pair + 1) * ns;
                let q = reward[pair] + tau * optimistic_dot(&p_hat[rows.clone()], &half_widths[rows], &order, &u);
                if q > best {
                    best = q;
                    arg = a;
                }
            }
            next[s] = best + (1.0 - tau) * u[s];
            actions[s] = arg;
        }
        let (lo, hi) = next
            .iter()
            .zip(&u)
            .map(|(n, o)| n - o)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let floor = next.iter().copied().fold(f64::INFINITY, f64::min);
        for (o, n) in u.iter_mut().zip(&next) {
            *o = n - floor;
        }
        if hi - lo <= eps {
            return Ok(EviResult {
                policy: StationaryPolicy::deterministic(na, &actions),
                actions,
                gain: 0.5 * (hi + lo),
                span: hi - lo,
                iterations: it,
                values: u,
            });
        }
    }
    Err(Error::NonConvergence { what: "extended value iteration", iterations: max_iterations })
}

/// Optimistic EVI over the confidence set around `model`.
pub fn evi(reward: &[f64], model: &EmpiricalModel, conf: &ConfidenceSet, eps: f64) -> Result<EviResult> {
    evi_raw(
        model.num_states(),
        model.num_actions(),
        reward,
        model.p_hat(),
        conf.half_widths(),
        eps,
        EVI_MAX_ITERATIONS,
    )
}

/// Plain relative value iteration on a known model.
pub fn value_iteration(mdp: &TabularMdp, reward: &[f64], eps: f64) -> Result<EviResult> {
    let widths = vec![0.0; mdp.transitions().len()];
    evi_raw(
        mdp.num_states(),
        mdp.num_actions(),
        reward,
        mdp.transitions(),
        &widths,
        eps,
        EVI_MAX_ITERATIONS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_max_pours_mass_upwards() {
        let u = [0.0, 1.0, 2.0];
        let order = [2, 1, 0];
        let v = optimistic_dot(&[0.5, 0.5, 0.0], &[0.2, 0.2, 0.2], &order, &u);
        // lower ends (0.3, 0.3, 0); remaining 0.4 goes 0.2 to state 2, 0.2 to state 1.
        assert!((v - (0.5 * 1.0 + 0.2 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_reward_gain() {
        let mdp = TabularMdp::from_rows(3, 2, |s, a, row| row[(s + a) % 3] = 1.0).unwrap();
        let r = evi_raw(3, 2, &[0.7; 6], mdp.transitions(), &[0.0; 18], 1e-10, 1000).unwrap();
        assert!((r.gain - 0.7).abs() < 1e-9);
    }

    #[test]
    fn periodic_chain_converges() {
        // Deterministic two-cycle with a single action.
        let mdp = TabularMdp::from_rows(2, 1, |s, _, row| row[1 - s] = 1.0).unwrap();
        let r = value_iteration(&mdp, &[1.0, 0.0], 1e-9).unwrap();
        assert!((r.gain - 0.5).abs() < 1e-8);
    }

    #[test]
    fn wide_intervals_reach_the_best_pair() {
        let mdp = TabularMdp::from_rows(2, 2, |_, _, row| row[0] = 1.0).unwrap();
        let r = evi_raw(2, 2, &[0.0, 0.1, 0.9, 0.2], mdp.transitions(), &[1.0; 8], 1e-9, 1000).unwrap();
        assert!((r.gain - 0.9).abs() < 1e-8);
        assert_eq!(r.actions[1], 0);
    }

    #[test]
    fn cap_reports_non_convergence() {
        let mdp = TabularMdp::from_rows(2, 1, |s, _, row| row[1 - s] = 1.0).unwrap();
        let err = evi_raw(2, 1, &[1.0, 0.0], mdp.transitions(), &[0.0; 4], 1e-12, 2).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
