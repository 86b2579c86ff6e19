//! Offline optimal allocations under a known model (Frank-Wolfe with the
//! known-model LP as linear oracle) and the sampling protocol that scores an
//! allocation by the error of the model it yields.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{transitional_noise, Counters};
use crate::lp::solve_known_model_lp;
use crate::mdp::{OccupancyMeasure, TabularMdp, Transition, Validity};
use crate::objectives::{error_avg, modest_weights, Objective, ObjectiveKind};

/// Entropy smoothing substituted for `mu = 0`.
pub const MU_GUARD: f64 = 1e-12;

/// Floor used for the surrogate allocations.
pub const SURROGATE_ETA: f64 = 1e-4;

/// Confidence level used only to scale the entropy weights.
const WEIGHT_DELTA: f64 = 0.1;

/// Frank-Wolfe step rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `2 / (k + 2)`.
    Standard,
    /// Exact minimisation along the segment.
    LineSearch,
    /// Line search plus away steps from the worst active vertex.
    #[default]
    AwaySteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwSettings {
    pub iterations: usize,
    pub eta: f64,
    pub step: StepRule,
    /// Stop once the duality gap falls below this.
    pub gap_tolerance: f64,
}

impl Default for FwSettings {
    fn default() -> Self {
        Self { iterations: 10_000, eta: 0.0, step: StepRule::AwaySteps, gap_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalAllocation {
    pub lam_star: OccupancyMeasure,
    pub kind: ObjectiveKind,
    /// Objective value at `lam_star`, natural orientation.
    pub value: f64,
    pub iterations: usize,
    /// Duality gap `<grad f(lam_K), lam_K - phi>` of the last iterate.
    pub gap: f64,
    /// Smallest gap seen over all iterates.
    pub best_gap: f64,
    /// Entropy smoothing bias bound `mu S A max w` (zero for surrogates).
    pub smoothing_bias: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lerp(a: &[f64], b: &[f64], beta: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - beta) * x + beta * y).collect()
}

/// Minimises `f(lam + beta dir)` over `beta` in `[0, max]` by bisection on
/// the directional derivative.
fn line_search(obj: &Objective, lam: &[f64], dir: &[f64], max: f64) -> Result<f64> {
    let at = |beta: f64| -> Vec<f64> { lam.iter().zip(dir).map(|(l, d)| (l + beta * d).max(0.0)).collect() };
    let slope = |beta: f64| -> Result<f64> { Ok(dot(&obj.loss_gradient(&at(beta))?, dir)) };
    if slope(max)? <= 0.0 {
        return Ok(max);
    }
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Convex weights over the LP vertices visited so far.
struct ActiveSet {
    vertices: Vec<(Vec<f64>, f64)>,
}

impl ActiveSet {
    fn add(&mut self, v: Vec<f64>, beta: f64) {
        self.vertices.iter_mut().for_each(|(_, w)| *w *= 1.0 - beta);
        let same = |u: &Vec<f64>| u.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-12);
        match self.vertices.iter_mut().find(|(u, _)| same(u)) {
            Some((_, w)) => *w += beta,
            None => self.vertices.push((v, beta)),
        }
        self.vertices.retain(|(_, w)| *w > 0.0);
    }

    /// Index of the active vertex maximising `<g, v>`.
    fn away(&self, g: &[f64]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, (v, _)) in self.vertices.iter().enumerate() {
            let d = dot(g, v);
            if d > best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn remove_mass(&mut self, i: usize, gamma: f64, drop: bool) {
        self.vertices.iter_mut().for_each(|(_, w)| *w *= 1.0 + gamma);
        if drop {
            self.vertices.swap_remove(i);
        } else {
            self.vertices[i].1 -= gamma;
        }
    }

    fn point(&self, len: usize) -> Vec<f64> {
        let mut p = vec![0.0; len];
        for (v, w) in &self.vertices {
            p.iter_mut().zip(v).for_each(|(x, y)| *x += w * y);
        }
        p
    }
}

/// Frank-Wolfe on `obj.loss` over flow-feasible `lam >= eta`.
pub fn exact_fw(mdp: &TabularMdp, obj: &Objective, settings: &FwSettings) -> Result<OptimalAllocation> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let pairs = ns * na;
    if obj.num_states != ns || obj.num_actions != na {
        return Err(Error::ShapeMismatch("objective and MDP sizes differ".into()));
    }
    if settings.iterations == 0 {
        return Err(Error::InvalidConfig("Frank-Wolfe needs at least one iteration".into()));
    }
    let oracle = |g: &[f64]| -> Result<Vec<f64>> {
        let reward: Vec<f64> = g.iter().map(|x| -x).collect();
        Ok(solve_known_model_lp(mdp, &reward, settings.eta)?.into_vec())
    };
    // Start from the LP vertex picked by the gradient at the uniform point.
    let uniform = vec![1.0 / pairs as f64; pairs];
    let start_obj = obj.clone().with_eta(0.0);
    let mut lam = oracle(&start_obj.loss_gradient(&uniform)?)?;
    let mut active = ActiveSet { vertices: vec![(lam.clone(), 1.0)] };
    let mut best = (obj.loss(&lam)?, lam.clone());
    let mut gap = f64::INFINITY;
    let mut best_gap = f64::INFINITY;
    let mut iterations = 0;
    for k in 0..settings.iterations {
        iterations = k + 1;
        let g = obj.loss_gradient(&lam)?;
        let phi = oracle(&g)?;
        gap = dot(&g, &lam) - dot(&g, &phi);
        best_gap = best_gap.min(gap);
        if gap <= settings.gap_tolerance {
            break;
        }
        match settings.step {
            StepRule::Standard | StepRule::LineSearch => {
                let dir: Vec<f64> = phi.iter().zip(&lam).map(|(p, l)| p - l).collect();
                let beta = match settings.step {
                    StepRule::Standard => 2.0 / (k as f64 + 2.0),
                    _ => line_search(obj, &lam, &dir, 1.0)?,
                };
                lam = lerp(&lam, &phi, beta);
            }
            StepRule::AwaySteps => {
                let i = active.away(&g);
                let (away, w_away) = active.vertices[i].clone();
                let away_gap = dot(&g, &away) - dot(&g, &lam);
                if gap >= away_gap || active.vertices.len() == 1 {
                    let dir: Vec<f64> = phi.iter().zip(&lam).map(|(p, l)| p - l).collect();
                    let beta = line_search(obj, &lam, &dir, 1.0)?;
                    active.add(phi, beta);
                } else {
                    let dir: Vec<f64> = lam.iter().zip(&away).map(|(l, a)| l - a).collect();
                    let max = w_away / (1.0 - w_away);
                    let gamma = line_search(obj, &lam, &dir, max)?;
                    active.remove_mass(i, gamma, gamma >= max);
                }
                lam = active.point(pairs);
            }
        }
        let value = obj.loss(&lam)?;
        if value < best.0 {
            best = (value, lam.clone());
        }
    }
    let (loss, lam_star) = best;
    let value = if obj.kind.is_maximized() { -loss } else { loss };
    let smoothing_bias = if obj.kind.is_maximized() {
        obj.mu * pairs as f64 * obj.weights.iter().copied().fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(OptimalAllocation {
        lam_star: OccupancyMeasure::new(ns, na, lam_star, Validity::FlowFeasible)?,
        kind: obj.kind,
        value,
        iterations,
        gap: gap.max(0.0),
        best_gap: best_gap.max(0.0),
        smoothing_bias,
    })
}

fn guard(mu: f64) -> f64 {
    if mu > 0.0 {
        mu
    } else {
        MU_GUARD
    }
}

/// Unit-weight entropy maximiser.
pub fn maxent_allocation(mdp: &TabularMdp, mu: f64, settings: &FwSettings) -> Result<OptimalAllocation> {
    let obj = Objective::entropy(mdp.num_states(), mdp.num_actions(), guard(mu));
    exact_fw(mdp, &obj, settings)
}

/// Weighted entropy maximiser with weights from the true noise.
pub fn weighted_maxent_allocation(mdp: &TabularMdp, mu: f64, settings: &FwSettings) -> Result<OptimalAllocation> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let w = modest_weights(&transitional_noise(mdp), ns, na, WEIGHT_DELTA)?;
    exact_fw(mdp, &Objective::weighted_entropy(ns, na, w, guard(mu)), settings)
}

/// Minimiser of the asymptotic average surrogate `(1/SA) sum V / sqrt(lam)`
/// over `lam >= eta`.
pub fn fw_modest_allocation(mdp: &TabularMdp, settings: &FwSettings) -> Result<OptimalAllocation> {
    if !(settings.eta > 0.0) {
        return Err(Error::InvalidConfig("the surrogate allocation needs eta > 0".into()));
    }
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let obj = Objective::asymptotic_avg(ns, na, transitional_noise(mdp)).with_eta(settings.eta);
    exact_fw(mdp, &obj, settings)
}

/// Draws `max(floor(n lam(s,a)), 1)` next states for every pair and returns
/// the average error of the resulting estimate.
pub fn table1_error(mdp: &TabularMdp, lam_star: &OccupancyMeasure, n: u64, seed: u64) -> Result<f64> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    if lam_star.num_states() != ns || lam_star.num_actions() != na {
        return Err(Error::ShapeMismatch("allocation and MDP sizes differ".into()));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least one".into()));
    }
    let mut rng = crate::rng_from_seed(seed);
    let mut counters = Counters::new(ns, na);
    for s in 0..ns {
        for a in 0..na {
            let k = (libm::floor(n as f64 * lam_star.get(s, a)) as u64).max(1);
            for _ in 0..k {
                let next_state = mdp.step(s, a, &mut rng);
                counters.update(Transition { state: s, action: a, next_state });
            }
        }
    }
    error_avg(counters.empirical_model().p_hat(), mdp.transitions(), ns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> TabularMdp {
        // Every action moves to either state with probability 1/2.
        TabularMdp::from_rows(2, 2, |_, _, row| row.fill(0.5)).unwrap()
    }

    #[test]
    fn symmetric_maxent_is_uniform() {
        let alloc = maxent_allocation(&symmetric(), 0.0, &FwSettings { iterations: 2000, ..FwSettings::default() })
            .unwrap();
        for &l in alloc.lam_star.as_slice() {
            assert!((l - 0.25).abs() < 1e-3, "{l}");
        }
        assert!(alloc.lam_star.flow_residual(&symmetric()) < 1e-9);
    }

    #[test]
    fn deterministic_mdp_has_zero_table_error() {
        let mdp = TabularMdp::from_rows(3, 2, |s, a, row| row[(s + a) % 3] = 1.0).unwrap();
        let lam = OccupancyMeasure::uniform(3, 2);
        assert_eq!(table1_error(&mdp, &lam, 100, 7).unwrap(), 0.0);
    }

    #[test]
    fn surrogate_needs_positive_eta() {
        assert!(fw_modest_allocation(&symmetric(), &FwSettings::default()).is_err());
    }

    #[test]
    fn line_search_reaches_small_gap() {
        let mdp = crate::envs::build_wheel(5).unwrap();
        for step in [StepRule::LineSearch, StepRule::AwaySteps] {
            let s = FwSettings { iterations: 3000, step, gap_tolerance: 1e-6, ..FwSettings::default() };
            let alloc = maxent_allocation(&mdp, 0.0, &s).unwrap();
            assert!(alloc.gap <= 1e-6, "{step:?}: {}", alloc.gap);
        }
    }
}
