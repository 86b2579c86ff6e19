//! Estimation errors, the convex surrogates of the estimation error and the
//! (smoothed) weighted entropies, with analytic gradients.
//!
//! Every objective is evaluated on a flat row-major vector `lam[s][a]`.
//! Surrogates are minimised; entropies are maximised. [`Objective::loss`] and
//! [`Objective::loss_gradient`] expose every objective as a quantity to be
//! minimised, negating the entropies.

use alloc::format;
use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average and worst-case l1 estimation errors of `p_hat` against `p`.
pub fn estimation_errors(p_hat: &[f64], p: &[f64], num_states: usize) -> Result<(f64, f64)> {
    if p_hat.len() != p.len() || num_states == 0 || p.len() % num_states != 0 {
        return Err(Error::ShapeMismatch(format!(
            "tensors of length {} and {} with S={num_states}",
            p_hat.len(),
            p.len()
        )));
    }
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    let mut rows = 0usize;
    for (a, b) in p_hat.chunks(num_states).zip(p.chunks(num_states)) {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        sum += d;
        worst = worst.max(d);
        rows += 1;
    }
    Ok((sum / rows as f64, worst))
}

/// `(1/SA) sum ||p_hat(.|s,a) - p(.|s,a)||_1`.
pub fn error_avg(p_hat: &[f64], p: &[f64], num_states: usize) -> Result<f64> {
    estimation_errors(p_hat, p, num_states).map(|e| e.0)
}

/// `max ||p_hat(.|s,a) - p(.|s,a)||_1`.
pub fn error_max(p_hat: &[f64], p: &[f64], num_states: usize) -> Result<f64> {
    estimation_errors(p_hat, p, num_states).map(|e| e.1)
}

/// Count-based error proxy `V / sqrt(T+1) + S / (T+1)`.
pub fn surrogate_f(noise: f64, visits: u64, num_states: usize) -> f64 {
    let t1 = visits as f64 + 1.0;
    noise / sqrt(t1) + num_states as f64 / t1
}

/// `G_n = V / sqrt(lam + 1/n) + (1/sqrt n) S / (lam + 1/n)`.
pub fn g_n(noise: f64, lam: f64, n: f64, num_states: usize) -> f64 {
    let x = lam + 1.0 / n;
    noise / sqrt(x) + num_states as f64 / (sqrt(n) * x)
}

/// `dG_n / dlam`.
fn g_n_derivative(noise: f64, lam: f64, n: f64, num_states: usize) -> f64 {
    let x = lam + 1.0 / n;
    -0.5 * noise / (x * sqrt(x)) - num_states as f64 / (sqrt(n) * x * x)
}

/// Numerically stable `log(sum exp(x))`.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + log(x.iter().map(|&v| exp(v - m)).sum())
}

/// Softmax weights of `x`; they sum to one.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|&v| exp(v - m)).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// `H_w = -sum w lam log lam` with `0 log 0 = 0`.
pub fn weighted_entropy(weights: &[f64], lam: &[f64]) -> f64 {
    weights
        .iter()
        .zip(lam)
        .filter(|(_, &l)| l > 0.0)
        .map(|(&w, &l)| -w * l * log(l))
        .sum()
}

/// `H_{w,mu} = sum w lam log(1 / (lam + mu))`.
pub fn smoothed_weighted_entropy(weights: &[f64], lam: &[f64], mu: f64) -> f64 {
    weights
        .iter()
        .zip(lam)
        .filter(|(_, &l)| l > 0.0)
        .map(|(&w, &l)| -w * l * log(l + mu))
        .sum()
}

/// `-w (log(lam + mu) + lam / (lam + mu))`, elementwise.
pub fn smoothed_entropy_gradient(weights: &[f64], lam: &[f64], mu: f64) -> Result<Vec<f64>> {
    weights
        .iter()
        .zip(lam)
        .map(|(&w, &l)| {
            if w == 0.0 {
                return Ok(0.0);
            }
            let x = l + mu;
            if !(x > 0.0) {
                return Err(Error::Domain(format!("entropy gradient at lam={l} with mu={mu}")));
            }
            Ok(-w * (log(x) + l / x))
        })
        .collect()
}

/// Weights `V / sqrt(S log(SA/delta))` that tilt the entropy towards noisy pairs.
pub fn modest_weights(noise: &[f64], num_states: usize, num_actions: usize, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence delta must lie in (0,1), got {delta}")));
    }
    let scale = sqrt(num_states as f64 * log((num_states * num_actions) as f64 / delta));
    Ok(noise.iter().map(|&v| v / scale).collect())
}

/// `(1/SA) sum V / sqrt(lam)`.
pub fn loss_asymptotic_avg(noise: &[f64], lam: &[f64]) -> Result<f64> {
    let terms = asymptotic_terms(noise, lam)?;
    Ok(terms.iter().sum::<f64>() / lam.len() as f64)
}

/// `max V / sqrt(lam)`.
pub fn loss_asymptotic_worst(noise: &[f64], lam: &[f64]) -> Result<f64> {
    Ok(asymptotic_terms(noise, lam)?.into_iter().fold(0.0, f64::max))
}

fn asymptotic_terms(noise: &[f64], lam: &[f64]) -> Result<Vec<f64>> {
    noise
        .iter()
        .zip(lam)
        .map(|(&v, &l)| {
            if v == 0.0 {
                Ok(0.0)
            } else if l > 0.0 {
                Ok(v / sqrt(l))
            } else {
                Err(Error::Domain(format!("V={v} with lam={l}")))
            }
        })
        .collect()
}

/// Which scalar objective an [`Objective`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// `L_n^E`: average of `G_n`.
    AvgSurrogate,
    /// LogSumExp of `G_n`, a smooth upper proxy of `max G_n`.
    LseWorstSurrogate,
    /// `L_inf^E`: average of `V / sqrt(lam)`.
    AsymptoticAvg,
    /// Smoothed weighted entropy `H_{w,mu}`.
    WeightedEntropy,
    /// Smoothed entropy with unit weights.
    Entropy,
}

impl ObjectiveKind {
    pub fn is_maximized(self) -> bool {
        matches!(self, ObjectiveKind::WeightedEntropy | ObjectiveKind::Entropy)
    }
}

/// A fully parameterised objective over state-action distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub num_states: usize,
    pub num_actions: usize,
    /// Budget `n` of the surrogates.
    pub budget: f64,
    /// Entropy smoothing.
    pub mu: f64,
    /// Entropy weights (unit for [`ObjectiveKind::Entropy`]).
    pub weights: Vec<f64>,
    /// Transitional noise used by the surrogates (true or optimistic).
    pub noise: Vec<f64>,
    /// Surrogates reject any `lam` entry below this value.
    pub domain_floor: f64,
}

impl Objective {
    fn base(kind: ObjectiveKind, num_states: usize, num_actions: usize) -> Self {
        Self {
            kind,
            num_states,
            num_actions,
            budget: 1.0,
            mu: 0.0,
            weights: Vec::new(),
            noise: Vec::new(),
            domain_floor: 0.0,
        }
    }

    pub fn avg_surrogate(num_states: usize, num_actions: usize, noise: Vec<f64>, budget: u64) -> Self {
        Self { budget: budget as f64, noise, ..Self::base(ObjectiveKind::AvgSurrogate, num_states, num_actions) }
    }

    pub fn lse_worst_surrogate(num_states: usize, num_actions: usize, noise: Vec<f64>, budget: u64) -> Self {
        Self {
            budget: budget as f64,
            noise,
            ..Self::base(ObjectiveKind::LseWorstSurrogate, num_states, num_actions)
        }
    }

    pub fn asymptotic_avg(num_states: usize, num_actions: usize, noise: Vec<f64>) -> Self {
        Self { noise, ..Self::base(ObjectiveKind::AsymptoticAvg, num_states, num_actions) }
    }

    pub fn weighted_entropy(num_states: usize, num_actions: usize, weights: Vec<f64>, mu: f64) -> Self {
        Self { weights, mu, ..Self::base(ObjectiveKind::WeightedEntropy, num_states, num_actions) }
    }

    pub fn entropy(num_states: usize, num_actions: usize, mu: f64) -> Self {
        Self {
            weights: alloc::vec![1.0; num_states * num_actions],
            mu,
            ..Self::base(ObjectiveKind::Entropy, num_states, num_actions)
        }
    }

    /// Restricts the surrogate domain to `lam >= eta / 2`.
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.domain_floor = eta / 2.0;
        self
    }

    fn check(&self, lam: &[f64]) -> Result<()> {
        let pairs = self.num_states * self.num_actions;
        if lam.len() != pairs {
            return Err(Error::ShapeMismatch(format!("lam has {} entries, expected {pairs}", lam.len())));
        }
        let params = if self.kind.is_maximized() { &self.weights } else { &self.noise };
        if params.len() != pairs {
            return Err(Error::ShapeMismatch(format!(
                "objective parameters have {} entries, expected {pairs}",
                params.len()
            )));
        }
        if self.kind.is_maximized() {
            if self.mu < 0.0 {
                return Err(Error::InvalidConfig(format!("negative smoothing mu={}", self.mu)));
            }
            if lam.iter().any(|&l| l < 0.0) {
                return Err(Error::Domain("negative lam entry".into()));
            }
        } else if let Some(&l) = lam.iter().find(|&&l| l < self.domain_floor || l < 0.0) {
            return Err(Error::Domain(format!("lam entry {l} below the floor {}", self.domain_floor)));
        }
        Ok(())
    }

    fn g_values(&self, lam: &[f64]) -> Vec<f64> {
        self.noise.iter().zip(lam).map(|(&v, &l)| g_n(v, l, self.budget, self.num_states)).collect()
    }

    /// Objective value in its natural orientation.
    pub fn value(&self, lam: &[f64]) -> Result<f64> {
        self.check(lam)?;
        let pairs = lam.len() as f64;
        Ok(match self.kind {
            ObjectiveKind::AvgSurrogate => self.g_values(lam).iter().sum::<f64>() / pairs,
            ObjectiveKind::LseWorstSurrogate => log_sum_exp(&self.g_values(lam)),
            ObjectiveKind::AsymptoticAvg => loss_asymptotic_avg(&self.noise, lam)?,
            ObjectiveKind::WeightedEntropy | ObjectiveKind::Entropy => {
                smoothed_weighted_entropy(&self.weights, lam, self.mu)
            }
        })
    }

    /// Gradient in the natural orientation.
    pub fn gradient(&self, lam: &[f64]) -> Result<Vec<f64>> {
        self.check(lam)?;
        let pairs = lam.len() as f64;
        let (n, s) = (self.budget, self.num_states);
        match self.kind {
            ObjectiveKind::AvgSurrogate => Ok(self
                .noise
                .iter()
                .zip(lam)
                .map(|(&v, &l)| g_n_derivative(v, l, n, s) / pairs)
                .collect()),
            ObjectiveKind::LseWorstSurrogate => {
                let weights = softmax(&self.g_values(lam));
                Ok(weights
                    .iter()
                    .zip(self.noise.iter().zip(lam))
                    .map(|(&w, (&v, &l))| w * g_n_derivative(v, l, n, s))
                    .collect())
            }
            ObjectiveKind::AsymptoticAvg => self
                .noise
                .iter()
                .zip(lam)
                .map(|(&v, &l)| {
                    if v == 0.0 {
                        Ok(0.0)
                    } else if l > 0.0 {
                        Ok(-0.5 * v / (l * sqrt(l)) / pairs)
                    } else {
                        Err(Error::Domain(format!("V={v} with lam={l}")))
                    }
                })
                .collect(),
            ObjectiveKind::WeightedEntropy | ObjectiveKind::Entropy => {
                smoothed_entropy_gradient(&self.weights, lam, self.mu)
            }
        }
    }

    /// Value to minimise (entropies negated).
    pub fn loss(&self, lam: &[f64]) -> Result<f64> {
        let v = self.value(lam)?;
        Ok(if self.kind.is_maximized() { -v } else { v })
    }

    /// Gradient of [`Objective::loss`].
    pub fn loss_gradient(&self, lam: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gradient(lam)?;
        if self.kind.is_maximized() {
            g.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn errors_of_identical_tensors() {
        let p = [0.5, 0.5, 1.0, 0.0];
        assert_eq!(estimation_errors(&p, &p, 2).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn errors_maximal_distance() {
        // 2 states x 1 action; only the first row differs.
        let p_hat = [1.0, 0.0, 0.0, 1.0];
        let p = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(error_max(&p_hat, &p, 2).unwrap(), 2.0);
        assert_eq!(error_avg(&p_hat, &p, 2).unwrap(), 1.0);
        // Single pair (S=2, A=... 1 row)
        assert_eq!(estimation_errors(&[1.0, 0.0], &[0.0, 1.0], 2).unwrap(), (2.0, 2.0));
        assert!(estimation_errors(&[1.0, 0.0], &[1.0, 0.0, 0.0], 2).is_err());
    }

    #[test]
    fn surrogate_f_values() {
        assert_eq!(surrogate_f(0.0, 0, 5), 5.0);
        assert_eq!(surrogate_f(1.0, 3, 5), 1.75);
        let mut prev = f64::INFINITY;
        for t in 0..200 {
            let f = surrogate_f(0.7, t, 4);
            assert!(f <= prev);
            prev = f;
        }
    }

    #[test]
    fn lse_of_equal_values() {
        let g = [1.3; 6];
        assert!((log_sum_exp(&g) - (1.3 + 6f64.ln())).abs() < 1e-12);
        let w = softmax(&[0.1, 2.0, -1.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_examples() {
        let v = [1.0, 1.0];
        let lam = [0.5, 0.5];
        assert!((loss_asymptotic_avg(&v, &lam).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(loss_asymptotic_worst(&v, &lam).unwrap() >= loss_asymptotic_avg(&v, &lam).unwrap());
        assert_eq!(loss_asymptotic_avg(&[0.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(loss_asymptotic_avg(&[1.0, 0.0], &[0.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_entropy() {
        let lam = vec![1.0 / 12.0; 12];
        let w = vec![1.0; 12];
        assert!((weighted_entropy(&w, &lam) - 12f64.ln()).abs() < 1e-12);
        let mut point = vec![0.0; 12];
        point[3] = 1.0;
        assert_eq!(weighted_entropy(&w, &point), 0.0);
        assert_eq!(smoothed_weighted_entropy(&w, &point, 0.0), 0.0);
    }

    #[test]
    fn weights_example() {
        let w = modest_weights(&[1.0, 0.0], 5, 5, 0.1).unwrap();
        assert!((w[0] - 1.0 / (5.0 * 250f64.ln()).sqrt()).abs() < 1e-15);
        assert!((w[0] - 0.190).abs() < 1e-3);
        assert_eq!(w[1], 0.0);
        assert!(modest_weights(&[1.0], 1, 1, 1.5).is_err());
    }

    #[test]
    fn surrogate_domain_is_enforced() {
        let obj = Objective::avg_surrogate(1, 2, vec![0.5, 0.5], 100).with_eta(0.1);
        assert!(matches!(obj.value(&[0.01, 0.99]), Err(Error::Domain(_))));
        assert!(obj.value(&[0.06, 0.94]).is_ok());
    }

    #[test]
    fn entropy_gradient_needs_mass_or_smoothing() {
        let obj = Objective::entropy(1, 2, 0.0);
        assert!(matches!(obj.gradient(&[0.0, 1.0]), Err(Error::Domain(_))));
        assert!(Objective::entropy(1, 2, 1e-3).gradient(&[0.0, 1.0]).is_ok());
    }

    #[test]
    fn loss_negates_entropies() {
        let obj = Objective::entropy(1, 2, 0.01);
        let lam = [0.3, 0.7];
        assert_eq!(obj.loss(&lam).unwrap(), -obj.value(&lam).unwrap());
        let g = obj.gradient(&lam).unwrap();
        let lg = obj.loss_gradient(&lam).unwrap();
        assert_eq!(g[0], -lg[0]);
    }
}
