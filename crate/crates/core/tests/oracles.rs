//! Results checked against independent reference computations written here.

use approx::assert_abs_diff_eq;
use modest_core::envs::{build_garnet, build_noisy_riverswim, build_wheel, EnvSpec};
use modest_core::estimation::{bernstein_half_width, transitional_noise, Counters};
use modest_core::evi::value_iteration;
use modest_core::fw_modest::{episode_length, EpisodeSchedule};
use modest_core::lp::solve_known_model_lp;
use modest_core::objectives::{error_avg, error_max, g_n};
use modest_core::optimal::table1_error;
use modest_core::simlemma::{discounted_value_iteration, evaluate_policy};
use modest_core::{rng_from_seed, OccupancyMeasure, StationaryPolicy, TabularMdp, Transition};
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use rand::Rng;

fn random_mdp(rng: &mut impl Rng, ns: usize, na: usize) -> TabularMdp {
    TabularMdp::from_rows(ns, na, |_, _, row| {
        row.iter_mut().for_each(|x| *x = 0.05 + rng.random::<f64>());
        let t: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= t);
    })
    .unwrap()
}

/// Cesaro average of the state distribution over the second half of 20000
/// kernel steps, which also converges on periodic chains.
fn power_iteration(mdp: &TabularMdp, policy: &StationaryPolicy) -> Vec<f64> {
    let ns = mdp.num_states();
    let mut d = vec![1.0 / ns as f64; ns];
    let mut avg = vec![0.0; ns];
    let total = 20_000;
    for it in 0..total {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..mdp.num_actions() {
                let w = d[s] * policy.prob(s, a);
                for (j, p) in mdp.row(s, a).iter().enumerate() {
                    next[j] += w * p;
                }
            }
        }
        d = next;
        if it >= total / 2 {
            avg.iter_mut().zip(&d).for_each(|(a, x)| *a += x);
        }
    }
    avg.iter().map(|x| x / (total - total / 2) as f64).collect()
}

#[test]
fn stationary_distribution_matches_power_iteration() {
    let mut rng = rng_from_seed(11);
    for _ in 0..20 {
        let ns = rng.random_range(2..6);
        let na = rng.random_range(1..4);
        let mdp = random_mdp(&mut rng, ns, na);
        let probs: Vec<f64> = (0..ns)
            .flat_map(|_| {
                let raw: Vec<f64> = (0..na).map(|_| rng.random::<f64>() + 0.01).collect();
                let t: f64 = raw.iter().sum();
                raw.into_iter().map(move |x| x / t)
            })
            .collect();
        let policy = StationaryPolicy::new(ns, na, probs).unwrap();
        let lam = mdp.stationary_distribution(&policy).unwrap();
        let reference = power_iteration(&mdp, &policy);
        for (s, r) in reference.iter().enumerate() {
            assert_abs_diff_eq!(lam.state_marginal()[s], *r, epsilon = 1e-9);
        }
    }
    // Periodic two-cycle with a single action.
    let mdp = TabularMdp::from_rows(2, 1, |s, _, row| row[1 - s] = 1.0).unwrap();
    let lam = mdp.stationary_distribution(&StationaryPolicy::uniform(2, 1)).unwrap();
    assert_abs_diff_eq!(lam.as_slice()[0], 0.5, epsilon = 1e-12);
}

#[test]
fn garnet_support_graph_is_strongly_connected() {
    for seed in 0..30 {
        let mdp = build_garnet(8, 3, 2, seed).unwrap();
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..8).map(|_| g.add_node(())).collect();
        for s in 0..8 {
            for a in 0..3 {
                for (j, &p) in mdp.row(s, a).iter().enumerate() {
                    if p > 0.0 {
                        g.add_edge(nodes[s], nodes[j], ());
                    }
                }
            }
        }
        assert_eq!(kosaraju_scc(&g).len(), 1, "seed {seed}");
        for pair in 0..mdp.num_pairs() {
            assert!(mdp.support_size(pair / 3, pair % 3) <= 2);
        }
    }
}

#[test]
fn garnet_is_reproducible() {
    let a = build_garnet(5, 5, 5, 4).unwrap();
    let b: TabularMdp = "garnet:5x5x5:4".parse::<EnvSpec>().unwrap().build().unwrap();
    assert_eq!(a, b);
    assert_ne!(a, build_garnet(5, 5, 5, 5).unwrap());
}

/// Best average reward over deterministic policies, by enumeration.
fn enumeration_gain(mdp: &TabularMdp, reward: &[f64]) -> f64 {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut best = f64::NEG_INFINITY;
    for code in 0..na.pow(ns as u32) {
        let actions: Vec<usize> = (0..ns).map(|s| (code / na.pow(s as u32)) % na).collect();
        if let Ok(lam) = mdp.stationary_distribution(&StationaryPolicy::deterministic(na, &actions)) {
            best = best.max(lam.as_slice().iter().zip(reward).map(|(l, r)| l * r).sum());
        }
    }
    best
}

#[test]
fn value_iteration_gain_matches_enumeration() {
    let mut rng = rng_from_seed(5);
    let mut corpus = vec![build_wheel(3).unwrap(), build_noisy_riverswim(2).unwrap(), build_noisy_riverswim(3).unwrap()];
    for _ in 0..20 {
        let ns = rng.random_range(2..4);
        corpus.push(random_mdp(&mut rng, ns, 2));
    }
    for mdp in &corpus {
        for _ in 0..5 {
            let reward: Vec<f64> = (0..mdp.num_pairs()).map(|_| rng.random::<f64>()).collect();
            let vi = value_iteration(mdp, &reward, 1e-10).unwrap();
            assert_abs_diff_eq!(vi.gain, enumeration_gain(mdp, &reward), epsilon = 1e-6);
        }
    }
}

#[test]
fn known_model_lp_matches_enumeration() {
    let mut rng = rng_from_seed(6);
    for _ in 0..20 {
        let ns = rng.random_range(2..4);
        let mdp = random_mdp(&mut rng, ns, 2);
        let reward: Vec<f64> = (0..mdp.num_pairs()).map(|_| rng.random::<f64>()).collect();
        let lam = solve_known_model_lp(&mdp, &reward, 0.0).unwrap();
        let value: f64 = lam.as_slice().iter().zip(&reward).map(|(l, r)| l * r).sum();
        assert_abs_diff_eq!(value, enumeration_gain(&mdp, &reward), epsilon = 1e-9);
        assert!(lam.flow_residual(&mdp) < 1e-9);
    }
}

#[test]
fn bernstein_width_closed_form() {
    // S = 5, A = 2, T = 100, delta = 0.1: l = ln(6 * 5 * 2 * 100 / 0.1) = ln(60000).
    let l = 60_000f64.ln();
    let expected = 2.0 * (0.25 * l / 100.0).sqrt() + 6.0 * l / 100.0;
    assert_abs_diff_eq!(bernstein_half_width(0.25, 100, 5, 2, 0.1), expected, epsilon = 1e-12);
}

#[test]
fn transitional_noise_by_hand() {
    // Row (1/2, 1/2, 0, 0): V = 2 * sqrt(1/4) / sqrt(4) = 1/2.
    let mdp = TabularMdp::from_rows(4, 1, |s, _, row| {
        if s == 0 {
            row[0] = 0.5;
            row[1] = 0.5;
        } else {
            row[(s + 1) % 4] = 1.0;
        }
    })
    .unwrap();
    let v = transitional_noise(&mdp);
    assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
    assert_eq!(&v[1..], &[0.0, 0.0, 0.0]);
}

#[test]
fn surrogate_by_hand() {
    // V = 0.5, lam = 0.1, n = 100, S = 4: 0.5/sqrt(0.11) + 4/(10 * 0.11).
    assert_abs_diff_eq!(g_n(0.5, 0.1, 100.0, 4), 0.5 / 0.11f64.sqrt() + 4.0 / 1.1, epsilon = 1e-12);
}

#[test]
fn errors_by_hand() {
    let p = [0.5, 0.5, 1.0, 0.0];
    let q = [0.25, 0.75, 1.0, 0.0];
    assert_abs_diff_eq!(error_avg(&q, &p, 2).unwrap(), 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(error_max(&q, &p, 2).unwrap(), 0.5, epsilon = 1e-15);
}

#[test]
fn cubic_schedule_sums_to_cubes() {
    let lens: Vec<u64> = (1..=4).map(|k| episode_length(k, EpisodeSchedule::Cubic)).collect();
    assert_eq!(lens, vec![1, 7, 19, 37]);
    let mut total = 0;
    for k in 1..=50u64 {
        total += episode_length(k, EpisodeSchedule::Cubic);
        assert_eq!(total, k * k * k);
    }
    assert_eq!(episode_length(9, EpisodeSchedule::Fixed(250)), 250);
}

#[test]
fn deterministic_mdp_is_learned_exactly() {
    let mdp = TabularMdp::from_rows(4, 2, |s, a, row| row[(s + a + 1) % 4] = 1.0).unwrap();
    let lam = OccupancyMeasure::uniform(4, 2);
    assert_eq!(table1_error(&mdp, &lam, 10, 3).unwrap(), 0.0);
}

#[test]
fn table1_protocol_sample_counts() {
    // Expected E for m i.i.d. draws from a Bernoulli(1/2) row: E|p_hat - p|_1
    // = 2 E|X/m - 1/2| over X ~ Bin(m, 1/2), computed exactly.
    let m: u64 = 8;
    let binom = |k: u64| (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
    let exact: f64 = (0..=m).map(|k| binom(k) * 0.5f64.powi(m as i32) * 2.0 * (k as f64 / m as f64 - 0.5).abs()).sum();
    let mdp = TabularMdp::from_rows(2, 1, |_, _, row| row.fill(0.5)).unwrap();
    let lam = OccupancyMeasure::uniform(2, 1);
    // n lam = 8 samples per pair.
    let trials = 4000;
    let mc: f64 = (0..trials).map(|seed| table1_error(&mdp, &lam, 16, seed).unwrap()).sum::<f64>() / trials as f64;
    assert!((mc - exact).abs() < 0.01, "mc {mc} exact {exact}");
}

#[test]
fn discounted_policy_values_by_hand() {
    // Two states, one action each, deterministic swap, rewards (1, 0), gamma = 1/2:
    // v0 = 1 + v1/2, v1 = v0/2 -> v0 = 4/3, v1 = 2/3.
    let mdp = TabularMdp::from_rows(2, 1, |s, _, row| row[1 - s] = 1.0).unwrap();
    let v = evaluate_policy(&mdp, &[1.0, 0.0], 0.5, &[0, 0]).unwrap();
    assert_abs_diff_eq!(v[0], 4.0 / 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(v[1], 2.0 / 3.0, epsilon = 1e-9);
    let (opt, _) = discounted_value_iteration(&mdp, &[1.0, 0.0], 0.5).unwrap();
    assert_abs_diff_eq!(opt[0], v[0], epsilon = 1e-9);
}

#[test]
fn counters_empirical_rows() {
    let mut c = Counters::new(3, 1);
    for next_state in [0, 1, 1, 2] {
        c.update(Transition { state: 0, action: 0, next_state });
    }
    let m = c.empirical_model();
    assert_eq!(m.row(0, 0), &[0.25, 0.5, 0.25]);
    assert_abs_diff_eq!(m.sigma2()[1], 0.25, epsilon = 1e-15);
}
