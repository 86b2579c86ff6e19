use modest_core::envs::{build_noisy_riverswim, build_wheel};
use modest_core::estimation::{bernstein_halfwidths, Counters};
use modest_core::fw_modest::{fw_modest_run, EpisodeSchedule, FwConfig};
use modest_core::learner::CheckpointGrid;
use modest_core::lp::{extract_occupancy, extract_policy, solve_extended_lp};
use modest_core::objectives::{log_sum_exp, smoothed_weighted_entropy, weighted_entropy, Objective};
use modest_core::simlemma::simulation_lemma_check;
use modest_core::weighted_maxent::{weighted_maxent_run, WmeConfig};
use modest_core::{rng_from_seed, StationaryPolicy, TabularMdp};
use proptest::prelude::*;
use rand::Rng;

fn simplex(len: usize, floor: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(floor..1.0 + floor, len).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    })
}

fn mdp_strategy(max_states: usize, max_actions: usize) -> impl Strategy<Value = TabularMdp> {
    (2..=max_states, 1..=max_actions, any::<u64>()).prop_map(|(ns, na, seed)| {
        let mut rng = rng_from_seed(seed);
        TabularMdp::from_rows(ns, na, |_, _, row| {
            row.iter_mut().for_each(|x| *x = 0.05 + rng.random::<f64>());
            let t: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= t);
        })
        .unwrap()
    })
}

fn objective(kind: usize, ns: usize, na: usize, params: Vec<f64>) -> Objective {
    match kind {
        0 => Objective::avg_surrogate(ns, na, params, 500),
        1 => Objective::lse_worst_surrogate(ns, na, params, 500),
        2 => Objective::asymptotic_avg(ns, na, params),
        3 => Objective::weighted_entropy(ns, na, params, 0.01),
        _ => Objective::entropy(ns, na, 0.01),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(
        kind in 0usize..5,
        lam in simplex(12, 0.1),
        params in prop::collection::vec(0.0..1.5f64, 12),
    ) {
        let obj = objective(kind, 4, 3, params);
        let g = obj.gradient(&lam).unwrap();
        let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
        for i in 0..12 {
            let h = 1e-6 * lam[i];
            let (mut up, mut down) = (lam.clone(), lam.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (obj.value(&up).unwrap() - obj.value(&down).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-4 * scale, "coordinate {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn surrogates_are_convex_and_entropies_concave(
        kind in 0usize..5,
        a in simplex(6, 0.05),
        b in simplex(6, 0.05),
        t in 0.0..1.0f64,
        params in prop::collection::vec(0.0..1.5f64, 6),
    ) {
        let obj = objective(kind, 3, 2, params);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let chord = t * obj.loss(&a).unwrap() + (1.0 - t) * obj.loss(&b).unwrap();
        prop_assert!(obj.loss(&mid).unwrap() <= chord + 1e-10);
    }

    #[test]
    fn lse_sandwich(x in prop::collection::vec(-50.0..50.0f64, 1..80)) {
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let l = log_sum_exp(&x);
        prop_assert!(max <= l + 1e-12);
        prop_assert!(l <= max + (x.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn smoothing_bias_bound(
        lam in simplex(20, 0.0),
        zero_mask in prop::collection::vec(any::<bool>(), 20),
        w in prop::collection::vec(0.0..3.0f64, 20),
        log_mu in -9.0..-1.0f64,
    ) {
        let lam: Vec<f64> = lam.iter().zip(&zero_mask).map(|(l, z)| if *z { 0.0 } else { *l }).collect();
        let mu = 10f64.powf(log_mu);
        let big_w = w.iter().copied().fold(0.0, f64::max);
        let gap = (weighted_entropy(&w, &lam) - smoothed_weighted_entropy(&w, &lam, mu)).abs();
        prop_assert!(gap <= mu * 20.0 * big_w + 1e-15);
    }

    #[test]
    fn extended_lp_is_flow_and_interval_feasible(
        mdp in mdp_strategy(4, 2),
        steps in 20usize..1500,
        seed in any::<u64>(),
    ) {
        let (ns, na) = (mdp.num_states(), mdp.num_actions());
        let mut rng = rng_from_seed(seed);
        let traj = mdp.simulate(&StationaryPolicy::uniform(ns, na), 0, steps, &mut rng);
        let counters = Counters::from_transitions(ns, na, traj.iter());
        let model = counters.empirical_model();
        let conf = bernstein_halfwidths(&counters, &model, 0.1).unwrap();
        let reward: Vec<f64> = (0..ns * na).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sol = solve_extended_lp(&reward, &model, &conf, 1e-3).unwrap();
        prop_assert!(sol.q.flow_residual() <= 1e-8);
        prop_assert!((sol.q.total_mass() - 1.0).abs() <= 1e-8);
        prop_assert!(sol.q.interval_violation(&model, &conf, sol.eta_used) <= 1e-8);
        let occ = extract_occupancy(&sol.q);
        prop_assert!(occ.as_slice().iter().all(|&x| x >= sol.eta_used - 1e-8));
        let policy = extract_policy(&occ);
        for s in 0..ns {
            let row_sum: f64 = policy.row(s).iter().sum();
            prop_assert!((row_sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn checkpoint_grids_are_increasing_and_end_at_n(n in 1u64..1_000_000, ratio in 1.01..4.0f64, points in 1usize..60) {
        for grid in [
            CheckpointGrid::Geometric { ratio },
            CheckpointGrid::LogSpaced { first: 100, points },
            CheckpointGrid::Explicit(vec![5, 50, 500, 5000]),
        ] {
            let steps = grid.steps(n);
            prop_assert_eq!(*steps.last().unwrap(), n);
            prop_assert!(steps.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(steps[0] >= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_lemma_ratio_is_at_most_two(mdp in mdp_strategy(5, 3), seed in any::<u64>(), samples in 5u64..200) {
        let (ns, na) = (mdp.num_states(), mdp.num_actions());
        let mut rng = rng_from_seed(seed);
        let mut counters = Counters::new(ns, na);
        for s in 0..ns {
            for a in 0..na {
                for _ in 0..samples {
                    let next_state = mdp.step(s, a, &mut rng);
                    counters.update(modest_core::Transition { state: s, action: a, next_state });
                }
            }
        }
        let p_hat = TabularMdp::new(ns, na, counters.empirical_model().p_hat().to_vec()).unwrap();
        let report = simulation_lemma_check(&mdp, &p_hat, 0.9, 25, seed).unwrap();
        prop_assert!(report.max_ratio <= 2.0, "ratio {}", report.max_ratio);
    }

    #[test]
    fn learners_are_deterministic_and_spend_the_budget(seed in any::<u64>(), budget in 1u64..3000) {
        let mdp = build_noisy_riverswim(5).unwrap();
        let wme = WmeConfig { budget, ..WmeConfig::default() };
        let a = weighted_maxent_run(&mdp, &wme, seed).unwrap();
        let b = weighted_maxent_run(&mdp, &wme, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.trajectory.steps.len() as u64, budget);
        prop_assert_eq!(a.curve.last().unwrap().step, budget);

        let fw = FwConfig { budget, schedule: EpisodeSchedule::Fixed(200), ..FwConfig::default() };
        let c = fw_modest_run(&mdp, &fw, seed).unwrap();
        prop_assert_eq!(&c, &fw_modest_run(&mdp, &fw, seed).unwrap());
        prop_assert_eq!(c.log.iter().map(|r| r.steps).sum::<u64>(), budget);
    }
}

#[test]
fn cubic_fw_episodes_follow_the_schedule() {
    let mdp = build_wheel(4).unwrap();
    let cfg = FwConfig { budget: 30, ..FwConfig::default() };
    let out = fw_modest_run(&mdp, &cfg, 2).unwrap();
    let lens: Vec<u64> = out.log.iter().map(|r| r.steps).collect();
    // 1 + 7 + 19 = 27, then 3 of the 37 planned steps.
    assert_eq!(lens, vec![1, 7, 19, 3]);
    assert_eq!(out.log[0].lp_status.as_deref(), Some("uniform"));
    assert_eq!(out.log[1].lp_status.as_deref(), Some("optimal"));
}

#[test]
fn fw_budget_of_one() {
    let mdp = build_wheel(3).unwrap();
    let out = fw_modest_run(&mdp, &FwConfig { budget: 1, ..FwConfig::default() }, 0).unwrap();
    assert_eq!(out.trajectory.steps.len(), 1);
    assert_eq!(out.log.len(), 1);
}

#[test]
fn fw_on_a_deterministic_cycle_learns_it_exactly() {
    // Every row is deterministic, so any visited row is learned from one sample.
    let mdp = TabularMdp::from_rows(3, 2, |s, a, row| row[(s + a + 1) % 3] = 1.0).unwrap();
    let cfg = FwConfig { budget: 400, schedule: EpisodeSchedule::Fixed(50), ..FwConfig::default() };
    let out = fw_modest_run(&mdp, &cfg, 9).unwrap();
    let last = out.curve.last().unwrap();
    assert_eq!(last.error_avg, 0.0);
    assert_eq!(last.error_max, 0.0);
}
