//! Published numbers for the Wheel(5) and NoisyRiverSwim(12) allocations.

use modest_core::envs::{build_noisy_riverswim, build_wheel, wheel};
use modest_core::objectives::{Objective, ObjectiveKind};
use modest_core::optimal::{
    fw_modest_allocation, maxent_allocation, table1_error, weighted_maxent_allocation, FwSettings, MU_GUARD,
};
use modest_core::TabularMdp;

const N: u64 = 2_000_000;

fn settings() -> FwSettings {
    FwSettings { eta: 1e-4, ..FwSettings::default() }
}

fn protocol_error(mdp: &TabularMdp, lam: &modest_core::OccupancyMeasure) -> f64 {
    (0..10).map(|seed| table1_error(mdp, lam, N, seed).unwrap()).sum::<f64>() / 10.0
}

#[test]
fn wheel_maxent_matrix() {
    let printed = [
        [0.043, 0.043, 0.043, 0.043, 0.1048],
        [0.043, 0.043, 0.043, 0.0176, 0.0344],
        [0.043, 0.043, 0.043, 0.0176, 0.0344],
        [0.043, 0.043, 0.043, 0.0176, 0.0344],
        [0.043, 0.043, 0.043, 0.0176, 0.0344],
    ];
    let alloc = maxent_allocation(&build_wheel(5).unwrap(), 0.0, &settings()).unwrap();
    for (s, row) in printed.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            assert!((alloc.lam_star.get(s, a) - v).abs() <= 0.01, "({s},{a})");
        }
    }
    assert!((alloc.lam_star.get(0, wheel::NOISY) - 0.1048).abs() < 5e-4);
    assert!(alloc.gap <= 1e-4);
    assert!(alloc.smoothing_bias <= 2.5e-11 + 1e-24);
}

#[test]
fn wheel_weighted_maxent_puts_a_fifth_on_each_noisy_pair() {
    let alloc = weighted_maxent_allocation(&build_wheel(5).unwrap(), 0.0, &settings()).unwrap();
    for s in 0..5 {
        assert!((alloc.lam_star.get(s, wheel::NOISY) - 0.2).abs() <= 0.005);
    }
}

#[test]
fn wheel_fw_allocation_sits_on_the_floor_off_the_noisy_column() {
    let alloc = fw_modest_allocation(&build_wheel(5).unwrap(), &settings()).unwrap();
    for s in 0..5 {
        for a in 0..wheel::NOISY {
            assert!((alloc.lam_star.get(s, a) - 1e-4).abs() < 1e-6);
        }
        assert!((alloc.lam_star.get(s, wheel::NOISY) - 0.1996).abs() < 1e-3);
    }
}

#[test]
fn wheel_maxent_protocol_error() {
    let mdp = build_wheel(5).unwrap();
    let alloc = maxent_allocation(&mdp, 0.0, &settings()).unwrap();
    let e = protocol_error(&mdp, &alloc.lam_star);
    assert!((e / 1.0045e-3 - 1.0).abs() <= 0.10, "E = {e}");
}

#[test]
fn riverswim_maxent_and_fw_protocol_errors() {
    let mdp = build_noisy_riverswim(12).unwrap();
    let me = maxent_allocation(&mdp, 0.0, &settings()).unwrap();
    let e = protocol_error(&mdp, &me.lam_star);
    assert!((e / 0.4197e-2 - 1.0).abs() <= 0.10, "MaxEnt E = {e}");
    let fw = fw_modest_allocation(&mdp, &settings()).unwrap();
    assert!(fw.gap <= 1e-4);
    let e = protocol_error(&mdp, &fw.lam_star);
    assert!((e / 0.2851e-2 - 1.0).abs() <= 0.10, "FW-ModEst E = {e}");
}

#[test]
fn weighted_optimum_beats_maxent_on_its_own_objective() {
    for mdp in [build_wheel(5).unwrap(), build_noisy_riverswim(12).unwrap()] {
        let w = weighted_maxent_allocation(&mdp, 0.0, &settings()).unwrap();
        let m = maxent_allocation(&mdp, 0.0, &settings()).unwrap();
        assert_eq!(w.kind, ObjectiveKind::WeightedEntropy);
        let obj = Objective::weighted_entropy(
            mdp.num_states(),
            mdp.num_actions(),
            modest_core::objectives::modest_weights(
                &modest_core::estimation::transitional_noise(&mdp),
                mdp.num_states(),
                mdp.num_actions(),
                0.1,
            )
            .unwrap(),
            MU_GUARD,
        );
        assert!(obj.value(w.lam_star.as_slice()).unwrap() >= obj.value(m.lam_star.as_slice()).unwrap() - 1e-9);
    }
}
