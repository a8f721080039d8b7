mod common;

use cee_core::schedule::StepSchedule;
use common::{engine, interpret, log_block, scenario_s_arms, toy_arms};

const SEEDS: u64 = 100;
const HORIZON: u64 = 1000;

fn points() -> Vec<u64> {
    (1..=20).map(|k| k * 50).collect()
}

#[test]
fn single_arm_selection_matches_interpreter() {
    let chains = toy_arms();
    for seed in 0..SEEDS {
        let a = engine(&chains, StepSchedule::Logarithmic, 1, 2.1, HORIZON, seed, &points());
        let b = interpret(&chains, &log_block, 1, 2.1, HORIZON, seed, &points());
        assert_eq!(a, b, "seed {seed}");
        assert_eq!(a.steps.last().unwrap().n, HORIZON);
    }
}

#[test]
fn multi_arm_selection_matches_interpreter() {
    let chains = scenario_s_arms();
    for seed in 0..SEEDS {
        let a = engine(&chains, StepSchedule::Logarithmic, 2, 2.1, HORIZON, seed, &points());
        let b = interpret(&chains, &log_block, 2, 2.1, HORIZON, seed, &points());
        assert_eq!(a, b, "seed {seed}");
        // Three batches, the last padded with arm 0.
        assert_eq!(a.steps[2].arms, vec![4, 0]);
        assert_eq!(a.steps[2].plays, vec![2, 1, 1, 1, 1]);
    }
}

#[test]
fn constant_schedule_with_truncated_final_step() {
    let chains = scenario_s_arms();
    for seed in 0..20 {
        let a = engine(&chains, StepSchedule::constant(7), 2, 3.0, HORIZON, seed, &points());
        let b = interpret(&chains, &|_| 7, 2, 3.0, HORIZON, seed, &points());
        assert_eq!(a, b, "seed {seed}");
        assert_eq!(a.steps.last().unwrap().slots, HORIZON % 7);
    }
}

#[test]
fn comparison_detects_a_different_exploration_constant() {
    let chains = scenario_s_arms();
    let differing = (0..SEEDS)
        .filter(|&seed| {
            engine(&chains, StepSchedule::Logarithmic, 2, 2.1, HORIZON, seed, &points())
                != interpret(&chains, &log_block, 2, 6.0, HORIZON, seed, &points())
        })
        .count();
    assert!(differing > 90, "{differing}");
}
