//! Byte-level snapshots. Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden`
//! after an intentional behaviour change.

mod common;

use cee_core::markov::{ArmState, InitialState, RewardedMarkovChain};
use cee_core::schedule::StepSchedule;
use cee_core::sim::config::{ScenarioConfig, SCENARIO_S};
use cee_core::sim::export::export_all;
use cee_core::sim::seeding::run_seed;
use cee_core::sim::simulate;
use common::{engine, interpret, scenario_s_arms};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        expected == actual,
        "{} differs from the committed snapshot",
        path.display()
    );
}

#[test]
fn first_channel_two_steps_from_bad_state() {
    let ch1 = RewardedMarkovChain::gilbert_elliott(0.3, 0.9, 0.1, 1.0).unwrap();
    let mut arm = ArmState::seeded(&ch1, InitialState::Fixed(0), 7, 0).unwrap();
    let s1 = arm.advance(&ch1, true);
    let s2 = arm.advance(&ch1, true);

    // Replay the uniforms by hand: from bad, stay with 0.7; from good, fall back with 0.9.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    rng.set_stream(0);
    let (u1, u2): (f64, f64) = (rng.random(), rng.random());
    let e1 = usize::from(u1 >= 0.7);
    let e2 = if e1 == 0 {
        usize::from(u2 >= 0.7)
    } else {
        usize::from(u2 >= 0.9)
    };
    assert_eq!((s1.state, s2.state), (e1, e2));
    assert_eq!(s1.reward, Some([0.1, 1.0][e1]));
    assert_eq!((s1.state, s2.state), (0, 0));
}

#[test]
fn scenario_s_seed_7_cumulative_reward() {
    let chains = scenario_s_arms();
    let points: Vec<u64> = (1..=100).map(|k| k * 100).collect();
    let seed = run_seed(7, "cee", 0);
    let a = engine(&chains, StepSchedule::constant(49), 1, 2.1, 10_000, seed, &points);
    let b = interpret(&chains, &|_| 49, 1, 2.1, 10_000, seed, &points);
    assert_eq!(a, b);
    let mut csv = String::from("n,cumulative_reward\n");
    for (n, r) in points.iter().zip(&a.cumulative) {
        csv.push_str(&format!("{n},{r:?}\n"));
    }
    check_golden("scenario_s_seed7_cee.csv", &csv);
}

#[test]
fn three_policy_comparison_snapshot() {
    let cfg = ScenarioConfig::parse(SCENARIO_S)
        .unwrap()
        .with_overrides(Some(3000), Some(3), Some(7))
        .unwrap();
    let traces: Vec<_> = cee_core::sim::PolicyKind::ALL
        .into_iter()
        .map(|k| simulate(&cfg, k).unwrap().trace)
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let files = export_all(&traces, dir.path()).unwrap();
    assert_eq!(files.len(), 6);
    for f in files {
        let name = f.file_name().unwrap().to_str().unwrap().to_string();
        check_golden(&format!("compare/{name}"), &std::fs::read_to_string(&f).unwrap());
    }
}

#[test]
fn same_seed_same_trace() {
    let cfg = ScenarioConfig::parse(SCENARIO_S)
        .unwrap()
        .with_overrides(Some(5000), Some(4), Some(11))
        .unwrap();
    for k in cee_core::sim::PolicyKind::ALL {
        let a = simulate(&cfg, k).unwrap();
        let b = simulate(&cfg, k).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.runs, b.runs);
    }
}
