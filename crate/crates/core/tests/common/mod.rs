#![allow(dead_code)]

use cee_core::cee::{CeeConfig, CeePolicy};
use cee_core::handshake::{Decision, Observation, Policy, PolicyError};
use cee_core::markov::{ArmState, InitialState, RewardedMarkovChain};
use cee_core::schedule::StepSchedule;
use cee_core::sim::episode::{run_episode, EpisodeOptions};

/// State of the index policy after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub arms: Vec<usize>,
    pub slots: u64,
    pub init: bool,
    pub sums: Vec<f64>,
    pub plays: Vec<u64>,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub steps: Vec<TraceStep>,
    /// Cumulative reward after each slot listed in `sample_points`.
    pub cumulative: Vec<f64>,
}

/// Straight-line transcription of the index policy: initialization batches
/// of `k` (the last one filled up with the lowest unused arms), then the
/// `k` largest `X_j / i_j + sqrt(L ln n / i_j)`, each step lasting `B_i`
/// slots. `n` counts the slots played so far. Every arm moves every slot;
/// a step cut by the horizon reports the mean over the slots it ran.
pub fn interpret(
    chains: &[RewardedMarkovChain],
    block: &dyn Fn(u64) -> u64,
    k: usize,
    l: f64,
    horizon: u64,
    run_seed: u64,
    sample_points: &[u64],
) -> OracleRun {
    let n_arms = chains.len();
    let mut env: Vec<ArmState> = chains
        .iter()
        .enumerate()
        .map(|(j, c)| ArmState::seeded(c, InitialState::Stationary, run_seed, j).unwrap())
        .collect();
    let mut x_hat = vec![0.0f64; n_arms];
    let mut i_j = vec![0u64; n_arms];
    let mut n = 0u64;
    let mut i = 1u64;
    let mut total = 0.0;
    let mut out = OracleRun {
        steps: Vec::new(),
        cumulative: Vec::new(),
    };

    let mut play = |arms: &[usize], slots: u64, total: &mut f64, n0: u64, cum: &mut Vec<f64>| -> Vec<f64> {
        let mut sums = vec![0.0; arms.len()];
        let mut rewards = vec![0.0; n_arms];
        for t in 0..slots {
            let mut slot_total = 0.0;
            for j in 0..n_arms {
                let on = arms.contains(&j);
                let a = env[j].advance(&chains[j], on);
                if on {
                    rewards[j] = a.reward.unwrap();
                    slot_total += rewards[j];
                }
            }
            for (s, &a) in sums.iter_mut().zip(arms) {
                *s += rewards[a];
            }
            *total += slot_total;
            if sample_points.contains(&(n0 + t + 1)) {
                cum.push(*total);
            }
        }
        sums
    };

    let batches = n_arms.div_ceil(k);
    for b in 0..batches {
        if n >= horizon {
            break;
        }
        let mut arms: Vec<usize> = (b * k..((b + 1) * k).min(n_arms)).collect();
        let mut filler = 0;
        while arms.len() < k {
            if !arms.contains(&filler) {
                arms.push(filler);
            }
            filler += 1;
        }
        let slots = block(i).min(horizon - n);
        let sums = play(&arms, slots, &mut total, n, &mut out.cumulative);
        for (&a, s) in arms.iter().zip(&sums) {
            x_hat[a] += s / slots as f64;
            i_j[a] += 1;
        }
        n += slots;
        i += 1;
        out.steps.push(TraceStep {
            arms,
            slots,
            init: true,
            sums: x_hat.clone(),
            plays: i_j.clone(),
            n,
        });
    }

    while n < horizon {
        let ln_n = (n as f64).ln().max(0.0);
        let f: Vec<f64> = (0..n_arms)
            .map(|j| x_hat[j] / i_j[j] as f64 + (l * ln_n / i_j[j] as f64).sqrt())
            .collect();
        let mut arms = Vec::with_capacity(k);
        for _ in 0..k {
            let mut best: Option<usize> = None;
            for j in 0..n_arms {
                if arms.contains(&j) {
                    continue;
                }
                if best.is_none() || f[j] > f[best.unwrap()] {
                    best = Some(j);
                }
            }
            arms.push(best.unwrap());
        }
        let slots = block(i).min(horizon - n);
        let sums = play(&arms, slots, &mut total, n, &mut out.cumulative);
        for (&a, s) in arms.iter().zip(&sums) {
            x_hat[a] += s / slots as f64;
            i_j[a] += 1;
        }
        n += slots;
        i += 1;
        out.steps.push(TraceStep {
            arms,
            slots,
            init: false,
            sums: x_hat.clone(),
            plays: i_j.clone(),
            n,
        });
    }
    out
}

/// Wraps the engine and snapshots its counters after every report.
pub struct Recording {
    pub inner: CeePolicy,
    pub snapshots: Vec<(Vec<f64>, Vec<u64>, u64)>,
}

impl Policy for Recording {
    fn label(&self) -> &str {
        "cee"
    }

    fn next_decision(&mut self) -> Result<Decision, PolicyError> {
        self.inner.next_decision()
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<(), PolicyError> {
        Policy::observe(&mut self.inner, obs)?;
        self.snapshots.push((
            self.inner.sums().to_vec(),
            self.inner.plays().to_vec(),
            self.inner.elapsed(),
        ));
        Ok(())
    }
}

/// The same run through the engine and the episode driver.
pub fn engine(
    chains: &[RewardedMarkovChain],
    schedule: StepSchedule,
    k: usize,
    l: f64,
    horizon: u64,
    run_seed: u64,
    sample_points: &[u64],
) -> OracleRun {
    let mut rec = Recording {
        inner: CeePolicy::new(CeeConfig::new(chains.len(), k, l, schedule)).unwrap(),
        snapshots: Vec::new(),
    };
    let mut opts = EpisodeOptions::new(horizon, sample_points.to_vec(), vec![]);
    opts.record_steps = true;
    let init = vec![InitialState::Stationary; chains.len()];
    let ep = run_episode(chains, &init, &mut rec, run_seed, &opts).unwrap();
    let steps = ep
        .steps_log
        .unwrap()
        .into_iter()
        .zip(rec.snapshots)
        .map(|(s, (sums, plays, n))| TraceStep {
            arms: s.arms,
            slots: s.slots,
            init: s.phase == cee_core::handshake::Phase::Initialization,
            sums,
            plays,
            n,
        })
        .collect();
    OracleRun {
        steps,
        cumulative: ep.cumulative,
    }
}

/// Two restless arms with distinct active and passive dynamics.
pub fn toy_arms() -> Vec<RewardedMarkovChain> {
    vec![
        RewardedMarkovChain::new(
            vec![vec![0.7, 0.3], vec![0.4, 0.6]],
            vec![vec![0.2, 0.8], vec![0.5, 0.5]],
            vec![0.2, 0.9],
        )
        .unwrap(),
        RewardedMarkovChain::gilbert_elliott(0.5, 0.1, 0.1, 1.0).unwrap(),
    ]
}

/// The five two-state channels of the bundled scenario.
pub fn scenario_s_arms() -> Vec<RewardedMarkovChain> {
    [(0.3, 0.9), (0.8, 0.7), (0.5, 0.1), (0.2, 0.4), (0.1, 0.5)]
        .iter()
        .map(|&(p01, p10)| RewardedMarkovChain::gilbert_elliott(p01, p10, 0.1, 1.0).unwrap())
        .collect()
}

/// `ceil(ln(i + 1)) + 1`, written out independently of the library.
pub fn log_block(i: u64) -> u64 {
    ((i + 1) as f64).ln().ceil() as u64 + 1
}
