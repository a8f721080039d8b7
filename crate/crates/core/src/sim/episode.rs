//! One seeded run of a policy against the restless environment.

use crate::handshake::{Decision, Observation, Phase, Policy, PolicyError};
use crate::markov::{ArmState, ChainError, InitialState, RewardedMarkovChain};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("policy error: {0}")]
    Policy(#[from] PolicyError),
    #[error("policy broke the handshake: {0}")]
    Handshake(String),
    #[error("environment: {0}")]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone)]
pub struct EpisodeOptions {
    pub horizon: u64,
    /// Slot counts at which the cumulative reward is recorded.
    pub sample_points: Vec<u64>,
    /// Arm set counted as a hit in the late window.
    pub target: Vec<usize>,
    /// Main-phase steps starting at or after this slot (0-based) form the late window.
    pub late_start: u64,
    pub record_steps: bool,
}

impl EpisodeOptions {
    /// Late window is the final tenth of the horizon.
    pub fn new(horizon: u64, sample_points: Vec<u64>, target: Vec<usize>) -> Self {
        EpisodeOptions {
            horizon,
            sample_points,
            target,
            late_start: horizon - horizon / 10,
            record_steps: false,
        }
    }
}

/// One executed decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// First slot of the step, 0-based.
    pub start: u64,
    pub arms: Vec<usize>,
    pub phase: Phase,
    pub decided_slots: u64,
    /// Slots actually played (shorter than decided only at the horizon).
    pub slots: u64,
    pub reward_sums: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// Cumulative reward at each sample point.
    pub cumulative: Vec<f64>,
    pub total_reward: f64,
    pub slots: u64,
    pub steps: u64,
    pub late_steps: u64,
    pub late_hits: u64,
    pub steps_log: Option<Vec<StepRecord>>,
}

impl Episode {
    /// Fraction of late-window main-phase steps that played the target set.
    pub fn late_hit_rate(&self) -> Option<f64> {
        (self.late_steps > 0).then(|| self.late_hits as f64 / self.late_steps as f64)
    }
}

fn check_decision(d: &Decision, arms: usize) -> Result<(), EpisodeError> {
    if d.arms.is_empty() || d.slots == 0 {
        return Err(EpisodeError::Handshake(format!("empty decision {d:?}")));
    }
    let mut seen = vec![false; arms];
    for &a in &d.arms {
        if a >= arms || seen[a] {
            return Err(EpisodeError::Handshake(format!("bad arm list {:?}", d.arms)));
        }
        seen[a] = true;
    }
    Ok(())
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.contains(x))
}

/// Drives `policy` for `opts.horizon` slots. Every arm advances every slot,
/// under its active matrix when played and its passive matrix otherwise;
/// only played arms' rewards are collected and reported.
pub fn run_episode(
    chains: &[RewardedMarkovChain],
    initial: &[InitialState],
    policy: &mut dyn Policy,
    run_seed: u64,
    opts: &EpisodeOptions,
) -> Result<Episode, EpisodeError> {
    let n = chains.len();
    assert_eq!(initial.len(), n);
    let mut states = chains
        .iter()
        .zip(initial)
        .enumerate()
        .map(|(j, (c, &init))| ArmState::seeded(c, init, run_seed, j))
        .collect::<Result<Vec<_>, _>>()?;

    let mut played = vec![false; n];
    let mut out = Episode {
        cumulative: Vec::with_capacity(opts.sample_points.len()),
        total_reward: 0.0,
        slots: 0,
        steps: 0,
        late_steps: 0,
        late_hits: 0,
        steps_log: opts.record_steps.then(Vec::new),
    };
    let mut next_sample = 0;
    let mut slot_reward = vec![0.0; n];

    while out.slots < opts.horizon {
        let d = policy.next_decision()?;
        check_decision(&d, n)?;
        let start = out.slots;
        let len = d.slots.min(opts.horizon - start);
        d.arms.iter().for_each(|&a| played[a] = true);
        let mut sums = vec![0.0; d.arms.len()];
        for _ in 0..len {
            let mut total = 0.0;
            for (j, st) in states.iter_mut().enumerate() {
                let adv = st.advance(&chains[j], played[j]);
                if let Some(r) = adv.reward {
                    slot_reward[j] = r;
                    total += r;
                }
            }
            for (s, &a) in sums.iter_mut().zip(&d.arms) {
                *s += slot_reward[a];
            }
            out.total_reward += total;
            out.slots += 1;
            while opts.sample_points.get(next_sample) == Some(&out.slots) {
                out.cumulative.push(out.total_reward);
                next_sample += 1;
            }
        }
        d.arms.iter().for_each(|&a| played[a] = false);
        let last: Vec<usize> = d.arms.iter().map(|&a| states[a].current()).collect();
        policy.observe(&Observation {
            arms: &d.arms,
            slots: len,
            reward_sums: &sums,
            last_states: &last,
        })?;
        out.steps += 1;
        if d.phase == Phase::Main && start >= opts.late_start {
            out.late_steps += 1;
            out.late_hits += u64::from(same_set(&d.arms, &opts.target));
        }
        if let Some(log) = &mut out.steps_log {
            log.push(StepRecord {
                start,
                arms: d.arms,
                phase: d.phase,
                decided_slots: d.slots,
                slots: len,
                reward_sums: sums,
            });
        }
    }
    Ok(out)
}

/// Plays the same arm set every slot. With the top-`K` arms this is the
/// benchmark player the regret is measured against.
#[derive(Debug, Clone)]
pub struct FixedArms {
    arms: Vec<usize>,
    awaiting: bool,
}

impl FixedArms {
    pub fn new(arms: Vec<usize>) -> Self {
        FixedArms { arms, awaiting: false }
    }
}

impl Policy for FixedArms {
    fn label(&self) -> &str {
        "fixed"
    }

    fn next_decision(&mut self) -> Result<Decision, PolicyError> {
        if self.awaiting {
            return Err(PolicyError::AwaitingReport);
        }
        self.awaiting = true;
        Ok(Decision {
            arms: self.arms.clone(),
            slots: 1,
            phase: Phase::Main,
        })
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<(), PolicyError> {
        if !self.awaiting {
            return Err(PolicyError::NoPendingDecision);
        }
        self.awaiting = false;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_arms() -> Vec<RewardedMarkovChain> {
        [0.25, 0.5]
            .iter()
            .map(|&r| RewardedMarkovChain::rested_equal(vec![vec![1.0]], vec![r]).unwrap())
            .collect()
    }

    #[test]
    fn deterministic_single_state_reward() {
        let chains = constant_arms();
        let init = [InitialState::Stationary; 2];
        let opts = EpisodeOptions::new(100, vec![1, 50, 100], vec![1]);
        let ep = run_episode(&chains, &init, &mut FixedArms::new(vec![1]), 3, &opts).unwrap();
        assert_eq!(ep.total_reward, 50.0);
        assert_eq!(ep.cumulative, vec![0.5, 25.0, 50.0]);
        assert_eq!(ep.late_hit_rate(), Some(1.0));
        assert_eq!(ep.steps, 100);
    }

    #[test]
    fn bad_decision_is_caught() {
        struct Broken;
        impl Policy for Broken {
            fn label(&self) -> &str {
                "broken"
            }
            fn next_decision(&mut self) -> Result<Decision, PolicyError> {
                Ok(Decision {
                    arms: vec![0, 0],
                    slots: 1,
                    phase: Phase::Main,
                })
            }
            fn observe(&mut self, _: &Observation<'_>) -> Result<(), PolicyError> {
                Ok(())
            }
        }
        let chains = constant_arms();
        let opts = EpisodeOptions::new(10, vec![], vec![1]);
        let err = run_episode(&chains, &[InitialState::Stationary; 2], &mut Broken, 0, &opts).unwrap_err();
        assert!(matches!(err, EpisodeError::Handshake(_)));
    }
}
