//! Decision/report protocol shared by every policy driven by the harness.
//!
//! A policy announces which arms it plays and for how many slots; the
//! harness plays them and reports back what the played arms produced.
//! The policy never sees unplayed arms.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initialization,
    Main,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub arms: Vec<usize>,
    pub slots: u64,
    pub phase: Phase,
}

/// What the played arms did during one decision. `slots` may be shorter than
/// the decided duration when the horizon truncates the step.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub arms: &'a [usize],
    pub slots: u64,
    /// Per played arm, in the order of `arms`.
    pub reward_sums: &'a [f64],
    /// Per played arm, the state occupied during the last slot.
    pub last_states: &'a [usize],
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("need 1 <= K < N, got K = {select}, N = {arms}")]
    SelectCount { select: usize, arms: usize },
    #[error("exploration constant L = {0} must exceed 2 (pass the unsafe override to allow it)")]
    ExplorationTooSmall(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("schedule: {0}")]
    Schedule(#[from] crate::schedule::ScheduleError),
    #[error("a decision is already awaiting its report")]
    AwaitingReport,
    #[error("report received without a pending decision")]
    NoPendingDecision,
    #[error("reported arms {reported:?} do not match decided arms {decided:?}")]
    ArmMismatch { decided: Vec<usize>, reported: Vec<usize> },
    #[error("sample mean {value} for arm {arm} outside [0, 1]")]
    SampleMean { arm: usize, value: f64 },
    #[error("reported {reported} slots for a step of {decided}")]
    SlotCount { decided: u64, reported: u64 },
    #[error("index values are only defined in the main loop")]
    NotInMainLoop,
    #[error("observation is malformed: {0}")]
    Observation(String),
}

pub trait Policy: Send {
    /// Short name used in outputs and for seed derivation.
    fn label(&self) -> &str;

    /// True for baselines rebuilt from their published descriptions.
    fn is_reconstruction(&self) -> bool {
        false
    }

    fn next_decision(&mut self) -> Result<Decision, PolicyError>;

    fn observe(&mut self, obs: &Observation<'_>) -> Result<(), PolicyError>;
}

pub(crate) fn check_observation(obs: &Observation<'_>) -> Result<(), PolicyError> {
    if obs.reward_sums.len() != obs.arms.len() || obs.last_states.len() != obs.arms.len() {
        return Err(PolicyError::Observation(format!(
            "{} arms but {} reward sums and {} states",
            obs.arms.len(),
            obs.reward_sums.len(),
            obs.last_states.len()
        )));
    }
    if obs.slots == 0 {
        return Err(PolicyError::Observation("zero slots".into()));
    }
    Ok(())
}

pub(crate) fn same_arm_set(decided: &[usize], reported: &[usize]) -> bool {
    let mut a = decided.to_vec();
    let mut b = reported.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}
