//! Parameter thresholds and reconstructed comparison policies.
//!
//! The two comparison policies below are *reconstructions* from short
//! published descriptions, not reference implementations. Every output that
//! carries their numbers is labelled accordingly.
//!
//! * RCA (regenerative cycle algorithm): an arm is played for a whole
//!   regenerative block. The block runs until the arm's regenerative state
//!   (state 0) has been observed twice; only the slots between the first
//!   visit and the second visit (sub-block 2) feed the arm's statistics.
//!   Between blocks the arm with the largest
//!   `mean_SB2 + sqrt(L ln n_SB2 / slots_SB2)` is chosen.
//! * RUCB: deterministic epochs. Exploration epoch `e` plays every arm for
//!   `4^(e-1)` consecutive slots; exploitation epoch `e` plays the arm with the
//!   largest `mean + sqrt(L ln t / samples)` for `2 * 4^(e-1)` slots. An epoch
//!   explores while some arm has at most `D ln t` exploration samples.

use crate::bounds::BoundsError;
use crate::handshake::{check_observation, Decision, Observation, Phase, Policy, PolicyError};
use crate::markov::RewardedMarkovChain;

/// Inputs and outputs of the baseline parameter conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineThresholds {
    pub rca_l_min: f64,
    pub rucb_l_min: f64,
    /// `4 L / gap^2` at `L = rucb_l_min`.
    pub rucb_d_min: f64,
    /// `4 L / gap^2` at a user-chosen `L`, when one was given.
    pub rucb_d_at_chosen_l: Option<f64>,
    pub s_max: usize,
    pub r_max: f64,
    pub pi_hat_max: f64,
    /// Smallest multiplicative-symmetrization gap over arms.
    pub eps_min: f64,
    /// Smallest plain eigenvalue gap over arms.
    pub eps_star: f64,
    /// `mu(1) - mu(K+1)`.
    pub top_gap: f64,
}

struct ChainSummary {
    s_max: usize,
    r_max: f64,
    pi_hat_max: f64,
    eps_min: f64,
    eps_star: f64,
}

fn summarize(chains: &[RewardedMarkovChain]) -> ChainSummary {
    let mut s = ChainSummary {
        s_max: 0,
        r_max: 0.0,
        pi_hat_max: 0.0,
        eps_min: f64::INFINITY,
        eps_star: f64::INFINITY,
    };
    for c in chains {
        s.s_max = s.s_max.max(c.states());
        s.r_max = c.rewards().iter().copied().fold(s.r_max, f64::max);
        s.pi_hat_max = c
            .stationary()
            .pi
            .iter()
            .map(|&p| p.max(1.0 - p))
            .fold(s.pi_hat_max, f64::max);
        let g = c.eigen_gaps();
        s.eps_min = s.eps_min.min(g.multiplicative);
        s.eps_star = s.eps_star.min(g.plain);
    }
    s
}

/// `112 S_max^2 r_max^2 pi_hat_max^2 / eps_min`.
pub fn rca_threshold(chains: &[RewardedMarkovChain]) -> f64 {
    let s = summarize(chains);
    rca_formula(s.s_max, s.r_max, s.pi_hat_max, s.eps_min)
}

pub fn rca_formula(s_max: usize, r_max: f64, pi_hat_max: f64, eps_min: f64) -> f64 {
    let s = s_max as f64;
    112.0 * s * s * r_max * r_max * pi_hat_max * pi_hat_max / eps_min
}

/// `(1/eps*) (4 * 20 r_max^2 S_max^2 / (3 - 2 sqrt 2) + 10 r_max^2)`.
pub fn rucb_l_formula(s_max: usize, r_max: f64, eps_star: f64) -> f64 {
    let s = s_max as f64;
    let r2 = r_max * r_max;
    (4.0 * 20.0 * r2 * s * s / (3.0 - 2.0 * 2f64.sqrt()) + 10.0 * r2) / eps_star
}

/// `4 L / gap^2`.
pub fn rucb_d_formula(l: f64, top_gap: f64) -> f64 {
    4.0 * l / (top_gap * top_gap)
}

fn top_gap(chains: &[RewardedMarkovChain], select: usize) -> Result<f64, BoundsError> {
    if chains.len() < 2 {
        return Err(BoundsError::TooFewArms);
    }
    if select == 0 || select >= chains.len() {
        return Err(BoundsError::SelectCount {
            select,
            arms: chains.len(),
        });
    }
    let mut mus: Vec<f64> = chains.iter().map(|c| c.mu()).collect();
    mus.sort_by(|a, b| b.total_cmp(a));
    let gap = mus[0] - mus[select];
    if gap <= 0.0 {
        return Err(BoundsError::Tie {
            first: 0,
            second: select,
            mu: mus[0],
        });
    }
    Ok(gap)
}

/// RUCB's `(L_min, D_min)`; `D_min` is evaluated at `L_min`.
pub fn rucb_thresholds(chains: &[RewardedMarkovChain], select: usize) -> Result<(f64, f64), BoundsError> {
    let t = baseline_thresholds(chains, select, None)?;
    Ok((t.rucb_l_min, t.rucb_d_min))
}

pub fn baseline_thresholds(
    chains: &[RewardedMarkovChain],
    select: usize,
    chosen_rucb_l: Option<f64>,
) -> Result<BaselineThresholds, BoundsError> {
    let gap = top_gap(chains, select)?;
    let s = summarize(chains);
    let rucb_l_min = rucb_l_formula(s.s_max, s.r_max, s.eps_star);
    Ok(BaselineThresholds {
        rca_l_min: rca_formula(s.s_max, s.r_max, s.pi_hat_max, s.eps_min),
        rucb_l_min,
        rucb_d_min: rucb_d_formula(rucb_l_min, gap),
        rucb_d_at_chosen_l: chosen_rucb_l.map(|l| rucb_d_formula(l, gap)),
        s_max: s.s_max,
        r_max: s.r_max,
        pi_hat_max: s.pi_hat_max,
        eps_min: s.eps_min,
        eps_star: s.eps_star,
        top_gap: gap,
    })
}

fn argmax_index(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

fn check_single(arms: usize, select: usize, exploration: f64) -> Result<(), PolicyError> {
    if select != 1 {
        return Err(PolicyError::Parameter(
            "reconstructed baselines support single-arm selection only".into(),
        ));
    }
    if arms < 2 {
        return Err(PolicyError::SelectCount { select, arms });
    }
    if !(exploration > 0.0) || !exploration.is_finite() {
        return Err(PolicyError::Parameter(format!("L must be positive, got {exploration}")));
    }
    Ok(())
}

fn single_slot_report(pending: Option<usize>, obs: &Observation<'_>) -> Result<(usize, usize, f64), PolicyError> {
    check_observation(obs)?;
    let arm = pending.ok_or(PolicyError::NoPendingDecision)?;
    if obs.arms != [arm] {
        return Err(PolicyError::ArmMismatch {
            decided: vec![arm],
            reported: obs.arms.to_vec(),
        });
    }
    if obs.slots != 1 {
        return Err(PolicyError::SlotCount {
            decided: 1,
            reported: obs.slots,
        });
    }
    Ok((arm, obs.last_states[0], obs.reward_sums[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SubBlock {
    /// Waiting for the first visit to the regenerative state.
    First,
    /// Collecting until the regenerative state recurs.
    Second,
}

/// One completed RCA block, in slot coordinates (`[start, end)`, 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRecord {
    pub arm: usize,
    pub start: u64,
    /// First slot of sub-block 2.
    pub second_start: u64,
    /// One past the slot in which the regenerative state recurred.
    pub end: u64,
}

#[derive(Debug, Clone)]
pub struct RcaPolicy {
    exploration: f64,
    regenerative: Vec<usize>,
    sb2_reward: Vec<f64>,
    sb2_slots: Vec<u64>,
    blocks: Vec<u64>,
    current: usize,
    sub_block: SubBlock,
    block_reward: f64,
    block_slots: u64,
    block_start: u64,
    second_start: u64,
    slot: u64,
    pending: Option<usize>,
    log: Option<Vec<BlockRecord>>,
}

impl RcaPolicy {
    /// Uses state 0 of every arm as its regenerative state.
    pub fn new(arms: usize, select: usize, exploration: f64) -> Result<Self, PolicyError> {
        check_single(arms, select, exploration)?;
        Ok(RcaPolicy {
            exploration,
            regenerative: vec![0; arms],
            sb2_reward: vec![0.0; arms],
            sb2_slots: vec![0; arms],
            blocks: vec![0; arms],
            current: 0,
            sub_block: SubBlock::First,
            block_reward: 0.0,
            block_slots: 0,
            block_start: 0,
            second_start: 0,
            slot: 0,
            pending: None,
            log: None,
        })
    }

    /// Keeps a record of every completed block.
    pub fn with_block_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn block_log(&self) -> Option<&[BlockRecord]> {
        self.log.as_deref()
    }

    pub fn completed_blocks(&self) -> &[u64] {
        &self.blocks
    }

    /// Slots observed in sub-block 2 per arm.
    pub fn sb2_slots(&self) -> &[u64] {
        &self.sb2_slots
    }

    fn choose_next(&self) -> usize {
        if let Some(fresh) = self.blocks.iter().position(|&b| b == 0) {
            return fresh;
        }
        let total: u64 = self.sb2_slots.iter().sum();
        let ln_total = (total as f64).ln().max(0.0);
        argmax_index(self.sb2_reward.iter().zip(&self.sb2_slots).map(|(&r, &s)| {
            let s = s as f64;
            r / s + (self.exploration * ln_total / s).sqrt()
        }))
    }
}

impl Policy for RcaPolicy {
    fn label(&self) -> &str {
        "rca"
    }

    fn is_reconstruction(&self) -> bool {
        true
    }

    fn next_decision(&mut self) -> Result<Decision, PolicyError> {
        if self.pending.is_some() {
            return Err(PolicyError::AwaitingReport);
        }
        self.pending = Some(self.current);
        let phase = if self.blocks.iter().any(|&b| b == 0) {
            Phase::Initialization
        } else {
            Phase::Main
        };
        Ok(Decision {
            arms: vec![self.current],
            slots: 1,
            phase,
        })
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<(), PolicyError> {
        let (arm, state, reward) = single_slot_report(self.pending, obs)?;
        self.pending = None;
        let regen = state == self.regenerative[arm];
        match self.sub_block {
            SubBlock::First => {
                if regen {
                    self.sub_block = SubBlock::Second;
                    self.second_start = self.slot;
                    self.block_reward = reward;
                    self.block_slots = 1;
                }
            }
            SubBlock::Second if regen => {
                // Recurrence: this slot closes the block and is not part of SB2.
                self.sb2_reward[arm] += self.block_reward;
                self.sb2_slots[arm] += self.block_slots;
                self.blocks[arm] += 1;
                if let Some(log) = self.log.as_mut() {
                    log.push(BlockRecord {
                        arm,
                        start: self.block_start,
                        second_start: self.second_start,
                        end: self.slot + 1,
                    });
                }
                self.sub_block = SubBlock::First;
                self.block_reward = 0.0;
                self.block_slots = 0;
                self.block_start = self.slot + 1;
                self.current = self.choose_next();
            }
            SubBlock::Second => {
                self.block_reward += reward;
                self.block_slots += 1;
            }
        }
        self.slot += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochKind {
    Exploration,
    Exploitation,
}

/// One RUCB epoch in slot coordinates (`start` is 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochRecord {
    pub kind: EpochKind,
    pub start: u64,
    pub len: u64,
}

#[derive(Debug, Clone)]
pub struct RucbPolicy {
    exploration: f64,
    epoch_parameter: f64,
    arms: usize,
    reward: Vec<f64>,
    samples: Vec<u64>,
    explore_samples: Vec<u64>,
    explorations: u32,
    exploitations: u32,
    /// Remaining plan for the running epoch: (arm, slots left), front first.
    plan: std::collections::VecDeque<(usize, u64)>,
    kind: EpochKind,
    slot: u64,
    pending: Option<usize>,
    epochs: Vec<EpochRecord>,
}

impl RucbPolicy {
    pub fn new(arms: usize, select: usize, exploration: f64, epoch_parameter: f64) -> Result<Self, PolicyError> {
        check_single(arms, select, exploration)?;
        if !(epoch_parameter > 0.0) || !epoch_parameter.is_finite() {
            return Err(PolicyError::Parameter(format!(
                "D must be positive, got {epoch_parameter}"
            )));
        }
        Ok(RucbPolicy {
            exploration,
            epoch_parameter,
            arms,
            reward: vec![0.0; arms],
            samples: vec![0; arms],
            explore_samples: vec![0; arms],
            explorations: 0,
            exploitations: 0,
            plan: Default::default(),
            kind: EpochKind::Exploration,
            slot: 0,
            pending: None,
            epochs: Vec::new(),
        })
    }

    pub fn epochs(&self) -> &[EpochRecord] {
        &self.epochs
    }

    fn start_epoch(&mut self) {
        let t = (self.slot + 1) as f64;
        let threshold = self.epoch_parameter * t.ln();
        let explore = self.explore_samples.iter().any(|&s| (s as f64) <= threshold);
        let (kind, len) = if explore {
            self.explorations += 1;
            let each = 4u64.pow(self.explorations - 1);
            self.plan = (0..self.arms).map(|a| (a, each)).collect();
            (EpochKind::Exploration, each * self.arms as u64)
        } else {
            self.exploitations += 1;
            let len = 2 * 4u64.pow(self.exploitations - 1);
            let ln_t = t.ln();
            let best = argmax_index(self.reward.iter().zip(&self.samples).map(|(&r, &s)| {
                let s = s as f64;
                r / s + (self.exploration * ln_t / s).sqrt()
            }));
            self.plan = std::iter::once((best, len)).collect();
            (EpochKind::Exploitation, len)
        };
        self.kind = kind;
        self.epochs.push(EpochRecord {
            kind,
            start: self.slot,
            len,
        });
    }
}

impl Policy for RucbPolicy {
    fn label(&self) -> &str {
        "rucb"
    }

    fn is_reconstruction(&self) -> bool {
        true
    }

    fn next_decision(&mut self) -> Result<Decision, PolicyError> {
        if self.pending.is_some() {
            return Err(PolicyError::AwaitingReport);
        }
        while self.plan.front().is_none_or(|&(_, left)| left == 0) {
            if self.plan.pop_front().is_none() {
                self.start_epoch();
            }
        }
        let arm = self.plan.front().unwrap().0;
        self.pending = Some(arm);
        let phase = if self.explorations == 1 && self.kind == EpochKind::Exploration {
            Phase::Initialization
        } else {
            Phase::Main
        };
        Ok(Decision {
            arms: vec![arm],
            slots: 1,
            phase,
        })
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<(), PolicyError> {
        let (arm, _, reward) = single_slot_report(self.pending, obs)?;
        self.pending = None;
        self.reward[arm] += reward;
        self.samples[arm] += 1;
        if self.kind == EpochKind::Exploration {
            self.explore_samples[arm] += 1;
        }
        if let Some(front) = self.plan.front_mut() {
            front.1 -= 1;
        }
        self.slot += 1;
        Ok(())
    }
}
