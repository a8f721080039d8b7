//! Continuous exploration and exploitation (CEE).
//!
//! The engine is environment-agnostic: it hands out `(arms, duration)`
//! decisions and consumes per-step sample means. One implementation covers
//! both the single-arm (`K = 1`) and the multi-arm variant.
//!
//! Initialization plays the arms in batches of `K` (one arm per batch when
//! `K = 1`), consuming `B_1 .. B_ceil(N/K)`. When `K` does not divide `N` the
//! last batch is padded with the lowest-indexed arms outside it. The main
//! loop then repeatedly plays the `K` arms with the largest
//!
//! ```text
//! F(j) = X_j / i_j + sqrt(L ln n / i_j)
//! ```
//!
//! for `B_i` slots, where `X_j` is the sum of the arm's per-step sample
//! means, `i_j` its number of steps, `n` the slots elapsed before the
//! decision and `i` the global step index. Ties go to the lowest arm index.

use crate::handshake::{check_observation, same_arm_set, Decision, Observation, Phase, Policy, PolicyError};
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct CeeConfig {
    pub arms: usize,
    pub select: usize,
    pub exploration: f64,
    pub schedule: StepSchedule,
    /// Accept `L <= 2`. The regret analysis needs `L > 2`.
    pub allow_low_exploration: bool,
    /// Whether padded plays in the last initialization batch update the counters.
    pub record_padded: bool,
}

impl CeeConfig {
    pub fn new(arms: usize, select: usize, exploration: f64, schedule: StepSchedule) -> Self {
        CeeConfig {
            arms,
            select,
            exploration,
            schedule,
            allow_low_exploration: false,
            record_padded: true,
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    arms: Vec<usize>,
    slots: u64,
    /// Parallel to `arms`; true for padding plays in the last init batch.
    padded: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct CeePolicy {
    cfg: CeeConfig,
    sums: Vec<f64>,
    plays: Vec<u64>,
    /// Global step index `i` of the next step (1-based).
    step: u64,
    elapsed: u64,
    batches: Vec<(Vec<usize>, Vec<bool>)>,
    next_batch: usize,
    pending: Option<Pending>,
}

fn init_batches(arms: usize, select: usize) -> Vec<(Vec<usize>, Vec<bool>)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < arms {
        let end = (start + select).min(arms);
        let mut batch: Vec<usize> = (start..end).collect();
        let mut padded = vec![false; batch.len()];
        let mut filler = 0;
        while batch.len() < select {
            if !batch.contains(&filler) {
                batch.push(filler);
                padded.push(true);
            }
            filler += 1;
        }
        out.push((batch, padded));
        start = end;
    }
    out
}

impl CeePolicy {
    pub fn new(cfg: CeeConfig) -> Result<Self, PolicyError> {
        if cfg.select == 0 || cfg.select >= cfg.arms {
            return Err(PolicyError::SelectCount {
                select: cfg.select,
                arms: cfg.arms,
            });
        }
        if !cfg.exploration.is_finite() || cfg.exploration <= 0.0 {
            return Err(PolicyError::Parameter(format!(
                "exploration constant must be positive and finite, got {}",
                cfg.exploration
            )));
        }
        if cfg.exploration <= 2.0 && !cfg.allow_low_exploration {
            return Err(PolicyError::ExplorationTooSmall(cfg.exploration));
        }
        cfg.schedule.validate()?;
        let batches = init_batches(cfg.arms, cfg.select);
        Ok(CeePolicy {
            sums: vec![0.0; cfg.arms],
            plays: vec![0; cfg.arms],
            step: 1,
            elapsed: 0,
            next_batch: 0,
            pending: None,
            batches,
            cfg,
        })
    }

    pub fn config(&self) -> &CeeConfig {
        &self.cfg
    }

    pub fn phase(&self) -> Phase {
        if self.next_batch < self.batches.len() {
            Phase::Initialization
        } else {
            Phase::Main
        }
    }

    /// Per-arm sums of step sample means (`X_j`).
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Per-arm step counts (`i_j`).
    pub fn plays(&self) -> &[u64] {
        &self.plays
    }

    /// Global step index `i` of the next step.
    pub fn global_step(&self) -> u64 {
        self.step
    }

    /// Slots elapsed so far (`n`).
    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    pub fn init_steps(&self) -> usize {
        self.batches.len()
    }

    /// Slots consumed by initialization when no step is truncated.
    pub fn init_length(&self) -> u64 {
        self.cfg.schedule.cumulative(self.batches.len() as u64)
    }

    pub fn is_awaiting_report(&self) -> bool {
        self.pending.is_some()
    }

    fn log_elapsed(&self) -> f64 {
        (self.elapsed as f64).ln().max(0.0)
    }

    /// `F(j)` for every arm, evaluated at the current `n`.
    pub fn index_values(&self) -> Result<Vec<f64>, PolicyError> {
        if self.phase() != Phase::Main {
            return Err(PolicyError::NotInMainLoop);
        }
        let ln_n = self.log_elapsed();
        Ok(self
            .sums
            .iter()
            .zip(&self.plays)
            .map(|(&x, &c)| {
                let c = c as f64;
                x / c + (self.cfg.exploration * ln_n / c).sqrt()
            })
            .collect())
    }

    pub fn next_decision(&mut self) -> Result<Decision, PolicyError> {
        if self.pending.is_some() {
            return Err(PolicyError::AwaitingReport);
        }
        let slots = self.cfg.schedule.block(self.step);
        let (arms, padded, phase) = match self.batches.get(self.next_batch) {
            Some((batch, padded)) => (batch.clone(), padded.clone(), Phase::Initialization),
            None => {
                let arms = top_k(&self.index_values()?, self.cfg.select);
                let padded = vec![false; arms.len()];
                (arms, padded, Phase::Main)
            }
        };
        self.pending = Some(Pending {
            arms: arms.clone(),
            slots,
            padded,
        });
        Ok(Decision { arms, slots, phase })
    }

    /// Records a full-length step.
    pub fn report_step(&mut self, arms: &[usize], sample_means: &[f64]) -> Result<(), PolicyError> {
        let slots = self.pending.as_ref().ok_or(PolicyError::NoPendingDecision)?.slots;
        self.report_truncated(arms, sample_means, slots)
    }

    /// Records a step that ran for `slots` (at most the decided duration).
    pub fn report_truncated(&mut self, arms: &[usize], sample_means: &[f64], slots: u64) -> Result<(), PolicyError> {
        let pending = self.pending.as_ref().ok_or(PolicyError::NoPendingDecision)?;
        if arms.len() != sample_means.len() || !same_arm_set(&pending.arms, arms) {
            return Err(PolicyError::ArmMismatch {
                decided: pending.arms.clone(),
                reported: arms.to_vec(),
            });
        }
        if slots == 0 || slots > pending.slots {
            return Err(PolicyError::SlotCount {
                decided: pending.slots,
                reported: slots,
            });
        }
        if let Some((&arm, &value)) = arms.iter().zip(sample_means).find(|(_, m)| !(0.0..=1.0).contains(*m)) {
            return Err(PolicyError::SampleMean { arm, value });
        }
        let pending = self.pending.take().unwrap();
        for (&arm, &mean) in arms.iter().zip(sample_means) {
            let pos = pending.arms.iter().position(|&a| a == arm).unwrap();
            if pending.padded[pos] && !self.cfg.record_padded {
                continue;
            }
            self.sums[arm] += mean;
            self.plays[arm] += 1;
        }
        if self.phase() == Phase::Initialization {
            self.next_batch += 1;
        }
        self.step += 1;
        self.elapsed += slots;
        Ok(())
    }
}

/// Indices of the `k` largest values; ties resolved towards the lower index.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

impl Policy for CeePolicy {
    fn label(&self) -> &str {
        "cee"
    }

    fn next_decision(&mut self) -> Result<Decision, PolicyError> {
        CeePolicy::next_decision(self)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<(), PolicyError> {
        check_observation(obs)?;
        let means: Vec<f64> = obs.reward_sums.iter().map(|s| s / obs.slots as f64).collect();
        self.report_truncated(obs.arms, &means, obs.slots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(n: usize, k: usize, l: f64, b: u64) -> CeePolicy {
        CeePolicy::new(CeeConfig::new(n, k, l, StepSchedule::constant(b))).unwrap()
    }

    #[test]
    fn constructor_checks() {
        assert!(CeePolicy::new(CeeConfig::new(5, 1, 2.1, StepSchedule::constant(49))).is_ok());
        assert!(CeePolicy::new(CeeConfig::new(2, 1, 3.0, StepSchedule::Logarithmic)).is_ok());
        assert_eq!(
            CeePolicy::new(CeeConfig::new(3, 3, 2.1, StepSchedule::constant(1))).unwrap_err(),
            PolicyError::SelectCount { select: 3, arms: 3 }
        );
        assert_eq!(
            CeePolicy::new(CeeConfig::new(3, 1, 2.0, StepSchedule::constant(1))).unwrap_err(),
            PolicyError::ExplorationTooSmall(2.0)
        );
        let mut cfg = CeeConfig::new(3, 1, 2.0, StepSchedule::constant(1));
        cfg.allow_low_exploration = true;
        assert!(CeePolicy::new(cfg).is_ok());
        assert!(matches!(
            CeePolicy::new(CeeConfig::new(3, 1, 2.5, StepSchedule::constant(0))),
            Err(PolicyError::Schedule(_))
        ));
    }

    #[test]
    fn init_then_sample_mean_order() {
        let mut p = policy(2, 1, 2.1, 10);
        for (arm, mean) in [(0, 0.9), (1, 0.1)] {
            let d = p.next_decision().unwrap();
            assert_eq!(d.arms, vec![arm]);
            assert_eq!(d.phase, Phase::Initialization);
            p.report_step(&d.arms, &[mean]).unwrap();
        }
        assert_eq!(p.elapsed(), 20);
        let d = p.next_decision().unwrap();
        assert_eq!((d.arms, d.phase), (vec![0], Phase::Main));
    }

    #[test]
    fn handshake_misuse() {
        let mut p = policy(3, 1, 2.1, 5);
        assert_eq!(p.report_step(&[0], &[0.5]), Err(PolicyError::NoPendingDecision));
        let d = p.next_decision().unwrap();
        assert_eq!(p.next_decision(), Err(PolicyError::AwaitingReport));
        assert!(matches!(
            p.report_step(&[1], &[0.5]),
            Err(PolicyError::ArmMismatch { .. })
        ));
        assert!(matches!(
            p.report_step(&d.arms, &[1.5]),
            Err(PolicyError::SampleMean { .. })
        ));
        assert!(matches!(
            p.report_truncated(&d.arms, &[0.5], 6),
            Err(PolicyError::SlotCount { .. })
        ));
        p.report_truncated(&d.arms, &[0.5], 3).unwrap();
        assert_eq!(p.elapsed(), 3);
        assert_eq!(p.index_values(), Err(PolicyError::NotInMainLoop));
    }

    #[test]
    fn additive_update() {
        let mut p = policy(4, 1, 2.1, 1);
        for (arm, m) in [(0, 0.2), (1, 0.3), (2, 0.4), (3, 0.5)] {
            let d = p.next_decision().unwrap();
            assert_eq!(d.arms, vec![arm]);
            p.report_step(&d.arms, &[m]).unwrap();
        }
        p.sums[2] = 1.2;
        p.plays[2] = 3;
        p.pending = Some(Pending {
            arms: vec![2],
            slots: 1,
            padded: vec![false],
        });
        p.report_step(&[2], &[0.3]).unwrap();
        assert!((p.sums()[2] - 1.5).abs() < 1e-15);
        assert_eq!(p.plays()[2], 4);
    }

    #[test]
    fn index_arithmetic() {
        let mut p = policy(2, 1, 2.1, 1);
        p.next_batch = 2;
        p.sums = vec![2.0, 2.0];
        p.plays = vec![4, 4];
        p.elapsed = 0; // guard: ln 0 treated as 0
        assert_eq!(p.index_values().unwrap(), vec![0.5, 0.5]);
        p.elapsed = 1;
        assert_eq!(p.index_values().unwrap(), vec![0.5, 0.5]);
        // n = 3: compare against direct arithmetic.
        p.elapsed = 3;
        let f = p.index_values().unwrap()[0];
        assert!((f - (0.5 + (2.1 * 3f64.ln() / 4.0).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn equal_arms_pick_lowest_ids() {
        assert_eq!(top_k(&[1.0, 1.0, 1.0, 1.0], 2), vec![0, 1]);
        assert_eq!(top_k(&[0.1, 0.9, 0.9, 0.5], 2), vec![1, 2]);
        assert_eq!(top_k(&[0.1, 0.2, 0.9, 0.5], 1), vec![2]);
    }

    #[test]
    fn padded_batches() {
        let b = init_batches(5, 2);
        assert_eq!(b.len(), 3);
        assert_eq!(b[2], (vec![4, 0], vec![false, true]));
        let b = init_batches(5, 3);
        assert_eq!(b[1], (vec![3, 4, 0], vec![false, false, true]));
        let b = init_batches(4, 2);
        assert!(b.iter().all(|(_, pad)| pad.iter().all(|p| !p)));
    }

    #[test]
    fn padded_plays_optionally_discarded() {
        let mut cfg = CeeConfig::new(3, 2, 2.1, StepSchedule::constant(2));
        cfg.record_padded = false;
        let mut p = CeePolicy::new(cfg).unwrap();
        for _ in 0..2 {
            let d = p.next_decision().unwrap();
            p.report_step(&d.arms, &vec![0.5; d.arms.len()]).unwrap();
        }
        assert_eq!(p.plays(), &[1, 1, 1]);
        assert_eq!(p.phase(), Phase::Main);
    }

    #[test]
    fn k2_report_touches_only_played() {
        let mut p = policy(5, 2, 2.1, 3);
        while p.phase() == Phase::Initialization {
            let d = p.next_decision().unwrap();
            p.report_step(&d.arms, &vec![0.5; 2]).unwrap();
        }
        let before = p.plays().to_vec();
        p.pending = Some(Pending {
            arms: vec![1, 4],
            slots: 3,
            padded: vec![false, false],
        });
        p.report_step(&[4, 1], &[0.2, 0.7]).unwrap();
        for j in 0..5 {
            let expect = before[j] + u64::from(j == 1 || j == 4);
            assert_eq!(p.plays()[j], expect);
        }
    }
}
