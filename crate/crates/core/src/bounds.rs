//! Closed-form quantities of the CEE regret analysis.
//!
//! Arms are referred to by their rank `1..=N` in decreasing order of
//! stationary mean reward (`mu(1) > mu(2) > ...`). Ceilings are applied only
//! where the bound expressions themselves take one.
//!
//! `c = C_P / B_q` below is the drift allowance of a step of length `B_q`.

use crate::magnitude::Magnitude;
use crate::markov::RewardedMarkovChain;
use crate::schedule::StepSchedule;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("need at least two arms")]
    TooFewArms,
    #[error("need 1 <= K < N, got K = {select}, N = {arms}")]
    SelectCount { select: usize, arms: usize },
    #[error("arms {first} and {second} have equal stationary mean {mu}; strict ordering required")]
    Tie { first: usize, second: usize, mu: f64 },
    #[error("exploration constant L = {0} must exceed 2")]
    ExplorationTooSmall(f64),
    #[error("C_P must be positive and finite, got {0}")]
    ChainConstant(f64),
    #[error("schedule never reaches the required step length {required} (ceil of {bound})")]
    Infeasible { bound: f64, required: u64 },
    #[error("corollary needs a constant schedule with B_1 >= {required} (ceil of {bound}), got B_1 = {first}")]
    CorollaryInfeasible { bound: f64, required: u64, first: u64 },
    #[error("corollary bounds need a constant schedule")]
    NotConstant,
    #[error("rank {rank} is not a suboptimal arm (K = {select}, N = {arms})")]
    NotSuboptimal { rank: usize, select: usize, arms: usize },
    #[error("reference rank {rank} must lie in 1..={select}")]
    ReferenceRank { rank: usize, select: usize },
    #[error("mu({rank}) = {mu} <= C_P/B_q = {drift}; ratio undefined")]
    RatioUndefined { rank: usize, mu: f64, drift: f64 },
    #[error("gap mu({reference}) - mu({rank}) = {gap} <= 2 C_P/B_q = {twice_drift}; bound vacuous")]
    GapTooSmall {
        reference: usize,
        rank: usize,
        gap: f64,
        twice_drift: f64,
    },
    #[error("{0} only applies to single-arm selection (K = 1)")]
    VariantMismatch(BoundVariant),
    #[error("{name} = {value} does not fit an integer")]
    Overflow { name: &'static str, value: f64 },
    #[error("n must be at least {min}, got {n}")]
    Horizon { n: u64, min: u64 },
}

/// Everything the analysis needs to know about a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTruth {
    /// Means sorted in decreasing order.
    mus: Vec<f64>,
    /// `order[r - 1]` is the original arm index of rank `r`.
    order: Vec<usize>,
    pub chain_constant: f64,
    pub select: usize,
    pub exploration: f64,
    pub schedule: StepSchedule,
}

impl ScenarioTruth {
    pub fn new(
        mus: &[f64],
        chain_constant: f64,
        select: usize,
        exploration: f64,
        schedule: StepSchedule,
    ) -> Result<Self, BoundsError> {
        if mus.len() < 2 {
            return Err(BoundsError::TooFewArms);
        }
        if select == 0 || select >= mus.len() {
            return Err(BoundsError::SelectCount {
                select,
                arms: mus.len(),
            });
        }
        if !(exploration > 2.0) || !exploration.is_finite() {
            return Err(BoundsError::ExplorationTooSmall(exploration));
        }
        if !(chain_constant > 0.0) || !chain_constant.is_finite() {
            return Err(BoundsError::ChainConstant(chain_constant));
        }
        let mut order: Vec<usize> = (0..mus.len()).collect();
        order.sort_by(|&a, &b| mus[b].total_cmp(&mus[a]).then(a.cmp(&b)));
        for w in order.windows(2) {
            if mus[w[0]] == mus[w[1]] {
                return Err(BoundsError::Tie {
                    first: w[0].min(w[1]),
                    second: w[0].max(w[1]),
                    mu: mus[w[0]],
                });
            }
        }
        Ok(ScenarioTruth {
            mus: order.iter().map(|&i| mus[i]).collect(),
            order,
            chain_constant,
            select,
            exploration,
            schedule,
        })
    }

    pub fn from_chains(
        chains: &[RewardedMarkovChain],
        select: usize,
        exploration: f64,
        schedule: StepSchedule,
    ) -> Result<Self, BoundsError> {
        let mus: Vec<f64> = chains.iter().map(|c| c.mu()).collect();
        let cp = crate::markov::chain_constant(chains).map_err(|_| BoundsError::TooFewArms)?;
        Self::new(&mus, cp, select, exploration, schedule)
    }

    pub fn arms(&self) -> usize {
        self.mus.len()
    }

    /// `mu(rank)`, 1-based.
    pub fn mu(&self, rank: usize) -> f64 {
        self.mus[rank - 1]
    }

    pub fn sorted_mus(&self) -> &[f64] {
        &self.mus
    }

    /// Original arm index of each rank.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Arm indices of the `K` best arms.
    pub fn top_arms(&self) -> Vec<usize> {
        self.order[..self.select].to_vec()
    }

    /// Per-slot reward of the genie that always plays the `K` best arms.
    pub fn genie_rate(&self) -> f64 {
        self.mus[..self.select].iter().sum()
    }

    fn with_select(&self, select: usize) -> ScenarioTruth {
        ScenarioTruth { select, ..self.clone() }
    }
}

/// `G(n)`: the step length in force at slot `n`, i.e. `B_I` for the least `I`
/// with `B_1 + ... + B_I >= n`.
pub fn g_of_n(schedule: &StepSchedule, n: u64) -> u64 {
    let n = n.max(1);
    if let StepSchedule::Constant { value } = schedule {
        return *value;
    }
    let mut total = 0u64;
    let mut i = 1u64;
    loop {
        let b = schedule.block(i);
        total += b;
        if total >= n {
            return b;
        }
        i += 1;
    }
}

/// `max{2 C_P / (mu(K) - mu(K+1)), C_P / mu(l) for all l}` before the ceiling.
pub fn step_requirement(truth: &ScenarioTruth) -> f64 {
    let k = truth.select;
    let cp = truth.chain_constant;
    let gap = truth.mu(k) - truth.mu(k + 1);
    truth.mus.iter().map(|&m| cp / m).fold(2.0 * cp / gap, f64::max)
}

/// A schedule index together with its step length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepIndex {
    pub index: u64,
    pub block: u64,
}

fn required_block(bound: f64) -> Result<u64, BoundsError> {
    let c = bound.ceil();
    if c >= u64::MAX as f64 {
        return Err(BoundsError::Overflow {
            name: "required step length",
            value: c,
        });
    }
    Ok(c as u64)
}

fn smallest_index(truth: &ScenarioTruth) -> Result<StepIndex, BoundsError> {
    let bound = step_requirement(truth);
    let required = required_block(bound)?;
    let schedule = &truth.schedule;
    let search_limit = schedule.constant_from();
    let mut i = 1u64;
    loop {
        let b = schedule.block(i);
        if b >= required {
            return Ok(StepIndex { index: i, block: b });
        }
        if search_limit.is_some_and(|k| i >= k) {
            return Err(BoundsError::Infeasible { bound, required });
        }
        i += 1;
    }
}

/// `q`: smallest index whose step length clears the single-arm requirement.
pub fn q_index(truth: &ScenarioTruth) -> Result<StepIndex, BoundsError> {
    smallest_index(&truth.with_select(1))
}

/// `q'`: as [`q_index`] with the gap between ranks `K` and `K + 1`.
pub fn q_prime_index(truth: &ScenarioTruth) -> Result<StepIndex, BoundsError> {
    smallest_index(truth)
}

/// Which version of the analysis a constant set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Arbitrary schedule; `q` and `B_q` come from the schedule.
    Theorem,
    /// Constant schedule; everything evaluated at `q = 1`, `B_q = B_1`.
    Corollary,
}

fn regime_index(truth: &ScenarioTruth, regime: Regime) -> Result<StepIndex, BoundsError> {
    match regime {
        Regime::Theorem => smallest_index(truth),
        Regime::Corollary => {
            if truth.schedule.constant_from() != Some(1) {
                return Err(BoundsError::NotConstant);
            }
            let bound = step_requirement(truth);
            let required = required_block(bound)?;
            let first = truth.schedule.block(1);
            if first < required {
                return Err(BoundsError::CorollaryInfeasible { bound, required, first });
            }
            Ok(StepIndex { index: 1, block: first })
        }
    }
}

fn confidence_root_gap(l: f64) -> f64 {
    l.sqrt() - 2f64.sqrt()
}

/// `1 + ceil(max{q, [w / (sqrt L - sqrt 2)]^2})`.
fn alpha_of(q: u64, w: f64, l: f64) -> Result<u64, BoundsError> {
    let t = (w / confidence_root_gap(l)).powi(2);
    let v = 1.0 + (q as f64).max(t).ceil();
    if v >= 2f64.powi(53) {
        return Err(BoundsError::Overflow {
            name: "alpha",
            value: v,
        });
    }
    Ok(v as u64)
}

/// `(N-1) e^{4a/L}` as a magnitude.
fn exp_term(arms: usize, a: u64, l: f64) -> Magnitude {
    Magnitude::from_ln(((arms - 1) as f64).ln() + 4.0 * a as f64 / l)
}

/// Single-arm thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleThresholds {
    pub q: StepIndex,
    pub drift: f64,
    pub w_star: f64,
    /// `w^i` for ranks `i = 2..=N` (index 0 is rank 2).
    pub w: Vec<f64>,
    pub alpha_star: u64,
    /// `alpha^i` for ranks `i = 2..=N`.
    pub alpha: Vec<u64>,
    pub gamma: Magnitude,
}

/// Multi-arm thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiThresholds {
    pub q_prime: StepIndex,
    pub drift: f64,
    /// `m_j^*` for ranks `j = 1..=K`.
    pub m_star: Vec<f64>,
    /// `m^i` for ranks `i = K+1..=N`.
    pub m: Vec<f64>,
    pub beta_star: Vec<u64>,
    pub beta: Vec<u64>,
    pub gamma_prime: Magnitude,
}

fn lower_weight(q: u64, mu: f64, drift: f64) -> f64 {
    q as f64 * (mu - drift)
}

fn upper_weight(q: u64, mu: f64, drift: f64) -> f64 {
    q as f64 * (mu - drift) / (mu + drift) * (mu + drift - 1.0)
}

fn single_at(truth: &ScenarioTruth, q: StepIndex) -> Result<SingleThresholds, BoundsError> {
    let n = truth.arms();
    let l = truth.exploration;
    let drift = truth.chain_constant / q.block as f64;
    let w_star = lower_weight(q.index, truth.mu(1), drift);
    let w: Vec<f64> = (2..=n).map(|i| upper_weight(q.index, truth.mu(i), drift)).collect();
    let alpha_star = alpha_of(q.index, w_star, l)?;
    let alpha = w
        .iter()
        .map(|&wi| alpha_of(q.index, wi, l))
        .collect::<Result<Vec<_>, _>>()?;
    let term = |a: u64| {
        let lin = Magnitude::new(((n - 1) * (4 * a as usize + 1)) as f64 + a as f64);
        let ex = exp_term(n, a, l).add_f64(a as f64);
        lin.max(ex)
    };
    let gamma = std::iter::once(alpha_star)
        .chain(alpha.iter().copied())
        .map(term)
        .fold(Magnitude::ZERO, Magnitude::max)
        .ceil();
    Ok(SingleThresholds {
        q,
        drift,
        w_star,
        w,
        alpha_star,
        alpha,
        gamma,
    })
}

fn multi_at(truth: &ScenarioTruth, q: StepIndex) -> Result<MultiThresholds, BoundsError> {
    let n = truth.arms();
    let k = truth.select;
    let l = truth.exploration;
    let drift = truth.chain_constant / q.block as f64;
    let m_star: Vec<f64> = (1..=k).map(|j| lower_weight(q.index, truth.mu(j), drift)).collect();
    let m: Vec<f64> = (k + 1..=n).map(|i| upper_weight(q.index, truth.mu(i), drift)).collect();
    let beta_star = m_star
        .iter()
        .map(|&x| alpha_of(q.index, x, l))
        .collect::<Result<Vec<_>, _>>()?;
    let beta = m
        .iter()
        .map(|&x| alpha_of(q.index, x, l))
        .collect::<Result<Vec<_>, _>>()?;
    let term = |b: u64| {
        let lin = Magnitude::new(((n - 1) * (5 * b as usize + 1)) as f64 + b as f64);
        let ex = exp_term(n, b, l)
            .add(Magnitude::new(((n - 1) as f64) * b as f64))
            .add_f64(b as f64);
        lin.max(ex)
    };
    let gamma_prime = beta_star
        .iter()
        .chain(&beta)
        .map(|&b| term(b))
        .fold(Magnitude::ZERO, Magnitude::max)
        .ceil();
    Ok(MultiThresholds {
        q_prime: q,
        drift,
        m_star,
        m,
        beta_star,
        beta,
        gamma_prime,
    })
}

/// Single-arm thresholds (`K = 1` analysis) for the schedule's own `q`.
pub fn thresholds(truth: &ScenarioTruth) -> Result<SingleThresholds, BoundsError> {
    single_at(truth, q_index(truth)?)
}

/// Multi-arm thresholds at the scenario's `K`.
pub fn multi_thresholds(truth: &ScenarioTruth) -> Result<MultiThresholds, BoundsError> {
    multi_at(truth, q_prime_index(truth)?)
}

/// `L (1 + (mu_j + c)/(mu_j - c))^2 / (mu_i - mu_j - 2c)^2`, the per-`ln n`
/// coefficient inside `lambda`.
fn lambda_coefficient(truth: &ScenarioTruth, drift: f64, j: usize, i: usize) -> Result<f64, BoundsError> {
    let mu_j = truth.mu(j);
    if mu_j <= drift {
        return Err(BoundsError::RatioUndefined {
            rank: j,
            mu: mu_j,
            drift,
        });
    }
    let gap = truth.mu(i) - mu_j;
    if gap <= 2.0 * drift {
        return Err(BoundsError::GapTooSmall {
            reference: i,
            rank: j,
            gap,
            twice_drift: 2.0 * drift,
        });
    }
    let ratio = (mu_j + drift) / (mu_j - drift);
    Ok(truth.exploration * (1.0 + ratio).powi(2) / (gap - 2.0 * drift).powi(2))
}

/// `lambda` before the ceiling; see [`lambda`].
pub fn lambda_unrounded(truth: &ScenarioTruth, n: u64, j: usize, i: usize) -> Result<f64, BoundsError> {
    let (k, arms) = (truth.select, truth.arms());
    if j <= k || j > arms {
        return Err(BoundsError::NotSuboptimal {
            rank: j,
            select: k,
            arms,
        });
    }
    if i == 0 || i > k {
        return Err(BoundsError::ReferenceRank { rank: i, select: k });
    }
    if n < 2 {
        return Err(BoundsError::Horizon { n, min: 2 });
    }
    let q = q_prime_index(truth)?;
    let drift = truth.chain_constant / q.block as f64;
    Ok(lambda_coefficient(truth, drift, j, i)? * (n as f64).ln())
}

/// `lambda_{i,j}(n)`: number of plays after which suboptimal rank `j` can no
/// longer be confused with rank `i` (i = 1 for `K = 1`, i = K otherwise).
/// Uses `B_{q'}` (equal to `B_q` when `K = 1`).
pub fn lambda(truth: &ScenarioTruth, n: u64, j: usize, i: usize) -> Result<u64, BoundsError> {
    let v = lambda_unrounded(truth, n, j, i)?.ceil();
    if v >= 2f64.powi(53) {
        return Err(BoundsError::Overflow {
            name: "lambda",
            value: v,
        });
    }
    Ok(v as u64)
}

/// `Z_a G(n) ln n + Z_b ln n + Z_c G(n) + Z_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCoefficients {
    pub log_step: f64,
    pub log: f64,
    pub step: Magnitude,
    pub constant: Magnitude,
}

impl RegretCoefficients {
    pub fn evaluate(&self, g: u64, n: u64) -> Magnitude {
        let ln_n = (n.max(1) as f64).ln();
        let g = g as f64;
        Magnitude::new(self.log_step * g * ln_n + self.log * ln_n)
            .add(self.step.scale(g))
            .add(self.constant)
    }
}

/// Single-arm constants (`Z1..Z4`, or `Z1'..Z4'` in the corollary regime).
#[derive(Debug, Clone, PartialEq)]
pub struct SingleArmConstants {
    pub regime: Regime,
    pub thresholds: SingleThresholds,
    pub z: RegretCoefficients,
}

/// Multi-arm constants (`Z5..Z8`, or `Z5'..Z8'`).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiArmConstants {
    pub regime: Regime,
    pub thresholds: MultiThresholds,
    pub z: RegretCoefficients,
}

const PI_SQ_OVER_3: f64 = PI * PI / 3.0;

pub fn single_arm_constants(truth: &ScenarioTruth, regime: Regime) -> Result<SingleArmConstants, BoundsError> {
    let t1 = truth.with_select(1);
    let q = regime_index(&t1, regime)?;
    let th = single_at(&t1, q)?;
    let n = t1.arms();
    let cp = t1.chain_constant;
    let mut ceil_sum = 0.0;
    let mut z1 = 0.0;
    let mut gap_sum = 0.0;
    for j in 2..=n {
        let c = lambda_coefficient(&t1, th.drift, j, 1)?.ceil();
        let gap = t1.mu(1) - t1.mu(j);
        z1 += gap * c;
        ceil_sum += c;
        gap_sum += gap;
    }
    let gamma_pi = th.gamma.add_f64(PI_SQ_OVER_3);
    let z = RegretCoefficients {
        log_step: z1,
        log: 3.0 * cp * ceil_sum,
        step: gamma_pi.scale(gap_sum).add_f64(1.0),
        constant: gamma_pi.scale(3.0 * (n - 1) as f64 * cp),
    };
    Ok(SingleArmConstants {
        regime,
        thresholds: th,
        z,
    })
}

pub fn multi_arm_constants(truth: &ScenarioTruth, regime: Regime) -> Result<MultiArmConstants, BoundsError> {
    let q = regime_index(truth, regime)?;
    let th = multi_at(truth, q)?;
    let n = truth.arms();
    let k = truth.select;
    let cp = truth.chain_constant;
    let mut ceil_sum = 0.0;
    let mut z5 = 0.0;
    let mut gap_sum = 0.0;
    for j in k + 1..=n {
        let c = lambda_coefficient(truth, th.drift, j, k)?.ceil();
        z5 += (truth.mu(1) - truth.mu(j)) * c;
        ceil_sum += c;
        gap_sum += truth.mu(k) - truth.mu(j);
    }
    let gamma_pi = th.gamma_prime.add_f64(PI_SQ_OVER_3);
    let z = RegretCoefficients {
        log_step: z5,
        log: 3.0 * cp * ceil_sum,
        step: gamma_pi.scale(gap_sum).add_f64(k as f64),
        constant: gamma_pi.scale(3.0 * (n - k) as f64 * cp),
    };
    Ok(MultiArmConstants {
        regime,
        thresholds: th,
        z,
    })
}

/// The full constant table for a scenario. The single-arm block is present
/// only when `K = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub requirement: f64,
    pub single: Option<SingleArmConstants>,
    pub multi: MultiArmConstants,
}

pub fn bound_constants(truth: &ScenarioTruth, regime: Regime) -> Result<BoundConstants, BoundsError> {
    let single = if truth.select == 1 {
        Some(single_arm_constants(truth, regime)?)
    } else {
        None
    };
    Ok(BoundConstants {
        requirement: step_requirement(truth),
        single,
        multi: multi_arm_constants(truth, regime)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Theorem1,
    Corollary1,
    Theorem2,
    Corollary2,
}

impl std::fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundVariant::Theorem1 => "single-arm bound (general schedule)",
            BoundVariant::Corollary1 => "single-arm bound (constant schedule)",
            BoundVariant::Theorem2 => "multi-arm bound (general schedule)",
            BoundVariant::Corollary2 => "multi-arm bound (constant schedule)",
        })
    }
}

/// Upper bound on the expected regret after `n` slots.
pub fn regret_bound(truth: &ScenarioTruth, variant: BoundVariant, n: u64) -> Result<Magnitude, BoundsError> {
    Ok(RegretCurve::new(truth, variant)?.at(n))
}

/// Precomputed constants for evaluating a bound at many `n`.
#[derive(Debug, Clone)]
pub struct RegretCurve {
    schedule: StepSchedule,
    regime: Regime,
    z: RegretCoefficients,
}

impl RegretCurve {
    pub fn new(truth: &ScenarioTruth, variant: BoundVariant) -> Result<Self, BoundsError> {
        let (regime, z) = match variant {
            BoundVariant::Theorem1 | BoundVariant::Corollary1 => {
                if truth.select != 1 {
                    return Err(BoundsError::VariantMismatch(variant));
                }
                let regime = if variant == BoundVariant::Theorem1 {
                    Regime::Theorem
                } else {
                    Regime::Corollary
                };
                (regime, single_arm_constants(truth, regime)?.z)
            }
            BoundVariant::Theorem2 | BoundVariant::Corollary2 => {
                let regime = if variant == BoundVariant::Theorem2 {
                    Regime::Theorem
                } else {
                    Regime::Corollary
                };
                (regime, multi_arm_constants(truth, regime)?.z)
            }
        };
        Ok(RegretCurve {
            schedule: truth.schedule.clone(),
            regime,
            z,
        })
    }

    pub fn coefficients(&self) -> &RegretCoefficients {
        &self.z
    }

    pub fn at(&self, n: u64) -> Magnitude {
        let g = match self.regime {
            Regime::Theorem => g_of_n(&self.schedule, n),
            Regime::Corollary => self.schedule.block(1),
        };
        self.z.evaluate(g, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MUS: [f64; 5] = [0.325, 0.58, 0.85, 0.4, 0.25];

    fn scenario(select: usize, b: u64) -> ScenarioTruth {
        ScenarioTruth::new(&MUS, 6.6, select, 2.1, StepSchedule::constant(b)).unwrap()
    }

    #[test]
    fn ordering_and_ties() {
        let t = scenario(1, 49);
        assert_eq!(t.order(), &[2, 1, 3, 0, 4]);
        assert_eq!(t.top_arms(), vec![2]);
        assert!((t.genie_rate() - 0.85).abs() < 1e-15);
        let err = ScenarioTruth::new(&[0.5, 0.5, 0.1], 2.0, 1, 2.1, StepSchedule::constant(5)).unwrap_err();
        assert!(matches!(
            err,
            BoundsError::Tie {
                first: 0,
                second: 1,
                ..
            }
        ));
        assert!(matches!(
            ScenarioTruth::new(&MUS, 6.6, 5, 2.1, StepSchedule::constant(5)),
            Err(BoundsError::SelectCount { .. })
        ));
        assert!(matches!(
            ScenarioTruth::new(&MUS, 6.6, 1, 2.0, StepSchedule::constant(5)),
            Err(BoundsError::ExplorationTooSmall(_))
        ));
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_of_n(&StepSchedule::constant(49), 12345), 49);
        let ar = StepSchedule::Arithmetic { start: 1, increment: 1 };
        assert_eq!(g_of_n(&ar, 4), 3);
        assert_eq!(g_of_n(&ar, 1), 1);
        assert_eq!(g_of_n(&ar, 6), 3);
        assert_eq!(g_of_n(&ar, 7), 4);
    }

    #[test]
    fn q_examples() {
        let t = scenario(1, 49);
        assert!((step_requirement(&t) - 2.0 * 6.6 / 0.27).abs() < 1e-12);
        assert_eq!(q_index(&t).unwrap(), StepIndex { index: 1, block: 49 });
        let t48 = scenario(1, 48);
        assert_eq!(
            q_index(&t48).unwrap_err(),
            BoundsError::Infeasible {
                bound: step_requirement(&t48),
                required: 49
            }
        );
        let mut t2 = t.clone();
        t2.schedule = StepSchedule::custom(vec![10, 20, 30, 50], StepSchedule::constant(50));
        assert_eq!(q_index(&t2).unwrap(), StepIndex { index: 4, block: 50 });
        t2.schedule = StepSchedule::Arithmetic {
            start: 10,
            increment: 10,
        };
        assert_eq!(q_index(&t2).unwrap(), StepIndex { index: 5, block: 50 });
    }

    #[test]
    fn w_star_scenario_value() {
        let th = thresholds(&scenario(1, 49)).unwrap();
        assert!((th.w_star - (0.85 - 6.6 / 49.0)).abs() < 1e-15);
        assert!((th.w_star - 0.71531).abs() < 1e-5);
        assert!(th.alpha_star > th.q.index);
        assert!(th.alpha.iter().all(|&a| a > th.q.index));
    }

    #[test]
    fn alpha_limit_large_exploration() {
        let t = ScenarioTruth::new(&MUS, 6.6, 1, 1e12, StepSchedule::constant(49)).unwrap();
        let th = thresholds(&t).unwrap();
        assert_eq!(th.alpha_star, 2);
        assert!(th.alpha.iter().all(|&a| a == 2));
    }

    #[test]
    fn lambda_small_drift_limit() {
        // Huge B makes C_P/B_q negligible: lambda -> ceil(4 L ln n / gap^2).
        let t = scenario(1, 1_000_000_000_000);
        let n = 1_000_000u64;
        let expect = 4.0 * 2.1 * (n as f64).ln() / (0.85f64 - 0.58).powi(2);
        let got = lambda_unrounded(&t, n, 2, 1).unwrap();
        assert!((got - expect).abs() / expect < 1e-9);
    }

    #[test]
    fn lambda_errors() {
        let t = scenario(1, 49);
        assert!(matches!(lambda(&t, 100, 1, 1), Err(BoundsError::NotSuboptimal { .. })));
        assert!(matches!(lambda(&t, 100, 2, 2), Err(BoundsError::ReferenceRank { .. })));
        assert!(matches!(lambda(&t, 1, 2, 1), Err(BoundsError::Horizon { .. })));
        // A valid q' rules these out, so probe the coefficient directly.
        let t = ScenarioTruth::new(&[0.9, 0.5], 1.0, 1, 2.1, StepSchedule::constant(30)).unwrap();
        assert!(matches!(
            lambda_coefficient(&t, 0.25, 2, 1),
            Err(BoundsError::GapTooSmall { .. })
        ));
        assert!(matches!(
            lambda_coefficient(&t, 0.6, 2, 1),
            Err(BoundsError::RatioUndefined { .. })
        ));
    }

    #[test]
    fn two_arm_sums_collapse() {
        let t = ScenarioTruth::new(&[0.9, 0.5], 2.2, 1, 3.0, StepSchedule::constant(20)).unwrap();
        let c = single_arm_constants(&t, Regime::Corollary).unwrap();
        let coef = lambda_coefficient(&t, 2.2 / 20.0, 2, 1).unwrap().ceil();
        assert_eq!(c.z.log_step, 0.4 * coef);
        assert_eq!(c.z.log, 3.0 * 2.2 * coef);
    }

    #[test]
    fn corollary_matches_theorem_for_constant_schedule() {
        let t = scenario(1, 49);
        let a = single_arm_constants(&t, Regime::Theorem).unwrap();
        let b = single_arm_constants(&t, Regime::Corollary).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(a.thresholds, b.thresholds);
    }

    #[test]
    fn corollary_infeasible_reported() {
        let t = scenario(1, 40);
        assert!(matches!(
            regret_bound(&t, BoundVariant::Corollary1, 1000),
            Err(BoundsError::CorollaryInfeasible {
                required: 49,
                first: 40,
                ..
            })
        ));
        assert!(matches!(
            regret_bound(&scenario(2, 80), BoundVariant::Theorem1, 1000),
            Err(BoundsError::VariantMismatch(_))
        ));
    }
}
