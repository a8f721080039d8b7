//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! select = 1            # K, arms played per slot
//! horizon = 1000000
//! runs = 20
//! seed = 2024
//! # sample_points = [100, 1000]   # default: 10^2, 10^2.5, ..., horizon
//!
//! [[arm]]
//! name = "ch.1"          # optional
//! p01 = 0.3              # two-state form: state 0 is bad, state 1 good
//! p10 = 0.9
//! rewards = [0.1, 1.0]
//!
//! [[arm]]
//! active = [[0.5, 0.5], [0.2, 0.8]]   # general form
//! passive = [[1.0, 0.0], [0.0, 1.0]]  # optional, defaults to `active`
//! rewards = [0.2, 0.9]
//! initial_state = 1                  # or "stationary" (default)
//!
//! [policy.cee]
//! exploration = 2.1
//! schedule = { kind = "constant", value = 49 }
//!
//! [policy.rca]
//! exploration = 415.0
//!
//! [policy.rucb]
//! exploration = 3126.0
//! epoch_parameter = 171520.0
//! ```
//!
//! Schedules are `constant {value}`, `logarithmic`,
//! `arithmetic {start, increment}` or `custom {prefix, tail}` where `tail`
//! is another schedule.

use crate::bounds::{step_requirement, BoundsError, ScenarioTruth};
use crate::markov::{ChainError, InitialState, RewardedMarkovChain};
use crate::schedule::StepSchedule;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// The bundled five-channel scenario (`scenarios/scenario_s.toml`).
pub const SCENARIO_S: &str = include_str!("../../../../scenarios/scenario_s.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("arm[{arm}]: {source}")]
    Chain { arm: usize, source: ChainError },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    select: usize,
    horizon: u64,
    runs: u64,
    seed: u64,
    sample_points: Option<Vec<u64>>,
    arm: Vec<RawArm>,
    #[serde(default)]
    policy: RawPolicies,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Word(String),
    Index(usize),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    name: Option<String>,
    p01: Option<f64>,
    p10: Option<f64>,
    active: Option<Vec<Vec<f64>>>,
    passive: Option<Vec<Vec<f64>>>,
    rewards: Vec<f64>,
    initial_state: Option<RawInitial>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicies {
    cee: Option<CeeParams>,
    rca: Option<RcaParams>,
    rucb: Option<RucbParams>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeeParams {
    pub exploration: f64,
    pub schedule: StepSchedule,
    #[serde(default)]
    pub allow_low_exploration: bool,
    #[serde(default = "default_true")]
    pub record_padded: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcaParams {
    pub exploration: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RucbParams {
    pub exploration: f64,
    pub epoch_parameter: f64,
}

#[derive(Debug, Clone)]
pub struct ArmSpec {
    pub name: String,
    pub chain: RewardedMarkovChain,
    pub initial: InitialState,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub arms: Vec<ArmSpec>,
    pub select: usize,
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub sample_points: Vec<u64>,
    /// False when the sample points came from the default grid.
    pub explicit_sample_points: bool,
    pub cee: Option<CeeParams>,
    pub rca: Option<RcaParams>,
    pub rucb: Option<RucbParams>,
    /// Sum of the `K` largest stationary means.
    pub genie_rate: f64,
    /// Arm indices of the `K` largest means (lowest index wins ties).
    pub top_arms: Vec<usize>,
    /// Non-fatal findings: chain warnings, infeasible corollary schedules.
    pub warnings: Vec<String>,
}

/// `10^2, 10^2.5, 10^3, ...` below `horizon`, then `horizon` itself.
pub fn default_sample_points(horizon: u64) -> Vec<u64> {
    let mut points = Vec::new();
    let mut k = 0;
    loop {
        let p = 10f64.powf(2.0 + 0.5 * k as f64).round() as u64;
        if p >= horizon {
            break;
        }
        points.push(p);
        k += 1;
    }
    if horizon > 0 {
        points.push(horizon);
    }
    points
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self, ConfigError> {
        let mut warnings = Vec::new();
        let mut arms = Vec::with_capacity(raw.arm.len());
        for (i, a) in raw.arm.into_iter().enumerate() {
            arms.push(build_arm(i, a, &mut warnings)?);
        }
        let mut cfg = ScenarioConfig {
            arms,
            select: raw.select,
            horizon: raw.horizon,
            runs: raw.runs,
            seed: raw.seed,
            explicit_sample_points: raw.sample_points.is_some(),
            sample_points: raw.sample_points.unwrap_or_else(|| default_sample_points(raw.horizon)),
            cee: raw.policy.cee,
            rca: raw.policy.rca,
            rucb: raw.policy.rucb,
            genie_rate: 0.0,
            top_arms: Vec::new(),
            warnings,
        };
        cfg.finish()?;
        Ok(cfg)
    }

    /// Replaces horizon, run count and seed, re-deriving the default sample
    /// grid and re-running every check.
    pub fn with_overrides(
        &self,
        horizon: Option<u64>,
        runs: Option<u64>,
        seed: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        if let Some(h) = horizon {
            cfg.horizon = h;
            if !cfg.explicit_sample_points {
                cfg.sample_points = default_sample_points(h);
            }
        }
        if let Some(r) = runs {
            cfg.runs = r;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.warnings.retain(|w| w.starts_with("arm["));
        cfg.finish()?;
        Ok(cfg)
    }

    fn finish(&mut self) -> Result<(), ConfigError> {
        let n = self.arms.len();
        if n < 2 {
            return Err(field_err("arm", format!("need at least two arms, got {n}")));
        }
        if self.select == 0 || self.select >= n {
            return Err(field_err(
                "select",
                format!("need 1 <= K < N = {n}, got K = {}", self.select),
            ));
        }
        if self.horizon == 0 {
            return Err(field_err("horizon", "must be positive"));
        }
        if self.runs == 0 {
            return Err(field_err("runs", "must be at least 1"));
        }
        if self.sample_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field_err("sample_points", "must be strictly increasing"));
        }
        if self.sample_points.first() == Some(&0) {
            return Err(field_err("sample_points", "must be positive"));
        }
        if let Some(&last) = self.sample_points.last() {
            if last > self.horizon {
                return Err(field_err(
                    "sample_points",
                    format!("{last} exceeds the horizon {}", self.horizon),
                ));
            }
        }
        let mus: Vec<f64> = self.arms.iter().map(|a| a.chain.mu()).collect();
        self.top_arms = crate::cee::top_k(&mus, self.select);
        self.genie_rate = self.top_arms.iter().map(|&i| mus[i]).sum();
        let mut sorted = mus.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            self.warnings
                .push("two arms share a stationary mean; regret bounds are undefined".into());
        }
        self.check_cee()?;
        if let Some(p) = &self.rca {
            if !(p.exploration > 0.0) || !p.exploration.is_finite() {
                return Err(field_err("policy.rca.exploration", "must be positive"));
            }
        }
        if let Some(p) = &self.rucb {
            if !(p.exploration > 0.0) || !p.exploration.is_finite() {
                return Err(field_err("policy.rucb.exploration", "must be positive"));
            }
            if !(p.epoch_parameter > 0.0) || !p.epoch_parameter.is_finite() {
                return Err(field_err("policy.rucb.epoch_parameter", "must be positive"));
            }
        }
        Ok(())
    }

    fn check_cee(&mut self) -> Result<(), ConfigError> {
        let Some(p) = &self.cee else { return Ok(()) };
        p.schedule
            .validate()
            .map_err(|e| field_err("policy.cee.schedule", e.to_string()))?;
        if !(p.exploration > 2.0) && !p.allow_low_exploration {
            return Err(field_err(
                "policy.cee.exploration",
                format!(
                    "L = {} must exceed 2 (set allow_low_exploration to override)",
                    p.exploration
                ),
            ));
        }
        if !(p.exploration > 0.0) || !p.exploration.is_finite() {
            return Err(field_err("policy.cee.exploration", "must be positive"));
        }
        let init_steps = self.arms.len().div_ceil(self.select) as u64;
        let init_len = p.schedule.cumulative(init_steps);
        if self.horizon < init_len {
            return Err(field_err(
                "horizon",
                format!("{} is shorter than the initialization ({init_len} slots)", self.horizon),
            ));
        }
        if let (Ok(truth), Some(1)) = (self.truth_for(p), p.schedule.constant_from()) {
            let bound = step_requirement(&truth);
            let first = p.schedule.block(1);
            if (first as f64) < bound {
                self.warnings.push(format!(
                    "constant step length {first} is below the required {bound:.4} (round up to {}); \
                     the constant-schedule bound does not apply",
                    bound.ceil()
                ));
            }
        }
        Ok(())
    }

    pub fn chains(&self) -> Vec<RewardedMarkovChain> {
        self.arms.iter().map(|a| a.chain.clone()).collect()
    }

    pub fn initial_states(&self) -> Vec<InitialState> {
        self.arms.iter().map(|a| a.initial).collect()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.chain.mu()).collect()
    }

    /// Analysis inputs for CEE run with `params` on this scenario.
    pub fn truth_for(&self, params: &CeeParams) -> Result<ScenarioTruth, BoundsError> {
        ScenarioTruth::from_chains(&self.chains(), self.select, params.exploration, params.schedule.clone())
    }
}

fn build_arm(i: usize, a: RawArm, warnings: &mut Vec<String>) -> Result<ArmSpec, ConfigError> {
    let f = |name: &str| format!("arm[{i}].{name}");
    let active = match (a.p01, a.p10, a.active) {
        (Some(p01), Some(p10), None) => {
            if a.rewards.len() != 2 {
                return Err(field_err(f("rewards"), "two-state arms need exactly two rewards"));
            }
            vec![vec![1.0 - p01, p01], vec![p10, 1.0 - p10]]
        }
        (None, None, Some(m)) => m,
        (Some(_), None, _) | (None, Some(_), None) => {
            return Err(field_err(f("p01"), "p01 and p10 must be given together"))
        }
        (None, None, None) => return Err(field_err(f("active"), "missing: give `active` or `p01`/`p10`")),
        _ => return Err(field_err(f("active"), "give either `active` or `p01`/`p10`, not both")),
    };
    let passive = a.passive.unwrap_or_else(|| active.clone());
    let initial = match a.initial_state {
        None => InitialState::Stationary,
        Some(RawInitial::Word(w)) if w == "stationary" => InitialState::Stationary,
        Some(RawInitial::Word(w)) => {
            return Err(field_err(
                f("initial_state"),
                format!("expected \"stationary\" or a state index, got {w:?}"),
            ))
        }
        Some(RawInitial::Index(s)) => {
            if s >= a.rewards.len() {
                return Err(field_err(f("initial_state"), format!("state {s} out of range")));
            }
            InitialState::Fixed(s)
        }
    };
    let chain =
        RewardedMarkovChain::new(active, passive, a.rewards).map_err(|source| ConfigError::Chain { arm: i, source })?;
    for w in chain.validation().warnings() {
        warnings.push(format!("arm[{i}]: {w}"));
    }
    Ok(ArmSpec {
        name: a.name.unwrap_or_else(|| format!("arm{i}")),
        chain,
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"
select = 1
horizon = 1000
runs = 2
seed = 1

[[arm]]
p01 = 0.3
p10 = 0.9
rewards = [0.1, 1.0]

[[arm]]
p01 = 0.5
p10 = 0.1
rewards = [0.1, 1.0]

[policy.cee]
exploration = 2.1
schedule = { kind = "constant", value = 3 }
"#;

    #[test]
    fn parses_and_warns_about_short_steps() {
        let cfg = ScenarioConfig::parse(TWO).unwrap();
        assert_eq!(cfg.arms.len(), 2);
        assert_eq!(cfg.top_arms, vec![1]);
        assert!((cfg.genie_rate - 0.85).abs() < 1e-12);
        assert_eq!(cfg.sample_points, vec![100, 316, 1000]);
        assert!(cfg.warnings.iter().any(|w| w.contains("below the required")));
    }

    #[test]
    fn missing_rewards_is_schema_error() {
        let text = TWO.replacen("rewards = [0.1, 1.0]\n", "", 1);
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert!(
            matches!(err, ConfigError::Schema(ref m) if m.contains("rewards")),
            "{err}"
        );
    }

    #[test]
    fn select_must_be_below_arm_count() {
        let err = ScenarioConfig::parse(&TWO.replace("select = 1", "select = 2")).unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "select"));
    }

    #[test]
    fn low_exploration_needs_override() {
        let text = TWO.replace("exploration = 2.1", "exploration = 1.5");
        assert!(ScenarioConfig::parse(&text).is_err());
        let text = text.replace("exploration = 1.5", "exploration = 1.5\nallow_low_exploration = true");
        assert!(ScenarioConfig::parse(&text).is_ok());
    }

    #[test]
    fn horizon_must_cover_initialization() {
        let err = ScenarioConfig::parse(&TWO.replace("horizon = 1000", "horizon = 5")).unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "horizon"));
    }

    #[test]
    fn invalid_chain_is_reported_per_arm() {
        let text = TWO.replacen("p01 = 0.3", "p01 = 1.3", 1);
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Chain { arm: 0, .. }), "{err}");
    }

    #[test]
    fn bundled_scenario() {
        let cfg = ScenarioConfig::parse(SCENARIO_S).unwrap();
        assert_eq!(cfg.arms.len(), 5);
        assert_eq!(cfg.select, 1);
        assert_eq!(cfg.top_arms, vec![2]);
        assert!((cfg.genie_rate - 0.85).abs() < 1e-12);
        assert!(cfg.warnings.is_empty(), "{:?}", cfg.warnings);
    }

    #[test]
    fn overrides_regrid() {
        let cfg = ScenarioConfig::parse(TWO).unwrap();
        let cfg = cfg.with_overrides(Some(100), None, Some(9)).unwrap();
        assert_eq!(cfg.sample_points, vec![100]);
        assert_eq!(cfg.seed, 9);
    }
}
