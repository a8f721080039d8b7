//! Seeded multi-run experiments.

pub mod config;
pub mod episode;
pub mod export;
pub mod regret;
pub mod seeding;

use crate::baselines::{RcaPolicy, RucbPolicy};
use crate::cee::{CeeConfig, CeePolicy};
use crate::handshake::{Policy, PolicyError};
use config::ScenarioConfig;
use episode::{run_episode, EpisodeError, EpisodeOptions};
use rayon::prelude::*;
use regret::{estimate_regret, RegretTrace};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Cee,
    Rca,
    Rucb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Cee, PolicyKind::Rca, PolicyKind::Rucb];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Cee => "cee",
            PolicyKind::Rca => "rca",
            PolicyKind::Rucb => "rucb",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown policy {s:?} (expected cee, rca or rucb)"))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario has no [policy.{0}] section")]
    MissingPolicy(PolicyKind),
    #[error("cannot build policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("run {run}: {source}")]
    Episode { run: u64, source: EpisodeError },
}

pub fn build_policy(cfg: &ScenarioConfig, kind: PolicyKind) -> Result<Box<dyn Policy>, SimError> {
    let n = cfg.arms.len();
    Ok(match kind {
        PolicyKind::Cee => {
            let p = cfg.cee.as_ref().ok_or(SimError::MissingPolicy(kind))?;
            let mut c = CeeConfig::new(n, cfg.select, p.exploration, p.schedule.clone());
            c.allow_low_exploration = p.allow_low_exploration;
            c.record_padded = p.record_padded;
            Box::new(CeePolicy::new(c)?)
        }
        PolicyKind::Rca => {
            let p = cfg.rca.as_ref().ok_or(SimError::MissingPolicy(kind))?;
            Box::new(RcaPolicy::new(n, cfg.select, p.exploration)?)
        }
        PolicyKind::Rucb => {
            let p = cfg.rucb.as_ref().ok_or(SimError::MissingPolicy(kind))?;
            Box::new(RucbPolicy::new(n, cfg.select, p.exploration, p.epoch_parameter)?)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: u64,
    pub seed: u64,
    pub total_reward: f64,
    pub steps: u64,
    pub late_hit_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub kind: PolicyKind,
    pub trace: RegretTrace,
    pub runs: Vec<RunSummary>,
}

/// Runs `cfg.runs` independent episodes of `kind` in parallel and aggregates
/// them in run order.
pub fn simulate(cfg: &ScenarioConfig, kind: PolicyKind) -> Result<PolicyRun, SimError> {
    let chains = cfg.chains();
    let initial = cfg.initial_states();
    let opts = EpisodeOptions::new(cfg.horizon, cfg.sample_points.clone(), cfg.top_arms.clone());
    let reconstruction = build_policy(cfg, kind)?.is_reconstruction();
    let results: Vec<(Vec<f64>, RunSummary)> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let seed = seeding::run_seed(cfg.seed, kind.name(), run);
            let mut policy = build_policy(cfg, kind)?;
            let ep = run_episode(&chains, &initial, policy.as_mut(), seed, &opts)
                .map_err(|source| SimError::Episode { run, source })?;
            let summary = RunSummary {
                run,
                seed,
                total_reward: ep.total_reward,
                steps: ep.steps,
                late_hit_rate: ep.late_hit_rate(),
            };
            Ok((ep.cumulative, summary))
        })
        .collect::<Result<_, SimError>>()?;
    let (per_run, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let trace = estimate_regret(kind.name(), reconstruction, cfg.genie_rate, &cfg.sample_points, per_run);
    Ok(PolicyRun { kind, trace, runs })
}
