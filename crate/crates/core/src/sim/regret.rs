//! Regret against the top-`K` benchmark, estimated across runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRow {
    pub n: u64,
    /// Across-run mean of the cumulative reward.
    pub mean_reward: f64,
    /// `n * genie_rate - mean_reward`.
    pub regret: f64,
    /// `regret / ln n`; undefined below `n = 2`.
    pub regret_over_ln_n: Option<f64>,
    /// Across-run sample variance of the cumulative reward (0 with one run).
    pub reward_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub policy: String,
    pub reconstruction: bool,
    pub genie_rate: f64,
    pub rows: Vec<RegretRow>,
    /// `per_run[r][k]`: cumulative reward of run `r` at sample point `k`.
    pub per_run: Vec<Vec<f64>>,
}

impl RegretTrace {
    pub fn row_at(&self, n: u64) -> Option<&RegretRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// Per-run `(n * genie_rate - R_r(n)) / ln n` at sample index `k`.
    pub fn run_regret_over_ln_n(&self, k: usize) -> Vec<f64> {
        let n = self.rows[k].n;
        let ln = (n as f64).ln();
        self.per_run
            .iter()
            .map(|r| (n as f64 * self.genie_rate - r[k]) / ln)
            .collect()
    }
}

/// Builds the trace from per-run cumulative rewards at `sample_points`.
pub fn estimate_regret(
    policy: &str,
    reconstruction: bool,
    genie_rate: f64,
    sample_points: &[u64],
    per_run: Vec<Vec<f64>>,
) -> RegretTrace {
    assert!(!per_run.is_empty(), "need at least one run");
    assert!(per_run.iter().all(|r| r.len() == sample_points.len()));
    let runs = per_run.len() as f64;
    let rows = sample_points
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mean = per_run.iter().map(|r| r[k]).sum::<f64>() / runs;
            let variance = if per_run.len() > 1 {
                per_run.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (runs - 1.0)
            } else {
                0.0
            };
            let regret = n as f64 * genie_rate - mean;
            RegretRow {
                n,
                mean_reward: mean,
                regret,
                regret_over_ln_n: (n >= 2).then(|| regret / (n as f64).ln()),
                reward_variance: variance,
            }
        })
        .collect();
    RegretTrace {
        policy: policy.to_string(),
        reconstruction,
        genie_rate,
        rows,
        per_run,
    }
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    assert!(!values.is_empty() && resamples > 0 && level > 0.0 && level < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    (pick(tail), pick(1.0 - tail))
}
