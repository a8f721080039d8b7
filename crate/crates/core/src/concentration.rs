//! Monte Carlo checks of the concentration inequalities behind the regret
//! analysis.
//!
//! Every verdict compares an empirical frequency (or mean) against its
//! analytic bound with a slack of three Monte Carlo standard errors, and
//! reports all three numbers.
//!
//! Replication `r` of a check draws from `ChaCha8Rng::seed_from_u64(seed)`
//! on stream `r`, so results do not depend on how replications are
//! scheduled across threads.

use crate::markov::{InitialState, RewardedMarkovChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use thiserror::Error;

/// Multiplier on the Monte Carlo standard error allowed above a bound.
pub const SIGMA_SLACK: f64 = 3.0;
const CHUNK: u64 = 2048;

#[derive(Debug, Error, PartialEq)]
pub enum CheckError {
    #[error("malformed check: {0}")]
    Malformed(String),
    #[error("drift bound C = {drift} must satisfy 0 <= C < mu = {mean}")]
    DriftTooLarge { drift: f64, mean: f64 },
    #[error("generator drift {actual} exceeds declared C = {declared}")]
    GeneratorDrift { actual: f64, declared: f64 },
    #[error("this check needs a generator whose conditional mean is exactly mu")]
    NotIid,
}

/// Sequences `X_1..X_n` used to exercise the tail bounds.
#[derive(Debug, Clone)]
pub enum Generator {
    /// `X_t = b * Bernoulli(mu / b)`; conditional mean exactly `mu`.
    Iid,
    /// Conditional mean alternates `mu + C`, `mu - C`, ...
    Alternating,
    /// Conditional mean pinned at `mu + C`.
    Elevated,
    /// Conditional mean pinned at `mu - C`.
    Depressed,
    /// `X_t` is the sample mean of `block` consecutive rewards of a chain
    /// played continuously, so consecutive terms share the chain's state.
    MarkovBlocks {
        chain: RewardedMarkovChain,
        block: u64,
        start: InitialState,
    },
}

impl Generator {
    fn name(&self) -> String {
        match self {
            Generator::Iid => "iid".into(),
            Generator::Alternating => "alternating".into(),
            Generator::Elevated => "elevated".into(),
            Generator::Depressed => "depressed".into(),
            Generator::MarkovBlocks { block, .. } => format!("markov-blocks({block})"),
        }
    }
}

/// Largest deviation of a block mean's conditional expectation from `mu`,
/// over all states the chain can be in when the block starts.
pub fn max_block_drift(chain: &RewardedMarkovChain, block: u64) -> f64 {
    let p = chain.active();
    let mut v = chain.rewards().to_vec();
    let mut acc = vec![0.0; chain.states()];
    for _ in 0..block {
        v = p.right_apply(&v);
        acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
    }
    let mu = chain.mu();
    acc.iter().map(|a| (a / block as f64 - mu).abs()).fold(0.0, f64::max)
}

/// Smallest block length whose drift is at most `drift`.
pub fn block_for_drift(chain: &RewardedMarkovChain, drift: f64) -> u64 {
    (1..).find(|&b| max_block_drift(chain, b) <= drift).unwrap()
}

#[derive(Debug, Clone)]
pub struct TailCheckSpec {
    /// `n`: terms per sequence.
    pub trials: u64,
    /// `b`: values lie in `[0, b]`.
    pub range: f64,
    /// `C`: bound on the conditional-mean drift.
    pub drift: f64,
    /// `mu`.
    pub mean: f64,
    /// `a`.
    pub deviation: f64,
    pub replications: u64,
    pub generator: Generator,
}

impl TailCheckSpec {
    /// A Bernoulli-type check on `[0, 1]`.
    pub fn bernoulli(
        generator: Generator,
        trials: u64,
        mean: f64,
        drift: f64,
        deviation: f64,
        replications: u64,
    ) -> Self {
        TailCheckSpec {
            trials,
            range: 1.0,
            drift,
            mean,
            deviation,
            replications,
            generator,
        }
    }

    /// Block means of `chain` with the shortest block whose drift fits in `drift`.
    pub fn markov_blocks(
        chain: RewardedMarkovChain,
        drift: f64,
        trials: u64,
        deviation: f64,
        replications: u64,
    ) -> Self {
        let block = block_for_drift(&chain, drift);
        let range = chain.rewards().iter().copied().fold(0.0, f64::max);
        TailCheckSpec {
            trials,
            range,
            drift,
            mean: chain.mu(),
            deviation,
            replications,
            generator: Generator::MarkovBlocks {
                chain,
                block,
                start: InitialState::Stationary,
            },
        }
    }

    pub fn validate(&self) -> Result<(), CheckError> {
        let bad = |m: String| Err(CheckError::Malformed(m));
        if self.trials == 0 || self.replications == 0 {
            return bad("trials and replications must be positive".into());
        }
        if !(self.range > 0.0) || !self.range.is_finite() {
            return bad(format!("range b = {} must be positive", self.range));
        }
        if !(self.deviation >= 0.0) {
            return bad(format!("deviation a = {} must be non-negative", self.deviation));
        }
        if !(self.mean > 0.0 && self.mean <= self.range) {
            return bad(format!("mean {} outside (0, b]", self.mean));
        }
        if !(self.drift >= 0.0 && self.drift < self.mean) {
            return Err(CheckError::DriftTooLarge {
                drift: self.drift,
                mean: self.mean,
            });
        }
        match &self.generator {
            Generator::MarkovBlocks { chain, block, .. } => {
                if *block == 0 {
                    return bad("block length must be positive".into());
                }
                if (chain.mu() - self.mean).abs() > 1e-12 {
                    return bad(format!("mean {} differs from the chain's mu {}", self.mean, chain.mu()));
                }
                if chain.rewards().iter().any(|&r| r > self.range) {
                    return bad("chain rewards exceed the range b".into());
                }
                let actual = max_block_drift(chain, *block);
                if actual > self.drift + 1e-12 {
                    return Err(CheckError::GeneratorDrift {
                        actual,
                        declared: self.drift,
                    });
                }
            }
            _ => {
                if self.mean + self.drift > self.range {
                    return bad(format!(
                        "mu + C = {} exceeds the range b = {}",
                        self.mean + self.drift,
                        self.range
                    ));
                }
            }
        }
        Ok(())
    }

    /// Draws one `S_n`.
    fn sample_sum(&self, rng: &mut ChaCha8Rng) -> f64 {
        let b = self.range;
        let bernoulli = |rng: &mut ChaCha8Rng, m: f64| if rng.random::<f64>() < m / b { b } else { 0.0 };
        match &self.generator {
            Generator::Iid => (0..self.trials).map(|_| bernoulli(rng, self.mean)).sum(),
            Generator::Elevated => (0..self.trials).map(|_| bernoulli(rng, self.mean + self.drift)).sum(),
            Generator::Depressed => (0..self.trials).map(|_| bernoulli(rng, self.mean - self.drift)).sum(),
            Generator::Alternating => (0..self.trials)
                .map(|t| {
                    let m = if t % 2 == 0 {
                        self.mean + self.drift
                    } else {
                        self.mean - self.drift
                    };
                    bernoulli(rng, m)
                })
                .sum(),
            Generator::MarkovBlocks { chain, block, start } => {
                let mut state = match start {
                    InitialState::Stationary => chain.sample_stationary(rng),
                    InitialState::Fixed(s) => *s,
                };
                let rewards = chain.rewards();
                let mut total = 0.0;
                for _ in 0..self.trials {
                    let mut acc = 0.0;
                    for _ in 0..*block {
                        state = chain.step(state, true, rng);
                        acc += rewards[state];
                    }
                    total += acc / *block as f64;
                }
                total
            }
        }
    }
}

/// Empirical tail frequency against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub label: String,
    pub empirical: f64,
    pub bound: f64,
    pub mc_sigma: f64,
    pub replications: u64,
    pub pass: bool,
}

impl TailReport {
    fn new(label: String, hits: u64, replications: u64, bound: f64) -> Self {
        let p = hits as f64 / replications as f64;
        let sigma = (p * (1.0 - p) / replications as f64).sqrt();
        TailReport {
            label,
            empirical: p,
            bound,
            mc_sigma: sigma,
            replications,
            pass: p <= bound + SIGMA_SLACK * sigma,
        }
    }
}

impl fmt::Display for TailReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: empirical {:.3e} vs bound {:.3e} (MC sigma {:.1e}, {} reps)",
            if self.pass { "PASS" } else { "FAIL" },
            self.label,
            self.empirical,
            self.bound,
            self.mc_sigma,
            self.replications
        )
    }
}

/// Upper and lower tail verdicts of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct TailPair {
    pub upper: TailReport,
    pub lower: TailReport,
}

impl TailPair {
    pub fn pass(&self) -> bool {
        self.upper.pass && self.lower.pass
    }
}

fn count_tails(spec: &TailCheckSpec, seed: u64, upper_at: f64, lower_at: f64) -> (u64, u64) {
    let chunks = spec.replications.div_ceil(CHUNK);
    let counts: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut up = 0;
            let mut low = 0;
            let end = ((c + 1) * CHUNK).min(spec.replications);
            for r in c * CHUNK..end {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r);
                let s = spec.sample_sum(&mut rng);
                up += u64::from(s >= upper_at);
                low += u64::from(s <= lower_at);
            }
            (up, low)
        })
        .collect();
    counts.iter().fold((0, 0), |(a, b), (c, d)| (a + c, b + d))
}

/// Plain Chernoff-Hoeffding: `P(S_n >= n mu + a)` and `P(S_n <= n mu - a)`
/// both at most `exp(-2 (a/b)^2 / n)`.
pub fn check_chernoff(spec: &TailCheckSpec, seed: u64) -> Result<TailPair, CheckError> {
    spec.validate()?;
    if spec.drift != 0.0 || !matches!(spec.generator, Generator::Iid) {
        return Err(CheckError::NotIid);
    }
    let n = spec.trials as f64;
    let bound = (-2.0 * (spec.deviation / spec.range).powi(2) / n).exp();
    let (up, low) = count_tails(
        spec,
        seed,
        n * spec.mean + spec.deviation,
        n * spec.mean - spec.deviation,
    );
    let tag = format!("n={} a={} {}", spec.trials, spec.deviation, spec.generator.name());
    Ok(TailPair {
        upper: TailReport::new(format!("chernoff upper {tag}"), up, spec.replications, bound),
        lower: TailReport::new(format!("chernoff lower {tag}"), low, spec.replications, bound),
    })
}

/// Analytic bounds of the drifted inequality: (upper, lower).
pub fn drifted_bounds(spec: &TailCheckSpec) -> (f64, f64) {
    let (a, b, n, mu, c) = (spec.deviation, spec.range, spec.trials as f64, spec.mean, spec.drift);
    let upper = (-2.0 * (a / b * ((mu - c) / (mu + c))).powi(2) / n).exp();
    let lower = (-2.0 * (a / b).powi(2) / n).exp();
    (upper, lower)
}

/// Drifted Chernoff bound:
/// `P(S_n >= n(mu + C) + a) <= exp(-2 (a (mu - C) / (b (mu + C)))^2 / n)` and
/// `P(S_n <= n(mu - C) - a) <= exp(-2 (a / b)^2 / n)`.
pub fn check_drifted_chernoff(spec: &TailCheckSpec, seed: u64) -> Result<TailPair, CheckError> {
    spec.validate()?;
    let n = spec.trials as f64;
    let (ub, lb) = drifted_bounds(spec);
    let (up, low) = count_tails(
        spec,
        seed,
        n * (spec.mean + spec.drift) + spec.deviation,
        n * (spec.mean - spec.drift) - spec.deviation,
    );
    let tag = format!(
        "n={} a={} C={} {}",
        spec.trials,
        spec.deviation,
        spec.drift,
        spec.generator.name()
    );
    Ok(TailPair {
        upper: TailReport::new(format!("drifted upper {tag}"), up, spec.replications, ub),
        lower: TailReport::new(format!("drifted lower {tag}"), low, spec.replications, lb),
    })
}

/// Expected `sum_{t=1}^T s(t) - mu T` from each starting state, exactly.
/// `s(1)` is the reward of the starting state.
pub fn exact_deviation(chain: &RewardedMarkovChain, horizon: u64) -> Vec<f64> {
    let p = chain.active();
    let mu = chain.mu();
    let mut v = chain.rewards().to_vec();
    let mut acc = vec![0.0; chain.states()];
    for t in 0..horizon {
        if t > 0 {
            v = p.right_apply(&v);
        }
        acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x - mu);
    }
    acc
}

/// Starting state with the largest expected positive deviation at `horizon`.
pub fn worst_start_state(chain: &RewardedMarkovChain, horizon: u64) -> usize {
    let dev = exact_deviation(chain, horizon);
    (0..dev.len())
        .max_by(|&a, &b| dev[a].total_cmp(&dev[b]).then(b.cmp(&a)))
        .unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub horizon: u64,
    pub start: InitialState,
    /// Monte Carlo estimate of `E[sum s(t) - mu T]`.
    pub mean_deviation: f64,
    pub mc_sigma: f64,
    /// `(min_s pi_s)^-1 sum_s s`.
    pub bound: f64,
    /// `mean_deviation <= bound + 3 sigma`.
    pub pass: bool,
    /// Mirrored check `-mean_deviation <= bound + 3 sigma`. The inequality is
    /// only stated for the positive deviation; this side is extrapolated.
    pub mirrored_pass: bool,
}

impl fmt::Display for DeviationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let start = match self.start {
            InitialState::Stationary => "stationary".to_string(),
            InitialState::Fixed(s) => format!("state {s}"),
        };
        write!(
            f,
            "[{}] markov deviation T={} start={}: mean {:.4} vs bound {:.4} (MC sigma {:.2e}); mirrored (extrapolated) {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.horizon,
            start,
            self.mean_deviation,
            self.bound,
            self.mc_sigma,
            if self.mirrored_pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Monte Carlo check of the bounded-deviation property of a played chain.
/// One trajectory per replication serves every horizon.
pub fn check_markov_deviation(
    chain: &RewardedMarkovChain,
    horizons: &[u64],
    start: InitialState,
    replications: u64,
    seed: u64,
) -> Result<Vec<DeviationReport>, CheckError> {
    if replications < 2 {
        return Err(CheckError::Malformed("need at least two replications".into()));
    }
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(CheckError::Malformed("horizons must be non-empty and positive".into()));
    }
    if let InitialState::Fixed(s) = start {
        if s >= chain.states() {
            return Err(CheckError::Malformed(format!("start state {s} out of range")));
        }
    }
    let mut sorted = horizons.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let t_max = *sorted.last().unwrap();
    let mu = chain.mu();
    let rewards = chain.rewards();
    let h = sorted.len();

    let chunks = replications.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; h];
            let mut sq = vec![0.0; h];
            let end = ((c + 1) * CHUNK).min(replications);
            for r in c * CHUNK..end {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r);
                let mut state = match start {
                    InitialState::Stationary => chain.sample_stationary(&mut rng),
                    InitialState::Fixed(s) => s,
                };
                let mut total = 0.0;
                let mut k = 0;
                for t in 1..=t_max {
                    if t > 1 {
                        state = chain.step(state, true, &mut rng);
                    }
                    total += rewards[state];
                    if t == sorted[k] {
                        let d = total - mu * t as f64;
                        sum[k] += d;
                        sq[k] += d * d;
                        k += 1;
                    }
                }
            }
            (sum, sq)
        })
        .collect();

    let bound = chain.stationary().deviation_constant();
    let reps = replications as f64;
    Ok((0..h)
        .map(|k| {
            let s: f64 = partials.iter().map(|p| p.0[k]).sum();
            let q: f64 = partials.iter().map(|p| p.1[k]).sum();
            let mean = s / reps;
            let var = ((q - reps * mean * mean) / (reps - 1.0)).max(0.0);
            let sigma = (var / reps).sqrt();
            DeviationReport {
                horizon: sorted[k],
                start,
                mean_deviation: mean,
                mc_sigma: sigma,
                bound,
                pass: mean <= bound + SIGMA_SLACK * sigma,
                mirrored_pass: -mean <= bound + SIGMA_SLACK * sigma,
            }
        })
        .collect())
}

/// Full validation run over a set of arms.
#[derive(Debug, Clone)]
pub struct ValidationSuite {
    pub chernoff: Vec<TailPair>,
    pub drifted: Vec<TailPair>,
    /// (arm index, reports).
    pub markov: Vec<(usize, Vec<DeviationReport>)>,
}

impl ValidationSuite {
    pub fn pass(&self) -> bool {
        self.chernoff.iter().all(TailPair::pass)
            && self.drifted.iter().all(TailPair::pass)
            && self.markov.iter().all(|(_, r)| r.iter().all(|d| d.pass))
    }

    /// Number of failed verdicts, not counting the extrapolated mirrored checks.
    pub fn failures(&self) -> usize {
        let tails = self
            .chernoff
            .iter()
            .chain(&self.drifted)
            .map(|p| usize::from(!p.upper.pass) + usize::from(!p.lower.pass))
            .sum::<usize>();
        tails + self.markov.iter().flat_map(|(_, r)| r).filter(|d| !d.pass).count()
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for p in self.chernoff.iter().chain(&self.drifted) {
            out.push(p.upper.to_string());
            out.push(p.lower.to_string());
        }
        for (arm, reports) in &self.markov {
            for r in reports {
                out.push(format!("arm {arm}: {r}"));
            }
        }
        out
    }

    /// One CSV row per verdict: `check,label,empirical,bound,mc_sigma,pass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,label,empirical,bound,mc_sigma,pass\n");
        for (kind, pairs) in [("chernoff", &self.chernoff), ("drifted", &self.drifted)] {
            for p in pairs {
                for r in [&p.upper, &p.lower] {
                    s.push_str(&format!(
                        "{kind},{},{},{},{},{}\n",
                        r.label, r.empirical, r.bound, r.mc_sigma, r.pass
                    ));
                }
            }
        }
        for (arm, reports) in &self.markov {
            for r in reports {
                let start = match r.start {
                    InitialState::Stationary => "stationary".to_string(),
                    InitialState::Fixed(x) => format!("state{x}"),
                };
                s.push_str(&format!(
                    "markov,arm{arm} T={} start={start},{},{},{},{}\n",
                    r.horizon, r.mean_deviation, r.bound, r.mc_sigma, r.pass
                ));
                s.push_str(&format!(
                    "markov-mirrored,arm{arm} T={} start={start} (extrapolated),{},{},{},{}\n",
                    r.horizon, -r.mean_deviation, r.bound, r.mc_sigma, r.mirrored_pass
                ));
            }
        }
        s
    }
}

/// Drift levels exercised by the suite.
pub const SUITE_DRIFTS: [f64; 3] = [0.0, 0.05, 0.2];
/// Horizons exercised by the suite.
pub const SUITE_HORIZONS: [u64; 4] = [10, 100, 1_000, 10_000];

/// Runs every check on `chains` with `replications` per check.
///
/// Chernoff: fair coin on `[0,1]`, `n = 100`, `a in {0, 20, 50}`.
/// Drifted: alternating, elevated and depressed Bernoulli sequences with
/// `mu = 0.5`, `n = 200`, `a = 30`, and block means of the best arm with
/// `n = 200`, `a = 10`, for every `C` in [`SUITE_DRIFTS`] (`C > 0` for the
/// chain, which always drifts a little).
/// Deviation: every arm, stationary start and worst single-state start.
pub fn run_suite(chains: &[RewardedMarkovChain], replications: u64, seed: u64) -> Result<ValidationSuite, CheckError> {
    let mut chernoff = Vec::new();
    for (i, a) in [0.0, 20.0, 50.0].into_iter().enumerate() {
        let spec = TailCheckSpec::bernoulli(Generator::Iid, 100, 0.5, 0.0, a, replications);
        chernoff.push(check_chernoff(&spec, seed.wrapping_add(i as u64))?);
    }
    let mut drifted = Vec::new();
    let best = chains
        .iter()
        .max_by(|a, b| a.mu().total_cmp(&b.mu()))
        .ok_or_else(|| CheckError::Malformed("no arms".into()))?;
    for (ci, &c) in SUITE_DRIFTS.iter().enumerate() {
        let gens = [
            Generator::Iid,
            Generator::Alternating,
            Generator::Elevated,
            Generator::Depressed,
        ];
        for (gi, g) in gens.into_iter().enumerate() {
            if c > 0.0 && matches!(g, Generator::Iid) {
                continue;
            }
            let spec = TailCheckSpec::bernoulli(g, 200, 0.5, c, 30.0, replications);
            drifted.push(check_drifted_chernoff(
                &spec,
                seed.wrapping_add(100 + 10 * ci as u64 + gi as u64),
            )?);
        }
        if c > 0.0 {
            let spec = TailCheckSpec::markov_blocks(best.clone(), c, 200, 10.0, replications);
            drifted.push(check_drifted_chernoff(&spec, seed.wrapping_add(200 + ci as u64))?);
        }
    }
    let mut markov = Vec::new();
    for (arm, chain) in chains.iter().enumerate() {
        let worst = worst_start_state(chain, *SUITE_HORIZONS.last().unwrap());
        let mut reports = Vec::new();
        for (k, start) in [InitialState::Stationary, InitialState::Fixed(worst)]
            .into_iter()
            .enumerate()
        {
            let s = seed.wrapping_add(1000 + 10 * arm as u64 + k as u64);
            reports.extend(check_markov_deviation(chain, &SUITE_HORIZONS, start, replications, s)?);
        }
        markov.push((arm, reports));
    }
    Ok(ValidationSuite {
        chernoff,
        drifted,
        markov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch3() -> RewardedMarkovChain {
        RewardedMarkovChain::gilbert_elliott(0.5, 0.1, 0.1, 1.0).unwrap()
    }

    #[test]
    fn zero_deviation_bound_is_one() {
        let spec = TailCheckSpec::bernoulli(Generator::Iid, 100, 0.5, 0.0, 0.0, 2000);
        let r = check_chernoff(&spec, 1).unwrap();
        assert_eq!(r.upper.bound, 1.0);
        assert!(r.pass());
    }

    #[test]
    fn support_limit_gives_zero_tail() {
        // a = n (1 - mu) only reachable by all-ones; probability 2^-100.
        let spec = TailCheckSpec::bernoulli(Generator::Iid, 100, 0.5, 0.0, 50.0, 5000);
        let r = check_chernoff(&spec, 2).unwrap();
        assert_eq!(r.upper.empirical, 0.0);
        assert!(r.pass());
    }

    #[test]
    fn precondition_errors() {
        let spec = TailCheckSpec::bernoulli(Generator::Alternating, 10, 0.3, 0.3, 1.0, 10);
        assert_eq!(
            check_drifted_chernoff(&spec, 0).unwrap_err(),
            CheckError::DriftTooLarge { drift: 0.3, mean: 0.3 }
        );
        let spec = TailCheckSpec::bernoulli(Generator::Alternating, 10, 0.5, 0.1, 1.0, 10);
        assert_eq!(check_chernoff(&spec, 0).unwrap_err(), CheckError::NotIid);
        let mut spec = TailCheckSpec::markov_blocks(ch3(), 0.05, 10, 1.0, 10);
        if let Generator::MarkovBlocks { block, .. } = &mut spec.generator {
            *block = 1;
        }
        assert!(matches!(spec.validate(), Err(CheckError::GeneratorDrift { .. })));
    }

    #[test]
    fn zero_drift_reduces_to_plain() {
        let spec = TailCheckSpec::bernoulli(Generator::Iid, 100, 0.5, 0.0, 12.0, 4000);
        let plain = check_chernoff(&spec, 9).unwrap();
        let drifted = check_drifted_chernoff(&spec, 9).unwrap();
        assert_eq!(plain.upper.empirical, drifted.upper.empirical);
        assert_eq!(plain.lower.empirical, drifted.lower.empirical);
        assert_eq!(plain.upper.bound, drifted.upper.bound);
        assert_eq!(plain.lower.bound, drifted.lower.bound);
    }

    #[test]
    fn extreme_exponent_no_hits() {
        // Choose a so the upper exponent is exactly -20.
        let (n, mu, c) = (2000.0, 0.5, 0.2);
        let a = (20.0 * n / 2.0f64).sqrt() * (mu + c) / (mu - c);
        let spec = TailCheckSpec::bernoulli(Generator::Elevated, 2000, mu, c, a, 20_000);
        let (ub, _) = drifted_bounds(&spec);
        assert!((ub.ln() + 20.0).abs() < 1e-9);
        let r = check_drifted_chernoff(&spec, 4).unwrap();
        assert_eq!(r.upper.empirical, 0.0);
        assert!(r.pass());
    }

    #[test]
    fn block_drift_shrinks() {
        let c = ch3();
        let d1 = max_block_drift(&c, 1);
        let d10 = max_block_drift(&c, 10);
        assert!(d10 < d1);
        // From state 0: E[r after 1 step] = 0.1 + 0.9 * 0.5 = 0.55, mu = 0.85.
        assert!((d1 - 0.30).abs() < 1e-12);
        let b = block_for_drift(&c, 0.05);
        assert!(max_block_drift(&c, b) <= 0.05 && max_block_drift(&c, b - 1) > 0.05);
    }

    #[test]
    fn single_state_chain_has_zero_deviation() {
        let c = RewardedMarkovChain::rested_equal(vec![vec![1.0]], vec![0.7]).unwrap();
        let r = check_markov_deviation(&c, &[10, 100], InitialState::Stationary, 100, 3).unwrap();
        for d in r {
            assert!(d.mean_deviation.abs() < 1e-9);
            assert!(d.pass && d.mirrored_pass);
        }
    }

    #[test]
    fn deviation_matches_exact_expectation() {
        let c = ch3();
        let exact = exact_deviation(&c, 100);
        // From the good state the excess decays as 0.15 * 0.4^(t-1).
        let closed: f64 = (0..100).map(|t| 0.15 * 0.4f64.powi(t)).sum();
        assert!((exact[1] - closed).abs() < 1e-9);
        assert_eq!(worst_start_state(&c, 100), 1);
        let mc = check_markov_deviation(&c, &[100], InitialState::Fixed(1), 20_000, 5).unwrap();
        assert!((mc[0].mean_deviation - exact[1]).abs() < 5.0 * mc[0].mc_sigma);
    }
}
