//! Finite-state rewarded Markov chains.
//!
//! Each arm of a restless bandit is a chain with an *active* matrix (used on
//! slots where the arm is played) and a *passive* matrix (used otherwise).
//! Structural properties (irreducibility, aperiodicity, reversibility) are
//! checked on the active matrix, which is also the one whose stationary
//! distribution defines the arm's mean reward.
//!
//! Slot convention used throughout the crate: on every slot the chain steps
//! first, then the reward of the state it lands in is the reward of that slot.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

/// Tolerance on row sums and matrix entries.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance on the stationary fixed point and on detailed balance.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Above this many states the stationary solve goes straight to power iteration.
const DIRECT_SOLVE_MAX_STATES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    Active,
    Passive,
}

impl fmt::Display for MatrixRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixRole::Active => f.write_str("active"),
            MatrixRole::Passive => f.write_str("passive"),
        }
    }
}

/// A hard violation found while validating a chain definition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    Shape {
        matrix: MatrixRole,
        rows: usize,
        expected: usize,
    },
    RaggedRow {
        matrix: MatrixRole,
        row: usize,
        len: usize,
        expected: usize,
    },
    EntryOutOfRange {
        matrix: MatrixRole,
        row: usize,
        col: usize,
        value: f64,
    },
    RowSum {
        matrix: MatrixRole,
        row: usize,
        sum: f64,
    },
    RewardOutOfRange {
        state: usize,
        value: f64,
    },
    Reducible,
    Periodic {
        period: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => f.write_str("chain has no states"),
            Violation::Shape { matrix, rows, expected } => {
                write!(f, "{matrix} matrix has {rows} rows, expected {expected}")
            }
            Violation::RaggedRow {
                matrix,
                row,
                len,
                expected,
            } => write!(f, "{matrix} matrix row {row} has {len} entries, expected {expected}"),
            Violation::EntryOutOfRange {
                matrix,
                row,
                col,
                value,
            } => write!(
                f,
                "not row-stochastic: {matrix} matrix entry ({row},{col}) = {value} outside [0,1]"
            ),
            Violation::RowSum { matrix, row, sum } => {
                write!(f, "not row-stochastic: {matrix} matrix row {row} sums to {sum}")
            }
            Violation::RewardOutOfRange { state, value } => {
                write!(f, "reward of state {state} is {value}, must lie in (0, 1]")
            }
            Violation::Reducible => f.write_str("reducible: active matrix is not irreducible"),
            Violation::Periodic { period } => {
                write!(f, "periodic: active matrix has period {period}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid chain: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("stationary solve did not converge (residual {residual:e})")]
    Solver { residual: f64 },
    #[error("empty arm list")]
    NoArms,
    #[error("state {state} out of range for a {states}-state chain")]
    StateOutOfRange { state: usize, states: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Outcome of [`validate_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub irreducible: bool,
    /// Period of the active matrix's support graph (`None` when reducible or malformed).
    pub period: Option<usize>,
    /// Detailed balance under the active matrix. `None` if it could not be evaluated.
    pub reversible: Option<bool>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Non-fatal findings. CEE runs on non-reversible chains but its
    /// regret guarantee assumes reversibility.
    pub fn warnings(&self) -> Vec<String> {
        match self.reversible {
            Some(false) => vec!["active matrix is not reversible (detailed balance fails)".into()],
            _ => Vec::new(),
        }
    }
}

/// Square row-stochastic matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    fn from_rows_unchecked(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            data.extend_from_slice(r);
        }
        TransitionMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        TransitionMatrix { n, data }
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn right_apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(p, x)| p * x).sum())
            .collect()
    }

    fn cumulative_rows(&self) -> Vec<f64> {
        let mut cdf = Vec::with_capacity(self.data.len());
        for i in 0..self.n {
            let mut acc = 0.0;
            for &p in self.row(i) {
                acc += p;
                cdf.push(acc);
            }
        }
        cdf
    }
}

fn check_matrix(rows: &[Vec<f64>], n: usize, role: MatrixRole, out: &mut Vec<Violation>) -> bool {
    let before = out.len();
    if rows.len() != n {
        out.push(Violation::Shape {
            matrix: role,
            rows: rows.len(),
            expected: n,
        });
        return false;
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            out.push(Violation::RaggedRow {
                matrix: role,
                row: i,
                len: row.len(),
                expected: n,
            });
            continue;
        }
        for (j, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                out.push(Violation::EntryOutOfRange {
                    matrix: role,
                    row: i,
                    col: j,
                    value: p,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > STOCHASTIC_TOL {
            out.push(Violation::RowSum {
                matrix: role,
                row: i,
                sum,
            });
        }
    }
    out.len() == before
}

/// Reachability from state 0 along positive entries; returns BFS levels.
fn bfs_levels(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    level[0] = Some(0);
    queue.push_back(0);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for v in 0..n {
            if level[v].is_none() && edge(u, v) {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Strong connectivity and period of the support graph of `p`.
///
/// The period of an irreducible chain is the gcd over all edges `u -> v` of
/// `level(u) + 1 - level(v)` where `level` is the BFS depth from any root.
pub fn support_structure(p: &TransitionMatrix) -> (bool, Option<usize>) {
    let n = p.states();
    if n == 0 {
        return (false, None);
    }
    let forward = bfs_levels(n, |u, v| p.get(u, v) > 0.0);
    let backward = bfs_levels(n, |u, v| p.get(v, u) > 0.0);
    let irreducible = forward.iter().all(Option::is_some) && backward.iter().all(Option::is_some);
    if !irreducible {
        return (false, None);
    }
    let mut period = 0usize;
    for u in 0..n {
        for v in 0..n {
            if p.get(u, v) > 0.0 {
                let lu = forward[u].unwrap() as i64;
                let lv = forward[v].unwrap() as i64;
                period = gcd(period, (lu + 1 - lv).unsigned_abs() as usize);
            }
        }
    }
    (true, Some(period))
}

/// Checks a raw chain definition.
pub fn validate_chain(active: &[Vec<f64>], passive: &[Vec<f64>], rewards: &[f64]) -> ValidationReport {
    let n = rewards.len();
    let mut violations = Vec::new();
    if n == 0 {
        violations.push(Violation::Empty);
        return ValidationReport {
            violations,
            irreducible: false,
            period: None,
            reversible: None,
        };
    }
    let active_ok = check_matrix(active, n, MatrixRole::Active, &mut violations);
    check_matrix(passive, n, MatrixRole::Passive, &mut violations);
    for (state, &value) in rewards.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            violations.push(Violation::RewardOutOfRange { state, value });
        }
    }
    let mut report = ValidationReport {
        violations,
        irreducible: false,
        period: None,
        reversible: None,
    };
    if !active_ok {
        return report;
    }
    let p = TransitionMatrix::from_rows_unchecked(active);
    let (irreducible, period) = support_structure(&p);
    report.irreducible = irreducible;
    report.period = period;
    if !irreducible {
        report.violations.push(Violation::Reducible);
        return report;
    }
    if let Some(d) = period.filter(|&d| d != 1) {
        report.violations.push(Violation::Periodic { period: d });
        return report;
    }
    if let Ok(pi) = stationary_distribution(&p) {
        report.reversible = Some(is_reversible(&p, &pi));
    }
    report
}

fn is_reversible(p: &TransitionMatrix, pi: &[f64]) -> bool {
    let n = p.states();
    (0..n).all(|x| (0..n).all(|y| (pi[x] * p.get(x, y) - pi[y] * p.get(y, x)).abs() <= STATIONARY_TOL))
}

fn fixed_point_residual(p: &TransitionMatrix, pi: &[f64]) -> f64 {
    p.left_apply(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn solve_direct(p: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = p.states();
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = p.to_dmatrix().transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    Some(x.iter().copied().collect())
}

fn solve_power(p: &TransitionMatrix, start: Option<Vec<f64>>) -> Vec<f64> {
    let n = p.states();
    let mut pi = start.unwrap_or_else(|| vec![1.0 / n as f64; n]);
    for _ in 0..100_000 {
        let mut next = p.left_apply(&pi);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

/// Solves `pi P = pi`, `sum(pi) = 1` for an irreducible aperiodic `P`.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>, ChainError> {
    let n = p.states();
    let direct = if n <= DIRECT_SOLVE_MAX_STATES {
        solve_direct(p)
    } else {
        None
    };
    let clean = |mut v: Vec<f64>| {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        v
    };
    let mut pi = match direct {
        Some(v) if v.iter().all(|x| x.is_finite()) => clean(v),
        _ => solve_power(p, None),
    };
    let mut residual = fixed_point_residual(p, &pi);
    if residual > STATIONARY_TOL {
        pi = clean(solve_power(p, Some(pi)));
        residual = fixed_point_residual(p, &pi);
    }
    if residual > STATIONARY_TOL || pi.iter().any(|&x| x <= 0.0) {
        return Err(ChainError::Solver { residual });
    }
    Ok(pi)
}

/// Stationary quantities of one arm under its active matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile {
    pub pi: Vec<f64>,
    pub mu: f64,
    pub min_pi: f64,
    pub reward_sum: f64,
}

impl StationaryProfile {
    fn new(pi: Vec<f64>, rewards: &[f64]) -> Self {
        let mu = rewards.iter().zip(&pi).map(|(r, p)| r * p).sum();
        let min_pi = pi.iter().copied().fold(f64::INFINITY, f64::min);
        let reward_sum = rewards.iter().sum();
        StationaryProfile {
            pi,
            mu,
            min_pi,
            reward_sum,
        }
    }

    /// Bound on the expected deviation of cumulative reward from `mu * T`:
    /// `(min_x pi_x)^-1 * sum_x r_x`.
    pub fn deviation_constant(&self) -> f64 {
        self.reward_sum / self.min_pi
    }
}

/// Eigenvalue gaps of an arm's active matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenGaps {
    /// `1 - lambda_2(P)` with `lambda_2` the second-largest eigenvalue (by real part).
    pub plain: f64,
    /// `1 - lambda_2(P~ P)` where `P~` is the time reversal of `P`.
    pub multiplicative: f64,
}

/// A validated arm.
#[derive(Debug, Clone)]
pub struct RewardedMarkovChain {
    active: TransitionMatrix,
    passive: TransitionMatrix,
    rewards: Vec<f64>,
    profile: StationaryProfile,
    reversible: bool,
    active_cdf: Vec<f64>,
    passive_cdf: Vec<f64>,
}

impl RewardedMarkovChain {
    pub fn new(active: Vec<Vec<f64>>, passive: Vec<Vec<f64>>, rewards: Vec<f64>) -> Result<Self, ChainError> {
        let report = validate_chain(&active, &passive, &rewards);
        if !report.is_valid() {
            return Err(ChainError::Invalid(report.violations));
        }
        let active = TransitionMatrix::from_rows_unchecked(&active);
        let passive = TransitionMatrix::from_rows_unchecked(&passive);
        let pi = stationary_distribution(&active)?;
        let reversible = report.reversible.unwrap_or_else(|| is_reversible(&active, &pi));
        let profile = StationaryProfile::new(pi, &rewards);
        Ok(RewardedMarkovChain {
            active_cdf: active.cumulative_rows(),
            passive_cdf: passive.cumulative_rows(),
            active,
            passive,
            rewards,
            profile,
            reversible,
        })
    }

    /// Same matrix for active and passive transitions.
    pub fn rested_equal(active: Vec<Vec<f64>>, rewards: Vec<f64>) -> Result<Self, ChainError> {
        Self::new(active.clone(), active, rewards)
    }

    /// Two-state good/bad channel; state 0 is bad (reward `r0`), state 1 good (`r1`).
    /// Active and passive dynamics coincide.
    pub fn gilbert_elliott(p01: f64, p10: f64, r0: f64, r1: f64) -> Result<Self, ChainError> {
        Self::rested_equal(vec![vec![1.0 - p01, p01], vec![p10, 1.0 - p10]], vec![r0, r1])
    }

    pub fn states(&self) -> usize {
        self.rewards.len()
    }

    pub fn active(&self) -> &TransitionMatrix {
        &self.active
    }

    pub fn passive(&self) -> &TransitionMatrix {
        &self.passive
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn stationary(&self) -> &StationaryProfile {
        &self.profile
    }

    pub fn mu(&self) -> f64 {
        self.profile.mu
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn validation(&self) -> ValidationReport {
        validate_chain(&self.active.rows(), &self.passive.rows(), &self.rewards)
    }

    /// Time reversal `P~(x,y) = pi_y P(y,x) / pi_x`.
    pub fn time_reversal(&self) -> TransitionMatrix {
        let n = self.states();
        let pi = &self.profile.pi;
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                data[x * n + y] = pi[y] * self.active.get(y, x) / pi[x];
            }
        }
        TransitionMatrix { n, data }
    }

    pub fn eigen_gaps(&self) -> EigenGaps {
        let n = self.states();
        if n == 1 {
            return EigenGaps {
                plain: 1.0,
                multiplicative: 1.0,
            };
        }
        let mut eig: Vec<f64> = self
            .active
            .to_dmatrix()
            .complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        // Drop the Perron eigenvalue (the one nearest to 1).
        let perron = eig
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
            .map(|(i, _)| i)
            .unwrap();
        eig.remove(perron);
        let plain = 1.0 - eig[0];

        // D^{1/2} P~P D^{-1/2} = A^T A with A = D^{1/2} P D^{-1/2}.
        let pi = &self.profile.pi;
        let a = DMatrix::from_fn(n, n, |x, y| pi[x].sqrt() * self.active.get(x, y) / pi[y].sqrt());
        let sym = a.transpose() * &a;
        let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        EigenGaps {
            plain,
            multiplicative: 1.0 - ev[1],
        }
    }

    /// Samples one transition from `state`.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, played: bool, rng: &mut R) -> usize {
        let n = self.states();
        let cdf = if played { &self.active_cdf } else { &self.passive_cdf };
        let row = &cdf[state * n..(state + 1) * n];
        let u: f64 = rng.random();
        row.iter().position(|&c| u < c).unwrap_or_else(|| {
            // u landed in rounding slack above the last cumulative value:
            // take the last state with positive probability.
            (0..n)
                .rev()
                .find(|&i| row[i] > if i == 0 { 0.0 } else { row[i - 1] })
                .unwrap_or(n - 1)
        })
    }

    /// Draws a state from the stationary distribution.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.profile.pi.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.states() - 1
    }
}

/// `max_i (min_x pi^i_x)^-1 * sum_x r^i_x` over all arms.
pub fn chain_constant(chains: &[RewardedMarkovChain]) -> Result<f64, ChainError> {
    chains
        .iter()
        .map(|c| c.stationary().deviation_constant())
        .reduce(f64::max)
        .ok_or(ChainError::NoArms)
}

/// How an arm's state is initialised before the first slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    #[default]
    Stationary,
    Fixed(usize),
}

/// Result of one slot of evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub state: usize,
    /// Present only when the arm was played.
    pub reward: Option<f64>,
}

/// Mutable per-run state of one arm.
#[derive(Debug, Clone)]
pub struct ArmState {
    current: usize,
    rng: ChaCha8Rng,
}

impl ArmState {
    pub fn new(chain: &RewardedMarkovChain, init: InitialState, mut rng: ChaCha8Rng) -> Result<Self, ChainError> {
        let current = match init {
            InitialState::Stationary => chain.sample_stationary(&mut rng),
            InitialState::Fixed(s) if s < chain.states() => s,
            InitialState::Fixed(state) => {
                return Err(ChainError::StateOutOfRange {
                    state,
                    states: chain.states(),
                })
            }
        };
        Ok(ArmState { current, rng })
    }

    /// Seeds the arm's private stream from a run seed and the arm index.
    pub fn seeded(
        chain: &RewardedMarkovChain,
        init: InitialState,
        run_seed: u64,
        arm: usize,
    ) -> Result<Self, ChainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        rng.set_stream(arm as u64);
        Self::new(chain, init, rng)
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn advance(&mut self, chain: &RewardedMarkovChain, played: bool) -> Advance {
        self.current = chain.step(self.current, played, &mut self.rng);
        Advance {
            state: self.current,
            reward: played.then(|| chain.rewards()[self.current]),
        }
    }
}
