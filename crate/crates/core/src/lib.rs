//! Index policies for restless multi-armed bandits with Markovian arms,
//! finite-time regret bounds, and a simulation harness.

pub mod baselines;
pub mod bounds;
pub mod cee;
pub mod concentration;
pub mod handshake;
pub mod magnitude;
pub mod markov;
pub mod schedule;
pub mod sim;
