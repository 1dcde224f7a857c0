//! Bandit-feedback player policies.
//!
//! A policy only ever sees the round index and the losses of its own
//! choices: the engine calls [`Policy::choose`] and then feeds back exactly
//! `L_t(X_t)` through [`Policy::observe`]. Randomized policies draw from a
//! stream seeded in [`Policy::reset`], so a fixed seed makes them
//! deterministic functions of their observations.

mod batched;
mod constant;
mod etc;
mod exp3;
mod spec;

pub use batched::{auto_batch_size, BatchedExp3};
pub use constant::Constant;
pub use etc::ExploreThenCommit;
pub use exp3::{auto_learning_rate, Exp3};
pub use spec::{PolicySpec, Tuning, POLICY_NAMES};

use crate::error::Result;

/// What a policy is told before the first round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameSetup {
    pub horizon: u64,
    pub arms: usize,
    pub switch_cost: f64,
    pub seed: u64,
}

pub trait Policy: Send {
    /// Canonical spec string, e.g. `exp3:auto`.
    fn name(&self) -> String;

    /// Prepares for a fresh game; must be called before the first round.
    fn reset(&mut self, setup: &GameSetup) -> Result<()>;

    /// Action (0-based) for round `t ∈ [1, T]`.
    fn choose(&mut self, t: u64) -> usize;

    /// Loss of the action returned by the last `choose`.
    fn observe(&mut self, loss: f64);
}

impl Policy for Box<dyn Policy> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn reset(&mut self, setup: &GameSetup) -> Result<()> {
        (**self).reset(setup)
    }

    fn choose(&mut self, t: u64) -> usize {
        (**self).choose(t)
    }

    fn observe(&mut self, loss: f64) {
        (**self).observe(loss)
    }
}
