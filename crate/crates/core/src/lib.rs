//! Simulation of the multi-scale random walk adversary for multi-armed
//! bandits with switching costs.
//!
//! - [`process`]: parent functions, their ancestors, cuts, depth and width,
//!   and trajectory sampling.
//! - [`adversary`]: the clipped and binary loss-sequence generators.
//! - [`players`]: bandit-feedback policies (constant, explore-then-commit,
//!   EXP3, batched EXP3).
//! - [`engine`]: games, regret and switch accounting, parallel trials.
//! - [`analysis`]: cut/switch audits, drift and clipping rates, scaling fits.
//! - [`verify`]: the invariant suites behind `mrw-bandit verify`.

pub mod adversary;
pub mod analysis;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod players;
pub mod plot;
pub mod process;
pub mod seeds;
pub mod verify;

pub use adversary::{clip, default_parameters, generate, AdversaryConfig, LossSequence, Variant};
pub use engine::{run_game, run_trials, GameConfig, GameResult, TrialOutcome, TrialSettings};
pub use error::{Error, Result};
pub use players::{GameSetup, Policy, PolicySpec};
pub use process::{delta, sample_streaming, sample_trajectory, ParentFunction, ParentKind, ParentMap, ProcessTrajectory};
