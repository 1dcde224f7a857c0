//! The randomized loss-sequence generator and its binary-loss variant.
//!
//! Losses are `L′_t(x) = W_t + b − ε·1{x = χ}` with `b = 1/2`, clipped into
//! `[0, 1]`, where `W` is a multi-scale random walk with per-step deviation
//! σ. Only the walk and χ are stored: every non-χ column equals
//! `clip(W_t + b)` and the χ column is shifted down by ε, so entries are
//! reconstructed on demand. Binary losses are Bernoulli draws with the
//! clipped value as bias, taken from a counter-addressed stream so that any
//! `(t, x)` entry can be read in O(1) without materializing the matrix.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{sample_trajectory, ParentFunction, ProcessTrajectory};
use crate::seeds;

/// Above this horizon unclipped losses are dropped unless asked for.
pub const RETAIN_UNCLIPPED_MAX_HORIZON: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Clipped,
    Binary,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Clipped => "clipped",
            Variant::Binary => "binary",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clipped" => Ok(Variant::Clipped),
            "binary" => Ok(Variant::Binary),
            other => Err(Error::invalid(format!("unknown variant `{other}`"))),
        }
    }
}

pub fn clip(a: f64) -> f64 {
    a.clamp(0.0, 1.0)
}

/// Default `(ε, σ)` for horizon `T`, `k` arms and switch cost `c`:
/// `ε = (c k)^{1/3} T^{−1/3} / (9 log₂ T)` and `σ = 1 / (9 log₂ T)`.
pub fn default_parameters(horizon: u64, arms: usize, switch_cost: f64) -> Result<(f64, f64)> {
    if horizon < 2 {
        return Err(Error::invalid(format!("horizon must be at least 2, got {horizon}")));
    }
    if arms < 2 {
        return Err(Error::invalid(format!("need at least 2 arms, got {arms}")));
    }
    if !(switch_cost > 0.0 && switch_cost.is_finite()) {
        return Err(Error::invalid(format!(
            "switch cost must be positive for the default gap, got {switch_cost}"
        )));
    }
    let log2_t = (horizon as f64).log2();
    let epsilon = (switch_cost * arms as f64).cbrt() * (horizon as f64).powf(-1.0 / 3.0) / (9.0 * log2_t);
    let sigma = 1.0 / (9.0 * log2_t);
    Ok((epsilon, sigma))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryConfig {
    pub horizon: u64,
    pub arms: usize,
    pub switch_cost: f64,
    pub variant: Variant,
    pub epsilon: Option<f64>,
    pub sigma: Option<f64>,
    /// Forces the best arm (0-based). Testing only.
    pub chi: Option<usize>,
    /// Replaces the 1/2 offset in `L′`. Testing only.
    pub baseline: Option<f64>,
    /// Seed for the Bernoulli coins of the binary variant; defaults to `seed`.
    pub coin_seed: Option<u64>,
    /// Defaults to `horizon ≤ 2^20`.
    pub retain_unclipped: Option<bool>,
    pub seed: u64,
}

impl AdversaryConfig {
    pub fn new(horizon: u64, arms: usize, switch_cost: f64, seed: u64) -> Self {
        Self {
            horizon,
            arms,
            switch_cost,
            variant: Variant::Clipped,
            epsilon: None,
            sigma: None,
            chi: None,
            baseline: None,
            coin_seed: None,
            retain_unclipped: None,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// True when any testing override is set.
    pub fn has_overrides(&self) -> bool {
        self.epsilon.is_some() || self.sigma.is_some() || self.chi.is_some() || self.baseline.is_some()
    }

    /// Effective `(ε, σ)` after overrides.
    pub fn parameters(&self) -> Result<(f64, f64)> {
        if self.horizon < 2 {
            return Err(Error::invalid(format!("horizon must be at least 2, got {}", self.horizon)));
        }
        if self.arms < 2 {
            return Err(Error::invalid(format!("need at least 2 arms, got {}", self.arms)));
        }
        if !(self.switch_cost >= 0.0 && self.switch_cost.is_finite()) {
            return Err(Error::invalid(format!(
                "switch cost must be finite and nonnegative, got {}",
                self.switch_cost
            )));
        }
        let (epsilon, sigma) = match (self.epsilon, self.sigma) {
            (Some(e), Some(s)) => (e, s),
            (e, s) => {
                let (de, ds) = default_parameters(self.horizon, self.arms, self.switch_cost)?;
                (e.unwrap_or(de), s.unwrap_or(ds))
            }
        };
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be finite and nonnegative, got {epsilon}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        Ok((epsilon, sigma))
    }

    fn baseline(&self) -> f64 {
        self.baseline.unwrap_or(0.5)
    }

    fn retains_unclipped(&self) -> bool {
        self.retain_unclipped
            .unwrap_or(self.horizon <= RETAIN_UNCLIPPED_MAX_HORIZON)
    }
}

#[derive(Clone, Debug)]
enum Source {
    Walk {
        trajectory: ProcessTrajectory,
        coins: Option<Box<ChaCha8Rng>>,
    },
    /// Row-major `T × k` table supplied from outside.
    Table(Vec<f64>),
}

/// An oblivious loss sequence over `T` rounds and `k` arms.
///
/// Rounds are 1-based (`t ∈ [1, T]`), arms are 0-based.
#[derive(Clone, Debug)]
pub struct LossSequence {
    horizon: u64,
    arms: usize,
    chi: Option<usize>,
    epsilon: f64,
    sigma: f64,
    baseline: f64,
    variant: Option<Variant>,
    config: Option<AdversaryConfig>,
    source: Source,
    clipping_free: Option<bool>,
    retain_unclipped: bool,
    warnings: Vec<String>,
}

pub fn generate(config: &AdversaryConfig) -> Result<LossSequence> {
    let (epsilon, sigma) = config.parameters()?;
    let (horizon, arms) = (config.horizon, config.arms);
    if let Some(chi) = config.chi {
        if chi >= arms {
            return Err(Error::invalid(format!("forced best arm {} is not in [1, {arms}]", chi + 1)));
        }
    }
    let baseline = config.baseline();
    if !baseline.is_finite() {
        return Err(Error::invalid("baseline must be finite"));
    }

    let mut warnings = Vec::new();
    if horizon < (arms as u64).max(6) {
        warnings.push(format!(
            "T = {horizon} is below max(k, 6) = {}; the lower-bound regime does not apply",
            (arms as u64).max(6)
        ));
    }
    if epsilon >= 1.0 / 6.0 {
        warnings.push(format!("epsilon = {epsilon} is not below 1/6"));
    }

    let chi = match config.chi {
        Some(c) => c,
        None => seeds::rng(config.seed, seeds::stream::CHI).random_range(0..arms),
    };
    let trajectory = sample_trajectory(ParentFunction::mrw(horizon)?, sigma, config.seed)?;
    let clipping_free = trajectory.values[1..].iter().all(|&w| {
        let other = w + baseline;
        (0.0..=1.0).contains(&other) && (0.0..=1.0).contains(&(other - epsilon))
    });
    let coins = match config.variant {
        Variant::Clipped => None,
        Variant::Binary => Some(Box::new(seeds::rng(
            config.coin_seed.unwrap_or(config.seed),
            seeds::stream::COINS,
        ))),
    };

    Ok(LossSequence {
        horizon,
        arms,
        chi: Some(chi),
        epsilon,
        sigma,
        baseline,
        variant: Some(config.variant),
        config: Some(config.clone()),
        source: Source::Walk { trajectory, coins },
        clipping_free: Some(clipping_free),
        retain_unclipped: config.retains_unclipped(),
        warnings,
    })
}

impl LossSequence {
    /// Wraps an explicit row-major `T × k` loss table (`losses[(t−1)·k + x]`).
    pub fn from_table(horizon: u64, arms: usize, losses: Vec<f64>) -> Result<Self> {
        if horizon == 0 || arms == 0 {
            return Err(Error::invalid("table must have at least one round and one arm"));
        }
        if losses.len() as u64 != horizon * arms as u64 {
            return Err(Error::invalid(format!(
                "expected {} losses for T = {horizon}, k = {arms}, got {}",
                horizon * arms as u64,
                losses.len()
            )));
        }
        if let Some(i) = losses.iter().position(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::invalid(format!(
                "loss at t = {}, x = {} is {} (outside [0, 1])",
                i / arms + 1,
                i % arms + 1,
                losses[i]
            )));
        }
        Ok(Self {
            horizon,
            arms,
            chi: None,
            epsilon: 0.0,
            sigma: 0.0,
            baseline: 0.5,
            variant: None,
            config: None,
            source: Source::Table(losses),
            clipping_free: None,
            retain_unclipped: false,
            warnings: Vec::new(),
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// The planted best arm, when the sequence came from the generator.
    pub fn chi(&self) -> Option<usize> {
        self.chi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }

    pub fn config(&self) -> Option<&AdversaryConfig> {
        self.config.as_ref()
    }

    pub fn trajectory(&self) -> Option<&ProcessTrajectory> {
        match &self.source {
            Source::Walk { trajectory, .. } => Some(trajectory),
            Source::Table(_) => None,
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn raw(&self, t: u64, arm: usize) -> f64 {
        match &self.source {
            Source::Walk { trajectory, .. } => {
                let gap = if Some(arm) == self.chi { self.epsilon } else { 0.0 };
                trajectory.values[t as usize] + self.baseline - gap
            }
            Source::Table(table) => table[(t as usize - 1) * self.arms + arm],
        }
    }

    /// The clipped value `clip(L′_t(x))`; for the binary variant this is the
    /// bias of the coin at `(t, x)`.
    pub fn clipped_value(&self, t: u64, arm: usize) -> f64 {
        clip(self.raw(t, arm))
    }

    /// The loss `L_t(x)` the player incurs.
    pub fn loss(&self, t: u64, arm: usize) -> f64 {
        debug_assert!((1..=self.horizon).contains(&t) && arm < self.arms);
        match &self.source {
            Source::Walk { coins: Some(coins), .. } => {
                let bias = self.clipped_value(t, arm);
                let u = coin_uniform(coins, (t - 1) * self.arms as u64 + arm as u64);
                if u < bias {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.clipped_value(t, arm),
        }
    }

    /// The unclipped value `L′_t(x)`.
    pub fn unclipped(&self, t: u64, arm: usize) -> Result<f64> {
        if !self.retain_unclipped {
            return Err(Error::UnclippedDropped);
        }
        Ok(self.raw(t, arm))
    }

    pub fn has_unclipped(&self) -> bool {
        self.retain_unclipped
    }

    /// Whether no entry was altered by clipping, recomputed from `L′`.
    pub fn clipping_event_holds(&self) -> Result<bool> {
        if !self.retain_unclipped {
            return Err(Error::UnclippedDropped);
        }
        for t in 1..=self.horizon {
            for x in 0..self.arms {
                if !(0.0..=1.0).contains(&self.raw(t, x)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The clipping flag recorded during generation; available even when
    /// unclipped losses were dropped.
    pub fn clipping_free_at_generation(&self) -> Option<bool> {
        self.clipping_free
    }

    /// `Σ_t L_t(x)` for every arm.
    pub fn column_totals(&self) -> Vec<f64> {
        match &self.source {
            Source::Walk { coins: None, .. } => {
                // All non-χ columns coincide.
                let chi = self.chi.unwrap_or(0);
                let other = if self.arms > 1 { (chi + 1) % self.arms } else { chi };
                let (mut best, mut rest) = (0.0, 0.0);
                for t in 1..=self.horizon {
                    best += self.clipped_value(t, chi);
                    rest += self.clipped_value(t, other);
                }
                (0..self.arms).map(|x| if x == chi { best } else { rest }).collect()
            }
            _ => {
                let mut totals = vec![0.0; self.arms];
                for t in 1..=self.horizon {
                    for (x, total) in totals.iter_mut().enumerate() {
                        *total += self.loss(t, x);
                    }
                }
                totals
            }
        }
    }

    /// `Σ_t L′_t(x)` for every arm.
    pub fn unclipped_column_totals(&self) -> Result<Vec<f64>> {
        if !self.retain_unclipped {
            return Err(Error::UnclippedDropped);
        }
        let mut totals = vec![0.0; self.arms];
        for t in 1..=self.horizon {
            for (x, total) in totals.iter_mut().enumerate() {
                *total += self.raw(t, x);
            }
        }
        Ok(totals)
    }

    /// Row-major `T × k` table of losses.
    pub fn to_table(&self) -> Vec<f64> {
        (1..=self.horizon)
            .flat_map(|t| (0..self.arms).map(move |x| (t, x)))
            .map(|(t, x)| self.loss(t, x))
            .collect()
    }
}

/// Uniform draw in `[0, 1)` at position `index` of a counter-based stream.
fn coin_uniform(template: &ChaCha8Rng, index: u64) -> f64 {
    let mut rng = template.clone();
    rng.set_word_pos(u128::from(index) * 2);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
