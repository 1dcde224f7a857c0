use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GameSetup, Policy, Tuning};
use crate::error::{Error, Result};
use crate::seeds;

/// `√(2 ln k / (T k))`, the fixed-horizon tuning.
pub fn auto_learning_rate(horizon: u64, arms: usize) -> f64 {
    (2.0 * (arms as f64).ln() / (horizon as f64 * arms as f64)).sqrt()
}

/// EXP3 with importance-weighted loss estimates and no explicit exploration
/// mixing.
///
/// Weights are kept as logs (`−η · Σ ℓ̂`) and normalized by subtracting the
/// maximum before exponentiating.
#[derive(Clone, Debug)]
pub struct Exp3 {
    tuning: Tuning<f64>,
    eta: f64,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    rng: ChaCha8Rng,
    last: usize,
}

impl Exp3 {
    pub fn new(tuning: Tuning<f64>) -> Result<Self> {
        if let Tuning::Fixed(eta) = tuning {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!("learning rate must be positive, got {eta}")));
            }
        }
        Ok(Self {
            tuning,
            eta: 0.0,
            log_weights: Vec::new(),
            probs: Vec::new(),
            rng: seeds::rng(0, seeds::stream::POLICY),
            last: 0,
        })
    }

    pub fn auto() -> Self {
        Self::new(Tuning::Auto).expect("auto tuning is always valid")
    }

    pub fn learning_rate(&self) -> f64 {
        self.eta
    }

    /// Sampling distribution for the next round.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    fn refresh(&mut self) {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (p, &lw) in self.probs.iter_mut().zip(&self.log_weights) {
            *p = (lw - max).exp();
            total += *p;
        }
        for p in &mut self.probs {
            *p /= total;
        }
    }
}

impl Policy for Exp3 {
    fn name(&self) -> String {
        match self.tuning {
            Tuning::Auto => "exp3:auto".to_string(),
            Tuning::Fixed(eta) => format!("exp3:eta={eta}"),
        }
    }

    fn reset(&mut self, setup: &GameSetup) -> Result<()> {
        if setup.arms == 0 || setup.horizon == 0 {
            return Err(Error::invalid("EXP3 needs at least one arm and one round"));
        }
        self.eta = match self.tuning {
            Tuning::Auto => auto_learning_rate(setup.horizon, setup.arms),
            Tuning::Fixed(eta) => eta,
        };
        self.log_weights = vec![0.0; setup.arms];
        self.probs = vec![1.0 / setup.arms as f64; setup.arms];
        self.rng = seeds::rng(setup.seed, seeds::stream::POLICY);
        Ok(())
    }

    fn choose(&mut self, _t: u64) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = Some(i);
                break;
            }
        }
        // Rounding can leave acc marginally below u.
        self.last = pick.unwrap_or_else(|| {
            self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        });
        self.last
    }

    fn observe(&mut self, loss: f64) {
        let estimate = loss / self.probs[self.last];
        self.log_weights[self.last] -= self.eta * estimate;
        self.refresh();
    }
}
