use super::{Exp3, GameSetup, Policy, Tuning};
use crate::error::{Error, Result};

/// `⌈(c² T / k)^{1/3}⌉` clamped to `[1, T]`.
///
/// Balances the switching cost `c T / τ` against the batched regret
/// `√(τ T k)`, which puts the total at order `c^{1/3} k^{1/3} T^{2/3}`.
/// For `c = 1` this is `⌈(T / k)^{1/3}⌉`.
pub fn auto_batch_size(horizon: u64, arms: usize, switch_cost: f64) -> u64 {
    let raw = (switch_cost * switch_cost * horizon as f64 / arms as f64).cbrt().ceil();
    if raw.is_nan() {
        return 1;
    }
    (raw as u64).clamp(1, horizon.max(1))
}

/// EXP3 run over batches of `τ` rounds: one arm per batch, and the inner
/// learner is fed the batch's mean observed loss. At most `⌈T/τ⌉` switches.
#[derive(Clone, Debug)]
pub struct BatchedExp3 {
    tuning: Tuning<u64>,
    tau: u64,
    horizon: u64,
    inner: Exp3,
    current: usize,
    batch_sum: f64,
    batch_len: u64,
    rounds_seen: u64,
}

impl BatchedExp3 {
    pub fn new(tuning: Tuning<u64>) -> Result<Self> {
        if tuning == Tuning::Fixed(0) {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(Self {
            tuning,
            tau: 1,
            horizon: 0,
            inner: Exp3::auto(),
            current: 0,
            batch_sum: 0.0,
            batch_len: 0,
            rounds_seen: 0,
        })
    }

    pub fn batch_size(&self) -> u64 {
        self.tau
    }

    pub fn batches(&self) -> u64 {
        self.horizon.div_ceil(self.tau)
    }
}

impl Policy for BatchedExp3 {
    fn name(&self) -> String {
        match self.tuning {
            Tuning::Auto => "betc:tau=auto".to_string(),
            Tuning::Fixed(tau) => format!("betc:tau={tau}"),
        }
    }

    fn reset(&mut self, setup: &GameSetup) -> Result<()> {
        self.tau = match self.tuning {
            Tuning::Auto => auto_batch_size(setup.horizon, setup.arms, setup.switch_cost),
            Tuning::Fixed(tau) if (1..=setup.horizon).contains(&tau) => tau,
            Tuning::Fixed(tau) => {
                return Err(Error::invalid(format!(
                    "batch size {tau} is outside [1, {}]",
                    setup.horizon
                )))
            }
        };
        self.horizon = setup.horizon;
        self.inner.reset(&GameSetup {
            horizon: self.batches(),
            ..*setup
        })?;
        self.batch_sum = 0.0;
        self.batch_len = 0;
        self.rounds_seen = 0;
        Ok(())
    }

    fn choose(&mut self, t: u64) -> usize {
        if (t - 1).is_multiple_of(self.tau) {
            self.current = self.inner.choose((t - 1) / self.tau + 1);
        }
        self.current
    }

    fn observe(&mut self, loss: f64) {
        self.batch_sum += loss;
        self.batch_len += 1;
        self.rounds_seen += 1;
        if self.batch_len == self.tau || self.rounds_seen == self.horizon {
            self.inner.observe(self.batch_sum / self.batch_len as f64);
            self.batch_sum = 0.0;
            self.batch_len = 0;
        }
    }
}
