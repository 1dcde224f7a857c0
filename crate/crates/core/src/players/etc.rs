use super::{GameSetup, Policy};
use crate::error::{Error, Result};

/// Plays arms in contiguous blocks of `rounds_per_arm`, then commits to the
/// arm with the lowest average observed loss (lowest index on ties).
#[derive(Clone, Debug)]
pub struct ExploreThenCommit {
    rounds_per_arm: u64,
    sums: Vec<f64>,
    explore_rounds: u64,
    committed: Option<usize>,
    last: usize,
}

impl ExploreThenCommit {
    pub fn new(rounds_per_arm: u64) -> Result<Self> {
        if rounds_per_arm == 0 {
            return Err(Error::invalid("rounds per arm must be positive"));
        }
        Ok(Self {
            rounds_per_arm,
            sums: Vec::new(),
            explore_rounds: 0,
            committed: None,
            last: 0,
        })
    }

    /// The arm chosen after exploration, once exploration is over.
    pub fn committed(&self) -> Option<usize> {
        self.committed
    }
}

impl Policy for ExploreThenCommit {
    fn name(&self) -> String {
        format!("etc:rpa={}", self.rounds_per_arm)
    }

    fn reset(&mut self, setup: &GameSetup) -> Result<()> {
        let budget = self.rounds_per_arm.checked_mul(setup.arms as u64);
        if budget.is_none_or(|b| b > setup.horizon) {
            return Err(Error::invalid(format!(
                "exploration budget {} x {} exceeds T = {}",
                setup.arms, self.rounds_per_arm, setup.horizon
            )));
        }
        self.sums = vec![0.0; setup.arms];
        self.explore_rounds = budget.unwrap_or(0);
        self.committed = None;
        Ok(())
    }

    fn choose(&mut self, t: u64) -> usize {
        self.last = if t <= self.explore_rounds {
            ((t - 1) / self.rounds_per_arm) as usize
        } else {
            *self.committed.get_or_insert_with(|| {
                // Equal block lengths, so comparing sums compares averages.
                let mut best = 0;
                for (i, &s) in self.sums.iter().enumerate() {
                    if s < self.sums[best] {
                        best = i;
                    }
                }
                best
            })
        };
        self.last
    }

    fn observe(&mut self, loss: f64) {
        if self.committed.is_none() {
            self.sums[self.last] += loss;
        }
    }
}
