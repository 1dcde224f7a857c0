use super::{GameSetup, Policy};
use crate::error::{Error, Result};

/// Plays one arm every round.
#[derive(Clone, Debug)]
pub struct Constant {
    arm: usize,
}

impl Constant {
    pub fn new(arm: usize) -> Self {
        Self { arm }
    }
}

impl Policy for Constant {
    fn name(&self) -> String {
        format!("const:{}", self.arm + 1)
    }

    fn reset(&mut self, setup: &GameSetup) -> Result<()> {
        if self.arm >= setup.arms {
            return Err(Error::invalid(format!(
                "constant arm {} is not in [1, {}]",
                self.arm + 1,
                setup.arms
            )));
        }
        Ok(())
    }

    fn choose(&mut self, _t: u64) -> usize {
        self.arm
    }

    fn observe(&mut self, _loss: f64) {}
}
