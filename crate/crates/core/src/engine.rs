//! Plays a policy against a loss sequence with exact regret and switch
//! accounting.
//!
//! Round 1 is a switch from a sentinel `X_0` that is not an action, unless
//! `first_round_free` is set, in which case `X_0` is arm 0 and round 1 costs
//! a switch only when `X_1 ≠ 0`. A switch between two arms counts toward
//! both in `switches_per_arm`; the sentinel switch counts only toward `X_1`,
//! so `Σ M_i = 2M − 1{sentinel switch}`.

use rayon::prelude::*;

use crate::adversary::{generate, AdversaryConfig, LossSequence};
use crate::error::{Error, Result};
use crate::players::{GameSetup, Policy, PolicySpec};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameConfig {
    pub switch_cost: f64,
    pub record_actions: bool,
    pub first_round_free: bool,
    pub policy_seed: u64,
}

impl GameConfig {
    pub fn new(switch_cost: f64) -> Self {
        Self {
            switch_cost,
            record_actions: false,
            first_round_free: false,
            policy_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameResult {
    pub policy: String,
    pub horizon: u64,
    pub arms: usize,
    pub switch_cost: f64,
    pub first_round_free: bool,
    pub adversary_seed: Option<u64>,
    pub policy_seed: u64,
    pub chi: Option<usize>,
    /// `Σ_t L_t(X_t)`, without switching costs.
    pub cumulative_loss: f64,
    /// `M`.
    pub switches: u64,
    /// `M_i`.
    pub switches_per_arm: Vec<u64>,
    /// `N_i`.
    pub plays_per_arm: Vec<u64>,
    /// Whether round 1 was charged as a switch from the sentinel.
    pub sentinel_switch: bool,
    /// `R = Σ L_t(X_t) + c M − min_x Σ L_t(x)`.
    pub regret: f64,
    /// `R′`, the same with unclipped losses, when they were retained.
    pub regret_unclipped: Option<f64>,
    pub best_fixed_loss: f64,
    /// Lowest-index minimizer of the column totals.
    pub best_arm: usize,
    pub actions: Option<Vec<usize>>,
}

impl GameResult {
    /// Regret without switching costs.
    pub fn loss_regret(&self) -> f64 {
        self.cumulative_loss - self.best_fixed_loss
    }

    /// Plays of the planted best arm.
    pub fn plays_of_chi(&self) -> Option<u64> {
        self.chi.map(|c| self.plays_per_arm[c])
    }

    /// Arm with the most plays (lowest index on ties).
    pub fn majority_arm(&self) -> usize {
        argmax_first(&self.plays_per_arm)
    }

    /// Checks `Σ N_i = T` and `Σ M_i = 2M − 1{sentinel switch}`.
    pub fn check_identities(&self) -> std::result::Result<(), String> {
        let plays: u64 = self.plays_per_arm.iter().sum();
        if plays != self.horizon {
            return Err(format!("sum of N_i is {plays}, expected T = {}", self.horizon));
        }
        let per_arm: u64 = self.switches_per_arm.iter().sum();
        let expected = 2 * self.switches - u64::from(self.sentinel_switch);
        if per_arm != expected {
            return Err(format!(
                "sum of M_i is {per_arm}, expected {expected} (M = {}, sentinel = {})",
                self.switches, self.sentinel_switch
            ));
        }
        Ok(())
    }

    /// Recomputes `R` from the recorded actions.
    pub fn recompute_regret(&self, seq: &LossSequence) -> Result<f64> {
        let actions = self.actions.as_ref().ok_or(Error::MissingActions)?;
        Ok(regret_of_actions(seq, actions, self.switch_cost, self.first_round_free))
    }
}

fn argmax_first(v: &[u64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Counts switches of an action sequence under the given `X_0` convention.
pub fn count_switches(actions: &[usize], first_round_free: bool) -> u64 {
    let mut prev = first_round_free.then_some(0);
    let mut m = 0;
    for &a in actions {
        if prev != Some(a) {
            m += 1;
        }
        prev = Some(a);
    }
    m
}

/// `R` for a fixed action sequence, evaluated directly from the losses.
pub fn regret_of_actions(seq: &LossSequence, actions: &[usize], switch_cost: f64, first_round_free: bool) -> f64 {
    let incurred: f64 = actions
        .iter()
        .enumerate()
        .map(|(i, &a)| seq.loss(i as u64 + 1, a))
        .sum();
    let best = seq.column_totals().into_iter().fold(f64::INFINITY, f64::min);
    incurred + switch_cost * count_switches(actions, first_round_free) as f64 - best
}

pub fn run_game(seq: &LossSequence, policy: &mut dyn Policy, cfg: &GameConfig) -> Result<GameResult> {
    let horizon = seq.horizon();
    let arms = seq.arms();
    policy.reset(&GameSetup {
        horizon,
        arms,
        switch_cost: cfg.switch_cost,
        seed: cfg.policy_seed,
    })?;

    let with_unclipped = seq.has_unclipped();
    let mut prev = cfg.first_round_free.then_some(0usize);
    let mut switches = 0u64;
    let mut switches_per_arm = vec![0u64; arms];
    let mut plays_per_arm = vec![0u64; arms];
    let mut sentinel_switch = false;
    let mut cumulative_loss = 0.0;
    let mut cumulative_unclipped = 0.0;
    let mut actions = cfg.record_actions.then(|| Vec::with_capacity(horizon as usize));

    for t in 1..=horizon {
        let action = policy.choose(t);
        if action >= arms {
            return Err(Error::ProtocolViolation {
                round: t,
                action: action + 1,
                arms,
            });
        }
        if prev != Some(action) {
            switches += 1;
            switches_per_arm[action] += 1;
            match prev {
                Some(p) => switches_per_arm[p] += 1,
                None => sentinel_switch = true,
            }
        }
        prev = Some(action);
        plays_per_arm[action] += 1;

        let loss = seq.loss(t, action);
        cumulative_loss += loss;
        if with_unclipped {
            cumulative_unclipped += seq.unclipped(t, action)?;
        }
        if let Some(a) = actions.as_mut() {
            a.push(action);
        }
        policy.observe(loss);
    }

    let totals = seq.column_totals();
    let best_arm = argmin_first(&totals);
    let best_fixed_loss = totals[best_arm];
    let switching = cfg.switch_cost * switches as f64;
    let regret = cumulative_loss + switching - best_fixed_loss;
    let regret_unclipped = if with_unclipped {
        let best = seq
            .unclipped_column_totals()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Some(cumulative_unclipped + switching - best)
    } else {
        None
    };

    Ok(GameResult {
        policy: policy.name(),
        horizon,
        arms,
        switch_cost: cfg.switch_cost,
        first_round_free: cfg.first_round_free,
        adversary_seed: seq.config().map(|c| c.seed),
        policy_seed: cfg.policy_seed,
        chi: seq.chi(),
        cumulative_loss,
        switches,
        switches_per_arm,
        plays_per_arm,
        sentinel_switch,
        regret,
        regret_unclipped,
        best_fixed_loss,
        best_arm,
        actions,
    })
}

/// Settings shared by every trial of a batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSettings {
    pub switch_cost: f64,
    pub record_actions: bool,
    pub first_round_free: bool,
}

impl TrialSettings {
    pub fn new(switch_cost: f64) -> Self {
        Self {
            switch_cost,
            record_actions: false,
            first_round_free: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub trial: u64,
    pub adversary_seed: u64,
    pub policy_seed: u64,
    pub result: std::result::Result<GameResult, String>,
}

/// Adversary and policy seeds for trial `trial` of a batch.
pub fn trial_seeds(seed_base: u64, horizon: u64, trial: u64) -> (u64, u64) {
    (
        seeds::derive(seed_base, &[horizon, trial, 0]),
        seeds::derive(seed_base, &[horizon, trial, 1]),
    )
}

/// Runs `n_trials` independent games, each with a fresh adversary seed and a
/// fresh policy seed derived from `seed_base`. Output is ordered by trial and
/// does not depend on how many threads execute it. Failed trials are
/// reported in place.
pub fn run_trials_with<F>(
    template: &AdversaryConfig,
    make_policy: F,
    settings: &TrialSettings,
    n_trials: u64,
    seed_base: u64,
) -> Vec<TrialOutcome>
where
    F: Fn() -> Result<Box<dyn Policy>> + Sync,
{
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (adversary_seed, policy_seed) = trial_seeds(seed_base, template.horizon, trial);
            let result = (|| {
                let seq = generate(&template.with_seed(adversary_seed))?;
                let mut policy = make_policy()?;
                let cfg = GameConfig {
                    switch_cost: settings.switch_cost,
                    record_actions: settings.record_actions,
                    first_round_free: settings.first_round_free,
                    policy_seed,
                };
                run_game(&seq, policy.as_mut(), &cfg)
            })()
            .map_err(|e| e.to_string());
            TrialOutcome {
                trial,
                adversary_seed,
                policy_seed,
                result,
            }
        })
        .collect()
}

pub fn run_trials(
    template: &AdversaryConfig,
    spec: &PolicySpec,
    settings: &TrialSettings,
    n_trials: u64,
    seed_base: u64,
) -> Vec<TrialOutcome> {
    run_trials_with(template, || spec.build(), settings, n_trials, seed_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::players::{Constant, Exp3};

    fn flat(horizon: u64, epsilon: f64) -> LossSequence {
        generate(&AdversaryConfig {
            epsilon: Some(epsilon),
            sigma: Some(0.0),
            chi: Some(0),
            ..AdversaryConfig::new(horizon, 2, 1.0, 0)
        })
        .unwrap()
    }

    struct Alternate;

    impl Policy for Alternate {
        fn name(&self) -> String {
            "alternate".into()
        }
        fn reset(&mut self, _: &GameSetup) -> Result<()> {
            Ok(())
        }
        fn choose(&mut self, t: u64) -> usize {
            (t % 2) as usize
        }
        fn observe(&mut self, _: f64) {}
    }

    struct Rogue;

    impl Policy for Rogue {
        fn name(&self) -> String {
            "rogue".into()
        }
        fn reset(&mut self, _: &GameSetup) -> Result<()> {
            Ok(())
        }
        fn choose(&mut self, t: u64) -> usize {
            if t == 4 { 7 } else { 0 }
        }
        fn observe(&mut self, _: f64) {}
    }

    #[test]
    fn comparator_pays_only_the_switch() {
        let seq = flat(10, 0.1);
        let r = run_game(&seq, &mut Constant::new(0), &GameConfig::new(1.0)).unwrap();
        assert!((r.regret - 1.0).abs() < 1e-12);
        assert_eq!(r.switches, 1);
        assert!(r.sentinel_switch);
        assert_eq!(r.switches_per_arm, vec![1, 0]);
        r.check_identities().unwrap();
    }

    #[test]
    fn wrong_constant_pays_the_gap() {
        let seq = flat(10, 0.1);
        let r = run_game(&seq, &mut Constant::new(1), &GameConfig::new(1.0)).unwrap();
        assert!((r.regret - 2.0).abs() < 1e-12, "{}", r.regret);
        assert_eq!(r.regret_unclipped, Some(r.regret));
    }

    #[test]
    fn alternating_on_equal_losses() {
        let seq = flat(10, 0.0);
        let cfg = GameConfig { record_actions: true, ..GameConfig::new(1.0) };
        let r = run_game(&seq, &mut Alternate, &cfg).unwrap();
        assert!((r.regret - 10.0).abs() < 1e-12);
        assert_eq!(r.switches, 10);
        assert_eq!(r.switches_per_arm.iter().sum::<u64>(), 19);
        r.check_identities().unwrap();
        assert!((r.recompute_regret(&seq).unwrap() - r.regret).abs() < 1e-12);
    }

    #[test]
    fn first_round_free_uses_arm_zero() {
        let seq = flat(10, 0.1);
        let cfg = GameConfig { first_round_free: true, ..GameConfig::new(1.0) };
        let r = run_game(&seq, &mut Constant::new(0), &cfg).unwrap();
        assert_eq!(r.switches, 0);
        assert!(r.regret.abs() < 1e-12);
        let r = run_game(&seq, &mut Constant::new(1), &cfg).unwrap();
        assert_eq!(r.switches, 1);
        assert_eq!(r.switches_per_arm, vec![1, 1]);
        r.check_identities().unwrap();
    }

    #[test]
    fn out_of_range_action_is_a_protocol_violation() {
        let seq = flat(10, 0.1);
        match run_game(&seq, &mut Rogue, &GameConfig::new(1.0)) {
            Err(Error::ProtocolViolation { round: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trials_are_deterministic_and_ordered() {
        let template = AdversaryConfig::new(256, 2, 1.0, 0);
        let spec: PolicySpec = "exp3:auto".parse().unwrap();
        let a = run_trials(&template, &spec, &TrialSettings::new(1.0), 6, 99);
        let b = run_trials(&template, &spec, &TrialSettings::new(1.0), 6, 99);
        assert_eq!(a.len(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.trial, y.trial);
            assert_eq!(x.result.as_ref().unwrap(), y.result.as_ref().unwrap());
        }
        assert!(a.iter().enumerate().all(|(i, o)| o.trial == i as u64));
    }

    #[test]
    fn single_trial_matches_run_game() {
        let template = AdversaryConfig::new(128, 2, 1.0, 0);
        let out = run_trials_with(&template, || Ok(Box::new(Exp3::auto())), &TrialSettings::new(1.0), 1, 5);
        let o = &out[0];
        let seq = generate(&template.with_seed(o.adversary_seed)).unwrap();
        let cfg = GameConfig { policy_seed: o.policy_seed, ..GameConfig::new(1.0) };
        let direct = run_game(&seq, &mut Exp3::auto(), &cfg).unwrap();
        assert_eq!(o.result.as_ref().unwrap(), &direct);
    }

    #[test]
    fn failures_are_reported_per_trial() {
        let template = AdversaryConfig::new(16, 2, 1.0, 0);
        let spec: PolicySpec = "etc:rpa=9".parse().unwrap();
        let out = run_trials(&template, &spec, &TrialSettings::new(1.0), 3, 1);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|o| o.result.is_err()));
    }
}
