//! Declarative experiment description, stored as TOML.
//!
//! ```toml
//! seed_base = 7            # required
//! trials = 200
//! policies = ["exp3:auto", "betc:tau=auto"]
//! output_dir = "out"       # optional
//! first_round_free = false
//!
//! [adversary]
//! horizons = [256, 512, 1024, 2048]
//! arms = 2
//! switch_cost = 1.0
//! variant = "clipped"      # or "binary"
//! # epsilon, sigma, chi (1-based), baseline: testing overrides
//!
//! [emit]
//! actions = false
//! unclipped = true
//! plots = true
//! ```
//!
//! Command-line flags override file values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryConfig, Variant};
use crate::error::{Error, Result};
use crate::players::PolicySpec;

fn default_trials() -> u64 {
    100
}

fn default_arms() -> usize {
    2
}

fn default_cost() -> f64 {
    1.0
}

fn default_variant() -> Variant {
    Variant::Clipped
}

fn yes() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryBlock {
    pub horizons: Vec<u64>,
    #[serde(default = "default_arms")]
    pub arms: usize,
    #[serde(default = "default_cost")]
    pub switch_cost: f64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitFlags {
    #[serde(default)]
    pub actions: bool,
    #[serde(default = "yes")]
    pub unclipped: bool,
    #[serde(default = "yes")]
    pub plots: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            actions: false,
            unclipped: true,
            plots: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed_base: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub policies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub first_round_free: bool,
    pub adversary: AdversaryBlock,
    #[serde(default)]
    pub emit: EmitFlags,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.adversary.horizons.is_empty() {
            return Err(Error::invalid("adversary.horizons is empty"));
        }
        if let Some(t) = self.adversary.horizons.iter().find(|&&t| t < 2) {
            return Err(Error::invalid(format!("horizon must be at least 2, got {t}")));
        }
        if self.adversary.arms < 2 {
            return Err(Error::invalid("adversary.arms must be at least 2"));
        }
        if self.adversary.chi == Some(0) {
            return Err(Error::invalid("adversary.chi is 1-based"));
        }
        if self.policies.is_empty() {
            return Err(Error::invalid("no policies given"));
        }
        self.policy_specs()?;
        Ok(())
    }

    pub fn policy_specs(&self) -> Result<Vec<PolicySpec>> {
        self.policies.iter().map(|p| p.parse()).collect()
    }

    /// Adversary settings for the first horizon; sweeps substitute the rest.
    pub fn adversary_template(&self) -> AdversaryConfig {
        let a = &self.adversary;
        AdversaryConfig {
            variant: a.variant,
            epsilon: a.epsilon,
            sigma: a.sigma,
            chi: a.chi.map(|c| c - 1),
            baseline: a.baseline,
            retain_unclipped: Some(self.emit.unclipped),
            ..AdversaryConfig::new(a.horizons[0], a.arms, a.switch_cost, self.seed_base)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"
seed_base = 7
trials = 5
policies = ["exp3:auto", "betc:tau=auto"]

[adversary]
horizons = [256, 512, 1024]
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.adversary.arms, 2);
        assert_eq!(cfg.adversary.switch_cost, 1.0);
        assert_eq!(cfg.adversary.variant, Variant::Clipped);
        assert!(cfg.emit.plots && cfg.emit.unclipped && !cfg.emit.actions);
        assert_eq!(cfg.policy_specs().unwrap().len(), 2);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = SAMPLE.replace("seed_base = 7", "");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn rejects_unknown_policies_and_fields() {
        assert!(ExperimentConfig::parse(&SAMPLE.replace("exp3:auto", "ucb")).is_err());
        assert!(ExperimentConfig::parse(&format!("{SAMPLE}\nbogus = 1\n")).is_err());
        assert!(ExperimentConfig::parse(&SAMPLE.replace("256, ", "1, ")).is_err());
    }

    fn policy() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("exp3:auto".to_string()),
            Just("betc:tau=auto".to_string()),
            (1u64..64).prop_map(|n| format!("etc:rpa={n}")),
            (1usize..4).prop_map(|a| format!("const:{a}")),
            (1u64..100).prop_map(|n| format!("betc:tau={n}")),
        ]
    }

    proptest! {
        #[test]
        fn parse_serialize_parse_is_identity(
            seed_base in 0u64..=i64::MAX as u64,
            trials in 1u64..1000,
            horizons in prop::collection::vec(2u64..1_000_000, 1..6),
            arms in 2usize..8,
            switch_cost in 0.0f64..100.0,
            binary in any::<bool>(),
            epsilon in prop::option::of(0.0f64..0.2),
            chi in prop::option::of(1usize..3),
            policies in prop::collection::vec(policy(), 1..4),
            actions in any::<bool>(),
            first_round_free in any::<bool>(),
        ) {
            let cfg = ExperimentConfig {
                seed_base,
                trials,
                policies,
                output_dir: Some("out".into()),
                first_round_free,
                adversary: AdversaryBlock {
                    horizons,
                    arms,
                    switch_cost,
                    variant: if binary { Variant::Binary } else { Variant::Clipped },
                    epsilon,
                    sigma: None,
                    chi,
                    baseline: None,
                },
                emit: EmitFlags { actions, ..EmitFlags::default() },
            };
            let text = cfg.to_toml().unwrap();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_toml().unwrap(), text);
        }
    }
}
