//! Policy spec strings such as `exp3:auto`, `betc:tau=auto`, `etc:rpa=32`
//! and `const:1`. Arms are written 1-based.

use std::fmt;
use std::str::FromStr;

use super::{BatchedExp3, Constant, Exp3, ExploreThenCommit, Policy};
use crate::error::{Error, Result};

pub const POLICY_NAMES: &str = "const:<arm>, etc:rpa=<n>, exp3:auto|eta=<x>, betc:tau=auto|<n>";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tuning<T> {
    Auto,
    Fixed(T),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    /// 0-based arm.
    Constant(usize),
    ExploreThenCommit { rounds_per_arm: u64 },
    Exp3(Tuning<f64>),
    BatchedExp3(Tuning<u64>),
}

impl PolicySpec {
    pub fn build(&self) -> Result<Box<dyn Policy>> {
        Ok(match *self {
            PolicySpec::Constant(arm) => Box::new(Constant::new(arm)),
            PolicySpec::ExploreThenCommit { rounds_per_arm } => {
                Box::new(ExploreThenCommit::new(rounds_per_arm)?)
            }
            PolicySpec::Exp3(t) => Box::new(Exp3::new(t)?),
            PolicySpec::BatchedExp3(t) => Box::new(BatchedExp3::new(t)?),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Constant(arm) => write!(f, "const:{}", arm + 1),
            PolicySpec::ExploreThenCommit { rounds_per_arm } => write!(f, "etc:rpa={rounds_per_arm}"),
            PolicySpec::Exp3(Tuning::Auto) => f.write_str("exp3:auto"),
            PolicySpec::Exp3(Tuning::Fixed(eta)) => write!(f, "exp3:eta={eta}"),
            PolicySpec::BatchedExp3(Tuning::Auto) => f.write_str("betc:tau=auto"),
            PolicySpec::BatchedExp3(Tuning::Fixed(tau)) => write!(f, "betc:tau={tau}"),
        }
    }
}

fn bad(spec: &str, reason: impl Into<String>) -> Error {
    Error::PolicySpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn param<'a>(spec: &str, arg: &'a str, key: &str) -> Result<&'a str> {
    match arg.split_once('=') {
        Some((k, v)) if k == key => Ok(v),
        Some((k, _)) => Err(bad(spec, format!("unknown parameter `{k}`, expected `{key}`"))),
        None => Ok(arg),
    }
}

fn number<T: FromStr>(spec: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(spec, format!("`{value}` is not a valid number")))
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        match name {
            "const" => {
                let arm: usize = number(spec, param(spec, arg, "arm")?)?;
                if arm == 0 {
                    return Err(bad(spec, "arms are numbered from 1"));
                }
                Ok(PolicySpec::Constant(arm - 1))
            }
            "etc" => {
                let rpa: u64 = number(spec, param(spec, arg, "rpa")?)?;
                if rpa == 0 {
                    return Err(bad(spec, "rounds per arm must be positive"));
                }
                Ok(PolicySpec::ExploreThenCommit { rounds_per_arm: rpa })
            }
            "exp3" => match param(spec, arg, "eta")? {
                "auto" | "" => Ok(PolicySpec::Exp3(Tuning::Auto)),
                v => {
                    let eta: f64 = number(spec, v)?;
                    if !(eta > 0.0 && eta.is_finite()) {
                        return Err(bad(spec, "learning rate must be positive"));
                    }
                    Ok(PolicySpec::Exp3(Tuning::Fixed(eta)))
                }
            },
            "betc" => match param(spec, arg, "tau")? {
                "auto" | "" => Ok(PolicySpec::BatchedExp3(Tuning::Auto)),
                v => {
                    let tau: u64 = number(spec, v)?;
                    if tau == 0 {
                        return Err(bad(spec, "batch size must be at least 1"));
                    }
                    Ok(PolicySpec::BatchedExp3(Tuning::Fixed(tau)))
                }
            },
            other => Err(Error::UnknownPolicy {
                name: other.to_string(),
                available: POLICY_NAMES.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        assert_eq!("exp3:auto".parse::<PolicySpec>().unwrap(), PolicySpec::Exp3(Tuning::Auto));
        assert_eq!(
            "betc:tau=auto".parse::<PolicySpec>().unwrap(),
            PolicySpec::BatchedExp3(Tuning::Auto)
        );
        assert_eq!(
            "etc:rpa=32".parse::<PolicySpec>().unwrap(),
            PolicySpec::ExploreThenCommit { rounds_per_arm: 32 }
        );
        assert_eq!("const:1".parse::<PolicySpec>().unwrap(), PolicySpec::Constant(0));
        assert_eq!(
            "exp3:eta=0.25".parse::<PolicySpec>().unwrap(),
            PolicySpec::Exp3(Tuning::Fixed(0.25))
        );
        assert_eq!(
            "betc:16".parse::<PolicySpec>().unwrap(),
            PolicySpec::BatchedExp3(Tuning::Fixed(16))
        );
    }

    #[test]
    fn display_round_trips() {
        for s in ["exp3:auto", "exp3:eta=0.125", "betc:tau=auto", "betc:tau=7", "etc:rpa=3", "const:2"] {
            let spec: PolicySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.build().unwrap().name(), s);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!("ucb:1".parse::<PolicySpec>(), Err(Error::UnknownPolicy { .. })));
        assert!("const:0".parse::<PolicySpec>().is_err());
        assert!("etc:tau=3".parse::<PolicySpec>().is_err());
        assert!("exp3:eta=-1".parse::<PolicySpec>().is_err());
        assert!("betc:tau=x".parse::<PolicySpec>().is_err());
    }
}
