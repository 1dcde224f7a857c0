//! Invariant suites shared by the `verify` command and the test suite.
//!
//! The bit-combinatorics checks are exact and take any [`ParentMap`], which
//! lets fault-injection tests hand in a corrupted parent function. The
//! statistical checks compare Monte Carlo rates against their bounds plus
//! three binomial standard errors.

use rand::Rng;
use rayon::prelude::*;

use crate::adversary::AdversaryConfig;
use crate::analysis::{binomial_se, clipping_free_rate, verify_drift, CutSwitchAuditor};
use crate::error::Result;
use crate::process::{bit_length, ParentFunction, ParentKind, ParentMap};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Exact checks up to `T = 2^12`.
    Quick,
    /// Exact checks up to `T = 2^16` plus the statistical suites.
    Full,
}

impl Level {
    pub fn max_horizon(self) -> u64 {
        match self {
            Level::Quick => 1 << 12,
            Level::Full => 1 << 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Seed that reproduces a statistical failure.
    pub seed: Option<u64>,
}

impl CheckOutcome {
    fn exact(name: &str, failure: Option<String>, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: failure.is_none(),
            detail: failure.unwrap_or(detail),
            seed: None,
        }
    }
}

/// The multi-scale walk with one bit-level defect, for fault injection:
/// multiples of 12 point at their predecessor.
pub struct CorruptedMrw(pub u64);

impl ParentMap for CorruptedMrw {
    fn horizon(&self) -> u64 {
        self.0
    }

    fn parent_of(&self, t: u64) -> u64 {
        if t.is_multiple_of(12) {
            t - 1
        } else {
            t & (t - 1)
        }
    }
}

/// `ρ(t) < t` and `ρ(t)` = `t` with its lowest set bit cleared.
pub fn check_parent_bits(pf: &dyn ParentMap) -> Option<String> {
    (1..=pf.horizon()).find_map(|t| {
        let p = pf.parent_of(t);
        if p >= t {
            Some(format!("parent({t}) = {p} is not below {t}"))
        } else if p != t & (t - 1) {
            Some(format!("parent({t}) = {p}, expected {}", t & (t - 1)))
        } else {
            None
        }
    })
}

/// `|ρ*(t)| = popcount(t)` for every `t`.
pub fn check_ancestor_popcount(pf: &dyn ParentMap) -> Option<String> {
    (1..=pf.horizon()).find_map(|t| match pf.ancestor_count(t) {
        Ok(n) if n == u64::from(t.count_ones()) => None,
        Ok(n) => Some(format!("|ancestors({t})| = {n}, popcount = {}", t.count_ones())),
        Err(e) => Some(format!("ancestors({t}): {e}")),
    })
}

/// For every prefix horizon `T ≤ pf.horizon()` and every `t ≤ T`:
/// `|cut_T(t)| ≤ zeros_n(t) + 1` with `n = ⌊log₂ T⌋ + 1`, and depth and
/// width of the prefix are at most `n`.
///
/// Growing `T` by one adds round `T` to `cut(u)` for `u ∈ (ρ(T), T]` only,
/// and the bound for every other `t` can only loosen as `n` grows, so it
/// suffices to re-check the entries that changed.
pub fn check_cut_and_width(pf: &dyn ParentMap) -> Option<String> {
    let max = pf.horizon();
    let mut cut = vec![0u64; max as usize + 1];
    let (mut depth, mut width) = (0u64, 0u64);
    for horizon in 1..=max {
        let n = bit_length(horizon);
        let p = pf.parent_of(horizon);
        if p >= horizon {
            return Some(format!("parent({horizon}) = {p} is not below {horizon}"));
        }
        for u in p + 1..=horizon {
            cut[u as usize] += 1;
            let size = cut[u as usize];
            let zeros = u64::from(n - u.count_ones());
            if size > zeros + 1 {
                return Some(format!(
                    "T = {horizon}: |cut({u})| = {size} exceeds zeros + 1 = {}",
                    zeros + 1
                ));
            }
            width = width.max(size);
        }
        depth = match pf.ancestor_count(horizon) {
            Ok(d) => depth.max(d),
            Err(e) => return Some(e.to_string()),
        };
        if depth > u64::from(n) || width > u64::from(n) {
            return Some(format!(
                "T = {horizon}: depth {depth} / width {width} exceed floor(log2 T) + 1 = {n}"
            ));
        }
    }
    None
}

/// `t ∈ cut(t)`, and `s ∈ cut(u)` exactly for `u ∈ (ρ(s), s]`.
pub fn check_cut_partition(pf: &dyn ParentMap) -> Option<String> {
    for t in 1..=pf.horizon() {
        let cut = match pf.cut(t) {
            Ok(c) => c,
            Err(e) => return Some(e.to_string()),
        };
        if !cut.contains(&t) {
            return Some(format!("{t} is missing from cut({t})"));
        }
        for s in 1..=pf.horizon() {
            let expected = pf.parent_of(s) < t && t <= s;
            if cut.binary_search(&s).is_ok() != expected {
                return Some(format!("membership of {s} in cut({t}) is wrong"));
            }
        }
    }
    None
}

/// The MRW picture for `T = 7`: width 3 and edges 0→1, 0→2, 2→3, 0→4,
/// 4→5, 4→6, 6→7.
pub fn check_small_tree(pf: &dyn ParentMap) -> Option<String> {
    let expected = [0, 0, 2, 0, 4, 4, 6];
    for (i, &p) in expected.iter().enumerate() {
        let t = i as u64 + 1;
        if pf.parent_of(t) != p {
            return Some(format!("parent({t}) = {}, expected {p}", pf.parent_of(t)));
        }
    }
    let sizes: Vec<u64> = {
        let mut diff = [0i64; 9];
        for s in 1..=7u64 {
            diff[pf.parent_of(s) as usize + 1] += 1;
            diff[s as usize + 1] -= 1;
        }
        let mut acc = 0;
        (1..=7).map(|u| {
            acc += diff[u];
            acc as u64
        })
        .collect()
    };
    let width = sizes.into_iter().max().unwrap_or(0);
    (width != 3).then(|| format!("width over T = 7 is {width}, expected 3"))
}

/// Runs the exact suites against `pf`, whose horizon bounds every check.
pub fn exact_suite(pf: &dyn ParentMap) -> Vec<CheckOutcome> {
    let small = pf.horizon().min(256);
    let prefix = PrefixMap { inner: pf, horizon: small };
    vec![
        CheckOutcome::exact("small-tree", check_small_tree(pf), "T = 7 edges and width 3".into()),
        CheckOutcome::exact(
            "parent-bits",
            check_parent_bits(pf),
            format!("parent(t) < t and lowest bit cleared for t <= {}", pf.horizon()),
        ),
        CheckOutcome::exact(
            "ancestor-popcount",
            check_ancestor_popcount(pf),
            format!("|ancestors(t)| = popcount(t) for t <= {}", pf.horizon()),
        ),
        CheckOutcome::exact(
            "cut-depth-width",
            check_cut_and_width(pf),
            format!("cut, depth and width bounds for every T <= {}", pf.horizon()),
        ),
        CheckOutcome::exact(
            "cut-partition",
            check_cut_partition(&prefix),
            format!("cut membership for T = {small}"),
        ),
    ]
}

struct PrefixMap<'a> {
    inner: &'a dyn ParentMap,
    horizon: u64,
}

impl ParentMap for PrefixMap<'_> {
    fn horizon(&self) -> u64 {
        self.horizon
    }

    fn parent_of(&self, t: u64) -> u64 {
        self.inner.parent_of(t)
    }
}

/// Random action traces for fuzzing: a per-run stay probability between
/// 0 and 1, so runs range from switching every round to never switching.
pub fn fuzz_actions(rng: &mut impl Rng, horizon: u64, arms: usize) -> Vec<usize> {
    let stay: f64 = match rng.random_range(0..4) {
        0 => 0.0,
        1 => rng.random_range(0.9..1.0),
        2 => 1.0 - rng.random_range(0.0..0.01f64),
        _ => rng.random(),
    };
    let mut cur = rng.random_range(0..arms);
    (0..horizon)
        .map(|_| {
            if !rng.random_bool(stay) {
                cur = rng.random_range(0..arms);
            }
            cur
        })
        .collect()
}

/// Number of (run, arm) pairs violating the cut/switch inequality, and the
/// seed of the first violating run.
pub fn fuzz_cut_switch(horizon: u64, arms: usize, runs: u64, seed: u64) -> Result<(u64, Option<u64>)> {
    let pf = ParentFunction::mrw(horizon)?;
    let auditor = CutSwitchAuditor::new(&pf);
    let results: Vec<(u64, Option<u64>)> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = seeds::derive(seed, &[arms as u64, run]);
            let actions = fuzz_actions(&mut seeds::rng(run_seed, 0), horizon, arms);
            let mut bad = 0;
            for arm in 0..arms {
                if !auditor.audit(&actions, arm)?.holds {
                    bad += 1;
                }
            }
            Ok((bad, (bad > 0).then_some(run_seed)))
        })
        .collect::<Result<_>>()?;
    let violations = results.iter().map(|r| r.0).sum();
    let first = results.iter().find_map(|r| r.1);
    Ok((violations, first))
}

/// Drift, clipping and cut/switch suites at their documented budgets.
pub fn statistical_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for kind in ParentKind::ALL {
        let s = seeds::derive(seed, &[1, kind as u64]);
        let report = verify_drift(kind, 4096, 0.05, 0.1, 2000, s)?;
        out.push(CheckOutcome {
            name: format!("drift-{kind}"),
            passed: report.passes(),
            detail: format!(
                "exceedance {:.4} vs allowance {:.4} (radius {:.4}, depth {})",
                report.exceedances.rate(),
                report.allowance(),
                report.radius,
                report.depth
            ),
            seed: Some(s),
        });
    }
    for horizon in [64u64, 1024, 16384] {
        let s = seeds::derive(seed, &[2, horizon]);
        let est = clipping_free_rate(&AdversaryConfig::new(horizon, 2, 1.0, 0), 2000, s)?;
        let floor = 5.0 / 6.0 - 3.0 * binomial_se(5.0 / 6.0, est.trials);
        out.push(CheckOutcome {
            name: format!("clipping-T{horizon}"),
            passed: est.rate() >= floor,
            detail: format!("no-clip rate {:.4} vs floor {:.4}", est.rate(), floor),
            seed: Some(s),
        });
    }
    for arms in [2usize, 4] {
        let s = seeds::derive(seed, &[3, arms as u64]);
        let (violations, first) = fuzz_cut_switch(1024, arms, 10_000, s)?;
        out.push(CheckOutcome {
            name: format!("cut-switch-k{arms}"),
            passed: violations == 0,
            detail: format!("{violations} violations over 10000 runs"),
            seed: first.or(Some(s)),
        });
    }
    Ok(out)
}

pub fn run(level: Level, pf: Option<&dyn ParentMap>, seed: u64) -> Result<Vec<CheckOutcome>> {
    let default = ParentFunction::mrw(level.max_horizon())?;
    let pf = pf.unwrap_or(&default);
    let mut out = exact_suite(pf);
    if level == Level::Full {
        out.extend(statistical_suite(seed)?);
    }
    Ok(out)
}
