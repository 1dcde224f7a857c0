//! Parent functions and the Gaussian processes they induce.
//!
//! A parent function ρ maps every round `t ∈ [1, T]` to an earlier index
//! `ρ(t) < t` (0 is the root). The induced process is `W_0 = 0`,
//! `W_t = W_ρ(t) + ξ_t` with i.i.d. `ξ_t ~ N(0, σ²)`.
//!
//! Ancestor sets returned by [`ParentMap::ancestors`] list positive indices
//! only. [`ParentMap::ancestor_count`] counts the full chain down to and
//! including the root, which is the quantity that depth is defined over
//! (for the multi-scale walk it equals the number of one bits of `t`).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParentKind {
    /// ρ(t) = 0: independent Gaussians.
    Iid,
    /// ρ(t) = t − 1: the simple Gaussian random walk.
    SimpleWalk,
    /// ρ(t) = t − 2^δ(t): the multi-scale random walk.
    Mrw,
}

impl ParentKind {
    pub const ALL: [ParentKind; 3] = [ParentKind::Iid, ParentKind::SimpleWalk, ParentKind::Mrw];

    pub fn as_str(self) -> &'static str {
        match self {
            ParentKind::Iid => "iid",
            ParentKind::SimpleWalk => "simple-walk",
            ParentKind::Mrw => "mrw",
        }
    }
}

impl std::fmt::Display for ParentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(ParentKind::Iid),
            "simple-walk" | "simple" => Ok(ParentKind::SimpleWalk),
            "mrw" => Ok(ParentKind::Mrw),
            other => Err(Error::invalid(format!("unknown parent kind `{other}`"))),
        }
    }
}

/// Index of the lowest set bit of `t`, i.e. the largest `i` with `2^i | t`.
pub fn delta(t: u64) -> Result<u32> {
    if t == 0 {
        return Err(Error::invalid("delta is undefined at 0"));
    }
    Ok(t.trailing_zeros())
}

/// `⌊log₂ T⌋ + 1`, the number of bits needed to write any `t ∈ [1, T]`.
pub fn bit_length(horizon: u64) -> u32 {
    64 - horizon.leading_zeros()
}

/// A mapping from rounds to parents over a fixed horizon.
///
/// Implementors only supply [`ParentMap::parent_of`]; the combinatorial
/// quantities are derived from it. Custom implementations exist mainly for
/// fault injection in the verification suite.
pub trait ParentMap: Sync {
    fn horizon(&self) -> u64;

    /// ρ(t) for `t ∈ [1, horizon]`. Callers have already range checked `t`.
    fn parent_of(&self, t: u64) -> u64;

    fn parent(&self, t: u64) -> Result<u64> {
        self.check_round(t)?;
        Ok(self.parent_of(t))
    }

    fn check_round(&self, t: u64) -> Result<()> {
        if t == 0 || t > self.horizon() {
            return Err(Error::RoundOutOfRange {
                round: t,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// Positive ancestors of `t`, sorted ascending. Empty for `t = 0`.
    fn ancestors(&self, t: u64) -> Result<Vec<u64>> {
        if t > self.horizon() {
            return Err(Error::RoundOutOfRange {
                round: t,
                horizon: self.horizon(),
            });
        }
        let mut out = Vec::new();
        let mut cur = t;
        while cur != 0 {
            let p = self.parent_of(cur);
            if p >= cur {
                return Err(Error::invalid(format!("parent({cur}) = {p} is not below {cur}")));
            }
            if p != 0 {
                out.push(p);
            }
            cur = p;
        }
        out.reverse();
        Ok(out)
    }

    /// `|ρ*(t)|` counting the root: the number of parent applications needed
    /// to reach 0 from `t`.
    fn ancestor_count(&self, t: u64) -> Result<u64> {
        Ok(if t == 0 {
            0
        } else {
            self.ancestors(t)?.len() as u64 + 1
        })
    }

    fn depth(&self) -> Result<u64> {
        let mut best = 0;
        for t in 1..=self.horizon() {
            best = best.max(self.ancestor_count(t)?);
        }
        Ok(best)
    }

    /// `{s ∈ [T] : ρ(s) < t ≤ s}`, ascending.
    fn cut(&self, t: u64) -> Result<Vec<u64>> {
        self.check_round(t)?;
        Ok((t..=self.horizon()).filter(|&s| self.parent_of(s) < t).collect())
    }

    /// `|cut(t)|` for every `t ∈ [1, T]` (entry `t − 1`), computed in O(T)
    /// from the fact that `s` lies in `cut(u)` exactly for `u ∈ (ρ(s), s]`.
    fn cut_sizes(&self) -> Vec<u64> {
        let n = self.horizon() as usize;
        let mut diff = vec![0i64; n + 2];
        for s in 1..=self.horizon() {
            let p = self.parent_of(s);
            diff[p as usize + 1] += 1;
            diff[s as usize + 1] -= 1;
        }
        let mut acc = 0i64;
        (1..=n)
            .map(|u| {
                acc += diff[u];
                acc as u64
            })
            .collect()
    }

    fn width(&self) -> u64 {
        self.cut_sizes().into_iter().max().unwrap_or(0)
    }
}

/// One of the three built-in parent functions over a horizon `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParentFunction {
    kind: ParentKind,
    horizon: u64,
}

impl ParentFunction {
    pub fn new(kind: ParentKind, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Ok(Self { kind, horizon })
    }

    pub fn mrw(horizon: u64) -> Result<Self> {
        Self::new(ParentKind::Mrw, horizon)
    }

    pub fn kind(&self) -> ParentKind {
        self.kind
    }
}

impl ParentMap for ParentFunction {
    fn horizon(&self) -> u64 {
        self.horizon
    }

    #[inline]
    fn parent_of(&self, t: u64) -> u64 {
        match self.kind {
            ParentKind::Iid => 0,
            ParentKind::SimpleWalk => t - 1,
            // t − 2^δ(t): clear the lowest set bit.
            ParentKind::Mrw => t & (t - 1),
        }
    }

    fn depth(&self) -> Result<u64> {
        Ok(match self.kind {
            ParentKind::Iid => 1,
            ParentKind::SimpleWalk => self.horizon,
            ParentKind::Mrw => (1..=self.horizon)
                .map(|t| t.count_ones() as u64)
                .max()
                .unwrap_or(0),
        })
    }
}

/// Realized values `W_0..W_T` of a parent-function walk.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessTrajectory {
    pub kind: ParentKind,
    pub horizon: u64,
    pub sigma: f64,
    pub seed: u64,
    /// `values[t] = W_t`, `values[0] = 0`.
    pub values: Vec<f64>,
}

impl ProcessTrajectory {
    /// `W_t` for `t ∈ [0, T]`.
    pub fn value(&self, t: u64) -> f64 {
        self.values[t as usize]
    }

    pub fn max_abs(&self) -> f64 {
        self.values[1..].iter().fold(0.0_f64, |m, w| m.max(w.abs()))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and nonnegative, got {sigma}")));
    }
    Ok(())
}

fn increment_rng(seed: u64) -> ChaCha8Rng {
    seeds::rng(seed, seeds::stream::PROCESS)
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// The increments `ξ_1..ξ_T` used by [`sample_trajectory`] for this seed.
pub fn sample_increments(horizon: u64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let mut rng = increment_rng(seed);
    Ok((0..horizon).map(|_| draw(&mut rng, sigma)).collect())
}

/// Builds `W_0..W_T` from explicit increments (`increments[t − 1] = ξ_t`).
pub fn walk_from_increments(pf: &impl ParentMap, increments: &[f64]) -> Result<Vec<f64>> {
    if increments.len() as u64 != pf.horizon() {
        return Err(Error::invalid(format!(
            "expected {} increments, got {}",
            pf.horizon(),
            increments.len()
        )));
    }
    let mut values = Vec::with_capacity(increments.len() + 1);
    values.push(0.0);
    for t in 1..=pf.horizon() {
        let w = values[pf.parent_of(t) as usize] + increments[t as usize - 1];
        values.push(w);
    }
    Ok(values)
}

pub fn sample_trajectory(pf: ParentFunction, sigma: f64, seed: u64) -> Result<ProcessTrajectory> {
    let increments = sample_increments(pf.horizon(), sigma, seed)?;
    let values = walk_from_increments(&pf, &increments)?;
    Ok(ProcessTrajectory {
        kind: pf.kind(),
        horizon: pf.horizon(),
        sigma,
        seed,
        values,
    })
}

/// Yields `W_1..W_T` without materializing the trajectory.
///
/// Keeps a stack holding the positive ancestors of the last round and their
/// values. The parent of `t + 1` is always `t` or one of `t`'s ancestors for
/// the three built-in kinds, so entries are only ever popped, never searched.
/// For the multi-scale walk the stack never exceeds `⌊log₂ T⌋ + 1` entries.
pub struct StreamingWalk {
    pf: ParentFunction,
    sigma: f64,
    rng: ChaCha8Rng,
    next: u64,
    stack: Vec<(u64, f64)>,
    peak: usize,
}

impl StreamingWalk {
    pub fn new(pf: ParentFunction, sigma: f64, seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self {
            pf,
            sigma,
            rng: increment_rng(seed),
            next: 1,
            stack: Vec::with_capacity(bit_length(pf.horizon()) as usize),
            peak: 0,
        })
    }

    /// Entries currently held.
    pub fn live_slots(&self) -> usize {
        self.stack.len()
    }

    /// Largest number of entries held at any point so far.
    pub fn peak_slots(&self) -> usize {
        self.peak
    }
}

impl Iterator for StreamingWalk {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let t = self.next;
        if t > self.pf.horizon() {
            return None;
        }
        self.next += 1;
        let parent = self.pf.parent_of(t);
        while self.stack.last().is_some_and(|&(s, _)| s != parent) {
            self.stack.pop();
        }
        let base = if parent == 0 {
            self.stack.clear();
            0.0
        } else {
            debug_assert_eq!(self.stack.last().map(|e| e.0), Some(parent));
            self.stack.last().map_or(0.0, |e| e.1)
        };
        let w = base + draw(&mut self.rng, self.sigma);
        match self.pf.kind() {
            // Nothing ever points back at an i.i.d. round.
            ParentKind::Iid => {}
            ParentKind::SimpleWalk => {
                self.stack.clear();
                self.stack.push((t, w));
            }
            ParentKind::Mrw => self.stack.push((t, w)),
        }
        self.peak = self.peak.max(self.stack.len());
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.pf.horizon() + 1 - self.next) as usize;
        (left, Some(left))
    }
}

pub fn sample_streaming(pf: ParentFunction, sigma: f64, seed: u64) -> Result<StreamingWalk> {
    StreamingWalk::new(pf, sigma, seed)
}

/// High-probability radius `σ √(2 d ln(T/δ))` of a walk with depth `d`,
/// using the natural logarithm.
pub fn drift_radius_ln(sigma: f64, depth: u64, horizon: u64, delta: f64) -> f64 {
    sigma * (2.0 * depth as f64 * (horizon as f64 / delta).ln()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mrw(t: u64) -> ParentFunction {
        ParentFunction::mrw(t).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(1).unwrap(), 0);
        assert_eq!(delta(4).unwrap(), 2);
        assert_eq!(delta(12).unwrap(), 2);
        assert!(delta(0).is_err());
    }

    #[test]
    fn parent_examples() {
        assert_eq!(mrw(200).parent(180).unwrap(), 176);
        assert_eq!(mrw(7).parent(6).unwrap(), 4);
        let simple = ParentFunction::new(ParentKind::SimpleWalk, 7).unwrap();
        let iid = ParentFunction::new(ParentKind::Iid, 7).unwrap();
        assert_eq!(simple.parent(7).unwrap(), 6);
        assert_eq!(iid.parent(7).unwrap(), 0);
        assert!(mrw(7).parent(0).is_err());
        assert!(mrw(7).parent(8).is_err());
    }

    #[test]
    fn ancestors_examples() {
        let pf = mrw(7);
        assert!(pf.ancestors(0).unwrap().is_empty());
        assert_eq!(pf.ancestors(7).unwrap(), vec![4, 6]);
        assert_eq!(pf.ancestors(5).unwrap(), vec![4]);
        assert_eq!(pf.ancestor_count(7).unwrap(), 3);
        assert!(pf.ancestors(8).is_err());
    }

    #[test]
    fn depth_examples() {
        assert_eq!(mrw(7).depth().unwrap(), 3);
        for t in [1, 5, 100] {
            let iid = ParentFunction::new(ParentKind::Iid, t).unwrap();
            assert_eq!(iid.depth().unwrap(), 1);
        }
        let simple = ParentFunction::new(ParentKind::SimpleWalk, 16).unwrap();
        assert_eq!(simple.depth().unwrap(), 16);
    }

    #[test]
    fn specialized_depth_matches_generic() {
        struct Generic(ParentFunction);
        impl ParentMap for Generic {
            fn horizon(&self) -> u64 {
                self.0.horizon()
            }
            fn parent_of(&self, t: u64) -> u64 {
                self.0.parent_of(t)
            }
        }
        for kind in ParentKind::ALL {
            for horizon in [1, 2, 7, 33, 100] {
                let pf = ParentFunction::new(kind, horizon).unwrap();
                assert_eq!(pf.depth().unwrap(), Generic(pf).depth().unwrap(), "{kind} T={horizon}");
            }
        }
    }

    #[test]
    fn cut_examples() {
        assert_eq!(mrw(7).cut(1).unwrap(), vec![1, 2, 4]);
        let simple = ParentFunction::new(ParentKind::SimpleWalk, 9).unwrap();
        for t in 1..=9 {
            assert_eq!(simple.cut(t).unwrap(), vec![t]);
        }
        let iid = ParentFunction::new(ParentKind::Iid, 9).unwrap();
        assert_eq!(iid.cut(4).unwrap(), (4..=9).collect::<Vec<_>>());
        assert!(iid.cut(10).is_err());
    }

    #[test]
    fn width_examples() {
        assert_eq!(mrw(7).width(), 3);
        assert_eq!(mrw(16).width(), 5);
        for horizon in [1, 10, 64] {
            assert_eq!(ParentFunction::new(ParentKind::SimpleWalk, horizon).unwrap().width(), 1);
            assert_eq!(ParentFunction::new(ParentKind::Iid, horizon).unwrap().width(), horizon);
        }
    }

    #[test]
    fn cut_sizes_match_direct_cuts() {
        for kind in ParentKind::ALL {
            let pf = ParentFunction::new(kind, 77).unwrap();
            let sizes = pf.cut_sizes();
            for t in 1..=77 {
                assert_eq!(sizes[t as usize - 1], pf.cut(t).unwrap().len() as u64);
            }
        }
    }

    #[test]
    fn zero_sigma_is_flat() {
        for kind in ParentKind::ALL {
            let pf = ParentFunction::new(kind, 50).unwrap();
            let traj = sample_trajectory(pf, 0.0, 3).unwrap();
            assert!(traj.values.iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn mrw_values_are_sums_over_ancestors() {
        let pf = mrw(300);
        let xi = sample_increments(300, 0.7, 11).unwrap();
        let traj = sample_trajectory(pf, 0.7, 11).unwrap();
        assert_eq!(traj.values[0], 0.0);
        assert_eq!(traj.values.len(), 301);
        for t in 1..=300u64 {
            let mut path = pf.ancestors(t).unwrap();
            path.push(t);
            let sum: f64 = path.iter().map(|&s| xi[s as usize - 1]).sum();
            assert!((traj.value(t) - sum).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn iid_values_are_increments() {
        let pf = ParentFunction::new(ParentKind::Iid, 64).unwrap();
        let xi = sample_increments(64, 1.3, 5).unwrap();
        let traj = sample_trajectory(pf, 1.3, 5).unwrap();
        assert_eq!(&traj.values[1..], &xi[..]);
    }

    #[test]
    fn streaming_matches_materialized() {
        let pf = mrw(1024);
        let traj = sample_trajectory(pf, 0.1, 42).unwrap();
        let mut walk = sample_streaming(pf, 0.1, 42).unwrap();
        let streamed: Vec<f64> = walk.by_ref().collect();
        assert_eq!(streamed, traj.values[1..]);
        assert!(walk.peak_slots() <= bit_length(1024) as usize);

        for kind in [ParentKind::Iid, ParentKind::SimpleWalk] {
            let pf = ParentFunction::new(kind, 500).unwrap();
            let traj = sample_trajectory(pf, 0.4, 9).unwrap();
            let streamed: Vec<f64> = sample_streaming(pf, 0.4, 9).unwrap().collect();
            assert_eq!(streamed, traj.values[1..]);
        }
    }

    #[test]
    fn streaming_single_round() {
        let pf = mrw(1);
        let xi = sample_increments(1, 0.5, 8).unwrap();
        let streamed: Vec<f64> = sample_streaming(pf, 0.5, 8).unwrap().collect();
        assert_eq!(streamed, xi);
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(sample_trajectory(mrw(4), -1.0, 0).is_err());
        assert!(sample_trajectory(mrw(4), f64::NAN, 0).is_err());
        assert!(ParentFunction::mrw(0).is_err());
    }
}
