//! Value oracles for set functions `f: 2^P -> R≥0` and the disk-coverage utility.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{PolicyId, PolicySet};

/// Exhaustive property checks enumerate every subset up to this ground-set size.
pub const CHECK_CAP: usize = 15;

const CHECK_TOL: f64 = 1e-9;

/// Black-box access to a set function over policies `0..ground_size()`.
pub trait ValueOracle: Sync {
    fn ground_size(&self) -> usize;

    fn eval(&self, set: &PolicySet) -> Result<f64>;

    /// Writes `f(R ∪ {p}) - f(R \ {p})` for every `p` in `block` into `out`.
    ///
    /// Gradient estimation calls this once per sample, so oracles with cheap
    /// incremental structure should override it.
    fn block_gains(&self, sample: &PolicySet, block: Range<PolicyId>, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), block.len());
        for (slot, p) in out.iter_mut().zip(block) {
            *slot = self.eval(&sample.with(p))? - self.eval(&sample.without(p))?;
        }
        Ok(())
    }
}

impl<O: ValueOracle + ?Sized> ValueOracle for &O {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn eval(&self, set: &PolicySet) -> Result<f64> {
        (**self).eval(set)
    }

    fn block_gains(&self, sample: &PolicySet, block: Range<PolicyId>, out: &mut [f64]) -> Result<()> {
        (**self).block_gains(sample, block, out)
    }
}

pub(crate) fn check_members(set: &PolicySet, n: usize) -> Result<()> {
    match set.as_slice().last() {
        Some(&p) if p >= n => Err(Error::UnknownPolicy { policy: p, n }),
        _ => Ok(()),
    }
}

/// `Δ_f(p | S) = f(S ∪ {p}) - f(S)`.
pub fn marginal<O: ValueOracle + ?Sized>(oracle: &O, p: PolicyId, set: &PolicySet) -> Result<f64> {
    if set.contains(p) {
        return Ok(0.0);
    }
    Ok(oracle.eval(&set.with(p))? - oracle.eval(set)?)
}

/// Oracle backed by a closure; mostly for tests and synthetic functions.
pub struct FnOracle<F> {
    n: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&PolicySet) -> f64 + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> ValueOracle for FnOracle<F>
where
    F: Fn(&PolicySet) -> f64 + Sync,
{
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &PolicySet) -> Result<f64> {
        check_members(set, self.n)?;
        Ok((self.f)(set))
    }
}

/// `f(S) = Σ_{p∈S} c_p`.
#[derive(Debug, Clone)]
pub struct ModularOracle {
    weights: Vec<f64>,
}

impl ModularOracle {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

impl ValueOracle for ModularOracle {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, set: &PolicySet) -> Result<f64> {
        check_members(set, self.weights.len())?;
        Ok(set.iter().map(|p| self.weights[p]).sum())
    }

    fn block_gains(&self, _sample: &PolicySet, block: Range<PolicyId>, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.weights[block]);
        Ok(())
    }
}

/// Number of interest points inside the union of the chosen sensing disks.
///
/// Each policy's covered points are precomputed as a bitset, so an evaluation
/// is an OR over members followed by a popcount.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageOracle {
    n_points: usize,
    words: usize,
    covers: Vec<u64>,
}

impl CoverageOracle {
    /// `covered[p]` lists the interest-point indices policy `p` observes.
    pub fn from_cover_lists(n_points: usize, covered: &[Vec<usize>]) -> Self {
        let words = n_points.div_ceil(64).max(1);
        let mut covers = vec![0u64; words * covered.len()];
        for (p, pts) in covered.iter().enumerate() {
            for &k in pts {
                assert!(k < n_points, "interest point {k} out of range");
                covers[p * words + k / 64] |= 1 << (k % 64);
            }
        }
        Self {
            n_points,
            words,
            covers,
        }
    }

    /// Disk coverage: policy `(agent, placement)` sees every interest point at
    /// Euclidean distance `<= radius` (boundary inclusive).
    pub fn from_disks(interest_points: &[[f64; 2]], disks: &[([f64; 2], f64)]) -> Self {
        let covered: Vec<Vec<usize>> = disks
            .iter()
            .map(|&([cx, cy], r)| {
                interest_points
                    .iter()
                    .enumerate()
                    .filter(|(_, &[x, y])| (x - cx).powi(2) + (y - cy).powi(2) <= r * r)
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();
        Self::from_cover_lists(interest_points.len(), &covered)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    fn cover(&self, p: PolicyId) -> &[u64] {
        &self.covers[p * self.words..(p + 1) * self.words]
    }

    /// Interest-point indices observed by `p`.
    pub fn covered_points(&self, p: PolicyId) -> Vec<usize> {
        let cover = self.cover(p);
        (0..self.n_points)
            .filter(|&k| cover[k / 64] >> (k % 64) & 1 == 1)
            .collect()
    }

    fn union_into<I: IntoIterator<Item = PolicyId>>(&self, members: I, acc: &mut [u64]) {
        for q in members {
            for (a, c) in acc.iter_mut().zip(self.cover(q)) {
                *a |= c;
            }
        }
    }

    fn count_new(&self, p: PolicyId, base: &[u64]) -> u32 {
        self.cover(p).iter().zip(base).map(|(c, b)| (c & !b).count_ones()).sum()
    }
}

impl ValueOracle for CoverageOracle {
    fn ground_size(&self) -> usize {
        self.covers.len() / self.words
    }

    fn eval(&self, set: &PolicySet) -> Result<f64> {
        check_members(set, self.ground_size())?;
        let mut acc = vec![0u64; self.words];
        self.union_into(set.iter(), &mut acc);
        Ok(acc.iter().map(|w| w.count_ones()).sum::<u32>() as f64)
    }

    fn block_gains(&self, sample: &PolicySet, block: Range<PolicyId>, out: &mut [f64]) -> Result<()> {
        check_members(sample, self.ground_size())?;
        let mut outside = vec![0u64; self.words];
        self.union_into(sample.iter().filter(|q| !block.contains(q)), &mut outside);
        let inside: Vec<PolicyId> = sample.iter().filter(|q| block.contains(q)).collect();
        if inside.is_empty() {
            for (slot, p) in out.iter_mut().zip(block) {
                *slot = self.count_new(p, &outside) as f64;
            }
            return Ok(());
        }
        let mut base = vec![0u64; self.words];
        for (slot, p) in out.iter_mut().zip(block) {
            base.copy_from_slice(&outside);
            self.union_into(inside.iter().copied().filter(|&q| q != p), &mut base);
            *slot = self.count_new(p, &base) as f64;
        }
        Ok(())
    }
}

/// Outcome of the exhaustive monotonicity/submodularity check.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckReport {
    Pass,
    NotNormalized {
        value: f64,
    },
    NotMonotone {
        set: PolicySet,
        p: PolicyId,
    },
    /// `Δ(p | smaller) < Δ(p | larger)` with `smaller ⊂ larger`.
    NotSubmodular {
        smaller: PolicySet,
        larger: PolicySet,
        p: PolicyId,
        gain_smaller: f64,
        gain_larger: f64,
    },
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        matches!(self, CheckReport::Pass)
    }
}

/// Verifies normalization, monotonicity and submodularity by enumerating all
/// subsets. Uses the single-element forms `f(S+p) ≥ f(S)` and
/// `Δ(p|S) ≥ Δ(p|S+q)`, which imply the general `S₁ ⊆ S₂` forms by chaining.
pub fn check_monotone_submodular<O: ValueOracle + ?Sized>(oracle: &O) -> Result<CheckReport> {
    let n = oracle.ground_size();
    if n > CHECK_CAP {
        return Err(Error::GroundSetTooLarge {
            size: n,
            cap: CHECK_CAP,
        });
    }
    let table: Vec<f64> = (0..1u64 << n)
        .map(|mask| oracle.eval(&PolicySet::from_mask(mask)))
        .collect::<Result<_>>()?;

    if table[0].abs() > CHECK_TOL {
        return Ok(CheckReport::NotNormalized { value: table[0] });
    }
    for mask in 0..table.len() {
        for p in (0..n).filter(|p| mask >> p & 1 == 0) {
            if table[mask | 1 << p] < table[mask] - CHECK_TOL {
                return Ok(CheckReport::NotMonotone {
                    set: PolicySet::from_mask(mask as u64),
                    p,
                });
            }
        }
    }
    for mask in 0..table.len() {
        for q in (0..n).filter(|q| mask >> q & 1 == 0) {
            let larger = mask | 1 << q;
            for p in (0..n).filter(|&p| p != q && mask >> p & 1 == 0) {
                let gain_smaller = table[mask | 1 << p] - table[mask];
                let gain_larger = table[larger | 1 << p] - table[larger];
                if gain_smaller < gain_larger - CHECK_TOL {
                    return Ok(CheckReport::NotSubmodular {
                        smaller: PolicySet::from_mask(mask as u64),
                        larger: PolicySet::from_mask(larger as u64),
                        p,
                        gain_smaller,
                        gain_larger,
                    });
                }
            }
        }
    }
    Ok(CheckReport::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ps: &[PolicyId]) -> PolicySet {
        ps.iter().copied().collect()
    }

    #[test]
    fn coverage_distance_test() {
        let oracle = CoverageOracle::from_disks(&[[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]], &[([0.0, 0.0], 1.0)]);
        assert_eq!(oracle.eval(&PolicySet::new()).unwrap(), 0.0);
        assert_eq!(oracle.eval(&set(&[0])).unwrap(), 2.0);
        // boundary inclusive
        let edge = CoverageOracle::from_disks(&[[1.0, 0.0]], &[([0.0, 0.0], 1.0)]);
        assert_eq!(edge.eval(&set(&[0])).unwrap(), 1.0);
    }

    #[test]
    fn coverage_union_semantics() {
        let pts: Vec<[f64; 2]> = (0..5).map(|k| [0.1 * k as f64, 0.0]).collect();
        let oracle = CoverageOracle::from_disks(&pts, &[([0.2, 0.0], 1.0), ([0.2, 0.0], 2.0)]);
        assert_eq!(oracle.eval(&set(&[0])).unwrap(), 5.0);
        assert_eq!(oracle.eval(&set(&[0, 1])).unwrap(), 5.0);
        assert_eq!(marginal(&oracle, 1, &set(&[0])).unwrap(), 0.0);
    }

    #[test]
    fn unknown_policy_rejected() {
        let oracle = CoverageOracle::from_cover_lists(3, &[vec![0], vec![1]]);
        assert!(matches!(
            oracle.eval(&set(&[2])),
            Err(Error::UnknownPolicy { policy: 2, n: 2 })
        ));
    }

    #[test]
    fn marginal_cases() {
        let card = FnOracle::new(4, |s: &PolicySet| s.len() as f64);
        assert_eq!(marginal(&card, 1, &set(&[1, 2])).unwrap(), 0.0);
        assert_eq!(marginal(&card, 0, &set(&[1, 2])).unwrap(), 1.0);
    }

    #[test]
    fn checker_reports() {
        let card = FnOracle::new(3, |s: &PolicySet| s.len() as f64);
        assert_eq!(check_monotone_submodular(&card).unwrap(), CheckReport::Pass);

        let square = FnOracle::new(3, |s: &PolicySet| (s.len() * s.len()) as f64);
        assert_eq!(
            check_monotone_submodular(&square).unwrap(),
            CheckReport::NotSubmodular {
                smaller: PolicySet::new(),
                larger: set(&[0]),
                p: 1,
                gain_smaller: 1.0,
                gain_larger: 3.0,
            }
        );

        let shifted = FnOracle::new(2, |s: &PolicySet| 1.0 + s.len() as f64);
        assert!(matches!(
            check_monotone_submodular(&shifted).unwrap(),
            CheckReport::NotNormalized { .. }
        ));

        let decreasing = FnOracle::new(
            2,
            |s: &PolicySet| if s.as_slice() == [0] { 2.0 } else { s.len() as f64 * 0.5 },
        );
        assert!(matches!(
            check_monotone_submodular(&decreasing).unwrap(),
            CheckReport::NotMonotone { .. }
        ));

        let big = FnOracle::new(16, |s: &PolicySet| s.len() as f64);
        assert!(matches!(
            check_monotone_submodular(&big),
            Err(Error::GroundSetTooLarge { size: 16, .. })
        ));
    }

    #[test]
    fn coverage_block_gains_match_default() {
        struct Plain<'a>(&'a CoverageOracle);
        impl ValueOracle for Plain<'_> {
            fn ground_size(&self) -> usize {
                self.0.ground_size()
            }
            fn eval(&self, s: &PolicySet) -> Result<f64> {
                self.0.eval(s)
            }
        }
        let covered = vec![
            vec![0, 1, 2],
            vec![2, 3],
            vec![4],
            vec![0, 4, 5],
            vec![1, 5, 6],
            vec![6],
        ];
        let oracle = CoverageOracle::from_cover_lists(7, &covered);
        for mask in 0..64u64 {
            let sample = PolicySet::from_mask(mask);
            for block in [0..3, 3..6, 1..4] {
                let mut fast = vec![0.0; block.len()];
                let mut slow = vec![0.0; block.len()];
                oracle.block_gains(&sample, block.clone(), &mut fast).unwrap();
                Plain(&oracle).block_gains(&sample, block.clone(), &mut slow).unwrap();
                assert_eq!(fast, slow, "mask={mask:b} block={block:?}");
            }
        }
    }

    #[test]
    fn coverage_is_monotone_submodular() {
        let covered = vec![
            vec![0, 1, 2],
            vec![2, 3],
            vec![4],
            vec![0, 4, 5],
            vec![1, 5, 6],
            vec![6, 70],
        ];
        let oracle = CoverageOracle::from_cover_lists(80, &covered);
        assert!(check_monotone_submodular(&oracle).unwrap().passed());
    }
}
