//! Ground set, partition matroid, membership vectors and information sets.
//!
//! Policies are numbered `0..n` and sorted agent-wise: agent `i` owns the
//! contiguous block `Partition::block(i)`. An [`InfoSet`] is an agent's sparse
//! belief about membership probabilities; it grows through [`InfoSet::oplus`]
//! (mass addition) and is reconciled with neighbours through [`max_merge`].

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PolicyId = usize;
pub type AgentId = usize;

/// Slack allowed whenever a probability mass must stay within `[0, 1]` or sum to 1.
pub const PROB_TOL: f64 = 1e-9;

/// Agent-indexed partition of `0..n` into contiguous non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    blocks: Vec<Range<PolicyId>>,
}

impl Partition {
    pub fn new(blocks: Vec<Range<PolicyId>>) -> Result<Self> {
        let mut expected = 0;
        for (agent, b) in blocks.iter().enumerate() {
            if b.start != expected {
                return Err(Error::NonContiguousBlock {
                    agent,
                    start: b.start,
                    expected,
                });
            }
            if b.is_empty() {
                return Err(Error::EmptyBlock { agent });
            }
            expected = b.end;
        }
        Ok(Self { n: expected, blocks })
    }

    /// Builds the partition whose block `i` has `sizes[i]` policies.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b = start..start + s;
                start += s;
                b
            })
            .collect();
        Self::new(blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_agents(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, agent: AgentId) -> Range<PolicyId> {
        self.blocks[agent].clone()
    }

    pub fn blocks(&self) -> &[Range<PolicyId>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn agent_of(&self, p: PolicyId) -> Option<AgentId> {
        if p >= self.n {
            return None;
        }
        Some(self.blocks.partition_point(|b| b.end <= p))
    }
}

/// Finite map from policy to accumulated membership probability.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InfoSet {
    entries: BTreeMap<PolicyId, f64>,
}

impl InfoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I: IntoIterator<Item = (PolicyId, f64)>>(entries: I) -> Result<Self> {
        let mut out = Self::new();
        for (p, a) in entries {
            check_probability(p, a)?;
            if out.entries.insert(p, a).is_some() {
                return Err(Error::Config(format!("policy {p} listed twice")));
            }
        }
        Ok(out)
    }

    pub fn get(&self, p: PolicyId) -> Option<f64> {
        self.entries.get(&p).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending policy order.
    pub fn iter(&self) -> impl Iterator<Item = (PolicyId, f64)> + '_ {
        self.entries.iter().map(|(&p, &a)| (p, a))
    }

    /// Entries whose policy lies in `range`, ascending.
    pub fn range(&self, range: Range<PolicyId>) -> impl Iterator<Item = (PolicyId, f64)> + '_ {
        self.entries.range(range).map(|(&p, &a)| (p, a))
    }

    pub fn mass_in(&self, range: Range<PolicyId>) -> f64 {
        self.range(range).map(|(_, a)| a).sum()
    }

    /// `F ⊕ {(p, α)}`: adds `α` to the mass of `p`, inserting it if absent.
    pub fn oplus(&self, p: PolicyId, alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        out.oplus_mut(p, alpha)?;
        Ok(out)
    }

    pub fn oplus_mut(&mut self, p: PolicyId, alpha: f64) -> Result<()> {
        check_probability(p, alpha)?;
        let mass = self.entries.get(&p).copied().unwrap_or(0.0) + alpha;
        if mass > 1.0 + PROB_TOL {
            return Err(Error::MassOverflow { policy: p, mass });
        }
        self.entries.insert(p, mass);
        Ok(())
    }

    /// Pointwise maximum with `other`, in place.
    pub fn merge_max(&mut self, other: &InfoSet) {
        for (&p, &a) in &other.entries {
            self.entries.entry(p).and_modify(|cur| *cur = cur.max(a)).or_insert(a);
        }
    }

    pub fn to_membership_vector(&self, part: &Partition) -> Result<MembershipVector> {
        let mut x = vec![0.0; part.n()];
        for (p, a) in self.iter() {
            let slot = x.get_mut(p).ok_or(Error::UnknownPolicy { policy: p, n: part.n() })?;
            *slot = a;
        }
        Ok(MembershipVector(x))
    }
}

/// MAX over a collection of information sets: every key, at its largest mass.
///
/// Panics on an empty collection.
pub fn max_merge<'a, I>(sets: I) -> InfoSet
where
    I: IntoIterator<Item = &'a InfoSet>,
{
    let mut it = sets.into_iter();
    let mut out = it.next().expect("max_merge needs at least one information set").clone();
    for s in it {
        out.merge_max(s);
    }
    out
}

fn check_probability(p: PolicyId, a: f64) -> Result<()> {
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&a) {
        return Err(Error::InvalidProbability { policy: p, value: a });
    }
    Ok(())
}

/// Dense membership probabilities `x ∈ [0,1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVector(Vec<f64>);

impl MembershipVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        for (p, &a) in x.iter().enumerate() {
            check_probability(p, a)?;
        }
        Ok(Self(x))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// The vertex `1_S`.
    pub fn indicator(n: usize, set: &PolicySet) -> Self {
        let mut x = vec![0.0; n];
        for p in set.iter() {
            x[p] = 1.0;
        }
        Self(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, p: PolicyId) -> f64 {
        self.0[p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with coordinate `p` pinned to `value`.
    pub fn with(&self, p: PolicyId, value: f64) -> Self {
        let mut x = self.0.clone();
        x[p] = value;
        Self(x)
    }

    pub fn block(&self, range: Range<PolicyId>) -> &[f64] {
        &self.0[range]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// A set of policies, kept sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolicySet(Vec<PolicyId>);

impl PolicySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: PolicyId) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    /// Returns `true` if `p` was not already present.
    pub fn insert(&mut self, p: PolicyId) -> bool {
        match self.0.binary_search(&p) {
            Ok(_) => false,
            Err(at) => {
                self.0.insert(at, p);
                true
            }
        }
    }

    pub fn remove(&mut self, p: PolicyId) -> bool {
        match self.0.binary_search(&p) {
            Ok(at) => {
                self.0.remove(at);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, p: PolicyId) -> Self {
        let mut s = self.clone();
        s.insert(p);
        s
    }

    pub fn without(&self, p: PolicyId) -> Self {
        let mut s = self.clone();
        s.remove(p);
        s
    }

    pub fn union(&self, other: &PolicySet) -> Self {
        other.iter().fold(self.clone(), |mut acc, p| {
            acc.insert(p);
            acc
        })
    }

    pub fn is_subset(&self, other: &PolicySet) -> bool {
        self.iter().all(|p| other.contains(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = PolicyId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[PolicyId] {
        &self.0
    }

    /// Set whose members are the one-bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|&b| mask >> b & 1 == 1).collect())
    }

    pub(crate) fn push_sorted(&mut self, p: PolicyId) {
        debug_assert!(self.0.last().is_none_or(|&last| last < p));
        self.0.push(p);
    }
}

impl FromIterator<PolicyId> for PolicySet {
    fn from_iter<I: IntoIterator<Item = PolicyId>>(iter: I) -> Self {
        let mut v: Vec<_> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

/// Draws `R_x`: each policy independently with probability `x_p`, ascending
/// policy order, one uniform draw per policy with non-zero mass.
pub fn sample_set<R: Rng + ?Sized>(x: &MembershipVector, rng: &mut R) -> PolicySet {
    sample_entries(x.as_slice().iter().copied().enumerate(), rng)
}

/// Same draw as [`sample_set`] on the membership vector induced by `info`.
pub fn sample_info_set<R: Rng + ?Sized>(info: &InfoSet, rng: &mut R) -> PolicySet {
    sample_entries(info.iter(), rng)
}

fn sample_entries<I, R>(entries: I, rng: &mut R) -> PolicySet
where
    I: Iterator<Item = (PolicyId, f64)>,
    R: Rng + ?Sized,
{
    let mut out = PolicySet::new();
    for (p, a) in entries {
        if a <= 0.0 {
            continue;
        }
        if rng.random::<f64>() < a {
            out.push_sorted(p);
        }
    }
    out
}

/// Picks exactly one policy of a block with unit mass, by inverse CDF over
/// ascending ids. `first` is the id of `x_block[0]`.
pub fn sample_one_from_block<R: Rng + ?Sized>(x_block: &[f64], first: PolicyId, rng: &mut R) -> Result<PolicyId> {
    let mass: f64 = x_block.iter().sum();
    if (mass - 1.0).abs() > PROB_TOL {
        return Err(Error::MassNotOne { mass });
    }
    let u = rng.random::<f64>() * mass;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (k, &a) in x_block.iter().enumerate() {
        if a <= 0.0 {
            continue;
        }
        acc += a;
        last_positive = Some(k);
        if u < acc {
            return Ok(first + k);
        }
    }
    // u landed in the rounding gap above the accumulated sum
    Ok(first + last_positive.expect("unit mass block has a positive entry"))
}

/// Highest-mass policy of a block; ties go to the lowest id.
pub fn argmax_in_block(x_block: &[f64], first: PolicyId) -> PolicyId {
    first + argmax_lowest(x_block)
}

/// Index of the maximum, lowest index on ties. Panics on an empty slice.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn info(entries: &[(PolicyId, f64)]) -> InfoSet {
        InfoSet::from_entries(entries.iter().copied()).unwrap()
    }

    #[test]
    fn partition_layout() {
        let part = Partition::from_sizes(&[2, 3, 1]).unwrap();
        assert_eq!(part.n(), 6);
        assert_eq!(part.block(1), 2..5);
        assert_eq!(part.agent_of(0), Some(0));
        assert_eq!(part.agent_of(4), Some(1));
        assert_eq!(part.agent_of(5), Some(2));
        assert_eq!(part.agent_of(6), None);
        assert!(matches!(
            Partition::from_sizes(&[2, 0]),
            Err(Error::EmptyBlock { agent: 1 })
        ));
        assert!(matches!(
            Partition::new(vec![0..2, 3..4]),
            Err(Error::NonContiguousBlock { agent: 1, .. })
        ));
    }

    #[test]
    fn oplus_cases() {
        let empty = InfoSet::new();
        assert_eq!(empty.oplus(3, 0.1).unwrap(), info(&[(3, 0.1)]));
        let got = info(&[(3, 0.1)]).oplus(3, 0.1).unwrap();
        assert!((got.get(3).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(got.len(), 1);
        assert_eq!(
            info(&[(1, 0.5), (3, 0.1)]).oplus(2, 0.25).unwrap(),
            info(&[(1, 0.5), (2, 0.25), (3, 0.1)])
        );
    }

    #[test]
    fn oplus_overflow_is_an_error() {
        let f = info(&[(0, 0.8)]);
        assert!(matches!(f.oplus(0, 0.3), Err(Error::MassOverflow { policy: 0, .. })));
        // within tolerance is accepted
        assert!(info(&[(0, 0.5)]).oplus(0, 0.5 + 1e-12).is_ok());
        assert!(matches!(f.oplus(1, 1.5), Err(Error::InvalidProbability { .. })));
    }

    #[test]
    fn max_merge_cases() {
        let a = info(&[(1, 0.2)]);
        let b = info(&[(1, 0.5), (2, 0.1)]);
        assert_eq!(max_merge([&a, &b]), info(&[(1, 0.5), (2, 0.1)]));
        assert_eq!(max_merge([&b, &b]), b);
        let e = InfoSet::new();
        assert_eq!(max_merge([&e, &e]), e);
    }

    #[test]
    fn membership_vector_construction() {
        let part = Partition::from_sizes(&[3]).unwrap();
        assert_eq!(
            InfoSet::new().to_membership_vector(&part).unwrap().as_slice(),
            &[0.0; 3]
        );
        assert_eq!(
            info(&[(1, 0.4)]).to_membership_vector(&part).unwrap().as_slice(),
            &[0.0, 0.4, 0.0]
        );
        assert_eq!(
            info(&[(0, 1.0), (2, 0.5)])
                .to_membership_vector(&part)
                .unwrap()
                .as_slice(),
            &[1.0, 0.0, 0.5]
        );
        assert!(info(&[(3, 0.5)]).to_membership_vector(&part).is_err());
    }

    #[test]
    fn sample_set_vertices_are_deterministic() {
        let mut rng = stream(7, 0, 0, 0);
        let s: PolicySet = [1, 4].into_iter().collect();
        let x = MembershipVector::indicator(6, &s);
        for _ in 0..100 {
            assert_eq!(sample_set(&x, &mut rng), s);
            assert!(sample_set(&MembershipVector::zeros(6), &mut rng).is_empty());
        }
    }

    #[test]
    fn sample_set_frequency() {
        let x = MembershipVector::new(vec![0.5, 0.2, 0.9]).unwrap();
        let mut rng = stream(11, 0, 0, 0);
        let draws = 100_000;
        let mut hits = [0usize; 3];
        for _ in 0..draws {
            for p in sample_set(&x, &mut rng).iter() {
                hits[p] += 1;
            }
        }
        for (p, &h) in hits.iter().enumerate() {
            let freq = h as f64 / draws as f64;
            assert!((freq - x.get(p)).abs() <= 0.01, "p={p} freq={freq}");
        }
    }

    #[test]
    fn sample_info_set_matches_dense_draw() {
        let part = Partition::from_sizes(&[3, 3]).unwrap();
        let f = info(&[(0, 0.3), (2, 0.7), (4, 1.0)]);
        let x = f.to_membership_vector(&part).unwrap();
        let (mut a, mut b) = (stream(3, 1, 2, 3), stream(3, 1, 2, 3));
        for _ in 0..50 {
            assert_eq!(sample_info_set(&f, &mut a), sample_set(&x, &mut b));
        }
    }

    #[test]
    fn sample_one_from_block_cases() {
        let mut rng = stream(5, 0, 0, 0);
        for _ in 0..100 {
            assert_eq!(sample_one_from_block(&[1.0, 0.0, 0.0], 10, &mut rng).unwrap(), 10);
        }
        let draws = 100_000;
        let firsts = (0..draws)
            .filter(|_| sample_one_from_block(&[0.5, 0.5], 0, &mut rng).unwrap() == 0)
            .count();
        assert!((firsts as f64 / draws as f64 - 0.5).abs() <= 0.01);
        assert!(matches!(
            sample_one_from_block(&[0.3, 0.3], 0, &mut rng),
            Err(Error::MassNotOne { .. })
        ));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_in_block(&[0.2, 0.4, 0.4], 3), 4);
        assert_eq!(argmax_lowest(&[1.0, 1.0]), 0);
    }

    #[test]
    fn policy_set_ops() {
        let mut s: PolicySet = [5, 1, 3, 1].into_iter().collect();
        assert_eq!(s.as_slice(), &[1, 3, 5]);
        assert!(s.insert(2));
        assert!(!s.insert(2));
        assert!(s.remove(5));
        assert_eq!(s.as_slice(), &[1, 2, 3]);
        assert_eq!(s.without(2).with(9).as_slice(), &[1, 3, 9]);
        assert_eq!(PolicySet::from_mask(0b1010).as_slice(), &[1, 3]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_info(n: usize) -> impl Strategy<Value = InfoSet> {
            proptest::collection::btree_map(0..n, 0.0..=1.0f64, 0..n).prop_map(|m| InfoSet::from_entries(m).unwrap())
        }

        proptest! {
            #[test]
            fn max_merge_laws(a in arb_info(8), b in arb_info(8), c in arb_info(8)) {
                prop_assert_eq!(max_merge([&a, &b]), max_merge([&b, &a]));
                prop_assert_eq!(
                    max_merge([&max_merge([&a, &b]), &c]),
                    max_merge([&a, &max_merge([&b, &c])])
                );
                prop_assert_eq!(max_merge([&a, &a]), a.clone());
                let part = Partition::from_sizes(&[8]).unwrap();
                let m = max_merge([&a, &b]).to_membership_vector(&part).unwrap();
                for input in [&a, &b] {
                    let x = input.to_membership_vector(&part).unwrap();
                    for p in 0..8 {
                        prop_assert!(m.get(p) >= x.get(p));
                    }
                }
            }

            #[test]
            fn oplus_adds_indicator(f in arb_info(6), p in 0usize..6, t in 1usize..50) {
                let step = 1.0 / t as f64;
                let part = Partition::from_sizes(&[6]).unwrap();
                let before = f.to_membership_vector(&part).unwrap();
                match f.oplus(p, step) {
                    Ok(g) => {
                        let keys: Vec<_> = g.iter().map(|(q, _)| q).collect();
                        let mut expected: Vec<_> = f.iter().map(|(q, _)| q).collect();
                        if !expected.contains(&p) { expected.push(p); expected.sort(); }
                        prop_assert_eq!(keys, expected);
                        let after = g.to_membership_vector(&part).unwrap();
                        for q in 0..6 {
                            let want = before.get(q) + if q == p { step } else { 0.0 };
                            prop_assert!((after.get(q) - want).abs() < 1e-15);
                        }
                    }
                    Err(Error::MassOverflow { .. }) => prop_assert!(before.get(p) + step > 1.0),
                    Err(e) => prop_assert!(false, "unexpected {e}"),
                }
            }
        }
    }
}
