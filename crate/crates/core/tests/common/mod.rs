#![allow(dead_code)]

use dcg_core::ground::{MembershipVector, Partition, PolicySet};
use dcg_core::network::CommGraph;
use dcg_core::oracle::{CoverageOracle, ValueOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub oracle: CoverageOracle,
    pub part: Partition,
}

/// Random coverage instance: each policy sees each of `points` interest points
/// independently with probability `density`.
pub fn random_instance(seed: u64, block_sizes: &[usize], points: usize, density: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = block_sizes.iter().sum();
    let covers: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..points).filter(|_| rng.random_bool(density)).collect())
        .collect();
    Instance {
        oracle: CoverageOracle::from_cover_lists(points, &covers),
        part: Partition::from_sizes(block_sizes).unwrap(),
    }
}

/// Uniform point of the unit cube, with a share of coordinates pinned to 0 or 1.
pub fn random_cube_point(rng: &mut impl Rng, n: usize) -> MembershipVector {
    let v = (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect();
    MembershipVector::new(v).unwrap()
}

/// Point with every block summing to exactly one.
pub fn random_unit_blocks(rng: &mut impl Rng, part: &Partition) -> MembershipVector {
    let mut v = vec![0.0; part.n()];
    for block in part.blocks() {
        let raw: Vec<f64> = block.clone().map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        for (p, r) in block.clone().zip(raw) {
            v[p] = r / total;
        }
        let last = block.end - 1;
        v[last] = 1.0 - v[block.start..last].iter().sum::<f64>();
    }
    MembershipVector::new(v).unwrap()
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, extra: f64) -> CommGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    CommGraph::new(n, &edges).unwrap()
}

pub fn all_sets(n: usize) -> impl Iterator<Item = PolicySet> {
    (0u64..1 << n).map(PolicySet::from_mask)
}

pub fn value(oracle: &impl ValueOracle, set: &PolicySet) -> f64 {
    oracle.eval(set).unwrap()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for perm in permutations(n - 1) {
        for pos in 0..=perm.len() {
            let mut p = perm.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}
