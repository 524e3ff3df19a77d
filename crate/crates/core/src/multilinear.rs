//! Multilinear extension `F(x) = E[f(R_x)]`: exact values and derivatives by
//! enumeration, Monte-Carlo gradient estimates, and Hoeffding sample sizing.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{sample_info_set, sample_set, AgentId, InfoSet, MembershipVector, Partition, PolicyId, PolicySet};
use crate::oracle::ValueOracle;

/// Exact enumeration handles at most this many fractional coordinates.
pub const EXACT_CAP: usize = 20;

/// `F(x) = Σ_R f(R) Π_{p∈R} x_p Π_{p∉R} (1 - x_p)`.
///
/// Coordinates pinned at 0 or 1 contribute a factor of one to exactly one
/// branch, so only the fractional coordinates are enumerated.
pub fn exact_f<O: ValueOracle + ?Sized>(oracle: &O, x: &MembershipVector) -> Result<f64> {
    let mut fixed = PolicySet::new();
    let mut free = Vec::new();
    for (p, &a) in x.as_slice().iter().enumerate() {
        if a >= 1.0 {
            fixed.insert(p);
        } else if a > 0.0 {
            free.push(p);
        }
    }
    if free.len() > EXACT_CAP {
        return Err(Error::GroundSetTooLarge {
            size: free.len(),
            cap: EXACT_CAP,
        });
    }
    let mut total = 0.0;
    for mask in 0u32..1 << free.len() {
        let mut set = fixed.clone();
        let mut prob = 1.0;
        for (bit, &p) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                set.insert(p);
                prob *= x.get(p);
            } else {
                prob *= 1.0 - x.get(p);
            }
        }
        total += prob * oracle.eval(&set)?;
    }
    Ok(total)
}

/// `∂F/∂x_p`, using multilinearity: `F(x | x_p=1) - F(x | x_p=0)`.
pub fn exact_grad<O: ValueOracle + ?Sized>(oracle: &O, x: &MembershipVector, p: PolicyId) -> Result<f64> {
    Ok(exact_f(oracle, &x.with(p, 1.0))? - exact_f(oracle, &x.with(p, 0.0))?)
}

/// `∂²F/∂x_p∂x_q` for `p ≠ q`, as the mixed second difference on pinned vertices.
pub fn exact_hessian_entry<O: ValueOracle + ?Sized>(
    oracle: &O,
    x: &MembershipVector,
    p: PolicyId,
    q: PolicyId,
) -> Result<f64> {
    assert_ne!(p, q, "mixed partial needs distinct coordinates");
    let pin = |a: f64, b: f64| x.with(p, a).with(q, b);
    Ok(
        exact_f(oracle, &pin(1.0, 1.0))? - exact_f(oracle, &pin(0.0, 1.0))? - exact_f(oracle, &pin(1.0, 0.0))?
            + exact_f(oracle, &pin(0.0, 0.0))?,
    )
}

/// Monte-Carlo estimate of the gradient restricted to one agent's block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub block: Range<PolicyId>,
    /// `w[k]` estimates `∂F/∂x_{block.start + k}`.
    pub w: Vec<f64>,
    pub samples: usize,
    /// Derived seed of the stream the samples came from, when known.
    pub seed: Option<u64>,
}

impl GradientEstimate {
    pub fn get(&self, p: PolicyId) -> Option<f64> {
        self.block.contains(&p).then(|| self.w[p - self.block.start])
    }

    /// Highest estimate in the block, lowest id on ties.
    pub fn argmax(&self) -> PolicyId {
        self.block.start + crate::ground::argmax_lowest(&self.w)
    }
}

/// Draws `k` sets `R` from `info` (policy `q` with probability `α`) and averages
/// `f(R ∪ {p}) - f(R \ {p})` over them for every `p` in the agent's block. The
/// same samples serve every `p`; they are drawn in order from `rng`.
pub fn estimate_grad_block<O, R>(
    oracle: &O,
    info: &InfoSet,
    part: &Partition,
    agent: AgentId,
    k: usize,
    rng: &mut R,
) -> Result<GradientEstimate>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    if agent >= part.num_agents() {
        return Err(Error::UnknownAgent {
            agent,
            n: part.num_agents(),
        });
    }
    if k == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let block = part.block(agent);
    let mut sums = vec![0.0; block.len()];
    let mut gains = vec![0.0; block.len()];
    for _ in 0..k {
        let sample = sample_info_set(info, rng);
        oracle.block_gains(&sample, block.clone(), &mut gains)?;
        for (s, g) in sums.iter_mut().zip(&gains) {
            *s += g;
        }
    }
    let w = sums.into_iter().map(|s| s / k as f64).collect();
    Ok(GradientEstimate {
        block,
        w,
        samples: k,
        seed: None,
    })
}

/// `(1/K) Σ f(R_k)` with `R_k ~ x`.
pub fn estimate_f<O, R>(oracle: &O, x: &MembershipVector, k: usize, rng: &mut R) -> Result<f64>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    if k == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let mut total = 0.0;
    for _ in 0..k {
        total += oracle.eval(&sample_set(x, rng))?;
    }
    Ok(total / k as f64)
}

/// Probability bound `2 exp(-K / (8 T²))` that a `K`-sample gradient entry
/// misses the true partial by more than `f(S*) / (2T)`.
pub fn deviation_probability(t: usize, k: usize) -> f64 {
    2.0 * (-(k as f64) / (8.0 * (t * t) as f64)).exp()
}

/// Smallest `K` with `2 exp(-K / (8 T²)) <= δ`, i.e. `⌈8 T² ln(2/δ)⌉`.
pub fn required_samples(t: usize, delta: f64) -> Result<usize> {
    if t == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("failure probability {delta} outside (0, 1)")));
    }
    let exact = 8.0 * (t * t) as f64 * (2.0 / delta).ln();
    let mut k = exact.ceil() as usize;
    // ln rounding can push an integral bound one past its true value
    if k > 1 && deviation_probability(t, k - 1) <= delta * (1.0 + 1e-12) {
        k -= 1;
    }
    Ok(k.max(1))
}
