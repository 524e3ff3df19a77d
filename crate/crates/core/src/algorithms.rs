//! Distributed continuous greedy over a communication graph, with the
//! centralized continuous greedy, sequential greedy and brute-force baselines.
//!
//! Every agent `i` keeps an [`InfoSet`] `F_i`. One step of the distributed
//! algorithm is, for all agents in lockstep:
//!
//! 1. estimate `∂F/∂x_p` for `p ∈ P_i` from `K_i` sets sampled from `F_i`;
//! 2. pick `p* = argmax w_p` (lowest id on ties) and form `F_i⁻ = F_i ⊕ (p*, 1/T)`;
//! 3. run `hops` synchronous MAX rounds over the graph.
//!
//! After `T` steps each agent's own block carries unit mass and the agent
//! draws one policy from it. [`audit_trace`] replays the recorded trace and
//! checks the dominance and mass-growth invariants the convergence argument
//! rests on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{
    argmax_in_block, sample_one_from_block, AgentId, InfoSet, MembershipVector, Partition, PolicyId, PolicySet,
    PROB_TOL,
};
use crate::multilinear::{estimate_grad_block, GradientEstimate};
use crate::network::{exchange, CommGraph};
use crate::oracle::{marginal, ValueOracle};
use crate::seed::{purpose, stream};

/// Largest feasible search space [`brute_force_opt`] will enumerate.
pub const BRUTE_FORCE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Draw one policy per block with probability equal to its mass.
    #[default]
    Sample,
    /// Take the highest-mass policy per block. Variance-free; not part of the
    /// original procedure.
    Argmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Number of continuous-greedy steps `T`.
    pub steps: usize,
    /// Per-agent sample counts `K_i`.
    pub samples: Vec<usize>,
    /// MAX-consensus rounds per step: 1 is the plain algorithm, `d(G)` gives
    /// every agent the exact global vector.
    pub hops: usize,
    pub rounding: Rounding,
    pub seed: u64,
}

impl RunConfig {
    pub fn uniform(num_agents: usize, steps: usize, samples: usize, hops: usize, seed: u64) -> Self {
        Self {
            steps,
            samples: vec![samples; num_agents],
            hops,
            rounding: Rounding::Sample,
            seed,
        }
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    fn validate(&self, num_agents: usize, diameter: Option<usize>) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if self.samples.len() != num_agents {
            return Err(Error::Config(format!(
                "{} sample counts given for {num_agents} agents",
                self.samples.len()
            )));
        }
        if let Some(agent) = self.samples.iter().position(|&k| k == 0) {
            return Err(Error::Config(format!("agent {agent} has K = 0")));
        }
        if let Some(d) = diameter {
            if self.hops == 0 || self.hops > d.max(1) {
                return Err(Error::Config(format!("hops = {} outside [1, {}]", self.hops, d.max(1))));
            }
        }
        Ok(())
    }
}

/// Everything that happened in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// `F_i(t)` for every agent.
    pub before: Vec<InfoSet>,
    /// `F_i⁻(t+1) = F_i(t) ⊕ (p*_i, 1/T)`.
    pub propagated: Vec<InfoSet>,
    /// `F_i(t+1)` after the exchange rounds.
    pub after: Vec<InfoSet>,
    pub chosen: Vec<PolicyId>,
    pub gradients: Vec<GradientEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    /// Policy each agent ended up with, indexed by agent.
    pub final_choice: Vec<PolicyId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub chosen: PolicySet,
    pub utility: f64,
    pub trace: RunTrace,
}

#[cfg(feature = "parallel")]
fn map_agents<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(AgentId) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_agents<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(AgentId) -> T,
{
    (0..n).map(f).collect()
}

/// One agent's local work for a step: estimate, pick, propagate.
fn local_step<O: ValueOracle + ?Sized>(
    oracle: &O,
    part: &Partition,
    info: &InfoSet,
    agent: AgentId,
    step: usize,
    cfg: &RunConfig,
) -> Result<(GradientEstimate, PolicyId, InfoSet)> {
    let mut rng = stream(cfg.seed, agent, step, purpose::GRADIENT);
    let mut est = estimate_grad_block(oracle, info, part, agent, cfg.samples[agent], &mut rng)?;
    est.seed = Some(crate::seed::derive_seed(
        cfg.seed,
        agent as u64,
        step as u64,
        purpose::GRADIENT,
    ));
    let best = est.argmax();
    let propagated = info.oplus(best, 1.0 / cfg.steps as f64)?;
    Ok((est, best, propagated))
}

fn round_blocks(part: &Partition, beliefs: &[InfoSet], cfg: &RunConfig) -> Result<Vec<PolicyId>> {
    (0..part.num_agents())
        .map(|agent| {
            let block = part.block(agent);
            let x_block: Vec<f64> = block.clone().map(|p| beliefs[agent].get(p).unwrap_or(0.0)).collect();
            let mass: f64 = x_block.iter().sum();
            if (mass - 1.0).abs() > PROB_TOL {
                return Err(Error::InfeasibleOutput { agent, mass });
            }
            match cfg.rounding {
                Rounding::Argmax => Ok(argmax_in_block(&x_block, block.start)),
                Rounding::Sample => {
                    let mut rng = stream(cfg.seed, agent, cfg.steps, purpose::ROUNDING);
                    sample_one_from_block(&x_block, block.start, &mut rng)
                }
            }
        })
        .collect()
}

/// Distributed randomized continuous greedy.
pub fn distributed_cg<O: ValueOracle + ?Sized>(
    oracle: &O,
    part: &Partition,
    graph: &CommGraph,
    cfg: &RunConfig,
) -> Result<RunOutcome> {
    let n_agents = part.num_agents();
    if graph.num_agents() != n_agents {
        return Err(Error::Config(format!(
            "graph has {} agents, partition has {n_agents} blocks",
            graph.num_agents()
        )));
    }
    cfg.validate(n_agents, Some(graph.diameter()))?;

    let mut beliefs = vec![InfoSet::new(); n_agents];
    let mut steps = Vec::with_capacity(cfg.steps);
    for t in 0..cfg.steps {
        let local = map_agents(n_agents, |i| local_step(oracle, part, &beliefs[i], i, t, cfg));
        let mut gradients = Vec::with_capacity(n_agents);
        let mut chosen = Vec::with_capacity(n_agents);
        let mut propagated = Vec::with_capacity(n_agents);
        for r in local {
            let (est, best, prop) = r?;
            gradients.push(est);
            chosen.push(best);
            propagated.push(prop);
        }
        let after = exchange(graph, propagated.clone(), cfg.hops);
        let before = std::mem::replace(&mut beliefs, after.clone());
        steps.push(StepRecord {
            before,
            propagated,
            after,
            chosen,
            gradients,
        });
    }

    let final_choice = round_blocks(part, &beliefs, cfg)?;
    let chosen: PolicySet = final_choice.iter().copied().collect();
    let utility = oracle.eval(&chosen)?;
    Ok(RunOutcome {
        chosen,
        utility,
        trace: RunTrace { steps, final_choice },
    })
}

/// Centralized continuous greedy on a single global membership vector.
///
/// Block `i` is estimated from its own stream `(seed, i, t)`, exactly as agent
/// `i` would in [`distributed_cg`], so on a complete graph the two coincide.
/// Every agent slot of the trace holds the same global belief.
pub fn central_cg<O: ValueOracle + ?Sized>(oracle: &O, part: &Partition, cfg: &RunConfig) -> Result<RunOutcome> {
    let n_agents = part.num_agents();
    cfg.validate(n_agents, None)?;

    let mut global = InfoSet::new();
    let mut steps = Vec::with_capacity(cfg.steps);
    for t in 0..cfg.steps {
        let local = map_agents(n_agents, |i| local_step(oracle, part, &global, i, t, cfg));
        let mut gradients = Vec::with_capacity(n_agents);
        let mut chosen = Vec::with_capacity(n_agents);
        let mut propagated = Vec::with_capacity(n_agents);
        for r in local {
            let (est, best, prop) = r?;
            gradients.push(est);
            chosen.push(best);
            propagated.push(prop);
        }
        let mut next = global.clone();
        for &p in &chosen {
            next.oplus_mut(p, 1.0 / cfg.steps as f64)?;
        }
        steps.push(StepRecord {
            before: vec![global.clone(); n_agents],
            propagated,
            after: vec![next.clone(); n_agents],
            chosen,
            gradients,
        });
        global = next;
    }

    let final_choice = round_blocks(part, &vec![global; n_agents], cfg)?;
    let chosen: PolicySet = final_choice.iter().copied().collect();
    let utility = oracle.eval(&chosen)?;
    Ok(RunOutcome {
        chosen,
        utility,
        trace: RunTrace { steps, final_choice },
    })
}

/// Agents choose in `order`, each taking its best marginal policy given the
/// choices already made (lowest id on ties).
pub fn sequential_greedy<O: ValueOracle + ?Sized>(
    oracle: &O,
    part: &Partition,
    order: &[AgentId],
) -> Result<PolicySet> {
    let n_agents = part.num_agents();
    let mut seen = vec![false; n_agents];
    for &a in order {
        if a >= n_agents || std::mem::replace(&mut seen[a], true) {
            return Err(Error::Config(format!(
                "order {order:?} is not a permutation of 0..{n_agents}"
            )));
        }
    }
    if order.len() != n_agents {
        return Err(Error::Config(format!(
            "order {order:?} is not a permutation of 0..{n_agents}"
        )));
    }

    let mut chosen = PolicySet::new();
    for &agent in order {
        let mut best: Option<(PolicyId, f64)> = None;
        for p in part.block(agent) {
            let gain = marginal(oracle, p, &chosen)?;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((p, gain));
            }
        }
        chosen.insert(best.expect("blocks are non-empty").0);
    }
    Ok(chosen)
}

/// Exhaustive optimum over sets with exactly one policy per block (enough for
/// monotone `f`). Ties go to the lexicographically smallest set.
pub fn brute_force_opt<O: ValueOracle + ?Sized>(oracle: &O, part: &Partition) -> Result<(PolicySet, f64)> {
    let size = part
        .block_sizes()
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
        .unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_CAP {
        return Err(Error::SearchSpaceTooLarge {
            size,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let blocks = part.blocks();
    let mut pick: Vec<PolicyId> = blocks.iter().map(|b| b.start).collect();
    let mut best: Option<(PolicySet, f64)> = None;
    loop {
        let set: PolicySet = pick.iter().copied().collect();
        let value = oracle.eval(&set)?;
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((set, value));
        }
        // odometer, last block fastest, so candidates arrive in lexicographic order
        let mut k = blocks.len();
        loop {
            if k == 0 {
                return Ok(best.expect("at least one candidate"));
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < blocks[k].end {
                break;
            }
            pick[k] = blocks[k].start;
        }
    }
}

/// Lower bounds on `E[f(output)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    /// `(1 - 1/e)(1 - (2N²d + N²/2 + N)/T) f*`, one exchange round per step.
    pub single_hop: f64,
    /// `(1 - 1/e)(1 - (N²/2 + N)/T) f*`, `d(G)` exchange rounds per step.
    pub full_consensus: f64,
}

impl TheoremBound {
    pub fn for_hops(&self, hops: usize, diameter: usize) -> f64 {
        if hops >= diameter {
            self.full_consensus
        } else {
            self.single_hop
        }
    }

    /// A non-positive bound carries no information.
    pub fn single_hop_vacuous(&self) -> bool {
        self.single_hop <= 0.0
    }

    pub fn full_consensus_vacuous(&self) -> bool {
        self.full_consensus <= 0.0
    }
}

pub fn theorem_bound(num_agents: usize, diameter: usize, steps: usize, f_star: f64) -> TheoremBound {
    let n = num_agents as f64;
    let d = diameter as f64;
    let t = steps as f64;
    let ratio = 1.0 - (-1.0f64).exp();
    TheoremBound {
        single_hop: ratio * (1.0 - (2.0 * n * n * d + 0.5 * n * n + n) / t) * f_star,
        full_consensus: ratio * (1.0 - (0.5 * n * n + n) / t) * f_star,
    }
}

/// Probability that every gradient entry over the whole run is accurate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbability {
    /// `(Π_i (1 - 2e^{-K_i/(8T²)})^{|P_i|})^T`, with negative factors clamped to 0.
    pub product: f64,
    /// `1 - 2Tn e^{-min K / (8T²)}`.
    pub simplified: f64,
}

pub fn success_probability(steps: usize, samples: &[usize], block_sizes: &[usize]) -> SuccessProbability {
    assert_eq!(samples.len(), block_sizes.len(), "one K per block");
    let t = steps as f64;
    let scale = 8.0 * t * t;
    let mut log_product = 0.0;
    for (&k, &size) in samples.iter().zip(block_sizes) {
        let factor = 1.0 - 2.0 * (-(k as f64) / scale).exp();
        if factor <= 0.0 {
            log_product = f64::NEG_INFINITY;
            break;
        }
        log_product += size as f64 * factor.ln();
    }
    let product = (t * log_product).exp();
    let n: usize = block_sizes.iter().sum();
    let k_min = samples.iter().copied().min().unwrap_or(0) as f64;
    let simplified = 1.0 - 2.0 * t * n as f64 * (-k_min / scale).exp();
    debug_assert!(product + 1e-12 >= simplified);
    SuccessProbability { product, simplified }
}

/// A failed runtime invariant, located by step and agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditViolation {
    pub check: &'static str,
    pub step: usize,
    pub agent: Option<AgentId>,
    pub detail: String,
}

impl std::fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} violated at step {}", self.check, self.step)?;
        if let Some(a) = self.agent {
            write!(f, " (agent {a})")?;
        }
        write!(f, ": {}", self.detail)
    }
}

const AUDIT_TOL: f64 = 1e-9;

/// Stack of own blocks, `x̄ = (x_11, ..., x_NN)`.
fn own_blocks(part: &Partition, xs: &[MembershipVector]) -> Vec<f64> {
    let mut bar = vec![0.0; part.n()];
    for (i, x) in xs.iter().enumerate() {
        for p in part.block(i) {
            bar[p] = x.get(p);
        }
    }
    bar
}

fn check_beliefs(
    part: &Partition,
    graph: &CommGraph,
    cfg: &RunConfig,
    t: usize,
    beliefs: &[InfoSet],
) -> std::result::Result<Vec<f64>, AuditViolation> {
    let steps = cfg.steps as f64;
    let n_agents = part.num_agents() as f64;
    let fail = |check, agent, detail| AuditViolation {
        check,
        step: t,
        agent,
        detail,
    };
    let xs: Vec<MembershipVector> = beliefs
        .iter()
        .enumerate()
        .map(|(i, b)| {
            b.to_membership_vector(part)
                .map_err(|e| fail("membership vector", Some(i), e.to_string()))
        })
        .collect::<std::result::Result<_, _>>()?;

    for (i, x) in xs.iter().enumerate() {
        let block = part.block(i);
        for (j, other) in xs.iter().enumerate().filter(|&(j, _)| j != i) {
            if let Some(p) = block.clone().find(|&p| other.get(p) > x.get(p) + AUDIT_TOL) {
                return Err(fail(
                    "own-block dominance",
                    Some(i),
                    format!("agent {j} believes x_{p} = {} > owner's {}", other.get(p), x.get(p)),
                ));
            }
        }
        let mass: f64 = x.block(block).iter().sum();
        if (mass - t as f64 / steps).abs() > AUDIT_TOL {
            return Err(fail(
                "own-block mass = t/T",
                Some(i),
                format!("mass {mass}, expected {}", t as f64 / steps),
            ));
        }
    }

    let bar = own_blocks(part, &xs);
    let staleness = graph.diameter() as f64 / steps;
    for (i, x) in xs.iter().enumerate() {
        let gap: f64 = bar.iter().zip(x.as_slice()).map(|(b, a)| b - a).sum::<f64>() / n_agents;
        if gap < -AUDIT_TOL || gap > staleness + AUDIT_TOL {
            return Err(fail(
                "belief gap in [0, d/T]",
                Some(i),
                format!("gap {gap}, bound {staleness}"),
            ));
        }
        if cfg.hops >= graph.diameter() {
            if let Some(p) = (0..part.n()).find(|&p| (bar[p] - x.get(p)).abs() > AUDIT_TOL) {
                return Err(fail(
                    "exact consensus",
                    Some(i),
                    format!("x_{p} = {} but global value is {}", x.get(p), bar[p]),
                ));
            }
        }
    }
    Ok(bar)
}

/// Replays a [`distributed_cg`] trace and checks, at every step:
/// own-block dominance, own-block mass `t/T`, the belief gap
/// `0 <= (1/N) 1·(x̄ - x_i) <= d/T`, the global increment
/// `x̄(t+1) - x̄(t) = (1/T) Σ_i 1_{p*_i}` with average `1/T`, exact consensus when
/// `hops >= d(G)`, and finally one chosen policy per block.
pub fn audit_trace(
    trace: &RunTrace,
    part: &Partition,
    graph: &CommGraph,
    cfg: &RunConfig,
) -> std::result::Result<(), AuditViolation> {
    let n_agents = part.num_agents();
    let fail = |check, step, agent, detail| AuditViolation {
        check,
        step,
        agent,
        detail,
    };
    if trace.steps.len() != cfg.steps {
        return Err(fail(
            "trace length",
            0,
            None,
            format!("{} steps recorded, T = {}", trace.steps.len(), cfg.steps),
        ));
    }
    if let Some(first) = trace.steps.first() {
        if let Some(i) = first.before.iter().position(|b| !b.is_empty()) {
            return Err(fail(
                "empty initial beliefs",
                0,
                Some(i),
                format!("{:?}", first.before[i]),
            ));
        }
    }
    let step_size = 1.0 / cfg.steps as f64;
    for (t, rec) in trace.steps.iter().enumerate() {
        if rec.chosen.len() != n_agents {
            return Err(fail(
                "one choice per agent",
                t,
                None,
                format!("{} choices", rec.chosen.len()),
            ));
        }
        for (i, &p) in rec.chosen.iter().enumerate() {
            if !part.block(i).contains(&p) {
                return Err(fail("choice inside own block", t, Some(i), format!("chose {p}")));
            }
        }
        if t > 0 && trace.steps[t - 1].after != rec.before {
            return Err(fail(
                "trace continuity",
                t,
                None,
                "beliefs changed between steps".into(),
            ));
        }
        let bar_before = check_beliefs(part, graph, cfg, t, &rec.before)?;
        let bar_after = check_beliefs(part, graph, cfg, t + 1, &rec.after)?;

        let mut expected = bar_before.clone();
        for &p in &rec.chosen {
            expected[p] += step_size;
        }
        if let Some(p) = (0..part.n()).find(|&p| (expected[p] - bar_after[p]).abs() > AUDIT_TOL) {
            return Err(fail(
                "global increment = (1/T) Σ v_i",
                t,
                part.agent_of(p),
                format!("x̄_{p} moved to {}, expected {}", bar_after[p], expected[p]),
            ));
        }
        let avg: f64 = bar_after.iter().zip(&bar_before).map(|(a, b)| a - b).sum::<f64>() / n_agents as f64;
        if (avg - step_size).abs() > AUDIT_TOL {
            return Err(fail("average increment = 1/T", t, None, format!("{avg}")));
        }
    }
    if trace.final_choice.len() != n_agents {
        return Err(fail(
            "feasible output",
            cfg.steps,
            None,
            format!("{:?}", trace.final_choice),
        ));
    }
    for (i, &p) in trace.final_choice.iter().enumerate() {
        if !part.block(i).contains(&p) {
            return Err(fail("feasible output", cfg.steps, Some(i), format!("policy {p}")));
        }
    }
    Ok(())
}
