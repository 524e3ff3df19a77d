//! Experiment harness: scenario generation, parameter sweeps, invariant
//! auditing and CSV output.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    audit_trace, brute_force_opt, central_cg, distributed_cg, sequential_greedy, success_probability, theorem_bound,
    Rounding, RunConfig,
};
use crate::error::{Error, Result};
use crate::ground::AgentId;
use crate::oracle::ValueOracle;
use crate::scenario::{AgentSpec, CoverageScenario, Field, GraphSpec, InterestPoints, Placements, ScenarioFile};

pub const CSV_HEADER: &str = "algo,T,K,hops,seed,order,utility,bound,success_prob,audit,ms";

/// Six ring routes over five agents: the five rotations of `0→1→2→3→4` and
/// the reversed route starting from the last agent.
pub const RING_ROUTES: [[AgentId; 5]; 6] = [
    [0, 1, 2, 3, 4],
    [1, 2, 3, 4, 0],
    [2, 3, 4, 0, 1],
    [3, 4, 0, 1, 2],
    [4, 0, 1, 2, 3],
    [4, 3, 2, 1, 0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Distributed,
    Central,
    Sequential,
    Brute,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Distributed => "distributed",
            Algo::Central => "central",
            Algo::Sequential => "sequential",
            Algo::Brute => "brute",
        }
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distributed" => Ok(Algo::Distributed),
            "central" => Ok(Algo::Central),
            "sequential" => Ok(Algo::Sequential),
            "brute" => Ok(Algo::Brute),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Exchange rounds per step: a fixed count, or the graph diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hops {
    Fixed(usize),
    Diameter,
}

impl Hops {
    pub fn resolve(self, diameter: usize) -> usize {
        match self {
            Hops::Fixed(h) => h,
            Hops::Diameter => diameter.max(1),
        }
    }
}

impl FromStr for Hops {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d" | "diameter" => Ok(Hops::Diameter),
            n => n
                .parse()
                .map(Hops::Fixed)
                .map_err(|_| Error::Config(format!("hops must be a count or 'd', got {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub algorithm: Algo,
    pub steps: Vec<usize>,
    pub samples: Vec<usize>,
    pub hops: Vec<Hops>,
    pub seeds: Vec<u64>,
    /// Agent orders for the sequential baseline.
    pub orders: Vec<Vec<AgentId>>,
    pub rounding: Rounding,
    /// Record wall time per row. Off gives byte-identical output across runs.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(algorithm: Algo) -> Self {
        Self {
            algorithm,
            steps: vec![20],
            samples: vec![500],
            hops: vec![Hops::Fixed(1)],
            seeds: vec![0],
            orders: Vec::new(),
            rounding: Rounding::Sample,
            timing: false,
        }
    }

    fn validate(&self, num_agents: usize) -> Result<()> {
        let empty = |what: &str| Error::Config(format!("sweep list {what} is empty"));
        match self.algorithm {
            Algo::Distributed | Algo::Central => {
                if self.steps.is_empty() {
                    return Err(empty("T"));
                }
                if self.samples.is_empty() {
                    return Err(empty("K"));
                }
                if self.hops.is_empty() {
                    return Err(empty("hops"));
                }
                if self.seeds.is_empty() {
                    return Err(empty("seeds"));
                }
                let mut sorted = self.seeds.clone();
                sorted.sort_unstable();
                if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::Config(format!("seed {} listed twice", w[0])));
                }
            }
            Algo::Sequential => {
                for order in &self.orders {
                    let mut seen = order.clone();
                    seen.sort_unstable();
                    if seen != (0..num_agents).collect::<Vec<_>>() {
                        return Err(Error::Config(format!(
                            "order {order:?} is not a permutation of 0..{num_agents}"
                        )));
                    }
                }
            }
            Algo::Brute => {}
        }
        Ok(())
    }
}

/// One CSV row. Fields that do not apply to an algorithm are `None` and
/// written empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algo: Algo,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub hops: Option<usize>,
    pub seed: Option<u64>,
    pub order: Option<Vec<AgentId>>,
    pub utility: f64,
    pub bound: Option<f64>,
    pub success_prob: Option<f64>,
    pub audit: Option<bool>,
    pub ms: Option<f64>,
}

impl ResultRow {
    fn bare(algo: Algo, utility: f64) -> Self {
        Self {
            algo,
            steps: None,
            samples: None,
            hops: None,
            seed: None,
            order: None,
            utility,
            bound: None,
            success_prob: None,
            audit: None,
            ms: None,
        }
    }

    pub fn to_csv_line(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        let order = self
            .order
            .as_ref()
            .map(|o| o.iter().map(ToString::to_string).collect::<Vec<_>>().join("-"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.algo.name(),
            opt(&self.steps),
            opt(&self.samples),
            opt(&self.hops),
            opt(&self.seed),
            order,
            self.utility,
            self.bound.map(|b| format!("{b:.6}")).unwrap_or_default(),
            self.success_prob.map(|p| format!("{p:.6}")).unwrap_or_default(),
            self.audit.map(|a| if a { "pass" } else { "fail" }).unwrap_or_default(),
            self.ms.map(|m| format!("{m:.3}")).unwrap_or_default(),
        )
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

#[cfg(feature = "parallel")]
fn map_cells<C: Sync, T: Send>(cells: &[C], f: impl Fn(&C) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    cells.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<C, T>(cells: &[C], f: impl Fn(&C) -> T) -> Vec<T> {
    cells.iter().map(f).collect()
}

/// Optimum value when the feasible space is small enough to enumerate.
pub fn known_optimum(scenario: &CoverageScenario) -> Option<f64> {
    brute_force_opt(scenario.oracle(), scenario.partition())
        .ok()
        .map(|(_, v)| v)
}

/// Runs every cell of the sweep and returns rows in sweep order
/// (`T`, then `K`, then hops, then seed), regardless of completion order.
pub fn run_experiment(scenario: &CoverageScenario, spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let n_agents = scenario.num_agents();
    spec.validate(n_agents)?;
    let oracle = scenario.oracle();
    let part = scenario.partition();
    let graph = scenario.graph();
    let timed = |f: &dyn Fn() -> Result<ResultRow>| -> Result<ResultRow> {
        let start = Instant::now();
        let mut row = f()?;
        if spec.timing {
            row.ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        Ok(row)
    };

    match spec.algorithm {
        Algo::Brute => {
            let row = timed(&|| {
                let (_, value) = brute_force_opt(oracle, part)?;
                Ok(ResultRow::bare(Algo::Brute, value))
            })?;
            Ok(vec![row])
        }
        Algo::Sequential => {
            let orders = if spec.orders.is_empty() {
                vec![(0..n_agents).collect()]
            } else {
                spec.orders.clone()
            };
            map_cells(&orders, |order| {
                timed(&|| {
                    let chosen = sequential_greedy(oracle, part, order)?;
                    let mut row = ResultRow::bare(Algo::Sequential, oracle.eval(&chosen)?);
                    row.order = Some(order.clone());
                    Ok(row)
                })
            })
            .into_iter()
            .collect()
        }
        Algo::Distributed | Algo::Central => {
            let f_star = known_optimum(scenario);
            let diameter = graph.diameter();
            let mut cells = Vec::new();
            for &t in &spec.steps {
                for &k in &spec.samples {
                    for &h in &spec.hops {
                        for &seed in &spec.seeds {
                            cells.push((t, k, h.resolve(diameter), seed));
                        }
                    }
                }
            }
            let algo = spec.algorithm;
            map_cells(&cells, |&(t, k, hops, seed)| {
                timed(&|| {
                    let cfg = RunConfig::uniform(n_agents, t, k, hops, seed).with_rounding(spec.rounding);
                    let (outcome, audit, bound) = if algo == Algo::Distributed {
                        let out = distributed_cg(oracle, part, graph, &cfg)?;
                        let audit = audit_trace(&out.trace, part, graph, &cfg).is_ok();
                        let bound = f_star.map(|f| theorem_bound(n_agents, diameter, t, f).for_hops(hops, diameter));
                        (out, Some(audit), bound)
                    } else {
                        let out = central_cg(oracle, part, &cfg)?;
                        let bound = f_star.map(|f| theorem_bound(n_agents, diameter, t, f).full_consensus);
                        (out, None, bound)
                    };
                    let mut row = ResultRow::bare(algo, outcome.utility);
                    row.steps = Some(t);
                    row.samples = Some(k);
                    row.hops = (algo == Algo::Distributed).then_some(hops);
                    row.seed = Some(seed);
                    row.bound = bound;
                    row.success_prob = Some(success_probability(t, &cfg.samples, &part.block_sizes()).product);
                    row.audit = audit;
                    Ok(row)
                })
            })
            .into_iter()
            .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Ring,
    Path,
    Complete,
    Star,
}

impl GraphKind {
    pub fn edges(self, n: usize) -> Vec<[AgentId; 2]> {
        match self {
            GraphKind::Ring if n >= 3 => (0..n).map(|i| [i, (i + 1) % n]).collect(),
            GraphKind::Ring | GraphKind::Path => (1..n).map(|i| [i - 1, i]).collect(),
            GraphKind::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| [i, j])).collect(),
            GraphKind::Star => (1..n).map(|i| [0, i]).collect(),
        }
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(GraphKind::Ring),
            "path" => Ok(GraphKind::Path),
            "complete" => Ok(GraphKind::Complete),
            "star" => Ok(GraphKind::Star),
            other => Err(Error::Config(format!("unknown graph kind {other:?}"))),
        }
    }
}

/// Parameters for [`generate_scenario`]. The default is the 5-agent study:
/// a 6 x 6 field, a 6 x 6 placement lattice at the unit-cell centres, 900
/// uniform interest points, radii 0.5 to 1.5 and a ring graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    pub points: usize,
    pub radii: Vec<f64>,
    pub graph: GraphKind,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            field: Field {
                width: 6.0,
                height: 6.0,
            },
            rows: 6,
            cols: 6,
            points: 900,
            radii: vec![0.5, 0.6, 0.7, 0.8, 1.5],
            graph: GraphKind::Ring,
        }
    }
}

/// Builds a scenario with explicit interest points; every agent may use every
/// placement. The same `(params, seed)` always yields the same file.
pub fn generate_scenario(params: &GeneratorParams, seed: u64) -> Result<ScenarioFile> {
    if params.rows == 0 || params.cols == 0 || params.radii.is_empty() {
        return Err(Error::Config(
            "generator needs at least one placement and one agent".into(),
        ));
    }
    let f = params.field;
    let (dx, dy) = (f.width / params.cols as f64, f.height / params.rows as f64);
    let grid = if params.rows * params.cols == 1 {
        Placements::Points(vec![[f.width / 2.0, f.height / 2.0]])
    } else {
        Placements::Grid {
            rows: params.rows,
            cols: params.cols,
            min: [dx / 2.0, dy / 2.0],
            max: [f.width - dx / 2.0, f.height - dy / 2.0],
        }
    };
    let file = ScenarioFile {
        field: f,
        grid,
        interest_points: InterestPoints::Points(crate::scenario::random_points(f, params.points, seed)),
        agents: params
            .radii
            .iter()
            .map(|&radius| AgentSpec { allowed: None, radius })
            .collect(),
        graph: GraphSpec {
            edges: params.graph.edges(params.radii.len()),
        },
    };
    CoverageScenario::from_file(&file)?;
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub sequential: Vec<(Vec<AgentId>, f64)>,
    pub distributed: Vec<(u64, f64)>,
    pub sequential_spread: f64,
    pub distributed_spread: f64,
    pub distributed_iqr: f64,
}

impl SensitivityReport {
    /// `kind,label,utility` rows for both distributions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,label,utility\n");
        for (order, u) in &self.sequential {
            let label = order.iter().map(ToString::to_string).collect::<Vec<_>>().join("-");
            writeln!(out, "sequential,{label},{u}").unwrap();
        }
        for (seed, u) in &self.distributed {
            writeln!(out, "distributed,{seed},{u}").unwrap();
        }
        out
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        0.0
    } else {
        max - min
    }
}

/// Linear-interpolation quantile of unsorted data, `q ∈ [0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty data");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Compares how much sequential greedy moves across agent orders with how much
/// the distributed algorithm moves across seeds. `template.seed` is ignored.
pub fn sequence_sensitivity_report(
    scenario: &CoverageScenario,
    orders: &[Vec<AgentId>],
    template: &RunConfig,
    seeds: &[u64],
) -> Result<SensitivityReport> {
    if orders.is_empty() || seeds.is_empty() {
        return Err(Error::Config("need at least one order and one seed".into()));
    }
    let oracle = scenario.oracle();
    let part = scenario.partition();
    let sequential = orders
        .iter()
        .map(|o| Ok((o.clone(), oracle.eval(&sequential_greedy(oracle, part, o)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let distributed = map_cells(seeds, |&seed| {
        let cfg = RunConfig {
            seed,
            ..template.clone()
        };
        distributed_cg(oracle, part, scenario.graph(), &cfg).map(|o| (seed, o.utility))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let seq_values: Vec<f64> = sequential.iter().map(|s| s.1).collect();
    let dist_values: Vec<f64> = distributed.iter().map(|d| d.1).collect();
    Ok(SensitivityReport {
        sequential_spread: spread(&seq_values),
        distributed_spread: spread(&dist_values),
        distributed_iqr: quantile(&dist_values, 0.75) - quantile(&dist_values, 0.25),
        sequential,
        distributed,
    })
}
