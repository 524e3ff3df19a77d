//! Sensor-placement scenario files.
//!
//! ```json
//! {
//!   "field": { "width": 6.0, "height": 6.0 },
//!   "grid": { "rows": 6, "cols": 6, "min": [0.5, 0.5], "max": [5.5, 5.5] },
//!   "interest_points": { "count": 900, "seed": 7 },
//!   "agents": [ { "allowed": [0, 1, 2], "radius": 0.5 }, { "radius": 1.5 } ],
//!   "graph": { "edges": [[0, 1]] }
//! }
//! ```
//!
//! * `grid` is either an evenly spaced `rows x cols` lattice from `min` to
//!   `max` (inclusive) or an explicit list of `[x, y]` placements.
//! * `interest_points` is either an explicit list of `[x, y]` points or
//!   `{count, seed}`, drawn uniformly over the field.
//! * `agents[i].allowed` lists placement indices agent `i` may use; omitted
//!   means every placement. Agent `i`'s policies are its allowed placements in
//!   listed order, numbered after those of agents `0..i`.
//! * `graph.edges` are undirected agent pairs, zero-based.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{AgentId, Partition, PolicyId};
use crate::network::CommGraph;
use crate::oracle::CoverageOracle;
use crate::seed::{purpose, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Placements {
    Grid {
        rows: usize,
        cols: usize,
        min: [f64; 2],
        max: [f64; 2],
    },
    Points(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterestPoints {
    Random { count: usize, seed: u64 },
    Points(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<usize>>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub edges: Vec<[AgentId; 2]>,
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub field: Field,
    pub grid: Placements,
    pub interest_points: InterestPoints,
    pub agents: Vec<AgentSpec>,
    pub graph: GraphSpec,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Two sensors, two placements: the large one covers 10 points at A and 5
    /// at B, the small one a subset of 4 at A and 3 at B.
    pub fn two_cluster() -> Self {
        let a = [2.0, 2.0];
        let b = [8.0, 2.0];
        let points = vec![
            // A, within 0.5
            [2.2, 2.0],
            [1.8, 2.0],
            [2.0, 2.2],
            [2.0, 1.8],
            // A, between 0.5 and 1.5
            [3.0, 2.0],
            [1.0, 2.0],
            [2.0, 3.0],
            [2.0, 1.0],
            [2.7, 2.7],
            [1.3, 1.3],
            // B, within 0.5
            [8.2, 2.0],
            [7.8, 2.0],
            [8.0, 2.2],
            // B, between 0.5 and 1.5
            [9.0, 2.0],
            [7.0, 2.0],
        ];
        Self {
            field: Field {
                width: 10.0,
                height: 4.0,
            },
            grid: Placements::Points(vec![a, b]),
            interest_points: InterestPoints::Points(points),
            agents: vec![
                AgentSpec {
                    allowed: None,
                    radius: 1.5,
                },
                AgentSpec {
                    allowed: None,
                    radius: 0.5,
                },
            ],
            graph: GraphSpec { edges: vec![[0, 1]] },
        }
    }
}

/// Uniform points over `[0, width] x [0, height]`.
pub fn random_points(field: Field, count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = stream(seed, 0, 0, purpose::SCENARIO);
    (0..count)
        .map(|_| {
            let x = rng.random::<f64>() * field.width;
            let y = rng.random::<f64>() * field.height;
            [x, y]
        })
        .collect()
}

/// A resolved scenario: explicit geometry, policy numbering, oracle and graph.
#[derive(Debug, Clone)]
pub struct CoverageScenario {
    pub field: Field,
    pub placements: Vec<[f64; 2]>,
    pub interest_points: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    /// `allowed[i][k]` is the placement of agent `i`'s `k`-th policy.
    pub allowed: Vec<Vec<usize>>,
    partition: Partition,
    oracle: CoverageOracle,
    graph: CommGraph,
}

impl CoverageScenario {
    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        let bad = |msg: String| Error::Scenario(msg);
        let f = file.field;
        if !(f.width.is_finite() && f.height.is_finite() && f.width > 0.0 && f.height > 0.0) {
            return Err(bad(format!(
                "field must have positive size, got {} x {}",
                f.width, f.height
            )));
        }
        let placements = match &file.grid {
            Placements::Points(pts) => pts.clone(),
            &Placements::Grid { rows, cols, min, max } => {
                let lerp = |lo: f64, hi: f64, k: usize, n: usize| {
                    if n <= 1 {
                        lo
                    } else {
                        lo + (hi - lo) * k as f64 / (n - 1) as f64
                    }
                };
                (0..rows)
                    .flat_map(|r| (0..cols).map(move |c| (r, c)))
                    .map(|(r, c)| [lerp(min[0], max[0], c, cols), lerp(min[1], max[1], r, rows)])
                    .collect()
            }
        };
        if placements.is_empty() {
            return Err(bad("scenario has no placements".into()));
        }
        let interest_points = match &file.interest_points {
            InterestPoints::Points(pts) => pts.clone(),
            &InterestPoints::Random { count, seed } => random_points(f, count, seed),
        };
        if file.agents.is_empty() {
            return Err(bad("scenario has no agents".into()));
        }

        let mut allowed = Vec::with_capacity(file.agents.len());
        let mut radii = Vec::with_capacity(file.agents.len());
        let mut disks = Vec::new();
        for (i, agent) in file.agents.iter().enumerate() {
            if !(agent.radius.is_finite() && agent.radius >= 0.0) {
                return Err(bad(format!("agent {i} has invalid radius {}", agent.radius)));
            }
            let list = agent.allowed.clone().unwrap_or_else(|| (0..placements.len()).collect());
            if list.is_empty() {
                return Err(bad(format!("agent {i} has no allowed placements")));
            }
            if let Some(&b) = list.iter().find(|&&b| b >= placements.len()) {
                return Err(bad(format!(
                    "agent {i} allows placement {b}, only {} exist",
                    placements.len()
                )));
            }
            disks.extend(list.iter().map(|&b| (placements[b], agent.radius)));
            radii.push(agent.radius);
            allowed.push(list);
        }
        let sizes: Vec<usize> = allowed.iter().map(Vec::len).collect();
        let partition = Partition::from_sizes(&sizes)?;
        let oracle = CoverageOracle::from_disks(&interest_points, &disks);
        let edges: Vec<(AgentId, AgentId)> = file.graph.edges.iter().map(|&[i, j]| (i, j)).collect();
        let graph = CommGraph::new(file.agents.len(), &edges).map_err(|e| bad(format!("graph: {e}")))?;
        Ok(Self {
            field: f,
            placements,
            interest_points,
            radii,
            allowed,
            partition,
            oracle,
            graph,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&ScenarioFile::from_json(text)?)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn oracle(&self) -> &CoverageOracle {
        &self.oracle
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn num_agents(&self) -> usize {
        self.allowed.len()
    }

    /// `(agent, placement index)` of a policy.
    pub fn policy(&self, p: PolicyId) -> Option<(AgentId, usize)> {
        let agent = self.partition.agent_of(p)?;
        Some((agent, self.allowed[agent][p - self.partition.block(agent).start]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::PolicySet;
    use crate::oracle::ValueOracle;

    #[test]
    fn two_cluster_fixture_counts() {
        let sc = CoverageScenario::from_file(&ScenarioFile::two_cluster()).unwrap();
        let o = sc.oracle();
        let single = |p| o.eval(&[p].into_iter().collect()).unwrap();
        // orange = {0: A, 1: B}, blue = {2: A, 3: B}
        assert_eq!([single(0), single(1), single(2), single(3)], [10.0, 5.0, 4.0, 3.0]);
        let union = |ps: &[PolicyId]| o.eval(&ps.iter().copied().collect::<PolicySet>()).unwrap();
        assert_eq!(union(&[0, 2]), 10.0);
        assert_eq!(union(&[1, 3]), 5.0);
        assert_eq!(union(&[0, 3]), 13.0);
        assert_eq!(sc.policy(3), Some((1, 1)));
        assert_eq!(sc.graph().diameter(), 1);
    }

    #[test]
    fn json_round_trip_and_random_points() {
        let text = r#"{
            "field": {"width": 6, "height": 6},
            "grid": {"rows": 2, "cols": 3, "min": [1, 1], "max": [5, 3]},
            "interest_points": {"count": 50, "seed": 3},
            "agents": [{"allowed": [0, 5], "radius": 1.0}, {"radius": 2.0}],
            "graph": {"edges": [[0, 1]]}
        }"#;
        let file = ScenarioFile::from_json(text).unwrap();
        assert_eq!(ScenarioFile::from_json(&file.to_json()).unwrap(), file);
        let sc = CoverageScenario::from_file(&file).unwrap();
        assert_eq!(
            sc.placements,
            vec![[1.0, 1.0], [3.0, 1.0], [5.0, 1.0], [1.0, 3.0], [3.0, 3.0], [5.0, 3.0]]
        );
        assert_eq!(sc.partition().block_sizes(), vec![2, 6]);
        assert_eq!(sc.policy(1), Some((0, 5)));
        assert_eq!(sc.interest_points.len(), 50);
        assert!(sc
            .interest_points
            .iter()
            .all(|&[x, y]| (0.0..6.0).contains(&x) && (0.0..6.0).contains(&y)));
        let again = CoverageScenario::from_file(&file).unwrap();
        assert_eq!(again.interest_points, sc.interest_points);
    }

    #[test]
    fn schema_errors_are_located() {
        let err =
            ScenarioFile::from_json("{\n  \"field\": {\"width\": 1, \"height\": 1},\n  \"grid\": 7\n}").unwrap_err();
        assert!(err.to_string().contains("Placements"), "{err}");
        let err = ScenarioFile::from_json("{\n  \"field\": {\"width\": \"wide\", \"height\": 1}\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let unknown = ScenarioFile::from_json(r#"{"field": {"width": 1, "height": 1, "depth": 2}}"#).unwrap_err();
        assert!(unknown.to_string().contains("depth"), "{unknown}");
    }

    #[test]
    fn invalid_scenarios() {
        let mut f = ScenarioFile::two_cluster();
        f.graph.edges = vec![[0, 2]];
        let err = CoverageScenario::from_file(&f).unwrap_err().to_string();
        assert!(err.contains("(0, 2)"), "{err}");

        let mut f = ScenarioFile::two_cluster();
        f.graph.edges.clear();
        assert!(CoverageScenario::from_file(&f)
            .unwrap_err()
            .to_string()
            .contains("disconnected"));

        let mut f = ScenarioFile::two_cluster();
        f.agents[1].allowed = Some(vec![2]);
        assert!(CoverageScenario::from_file(&f).is_err());

        let mut f = ScenarioFile::two_cluster();
        f.agents[0].allowed = Some(vec![]);
        assert!(CoverageScenario::from_file(&f).is_err());
    }
}
