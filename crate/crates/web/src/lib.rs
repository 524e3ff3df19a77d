//! Browser bindings for the sensor-placement demo. Every export takes and
//! returns JSON strings; the plain functions are callable natively for tests.

use dcg_core::algorithms::{audit_trace, distributed_cg, sequential_greedy, RunConfig};
use dcg_core::experiments::{generate_scenario, GeneratorParams, GraphKind};
use dcg_core::ground::PolicySet;
use dcg_core::oracle::ValueOracle;
use dcg_core::scenario::{CoverageScenario, ScenarioFile};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct View<'a> {
    width: f64,
    height: f64,
    placements: &'a [[f64; 2]],
    points: &'a [[f64; 2]],
    radii: &'a [f64],
    edges: Vec<(usize, usize)>,
    diameter: usize,
}

/// One chosen sensor: agent, placement index and its centre.
#[derive(Serialize)]
struct Pick {
    agent: usize,
    placement: usize,
    at: [f64; 2],
}

#[derive(Serialize)]
struct Outcome {
    utility: f64,
    picks: Vec<Pick>,
    covered: Vec<bool>,
    /// `beliefs[t][i]` lists `(placement, mass)` of agent `i`'s own block after step `t`.
    beliefs: Vec<Vec<Vec<(usize, f64)>>>,
    audit: Option<String>,
}

fn load(scenario_json: &str) -> Result<CoverageScenario, String> {
    CoverageScenario::from_json(scenario_json).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn outcome(sc: &CoverageScenario, chosen: &PolicySet) -> Result<Outcome, String> {
    let picks = chosen
        .iter()
        .map(|p| {
            let (agent, placement) = sc.policy(p).expect("chosen policy exists");
            Pick {
                agent,
                placement,
                at: sc.placements[placement],
            }
        })
        .collect::<Vec<_>>();
    let covered_by: Vec<usize> = chosen.iter().flat_map(|p| sc.oracle().covered_points(p)).collect();
    let mut covered = vec![false; sc.interest_points.len()];
    for k in covered_by {
        covered[k] = true;
    }
    Ok(Outcome {
        utility: sc.oracle().eval(chosen).map_err(|e| e.to_string())?,
        picks,
        covered,
        beliefs: Vec::new(),
        audit: None,
    })
}

/// Random scenario with the default field, lattice and radii.
pub fn generate(seed: u64, points: usize, graph: &str) -> Result<String, String> {
    let params = GeneratorParams {
        points,
        graph: graph.parse::<GraphKind>().map_err(|e| e.to_string())?,
        ..GeneratorParams::default()
    };
    generate_scenario(&params, seed)
        .map(|f| f.to_json())
        .map_err(|e| e.to_string())
}

pub fn two_cluster() -> String {
    ScenarioFile::two_cluster().to_json()
}

/// Geometry needed to draw a scenario.
pub fn describe(scenario_json: &str) -> Result<String, String> {
    let sc = load(scenario_json)?;
    to_json(&View {
        width: sc.field.width,
        height: sc.field.height,
        placements: &sc.placements,
        points: &sc.interest_points,
        radii: &sc.radii,
        edges: sc.graph().edges(),
        diameter: sc.graph().diameter(),
    })
}

/// Runs the distributed algorithm and reports the placement, covered points and
/// every agent's own-block belief after each step.
pub fn run_distributed(
    scenario_json: &str,
    steps: usize,
    samples: usize,
    hops: usize,
    seed: u64,
) -> Result<String, String> {
    let sc = load(scenario_json)?;
    let part = sc.partition();
    let cfg = RunConfig::uniform(sc.num_agents(), steps, samples, hops, seed);
    let run = distributed_cg(sc.oracle(), part, sc.graph(), &cfg).map_err(|e| e.to_string())?;
    let mut out = outcome(&sc, &run.chosen)?;
    out.beliefs = run
        .trace
        .steps
        .iter()
        .map(|step| {
            step.after
                .iter()
                .enumerate()
                .map(|(i, belief)| {
                    belief
                        .range(part.block(i))
                        .map(|(p, a)| (sc.policy(p).expect("policy in block").1, a))
                        .collect()
                })
                .collect()
        })
        .collect();
    out.audit = audit_trace(&run.trace, part, sc.graph(), &cfg)
        .err()
        .map(|v| v.to_string());
    to_json(&out)
}

/// Sequential greedy in the given agent order.
pub fn run_sequential(scenario_json: &str, order: &[usize]) -> Result<String, String> {
    let sc = load(scenario_json)?;
    let chosen = sequential_greedy(sc.oracle(), sc.partition(), order).map_err(|e| e.to_string())?;
    to_json(&outcome(&sc, &chosen)?)
}

#[wasm_bindgen(js_name = generateScenario)]
pub fn generate_js(seed: u32, points: u32, graph: &str) -> Result<String, JsValue> {
    generate(u64::from(seed), points as usize, graph).map_err(JsValue::from)
}

#[wasm_bindgen(js_name = twoCluster)]
pub fn two_cluster_js() -> String {
    two_cluster()
}

#[wasm_bindgen(js_name = describe)]
pub fn describe_js(scenario_json: &str) -> Result<String, JsValue> {
    describe(scenario_json).map_err(JsValue::from)
}

#[wasm_bindgen(js_name = runDistributed)]
pub fn run_distributed_js(
    scenario_json: &str,
    steps: u32,
    samples: u32,
    hops: u32,
    seed: u32,
) -> Result<String, JsValue> {
    run_distributed(
        scenario_json,
        steps as usize,
        samples as usize,
        hops as usize,
        u64::from(seed),
    )
    .map_err(JsValue::from)
}

#[wasm_bindgen(js_name = runSequential)]
pub fn run_sequential_js(scenario_json: &str, order: Vec<u32>) -> Result<String, JsValue> {
    let order: Vec<usize> = order.into_iter().map(|a| a as usize).collect();
    run_sequential(scenario_json, &order).map_err(JsValue::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn fixture_round_trip() {
        let text = two_cluster();
        let view: Value = serde_json::from_str(&describe(&text).unwrap()).unwrap();
        assert_eq!(view["placements"].as_array().unwrap().len(), 2);
        assert_eq!(view["points"].as_array().unwrap().len(), 15);

        let blue_first: Value = serde_json::from_str(&run_sequential(&text, &[1, 0]).unwrap()).unwrap();
        assert_eq!(blue_first["utility"], 10.0);
        let orange_first: Value = serde_json::from_str(&run_sequential(&text, &[0, 1]).unwrap()).unwrap();
        assert_eq!(orange_first["utility"], 13.0);
        assert_eq!(
            orange_first["covered"]
                .as_array()
                .unwrap()
                .iter()
                .filter(|c| c.as_bool().unwrap())
                .count(),
            13
        );
    }

    #[test]
    fn distributed_beliefs_fill_blocks() {
        let text = two_cluster();
        let out: Value = serde_json::from_str(&run_distributed(&text, 10, 50, 1, 3).unwrap()).unwrap();
        let beliefs = out["beliefs"].as_array().unwrap();
        assert_eq!(beliefs.len(), 10);
        for (t, step) in beliefs.iter().enumerate() {
            for agent in step.as_array().unwrap() {
                let mass: f64 = agent.as_array().unwrap().iter().map(|e| e[1].as_f64().unwrap()).sum();
                assert!((mass - (t + 1) as f64 / 10.0).abs() < 1e-9);
            }
        }
        assert!(out["audit"].is_null());
        assert_eq!(out["picks"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn errors_are_strings() {
        assert!(describe("{").is_err());
        assert!(generate(0, 10, "torus").unwrap_err().contains("torus"));
        assert!(run_sequential(&two_cluster(), &[0]).is_err());
        assert!(run_distributed(&two_cluster(), 5, 5, 9, 0).is_err());
        let g = generate(7, 30, "path").unwrap();
        assert_eq!(g, generate(7, 30, "path").unwrap());
    }
}
