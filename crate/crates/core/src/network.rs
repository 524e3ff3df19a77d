//! Undirected communication graph and synchronous max-consensus rounds.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{AgentId, InfoSet};

/// Connected undirected graph over agents `0..n`, without self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommGraph {
    adjacency: Vec<Vec<AgentId>>,
    diameter: usize,
}

impl CommGraph {
    pub fn new(n: usize, edges: &[(AgentId, AgentId)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("graph needs at least one agent".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::EdgeOutOfRange(i, j, n));
            }
            if i == j {
                return Err(Error::SelfLoop(i, j));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let mut graph = Self { adjacency, diameter: 0 };
        let mut diameter = 0;
        for source in 0..n {
            let dist = graph.hops_from(source);
            if let Some(unreachable) = dist.iter().position(Option::is_none) {
                return Err(Error::Disconnected { unreachable });
            }
            diameter = diameter.max(dist.into_iter().flatten().max().unwrap_or(0));
        }
        graph.diameter = diameter;
        Ok(graph)
    }

    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = match n {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        Self::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::new(n, &edges)
    }

    /// Agent 0 is the hub.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::new(n, &edges)
    }

    pub fn num_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, agent: AgentId) -> Result<&[AgentId]> {
        self.adjacency.get(agent).map(Vec::as_slice).ok_or(Error::UnknownAgent {
            agent,
            n: self.num_agents(),
        })
    }

    /// Longest shortest-path hop count, cached at construction.
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// BFS hop counts from `source`; `None` marks unreachable agents.
    pub fn hops_from(&self, source: AgentId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_agents()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// One lockstep round: every agent replaces its state with the MAX over its
/// closed neighbourhood, all reading the same pre-round snapshot.
pub fn exchange_round(graph: &CommGraph, states: &[InfoSet]) -> Vec<InfoSet> {
    assert_eq!(states.len(), graph.num_agents(), "one information set per agent");
    (0..states.len())
        .map(|i| {
            let mut merged = states[i].clone();
            for &j in &graph.adjacency[i] {
                merged.merge_max(&states[j]);
            }
            merged
        })
        .collect()
}

/// `hops` consecutive [`exchange_round`]s.
pub fn exchange(graph: &CommGraph, states: Vec<InfoSet>, hops: usize) -> Vec<InfoSet> {
    (0..hops).fold(states, |s, _| exchange_round(graph, &s))
}
