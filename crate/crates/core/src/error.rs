use thiserror::Error;

use crate::ground::{AgentId, PolicyId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent {agent} has an empty policy block")]
    EmptyBlock { agent: AgentId },
    #[error("partition blocks must be contiguous and start at policy 0 (block {agent} starts at {start}, expected {expected})")]
    NonContiguousBlock {
        agent: AgentId,
        start: PolicyId,
        expected: PolicyId,
    },
    #[error("policy {policy} is outside the ground set of size {n}")]
    UnknownPolicy { policy: PolicyId, n: usize },
    #[error("agent {agent} is not one of the {n} agents")]
    UnknownAgent { agent: AgentId, n: usize },
    #[error("probability {value} for policy {policy} is outside [0, 1]")]
    InvalidProbability { policy: PolicyId, value: f64 },
    #[error("mass of policy {policy} would reach {mass}, exceeding 1")]
    MassOverflow { policy: PolicyId, mass: f64 },
    #[error("block mass {mass} is not 1")]
    MassNotOne { mass: f64 },
    #[error("ground set has {size} free coordinates, enumeration is capped at {cap}")]
    GroundSetTooLarge { size: usize, cap: usize },
    #[error("feasible search space has {size} sets, cap is {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(AgentId, AgentId),
    #[error("edge ({0}, {1}) names an agent outside 0..{2}")]
    EdgeOutOfRange(AgentId, AgentId, usize),
    #[error("communication graph is disconnected (agent {unreachable} unreachable from agent 0)")]
    Disconnected { unreachable: AgentId },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("block {agent} has mass {mass} at termination")]
    InfeasibleOutput { agent: AgentId, mass: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
