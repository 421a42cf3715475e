//! Observations, rewards and action decoding for the learned controllers.
//!
//! Observations are incoming-lane densities ordered W, E, N, S (local) or the
//! concatenation over `J1..Jn` (global). With the phase feature enabled, a
//! one-hot `[WE_GREEN, NS_GREEN]` of the serving phase follows each
//! junction's densities.

use serde::{Deserialize, Serialize};

use crate::net::JunctionId;
use crate::signal::{junction_queues, max_pressure_decide, ControlDecision, PhaseId};
use crate::sim::SimState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Centralized,
    FullyDecentralized,
    ParameterSharing,
    MaxPressure,
}

impl ArchitectureKind {
    pub fn is_learned(self) -> bool {
        !matches!(self, ArchitectureKind::MaxPressure)
    }

    /// Short name used on the command line and in result files.
    pub fn short_name(self) -> &'static str {
        match self {
            ArchitectureKind::Centralized => "centralized",
            ArchitectureKind::FullyDecentralized => "fd",
            ArchitectureKind::ParameterSharing => "ps",
            ArchitectureKind::MaxPressure => "maxpressure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "centralized" | "central" => Ok(ArchitectureKind::Centralized),
            "fd" | "fully_decentralized" => Ok(ArchitectureKind::FullyDecentralized),
            "ps" | "parameter_sharing" => Ok(ArchitectureKind::ParameterSharing),
            "maxpressure" | "max_pressure" | "mp" => Ok(ArchitectureKind::MaxPressure),
            other => Err(Error::InvalidConfig(format!("unknown architecture `{other}`"))),
        }
    }

    /// Number of independent parameter sets for a corridor of `n` junctions.
    pub fn agent_count(self, n: usize) -> usize {
        match self {
            ArchitectureKind::FullyDecentralized => n,
            ArchitectureKind::MaxPressure => 0,
            _ => 1,
        }
    }

    /// Policy output bits per agent.
    pub fn action_bits(self, n: usize) -> usize {
        match self {
            ArchitectureKind::Centralized => n,
            ArchitectureKind::MaxPressure => 0,
            _ => 1,
        }
    }

    pub fn observation_len(self, n: usize, phase_feature: bool) -> usize {
        let per_junction = if phase_feature { 6 } else { 4 };
        match self {
            ArchitectureKind::Centralized => per_junction * n,
            _ => per_junction,
        }
    }
}

impl std::fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Junction(JunctionId),
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn push_junction(state: &SimState, junction: JunctionId, phase_feature: bool, out: &mut Vec<f64>) -> Result<()> {
    for &link in state.network().approaches(junction)? {
        out.push(state.lane_stats(link).density);
    }
    if phase_feature {
        match state.signal(junction).serving_phase() {
            PhaseId::WeGreen => out.extend([1.0, 0.0]),
            PhaseId::NsGreen => out.extend([0.0, 1.0]),
        }
    }
    Ok(())
}

pub fn observe(state: &SimState, scope: Scope, phase_feature: bool) -> Result<Observation> {
    let mut out = Vec::new();
    match scope {
        Scope::Junction(j) => push_junction(state, j, phase_feature, &mut out)?,
        Scope::Global => {
            for j in state.network().junctions() {
                push_junction(state, j, phase_feature, &mut out)?;
            }
        }
    }
    Ok(Observation(out))
}

/// Negative sum of queue counts on the four incoming lanes.
pub fn reward_local(state: &SimState, junction: JunctionId) -> Result<f64> {
    let approaches = state.network().approaches(junction)?;
    let queued: usize = approaches.iter().map(|&l| state.lane_stats(l).queue).sum();
    Ok(-(queued as f64))
}

pub fn reward_global(state: &SimState) -> f64 {
    state
        .network()
        .junctions()
        .map(|j| reward_local(state, j).expect("junction from the network"))
        .sum()
}

/// Bit 0 keeps the current phase, bit 1 switches. Learned architectures
/// supply one bit per junction, in junction order; MaxPressure ignores
/// `actions` and decides from queues.
pub fn apply_actions(
    arch: ArchitectureKind,
    actions: &[bool],
    state: &SimState,
) -> Result<Vec<ControlDecision>> {
    let n = state.network().n();
    if arch == ArchitectureKind::MaxPressure {
        return state
            .network()
            .junctions()
            .map(|j| Ok(max_pressure_decide(state.signal(j).serving_phase(), &junction_queues(state, j)?)))
            .collect();
    }
    if actions.len() != n {
        return Err(Error::InvalidConfig(format!(
            "{arch} expects {n} action bits, got {}",
            actions.len()
        )));
    }
    Ok(actions.iter().map(|&b| ControlDecision::from_bit(b)).collect())
}

/// One agent step recorded during a rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    pub action: Vec<bool>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
    pub junction: Option<JunctionId>,
}
