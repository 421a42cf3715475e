//! Two-phase junction signals on a fixed 17 s decision grid, and the
//! MaxPressure baseline controller.

use serde::{Deserialize, Serialize};

use crate::net::{Approach, JunctionId};
use crate::sim::{Controller, SimState};
use crate::{Error, Result};

pub const DECISION_PERIOD_S: f64 = 17.0;
pub const AMBER_S: f64 = 2.0;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseId {
    #[serde(rename = "WE_GREEN")]
    WeGreen,
    #[serde(rename = "NS_GREEN")]
    NsGreen,
}

impl PhaseId {
    pub fn other(self) -> PhaseId {
        match self {
            PhaseId::WeGreen => PhaseId::NsGreen,
            PhaseId::NsGreen => PhaseId::WeGreen,
        }
    }

    pub fn serves(self, approach: Approach) -> bool {
        match self {
            PhaseId::WeGreen => matches!(approach, Approach::W | Approach::E),
            PhaseId::NsGreen => matches!(approach, Approach::N | Approach::S),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseId::WeGreen => "WE_GREEN",
            PhaseId::NsGreen => "NS_GREEN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalMode {
    Green,
    Amber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlDecision {
    #[serde(rename = "KEEP")]
    Keep,
    #[serde(rename = "SWITCH")]
    Switch,
}

impl ControlDecision {
    pub fn from_bit(switch: bool) -> Self {
        if switch {
            ControlDecision::Switch
        } else {
            ControlDecision::Keep
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ControlDecision::Keep => "KEEP",
            ControlDecision::Switch => "SWITCH",
        }
    }
}

/// What a driver on a given approach sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indication {
    Green,
    Amber,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalState {
    pub junction: JunctionId,
    /// During amber this is the terminating phase.
    pub current_phase: PhaseId,
    pub mode: SignalMode,
    pub mode_elapsed_s: f64,
    pub pending_phase: Option<PhaseId>,
}

impl SignalState {
    pub fn new(junction: JunctionId, phase: PhaseId) -> Self {
        Self {
            junction,
            current_phase: phase,
            mode: SignalMode::Green,
            mode_elapsed_s: 0.0,
            pending_phase: None,
        }
    }

    /// Phase that is green now or will be once amber ends.
    pub fn serving_phase(&self) -> PhaseId {
        self.pending_phase.unwrap_or(self.current_phase)
    }

    pub fn indication(&self, approach: Approach) -> Indication {
        match self.mode {
            SignalMode::Green if self.current_phase.serves(approach) => Indication::Green,
            SignalMode::Amber if self.current_phase.serves(approach) => Indication::Amber,
            _ => Indication::Red,
        }
    }

    /// Applies a decision taken at `t_s`, which must be a multiple of the decision period.
    pub fn apply_decision(&mut self, decision: ControlDecision, t_s: f64) -> Result<()> {
        if !on_decision_grid(t_s) {
            return Err(Error::OffGridDecision {
                t_s,
                window_s: DECISION_PERIOD_S,
            });
        }
        if let ControlDecision::Switch = decision {
            debug_assert_eq!(self.mode, SignalMode::Green);
            self.pending_phase = Some(self.current_phase.other());
            self.mode = SignalMode::Amber;
            self.mode_elapsed_s = 0.0;
        }
        Ok(())
    }

    pub fn advance(&mut self, dt_s: f64) {
        self.mode_elapsed_s += dt_s;
        if self.mode == SignalMode::Amber && self.mode_elapsed_s >= AMBER_S - TIME_EPS {
            self.current_phase = self.pending_phase.take().unwrap_or(self.current_phase);
            self.mode = SignalMode::Green;
            self.mode_elapsed_s = 0.0;
        }
    }
}

pub fn on_decision_grid(t_s: f64) -> bool {
    let k = (t_s / DECISION_PERIOD_S).round();
    (t_s - k * DECISION_PERIOD_S).abs() < TIME_EPS * DECISION_PERIOD_S.max(t_s.abs())
}

/// Queue counts around one junction, ordered W, E, N, S. `downstream[a]` is
/// the queue on the link that traffic from approach `a` discharges into,
/// zero when that link is an exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JunctionQueues {
    pub upstream: [usize; 4],
    pub downstream: [usize; 4],
}

impl JunctionQueues {
    pub fn pressure(&self, phase: PhaseId) -> i64 {
        Approach::ALL
            .iter()
            .filter(|a| phase.serves(**a))
            .map(|a| self.upstream[a.index()] as i64 - self.downstream[a.index()] as i64)
            .sum()
    }
}

/// Picks the phase with the larger pressure; ties keep the current phase.
pub fn max_pressure_decide(current: PhaseId, queues: &JunctionQueues) -> ControlDecision {
    let here = queues.pressure(current);
    let there = queues.pressure(current.other());
    ControlDecision::from_bit(there > here)
}

pub fn junction_queues(state: &SimState, junction: JunctionId) -> Result<JunctionQueues> {
    let net = state.network();
    let approaches = net.approaches(junction)?;
    let mut queues = JunctionQueues::default();
    for (k, &link) in approaches.iter().enumerate() {
        queues.upstream[k] = state.lane_stats(link).queue;
        queues.downstream[k] = match net.link(link).next {
            Some(next) if net.link(next).kind != crate::net::LinkKind::Exit => {
                state.lane_stats(next).queue
            }
            _ => 0,
        };
    }
    Ok(queues)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaxPressureController;

impl Controller for MaxPressureController {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        state
            .network()
            .junctions()
            .map(|j| {
                let queues = junction_queues(state, j)?;
                Ok(max_pressure_decide(state.signal(j).serving_phase(), &queues))
            })
            .collect()
    }
}

/// Switches at every decision instant: 15 s of green per 34 s cycle for each phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedCycleController;

impl Controller for FixedCycleController {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        Ok(vec![ControlDecision::Switch; state.network().n()])
    }
}

/// Never switches, so every junction holds its initial phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct HoldController;

impl Controller for HoldController {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        Ok(vec![ControlDecision::Keep; state.network().n()])
    }
}
