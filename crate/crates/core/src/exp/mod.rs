//! Experiment harness: capacity sweeps, travel-time evaluation, the green-wave
//! study, CSV/SVG output and the command-line front end.

use std::sync::Arc;

use crate::mdp::ArchitectureKind;
use crate::net::{CorridorNetwork, DemandConfig};
use crate::ppo::{PolicyCheckpoint, PolicyController};
use crate::signal::{FixedCycleController, MaxPressureController};
use crate::sim::{run, SimConfig, SimResult};
use crate::Result;

pub mod att;
pub mod capacity;
pub mod cli;
pub mod config;
pub mod greenwave;
pub mod saturation;
pub mod stability;
pub mod svg;

pub use att::{att_eval, att_line, AttRecord};
pub use capacity::{capacity_sweep, CapacitySweep, CapacityVerdict, SeedVerdict};
pub use config::{parse_grid, RunConfig};
pub use greenwave::{green_wave_demand, green_wave_study, zero_stop_ratio, GreenWaveRecord};
pub use saturation::{saturation_flow, SaturationMeasurement};
pub use stability::{stability_verdict, StabilityVerdict};

/// The controller driving every junction in an experiment.
#[derive(Debug, Clone)]
pub enum ControllerSpec {
    MaxPressure,
    /// Switches at every decision instant.
    FixedCycle,
    Learned(Arc<PolicyCheckpoint>),
}

impl ControllerSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerSpec::MaxPressure => "maxpressure",
            ControllerSpec::FixedCycle => "fixed",
            ControllerSpec::Learned(c) => c.architecture.short_name(),
        }
    }

    pub fn architecture(&self) -> Option<ArchitectureKind> {
        match self {
            ControllerSpec::MaxPressure => Some(ArchitectureKind::MaxPressure),
            ControllerSpec::FixedCycle => None,
            ControllerSpec::Learned(c) => Some(c.architecture),
        }
    }

    /// Checks up front that the controller can drive a corridor of `n` junctions.
    pub fn check(&self, n: usize) -> Result<()> {
        if let ControllerSpec::Learned(c) = self {
            c.deploy(n)?;
        }
        Ok(())
    }

    pub fn run(&self, network: Arc<CorridorNetwork>, demand: DemandConfig, config: SimConfig) -> Result<SimResult> {
        match self {
            ControllerSpec::MaxPressure => run(network, demand, config, &mut MaxPressureController),
            ControllerSpec::FixedCycle => run(network, demand, config, &mut FixedCycleController),
            ControllerSpec::Learned(c) => {
                let policy = c.deploy(network.n())?;
                let mut ctl = PolicyController::greedy(&policy);
                run(network, demand, config, &mut ctl)
            }
        }
    }
}

/// `count` consecutive seeds starting at `base`.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}
