use std::sync::Arc;

use crate::net::{build_corridor, CorridorSpec, DemandConfig};
use crate::signal::{ControlDecision, PhaseId};
use crate::sim::{Controller, SimConfig, SimState};
use crate::{Error, Result};

/// Holds the side-road phase until `release_s`, then switches once and keeps
/// the main road green for the rest of the run.
struct ReleaseOnce {
    release_s: f64,
}

impl Controller for ReleaseOnce {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        let t = state.clock_s();
        let d = if (t - self.release_s).abs() < 1e-9 {
            ControlDecision::Switch
        } else {
            ControlDecision::Keep
        };
        Ok(vec![d; state.network().n()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationMeasurement {
    pub flow_vph: f64,
    pub vehicles: usize,
}

/// Discharge rate of a standing queue under continuous green, measured at
/// the stop line.
///
/// A single junction holds red for the eastbound approach until a queue fills
/// a link of `link_length_m`; the approach then turns green for good. Stop-line
/// crossing instants are interpolated within the tick. The rate is taken over
/// the vehicles that were queued at release, skipping the first four
/// (start-up lost time).
pub fn saturation_flow(link_length_m: f64, seed: u64) -> Result<SaturationMeasurement> {
    let net = Arc::new(build_corridor(CorridorSpec::new(1, link_length_m))?);
    let entry = net.entries()[0];
    let demand = DemandConfig::new(3600.0, 0.0, 0.0, 0.0);
    // Long enough to fill the link at the entry insertion rate.
    let release_s = 17.0 * ((link_length_m / 7.0 * 3.0 + 60.0) / 17.0).ceil();
    let mut config = SimConfig::default().with_duration(release_s + 17.0 * 40.0).with_seed(seed);
    config.warmup_s = 0.0;
    config.initial_phase = PhaseId::NsGreen;
    config.record_lane_series = false;
    let dt = config.dt_s;
    let mut state = SimState::new(net.clone(), demand, config)?;
    let mut controller = ReleaseOnce { release_s };

    let mut queued: Option<Vec<u64>> = None;
    let mut crossings: Vec<f64> = Vec::new();
    while !state.finished() {
        let before: Vec<(u64, f64, f64)> = state
            .vehicles_on(entry)
            .iter()
            .map(|v| (v.id, v.position_m, v.speed_mps))
            .collect();
        let t0 = state.clock_s();
        if state.is_decision_instant() {
            let controls = controller.decide(&state)?;
            state.step(Some(&controls))?;
        } else {
            state.step(None)?;
        }
        if queued.is_none() && t0 >= release_s {
            queued = Some(before.iter().map(|v| v.0).collect());
        }
        let Some(ids) = queued.as_ref() else { continue };
        let remaining = state.vehicles_on(entry);
        for &(id, pos, speed) in &before {
            if ids.contains(&id) && !remaining.iter().any(|v| v.id == id) {
                let frac = if speed > 0.0 {
                    ((link_length_m - pos) / (speed * dt)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                crossings.push(t0 + frac * dt);
            }
        }
    }
    crossings.sort_by(|a, b| a.total_cmp(b));
    let measured = crossings.get(4..).unwrap_or(&[]);
    if measured.len() < 10 {
        return Err(Error::NoCompletedVehicles);
    }
    let span = measured[measured.len() - 1] - measured[0];
    Ok(SaturationMeasurement {
        flow_vph: (measured.len() - 1) as f64 * 3600.0 / span,
        vehicles: measured.len(),
    })
}
