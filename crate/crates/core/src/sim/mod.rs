//! Discrete-time microscopic simulation of the corridor.
//!
//! Each tick of `dt` seconds:
//!
//! 1. signal decisions are applied (only at multiples of the decision period),
//! 2. due arrivals join their backup queue and the queue head is inserted when
//!    the first 7 m of the entry link are clear,
//! 3. vehicles facing amber that cannot stop comfortably commit to crossing,
//! 4. IDM accelerations are computed from a snapshot of the current state,
//! 5. positions and speeds are advanced ballistically,
//! 6. vehicles past the end of their link cross the junction or leave the
//!    network,
//! 7. stop events, signals, statistics and invariants are updated.

mod arrivals;
pub mod export;
mod idm;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use arrivals::{entry_rng, poisson_times, sample_arrivals, Arrivals};
pub use idm::{ballistic_update, IdmParams};

use crate::net::{CorridorNetwork, DemandConfig, Direction, JunctionId, LinkId, LinkKind, RouteId};
use crate::signal::{ControlDecision, Indication, PhaseId, SignalState, AMBER_S, DECISION_PERIOD_S};
use crate::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt_s: f64,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub seed: u64,
    pub idm: IdmParams,
    pub vehicle_length_m: f64,
    pub queue_speed_threshold_mps: f64,
    pub stop_speed_threshold_mps: f64,
    /// A stopped vehicle must exceed this speed before another stop can be counted.
    pub stop_rearm_speed_mps: f64,
    pub backup_sample_period_s: f64,
    pub lane_sample_period_s: f64,
    pub record_lane_series: bool,
    pub initial_phase: PhaseId,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_s: 0.5,
            duration_s: 10_000.0,
            warmup_s: 1_000.0,
            seed: 0,
            idm: IdmParams::default(),
            vehicle_length_m: 5.0,
            queue_speed_threshold_mps: 0.5,
            stop_speed_threshold_mps: 0.5,
            stop_rearm_speed_mps: 2.0,
            backup_sample_period_s: 100.0,
            lane_sample_period_s: DECISION_PERIOD_S,
            record_lane_series: true,
            initial_phase: PhaseId::WeGreen,
        }
    }
}

fn ticks_for(period_s: f64, dt_s: f64, name: &str) -> Result<u64> {
    let ratio = period_s / dt_s;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-6 {
        return Err(Error::InvalidConfig(format!(
            "{name} ({period_s} s) must be a positive multiple of dt ({dt_s} s)"
        )));
    }
    Ok(rounded as u64)
}

impl SimConfig {
    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = duration_s;
        if self.warmup_s >= duration_s {
            self.warmup_s = 0.0;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) || !self.dt_s.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt_s)));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.warmup_s >= 0.0 && self.warmup_s < self.duration_s) {
            return Err(Error::InvalidConfig(format!(
                "warm-up ({} s) must lie in [0, duration)",
                self.warmup_s
            )));
        }
        if !(self.vehicle_length_m > 0.0) {
            return Err(Error::InvalidConfig("vehicle length must be positive".into()));
        }
        if !(self.stop_rearm_speed_mps >= self.stop_speed_threshold_mps) {
            return Err(Error::InvalidConfig(
                "stop re-arm speed must not be below the stop threshold".into(),
            ));
        }
        self.idm.validate()?;
        ticks_for(DECISION_PERIOD_S, self.dt_s, "decision period")?;
        ticks_for(AMBER_S, self.dt_s, "amber interval")?;
        ticks_for(self.backup_sample_period_s, self.dt_s, "backup sample period")?;
        ticks_for(self.lane_sample_period_s, self.dt_s, "lane sample period")?;
        ticks_for(self.duration_s, self.dt_s, "duration")?;
        Ok(())
    }

    /// Space that must be clear at the start of an entry link before insertion.
    pub fn insertion_clearance_m(&self) -> f64 {
        self.vehicle_length_m + self.idm.min_gap_m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u64,
    pub route: RouteId,
    pub link: LinkId,
    /// Front bumper position measured from the start of the current link.
    pub position_m: f64,
    pub speed_mps: f64,
    pub length_m: f64,
    pub generated_at_s: f64,
    pub entered_at_s: f64,
    pub stop_count: u32,
    stopped: bool,
    /// Caught by amber too close to stop comfortably; allowed through on red.
    committed: bool,
}

impl Vehicle {
    pub fn rear_m(&self) -> f64 {
        self.position_m - self.length_m
    }

    pub fn committed(&self) -> bool {
        self.committed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingVehicle {
    pub id: u64,
    pub generated_at_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: u64,
    pub route: RouteId,
    pub direction: Direction,
    pub generated_at_s: f64,
    pub entered_at_s: Option<f64>,
    pub exited_at_s: Option<f64>,
    pub stop_count: u32,
}

impl VehicleRecord {
    pub fn travel_time_s(&self) -> Option<f64> {
        self.exited_at_s.map(|t| t - self.generated_at_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LaneStats {
    pub queue: usize,
    pub count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneSample {
    pub t_s: f64,
    pub link: LinkId,
    pub stats: LaneStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackupSample {
    pub t_s: f64,
    /// Per entry link, in network entry order.
    pub sizes: Vec<usize>,
}

impl BackupSample {
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub t_s: f64,
    pub junction: JunctionId,
    pub decision: ControlDecision,
    pub phase_after: PhaseId,
}

/// Chooses per-junction decisions at each decision instant.
pub trait Controller {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>>;

    /// Called once after the final tick.
    fn finish(&mut self, _state: &SimState) -> Result<()> {
        Ok(())
    }
}

impl<C: Controller + ?Sized> Controller for &mut C {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        (**self).decide(state)
    }

    fn finish(&mut self, state: &SimState) -> Result<()> {
        (**self).finish(state)
    }
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        (**self).decide(state)
    }

    fn finish(&mut self, state: &SimState) -> Result<()> {
        (**self).finish(state)
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    network: Arc<CorridorNetwork>,
    demand: DemandConfig,
    config: SimConfig,
    idm: IdmParams,
    tick: u64,
    total_ticks: u64,
    ticks_per_decision: u64,
    ticks_per_backup_sample: u64,
    ticks_per_lane_sample: u64,
    lanes: Vec<VecDeque<Vehicle>>,
    signals: Vec<SignalState>,
    arrivals: Vec<Vec<f64>>,
    arrival_cursor: Vec<usize>,
    backup: Vec<VecDeque<PendingVehicle>>,
    next_vehicle_id: u64,
    generated: usize,
    exited: usize,
    records: Vec<VehicleRecord>,
    backup_series: Vec<BackupSample>,
    lane_series: Vec<LaneSample>,
    decisions: Vec<DecisionRecord>,
    accel_scratch: Vec<f64>,
}

impl SimState {
    pub fn new(network: Arc<CorridorNetwork>, demand: DemandConfig, config: SimConfig) -> Result<Self> {
        config.validate()?;
        let arrivals = sample_arrivals(&network, &demand, config.duration_s, config.seed)?;
        Self::with_arrivals(network, demand, config, arrivals)
    }

    /// Builds a state from an explicit arrival schedule instead of sampling one.
    pub fn with_arrivals(
        network: Arc<CorridorNetwork>,
        demand: DemandConfig,
        config: SimConfig,
        arrivals: Arrivals,
    ) -> Result<Self> {
        config.validate()?;
        demand.validate()?;
        if arrivals.per_entry.len() != network.entries().len() {
            return Err(Error::InvalidConfig(format!(
                "arrival schedule has {} streams, network has {} entries",
                arrivals.per_entry.len(),
                network.entries().len()
            )));
        }
        let mut idm = config.idm;
        idm.desired_speed_mps = network.spec().speed_limit_mps;
        let signals = network
            .junctions()
            .map(|j| SignalState::new(j, config.initial_phase))
            .collect();
        let entries = network.entries().len();
        let mut state = Self {
            demand,
            idm,
            tick: 0,
            total_ticks: (config.duration_s / config.dt_s).round() as u64,
            ticks_per_decision: ticks_for(DECISION_PERIOD_S, config.dt_s, "decision period")?,
            ticks_per_backup_sample: ticks_for(config.backup_sample_period_s, config.dt_s, "backup")?,
            ticks_per_lane_sample: ticks_for(config.lane_sample_period_s, config.dt_s, "lane")?,
            lanes: vec![VecDeque::new(); network.links().len()],
            signals,
            arrivals: arrivals.per_entry,
            arrival_cursor: vec![0; entries],
            backup: vec![VecDeque::new(); entries],
            next_vehicle_id: 0,
            generated: 0,
            exited: 0,
            records: Vec::new(),
            backup_series: Vec::new(),
            lane_series: Vec::new(),
            decisions: Vec::new(),
            accel_scratch: Vec::new(),
            network,
            config,
        };
        state.sample_statistics();
        Ok(state)
    }

    pub fn network(&self) -> &CorridorNetwork {
        &self.network
    }

    pub fn network_arc(&self) -> &Arc<CorridorNetwork> {
        &self.network
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn demand(&self) -> &DemandConfig {
        &self.demand
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn clock_s(&self) -> f64 {
        self.tick as f64 * self.config.dt_s
    }

    pub fn finished(&self) -> bool {
        self.tick >= self.total_ticks
    }

    /// True at `t = k * 17 s` for `k >= 1` while the run is still in progress.
    pub fn is_decision_instant(&self) -> bool {
        self.tick > 0 && self.tick.is_multiple_of(self.ticks_per_decision) && self.tick < self.total_ticks
    }

    pub fn decision_instants(&self) -> u64 {
        (self.total_ticks.saturating_sub(1)) / self.ticks_per_decision
    }

    pub fn signal(&self, junction: JunctionId) -> &SignalState {
        &self.signals[junction.0]
    }

    pub fn signals(&self) -> &[SignalState] {
        &self.signals
    }

    pub fn vehicles_on(&self, link: LinkId) -> &VecDeque<Vehicle> {
        &self.lanes[link.0]
    }

    pub fn backup_len(&self, entry_index: usize) -> usize {
        self.backup[entry_index].len()
    }

    pub fn backup_total(&self) -> usize {
        self.backup.iter().map(VecDeque::len).sum()
    }

    pub fn in_network(&self) -> usize {
        self.lanes.iter().map(VecDeque::len).sum()
    }

    pub fn generated(&self) -> usize {
        self.generated
    }

    pub fn exited(&self) -> usize {
        self.exited
    }

    pub fn lane_stats(&self, link: LinkId) -> LaneStats {
        let lane = &self.lanes[link.0];
        let threshold = self.config.queue_speed_threshold_mps;
        let queue = lane.iter().filter(|v| v.speed_mps < threshold).count();
        let capacity = self.network.link(link).storage_capacity().max(1);
        LaneStats {
            queue,
            count: lane.len(),
            density: (lane.len() as f64 / capacity as f64).min(1.0),
        }
    }

    /// Places a vehicle directly on a link. Intended for tests and scenario setup.
    pub fn place_vehicle(&mut self, link: LinkId, position_m: f64, speed_mps: f64) -> Result<u64> {
        let l = self.network.link(link);
        if !(0.0..l.length_m).contains(&position_m) || !(speed_mps >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cannot place vehicle at {position_m} m, {speed_mps} m/s on {}",
                l.name()
            )));
        }
        if let Some(back) = self.lanes[link.0].back() {
            if back.rear_m() < position_m {
                return Err(Error::InvalidConfig(
                    "vehicles must be placed front to back".into(),
                ));
            }
        }
        let id = self.next_vehicle_id;
        self.next_vehicle_id += 1;
        let t = self.clock_s();
        self.lanes[link.0].push_back(Vehicle {
            id,
            route: l.route,
            link,
            position_m,
            speed_mps,
            length_m: self.config.vehicle_length_m,
            generated_at_s: t,
            entered_at_s: t,
            stop_count: 0,
            stopped: speed_mps < self.config.stop_speed_threshold_mps,
            committed: false,
        });
        self.generated += 1;
        Ok(id)
    }

    /// Advances one tick. `controls` must be supplied only at decision instants.
    pub fn step(&mut self, controls: Option<&[ControlDecision]>) -> Result<()> {
        if self.finished() {
            return Err(Error::InvalidConfig("simulation already finished".into()));
        }
        let t = self.clock_s();
        if let Some(controls) = controls {
            self.apply_controls(controls, t)?;
        }
        self.admit_arrivals(t);
        self.update_commitments();
        self.compute_accelerations(t)?;
        self.integrate();
        self.transfer(t)?;
        self.update_stops();
        let dt = self.config.dt_s;
        for signal in &mut self.signals {
            signal.advance(dt);
        }
        self.tick += 1;
        self.sample_statistics();
        self.check_invariants()
    }

    fn apply_controls(&mut self, controls: &[ControlDecision], t: f64) -> Result<()> {
        if !self.is_decision_instant() {
            return Err(Error::OffGridDecision {
                t_s: t,
                window_s: DECISION_PERIOD_S,
            });
        }
        if controls.len() != self.signals.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} decisions, got {}",
                self.signals.len(),
                controls.len()
            )));
        }
        for (signal, &decision) in self.signals.iter_mut().zip(controls) {
            signal.apply_decision(decision, t)?;
            self.decisions.push(DecisionRecord {
                t_s: t,
                junction: signal.junction,
                decision,
                phase_after: signal.serving_phase(),
            });
        }
        Ok(())
    }

    fn admit_arrivals(&mut self, t: f64) {
        let clearance = self.config.insertion_clearance_m();
        for (k, &entry) in self.network.entries().iter().enumerate() {
            let schedule = &self.arrivals[k];
            while let Some(&at) = schedule.get(self.arrival_cursor[k]) {
                if at > t + EPS {
                    break;
                }
                self.backup[k].push_back(PendingVehicle {
                    id: self.next_vehicle_id,
                    generated_at_s: at,
                });
                self.next_vehicle_id += 1;
                self.generated += 1;
                self.arrival_cursor[k] += 1;
            }
            if self.backup[k].is_empty() {
                continue;
            }
            let lane = &self.lanes[entry.0];
            let link = self.network.link(entry);
            let len = self.config.vehicle_length_m;
            let speed = match lane.back() {
                Some(back) if back.rear_m() < clearance - EPS => continue,
                Some(back) => self.idm.safe_insertion_speed(back.speed_mps, back.rear_m() - len),
                None => self.idm.desired_speed_mps,
            };
            // Never faster than what still allows a comfortable stop at the line.
            let room = (link.length_m - len - self.idm.min_gap_m).max(0.0);
            let speed = speed.min((2.0 * self.idm.comfortable_decel_mps2 * room).sqrt());
            let pending = self.backup[k].pop_front().expect("non-empty backup");
            self.lanes[entry.0].push_back(Vehicle {
                id: pending.id,
                route: link.route,
                link: entry,
                position_m: len,
                speed_mps: speed,
                length_m: len,
                generated_at_s: pending.generated_at_s,
                entered_at_s: t,
                stop_count: 0,
                stopped: speed < self.config.stop_speed_threshold_mps,
                committed: false,
            });
        }
    }

    fn indication_ahead(&self, link: LinkId) -> Option<Indication> {
        let l = self.network.link(link);
        l.junction_ahead()
            .map(|j| self.signals[j.0].indication(l.direction.approach()))
    }

    /// Dilemma-zone rule: during amber, vehicles at the head of the approach that
    /// would need more than the comfortable deceleration to stop are let through.
    fn update_commitments(&mut self) {
        let b = self.idm.comfortable_decel_mps2;
        for k in 0..self.lanes.len() {
            if self.indication_ahead(LinkId(k)) != Some(Indication::Amber) {
                continue;
            }
            let length = self.network.link(LinkId(k)).length_m;
            for v in self.lanes[k].iter_mut() {
                if v.committed {
                    continue;
                }
                let distance = length - v.position_m;
                if v.speed_mps * v.speed_mps > 2.0 * b * distance {
                    v.committed = true;
                } else {
                    break;
                }
            }
        }
    }

    fn compute_accelerations(&mut self, t: f64) -> Result<()> {
        let mut scratch = std::mem::take(&mut self.accel_scratch);
        scratch.clear();
        for (k, lane) in self.lanes.iter().enumerate() {
            if lane.is_empty() {
                continue;
            }
            let link = self.network.link(LinkId(k));
            let blocked = !matches!(self.indication_ahead(link.id), None | Some(Indication::Green));
            let stopper = if blocked {
                lane.iter().position(|v| !v.committed)
            } else {
                None
            };
            for (i, v) in lane.iter().enumerate() {
                let (gap, v_lead) = if i > 0 {
                    let leader = &lane[i - 1];
                    (leader.rear_m() - v.position_m, leader.speed_mps)
                } else {
                    match link.next.and_then(|next| self.lanes[next.0].back()) {
                        Some(back) => (link.length_m - v.position_m + back.rear_m(), back.speed_mps),
                        None => (f64::INFINITY, 0.0),
                    }
                };
                let mut accel = self.idm.accel(v.speed_mps, v_lead, gap).map_err(|_| Error::Invariant {
                    t_s: t,
                    detail: format!("vehicle {} on {} has gap {gap:.3} m to its leader", v.id, link.name()),
                })?;
                if stopper == Some(i) {
                    let to_line = link.length_m - v.position_m;
                    let stop = self.idm.accel(v.speed_mps, 0.0, to_line).map_err(|_| Error::Invariant {
                        t_s: t,
                        detail: format!("vehicle {} is past the stop line of {}", v.id, link.name()),
                    })?;
                    accel = accel.min(stop);
                }
                scratch.push(accel);
            }
        }
        self.accel_scratch = scratch;
        Ok(())
    }

    fn integrate(&mut self) {
        let dt = self.config.dt_s;
        let mut accels = self.accel_scratch.iter();
        for lane in &mut self.lanes {
            for v in lane.iter_mut() {
                let a = *accels.next().expect("one acceleration per vehicle");
                let (dx, speed) = ballistic_update(v.speed_mps, a, dt);
                v.position_m += dx;
                v.speed_mps = speed;
            }
        }
    }

    fn transfer(&mut self, t: f64) -> Result<()> {
        let t_end = t + self.config.dt_s;
        for k in 0..self.lanes.len() {
            let link_id = LinkId(k);
            let (length, next, name) = {
                let l = self.network.link(link_id);
                (l.length_m, l.next, l.kind)
            };
            let indication = self.indication_ahead(link_id);
            while self.lanes[k].front().is_some_and(|v| v.position_m >= length) {
                let mut v = self.lanes[k].pop_front().expect("front exists");
                match next {
                    None => {
                        debug_assert_eq!(name, LinkKind::Exit);
                        self.exited += 1;
                        self.records.push(VehicleRecord {
                            id: v.id,
                            route: v.route,
                            direction: self.network.link(link_id).direction,
                            generated_at_s: v.generated_at_s,
                            entered_at_s: Some(v.entered_at_s),
                            exited_at_s: Some(t_end),
                            stop_count: v.stop_count,
                        });
                    }
                    Some(next) => {
                        if indication != Some(Indication::Green) && !v.committed {
                            return Err(Error::Invariant {
                                t_s: t,
                                detail: format!(
                                    "vehicle {} crossed the stop line of {} on {:?}",
                                    v.id,
                                    self.network.link(link_id).name(),
                                    indication
                                ),
                            });
                        }
                        v.position_m -= length;
                        v.link = next;
                        v.committed = false;
                        self.lanes[next.0].push_back(v);
                    }
                }
            }
        }
        Ok(())
    }

    fn update_stops(&mut self) {
        let threshold = self.config.stop_speed_threshold_mps;
        let rearm = self.config.stop_rearm_speed_mps;
        for v in self.lanes.iter_mut().flatten() {
            if !v.stopped && v.speed_mps < threshold {
                v.stopped = true;
                v.stop_count += 1;
            } else if v.stopped && v.speed_mps > rearm {
                v.stopped = false;
            }
        }
    }

    fn sample_statistics(&mut self) {
        let t = self.clock_s();
        if self.tick.is_multiple_of(self.ticks_per_backup_sample) {
            self.backup_series.push(BackupSample {
                t_s: t,
                sizes: self.backup.iter().map(VecDeque::len).collect(),
            });
        }
        if self.config.record_lane_series && self.tick.is_multiple_of(self.ticks_per_lane_sample) {
            for k in 0..self.lanes.len() {
                let stats = self.lane_stats(LinkId(k));
                self.lane_series.push(LaneSample {
                    t_s: t,
                    link: LinkId(k),
                    stats,
                });
            }
        }
    }

    /// Conservation, non-overlap and non-negative speed.
    pub fn check_invariants(&self) -> Result<()> {
        let t = self.clock_s();
        let fail = |detail: String| Err(Error::Invariant { t_s: t, detail });
        let accounted = self.backup_total() + self.in_network() + self.exited;
        if self.generated != accounted {
            return fail(format!(
                "generated {} != backup {} + in network {} + exited {}",
                self.generated,
                self.backup_total(),
                self.in_network(),
                self.exited
            ));
        }
        for (k, lane) in self.lanes.iter().enumerate() {
            let link = self.network.link(LinkId(k));
            for (i, v) in lane.iter().enumerate() {
                if !(v.speed_mps >= 0.0) {
                    return fail(format!("vehicle {} has speed {}", v.id, v.speed_mps));
                }
                if !(v.position_m >= 0.0 - EPS && v.position_m < link.length_m) {
                    return fail(format!("vehicle {} at {} m on {}", v.id, v.position_m, link.name()));
                }
                if i > 0 && lane[i - 1].rear_m() - v.position_m < -EPS {
                    return fail(format!("vehicles {} and {} overlap on {}", lane[i - 1].id, v.id, link.name()));
                }
            }
            if let (Some(front), Some(next)) = (lane.front(), link.next) {
                if let Some(back) = self.lanes[next.0].back() {
                    if link.length_m - front.position_m + back.rear_m() < -EPS {
                        return fail(format!("vehicles {} and {} overlap across a junction", back.id, front.id));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn into_result(self) -> SimResult {
        let mut records = self.records;
        for v in self.lanes.iter().flatten() {
            records.push(VehicleRecord {
                id: v.id,
                route: v.route,
                direction: self.network.route(v.route).direction,
                generated_at_s: v.generated_at_s,
                entered_at_s: Some(v.entered_at_s),
                exited_at_s: None,
                stop_count: v.stop_count,
            });
        }
        for (k, queue) in self.backup.iter().enumerate() {
            let entry = self.network.link(self.network.entries()[k]);
            for p in queue {
                records.push(VehicleRecord {
                    id: p.id,
                    route: entry.route,
                    direction: entry.direction,
                    generated_at_s: p.generated_at_s,
                    entered_at_s: None,
                    exited_at_s: None,
                    stop_count: 0,
                });
            }
        }
        records.sort_by_key(|r| r.id);
        SimResult {
            network: self.network,
            demand: self.demand,
            config: self.config,
            records,
            lane_series: self.lane_series,
            backup_series: self.backup_series,
            decisions: self.decisions,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub network: Arc<CorridorNetwork>,
    pub demand: DemandConfig,
    pub config: SimConfig,
    pub records: Vec<VehicleRecord>,
    pub lane_series: Vec<LaneSample>,
    pub backup_series: Vec<BackupSample>,
    pub decisions: Vec<DecisionRecord>,
}

impl SimResult {
    /// Vehicles that finished their route inside `[warmup, duration]`.
    pub fn completed_after_warmup(&self) -> impl Iterator<Item = &VehicleRecord> {
        let warmup = self.config.warmup_s;
        self.records
            .iter()
            .filter(move |r| r.exited_at_s.is_some_and(|t| t >= warmup))
    }

    /// Mean travel time from generation to exit, or `None` with no completions.
    pub fn average_travel_time(&self) -> Option<(f64, usize)> {
        let (sum, count) = self
            .completed_after_warmup()
            .filter_map(VehicleRecord::travel_time_s)
            .fold((0.0, 0usize), |(s, c), tt| (s + tt, c + 1));
        (count > 0).then(|| (sum / count as f64, count))
    }

    pub fn backup_totals(&self) -> Vec<(f64, f64)> {
        self.backup_series
            .iter()
            .map(|s| (s.t_s, s.total() as f64))
            .collect()
    }
}

/// Runs a full simulation, querying `controller` at every decision instant.
pub fn run(
    network: Arc<CorridorNetwork>,
    demand: DemandConfig,
    config: SimConfig,
    controller: &mut dyn Controller,
) -> Result<SimResult> {
    let state = SimState::new(network, demand, config)?;
    run_state(state, controller)
}

pub fn run_state(mut state: SimState, controller: &mut dyn Controller) -> Result<SimResult> {
    while !state.finished() {
        if state.is_decision_instant() {
            let controls = controller.decide(&state)?;
            state.step(Some(&controls))?;
        } else {
            state.step(None)?;
        }
    }
    controller.finish(&state)?;
    Ok(state.into_result())
}

#[cfg(test)]
mod tests;
