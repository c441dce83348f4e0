//! Deterministic queue-based microsimulator with a one-second clock.
//!
//! Each lane holds three FIFO groups: vehicles crossing the upstream
//! intersection into it (`transit`), vehicles driving along it (`moving`) and
//! vehicles stopped at its head (`queue`). All three count against the lane's
//! storage capacity. A step runs these sub-steps in order:
//!
//! 1. spawn due vehicles whose entry lane has room; blocked spawns retry;
//! 2. advance moving vehicles into the queue, then finish transits;
//! 3. discharge lane heads on green (right turns always) at one vehicle per
//!    lane every 2 s, when the downstream lane has room;
//! 4. advance the signal state machines and poll controllers;
//! 5. retire queued vehicles that reached the end of their route;
//! 6. record the network-wide queued count.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::network::{
    FlowSpec, Intersection, LaneId, RoadNetwork, Turn, INTERSECTION_LANES, MOVEMENTS_PER_INTERSECTION, PHASE_COUNT,
};

pub const YELLOW_SECS: u32 = 3;
pub const ALL_RED_SECS: u32 = 2;
pub const MIN_GREEN_SECS: u32 = 10;
/// Seconds between departures from one lane (1800 veh/h/lane).
pub const SATURATION_HEADWAY_SECS: u32 = 2;
pub const TRANSIT_SECS: u32 = 2;
pub const DEFAULT_HORIZON: u32 = 3600;

/// Network, demand and episode length.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: RoadNetwork,
    pub flow: FlowSpec,
    pub horizon: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalMode {
    Green,
    Yellow,
    AllRed,
}

impl SignalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalMode::Green => "green",
            SignalMode::Yellow => "yellow",
            SignalMode::AllRed => "allred",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalState {
    pub current_phase: usize,
    pub mode: SignalMode,
    pub mode_elapsed: u32,
    pub pending_phase: Option<usize>,
    pub green_elapsed: u32,
}

impl SignalState {
    fn green(phase: usize) -> SignalState {
        SignalState {
            current_phase: phase,
            mode: SignalMode::Green,
            mode_elapsed: 0,
            pending_phase: None,
            green_elapsed: 0,
        }
    }
}

/// Phase and mode in force during one step at one intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSnapshot {
    pub phase: u8,
    pub mode: SignalMode,
}

/// Per-lane waiting (`w`) and total (`c`) vehicle counts for the 24 lanes
/// around one intersection, in the intersection's observation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub intersection: usize,
    pub lanes: [LaneId; INTERSECTION_LANES],
    pub waiting: [u32; INTERSECTION_LANES],
    pub count: [u32; INTERSECTION_LANES],
    pub current_phase: usize,
    pub green_elapsed: u32,
}

impl Observation {
    /// All-zero observation of `inter`.
    pub fn empty(index: usize, inter: &Intersection) -> Observation {
        Observation {
            intersection: index,
            lanes: inter.lanes,
            waiting: [0; INTERSECTION_LANES],
            count: [0; INTERSECTION_LANES],
            current_phase: 0,
            green_elapsed: 0,
        }
    }

    /// `(w, c)` of `lane`, if it is one of the observed lanes.
    pub fn lane_counts(&self, lane: LaneId) -> Option<(u32, u32)> {
        self.lanes
            .iter()
            .position(|&l| l == lane)
            .map(|i| (self.waiting[i], self.count[i]))
    }

    /// Sets the counts of `lane`; panics if the lane is not observed.
    pub fn set_lane_counts(&mut self, lane: LaneId, waiting: u32, count: u32) {
        let i = self.lanes.iter().position(|&l| l == lane).expect("lane is observed");
        self.waiting[i] = waiting;
        self.count[i] = count;
    }
}

/// A signal controller. One instance serves every intersection of an
/// episode; it may keep per-intersection state but never touches the
/// simulation.
pub trait Controller: Send {
    fn name(&self) -> &str;

    /// Phase shown from time zero.
    fn initial_phase(&mut self, _intersection: &Intersection, _index: usize) -> usize {
        0
    }

    /// Called every second once the current green has lasted the minimum
    /// duration. Returning the current phase extends it.
    fn choose_phase(&mut self, intersection: &Intersection, observation: &Observation) -> usize;
}

/// A vehicle discharged across an intersection during the last step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub intersection: usize,
    pub movement: usize,
    pub kind: Turn,
    pub phase: usize,
    pub mode: SignalMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub enter_time: u32,
    pub exit_time: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub clock: u32,
    pub intersection: String,
    pub phase: u8,
    pub mode: SignalMode,
    pub queued: u32,
}

/// Everything needed to compute the episode metrics without re-running.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub horizon: u32,
    pub signalized: usize,
    /// One record per spawned vehicle (including spawns still blocked at the
    /// horizon), in spawn order.
    pub vehicles: Vec<VehicleRecord>,
    /// Network-wide queued vehicles after each step.
    pub waiting_series: Vec<u32>,
    pub waiting_total: u64,
    /// Step-major: `phase_log[t * signalized + i]`.
    pub phase_log: Vec<SignalSnapshot>,
    pub trace: Option<Vec<TraceRow>>,
}

impl EpisodeResult {
    pub fn completed(&self) -> usize {
        self.vehicles.iter().filter(|v| v.exit_time.is_some()).count()
    }

    pub fn snapshot(&self, step: usize, intersection: usize) -> SignalSnapshot {
        self.phase_log[step * self.signalized + intersection]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    pub trace: bool,
}

#[derive(Debug, Clone, Copy)]
struct Vehicle {
    event: u32,
    route_pos: u32,
    enter_time: u32,
    exit_time: Option<u32>,
}

#[derive(Debug, Clone, Default)]
struct LaneState {
    queue: VecDeque<u32>,
    moving: VecDeque<(u32, u32)>,
    transit: VecDeque<(u32, u32)>,
    next_discharge: u32,
}

impl LaneState {
    fn occupancy(&self) -> usize {
        self.queue.len() + self.moving.len() + self.transit.len()
    }
}

/// Mutable state of one episode.
pub struct SimState<'a> {
    network: &'a RoadNetwork,
    flow: &'a FlowSpec,
    horizon: u32,
    clock: u32,
    lanes: Vec<LaneState>,
    signals: Vec<SignalState>,
    vehicles: Vec<Vehicle>,
    /// Lane used on each road of each event's route.
    route_lanes: Vec<Vec<LaneId>>,
    /// Event indices sorted by spawn time, restricted to the horizon.
    schedule: Vec<u32>,
    next_event: usize,
    blocked: VecDeque<u32>,
    completed: usize,
    waiting_series: Vec<u32>,
    waiting_total: u64,
    phase_log: Vec<SignalSnapshot>,
    crossings: Vec<Crossing>,
    trace: Option<Vec<TraceRow>>,
}

impl<'a> SimState<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        flow: &'a FlowSpec,
        horizon: u32,
        controller: &mut dyn Controller,
        options: SimOptions,
    ) -> SimState<'a> {
        let route_lanes = flow
            .events
            .iter()
            .map(|ev| {
                ev.route
                    .iter()
                    .enumerate()
                    .map(|(k, &road)| {
                        let kind = match ev.route.get(k + 1) {
                            Some(&next) => network
                                .movement_between(road, next)
                                .map(|m| m.kind)
                                .expect("flow routes are validated against the network"),
                            None => Turn::Through,
                        };
                        network.road(road).lane(kind)
                    })
                    .collect()
            })
            .collect();
        let mut schedule: Vec<u32> = (0..flow.events.len() as u32)
            .filter(|&i| flow.events[i as usize].spawn_time < horizon)
            .collect();
        schedule.sort_by_key(|&i| flow.events[i as usize].spawn_time);

        let signals = network
            .intersections
            .iter()
            .enumerate()
            .map(|(i, inter)| {
                let p = controller.initial_phase(inter, i);
                assert!(p < PHASE_COUNT, "controller returned phase {p}");
                SignalState::green(p)
            })
            .collect();

        SimState {
            network,
            flow,
            horizon,
            clock: 0,
            lanes: vec![LaneState::default(); network.lanes.len()],
            signals,
            vehicles: Vec::with_capacity(schedule.len()),
            route_lanes,
            schedule,
            next_event: 0,
            blocked: VecDeque::new(),
            completed: 0,
            waiting_series: Vec::with_capacity(horizon as usize),
            waiting_total: 0,
            phase_log: Vec::with_capacity(horizon as usize * network.intersections.len()),
            crossings: Vec::new(),
            trace: options.trace.then(Vec::new),
        }
    }

    pub fn clock(&self) -> u32 {
        self.clock
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn is_finished(&self) -> bool {
        self.clock >= self.horizon
    }

    pub fn signal(&self, intersection: usize) -> &SignalState {
        &self.signals[intersection]
    }

    /// Vehicles that have reached their spawn time, blocked or not.
    pub fn spawned(&self) -> usize {
        self.vehicles.len()
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    pub fn blocked_spawns(&self) -> usize {
        self.blocked.len()
    }

    /// Spawned vehicles not yet completed, including blocked spawns waiting
    /// at the boundary.
    pub fn in_network(&self) -> usize {
        self.on_lanes() + self.blocked.len()
    }

    /// Vehicles occupying lanes.
    pub fn on_lanes(&self) -> usize {
        self.lanes.iter().map(LaneState::occupancy).sum()
    }

    /// `(waiting, total)` vehicles on `lane`.
    pub fn lane_counts(&self, lane: LaneId) -> (u32, u32) {
        let l = &self.lanes[lane.index()];
        (l.queue.len() as u32, l.occupancy() as u32)
    }

    /// Discharges performed during the most recent step.
    pub fn last_crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn observe(&self, intersection: usize) -> Observation {
        let inter = &self.network.intersections[intersection];
        let mut obs = Observation::empty(intersection, inter);
        for (k, lane) in inter.lanes.iter().enumerate() {
            let (w, c) = self.lane_counts(*lane);
            obs.waiting[k] = w;
            obs.count[k] = c;
        }
        let sig = &self.signals[intersection];
        obs.current_phase = sig.current_phase;
        obs.green_elapsed = sig.green_elapsed;
        obs
    }

    fn travel_countdown(&self, lane: LaneId) -> u32 {
        let spec = self.network.lane(lane);
        let state = &self.lanes[lane.index()];
        let cap = spec.capacity as u64;
        let free = cap.saturating_sub(state.queue.len() as u64);
        let scaled = (spec.free_flow_time as u64 * free).div_ceil(cap) as u32;
        // no overtaking inside a lane
        let behind = state.moving.back().map_or(0, |&(_, r)| r);
        scaled.max(1).max(behind)
    }

    fn is_last_road(&self, vehicle: u32) -> bool {
        let v = &self.vehicles[vehicle as usize];
        v.route_pos as usize + 1 == self.flow.events[v.event as usize].route.len()
    }

    fn lane_of(&self, vehicle: u32, pos: u32) -> LaneId {
        self.route_lanes[self.vehicles[vehicle as usize].event as usize][pos as usize]
    }

    fn has_room(&self, lane: LaneId) -> bool {
        self.lanes[lane.index()].occupancy() < self.network.lane(lane).capacity as usize
    }

    /// Advances the clock by one second.
    pub fn step(&mut self, controller: &mut dyn Controller) {
        assert!(self.clock < self.horizon, "episode already finished");
        let now = self.clock;
        self.crossings.clear();

        // (1) spawns
        while self.next_event < self.schedule.len() {
            let ev = self.schedule[self.next_event];
            if self.flow.events[ev as usize].spawn_time > now {
                break;
            }
            let id = self.vehicles.len() as u32;
            self.vehicles.push(Vehicle {
                event: ev,
                route_pos: 0,
                enter_time: self.flow.events[ev as usize].spawn_time,
                exit_time: None,
            });
            self.blocked.push_back(id);
            self.next_event += 1;
        }
        let pending = std::mem::take(&mut self.blocked);
        for id in pending {
            let lane = self.lane_of(id, 0);
            if self.has_room(lane) {
                let cd = self.travel_countdown(lane);
                self.lanes[lane.index()].moving.push_back((id, cd));
            } else {
                self.blocked.push_back(id);
            }
        }

        // (2) movement along lanes, then transit completion
        for lane in &mut self.lanes {
            for entry in lane.moving.iter_mut() {
                entry.1 -= 1;
            }
            while let Some(&(id, 0)) = lane.moving.front() {
                lane.moving.pop_front();
                lane.queue.push_back(id);
            }
            for entry in lane.transit.iter_mut() {
                entry.1 -= 1;
            }
        }
        for l in 0..self.lanes.len() {
            while let Some(&(id, 0)) = self.lanes[l].transit.front() {
                self.lanes[l].transit.pop_front();
                let cd = self.travel_countdown(LaneId(l as u32));
                self.lanes[l].moving.push_back((id, cd));
            }
        }

        // (3) discharge
        let network = self.network;
        for (i, inter) in network.intersections.iter().enumerate() {
            let sig = self.signals[i];
            let green = inter.phases[sig.current_phase].movements;
            for (local, m) in inter.movements.iter().enumerate().take(MOVEMENTS_PER_INTERSECTION) {
                let open = !m.is_signal_controlled() || (sig.mode == SignalMode::Green && green.contains(&m.id));
                if !open {
                    continue;
                }
                let src = m.incoming_lane.index();
                if self.lanes[src].next_discharge > now {
                    continue;
                }
                let Some(&head) = self.lanes[src].queue.front() else {
                    continue;
                };
                if self.is_last_road(head) {
                    continue;
                }
                let pos = self.vehicles[head as usize].route_pos + 1;
                let target = self.lane_of(head, pos);
                debug_assert_eq!(network.lane(target).road, m.outgoing_road);
                if !self.has_room(target) {
                    continue;
                }
                self.lanes[src].queue.pop_front();
                self.lanes[src].next_discharge = now + SATURATION_HEADWAY_SECS;
                self.lanes[target.index()].transit.push_back((head, TRANSIT_SECS));
                self.vehicles[head as usize].route_pos = pos;
                self.crossings.push(Crossing {
                    intersection: i,
                    movement: local,
                    kind: m.kind,
                    phase: sig.current_phase,
                    mode: sig.mode,
                });
            }
        }

        // snapshot of the signals in force during this step
        for sig in &self.signals {
            self.phase_log.push(SignalSnapshot {
                phase: sig.current_phase as u8,
                mode: sig.mode,
            });
        }

        // (4) signals
        for (i, inter) in network.intersections.iter().enumerate() {
            let mut sig = self.signals[i];
            match sig.mode {
                SignalMode::Green => {
                    sig.green_elapsed += 1;
                    if sig.green_elapsed >= MIN_GREEN_SECS {
                        let obs = self.observe(i);
                        let choice = controller.choose_phase(inter, &obs);
                        assert!(choice < PHASE_COUNT, "controller {} returned phase {choice}", controller.name());
                        if choice != sig.current_phase {
                            sig.mode = SignalMode::Yellow;
                            sig.mode_elapsed = 0;
                            sig.pending_phase = Some(choice);
                        }
                    }
                }
                SignalMode::Yellow => {
                    sig.mode_elapsed += 1;
                    if sig.mode_elapsed >= YELLOW_SECS {
                        sig.mode = SignalMode::AllRed;
                        sig.mode_elapsed = 0;
                    }
                }
                SignalMode::AllRed => {
                    sig.mode_elapsed += 1;
                    if sig.mode_elapsed >= ALL_RED_SECS {
                        let next = sig.pending_phase.take().expect("all-red always has a pending phase");
                        sig = SignalState::green(next);
                    }
                }
            }
            self.signals[i] = sig;
        }

        // (5) exits
        for l in 0..self.lanes.len() {
            while let Some(&head) = self.lanes[l].queue.front() {
                if !self.is_last_road(head) {
                    break;
                }
                self.lanes[l].queue.pop_front();
                self.vehicles[head as usize].exit_time = Some(now + 1);
                self.completed += 1;
            }
        }

        // (6) waiting accumulator
        let waiting: u32 = self.lanes.iter().map(|l| l.queue.len() as u32).sum();
        self.waiting_series.push(waiting);
        self.waiting_total += waiting as u64;

        if let Some(trace) = self.trace.as_mut() {
            let log_start = self.phase_log.len() - network.intersections.len();
            for (i, inter) in network.intersections.iter().enumerate() {
                let queued = inter.lanes[..12]
                    .iter()
                    .map(|l| self.lanes[l.index()].queue.len() as u32)
                    .sum();
                let snap = self.phase_log[log_start + i];
                trace.push(TraceRow {
                    clock: now,
                    intersection: network.node(inter.node).name.clone(),
                    phase: snap.phase,
                    mode: snap.mode,
                    queued,
                });
            }
        }

        self.clock += 1;
    }

    pub fn finish(self) -> EpisodeResult {
        let vehicles = self
            .vehicles
            .iter()
            .map(|v| VehicleRecord {
                enter_time: v.enter_time,
                exit_time: v.exit_time,
            })
            .collect();
        EpisodeResult {
            horizon: self.clock,
            signalized: self.network.intersections.len(),
            vehicles,
            waiting_series: self.waiting_series,
            waiting_total: self.waiting_total,
            phase_log: self.phase_log,
            trace: self.trace,
        }
    }
}

/// Runs a full episode.
pub fn run(network: &RoadNetwork, flow: &FlowSpec, controller: &mut dyn Controller, horizon: u32) -> EpisodeResult {
    run_with(network, flow, controller, horizon, SimOptions::default())
}

pub fn run_with(
    network: &RoadNetwork,
    flow: &FlowSpec,
    controller: &mut dyn Controller,
    horizon: u32,
    options: SimOptions,
) -> EpisodeResult {
    let mut state = SimState::new(network, flow, horizon, controller, options);
    while !state.is_finished() {
        state.step(controller);
    }
    state.finish()
}

pub fn run_scenario(scenario: &Scenario, controller: &mut dyn Controller) -> EpisodeResult {
    run(&scenario.network, &scenario.flow, controller, scenario.horizon)
}

/// Writes the per-step signal trace as CSV.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["clock", "intersection", "phase", "mode", "queued"])?;
    for r in rows {
        w.write_record([
            r.clock.to_string(),
            r.intersection.clone(),
            r.phase.to_string(),
            r.mode.as_str().to_string(),
            r.queued.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
