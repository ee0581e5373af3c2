//! Deterministic discrete-time microsimulator.
//!
//! Vehicles follow Newell's simplified car-following rule on fixed lanes:
//! each step a vehicle advances at free speed unless capped by its leader's
//! position one reaction time earlier less the jam spacing, or by the stop
//! position when its lane faces red. Junctions are crossed instantaneously.
//! Control delay is measured per approach link from link entry to the stop
//! bar crossing, interpolated within the step. EVs accumulate energy while
//! their mid-point lies over an installed coil at the start of a step.

mod trace;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SimError};
use crate::model::{
    ArrivalProcess, Deployment, LaneId, NodeId, RoadNetwork, Scenario, SignalPlan, WcuSpec,
    JAM_SPACING,
};

pub use trace::{CsvTrace, TraceRow, TraceSink};

/// Simulation timestep, seconds.
pub const TIMESTEP: f64 = 0.5;
/// Car-following reaction time, seconds.
pub const REACTION_TIME: f64 = 1.2;
/// Physical vehicle length, meters. Only reported; spacing uses [`JAM_SPACING`].
pub const VEHICLE_LENGTH: f64 = 4.5;

/// Steps of position history kept per vehicle.
const HISTORY: usize = 4;
/// How far before the step start the leader position is sampled, in steps.
const LAG_STEPS: f64 = REACTION_TIME / TIMESTEP - 1.0;
const _: () = assert!(LAG_STEPS > 0.0 && (LAG_STEPS as usize) + 2 <= HISTORY);

/// Stop position on red: mid-point half a jam spacing before the bar.
const STOP_SETBACK: f64 = JAM_SPACING / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Indication {
    Green,
    Red,
}

/// Indication shown to `phase` at time `t`. Phase 0 is green on
/// `[0, g1)` of each cycle (relative to the offset), phase 1 on
/// `[g1 + lost/2, g1 + lost/2 + g2)`.
pub fn signal_indication(plan: &SignalPlan, phase: u8, t: f64) -> Indication {
    let in_cycle = (t - plan.offset).rem_euclid(plan.cycle);
    let (start, len) = match phase {
        0 => (0.0, plan.greens[0]),
        _ => (plan.greens[0] + plan.lost / 2.0, plan.greens[1]),
    };
    if in_cycle >= start && in_cycle < start + len {
        Indication::Green
    } else {
        Indication::Red
    }
}

/// One installed coil, measured upstream from the stop bar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoilSegment {
    pub lane: LaneId,
    pub start: f64,
    pub end: f64,
}

/// Coils installed on one lane.
#[derive(Clone, Debug, PartialEq)]
pub struct LaneCoils {
    pub link_length: f64,
    pub segments: Vec<CoilSegment>,
}

impl LaneCoils {
    /// `units` contiguous segments tiled upstream from the stop bar.
    pub fn layout(lane: &LaneId, link_length: f64, units: u32, unit_length: f64) -> Self {
        let segments = (0..units)
            .map(|k| CoilSegment {
                lane: lane.clone(),
                start: f64::from(k) * unit_length,
                end: f64::from(k + 1) * unit_length,
            })
            .collect();
        LaneCoils {
            link_length,
            segments,
        }
    }

    fn covers(&self, upstream: f64) -> bool {
        self.segments
            .iter()
            .any(|s| upstream >= s.start && upstream < s.end)
    }
}

/// Simulated vehicle.
#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: u64,
    pub route: usize,
    /// Position in the route's link sequence.
    pub leg: usize,
    /// Index of the current lane in the simulator's lane table.
    pub lane: usize,
    /// Mid-point distance from the start of the current link, meters.
    pub offset: f64,
    pub speed: f64,
    pub length: f64,
    pub is_ev: bool,
    /// Time the vehicle entered the network.
    pub entry_time: f64,
    /// Entry time for every link traversed so far.
    pub link_entries: Vec<f64>,
    /// Watt-hours received.
    pub energy: f64,
    lane_slot: usize,
    metered: bool,
    created_step: u64,
    origin_speed: f64,
    history: [f64; HISTORY],
}

impl Vehicle {
    fn link_entry_time(&self) -> f64 {
        self.link_entries[self.leg]
    }
}

/// Power delivered to `vehicle` by the coils on its lane, watts.
pub fn charging_power(vehicle: &Vehicle, coils: &LaneCoils, spec: &WcuSpec) -> f64 {
    if vehicle.is_ev && coils.covers(coils.link_length - vehicle.offset) {
        spec.delivered_power()
    } else {
        0.0
    }
}

/// Link entry and stop-bar crossing of one vehicle on one lane.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingRecord {
    pub vehicle: u64,
    pub lane: LaneId,
    pub entered: f64,
    pub crossed: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LaneMetrics {
    pub lane: LaneId,
    pub mean_control_delay: f64,
    pub vehicle_count: u64,
    /// Watt-hours.
    pub energy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntersectionMetrics {
    pub intersection: NodeId,
    pub mean_control_delay: f64,
    pub vehicle_count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Sorted by lane id.
    pub lanes: Vec<LaneMetrics>,
    /// Sorted by intersection id.
    pub intersections: Vec<IntersectionMetrics>,
    /// Watt-hours delivered to EVs that entered after warmup.
    pub total_utility: f64,
    /// Watt-hours per simulated hour after warmup.
    pub utility_rate: f64,
    pub seed: u64,
    pub plans: Vec<SignalPlan>,
    pub vehicles_entered: u64,
    pub vehicles_exited: u64,
    pub vehicles_in_network: u64,
    /// Arrived but still held at a source because the first lane was full.
    pub vehicles_waiting: u64,
}

impl SimulationResult {
    pub fn lane(&self, id: &LaneId) -> Option<&LaneMetrics> {
        self.lanes
            .binary_search_by(|m| m.lane.cmp(id))
            .ok()
            .map(|i| &self.lanes[i])
    }

    pub fn intersection(&self, id: &NodeId) -> Option<&IntersectionMetrics> {
        self.intersections
            .binary_search_by(|m| m.intersection.cmp(id))
            .ok()
            .map(|i| &self.intersections[i])
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

/// Mean control delay per lane of `net` from crossing records. Each
/// crossing contributes `(crossed - entered) - length / free_speed`,
/// with anything below 1e-9 s counted as zero. Lanes without crossings report `(0, 0)`.
pub fn control_delay(records: &[CrossingRecord], net: &RoadNetwork) -> BTreeMap<LaneId, (f64, u64)> {
    let mut sums: BTreeMap<LaneId, (f64, u64)> = net
        .links()
        .iter()
        .flat_map(|l| l.lanes.iter())
        .map(|l| (l.id.clone(), (0.0, 0)))
        .collect();
    for rec in records {
        let (Some(link), Some(acc)) = (net.lane_link(&rec.lane), sums.get_mut(&rec.lane)) else {
            continue;
        };
        let raw = (rec.crossed - rec.entered) - link.free_flow_time();
        // crossing-time interpolation leaves ~1e-13 s residue at free flow
        let delay = if raw < 1e-9 { 0.0 } else { raw };
        acc.0 += delay;
        acc.1 += 1;
    }
    for acc in sums.values_mut() {
        if acc.1 > 0 {
            acc.0 /= acc.1 as f64;
        }
    }
    sums
}

struct SimLane {
    id: LaneId,
    link: usize,
    /// Signal plan index and phase, when the lane approaches a signal.
    signal: Option<(usize, u8)>,
}

struct SimLink {
    length: f64,
    free_speed: f64,
    /// Lane table indices ordered by lane index.
    lanes: Vec<usize>,
}

struct SimRoute {
    links: Vec<usize>,
    cum_start: Vec<f64>,
    rate: f64,
    ev_fraction: f64,
}

/// Network compiled into index tables, reusable across runs.
pub struct Simulator<'a> {
    net: &'a RoadNetwork,
    lanes: Vec<SimLane>,
    links: Vec<SimLink>,
    routes: Vec<SimRoute>,
    lane_index: BTreeMap<LaneId, usize>,
}

struct Arrival {
    time: f64,
    route: usize,
    is_ev: bool,
    lane_slot: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a RoadNetwork) -> Self {
        let mut lanes = Vec::new();
        let mut links = Vec::new();
        let mut lane_index = BTreeMap::new();
        for (li, link) in net.links().iter().enumerate() {
            let mut ordered: Vec<_> = link.lanes.iter().collect();
            ordered.sort_by_key(|l| l.index);
            let mut ids = Vec::with_capacity(ordered.len());
            for lane in ordered {
                let phase = net.lane_group_of(&lane.id).map(|g| g.phase);
                let signal = phase.and_then(|p| {
                    net.signals()
                        .iter()
                        .position(|s| s.intersection == link.to)
                        .map(|i| (i, p))
                });
                lane_index.insert(lane.id.clone(), lanes.len());
                ids.push(lanes.len());
                lanes.push(SimLane {
                    id: lane.id.clone(),
                    link: li,
                    signal,
                });
            }
            links.push(SimLink {
                length: link.length,
                free_speed: link.free_speed,
                lanes: ids,
            });
        }
        let routes = net
            .demand()
            .routes
            .iter()
            .map(|r| {
                let idxs: Vec<usize> = r
                    .links
                    .iter()
                    .map(|id| net.link_index(id).expect("validated route"))
                    .collect();
                let mut cum = Vec::with_capacity(idxs.len());
                let mut acc = 0.0;
                for &i in &idxs {
                    cum.push(acc);
                    acc += links[i].length;
                }
                SimRoute {
                    links: idxs,
                    cum_start: cum,
                    rate: r.arrival_rate,
                    ev_fraction: r.ev_fraction,
                }
            })
            .collect();
        Simulator {
            net,
            lanes,
            links,
            routes,
            lane_index,
        }
    }

    pub fn network(&self) -> &RoadNetwork {
        self.net
    }

    pub fn run(
        &self,
        plans: &BTreeMap<NodeId, SignalPlan>,
        dep: &Deployment,
        scenario: &Scenario,
    ) -> Result<SimulationResult, SimError> {
        self.run_inner(plans, dep, scenario, None)
    }

    pub fn run_traced(
        &self,
        plans: &BTreeMap<NodeId, SignalPlan>,
        dep: &Deployment,
        scenario: &Scenario,
        trace: &mut dyn TraceSink,
    ) -> Result<SimulationResult, SimError> {
        self.run_inner(plans, dep, scenario, Some(trace))
    }

    fn ordered_plans(&self, plans: &BTreeMap<NodeId, SignalPlan>) -> Result<Vec<SignalPlan>, ModelError> {
        self.net
            .signals()
            .iter()
            .map(|base| {
                let plan = plans.get(&base.intersection).ok_or_else(|| ModelError::Validation {
                    entity: format!("intersection `{}`", base.intersection),
                    reason: "no signal plan supplied".into(),
                })?;
                if plan.intersection != base.intersection || !plan.is_consistent() {
                    return Err(ModelError::Validation {
                        entity: format!("signal plan for intersection `{}`", base.intersection),
                        reason: "plan is inconsistent or keyed to another intersection".into(),
                    });
                }
                Ok(plan.clone())
            })
            .collect()
    }

    fn arrivals(&self, scenario: &Scenario) -> Vec<Arrival> {
        let mut out = Vec::new();
        let process = self.net.demand().arrival_process;
        for (r, route) in self.routes.iter().enumerate() {
            if route.rate <= 0.0 {
                continue;
            }
            let lanes = self.links[route.links[0]].lanes.len();
            let mut k = 0usize;
            match process {
                ArrivalProcess::Poisson => {
                    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
                    rng.set_stream(r as u64);
                    let exp = Exp::new(route.rate / 3600.0).expect("positive rate");
                    let mut t = exp.sample(&mut rng);
                    while t < scenario.sim_duration {
                        let is_ev = rng.random_bool(route.ev_fraction);
                        out.push(Arrival { time: t, route: r, is_ev, lane_slot: k % lanes });
                        k += 1;
                        t += exp.sample(&mut rng);
                    }
                }
                ArrivalProcess::Deterministic => {
                    let headway = 3600.0 / route.rate;
                    loop {
                        let t = k as f64 * headway;
                        if t >= scenario.sim_duration {
                            break;
                        }
                        let f = route.ev_fraction;
                        let is_ev = ((k + 1) as f64 * f).floor() > (k as f64 * f).floor();
                        out.push(Arrival { time: t, route: r, is_ev, lane_slot: k % lanes });
                        k += 1;
                    }
                }
            }
        }
        out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.route.cmp(&b.route)));
        out
    }

    fn run_inner(
        &self,
        plans: &BTreeMap<NodeId, SignalPlan>,
        dep: &Deployment,
        scenario: &Scenario,
        mut trace: Option<&mut dyn TraceSink>,
    ) -> Result<SimulationResult, SimError> {
        let plans = self.ordered_plans(plans)?;
        dep.validate_against(self.net)?;
        let coils: Vec<Option<LaneCoils>> = self
            .lanes
            .iter()
            .map(|l| {
                let n = dep.units_on(&l.id);
                (n > 0).then(|| {
                    LaneCoils::layout(&l.id, self.links[l.link].length, n, dep.spec.unit_length)
                })
            })
            .collect();
        let power = dep.spec.delivered_power();

        let mut sources: Vec<VecDeque<(u64, Arrival)>> =
            (0..self.routes.len()).map(|_| VecDeque::new()).collect();
        let mut pending_arrivals: VecDeque<(u64, Arrival)> = self
            .arrivals(scenario)
            .into_iter()
            .enumerate()
            .map(|(i, a)| (i as u64, a))
            .collect();

        let mut vehicles: Vec<Vehicle> = Vec::new();
        let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); self.lanes.len()];
        let mut entrants: Vec<Vec<usize>> = vec![Vec::new(); self.lanes.len()];
        let mut crossing: Vec<(usize, usize, f64)> = Vec::new();
        let mut lane_energy = vec![0.0f64; self.lanes.len()];
        let mut records: Vec<CrossingRecord> = Vec::new();
        let mut exited = 0u64;
        let mut in_network = 0u64;

        let steps = (scenario.sim_duration / TIMESTEP).round() as u64;
        for step in 0..steps {
            let t = step as f64 * TIMESTEP;

            while pending_arrivals.front().is_some_and(|(_, a)| a.time <= t) {
                let (id, a) = pending_arrivals.pop_front().expect("front exists");
                sources[a.route].push_back((id, a));
            }

            // Insert at most one vehicle per route at the link start.
            for (r, queue) in sources.iter_mut().enumerate() {
                let Some((_, head)) = queue.front() else { continue };
                let route = &self.routes[r];
                let link = &self.links[route.links[0]];
                let lane = link.lanes[head.lane_slot.min(link.lanes.len() - 1)];
                if let Some(&tail) = queues[lane].back() {
                    let tv = &vehicles[tail];
                    let lagged = self.local_lagged(tv, tv.leg, step);
                    if lagged < JAM_SPACING || tv.offset < JAM_SPACING {
                        continue;
                    }
                }
                let (id, arrival) = queue.pop_front().expect("front exists");
                let slot = vehicles.len();
                vehicles.push(Vehicle {
                    id,
                    route: r,
                    leg: 0,
                    lane,
                    offset: 0.0,
                    speed: link.free_speed,
                    length: VEHICLE_LENGTH,
                    is_ev: arrival.is_ev,
                    entry_time: t,
                    link_entries: vec![t],
                    energy: 0.0,
                    lane_slot: arrival.lane_slot,
                    metered: t >= scenario.warmup,
                    created_step: step,
                    origin_speed: link.free_speed,
                    history: [0.0; HISTORY],
                });
                queues[lane].push_back(slot);
                in_network += 1;
            }

            // Charging and trace at the step start.
            for (li, queue) in queues.iter().enumerate() {
                for &v in queue {
                    let veh = &mut vehicles[v];
                    let watts = match &coils[li] {
                        Some(c) => charging_power(veh, c, &dep.spec),
                        None => 0.0,
                    };
                    if watts > 0.0 {
                        let wh = power * TIMESTEP / 3600.0;
                        veh.energy += wh;
                        if veh.metered {
                            lane_energy[li] += wh;
                        }
                    }
                    if let Some(sink) = trace.as_deref_mut() {
                        sink.record(&TraceRow {
                            t,
                            vehicle_id: veh.id,
                            lane_id: self.lanes[li].id.clone(),
                            offset_m: veh.offset,
                            speed_mps: veh.speed,
                            charging_w: watts,
                            metered: veh.metered,
                        })?;
                    }
                }
            }

            // Movement. Caps only read lagged history, so in-place updates are safe.
            crossing.clear();
            for e in entrants.iter_mut() {
                e.clear();
            }
            for li in 0..self.lanes.len() {
                let lane = &self.lanes[li];
                let link = &self.links[lane.link];
                let red = lane.signal.is_some_and(|(p, phase)| {
                    signal_indication(&plans[p], phase, t) == Indication::Red
                });
                let stop_at = link.length - STOP_SETBACK;
                for pos in 0..queues[li].len() {
                    let v = queues[li][pos];
                    let veh = &vehicles[v];
                    let x = veh.offset;
                    let mut cap = x + link.free_speed * TIMESTEP;
                    let route = &self.routes[veh.route];
                    let next_lane = (veh.leg + 1 < route.links.len()).then(|| {
                        let next = &self.links[route.links[veh.leg + 1]];
                        next.lanes[veh.lane_slot.min(next.lanes.len() - 1)]
                    });
                    if pos > 0 {
                        let leader = &vehicles[queues[li][pos - 1]];
                        cap = cap.min(self.local_lagged(leader, leader.leg, step) - JAM_SPACING);
                    } else if let Some(nl) = next_lane {
                        let tail = entrants[nl]
                            .last()
                            .map(|&u| (u, vehicles[u].leg + 1))
                            .or_else(|| queues[nl].back().map(|&u| (u, vehicles[u].leg)));
                        if let Some((u, leg)) = tail {
                            let lagged = self.local_lagged(&vehicles[u], leg, step);
                            cap = cap.min(link.length + lagged - JAM_SPACING);
                        }
                    }
                    if red && x <= stop_at {
                        cap = cap.min(stop_at);
                    }
                    let new_x = cap.max(x);
                    let veh = &mut vehicles[v];
                    veh.speed = (new_x - x) / TIMESTEP;
                    veh.offset = new_x;
                    if new_x >= link.length {
                        let frac = (link.length - x) / (new_x - x);
                        crossing.push((li, v, t + frac * TIMESTEP));
                        if let Some(nl) = next_lane {
                            entrants[nl].push(v);
                        }
                    }
                }
            }

            for &(li, v, t_cross) in &crossing {
                let popped = queues[li].pop_front();
                debug_assert_eq!(popped, Some(v));
                let length = self.links[self.lanes[li].link].length;
                let veh = &mut vehicles[v];
                if veh.metered {
                    records.push(CrossingRecord {
                        vehicle: veh.id,
                        lane: self.lanes[li].id.clone(),
                        entered: veh.link_entry_time(),
                        crossed: t_cross,
                    });
                }
                let route = &self.routes[veh.route];
                if veh.leg + 1 < route.links.len() {
                    veh.leg += 1;
                    let next = &self.links[route.links[veh.leg]];
                    let nl = next.lanes[veh.lane_slot.min(next.lanes.len() - 1)];
                    veh.offset -= length;
                    veh.lane = nl;
                    veh.link_entries.push(t_cross);
                    queues[nl].push_back(v);
                } else {
                    in_network -= 1;
                    exited += 1;
                }
            }

            // Record positions at the next step and check for gridlock.
            let next_step = step + 1;
            let t_next = next_step as f64 * TIMESTEP;
            for queue in &queues {
                for &v in queue {
                    let veh = &mut vehicles[v];
                    let route = &self.routes[veh.route];
                    veh.history[(next_step as usize) % HISTORY] = route.cum_start[veh.leg] + veh.offset;
                    let link = &self.links[route.links[veh.leg]];
                    let delay = (t_next - veh.link_entry_time()) - link.length / link.free_speed;
                    if delay > scenario.gridlock_bound {
                        return Err(SimError::Gridlock {
                            vehicle: veh.id,
                            location: format!("lane `{}`", self.lanes[veh.lane].id),
                            time: t_next,
                            delay,
                            bound: scenario.gridlock_bound,
                        });
                    }
                }
            }
            for queue in &sources {
                if let Some((id, a)) = queue.front() {
                    if t_next - a.time > scenario.gridlock_bound {
                        return Err(SimError::Gridlock {
                            vehicle: *id,
                            location: format!("source of route #{}", a.route),
                            time: t_next,
                            delay: t_next - a.time,
                            bound: scenario.gridlock_bound,
                        });
                    }
                }
            }
        }

        let delays = control_delay(&records, self.net);
        let lanes: Vec<LaneMetrics> = delays
            .iter()
            .map(|(id, &(mean, count))| LaneMetrics {
                lane: id.clone(),
                mean_control_delay: mean,
                vehicle_count: count,
                energy: lane_energy[self.lane_index[id]],
            })
            .collect();
        let total_utility: f64 = lanes.iter().map(|l| l.energy).sum();
        let hours = (scenario.sim_duration - scenario.warmup) / 3600.0;
        let result = SimulationResult {
            intersections: intersection_metrics(self.net, &lanes),
            lanes,
            total_utility,
            utility_rate: total_utility / hours,
            seed: scenario.seed,
            plans,
            vehicles_entered: vehicles.len() as u64,
            vehicles_exited: exited,
            vehicles_in_network: in_network,
            vehicles_waiting: sources.iter().map(|q| q.len() as u64).sum::<u64>()
                + pending_arrivals.len() as u64,
        };
        Ok(result)
    }

    /// Position of `veh`, in the coordinates of its route leg `leg`, at one
    /// reaction time before the end of the step starting at `step`.
    fn local_lagged(&self, veh: &Vehicle, leg: usize, step: u64) -> f64 {
        let at = step as f64 - LAG_STEPS;
        let base = at.floor();
        let frac = at - base;
        let lo = self.cum_at(veh, base as i64);
        let hi = self.cum_at(veh, base as i64 + 1);
        let cum = lo + frac * (hi - lo);
        cum - self.routes[veh.route].cum_start[leg]
    }

    fn cum_at(&self, veh: &Vehicle, step: i64) -> f64 {
        let created = veh.created_step as i64;
        if step >= created {
            veh.history[(step as usize) % HISTORY]
        } else {
            veh.history[(veh.created_step as usize) % HISTORY]
                - veh.origin_speed * TIMESTEP * (created - step) as f64
        }
    }
}

fn intersection_metrics(net: &RoadNetwork, lanes: &[LaneMetrics]) -> Vec<IntersectionMetrics> {
    let mut acc: BTreeMap<NodeId, (f64, u64)> = net
        .signalized_nodes()
        .map(|n| (n.id.clone(), (0.0, 0)))
        .collect();
    for group in net.lane_groups() {
        let entry = acc.entry(group.intersection.clone()).or_default();
        for id in &group.lanes {
            if let Ok(i) = lanes.binary_search_by(|m| m.lane.cmp(id)) {
                entry.0 += lanes[i].mean_control_delay * lanes[i].vehicle_count as f64;
                entry.1 += lanes[i].vehicle_count;
            }
        }
    }
    acc.into_iter()
        .map(|(id, (sum, n))| IntersectionMetrics {
            intersection: id,
            mean_control_delay: if n > 0 { sum / n as f64 } else { 0.0 },
            vehicle_count: n,
        })
        .collect()
}

/// Runs one simulation of `net` under `plans` with `dep` installed.
pub fn run_simulation(
    net: &RoadNetwork,
    plans: &BTreeMap<NodeId, SignalPlan>,
    dep: &Deployment,
    scenario: &Scenario,
) -> Result<SimulationResult, SimError> {
    Simulator::new(net).run(plans, dep, scenario)
}

#[cfg(test)]
mod tests;
