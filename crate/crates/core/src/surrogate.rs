//! Low/mid/high sampling and per-lane interpolants.
//!
//! Each candidate lane is sampled on its own: the lane carries `n` units,
//! its intersection runs the sampled phase-0 green, and everything else
//! stays at base. Utility is interpolated bilinearly over (units, green);
//! delay, which coils do not affect, is interpolated linearly over green
//! from the zero-unit row.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ModelError, SurrogateError};
use crate::los::CandidateSet;
use crate::model::{
    feasible_green_range, quantize_green, Deployment, LaneId, NodeId, RoadNetwork, Scenario,
    SeedPolicy, SignalPlan, SCHEMA_VERSION,
};
use crate::sim::{SimulationResult, Simulator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub lane: LaneId,
    pub intersection: NodeId,
    pub n: u32,
    pub g1: f64,
    pub utility: Option<f64>,
    pub delay: Option<f64>,
}

fn dedup_sorted<T: PartialOrd + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    v.dedup();
    v
}

/// Unit-count levels `{0, ceil(n_max / 2), n_max}` with duplicates removed.
pub fn unit_levels(n_max: u32) -> Vec<u32> {
    dedup_sorted(vec![0, n_max.div_ceil(2), n_max])
}

/// Green levels `{lo, (lo + hi) / 2, hi}` with duplicates removed.
pub fn green_levels(lo: f64, hi: f64) -> Vec<f64> {
    dedup_sorted(vec![lo, quantize_green((lo + hi) / 2.0), hi])
}

/// Unrun sample points: every unit level crossed with every green level
/// for each candidate lane, ordered by lane, then `n`, then `g1`.
pub fn sample_grid(
    candidates: &CandidateSet,
    net: &RoadNetwork,
    plans: &BTreeMap<NodeId, SignalPlan>,
    scenario: &Scenario,
) -> Result<Vec<SamplePoint>, SurrogateError> {
    let mut points = Vec::new();
    for lane_id in &candidates.lanes {
        let lane = net
            .lane(lane_id)
            .ok_or_else(|| SurrogateError::UnknownLane(lane_id.to_string()))?;
        let intersection = net
            .lane_group_of(lane_id)
            .map(|g| g.intersection.clone())
            .ok_or_else(|| ModelError::Validation {
                entity: format!("lane `{lane_id}`"),
                reason: "candidate does not approach a signal".into(),
            })?;
        let plan = plans.get(&intersection).ok_or_else(|| ModelError::Validation {
            entity: format!("intersection `{intersection}`"),
            reason: "no base signal plan".into(),
        })?;
        let (lo, hi) = feasible_green_range(plan, scenario.min_green)?;
        let n_max = scenario.max_units(lane.usable_length);
        for n in unit_levels(n_max) {
            for g1 in green_levels(lo, hi) {
                points.push(SamplePoint {
                    lane: lane_id.clone(),
                    intersection: intersection.clone(),
                    n,
                    g1,
                    utility: None,
                    delay: None,
                });
            }
        }
    }
    Ok(points)
}

/// Simulation configuration behind a sample point. Zero-unit points only
/// depend on the intersection and green, so lanes of one intersection share them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct RunKey {
    intersection: NodeId,
    g1_bits: u64,
    lane: Option<LaneId>,
    n: u32,
}

impl RunKey {
    fn of(p: &SamplePoint) -> Self {
        RunKey {
            intersection: p.intersection.clone(),
            g1_bits: p.g1.to_bits(),
            lane: (p.n > 0).then(|| p.lane.clone()),
            n: p.n,
        }
    }

    fn label(&self) -> String {
        format!(
            "{}|{}|{}|{}",
            self.intersection,
            f64::from_bits(self.g1_bits),
            self.lane.as_ref().map_or("", |l| l.as_str()),
            self.n
        )
    }
}

/// Seed for one sample run under the scenario's seed policy.
pub fn sample_seed(policy: SeedPolicy, master: u64, key: &str) -> u64 {
    match policy {
        SeedPolicy::Common => master,
        SeedPolicy::PerPoint => {
            let mut h = Sha256::new();
            h.update(master.to_le_bytes());
            h.update(key.as_bytes());
            let digest = h.finalize();
            u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
        }
    }
}

/// Simulates every distinct configuration among `points` (in parallel) and
/// fills each point's utility and delay from its lane's metrics.
pub fn run_sample_batch(
    points: &[SamplePoint],
    net: &RoadNetwork,
    plans: &BTreeMap<NodeId, SignalPlan>,
    scenario: &Scenario,
) -> Result<Vec<SamplePoint>, SurrogateError> {
    let mut runs: BTreeMap<RunKey, &SamplePoint> = BTreeMap::new();
    for p in points {
        runs.entry(RunKey::of(p)).or_insert(p);
    }
    log::info!(
        "running {} sample simulations for {} points",
        runs.len(),
        points.len()
    );
    let sim = Simulator::new(net);
    let jobs: Vec<(&RunKey, &SamplePoint)> = runs.iter().map(|(k, p)| (k, *p)).collect();
    let results: Vec<(RunKey, SimulationResult)> = jobs
        .par_iter()
        .map(|&(key, p)| {
            let mut run_plans = plans.clone();
            let base = plans.get(&p.intersection).ok_or_else(|| ModelError::Validation {
                entity: format!("intersection `{}`", p.intersection),
                reason: "no base signal plan".into(),
            })?;
            run_plans.insert(p.intersection.clone(), base.with_phase1_green(p.g1));
            let mut dep = Deployment::empty(scenario.wcu.clone());
            if p.n > 0 {
                dep.units.insert(p.lane.clone(), p.n);
            }
            let run_scenario = Scenario {
                seed: sample_seed(scenario.sample_seeds, scenario.seed, &key.label()),
                ..scenario.clone()
            };
            sim.run(&run_plans, &dep, &run_scenario)
                .map(|r| (key.clone(), r))
                .map_err(|source| SurrogateError::Sample {
                    lane: p.lane.to_string(),
                    n: p.n,
                    g1: p.g1,
                    source,
                })
        })
        .collect::<Result<_, _>>()?;
    let by_key: BTreeMap<RunKey, SimulationResult> = results.into_iter().collect();

    points
        .iter()
        .map(|p| {
            let res = &by_key[&RunKey::of(p)];
            let metrics = res
                .lane(&p.lane)
                .ok_or_else(|| SurrogateError::UnknownLane(p.lane.to_string()))?;
            Ok(SamplePoint {
                utility: Some(metrics.energy),
                delay: Some(metrics.mean_control_delay),
                ..p.clone()
            })
        })
        .collect()
}

/// Interpolants for one candidate lane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneSurrogate {
    pub lane: LaneId,
    pub intersection: NodeId,
    pub n_levels: Vec<u32>,
    pub g_levels: Vec<f64>,
    /// Watt-hours, indexed `[n level][g level]`.
    pub utility: Vec<Vec<f64>>,
    /// Seconds, indexed by g level.
    pub delay: Vec<f64>,
}

/// Position of `v` on a sorted axis as a cell index and weight, clamped to
/// the axis ends.
fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if last == 0 || v <= axis[0] {
        return (0, 0.0);
    }
    if v >= axis[last] {
        return (last - 1, 1.0);
    }
    let hi = axis.partition_point(|&a| a <= v);
    let i = hi - 1;
    (i, (v - axis[i]) / (axis[hi] - axis[i]))
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

impl LaneSurrogate {
    pub fn n_max(&self) -> u32 {
        *self.n_levels.last().expect("non-empty axis")
    }

    pub fn green_bounds(&self) -> (f64, f64) {
        (self.g_levels[0], *self.g_levels.last().expect("non-empty axis"))
    }

    pub fn utility_at(&self, n: f64, g1: f64) -> f64 {
        let n_axis: Vec<f64> = self.n_levels.iter().map(|&n| f64::from(n)).collect();
        let (i, tn) = locate(&n_axis, n);
        let (j, tg) = locate(&self.g_levels, g1);
        let row = |r: usize| {
            let r = r.min(self.n_levels.len() - 1);
            let jj = (j + 1).min(self.g_levels.len() - 1);
            lerp(self.utility[r][j], self.utility[r][jj], tg)
        };
        lerp(row(i), row(i + 1), tn)
    }

    pub fn delay_at(&self, g1: f64) -> f64 {
        let (j, t) = locate(&self.g_levels, g1);
        let jj = (j + 1).min(self.g_levels.len() - 1);
        lerp(self.delay[j], self.delay[jj], t)
    }

    fn validate(&self) -> Result<(), String> {
        let sorted_n = self.n_levels.windows(2).all(|w| w[0] < w[1]);
        let sorted_g = self.g_levels.windows(2).all(|w| w[0] < w[1]);
        if self.n_levels.is_empty() || self.g_levels.is_empty() || !sorted_n || !sorted_g {
            return Err("axes must be non-empty and strictly increasing".into());
        }
        if self.g_levels.iter().any(|g| !g.is_finite()) {
            return Err("green levels must be finite".into());
        }
        if self.utility.len() != self.n_levels.len()
            || self.utility.iter().any(|r| r.len() != self.g_levels.len())
            || self.delay.len() != self.g_levels.len()
        {
            return Err("grid shape does not match axes".into());
        }
        if self
            .utility
            .iter()
            .flatten()
            .any(|&u| !(u.is_finite() && u >= 0.0))
        {
            return Err("utility values must be finite and non-negative".into());
        }
        if self.delay.iter().any(|&d| !(d.is_finite() && d >= 0.0)) {
            return Err("delay values must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Fitted interpolants for all candidate lanes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSet {
    pub schema_version: u32,
    pub master_seed: u64,
    /// Content hash of the network the samples were drawn from.
    pub network_hash: String,
    /// Base plans of the intersections owning candidates, sorted by id.
    pub base_plans: Vec<SignalPlan>,
    /// Sorted by lane id.
    pub lanes: Vec<LaneSurrogate>,
}

impl SurrogateSet {
    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    pub fn lane_index(&self, lane: &LaneId) -> Option<usize> {
        self.lanes.binary_search_by(|l| l.lane.cmp(lane)).ok()
    }

    pub fn lane(&self, lane: &LaneId) -> Result<&LaneSurrogate, SurrogateError> {
        self.lane_index(lane)
            .map(|i| &self.lanes[i])
            .ok_or_else(|| SurrogateError::UnknownLane(lane.to_string()))
    }

    /// Intersections owning at least one candidate, sorted by id.
    pub fn intersections(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.lanes.iter().map(|l| l.intersection.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn base_plan(&self, intersection: &NodeId) -> Option<&SignalPlan> {
        self.base_plans.iter().find(|p| &p.intersection == intersection)
    }

    /// Records which network and master seed produced the samples.
    pub fn stamped(mut self, net: &RoadNetwork, master_seed: u64) -> Self {
        self.network_hash = net.content_hash();
        self.master_seed = master_seed;
        self
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("surrogate serializes");
        s.push('\n');
        s
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, ModelError> {
        let set: SurrogateSet = serde_json::from_slice(bytes)?;
        if set.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found: set.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        if !set.lanes.windows(2).all(|w| w[0].lane < w[1].lane) {
            return Err(ModelError::Validation {
                entity: "surrogate".into(),
                reason: "lanes must be sorted by id without duplicates".into(),
            });
        }
        for lane in &set.lanes {
            lane.validate().map_err(|reason| ModelError::Validation {
                entity: format!("surrogate for lane `{}`", lane.lane),
                reason,
            })?;
            let plan = set.base_plan(&lane.intersection).ok_or_else(|| ModelError::Validation {
                entity: format!("surrogate for lane `{}`", lane.lane),
                reason: format!("no base plan for intersection `{}`", lane.intersection),
            })?;
            if !plan.is_consistent() {
                return Err(ModelError::Validation {
                    entity: format!("signal plan for intersection `{}`", plan.intersection),
                    reason: "g1 + g2 + lost does not equal cycle".into(),
                });
            }
        }
        Ok(set)
    }
}

/// Fits the per-lane interpolants from filled sample points.
pub fn fit_surrogates(
    points: &[SamplePoint],
    plans: &BTreeMap<NodeId, SignalPlan>,
) -> Result<SurrogateSet, SurrogateError> {
    let mut by_lane: BTreeMap<&LaneId, Vec<&SamplePoint>> = BTreeMap::new();
    for p in points {
        by_lane.entry(&p.lane).or_default().push(p);
    }
    let mut lanes = Vec::with_capacity(by_lane.len());
    let mut base_plans: BTreeMap<NodeId, SignalPlan> = BTreeMap::new();
    for (lane, pts) in by_lane {
        let intersection = pts[0].intersection.clone();
        let mut n_levels = dedup_sorted(pts.iter().map(|p| p.n).collect());
        let g_levels = dedup_sorted(pts.iter().map(|p| p.g1).collect());
        if n_levels.first() != Some(&0) {
            n_levels.insert(0, 0);
        }
        let missing = |n: u32, g1: f64| SurrogateError::MissingPoint {
            lane: lane.to_string(),
            n,
            g1,
        };
        let mut cells: BTreeMap<(u32, u64), &SamplePoint> = BTreeMap::new();
        for p in &pts {
            cells.insert((p.n, p.g1.to_bits()), p);
        }
        let mut utility = Vec::with_capacity(n_levels.len());
        for &n in &n_levels {
            let mut row = Vec::with_capacity(g_levels.len());
            for &g in &g_levels {
                let u = cells
                    .get(&(n, g.to_bits()))
                    .and_then(|p| p.utility)
                    .ok_or_else(|| missing(n, g))?;
                row.push(u);
            }
            utility.push(row);
        }
        let delay = g_levels
            .iter()
            .map(|&g| {
                cells
                    .get(&(0, g.to_bits()))
                    .and_then(|p| p.delay)
                    .ok_or_else(|| missing(0, g))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let plan = plans.get(&intersection).ok_or_else(|| ModelError::Validation {
            entity: format!("intersection `{intersection}`"),
            reason: "no base signal plan".into(),
        })?;
        base_plans.insert(intersection.clone(), plan.clone());
        lanes.push(LaneSurrogate {
            lane: lane.clone(),
            intersection,
            n_levels,
            g_levels,
            utility,
            delay,
        });
    }
    Ok(SurrogateSet {
        schema_version: SCHEMA_VERSION,
        master_seed: 0,
        network_hash: String::new(),
        base_plans: base_plans.into_values().collect(),
        lanes,
    })
}

pub fn eval_utility(s: &SurrogateSet, lane: &LaneId, n: f64, g1: f64) -> Result<f64, SurrogateError> {
    Ok(s.lane(lane)?.utility_at(n, g1))
}

pub fn eval_delay(s: &SurrogateSet, lane: &LaneId, g1: f64) -> Result<f64, SurrogateError> {
    Ok(s.lane(lane)?.delay_at(g1))
}
