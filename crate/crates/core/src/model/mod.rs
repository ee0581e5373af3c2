//! Road network, signal plans, demand and deployment types.
//!
//! A [`RoadNetwork`] is only ever constructed through validation, so every
//! downstream module can rely on the invariants listed on each type: ids
//! resolve, routes are connected paths, every signal-approaching lane sits
//! in exactly one lane group and every signal plan satisfies
//! `g1 + g2 + lost == cycle` exactly.

mod grid;
mod scenario;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use crate::error::ModelError;
pub use grid::{generate_grid_network, single_approach_network, GridDefaults};
pub use scenario::{CentralityWeight, Scenario, SeedPolicy};

/// Current version of the network and scenario file formats.
pub const SCHEMA_VERSION: u32 = 1;

/// Spacing between reference points of queued vehicles, meters.
pub const JAM_SPACING: f64 = 7.5;

/// Greens are held on a 1/1024 s lattice so that `g1 + g2 + lost == cycle`
/// holds exactly in floating point.
const GREEN_QUANTUM: f64 = 1024.0;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Node identifier.
    NodeId
);
id_type!(
    /// Directed link identifier.
    LinkId
);
id_type!(
    /// Lane identifier, unique across the whole network.
    LaneId
);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub signalized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub link: LinkId,
    pub index: u32,
    /// Length available for coil installation, measured upstream from the stop bar.
    pub usable_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    pub free_speed: f64,
    pub lanes: Vec<Lane>,
}

impl Link {
    /// Free-flow traversal time, seconds.
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.free_speed
    }
}

/// Lanes sharing one stop bar and one signal phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneGroup {
    pub intersection: NodeId,
    pub lanes: Vec<LaneId>,
    pub phase: u8,
}

/// Fixed-time two-phase plan. Phase 0 starts at `offset`; lost time is split
/// evenly after each phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalPlan {
    pub intersection: NodeId,
    pub cycle: f64,
    pub lost: f64,
    pub greens: [f64; 2],
    #[serde(default)]
    pub offset: f64,
}

impl SignalPlan {
    /// Plan with `g1` as phase-0 green and the phase-1 green derived from the
    /// fixed cycle.
    pub fn with_phase1_green(&self, g1: f64) -> SignalPlan {
        let g1 = quantize_green(g1);
        SignalPlan {
            greens: [g1, self.cycle - self.lost - g1],
            ..self.clone()
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.greens[0] + self.greens[1] + self.lost == self.cycle
    }
}

pub(crate) fn quantize_green(g: f64) -> f64 {
    (g * GREEN_QUANTUM).round() / GREEN_QUANTUM
}

/// Feasible interval for the phase-0 green under a fixed cycle.
pub fn feasible_green_range(plan: &SignalPlan, min_green: f64) -> Result<(f64, f64), ModelError> {
    let effective = plan.cycle - plan.lost;
    if !(min_green > 0.0) || effective < 2.0 * min_green {
        return Err(ModelError::InfeasiblePlan {
            intersection: plan.intersection.to_string(),
            reason: format!(
                "cycle {} - lost {} leaves {} s, below two minimum greens of {} s",
                plan.cycle, plan.lost, effective, min_green
            ),
        });
    }
    Ok((min_green, effective - min_green))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalProcess {
    #[default]
    Poisson,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub links: Vec<LinkId>,
    /// Vehicles per hour.
    pub arrival_rate: f64,
    pub ev_fraction: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub routes: Vec<Route>,
    pub arrival_process: ArrivalProcess,
}

/// On-disk network layout.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    schema_version: u32,
    nodes: Vec<Node>,
    links: Vec<Link>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lane_groups: Option<Vec<LaneGroup>>,
    #[serde(default)]
    signals: Vec<SignalPlan>,
    #[serde(default)]
    demand: Vec<Route>,
    #[serde(default)]
    arrival_process: ArrivalProcess,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct NetworkIndex {
    nodes: HashMap<NodeId, usize>,
    links: HashMap<LinkId, usize>,
    /// lane id -> (link index, position in `link.lanes`)
    lanes: HashMap<LaneId, (usize, usize)>,
    lane_groups: HashMap<LaneId, usize>,
    signals: HashMap<NodeId, usize>,
}

/// Validated road network.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    links: Vec<Link>,
    lane_groups: Vec<LaneGroup>,
    signals: Vec<SignalPlan>,
    demand: Demand,
    index: NetworkIndex,
}

impl RoadNetwork {
    /// Validates the parts and builds a network. When `lane_groups` is
    /// `None`, one group per signal-approaching link is derived with the
    /// phase taken from the approach heading (east-west is phase 0).
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<Link>,
        lane_groups: Option<Vec<LaneGroup>>,
        signals: Vec<SignalPlan>,
        demand: Demand,
    ) -> Result<Self, ModelError> {
        let mut net = RoadNetwork {
            nodes,
            links,
            lane_groups: Vec::new(),
            signals,
            demand,
            index: NetworkIndex::default(),
        };
        net.index_nodes_and_links()?;
        net.lane_groups = match lane_groups {
            Some(groups) => groups,
            None => net.derive_lane_groups(),
        };
        net.validate_lane_groups()?;
        net.validate_signals()?;
        net.validate_demand()?;
        Ok(net)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        Self::from_json_slice(s.as_bytes())
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, ModelError> {
        let file: NetworkFile = serde_json::from_slice(bytes)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found: file.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        RoadNetwork::new(
            file.nodes,
            file.links,
            file.lane_groups,
            file.signals,
            Demand {
                routes: file.demand,
                arrival_process: file.arrival_process,
            },
        )
    }

    pub fn to_json_string(&self) -> String {
        let file = NetworkFile {
            schema_version: SCHEMA_VERSION,
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            lane_groups: Some(self.lane_groups.clone()),
            signals: self.signals.clone(),
            demand: self.demand.routes.clone(),
            arrival_process: self.demand.arrival_process,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("network serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn lane_groups(&self) -> &[LaneGroup] {
        &self.lane_groups
    }

    pub fn signals(&self) -> &[SignalPlan] {
        &self.signals
    }

    pub fn demand(&self) -> &Demand {
        &self.demand
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.nodes.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.nodes.get(id).copied()
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.index.links.get(id).map(|&i| &self.links[i])
    }

    pub fn link_index(&self, id: &LinkId) -> Option<usize> {
        self.index.links.get(id).copied()
    }

    pub fn lane(&self, id: &LaneId) -> Option<&Lane> {
        self.index
            .lanes
            .get(id)
            .map(|&(l, k)| &self.links[l].lanes[k])
    }

    /// Link carrying the lane.
    pub fn lane_link(&self, id: &LaneId) -> Option<&Link> {
        self.index.lanes.get(id).map(|&(l, _)| &self.links[l])
    }

    pub fn lane_group_of(&self, lane: &LaneId) -> Option<&LaneGroup> {
        self.index.lane_groups.get(lane).map(|&g| &self.lane_groups[g])
    }

    pub fn signal(&self, intersection: &NodeId) -> Option<&SignalPlan> {
        self.index.signals.get(intersection).map(|&i| &self.signals[i])
    }

    /// Base plans keyed by intersection.
    pub fn base_plans(&self) -> BTreeMap<NodeId, SignalPlan> {
        self.signals
            .iter()
            .map(|p| (p.intersection.clone(), p.clone()))
            .collect()
    }

    pub fn signalized_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.signalized)
    }

    /// All lanes whose link terminates at a signalized node, sorted by id.
    pub fn approach_lanes(&self) -> Vec<&Lane> {
        let mut lanes: Vec<&Lane> = self
            .links
            .iter()
            .filter(|l| self.node(&l.to).is_some_and(|n| n.signalized))
            .flat_map(|l| l.lanes.iter())
            .collect();
        lanes.sort_by(|a, b| a.id.cmp(&b.id));
        lanes
    }

    pub fn lane_count(&self) -> usize {
        self.index.lanes.len()
    }

    fn index_nodes_and_links(&mut self) -> Result<(), ModelError> {
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(ModelError::validation(
                    format!("node `{}`", node.id),
                    "coordinates must be finite",
                ));
            }
            if self.index.nodes.insert(node.id.clone(), i).is_some() {
                return Err(ModelError::validation(
                    format!("node `{}`", node.id),
                    "duplicate id",
                ));
            }
        }
        for (i, link) in self.links.iter().enumerate() {
            let entity = || format!("link `{}`", link.id);
            if self.index.links.insert(link.id.clone(), i).is_some() {
                return Err(ModelError::validation(entity(), "duplicate id"));
            }
            for end in [&link.from, &link.to] {
                if !self.index.nodes.contains_key(end) {
                    return Err(ModelError::validation(
                        entity(),
                        format!("unknown node `{end}`"),
                    ));
                }
            }
            if link.from == link.to {
                return Err(ModelError::validation(entity(), "from and to are equal"));
            }
            if !(link.length.is_finite() && link.length >= JAM_SPACING) {
                return Err(ModelError::validation(
                    entity(),
                    format!("length {} below jam spacing {JAM_SPACING} m", link.length),
                ));
            }
            if !(link.free_speed.is_finite() && link.free_speed > 0.0) {
                return Err(ModelError::validation(entity(), "free_speed must be > 0"));
            }
            if link.lanes.is_empty() {
                return Err(ModelError::validation(entity(), "no lanes"));
            }
            let mut seen_index = HashSet::new();
            for (k, lane) in link.lanes.iter().enumerate() {
                let lane_entity = || format!("lane `{}`", lane.id);
                if lane.link != link.id {
                    return Err(ModelError::validation(
                        lane_entity(),
                        format!("declares link `{}` but is listed under `{}`", lane.link, link.id),
                    ));
                }
                if !seen_index.insert(lane.index) {
                    return Err(ModelError::validation(
                        lane_entity(),
                        format!("duplicate index {} on link `{}`", lane.index, link.id),
                    ));
                }
                if !(lane.usable_length > 0.0 && lane.usable_length <= link.length) {
                    return Err(ModelError::validation(
                        lane_entity(),
                        format!(
                            "usable_length {} outside (0, {}]",
                            lane.usable_length, link.length
                        ),
                    ));
                }
                if self.index.lanes.insert(lane.id.clone(), (i, k)).is_some() {
                    return Err(ModelError::validation(lane_entity(), "duplicate id"));
                }
            }
        }
        Ok(())
    }

    fn derive_lane_groups(&self) -> Vec<LaneGroup> {
        self.links
            .iter()
            .filter_map(|link| {
                let to = self.node(&link.to)?;
                if !to.signalized {
                    return None;
                }
                let from = self.node(&link.from)?;
                let phase = if (to.x - from.x).abs() >= (to.y - from.y).abs() {
                    0
                } else {
                    1
                };
                Some(LaneGroup {
                    intersection: to.id.clone(),
                    lanes: link.lanes.iter().map(|l| l.id.clone()).collect(),
                    phase,
                })
            })
            .collect()
    }

    fn validate_lane_groups(&mut self) -> Result<(), ModelError> {
        for (g, group) in self.lane_groups.iter().enumerate() {
            let entity = || format!("lane group at `{}`", group.intersection);
            match self.node(&group.intersection) {
                None => return Err(ModelError::validation(entity(), "unknown intersection")),
                Some(n) if !n.signalized => {
                    return Err(ModelError::validation(entity(), "intersection is not signalized"))
                }
                _ => {}
            }
            if group.phase > 1 {
                return Err(ModelError::validation(
                    entity(),
                    format!("phase {} not in {{0, 1}}", group.phase),
                ));
            }
            if group.lanes.is_empty() {
                return Err(ModelError::validation(entity(), "no lanes"));
            }
            for lane in &group.lanes {
                let link = self.lane_link(lane).ok_or_else(|| {
                    ModelError::validation(entity(), format!("unknown lane `{lane}`"))
                })?;
                if link.to != group.intersection {
                    return Err(ModelError::validation(
                        format!("lane `{lane}`"),
                        format!("does not terminate at `{}`", group.intersection),
                    ));
                }
                if self.index.lane_groups.insert(lane.clone(), g).is_some() {
                    return Err(ModelError::validation(
                        format!("lane `{lane}`"),
                        "belongs to more than one lane group",
                    ));
                }
            }
        }
        for lane in self.approach_lanes() {
            if !self.index.lane_groups.contains_key(&lane.id) {
                return Err(ModelError::validation(
                    format!("lane `{}`", lane.id),
                    "approaches a signal but belongs to no lane group",
                ));
            }
        }
        Ok(())
    }

    fn validate_signals(&mut self) -> Result<(), ModelError> {
        for (i, plan) in self.signals.iter().enumerate() {
            let entity = || format!("signal plan for intersection `{}`", plan.intersection);
            match self.index.nodes.get(&plan.intersection).map(|&n| &self.nodes[n]) {
                None => return Err(ModelError::validation(entity(), "unknown intersection")),
                Some(n) if !n.signalized => {
                    return Err(ModelError::validation(entity(), "node is not signalized"))
                }
                _ => {}
            }
            let finite = [plan.cycle, plan.lost, plan.greens[0], plan.greens[1], plan.offset]
                .iter()
                .all(|v| v.is_finite());
            if !finite || plan.cycle <= 0.0 || plan.lost < 0.0 {
                return Err(ModelError::validation(entity(), "cycle must be > 0 and lost >= 0"));
            }
            if plan.greens.iter().any(|&g| g <= 0.0) {
                return Err(ModelError::validation(entity(), "greens must be > 0"));
            }
            if !plan.is_consistent() {
                return Err(ModelError::validation(
                    entity(),
                    format!(
                        "g1 + g2 + lost = {} + {} + {} does not equal cycle {}",
                        plan.greens[0], plan.greens[1], plan.lost, plan.cycle
                    ),
                ));
            }
            if self.index.signals.insert(plan.intersection.clone(), i).is_some() {
                return Err(ModelError::validation(entity(), "duplicate plan"));
            }
        }
        for node in self.nodes.iter().filter(|n| n.signalized) {
            if !self.index.signals.contains_key(&node.id) {
                return Err(ModelError::validation(
                    format!("intersection `{}`", node.id),
                    "signalized node has no signal plan",
                ));
            }
        }
        Ok(())
    }

    fn validate_demand(&self) -> Result<(), ModelError> {
        for (r, route) in self.demand.routes.iter().enumerate() {
            let entity = || match &route.name {
                Some(name) => format!("route `{name}`"),
                None => format!("route #{r}"),
            };
            if route.links.is_empty() {
                return Err(ModelError::validation(entity(), "empty link sequence"));
            }
            if !(route.arrival_rate.is_finite() && route.arrival_rate >= 0.0) {
                return Err(ModelError::validation(entity(), "arrival_rate must be >= 0"));
            }
            if !(0.0..=1.0).contains(&route.ev_fraction) {
                return Err(ModelError::validation(entity(), "ev_fraction outside [0, 1]"));
            }
            let mut prev: Option<&Link> = None;
            for id in &route.links {
                let link = self
                    .link(id)
                    .ok_or_else(|| ModelError::validation(entity(), format!("unknown link `{id}`")))?;
                if let Some(p) = prev {
                    if p.to != link.from {
                        return Err(ModelError::validation(
                            entity(),
                            format!("disconnected at `{}` -> `{}`", p.id, link.id),
                        ));
                    }
                }
                prev = Some(link);
            }
        }
        Ok(())
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork, ModelError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RoadNetwork::from_json_slice(&bytes)
}

/// Wireless charging unit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WcuSpec {
    /// Meters of lane covered by one unit.
    pub unit_length: f64,
    /// Watts.
    pub rated_power: f64,
    pub efficiency: f64,
    /// Dollars per unit.
    pub unit_cost: u64,
}

impl Default for WcuSpec {
    fn default() -> Self {
        WcuSpec {
            unit_length: 5.0,
            rated_power: 20_000.0,
            efficiency: 0.85,
            unit_cost: 2_000,
        }
    }
}

impl WcuSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.unit_length > 0.0
            && self.rated_power > 0.0
            && self.efficiency > 0.0
            && self.efficiency <= 1.0
            && self.unit_cost > 0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::validation(
                "wcu spec",
                "unit_length, rated_power and unit_cost must be > 0 and efficiency in (0, 1]",
            ))
        }
    }

    /// Power delivered to an aligned EV, watts.
    pub fn delivered_power(&self) -> f64 {
        self.rated_power * self.efficiency
    }
}

/// Unit counts per lane.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub units: BTreeMap<LaneId, u32>,
    pub spec: WcuSpec,
}

impl Deployment {
    pub fn empty(spec: WcuSpec) -> Self {
        Deployment {
            units: BTreeMap::new(),
            spec,
        }
    }

    pub fn units_on(&self, lane: &LaneId) -> u32 {
        self.units.get(lane).copied().unwrap_or(0)
    }

    pub fn total_units(&self) -> u64 {
        self.units.values().map(|&n| u64::from(n)).sum()
    }

    /// Drops zero entries so equal deployments compare equal.
    pub fn normalized(mut self) -> Self {
        self.units.retain(|_, n| *n > 0);
        self
    }

    pub fn validate_against(&self, net: &RoadNetwork) -> Result<(), ModelError> {
        self.spec.validate()?;
        for (id, &n) in &self.units {
            let lane = net
                .lane(id)
                .ok_or_else(|| ModelError::validation("deployment", format!("unknown lane `{id}`")))?;
            if f64::from(n) * self.spec.unit_length > lane.usable_length {
                return Err(ModelError::validation(
                    format!("deployment on lane `{id}`"),
                    format!(
                        "{n} units of {} m exceed usable length {} m",
                        self.spec.unit_length, lane.usable_length
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Total installation cost in dollars.
pub fn deployment_cost(d: &Deployment) -> u64 {
    d.total_units() * d.spec.unit_cost
}
