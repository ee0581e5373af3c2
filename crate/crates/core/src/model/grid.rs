//! Synthetic rectangular grid networks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    ArrivalProcess, Demand, Lane, LaneGroup, LaneId, Link, LinkId, ModelError, Node, NodeId,
    RoadNetwork, Route, SignalPlan,
};

/// Parameters of [`generate_grid_network`]. Every field can be overridden
/// from the scenario file's `grid` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridDefaults {
    pub link_length: f64,
    pub free_speed: f64,
    pub lanes_per_link: u32,
    /// Vehicles per hour on every corridor direction.
    pub corridor_rate: f64,
    /// Per-corridor overrides keyed by route name (`row0_eb`, `col2_sb`, ...).
    pub corridor_rates: BTreeMap<String, f64>,
    pub ev_fraction: f64,
    pub cycle: f64,
    pub lost: f64,
    /// Phase-0 green; `None` splits `cycle - lost` evenly.
    pub base_green: Option<f64>,
    pub offset: f64,
    /// Progression offset added per column for eastbound coordination.
    pub offset_step: f64,
    pub arrival_process: ArrivalProcess,
}

impl Default for GridDefaults {
    fn default() -> Self {
        GridDefaults {
            link_length: 300.0,
            free_speed: 13.9,
            lanes_per_link: 2,
            corridor_rate: 400.0,
            corridor_rates: BTreeMap::new(),
            ev_fraction: 1.0,
            cycle: 60.0,
            lost: 3.0,
            base_green: None,
            offset: 0.0,
            offset_step: 0.0,
            arrival_process: ArrivalProcess::Poisson,
        }
    }
}

impl GridDefaults {
    fn rate_for(&self, corridor: &str) -> f64 {
        self.corridor_rates
            .get(corridor)
            .copied()
            .unwrap_or(self.corridor_rate)
    }
}

fn intersection_id(r: usize, c: usize) -> NodeId {
    NodeId(format!("n{r:02}_{c:02}"))
}

fn link_id(from: &NodeId, to: &NodeId) -> LinkId {
    LinkId(format!("{from}-{to}"))
}

/// Generates `rows x cols` signalized intersections on a lattice with one
/// source/sink node beyond each corridor end, two-way links between all
/// neighbours, base signal plans and a through route in both directions of
/// every row and column corridor.
///
/// Row corridors are served by phase 0, column corridors by phase 1.
pub fn generate_grid_network(
    rows: usize,
    cols: usize,
    defaults: &GridDefaults,
) -> Result<RoadNetwork, ModelError> {
    if rows == 0 || cols == 0 {
        return Err(ModelError::Argument(format!(
            "grid needs at least one row and one column, got {rows}x{cols}"
        )));
    }
    if defaults.lanes_per_link == 0 {
        return Err(ModelError::Argument("lanes_per_link must be >= 1".into()));
    }
    let spacing = defaults.link_length;
    let mut nodes = Vec::new();
    // Row 0 is the northern edge.
    let y_of = |r: isize| (rows as isize - 1 - r) as f64 * spacing;
    let x_of = |c: isize| c as f64 * spacing;
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Node {
                id: intersection_id(r, c),
                x: x_of(c as isize),
                y: y_of(r as isize),
                signalized: true,
            });
        }
    }
    let west = |r: usize| NodeId(format!("bw{r:02}"));
    let east = |r: usize| NodeId(format!("be{r:02}"));
    let north = |c: usize| NodeId(format!("bn{c:02}"));
    let south = |c: usize| NodeId(format!("bs{c:02}"));
    for r in 0..rows {
        let y = y_of(r as isize);
        nodes.push(Node { id: west(r), x: x_of(-1), y, signalized: false });
        nodes.push(Node { id: east(r), x: x_of(cols as isize), y, signalized: false });
    }
    for c in 0..cols {
        let x = x_of(c as isize);
        nodes.push(Node { id: north(c), x, y: y_of(-1), signalized: false });
        nodes.push(Node { id: south(c), x, y: y_of(rows as isize), signalized: false });
    }

    let mut links = Vec::new();
    let mut lane_groups = Vec::new();
    let mut add_link = |from: &NodeId, to: &NodeId, phase: Option<u8>| {
        let id = link_id(from, to);
        let lanes: Vec<Lane> = (0..defaults.lanes_per_link)
            .map(|k| Lane {
                id: LaneId(format!("{id}/{k}")),
                link: id.clone(),
                index: k,
                usable_length: spacing,
            })
            .collect();
        if let Some(phase) = phase {
            lane_groups.push(LaneGroup {
                intersection: to.clone(),
                lanes: lanes.iter().map(|l| l.id.clone()).collect(),
                phase,
            });
        }
        links.push(Link {
            id,
            from: from.clone(),
            to: to.clone(),
            length: spacing,
            free_speed: defaults.free_speed,
            lanes,
        });
    };

    let mut routes = Vec::new();
    for r in 0..rows {
        let mut chain = vec![west(r)];
        chain.extend((0..cols).map(|c| intersection_id(r, c)));
        chain.push(east(r));
        for w in chain.windows(2) {
            add_link(&w[0], &w[1], (w[1] != east(r)).then_some(0));
            add_link(&w[1], &w[0], (w[0] != west(r)).then_some(0));
        }
        routes.push(corridor_route(format!("row{r}_eb"), &chain, defaults));
        chain.reverse();
        routes.push(corridor_route(format!("row{r}_wb"), &chain, defaults));
    }
    for c in 0..cols {
        let mut chain = vec![north(c)];
        chain.extend((0..rows).map(|r| intersection_id(r, c)));
        chain.push(south(c));
        for w in chain.windows(2) {
            add_link(&w[0], &w[1], (w[1] != south(c)).then_some(1));
            add_link(&w[1], &w[0], (w[0] != north(c)).then_some(1));
        }
        routes.push(corridor_route(format!("col{c}_sb"), &chain, defaults));
        chain.reverse();
        routes.push(corridor_route(format!("col{c}_nb"), &chain, defaults));
    }

    let g1 = defaults
        .base_green
        .unwrap_or((defaults.cycle - defaults.lost) / 2.0);
    let mut signals = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let base = SignalPlan {
                intersection: intersection_id(r, c),
                cycle: defaults.cycle,
                lost: defaults.lost,
                greens: [0.0, 0.0],
                offset: (defaults.offset + c as f64 * defaults.offset_step)
                    .rem_euclid(defaults.cycle),
            };
            signals.push(base.with_phase1_green(g1));
        }
    }

    RoadNetwork::new(
        nodes,
        links,
        Some(lane_groups),
        signals,
        Demand {
            routes,
            arrival_process: defaults.arrival_process,
        },
    )
}

/// One source, one signalized node and one sink: a single-lane approach of
/// `approach_length` meters followed by a 100 m exit link, served by phase 0
/// of a default 60 s plan.
pub fn single_approach_network(
    approach_length: f64,
    free_speed: f64,
    rate: f64,
    process: ArrivalProcess,
) -> Result<RoadNetwork, ModelError> {
    let node = |id: &str, x: f64, signalized| Node { id: id.into(), x, y: 0.0, signalized };
    let link = |id: &str, from: &str, to: &str, length: f64| Link {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        length,
        free_speed,
        lanes: vec![Lane {
            id: LaneId(format!("{id}/0")),
            link: id.into(),
            index: 0,
            usable_length: length,
        }],
    };
    let base = SignalPlan {
        intersection: "x".into(),
        cycle: 60.0,
        lost: 3.0,
        greens: [28.5, 28.5],
        offset: 0.0,
    };
    RoadNetwork::new(
        vec![
            node("src", -approach_length, false),
            node("x", 0.0, true),
            node("dst", 100.0, false),
        ],
        vec![
            link("in", "src", "x", approach_length),
            link("out", "x", "dst", 100.0),
        ],
        None,
        vec![base],
        Demand {
            routes: vec![Route {
                name: Some("through".into()),
                links: vec!["in".into(), "out".into()],
                arrival_rate: rate,
                ev_fraction: 1.0,
            }],
            arrival_process: process,
        },
    )
}

fn corridor_route(name: String, chain: &[NodeId], defaults: &GridDefaults) -> Route {
    Route {
        arrival_rate: defaults.rate_for(&name),
        name: Some(name),
        links: chain.windows(2).map(|w| link_id(&w[0], &w[1])).collect(),
        ev_fraction: defaults.ev_fraction,
    }
}
