//! Edge betweenness and the centrality-ranked baseline allocation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{CentralityWeight, Deployment, LinkId, NodeId, RoadNetwork, Scenario, SignalPlan};

/// Relative tolerance for treating two path lengths as equal.
const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub weight: CentralityWeight,
    /// Content hash of the scored network.
    pub fingerprint: String,
    pub scores: BTreeMap<LinkId, f64>,
}

impl CentralityScores {
    pub fn get(&self, link: &LinkId) -> f64 {
        self.scores.get(link).copied().unwrap_or(0.0)
    }

    /// `link_id,score` rows in link id order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["link_id", "score"]).expect("in-memory write");
        for (id, s) in &self.scores {
            w.write_record([id.as_str(), &s.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reverse order turns the max-heap into a min-heap on distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn close(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= TIE_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Contribution of all shortest paths from `source`, indexed by edge.
fn single_source(n: usize, out: &[Vec<(usize, usize, f64)>], edges: usize, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, v)) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, e, wt) in &out[v] {
            if settled[w] {
                continue;
            }
            let nd = d + wt;
            if dist[w].is_infinite() || (nd < dist[w] && !close(nd, dist[w])) {
                dist[w] = nd;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push((v, e));
                heap.push(Entry(nd, w));
            } else if close(nd, dist[w]) {
                sigma[w] += sigma[v];
                preds[w].push((v, e));
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    let mut score = vec![0.0f64; edges];
    for &w in order.iter().rev() {
        for &(v, e) in &preds[w] {
            let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
            score[e] += c;
            delta[v] += c;
        }
    }
    score
}

/// Edge betweenness of a directed graph with positive weights: for every
/// ordered reachable pair, each shortest path gets weight `1/k` where `k`
/// is the number of shortest paths, and each edge sums the weights of the
/// paths through it.
pub fn edge_betweenness_graph(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut out = vec![Vec::new(); n];
    for (e, &(u, v, w)) in edges.iter().enumerate() {
        out[u].push((v, e, w));
    }
    let partial: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| single_source(n, &out, edges.len(), s))
        .collect();
    let mut total = vec![0.0; edges.len()];
    for p in partial {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}

pub fn edge_betweenness(net: &RoadNetwork, weight: CentralityWeight) -> CentralityScores {
    let index: BTreeMap<&NodeId, usize> = net.nodes().iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
    let edges: Vec<(usize, usize, f64)> = net
        .links()
        .iter()
        .map(|l| {
            let w = match weight {
                CentralityWeight::TravelTime => l.free_flow_time(),
                CentralityWeight::Hops => 1.0,
            };
            (index[&l.from], index[&l.to], w)
        })
        .collect();
    let scores = edge_betweenness_graph(net.nodes().len(), &edges);
    CentralityScores {
        weight,
        fingerprint: net.content_hash(),
        scores: net.links().iter().map(|l| l.id.clone()).zip(scores).collect(),
    }
}

/// Places the whole budget greedily on the highest-scoring approach links
/// (links ending at a signal), lane index 0 of each, up to the per-lane
/// limit. Ties go to the lower link id. Signal plans stay at base.
pub fn baseline_allocate(
    net: &RoadNetwork,
    scores: &CentralityScores,
    scenario: &Scenario,
) -> (Deployment, BTreeMap<NodeId, SignalPlan>) {
    let rounded = |x: f64| (x * 1e9).round() / 1e9;
    let mut ranked: Vec<(f64, &LinkId)> = net
        .links()
        .iter()
        .filter(|l| net.node(&l.to).is_some_and(|n| n.signalized) && !l.lanes.is_empty())
        .map(|l| (rounded(scores.get(&l.id)), &l.id))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));

    let mut dep = Deployment::empty(scenario.wcu.clone());
    let mut remaining = scenario.budget_units();
    for (_, id) in ranked {
        if remaining == 0 {
            break;
        }
        let link = net.link(id).expect("ranked from the network");
        let lane = &link.lanes[0];
        let n = scenario.max_units(lane.usable_length).min(remaining);
        if n > 0 {
            dep.units.insert(lane.id.clone(), n);
            remaining -= n;
        }
    }
    (dep, net.base_plans())
}
