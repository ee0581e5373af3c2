//! Mixed-integer genetic search over unit counts and phase-0 greens,
//! followed by re-simulation of the chosen plan.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::OptimizeError;
use crate::los::LosGrade;
use crate::model::{
    deployment_cost, feasible_green_range, quantize_green, Deployment, LaneId, NodeId,
    RoadNetwork, Scenario, SignalPlan,
};
use crate::sim::Simulator;
use crate::surrogate::SurrogateSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Generations without improvement before stopping early.
    pub stall_generations: usize,
    /// Penalty per second of delay above the limit, in Wh.
    pub delay_penalty_weight: f64,
    /// Overrides the scenario seed for the search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 100,
            generations: 200,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            stall_generations: 40,
            delay_penalty_weight: 50.0,
            seed: None,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: &str| Err(OptimizeError::Params(m.into()));
        if self.population < 2 {
            return bad("population must be >= 2");
        }
        if self.generations == 0 {
            return bad("generations must be >= 1");
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return bad("tournament_size must be in [1, population]");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate)
        {
            return bad("crossover_rate and mutation_rate must lie in [0, 1]");
        }
        if !(self.delay_penalty_weight >= 0.0 && self.delay_penalty_weight.is_finite()) {
            return bad("delay_penalty_weight must be finite and >= 0");
        }
        Ok(())
    }
}

/// Decision vector. `units[i]` belongs to `s.lanes[i]` and `greens[k]` to
/// the k-th entry of `s.intersections()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub units: Vec<u32>,
    pub greens: Vec<f64>,
}

/// Gene layout and bounds derived from a surrogate set.
struct Problem<'a> {
    s: &'a SurrogateSet,
    intersections: Vec<NodeId>,
    gene_of_lane: Vec<usize>,
    n_max: Vec<u32>,
    bounds: Vec<(f64, f64)>,
    base_greens: Vec<f64>,
    budget_units: u64,
    limit: f64,
    weight: f64,
}

impl<'a> Problem<'a> {
    fn new(s: &'a SurrogateSet, scenario: &Scenario) -> Result<Self, OptimizeError> {
        if s.is_empty() {
            return Err(OptimizeError::EmptySurrogate);
        }
        let intersections = s.intersections();
        let gene_of_lane = s
            .lanes
            .iter()
            .map(|l| intersections.binary_search(&l.intersection).expect("listed"))
            .collect();
        let mut bounds = Vec::with_capacity(intersections.len());
        let mut base_greens = Vec::with_capacity(intersections.len());
        for id in &intersections {
            let lane = s.lanes.iter().find(|l| &l.intersection == id).expect("listed");
            let (lo, hi) = lane.green_bounds();
            bounds.push((lo, hi));
            let base = s.base_plan(id).map_or((lo + hi) / 2.0, |p| p.greens[0]);
            base_greens.push(base.clamp(lo, hi));
        }
        let budget_units = u64::from(scenario.budget_units());
        Ok(Problem {
            s,
            intersections,
            gene_of_lane,
            n_max: s
                .lanes
                .iter()
                .map(|l| (l.n_max() as u64).min(budget_units) as u32)
                .collect(),
            bounds,
            base_greens,
            budget_units,
            limit: scenario.delay_limit(),
            weight: scenario.ga.delay_penalty_weight,
        })
    }

    fn check(&self, c: &Chromosome) -> Result<(), OptimizeError> {
        if c.units.len() != self.s.lanes.len() || c.greens.len() != self.intersections.len() {
            return Err(OptimizeError::Precondition(format!(
                "chromosome has {} unit and {} green genes, expected {} and {}",
                c.units.len(),
                c.greens.len(),
                self.s.lanes.len(),
                self.intersections.len()
            )));
        }
        Ok(())
    }

    fn green_of(&self, c: &Chromosome, lane: usize) -> f64 {
        c.greens[self.gene_of_lane[lane]]
    }

    fn utility(&self, c: &Chromosome, lane: usize, n: u32) -> f64 {
        self.s.lanes[lane].utility_at(f64::from(n), self.green_of(c, lane))
    }

    fn delay(&self, c: &Chromosome, lane: usize) -> f64 {
        self.s.lanes[lane].delay_at(self.green_of(c, lane))
    }

    fn excess_delay(&self, c: &Chromosome) -> f64 {
        (0..self.s.lanes.len())
            .map(|i| (self.delay(c, i) - self.limit).max(0.0))
            .sum()
    }

    fn total_utility(&self, c: &Chromosome) -> f64 {
        (0..self.s.lanes.len()).map(|i| self.utility(c, i, c.units[i])).sum()
    }

    fn fitness(&self, c: &Chromosome) -> f64 {
        self.total_utility(c) - self.weight * self.excess_delay(c)
    }

    fn feasible(&self, c: &Chromosome) -> bool {
        (0..self.s.lanes.len()).all(|i| self.delay(c, i) <= self.limit)
            && c.units.iter().map(|&n| u64::from(n)).sum::<u64>() <= self.budget_units
    }

    fn repair(&self, c: &mut Chromosome) {
        let mut total: u64 = c.units.iter().map(|&n| u64::from(n)).sum();
        while total > self.budget_units {
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..c.units.len() {
                let n = c.units[i];
                if n == 0 {
                    continue;
                }
                let loss = self.utility(c, i, n) - self.utility(c, i, n - 1);
                if pick.is_none_or(|(_, best)| loss < best) {
                    pick = Some((i, loss));
                }
            }
            let (i, _) = pick.expect("over budget implies a non-zero gene");
            c.units[i] -= 1;
            total -= 1;
        }
    }

    fn clamp(&self, c: &mut Chromosome) {
        for (n, &max) in c.units.iter_mut().zip(&self.n_max) {
            *n = (*n).min(max);
        }
        for (g, &(lo, hi)) in c.greens.iter_mut().zip(&self.bounds) {
            *g = quantize_green(g.clamp(lo, hi)).clamp(lo, hi);
        }
    }

    /// Adds units one at a time to the lane with the largest marginal gain.
    fn greedy(&self, greens: Vec<f64>) -> Chromosome {
        let mut c = Chromosome { units: vec![0; self.s.lanes.len()], greens };
        let mut total = 0u64;
        while total < self.budget_units {
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..c.units.len() {
                let n = c.units[i];
                if n >= self.n_max[i] {
                    continue;
                }
                let gain = self.utility(&c, i, n + 1) - self.utility(&c, i, n);
                if gain > 0.0 && pick.is_none_or(|(_, best)| gain > best) {
                    pick = Some((i, gain));
                }
            }
            match pick {
                Some((i, _)) => {
                    c.units[i] += 1;
                    total += 1;
                }
                None => break,
            }
        }
        c
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Chromosome {
        let mut c = Chromosome {
            units: self.n_max.iter().map(|&m| rng.random_range(0..=m)).collect(),
            greens: self
                .bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                .collect(),
        };
        self.clamp(&mut c);
        self.repair(&mut c);
        c
    }

    fn crossover(&self, a: &Chromosome, b: &Chromosome, rng: &mut ChaCha8Rng) -> (Chromosome, Chromosome) {
        let (mut x, mut y) = (a.clone(), b.clone());
        for i in 0..x.units.len() {
            if rng.random_bool(0.5) {
                std::mem::swap(&mut x.units[i], &mut y.units[i]);
            }
        }
        for k in 0..x.greens.len() {
            let (p, q) = (a.greens[k], b.greens[k]);
            let d = (p - q).abs();
            let lo = p.min(q) - 0.5 * d;
            let hi = p.max(q) + 0.5 * d;
            if hi > lo {
                x.greens[k] = rng.random_range(lo..=hi);
                y.greens[k] = rng.random_range(lo..=hi);
            }
        }
        (x, y)
    }

    fn mutate(&self, c: &mut Chromosome, rate: f64, rng: &mut ChaCha8Rng) {
        for i in 0..c.units.len() {
            if rng.random_bool(rate) {
                c.units[i] = if rng.random_bool(0.5) {
                    c.units[i].saturating_add(1)
                } else {
                    c.units[i].saturating_sub(1)
                };
            }
        }
        for k in 0..c.greens.len() {
            let (lo, hi) = self.bounds[k];
            if hi > lo && rng.random_bool(rate) {
                let normal = Normal::new(0.0, 0.1 * (hi - lo)).expect("positive sigma");
                c.greens[k] += normal.sample(rng);
            }
        }
    }

    /// Coordinate pattern search on the green genes with the units fixed.
    /// Steps halve from a quarter of the range down to the green lattice;
    /// a move is kept only if it stays feasible and strictly raises utility.
    fn polish_greens(&self, c: &mut Chromosome) {
        let mut value = self.total_utility(c);
        for k in 0..c.greens.len() {
            let (lo, hi) = self.bounds[k];
            let mut step = (hi - lo) / 4.0;
            while step >= 1.0 / 1024.0 {
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let mut trial = c.clone();
                    trial.greens[k] = c.greens[k] + dir * step;
                    self.clamp(&mut trial);
                    if trial.greens[k] == c.greens[k] || !self.feasible(&trial) {
                        continue;
                    }
                    let v = self.total_utility(&trial);
                    if v > value {
                        *c = trial;
                        value = v;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    step /= 2.0;
                }
            }
        }
    }

    /// Green genes only affect utility through lanes carrying units, so an
    /// intersection without units goes back to its base green when that
    /// keeps its lanes within the delay limit.
    fn restore_idle_greens(&self, c: &mut Chromosome) {
        for k in 0..c.greens.len() {
            let lanes: Vec<usize> = (0..c.units.len()).filter(|&i| self.gene_of_lane[i] == k).collect();
            if lanes.iter().any(|&i| c.units[i] > 0) {
                continue;
            }
            let mut trial = c.clone();
            trial.greens[k] = self.base_greens[k];
            if lanes.iter().all(|&i| self.delay(&trial, i) <= self.limit) {
                *c = trial;
            }
        }
    }

    fn plans(&self, c: &Chromosome) -> Vec<SignalPlan> {
        self.intersections
            .iter()
            .zip(&c.greens)
            .filter_map(|(id, &g)| self.s.base_plan(id).map(|p| p.with_phase1_green(g)))
            .collect()
    }
}

/// Predicted utility minus the weighted delay excess over the limit.
pub fn fitness(c: &Chromosome, s: &SurrogateSet, scenario: &Scenario) -> Result<f64, OptimizeError> {
    let p = Problem::new(s, scenario)?;
    p.check(c)?;
    Ok(p.fitness(c))
}

/// Removes units, one at a time from the lane losing the least predicted
/// utility (ties to the lowest lane id), until the budget holds.
pub fn repair_budget(c: &mut Chromosome, s: &SurrogateSet, scenario: &Scenario) -> Result<(), OptimizeError> {
    let p = Problem::new(s, scenario)?;
    p.check(c)?;
    p.repair(c);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanePrediction {
    pub lane: LaneId,
    pub intersection: NodeId,
    pub units: u32,
    pub utility: f64,
    pub delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatedLane {
    pub lane: LaneId,
    pub units: u32,
    pub delay: f64,
    pub los: LosGrade,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatedIntersection {
    pub intersection: NodeId,
    pub delay: f64,
    pub los: LosGrade,
}

/// Outcome of re-simulating a plan with the full microsimulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub seed: u64,
    /// Wh over the metered window.
    pub utility: f64,
    /// Wh per hour.
    pub utility_rate: f64,
    pub cost: u64,
    pub lanes: Vec<ValidatedLane>,
    pub intersections: Vec<ValidatedIntersection>,
    /// Reported lanes whose delay exceeds the limit.
    pub violations: Vec<LaneId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub deployment: Deployment,
    /// Plans of the optimized intersections; all others keep their base plan.
    pub plans: Vec<SignalPlan>,
    pub chromosome: Chromosome,
    pub predicted_utility: f64,
    pub lanes: Vec<LanePrediction>,
    pub feasible: bool,
    pub generations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validated: Option<Validation>,
}

/// Runs the genetic search. The best delay-feasible individual seen in any
/// generation is returned.
pub fn run_ga(s: &SurrogateSet, scenario: &Scenario) -> Result<Solution, OptimizeError> {
    let params = &scenario.ga;
    params.validate()?;
    let p = Problem::new(s, scenario)?;
    let seed = params.seed.unwrap_or(scenario.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pop = Vec::with_capacity(params.population);
    pop.push(Chromosome { units: vec![0; s.lanes.len()], greens: p.base_greens.clone() });
    pop.push(p.greedy(p.base_greens.clone()));
    while pop.len() < params.population {
        pop.push(p.random(&mut rng));
    }
    pop.truncate(params.population);

    let evaluate = |pop: &[Chromosome]| -> Vec<(f64, bool)> {
        pop.par_iter().map(|c| (p.fitness(c), p.feasible(c))).collect()
    };
    let mut scores = evaluate(&pop);
    let mut best: Option<(f64, Chromosome)> = None;
    fn track(pop: &[Chromosome], scores: &[(f64, bool)], best: &mut Option<(f64, Chromosome)>) {
        for (c, &(f, ok)) in pop.iter().zip(scores) {
            if ok && best.as_ref().is_none_or(|(b, _)| f > *b) {
                *best = Some((f, c.clone()));
            }
        }
    }
    track(&pop, &scores, &mut best);

    let top = |scores: &[(f64, bool)]| {
        (0..scores.len())
            .max_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0).then(b.cmp(&a)))
            .expect("non-empty population")
    };
    let mut record = scores[top(&scores)].0;
    let mut stall = 0;
    let mut generations = 0;
    for _ in 0..params.generations {
        generations += 1;
        let elite = top(&scores);
        let mut next = vec![pop[elite].clone()];
        let pick = |rng: &mut ChaCha8Rng| {
            let mut winner = rng.random_range(0..pop.len());
            for _ in 1..params.tournament_size {
                let j = rng.random_range(0..pop.len());
                if scores[j].0 > scores[winner].0 {
                    winner = j;
                }
            }
            winner
        };
        while next.len() < params.population {
            let a = &pop[pick(&mut rng)];
            let b = &pop[pick(&mut rng)];
            let (mut x, mut y) = if rng.random_bool(params.crossover_rate) {
                p.crossover(a, b, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            for child in [&mut x, &mut y] {
                p.mutate(child, params.mutation_rate, &mut rng);
                p.clamp(child);
                p.repair(child);
            }
            next.push(x);
            if next.len() < params.population {
                next.push(y);
            }
        }
        pop = next;
        scores = evaluate(&pop);
        track(&pop, &scores, &mut best);
        let gen_best = scores[top(&scores)].0;
        if gen_best > record + 1e-9 * record.abs().max(1.0) {
            record = gen_best;
            stall = 0;
        } else {
            stall += 1;
            if stall >= params.stall_generations {
                break;
            }
        }
    }
    log::info!("genetic search stopped after {generations} generations");

    let (_, mut c) = best.ok_or(OptimizeError::NoFeasibleSolution)?;
    p.polish_greens(&mut c);
    p.restore_idle_greens(&mut c);
    let mut deployment = Deployment::empty(scenario.wcu.clone());
    let lanes: Vec<LanePrediction> = s
        .lanes
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if c.units[i] > 0 {
                deployment.units.insert(l.lane.clone(), c.units[i]);
            }
            LanePrediction {
                lane: l.lane.clone(),
                intersection: l.intersection.clone(),
                units: c.units[i],
                utility: p.utility(&c, i, c.units[i]),
                delay: p.delay(&c, i),
            }
        })
        .collect();
    Ok(Solution {
        deployment,
        plans: p.plans(&c),
        predicted_utility: p.total_utility(&c),
        lanes,
        feasible: true,
        generations,
        chromosome: c,
        validated: None,
    })
}

/// Re-simulates a deployment under the given plan overrides and reports
/// delay and energy for `report_lanes` plus every deployed lane.
pub fn validate_plan(
    deployment: &Deployment,
    plans: &[SignalPlan],
    report_lanes: &[LaneId],
    net: &RoadNetwork,
    scenario: &Scenario,
) -> Result<Validation, OptimizeError> {
    let mut all_plans = net.base_plans();
    for plan in plans {
        let base = all_plans.get(&plan.intersection).ok_or_else(|| {
            OptimizeError::Precondition(format!("no signal at intersection `{}`", plan.intersection))
        })?;
        if plan.cycle != base.cycle || plan.lost != base.lost || !plan.is_consistent() {
            return Err(OptimizeError::Precondition(format!(
                "plan for `{}` changes cycle or lost time or does not sum to the cycle",
                plan.intersection
            )));
        }
        let (lo, hi) = feasible_green_range(plan, scenario.min_green)?;
        for (phase, &g) in plan.greens.iter().enumerate() {
            if g < lo || g > hi {
                return Err(OptimizeError::Precondition(format!(
                    "phase {phase} green {g} s at `{}` is outside [{lo}, {hi}]",
                    plan.intersection
                )));
            }
        }
        all_plans.insert(plan.intersection.clone(), plan.clone());
    }
    deployment.validate_against(net)?;
    let cost = deployment_cost(deployment);
    if cost > scenario.budget {
        return Err(OptimizeError::Precondition(format!(
            "deployment costs {cost}, above the budget of {}",
            scenario.budget
        )));
    }

    let result = Simulator::new(net).run(&all_plans, deployment, scenario)?;
    let lane_ids: BTreeSet<&LaneId> = report_lanes.iter().chain(deployment.units.keys()).collect();
    let limit = scenario.delay_limit();
    let mut lanes = Vec::new();
    let mut intersections: BTreeMap<NodeId, ValidatedIntersection> = BTreeMap::new();
    let mut violations = Vec::new();
    for id in lane_ids {
        let m = result
            .lane(id)
            .ok_or_else(|| OptimizeError::Precondition(format!("unknown lane `{id}`")))?;
        if m.mean_control_delay > limit {
            violations.push(id.clone());
        }
        lanes.push(ValidatedLane {
            lane: id.clone(),
            units: deployment.units_on(id),
            delay: m.mean_control_delay,
            los: scenario.los_table.classify(m.mean_control_delay),
            energy: m.energy,
        });
        if let Some(group) = net.lane_group_of(id) {
            if let Some(im) = result.intersection(&group.intersection) {
                intersections.entry(group.intersection.clone()).or_insert(ValidatedIntersection {
                    intersection: group.intersection.clone(),
                    delay: im.mean_control_delay,
                    los: scenario.los_table.classify(im.mean_control_delay),
                });
            }
        }
    }
    Ok(Validation {
        seed: scenario.seed,
        utility: result.total_utility,
        utility_rate: result.utility_rate,
        cost,
        lanes,
        intersections: intersections.into_values().collect(),
        violations,
    })
}

/// Re-simulates a GA solution; the candidate lanes are always reported.
pub fn validate_solution(
    sol: &Solution,
    net: &RoadNetwork,
    scenario: &Scenario,
) -> Result<Validation, OptimizeError> {
    if !sol.feasible {
        return Err(OptimizeError::Precondition("solution is not marked feasible".into()));
    }
    let lanes: Vec<LaneId> = sol.lanes.iter().map(|l| l.lane.clone()).collect();
    validate_plan(&sol.deployment, &sol.plans, &lanes, net, scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SCHEMA_VERSION;
    use crate::surrogate::LaneSurrogate;
    use proptest::prelude::*;

    fn plan(id: &str) -> SignalPlan {
        SignalPlan {
            intersection: id.into(),
            cycle: 60.0,
            lost: 3.0,
            greens: [28.5, 28.5],
            offset: 0.0,
        }
    }

    /// Utility rising with n and peaking at some green; delay rising with g.
    fn lane(id: &str, at: &str, scale: f64, peak: f64, delay: [f64; 3]) -> LaneSurrogate {
        let g_levels = vec![15.0, 28.5, 42.0];
        let n_levels = vec![0, 3, 5];
        let utility = n_levels
            .iter()
            .map(|&n| {
                g_levels
                    .iter()
                    .map(|&g: &f64| scale * f64::from(n).sqrt() * (60.0 - (g - peak).abs()))
                    .collect()
            })
            .collect();
        LaneSurrogate {
            lane: id.into(),
            intersection: at.into(),
            n_levels,
            g_levels,
            utility,
            delay: delay.to_vec(),
        }
    }

    fn set(lanes: Vec<LaneSurrogate>) -> SurrogateSet {
        let mut plans: Vec<SignalPlan> = lanes.iter().map(|l| plan(l.intersection.as_str())).collect();
        plans.sort_by(|a, b| a.intersection.cmp(&b.intersection));
        plans.dedup();
        SurrogateSet {
            schema_version: SCHEMA_VERSION,
            master_seed: 1,
            network_hash: String::new(),
            base_plans: plans,
            lanes,
        }
    }

    fn flat(id: &str, at: &str, per_unit: f64, delay: f64) -> LaneSurrogate {
        LaneSurrogate {
            lane: id.into(),
            intersection: at.into(),
            n_levels: vec![0, 5],
            g_levels: vec![15.0, 42.0],
            utility: vec![vec![0.0, 0.0], vec![5.0 * per_unit, 5.0 * per_unit]],
            delay: vec![delay, delay],
        }
    }

    #[test]
    fn fitness_examples() {
        let sc = Scenario::default();
        let s = set(vec![flat("a", "x", 20.0, 30.0)]);
        let c = Chromosome { units: vec![5], greens: vec![20.0] };
        assert!((fitness(&c, &s, &sc).unwrap() - 100.0).abs() < 1e-9);
        let s = set(vec![flat("a", "x", 20.0, 38.0)]);
        let c0 = Chromosome { units: vec![0], greens: vec![20.0] };
        assert!((fitness(&c0, &s, &sc).unwrap() + 150.0).abs() < 1e-9);
        assert!((fitness(&c, &s, &sc).unwrap() + 50.0).abs() < 1e-9);
    }

    #[test]
    fn repair_removes_cheapest_unit() {
        let sc = Scenario::default();
        let s = set(vec![flat("a", "x", 30.0, 10.0), flat("b", "x", 10.0, 10.0)]);
        let mut c = Chromosome { units: vec![3, 3], greens: vec![28.5] };
        repair_budget(&mut c, &s, &sc).unwrap();
        assert_eq!(c.units, vec![3, 2]);
        let mut c = Chromosome { units: vec![2, 2], greens: vec![28.5] };
        repair_budget(&mut c, &s, &sc).unwrap();
        assert_eq!(c.units, vec![2, 2]);
    }

    #[test]
    fn repair_ties_go_to_lowest_lane_id() {
        let sc = Scenario { budget: 6_000, ..Scenario::default() };
        let s = set(vec![flat("a", "x", 10.0, 10.0), flat("b", "x", 10.0, 10.0)]);
        let mut c = Chromosome { units: vec![2, 2], greens: vec![28.5] };
        repair_budget(&mut c, &s, &sc).unwrap();
        assert_eq!(c.units, vec![1, 2]);
    }

    #[test]
    fn shape_mismatch_is_precondition() {
        let s = set(vec![flat("a", "x", 10.0, 10.0)]);
        let c = Chromosome { units: vec![1, 1], greens: vec![28.5] };
        assert!(matches!(
            fitness(&c, &s, &Scenario::default()),
            Err(OptimizeError::Precondition(_))
        ));
    }

    #[test]
    fn empty_surrogate_is_rejected() {
        assert!(matches!(
            run_ga(&set(vec![]), &Scenario::default()),
            Err(OptimizeError::EmptySurrogate)
        ));
    }

    #[test]
    fn all_infeasible_reports_no_solution() {
        let s = set(vec![flat("a", "x", 10.0, 50.0)]);
        let sc = Scenario {
            ga: GaParams { population: 10, generations: 5, ..GaParams::default() },
            ..Scenario::default()
        };
        assert!(matches!(run_ga(&s, &sc), Err(OptimizeError::NoFeasibleSolution)));
    }

    #[test]
    fn two_lanes_split_three_and_two() {
        // The first lane saturates after three units.
        let mut a = flat("a", "x", 0.0, 20.0);
        a.n_levels = vec![0, 3, 5];
        a.utility = vec![vec![0.0; 2], vec![90.0; 2], vec![95.0; 2]];
        let b = flat("b", "y", 20.0, 20.0);
        let sc = Scenario::default();
        let sol = run_ga(&set(vec![a, b]), &sc).unwrap();
        assert_eq!(sol.chromosome.units, vec![3, 2]);
        assert_eq!(sol.deployment.total_units(), 5);
        assert!(deployment_cost(&sol.deployment) <= sc.budget);
        assert!((sol.predicted_utility - 130.0).abs() < 1e-9);
    }

    fn brute_force(s: &SurrogateSet, sc: &Scenario, step: f64) -> f64 {
        let p = Problem::new(s, sc).unwrap();
        let greens: Vec<f64> = {
            let mut v = Vec::new();
            let mut g = 15.0;
            while g <= 42.0 + 1e-9 {
                v.push(g);
                g += step;
            }
            v
        };
        let mut best = f64::NEG_INFINITY;
        for &gx in &greens {
            for &gy in &greens {
                for na in 0..=p.n_max[0] {
                    for nb in 0..=p.n_max[1] {
                        for nc in 0..=p.n_max[2] {
                            let c = Chromosome { units: vec![na, nb, nc], greens: vec![gx, gy] };
                            if p.feasible(&c) {
                                best = best.max(p.fitness(&c));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn ga_close_to_exhaustive_search() {
        let s = set(vec![
            lane("a", "x", 4.0, 20.0, [22.0, 30.0, 45.0]),
            lane("b", "x", 3.0, 40.0, [18.0, 26.0, 33.0]),
            lane("c", "y", 5.0, 30.0, [25.0, 31.0, 36.0]),
        ]);
        let sc = Scenario { budget: 8_000, ..Scenario::default() };
        let sol = run_ga(&s, &sc).unwrap();
        let exact = brute_force(&s, &sc, 0.25);
        assert!(sol.predicted_utility >= 0.98 * exact, "{} vs {exact}", sol.predicted_utility);
        for l in &sol.lanes {
            assert!(l.delay <= sc.delay_limit());
        }
        assert!(sol.deployment.total_units() <= 4);
    }

    #[test]
    fn single_lane_matches_enumeration() {
        let s = set(vec![lane("a", "x", 4.0, 25.0, [20.0, 30.0, 40.0])]);
        let sc = Scenario::default();
        let sol = run_ga(&s, &sc).unwrap();
        let p = Problem::new(&s, &sc).unwrap();
        let mut best = f64::NEG_INFINITY;
        for n in 0..=5 {
            for k in 0..=(27 * 64) {
                let c = Chromosome { units: vec![n], greens: vec![15.0 + k as f64 / 64.0] };
                if p.feasible(&c) {
                    best = best.max(p.fitness(&c));
                }
            }
        }
        assert!(sol.predicted_utility >= 0.98 * best);
        assert!(sol.predicted_utility <= best + 1e-6);
    }

    #[test]
    fn search_is_deterministic() {
        let s = set(vec![
            lane("a", "x", 4.0, 20.0, [22.0, 30.0, 45.0]),
            lane("b", "y", 3.0, 40.0, [18.0, 26.0, 33.0]),
        ]);
        let sc = Scenario::default();
        assert_eq!(run_ga(&s, &sc).unwrap(), run_ga(&s, &sc).unwrap());
    }

    #[test]
    fn params_validation() {
        assert!(GaParams::default().validate().is_ok());
        let bad = GaParams { population: 1, ..GaParams::default() };
        assert!(matches!(bad.validate(), Err(OptimizeError::Params(_))));
        let bad = GaParams { mutation_rate: 1.5, ..GaParams::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn repair_respects_budget(units in proptest::collection::vec(0u32..=5, 3), budget in 0u64..20_000) {
            let s = set(vec![
                lane("a", "x", 4.0, 20.0, [22.0, 30.0, 45.0]),
                lane("b", "x", 3.0, 40.0, [18.0, 26.0, 33.0]),
                lane("c", "y", 5.0, 30.0, [25.0, 31.0, 36.0]),
            ]);
            let sc = Scenario { budget, ..Scenario::default() };
            let mut c = Chromosome { units: units.clone(), greens: vec![28.5, 28.5] };
            repair_budget(&mut c, &s, &sc).unwrap();
            let total: u64 = c.units.iter().map(|&n| u64::from(n)).sum();
            prop_assert!(total * 2_000 <= budget || total == 0);
            for (after, before) in c.units.iter().zip(&units) {
                prop_assert!(after <= before);
            }
        }
    }
}
