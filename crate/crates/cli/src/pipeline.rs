//! The planning pipeline: base run, candidate selection, sampling, surrogate
//! fit, genetic search, validation, centrality baseline and comparison.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use wcu_core::centrality::{baseline_allocate, edge_betweenness, CentralityScores};
use wcu_core::los::{select_candidates, CandidateSet};
use wcu_core::model::{
    deployment_cost, load_network, Deployment, LaneId, NodeId, RoadNetwork, Scenario, SignalPlan,
    SCHEMA_VERSION,
};
use wcu_core::optimize::{
    run_ga, validate_plan, validate_solution, Solution, ValidatedIntersection, ValidatedLane,
    Validation,
};
use wcu_core::sim::{CsvTrace, SimulationResult, Simulator};
use wcu_core::surrogate::{fit_surrogates, run_sample_batch, sample_grid, SurrogateSet};
use wcu_core::OptimizeError;

use crate::cache::{sha256_hex, stage_key, StageCache};
use crate::UsageError;

pub const BASE_RESULT: &str = "base_result.json";
pub const CANDIDATES: &str = "candidates.json";
pub const SURROGATE: &str = "surrogate.json";
pub const SOLUTION: &str = "solution.json";
pub const BASELINE: &str = "baseline.json";
pub const SWEEP: &str = "sweep.json";
pub const COMPARE: &str = "compare.json";

#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    pub network: PathBuf,
    pub scenario: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub force: bool,
    /// Per-step CSV trace of the base run.
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineArtifact {
    pub scores: CentralityScores,
    pub deployment: Deployment,
    pub validated: Validation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget: u64,
    pub sumwc_units: Option<u64>,
    pub sumwc_utility_rate: Option<f64>,
    pub baseline_units: u64,
    pub baseline_utility_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    NoCandidates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub intersection: NodeId,
    pub base_g1: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    pub units: BTreeMap<LaneId, u32>,
    pub total_units: u64,
    pub cost: u64,
    /// Intersections whose timing differs from base.
    pub plans: Vec<PlanRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_utility: Option<f64>,
    pub utility: f64,
    pub utility_rate: f64,
    pub lanes: Vec<ValidatedLane>,
    pub intersections: Vec<ValidatedIntersection>,
    pub delay_violations: Vec<LaneId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub arm: String,
    pub constraint: String,
    pub observed: f64,
    pub limit: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub status: RunStatus,
    pub network_hash: String,
    pub seed: u64,
    pub sim_duration: f64,
    pub warmup: f64,
    pub budget: u64,
    pub intersections: usize,
    pub approach_lanes: usize,
    pub candidates: Vec<LaneId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sumwc: Option<ArmReport>,
    pub baseline: ArmReport,
    /// SUM-WC over baseline validated utility rate; absent when either arm
    /// is missing or the baseline rate is zero.
    pub utility_ratio: Option<f64>,
    pub audit: Vec<AuditRow>,
}

impl CompareReport {
    pub fn audit_passed(&self) -> bool {
        self.audit.iter().all(|r| r.satisfied)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRun {
    pub name: &'static str,
    pub reused: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub stages: Vec<StageRun>,
    pub report: CompareReport,
    pub summary: String,
}

pub fn load_scenario(path: Option<&Path>, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = match path {
        Some(p) => Scenario::load(p).with_context(|| format!("loading scenario {}", p.display()))?,
        None => Scenario::default(),
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

pub fn run_pipeline(opts: &PipelineOptions) -> Result<PipelineOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| UsageError(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    pool.install(|| run_stages(opts))
}

fn run_stages(opts: &PipelineOptions) -> Result<PipelineOutcome> {
    let net = load_network(&opts.network)
        .with_context(|| format!("loading network {}", opts.network.display()))?;
    let scenario = load_scenario(opts.scenario.as_deref(), opts.seed)?;
    let net_hash = net.content_hash();
    let sc_hash = sha256_hex(scenario.to_json_string().as_bytes());
    let base_plans = net.base_plans();
    let mut cache = StageCache::open(&opts.out, opts.force)?;
    let mut stages = Vec::new();

    let key = stage_key("base", &[&net_hash, &sc_hash]);
    let base = cache.stage(
        "base",
        BASE_RESULT,
        &key,
        || -> Result<SimulationResult> {
            let empty = Deployment::empty(scenario.wcu.clone());
            Ok(Simulator::new(&net).run(&base_plans, &empty, &scenario)?)
        },
    )?;
    stages.push(StageRun { name: "base", reused: base.reused });
    if let Some(path) = &opts.trace {
        write_trace(&net, &base_plans, &scenario, path)?;
    }

    let key = stage_key("candidates", &[&base.hash, &sc_hash]);
    let candidates = cache.stage("candidates", CANDIDATES, &key, || -> Result<CandidateSet> {
        Ok(select_candidates(&base.value, &net, &scenario.los_table))
    })?;
    stages.push(StageRun { name: "candidates", reused: candidates.reused });

    let key = stage_key("baseline", &[&net_hash, &sc_hash]);
    let baseline = cache.stage("baseline", BASELINE, &key, || -> Result<BaselineArtifact> {
        let scores = edge_betweenness(&net, scenario.centrality_weight);
        let (deployment, _) = baseline_allocate(&net, &scores, &scenario);
        let validated = validate_plan(&deployment, &[], &[], &net, &scenario)?;
        Ok(BaselineArtifact { scores, deployment, validated })
    })?;
    stages.push(StageRun { name: "baseline", reused: baseline.reused });

    let mut sumwc = None;
    let mut upstream = vec![net_hash.clone(), sc_hash.clone(), baseline.hash.clone(), candidates.hash.clone()];
    if candidates.value.is_empty() {
        cache.discard("surrogate", SURROGATE)?;
        cache.discard("solution", SOLUTION)?;
        cache.discard("sweep", SWEEP)?;
    } else {
        let key = stage_key("surrogate", &[&net_hash, &sc_hash, &candidates.hash]);
        let surrogate = cache.stage("surrogate", SURROGATE, &key, || -> Result<SurrogateSet> {
            let points = sample_grid(&candidates.value, &net, &base_plans, &scenario)?;
            let filled = run_sample_batch(&points, &net, &base_plans, &scenario)?;
            Ok(fit_surrogates(&filled, &base_plans)?.stamped(&net, scenario.seed))
        })?;
        stages.push(StageRun { name: "surrogate", reused: surrogate.reused });

        let key = stage_key("solution", &[&net_hash, &sc_hash, &surrogate.hash]);
        let solution = cache.stage("solution", SOLUTION, &key, || -> Result<Solution> {
            let mut sol = run_ga(&surrogate.value, &scenario)?;
            sol.validated = Some(validate_solution(&sol, &net, &scenario)?);
            Ok(sol)
        })?;
        stages.push(StageRun { name: "solution", reused: solution.reused });
        upstream.push(solution.hash.clone());

        if scenario.budget_sweep.is_empty() {
            cache.discard("sweep", SWEEP)?;
        } else {
            let key = stage_key("sweep", &[&net_hash, &sc_hash, &surrogate.hash]);
            let sweep = cache.stage("sweep", SWEEP, &key, || {
                budget_sweep(&net, &scenario, &surrogate.value, &baseline.value.scores)
            })?;
            stages.push(StageRun { name: "sweep", reused: sweep.reused });
        }
        sumwc = Some(solution.value);
    }

    let refs: Vec<&str> = upstream.iter().map(String::as_str).collect();
    let key = stage_key("compare", &refs);
    let compare = cache.stage("compare", COMPARE, &key, || -> Result<CompareReport> {
        Ok(build_report(&net, &scenario, &candidates.value, sumwc.as_ref(), &baseline.value))
    })?;
    stages.push(StageRun { name: "compare", reused: compare.reused });

    let summary = crate::report::write_report(cache.dir())?;
    Ok(PipelineOutcome { stages, report: compare.value, summary })
}

fn write_trace(
    net: &RoadNetwork,
    plans: &BTreeMap<NodeId, SignalPlan>,
    scenario: &Scenario,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut sink = CsvTrace::new(BufWriter::new(file));
    let empty = Deployment::empty(scenario.wcu.clone());
    Simulator::new(net).run_traced(plans, &empty, scenario, &mut sink)?;
    sink.finish()?;
    Ok(())
}

fn budget_sweep(
    net: &RoadNetwork,
    scenario: &Scenario,
    surrogate: &SurrogateSet,
    scores: &CentralityScores,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &budget in &scenario.budget_sweep {
        let sc = Scenario { budget, ..scenario.clone() };
        let (units, rate) = match run_ga(surrogate, &sc) {
            Ok(sol) => {
                let v = validate_solution(&sol, net, &sc)?;
                (Some(sol.deployment.total_units()), Some(v.utility_rate))
            }
            Err(OptimizeError::NoFeasibleSolution) => (None, None),
            Err(e) => return Err(e.into()),
        };
        let (dep, _) = baseline_allocate(net, scores, &sc);
        let base = validate_plan(&dep, &[], &[], net, &sc)?;
        rows.push(SweepRow {
            budget,
            sumwc_units: units,
            sumwc_utility_rate: rate,
            baseline_units: dep.total_units(),
            baseline_utility_rate: base.utility_rate,
        });
    }
    Ok(rows)
}

fn arm_report(
    name: &str,
    net: &RoadNetwork,
    deployment: &Deployment,
    plans: &[SignalPlan],
    predicted: Option<f64>,
    v: &Validation,
) -> ArmReport {
    let base = net.base_plans();
    ArmReport {
        name: name.to_string(),
        units: deployment.units.iter().filter(|(_, &n)| n > 0).map(|(l, &n)| (l.clone(), n)).collect(),
        total_units: deployment.total_units(),
        cost: deployment_cost(deployment),
        plans: plans
            .iter()
            .filter(|p| base.get(&p.intersection).is_none_or(|b| b.greens != p.greens))
            .map(|p| PlanRow {
                intersection: p.intersection.clone(),
                base_g1: base.get(&p.intersection).map_or(p.greens[0], |b| b.greens[0]),
                g1: p.greens[0],
                g2: p.greens[1],
            })
            .collect(),
        predicted_utility: predicted,
        utility: v.utility,
        utility_rate: v.utility_rate,
        lanes: v.lanes.clone(),
        intersections: v.intersections.clone(),
        delay_violations: v.violations.clone(),
    }
}

fn audit(
    arm: &str,
    net: &RoadNetwork,
    scenario: &Scenario,
    deployment: &Deployment,
    plans: &[SignalPlan],
) -> Vec<AuditRow> {
    let mut effective = net.base_plans();
    for p in plans {
        effective.insert(p.intersection.clone(), p.clone());
    }
    let min_green = effective
        .values()
        .flat_map(|p| p.greens)
        .fold(f64::INFINITY, f64::min);
    let closure = effective
        .values()
        .map(|p| (p.greens[0] + p.greens[1] + p.lost - p.cycle).abs())
        .fold(0.0, f64::max);
    let coverage = deployment
        .units
        .iter()
        .filter_map(|(id, &n)| {
            net.lane(id)
                .map(|l| f64::from(n) * deployment.spec.unit_length / l.usable_length)
        })
        .fold(0.0, f64::max);
    let cost = deployment_cost(deployment);
    let row = |constraint: &str, observed: f64, limit: f64, satisfied: bool| AuditRow {
        arm: arm.to_string(),
        constraint: constraint.to_string(),
        observed,
        limit,
        satisfied,
    };
    vec![
        row("budget", cost as f64, scenario.budget as f64, cost <= scenario.budget),
        row("min_green", min_green, scenario.min_green, min_green >= scenario.min_green),
        row("cycle_closure", closure, 0.0, closure == 0.0),
        row(
            "lane_coverage",
            coverage,
            scenario.coverage_fraction,
            coverage <= scenario.coverage_fraction + 1e-9,
        ),
    ]
}

fn build_report(
    net: &RoadNetwork,
    scenario: &Scenario,
    candidates: &CandidateSet,
    sumwc: Option<&Solution>,
    baseline: &BaselineArtifact,
) -> CompareReport {
    let base_arm = arm_report(
        "baseline",
        net,
        &baseline.deployment,
        &[],
        None,
        &baseline.validated,
    );
    let mut rows = Vec::new();
    let sumwc_arm = sumwc.map(|sol| {
        let v = sol.validated.as_ref().expect("validated before reporting");
        rows.extend(audit("sumwc", net, scenario, &sol.deployment, &sol.plans));
        let worst = v
            .lanes
            .iter()
            .filter(|l| candidates.lanes.contains(&l.lane))
            .map(|l| l.delay)
            .fold(0.0, f64::max);
        rows.push(AuditRow {
            arm: "sumwc".into(),
            constraint: "candidate_delay".into(),
            observed: worst,
            limit: scenario.delay_limit(),
            satisfied: worst <= scenario.delay_limit(),
        });
        arm_report("sumwc", net, &sol.deployment, &sol.plans, Some(sol.predicted_utility), v)
    });
    rows.extend(audit("baseline", net, scenario, &baseline.deployment, &[]));
    let utility_ratio = sumwc_arm
        .as_ref()
        .filter(|_| base_arm.utility_rate > 0.0)
        .map(|s| s.utility_rate / base_arm.utility_rate);
    CompareReport {
        schema_version: SCHEMA_VERSION,
        status: if sumwc_arm.is_some() { RunStatus::Complete } else { RunStatus::NoCandidates },
        network_hash: net.content_hash(),
        seed: scenario.seed,
        sim_duration: scenario.sim_duration,
        warmup: scenario.warmup,
        budget: scenario.budget,
        intersections: net.signalized_nodes().count(),
        approach_lanes: net.approach_lanes().len(),
        candidates: candidates.lanes.clone(),
        sumwc: sumwc_arm,
        baseline: base_arm,
        utility_ratio,
        audit: rows,
    }
}
