//! Text summary and CSV plot data built from pipeline artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use wcu_core::los::CandidateSet;
use wcu_core::sim::SimulationResult;
use wcu_core::surrogate::SurrogateSet;

use crate::pipeline::{
    ArmReport, BaselineArtifact, CompareReport, RunStatus, SweepRow, BASELINE, BASE_RESULT,
    CANDIDATES, COMPARE, SURROGATE, SWEEP,
};
use crate::ArtifactError;

pub const SUMMARY: &str = "summary.txt";
pub const PLOTS: &str = "plots";

fn read_artifact<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, ArtifactError> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|source| ArtifactError::Missing {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| ArtifactError::Corrupt {
        path: path.display().to_string(),
        source,
    })
}

fn read_optional<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>, ArtifactError> {
    if dir.join(name).exists() {
        read_artifact(dir, name).map(Some)
    } else {
        Ok(None)
    }
}

/// Writes `summary.txt` and `plots/*.csv` into `dir` and returns the summary.
pub fn write_report(dir: &Path) -> Result<String> {
    let compare: CompareReport = read_artifact(dir, COMPARE)?;
    let base: SimulationResult = read_artifact(dir, BASE_RESULT)?;
    let candidates: CandidateSet = read_artifact(dir, CANDIDATES)?;
    let baseline: BaselineArtifact = read_artifact(dir, BASELINE)?;
    let surrogate: Option<SurrogateSet> = read_optional(dir, SURROGATE)?;
    let sweep: Option<Vec<SweepRow>> = read_optional(dir, SWEEP)?;

    let summary = render_summary(&compare);
    let path = dir.join(SUMMARY);
    fs::write(&path, &summary).with_context(|| format!("writing {}", path.display()))?;

    let plots = dir.join(PLOTS);
    fs::create_dir_all(&plots).with_context(|| format!("creating {}", plots.display()))?;
    let write_csv = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let path = plots.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    };

    write_csv(
        "base_lane_delay.csv",
        &["lane_id", "delay_s", "vehicles", "candidate"],
        base.lanes
            .iter()
            .map(|l| {
                vec![
                    l.lane.to_string(),
                    l.mean_control_delay.to_string(),
                    l.vehicle_count.to_string(),
                    candidates.base_delay.contains_key(&l.lane).to_string(),
                ]
            })
            .collect(),
    )?;
    write_csv(
        "centrality.csv",
        &["link_id", "score"],
        baseline.scores.scores.iter().map(|(id, s)| vec![id.to_string(), s.to_string()]).collect(),
    )?;
    let mut arm_rows = Vec::new();
    for arm in compare.sumwc.iter().chain([&compare.baseline]) {
        for l in &arm.lanes {
            arm_rows.push(vec![
                arm.name.clone(),
                l.lane.to_string(),
                l.units.to_string(),
                l.delay.to_string(),
                l.los.to_string(),
                l.energy.to_string(),
            ]);
        }
    }
    write_csv(
        "arms.csv",
        &["arm", "lane_id", "units", "delay_s", "los", "energy_wh"],
        arm_rows,
    )?;
    match surrogate {
        Some(s) => {
            let mut rows = Vec::new();
            for l in &s.lanes {
                for (i, n) in l.n_levels.iter().enumerate() {
                    for (j, g) in l.g_levels.iter().enumerate() {
                        rows.push(vec![
                            l.lane.to_string(),
                            n.to_string(),
                            g.to_string(),
                            l.utility[i][j].to_string(),
                            l.delay[j].to_string(),
                        ]);
                    }
                }
            }
            write_csv("surrogate_grid.csv", &["lane_id", "units", "g1", "utility_wh", "delay_s"], rows)?;
        }
        None => remove_if_present(&plots.join("surrogate_grid.csv"))?,
    }
    match sweep {
        Some(rows) => write_csv(
            "budget_sweep.csv",
            &["budget", "sumwc_units", "sumwc_utility_rate", "baseline_units", "baseline_utility_rate"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.budget.to_string(),
                        r.sumwc_units.map_or_else(String::new, |u| u.to_string()),
                        r.sumwc_utility_rate.map_or_else(String::new, |u| u.to_string()),
                        r.baseline_units.to_string(),
                        r.baseline_utility_rate.to_string(),
                    ]
                })
                .collect(),
        )?,
        None => remove_if_present(&plots.join("budget_sweep.csv"))?,
    }
    Ok(summary)
}

fn remove_if_present(path: &Path) -> Result<()> {
    if path.exists() {
        fs::remove_file(path).with_context(|| format!("removing {}", path.display()))?;
    }
    Ok(())
}

fn render_arm(out: &mut String, title: &str, arm: &ArmReport) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "  units allocated: {}  cost ${}", arm.total_units, arm.cost);
    for (lane, n) in &arm.units {
        let _ = writeln!(out, "    {lane:<28} {n:>3}");
    }
    if arm.plans.is_empty() {
        let _ = writeln!(out, "  signal timing: base");
    } else {
        let _ = writeln!(out, "  greens (phase 0 / phase 1, base phase 0):");
        for p in &arm.plans {
            let _ = writeln!(
                out,
                "    {:<12} {:>7.2} / {:>7.2}  ({:.2})",
                p.intersection, p.g1, p.g2, p.base_g1
            );
        }
    }
    if let Some(pred) = arm.predicted_utility {
        let _ = writeln!(out, "  predicted utility: {pred:.1} Wh");
    }
    let _ = writeln!(
        out,
        "  validated utility: {:.1} Wh  ({:.1} Wh/h)",
        arm.utility, arm.utility_rate
    );
    if !arm.lanes.is_empty() {
        let _ = writeln!(out, "  lane LOS:");
        for l in &arm.lanes {
            let _ = writeln!(
                out,
                "    {:<28} {:>3} units  {:>7.2} s  {}",
                l.lane, l.units, l.delay, l.los
            );
        }
    }
    if !arm.intersections.is_empty() {
        let _ = writeln!(out, "  intersection LOS:");
        for i in &arm.intersections {
            let _ = writeln!(out, "    {:<12} {:>7.2} s  {}", i.intersection, i.delay, i.los);
        }
    }
}

pub fn render_summary(r: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "WCU deployment comparison");
    let _ = writeln!(
        out,
        "network {}  intersections {}  approach lanes {}",
        &r.network_hash[..r.network_hash.len().min(12)],
        r.intersections,
        r.approach_lanes
    );
    let _ = writeln!(
        out,
        "seed {}  horizon {} s (warmup {} s)  budget ${}",
        r.seed, r.sim_duration, r.warmup, r.budget
    );
    let _ = writeln!(out, "candidate lanes (LOS C in base run): {}", r.candidates.len());
    let _ = writeln!(out);
    match (&r.status, &r.sumwc) {
        (RunStatus::Complete, Some(arm)) => render_arm(&mut out, "SUM-WC", arm),
        _ => {
            let _ = writeln!(out, "SUM-WC: no candidates, nothing to optimize");
        }
    }
    let _ = writeln!(out);
    render_arm(&mut out, "Betweenness baseline", &r.baseline);
    let _ = writeln!(out);
    match r.utility_ratio {
        Some(ratio) => {
            let _ = writeln!(out, "utility rate ratio (SUM-WC / baseline): {ratio:.3}");
        }
        None => {
            let _ = writeln!(out, "utility rate ratio (SUM-WC / baseline): n/a");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "constraint audit:");
    for a in &r.audit {
        let _ = writeln!(
            out,
            "  {:<9} {:<16} {:>10.3} (limit {:>9.3})  {}",
            a.arm,
            a.constraint,
            a.observed,
            a.limit,
            if a.satisfied { "ok" } else { "VIOLATED" }
        );
    }
    out
}
