use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use wcu_core::model::RoadNetwork;
use wcu_planner::pipeline::{run_pipeline, CompareReport, PipelineOptions, RunStatus};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).join("scenario.json")
}

fn planner() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wcu-planner"))
}

fn generate(dir: &Path, rows: usize, cols: usize, scenario: &Path) -> PathBuf {
    let out = dir.join(format!("net_{rows}x{cols}.json"));
    let status = planner()
        .args(["generate-network", "--rows", &rows.to_string(), "--cols", &cols.to_string()])
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out
}

#[test]
fn zero_rows_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = planner()
        .args(["generate-network", "--rows", "0", "--cols", "3", "--out"])
        .arg(dir.path().join("n.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least one row"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = planner().args(["pipeline", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generation_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let sc = fixture("grid4x5");
    let a = generate(dir.path(), 4, 5, &sc);
    let bytes = fs::read(&a).unwrap();
    let b = generate(dir.path(), 4, 5, &sc);
    assert_eq!(bytes, fs::read(&b).unwrap());
    let net = RoadNetwork::from_json_slice(&bytes).unwrap();
    assert_eq!(net.signalized_nodes().count(), 20);
}

#[test]
fn missing_network_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = planner()
        .arg("pipeline")
        .arg("--network")
        .arg(dir.path().join("absent.json"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn toy_pipeline_end_to_end_and_cached_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let sc = fixture("toy1x2");
    let net = generate(dir.path(), 1, 2, &sc);
    let opts = PipelineOptions {
        network: net,
        scenario: Some(sc),
        out: dir.path().join("out"),
        jobs: 2,
        ..PipelineOptions::default()
    };
    let first = run_pipeline(&opts).unwrap();
    assert!(first.stages.iter().all(|s| !s.reused));
    let r = &first.report;
    assert_eq!(r.status, RunStatus::Complete);
    assert!(r.audit_passed(), "{:?}", r.audit);
    assert!(r.utility_ratio.unwrap() >= 1.0);
    let sumwc = r.sumwc.as_ref().unwrap();
    assert!(sumwc.total_units <= 5);
    assert!(sumwc.units.keys().all(|l| r.candidates.contains(l)));
    assert_eq!(r.baseline.total_units, 5);

    let compare = fs::read(opts.out.join("compare.json")).unwrap();
    let again = run_pipeline(&opts).unwrap();
    assert!(again.stages.iter().all(|s| s.reused), "{:?}", again.stages);
    assert_eq!(compare, fs::read(opts.out.join("compare.json")).unwrap());
    assert_eq!(first.summary, again.summary);

    let summary = fs::read_to_string(opts.out.join("summary.txt")).unwrap();
    assert!(summary.contains("SUM-WC"));
    assert!(summary.contains("Betweenness baseline"));
    assert!(summary.contains("utility rate ratio"));
    for f in ["base_lane_delay.csv", "centrality.csv", "arms.csv", "surrogate_grid.csv"] {
        assert!(opts.out.join("plots").join(f).exists(), "{f}");
    }

    let forced = run_pipeline(&PipelineOptions { force: true, ..opts.clone() }).unwrap();
    assert!(forced.stages.iter().all(|s| !s.reused));
    assert_eq!(compare, fs::read(opts.out.join("compare.json")).unwrap());

    // The report command reads the same artifacts.
    let out = planner().arg("report").arg("--out").arg(&opts.out).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), summary);
}

#[test]
fn free_flow_network_reports_no_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let sc = fixture("free_flow");
    let net = generate(dir.path(), 1, 1, &sc);
    let out_dir = dir.path().join("out");
    let out = planner()
        .arg("pipeline")
        .arg("--network")
        .arg(&net)
        .arg("--scenario")
        .arg(&sc)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no candidates"));
    let report: CompareReport =
        serde_json::from_slice(&fs::read(out_dir.join("compare.json")).unwrap()).unwrap();
    assert_eq!(report.status, RunStatus::NoCandidates);
    assert!(report.sumwc.is_none());
    assert!(report.utility_ratio.is_none());
    assert!(!out_dir.join("solution.json").exists());
}

#[test]
fn corrupted_artifact_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let sc = fixture("free_flow");
    let net = generate(dir.path(), 1, 1, &sc);
    let out_dir = dir.path().join("out");
    run_pipeline(&PipelineOptions {
        network: net,
        scenario: Some(sc),
        out: out_dir.clone(),
        jobs: 1,
        ..PipelineOptions::default()
    })
    .unwrap();
    fs::write(out_dir.join("compare.json"), "{ not json").unwrap();
    let out = planner().arg("report").arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("compare.json") && err.contains("corrupted"), "{err}");

    let out = planner().arg("report").arg("--out").arg(dir.path().join("nowhere")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact"));
}

#[test]
fn seed_flag_overrides_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let sc = fixture("free_flow");
    let net = generate(dir.path(), 1, 1, &sc);
    let run = |seed: u64, sub: &str| {
        let opts = PipelineOptions {
            network: net.clone(),
            scenario: Some(sc.clone()),
            out: dir.path().join(sub),
            seed: Some(seed),
            jobs: 1,
            ..PipelineOptions::default()
        };
        run_pipeline(&opts).unwrap().report
    };
    let a = run(11, "a");
    assert_eq!(a.seed, 11);
    assert_ne!(a.baseline.utility, run(12, "b").baseline.utility);
}
