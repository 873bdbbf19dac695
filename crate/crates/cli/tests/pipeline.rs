use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tetherplan_cli::{load_scenario, run, CliError, ErrorCategory, RunOptions};
use tetherplan_core::planner::RewardMode;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out_dir: dir.to_path_buf(), ..Default::default() }
}

#[test]
fn indoor_scene_ends_with_two_contacts() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_scenario(corpus("indoor_manipulability.json")).unwrap();
    let out = run(&s, &opts(dir.path())).unwrap();
    assert_eq!(out.plan.final_tether().contact_count(), 2);
    let trace = fs::read_to_string(dir.path().join("tether_trace.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(trace.lines().last().unwrap()).unwrap();
    // the reel plus two contacts
    assert_eq!(last["contacts"].as_array().unwrap().len(), 3);
    assert_eq!(trace.lines().count(), out.plan.tether.len());
}

#[test]
fn empty_room_flies_straight() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_scenario(corpus("empty_room.json")).unwrap();
    let out = run(&s, &opts(dir.path())).unwrap();
    let p = &out.plan;
    assert_eq!(p.path.len(), 11);
    assert!(p.path.iter().all(|c| c.y == 2 && c.z == 8));
    assert!(p.tether.iter().all(|t| t.contact_count() == 0));
    assert!(p.profile.states.iter().all(|r| r[3] == 0.0), "no turns on a straight path");
}

#[test]
fn risk_report_ends_at_exact_risk() {
    for name in ["indoor_manipulability.json", "empty_room.json", "indoor_passability.json"] {
        let dir = tempfile::tempdir().unwrap();
        let s = load_scenario(corpus(name)).unwrap();
        let out = run(&s, &opts(dir.path())).unwrap();
        let csv = fs::read_to_string(dir.path().join("risk_report.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "state,i,j,k,obstacle_distance,visibility,action_length,turn,tether_length,contact_count,survival,risk"
        );
        let rows: Vec<Vec<f64>> =
            lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), out.plan.path.len());
        let plan: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last[11], plan["exact_risk"].as_f64().unwrap(), "{name}");
        assert_eq!(last[11], out.plan.exact_risk);
        assert!(rows.windows(2).all(|w| w[1][11] >= w[0][11]));
    }
}

#[test]
fn geometry_records() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_scenario(corpus("indoor_manipulability.json")).unwrap();
    let out = run(&s, &opts(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("geometry.txt")).unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for line in text.lines() {
        let mut parts = line.split(' ');
        let kind = parts.next().unwrap();
        let nums: Vec<f64> = parts.map(|v| v.parse().unwrap()).collect();
        let want = if kind == "tether_segment" { 6 } else { 3 };
        assert_eq!(nums.len(), want, "{line}");
        *counts.entry(kind).or_insert(0) += 1;
    }
    assert_eq!(counts["obstacle"], s.grid.occupied_cells().count());
    assert_eq!(counts["inflated"], out.flight_grid.occupied_cells().count() - s.grid.occupied_cells().count());
    assert_eq!(counts["waypoint"], out.plan.path.len());
    assert_eq!(counts["contact"], 2);
    assert_eq!(counts["tether_segment"], 3);
}

#[test]
fn overrides_reach_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_scenario(corpus("indoor_passability.json")).unwrap();
    let o = RunOptions {
        out_dir: dir.path().to_path_buf(),
        rays: Some(16),
        no_inflate: true,
        reward_mode: Some(RewardMode::Integrated),
        timestamps: true,
        seed: Some(3),
    };
    let out = run(&s, &o).unwrap();
    assert_eq!(out.flight_grid.occupied_cells().count(), s.grid.occupied_cells().count());
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["effective"]["isovist_rays"], 16);
    assert_eq!(plan["effective"]["inflation_radius"], 0.0);
    assert_eq!(plan["effective"]["reward_mode"], "integrated");
    assert!(plan["generated_at_unix"].as_u64().unwrap() > 1_600_000_000);
    // the scenario echo keeps the values from the file
    assert_eq!(plan["scenario"]["inflation_radius"], 0.3);

    let plain = tempfile::tempdir().unwrap();
    run(&s, &opts(plain.path())).unwrap();
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(plain.path().join("plan.json")).unwrap()).unwrap();
    assert!(plan.get("generated_at_unix").is_none());
}

#[test]
fn forbidden_contacts_mean_no_path() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_scenario(corpus("outdoor_no_contacts.json")).unwrap();
    let err = run(&s, &opts(dir.path())).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::NoPath);
    assert!(err.to_string().contains("no contact-free path"), "{err}");
    assert!(!dir.path().join("plan.json").exists());

    // the same goal is reachable once the tether may wrap
    let mut s = s;
    s.spec.allow_contacts = true;
    let out = run(&s, &opts(dir.path())).unwrap();
    assert!(out.plan.final_tether().contact_count() > 0);
}

#[test]
fn occupied_start_after_inflation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = load_scenario(corpus("indoor_manipulability.json")).unwrap();
    s.spec.start = [5, 2, 11];
    let err = run(&s, &opts(dir.path())).unwrap_err();
    assert!(matches!(&err, CliError::Invalid { field, .. } if field == "start"));
    assert_eq!(err.category().exit_code(), 1);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tetherplan"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = binary()
        .args(["run", corpus("empty_room.json").to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("geometry.txt").exists());

    let no_path = binary()
        .args(["run", corpus("outdoor_no_contacts.json").to_str().unwrap(), "--out"])
        .arg(dir.path().join("outdoor"))
        .output()
        .unwrap();
    assert_eq!(no_path.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&no_path.stderr).unwrap();
    assert_eq!(err["category"], "no_path");
    assert!(err["message"].as_str().unwrap().contains("no contact-free path"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"schema\": \"tetherplan/scenario@1\", }").unwrap();
    let config = binary().args(["run", bad.to_str().unwrap(), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(config.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&config.stderr).unwrap();
    assert_eq!(err["category"], "config");
    assert!(err["message"].as_str().unwrap().contains(":1:"));

    let flags = binary()
        .args(["run", corpus("indoor_passability.json").to_str().unwrap(), "--out"])
        .arg(dir.path().join("flags"))
        .args(["--seed", "9", "--rays", "32", "--no-inflate", "--reward-mode", "integrated", "--timestamps"])
        .output()
        .unwrap();
    assert_eq!(flags.status.code(), Some(0), "{}", String::from_utf8_lossy(&flags.stderr));
}
