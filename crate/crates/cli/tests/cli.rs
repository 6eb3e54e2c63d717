use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn difftof(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_difftof"))
        .args(args)
        .current_dir(dir)
        .env_remove("DIFFTOF_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn write_fixture(dir: &Path) {
    let spec = json!({ "grid_h": 24, "grid_w": 24 });
    let sensors: Vec<Value> = [[0.4, 0.0, 0.35], [-0.3, 0.25, 0.4], [0.0, -0.45, 0.3], [0.2, 0.3, 0.5]]
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let pos = look_at_matrix(*p);
            json!({ "id": id, "position": p, "orientation": { "matrix": pos } })
        })
        .collect();
    std::fs::write(dir.join("rig.json"), json!({ "spec": spec, "sensors": sensors }).to_string()).unwrap();
    let params = json!({
        "kind": "posed_mesh",
        "rot6": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        "translation": [0.01, -0.02, 0.035],
        "albedo_object": 0.7,
        "albedo_plane": 0.4
    });
    std::fs::write(dir.join("gt.json"), params.to_string()).unwrap();
}

/// Rows of a camera-to-world rotation whose third column points from `p`
/// toward the origin.
fn look_at_matrix(p: [f64; 3]) -> [[f64; 3]; 3] {
    let norm = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let z = norm([-p[0], -p[1], -p[2]]);
    let x = norm(cross([0.0, 0.0, 1.0], z));
    let y = cross(z, x);
    [[x[0], y[0], z[0]], [x[1], y[1], z[1]], [x[2], y[2], z[2]]]
}

#[test]
fn render_then_refine_from_ground_truth_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);
    ok(&difftof(&["render", "--params", "gt.json", "--rig", "rig.json", "--out", "r"], d));
    assert!(d.join("r/hist.json").exists());
    let manifest: Value = serde_json::from_str(&read(&d.join("r/run_manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "render");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    ok(&difftof(
        &["refine", "--rig", "rig.json", "--hist", "r/hist.csv", "--init", "gt.json", "--steps", "10", "--out", "f"],
        d,
    ));
    let trace = read(&d.join("f/loss_trace.csv"));
    let first: f64 = trace.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(first < 1e-9, "initial loss {first}");
    let res: Value = serde_json::from_str(&read(&d.join("f/params.json"))).unwrap();
    let t: Vec<f64> = serde_json::from_value(res["params"]["translation"].clone()).unwrap();
    for (a, b) in t.iter().zip([0.01, -0.02, 0.035]) {
        assert!((a - b).abs() < 1e-4, "{t:?}");
    }
}

#[test]
fn malformed_config_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);
    std::fs::write(d.join("bad.json"), "{\n \"refine\": {\n  \"steps\": -3 }\n}").unwrap();
    let out = difftof(
        &["refine", "--config", "bad.json", "--rig", "rig.json", "--hist", "h.csv", "--init", "gt.json"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:3:"));
}

#[test]
fn missing_input_exits_with_io_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = difftof(&["render", "--params", "nope.json", "--rig", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn viewsweep_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = json!({
        "setup": { "spec": { "grid_h": 16, "grid_w": 16 } },
        "refine": { "steps": 5 }
    });
    std::fs::write(d.join("cfg.json"), cfg.to_string()).unwrap();
    for (out, jobs) in [("a", "1"), ("b", "2")] {
        ok(&difftof(
            &["viewsweep", "-c", "cfg.json", "--budgets", "3,5", "--n-scenes", "2", "--seed", "4", "-j", jobs, "-o", out],
            d,
        ));
    }
    for f in ["viewsweep.csv", "viewsweep_scenes.csv", "run_manifest.json"] {
        assert_eq!(read(&d.join("a").join(f)), read(&d.join("b").join(f)), "{f}");
    }
}

#[test]
fn delta_kernel_ablation_changes_the_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        json!({ "setup": { "spec": { "grid_h": 16, "grid_w": 16 } }, "refine": { "steps": 3 } }).to_string(),
    )
    .unwrap();
    ok(&difftof(&["ablate", "-c", "cfg.json", "--variant", "delta-kernel", "--n-scenes", "1", "-o", "ab"], d));
    let table = read(&d.join("ab/ablation.csv"));
    let row = table.lines().nth(1).unwrap();
    let l1: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(row.starts_with("delta-kernel,") && l1 > 0.0, "{row}");
}

#[test]
fn datagen_and_initialize_are_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = json!({ "n_samples": 3, "spec": { "grid_h": 16, "grid_w": 16 }, "rig": { "n_sensors": 4 } });
    std::fs::write(d.join("dg.json"), cfg.to_string()).unwrap();
    for (out, jobs) in [("a", "1"), ("b", "3")] {
        ok(&difftof(&["datagen", "-c", "dg.json", "--seed", "9", "-j", jobs, "-o", out], d));
    }
    assert_eq!(read(&d.join("a/manifest.json")), read(&d.join("b/manifest.json")));
    assert_eq!(read(&d.join("a/sample_000002/hist.csv")), read(&d.join("b/sample_000002/hist.csv")));

    let init_cfg = json!({ "init": { "n_candidates": 16, "n_survivors": 2, "short_refine_steps": 3, "rank_grid": 8, "flip_rounds": 1 } });
    std::fs::write(d.join("init.json"), init_cfg.to_string()).unwrap();
    for (out, jobs) in [("ia", "1"), ("ib", "2")] {
        ok(&difftof(
            &[
                "initialize", "-c", "init.json", "--rig", "a/sample_000000/rig.json", "--hist",
                "a/sample_000000/hist.csv", "--seed", "2", "-j", jobs, "-o", out,
            ],
            d,
        ));
    }
    assert_eq!(read(&d.join("ia/init.json")), read(&d.join("ib/init.json")));
    assert_eq!(read(&d.join("ia/candidate_losses.csv")), read(&d.join("ib/candidate_losses.csv")));
}

#[test]
fn eval_reports_zero_error_for_identical_poses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);
    ok(&difftof(&["eval", "--pred", "gt.json", "--gt", "gt.json", "-o", "e"], d));
    let summary: Value = serde_json::from_str(&read(&d.join("e/summary.json"))).unwrap();
    assert_eq!(summary["auc"], 100.0);
    assert_eq!(summary["median"], 0.0);
}
