use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;
use tiltshape::forceset::HfsQuery;
use tiltshape::geom::Vec3;
use tiltshape::platform::{PlatformParams, TiltVector};
use tiltshape::tiltopt::TiltTable;

fn tiltshape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiltshape"))
        .args(args)
        .output()
        .expect("spawn tiltshape")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small table covering ±0.5 N, shared by the simulate tests.
fn small_table() -> &'static (TempDir, std::path::PathBuf) {
    static T: OnceLock<(TempDir, std::path::PathBuf)> = OnceLock::new();
    T.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("table.json");
        let o = tiltshape(&["build-table", "--grid", "0:0.5:0.5,0:0.5:0.5", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (dir, out)
    })
}

#[test]
fn help_documents_exit_codes() {
    let o = tiltshape(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for line in [
        "0  success",
        "2  bad configuration",
        "3  some table cell",
        "4  tilt table",
        "5  allocation",
    ] {
        assert!(text.contains(line), "missing {line:?}");
    }
}

#[test]
fn hover_check_at_zero_tilt() {
    let o = tiltshape(&["hover-check"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("hoverable: yes"));
    assert!(out.contains("linf: 0.2335937"));
    assert!(out.contains("rank: 4"));
}

#[test]
fn hover_check_with_inward_tilt() {
    let g = format!("{0},{0},{0},{0}", -std::f64::consts::PI / 6.0);
    let o = tiltshape(&["hover-check", "--gamma", &g]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("hoverable: yes"));
    assert!(stdout(&o).contains("rank: 6"));
}

#[test]
fn sideways_rotors_cannot_hover() {
    let g = "1.5707963267948966,1.5707963267948966,1.5707963267948966,1.5707963267948966";
    let o = tiltshape(&["hover-check", "--gamma", g]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("hoverable: no"));
}

#[test]
fn bad_gamma_is_a_usage_error() {
    assert_eq!(code(&tiltshape(&["hover-check", "--gamma", "0.1,0.2"])), 2);
    assert_eq!(code(&tiltshape(&["hover-check", "--gamma", "a,b,c,d"])), 2);
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{\n  \"platform\": {\n    \"mass\": ,\n  }\n}\n").unwrap();
    let o = tiltshape(&["--config", s(&cfg), "hover-check"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{ "platform": { "mas": 2.5 } }"#).unwrap();
    let o = tiltshape(&["--config", s(&cfg), "hover-check"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mas"), "{}", stderr(&o));
}

#[test]
fn invalid_config_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{ "platform": { "mass": -1.0 } }"#).unwrap();
    assert_eq!(code(&tiltshape(&["--config", s(&cfg), "hover-check"])), 2);
}

fn read_points(csv: &str) -> Vec<[f64; 6]> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("dx,dy,dz,fx,fy,fz"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4], v[5]]
        })
        .collect()
}

#[test]
fn hfs_export_at_zero_tilt_is_vertical() {
    let o = tiltshape(&["hfs-export", "--directions", "50"]);
    assert_eq!(code(&o), 0);
    let pts = read_points(&stdout(&o));
    assert_eq!(pts.len(), 50);
    for p in pts {
        assert!(p[3].abs() < 1e-9 && p[4].abs() < 1e-9, "{p:?}");
    }
}

#[test]
fn exported_points_belong_to_the_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hfs.csv");
    let g = [-0.4, -0.3, -0.4, -0.3];
    let arg = g.map(|x| x.to_string()).join(",");
    let o = tiltshape(&["hfs-export", "--gamma", &arg, "--directions", "40", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pts = read_points(&fs::read_to_string(out).unwrap());
    assert_eq!(pts.len(), 40);
    let q = HfsQuery::at(&PlatformParams::default(), &TiltVector::new(g.to_vec()).unwrap()).unwrap();
    for p in pts {
        assert!(q.membership(&Vec3::new(p[3], p[4], p[5])).unwrap().included, "{p:?}");
    }
}

#[test]
fn too_few_directions() {
    assert_eq!(code(&tiltshape(&["hfs-export", "--directions", "5"])), 2);
}

#[test]
fn small_table_round_trips() {
    let (_, path) = small_table();
    let t = TiltTable::load(path).unwrap();
    assert_eq!(t.axis_x, vec![-0.5, 0.0, 0.5]);
    assert!(t.all_certified());
    assert_eq!(TiltTable::from_json(&t.to_json()).unwrap(), t);
}

#[test]
fn build_table_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = tiltshape(&["build-table", "--grid", "0:0:1,0:0:1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("cells: 1"));
    assert!(text.contains("certified: 1"));
    assert!(text.contains("max_abs_gamma: "));
    assert!(stderr(&o).contains("wall time"));
}

#[test]
fn uncertified_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{ "optimizer": { "gamma_max": 0.06544984694978735 } }"#).unwrap();
    let out = dir.path().join("t.json");
    let args = [
        "--config",
        s(&cfg),
        "build-table",
        "--grid",
        "0:0:1,0:0:1",
        "--out",
        s(&out),
    ];
    let o = tiltshape(&args);
    assert_eq!(code(&o), 3);
    assert!(!out.exists());

    let mut allowed = args.to_vec();
    allowed.push("--allow-uncertified");
    let o = tiltshape(&allowed);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("certified: 0"));
    assert!(!TiltTable::load(&out).unwrap().all_certified());
}

#[test]
fn bad_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    assert_eq!(code(&tiltshape(&["build-table", "--grid", "0:1", "--out", s(&out)])), 2);
}

#[test]
fn simulate_without_table_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = tiltshape(&[
        "simulate",
        "--table",
        s(&missing),
        "--out",
        s(&dir.path().join("log.csv")),
    ]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("nope.json"));
}

#[test]
fn simulate_beyond_table_range() {
    let (_, table) = small_table();
    let dir = tempfile::tempdir().unwrap();
    let o = tiltshape(&["simulate", "--table", s(table), "--out", s(&dir.path().join("log.csv"))]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("covers"), "{}", stderr(&o));
}

#[test]
fn simulate_hover() {
    let (_, table) = small_table();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{
  "controller": { "force_ref_clamp": 0.5 },
  "scenario": {
    "trajectory": { "kind": "hover", "duration": 2.0 },
    "zone": { "force": [0.0, 0.0, 0.0] },
    "duration": 2.0
  }
}"#,
    )
    .unwrap();
    let log = dir.path().join("log.csv");
    let o = tiltshape(&["--config", s(&cfg), "simulate", "--table", s(table), "--out", s(&log)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = stdout(&o);
    let err: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("max_position_error_m: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-3);
    assert!(summary.contains("infeasible_steps: 0"));
    let csv = fs::read_to_string(log).unwrap();
    assert_eq!(csv.lines().count(), 1 + 201);
    assert!(csv.starts_with("t,"));
}
