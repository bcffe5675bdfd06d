use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const FISHER: &str = r#"
[kinetics]
family = "fisher"
p = 1.0
capacity = 1.0
"#;

struct Run {
    code: i32,
    out: PathBuf,
    stderr: String,
}

fn frontctl(dir: &Path, task: &str, scenario: &str, extra: &[&str]) -> Run {
    let path = dir.join(format!("{task}.toml"));
    fs::write(&path, scenario).unwrap();
    let out = dir.join(format!("out-{task}-{}", extra.join("")));
    let o = Command::new(env!("CARGO_BIN_EXE_frontctl"))
        .arg(task)
        .arg("--scenario")
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        out,
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn summary(run: &Run, task: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(run.out.join(format!("{task}.json"))).unwrap()).unwrap()
}

fn wave(m: f64, d: f64, r: f64) -> String {
    format!("{FISHER}\n[wave]\nm = {m:?}\nD = {d:?}\nr = {r:?}\n")
}

#[test]
fn check_reports_hypotheses() {
    let dir = TempDir::new().unwrap();
    let run = frontctl(dir.path(), "check", FISHER, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let v = summary(&run, "check");
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["result"]["K"], 1.0);
}

#[test]
fn check_flags_non_monotone_birth() {
    let dir = TempDir::new().unwrap();
    let bad = "[kinetics]\nfamily = \"nicholson_linear_death\"\np = 20.0\na = 1.0\nq = 1.0\ndelta = 1.0\n[wave]\nm = 2.0\nD = 1.0\n";
    assert_eq!(frontctl(dir.path(), "check", bad, &[]).code, 3);
    let run = frontctl(dir.path(), "find-speed", bad, &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
}

#[test]
fn find_speed_scales_with_diffusivity() {
    // for b = u, d = u^2, m = 2 the sharp speed is sqrt(D)
    let dir = TempDir::new().unwrap();
    for d in [1.0, 4.0] {
        let run = frontctl(dir.path(), "find-speed", &format!("{}\n[solver.speed]\ntol = 1e-8\n", wave(2.0, d, 0.0)), &[]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        let c = summary(&run, "find-speed")["result"]["speed"]["c_star"].as_f64().unwrap();
        assert!((c - d.sqrt()).abs() < 1e-6, "D = {d}: {c}");
        let csv = fs::read_to_string(run.out.join("find-speed_profile.csv")).unwrap();
        assert!(csv.starts_with("t,phi,psi,segment_index"));
        let svg = fs::read_to_string(run.out.join("find-speed_profile.svg")).unwrap();
        assert!(svg.starts_with("<?xml") && svg.contains("<polyline"));
    }
}

#[test]
fn missing_wave_section_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let run = frontctl(dir.path(), "find-speed", FISHER, &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("[wave]"), "{}", run.stderr);
    assert!(!run.out.exists());
}

#[test]
fn malformed_scenarios_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("find-speed", "not toml ["),
        ("find-speed", &format!("{}\nbogus = 1\n", wave(2.0, 1.0, 0.0))),
        ("shoot", &wave(2.0, 1.0, 0.0)),
        ("find-speed", &wave(0.5, 1.0, 0.0)),
        ("find-speed", &format!("task = \"sweep\"\n{}", wave(2.0, 1.0, 0.0))),
        ("simulate", &format!("{}\n[solver.pde]\ndt = 1.0\nlength = 10.0\nt_end = 1.0\n", wave(2.0, 1.0, 0.0))),
        ("sweep", &wave(2.0, 1.0, 0.0)),
        ("sweep", &format!("{}\n[sweep]\nr = []\n", wave(2.0, 1.0, 0.0))),
        ("sweep", &format!("{}\n[sweep]\nr = [0.0]\nm = [2.0]\nD = [1.0]\n", wave(2.0, 1.0, 0.0))),
    ];
    for (task, text) in cases {
        let run = frontctl(dir.path(), task, text, &[]);
        assert_eq!(run.code, 2, "{task}: {text}\n{}", run.stderr);
    }
}

#[test]
fn solver_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\n[solver.speed.shoot]\nmax_steps = 10\n", wave(2.0, 1.0, 0.0));
    let run = frontctl(dir.path(), "find-speed", &text, &[]);
    assert_eq!(run.code, 1, "{}", run.stderr);
    assert!(run.stderr.contains("critical_speed"), "{}", run.stderr);
}

#[test]
fn shoot_classifies_trial_speeds() {
    let dir = TempDir::new().unwrap();
    for (c, tag) in [(0.6, "decayed_to_zero"), (0.8, "grew_past_k")] {
        let run = frontctl(dir.path(), "shoot", &format!("{}c = {c:?}\n", wave(2.0, 1.0, 0.5)), &[]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        assert_eq!(summary(&run, "shoot")["result"]["outcome"]["tag"], tag);
    }
}

#[test]
fn delay_axis_sweep_keeps_the_inequality() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\n[sweep]\nr = [0.0, 0.25, 0.5]\n", wave(2.0, 1.0, 0.0));
    let run = frontctl(dir.path(), "sweep", &text, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = summary(&run, "sweep")["result"]["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    assert!(rows[0]["delay_inequality"].is_null());
    assert!(rows[1..].iter().all(|r| r["delay_inequality"] == true));
    let table = fs::read_to_string(run.out.join("sweep_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(run.out.join("sweep_plot.svg").exists());
}

#[test]
fn exponent_axis_sweep_labels_regularity() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\n[sweep]\nm = [1.5, 2.0, 3.0]\n", wave(2.0, 1.0, 0.0));
    let run = frontctl(dir.path(), "sweep", &text, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = summary(&run, "sweep")["result"]["rows"].as_array().unwrap().clone();
    let labels: Vec<&str> = rows.iter().map(|r| r["regularity"].as_str().unwrap()).collect();
    assert_eq!(labels, ["C1", "NonC1", "NonC1"]);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\n[sweep]\nr = [0.0, 0.5]\nm = [1.5, 2.0]\n", wave(2.0, 1.0, 0.0));
    let a = frontctl(dir.path(), "sweep", &text, &["--parallel", "1"]);
    let b = frontctl(dir.path(), "sweep", &text, &["--parallel", "4"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(b.code, 0, "{}", b.stderr);
    for f in ["sweep.json", "sweep_table.csv", "sweep_plot.svg"] {
        assert_eq!(fs::read(a.out.join(f)).unwrap(), fs::read(b.out.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn phase_variational_and_simulate_run() {
    let dir = TempDir::new().unwrap();
    let text = wave(2.0, 1.0, 0.5);
    let run = frontctl(dir.path(), "phase", &text, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let d = summary(&run, "phase")["result"]["cross_solver_distance"].as_f64().unwrap();
    assert!(d < 1e-3);
    let header = fs::read_to_string(run.out.join("phase_trajectory.csv")).unwrap();
    assert!(header.starts_with("phi,psi_tilde,phi_delayed,psi_bar"));

    let run = frontctl(dir.path(), "variational", &text, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let res = &summary(&run, "variational")["result"];
    assert!(res["identity_residual"].as_f64().unwrap().abs() < 1e-3);
    assert!(res["delay_gap"].as_f64().unwrap() > 1e-2);

    let sim = format!("{text}\n[solver.pde]\nlength = 40.0\ndx = 0.1\nt_end = 20.0\n");
    let run = frontctl(dir.path(), "simulate", &sim, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let v = summary(&run, "simulate");
    assert!(v["result"]["max_u"].as_f64().unwrap() <= 1.0 + 1e-8);
    assert_eq!(v["config"]["solver"]["pde"]["initial"]["kind"], "step");
    assert!(run.out.join("simulate_front.csv").exists());
}

#[test]
fn regularity_matches_exponent() {
    let dir = TempDir::new().unwrap();
    let run = frontctl(dir.path(), "regularity", &wave(1.5, 1.0, 0.0), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let v = summary(&run, "regularity");
    assert_eq!(v["result"]["regularity"]["label"], "C1");
    assert!(v["result"]["relative_error"].as_f64().unwrap() < 0.05);
}

#[test]
fn shipped_scenarios_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let dir = TempDir::new().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_frontctl"))
            .args(["check", "--scenario"])
            .arg(&path)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        n += 1;
    }
    assert!(n >= 4);
}
