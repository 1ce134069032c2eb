//! End-to-end runs of the `covertkey` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_covertkey"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a headered CSV whose fields never need quoting.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn envelope(path: &Path) -> Vec<(f64, f64)> {
    rows(path)
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect()
}

fn value_at(points: &[(f64, f64)], r1: f64) -> Option<f64> {
    if r1 > points.last()?.0 {
        return None;
    }
    let i = points.partition_point(|p| p.0 < r1);
    if i == 0 || points[i].0 == r1 {
        return Some(points[i].1);
    }
    let (a, b) = (points[i - 1], points[i]);
    Some(a.1 + (r1 - a.0) / (b.0 - a.0) * (b.1 - a.1))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn examples_reproduce_shipped_channels() {
    let dir = TempDir::new().unwrap();
    let o = run(&["examples"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["table1_channel1.json", "table1_channel2.json"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(fixture(name)).unwrap(),
            "{name}"
        );
    }
    let summary = json(&dir.path().join("examples.json"));
    let gap = summary[0]["kl_gaps"][0].as_f64().unwrap();
    assert!((gap - 0.775121).abs() < 1e-6);
    let chi = summary[1]["chi_range"].as_array().unwrap();
    for c in chi {
        assert!((c.as_f64().unwrap() - 0.047619).abs() < 1e-6);
    }
}

#[test]
fn csk_inner_region_lies_inside_outer() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(&["region-csk", "--channel", ch.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let inner = envelope(&dir.path().join("csk_inner.csv"));
    let outer = envelope(&dir.path().join("csk_outer.csv"));
    for &(r1, r2) in &inner {
        assert!(value_at(&outer, r1).unwrap() >= r2 - 1e-12);
    }
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["grid"], 1001);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 4);
    assert_eq!(m["channel"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn channel_two_inner_region_is_a_segment() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel2.json");
    let o = run(&["region-csk", "--channel", ch.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let inner = envelope(&dir.path().join("csk_inner.csv"));
    let summary_dir = TempDir::new().unwrap();
    run(&["examples"], summary_dir.path());
    let ex = json(&summary_dir.path().join("examples.json"));
    // Axis intercepts of the time-division line: rho_i kappa gap_i at rho_i = 1.
    let kappa = ex[1]["kappa"].as_f64().unwrap();
    let (a, b) = (
        kappa * ex[1]["kl_gaps"][1].as_f64().unwrap(),
        kappa * ex[1]["kl_gaps"][0].as_f64().unwrap(),
    );
    for &(r1, r2) in &inner {
        assert!((r2 - a * (1.0 - r1 / b)).abs() <= 1e-3, "({r1}, {r2})");
    }
}

#[test]
fn empty_grid_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(
        &["region-csk", "--channel", ch.to_str().unwrap(), "--grid", "0"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let o = run(&["region-csk", "--bogus"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn degenerate_channel_fails_validation() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(fixture("table1_channel1.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    // Make the warden's row for user 1 equal to the idle row.
    v["w_z"]["1,0"] = v["w_z"]["0,0"].clone();
    let ch = dir.path().join("bad.json");
    fs::write(&ch, serde_json::to_string(&v).unwrap()).unwrap();
    let o = run(
        &["region-csk", "--channel", ch.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("FAIL"), "{}", stderr(&o));

    let missing = run(&["region-csk", "--channel", "/nonexistent/channel.json"], dir.path());
    assert_eq!(code(&missing), 1);
}

#[test]
fn region_wsk_writes_both_envelopes() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(
        &["region-wsk", "--channel", ch.to_str().unwrap(), "--grid", "21"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let inner = envelope(&dir.path().join("wsk_inner.csv"));
    let outer = envelope(&dir.path().join("wsk_outer.csv"));
    for &(r1, r2) in &inner {
        assert!(value_at(&outer, r1).unwrap() >= r2 - 1e-12);
    }
}

#[test]
fn expansion_checks_pass_on_channel_one() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(&["verify-expansions", "--channel", ch.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&dir.path().join("expansions.json"));
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 16);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn simulate_tiny_instance_is_consistent() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let args = [
        "simulate",
        "--channel",
        ch.to_str().unwrap(),
        "-n",
        "4",
        "--alpha",
        "0.25",
        "--sizes",
        "2,2,2",
        "--trials",
        "40000",
        "--seed",
        "11",
    ];
    let o = run(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("reports.json"));
    let reports = r["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    assert_eq!(r["seed"], 11);
    // Pairs of (exact, Monte Carlo) for each scheme.
    for pair in reports.chunks(2) {
        assert_eq!(pair[0]["mode"], "exact");
        assert_eq!(pair[1]["mode"], "monte_carlo");
        let exact = pair[0]["p_err"]["value"].as_f64().unwrap();
        let mc = &pair[1]["p_err"];
        let widen = 3.0 / 1.96;
        let centre = 0.5 * (mc["lower"].as_f64().unwrap() + mc["upper"].as_f64().unwrap());
        assert!(
            (exact - centre).abs() <= widen * mc["half_width"].as_f64().unwrap(),
            "{pair:?}"
        );
        assert_eq!(pair[0]["secrecy_tv"], pair[1]["secrecy_tv"]);
    }
    let csv = rows(&dir.path().join("reports.csv"));
    assert_eq!(csv.len(), 4);
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(
        &[
            "simulate",
            "--channel",
            ch.to_str().unwrap(),
            "--sizes",
            "1,2,2",
            "--trials",
            "50",
            "--mode",
            "monte-carlo",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stderr(&o)
        .lines()
        .find(|l| l.starts_with("seed: "))
        .unwrap()
        .to_string();
    let seed: u64 = line["seed: ".len()..].parse().unwrap();
    assert_eq!(json(&dir.path().join("manifest.json"))["seed"], seed);
}

#[test]
fn infeasible_plan_and_budget_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let c = ch.to_str().unwrap();
    let o = run(&["simulate", "--channel", c, "-n", "8", "--seed", "1"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = run(&["bounds", "--channel", c, "-n", "8"], dir.path());
    assert_eq!(code(&o), 3);

    let o = bin()
        .args([
            "simulate",
            "--channel",
            c,
            "-n",
            "4",
            "--sizes",
            "2,2,2",
            "--seed",
            "1",
            "--mode",
            "exact",
        ])
        .arg("--out")
        .arg(dir.path())
        .env("COVERTKEY_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn bounds_are_written_for_infeasible_plans_on_request() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(
        &[
            "bounds",
            "--channel",
            ch.to_str().unwrap(),
            "-n",
            "12",
            "--allow-infeasible",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = json(&dir.path().join("bounds.json"));
    assert_eq!(b["plan_feasible"], false);
    for key in ["reliability", "resolvability"] {
        let v = b[key]["value"].as_f64().unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
    assert_eq!(rows(&dir.path().join("bounds.csv")).len(), 6);
}

#[test]
fn decay_study_through_simulate() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel1.json");
    let o = run(
        &[
            "simulate",
            "--channel",
            ch.to_str().unwrap(),
            "--n-list",
            "6,8",
            "--trials",
            "500",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d = json(&dir.path().join("decay.json"));
    assert_eq!(d["study"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(rows(&dir.path().join("decay.csv")).len(), 2);
}

#[test]
fn replay_reproduces_outputs_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let ch = dir.path().join("channel.json");
    fs::copy(fixture("table1_channel1.json"), &ch).unwrap();
    let first = dir.path().join("first");
    let o = run(
        &[
            "simulate",
            "--channel",
            ch.to_str().unwrap(),
            "-n",
            "4",
            "--alpha",
            "0.25",
            "--sizes",
            "2,2,2",
            "--trials",
            "3000",
            "--seed",
            "5",
        ],
        &first,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let second = dir.path().join("second");
    let manifest = first.join("manifest.json");
    let o = run(&["replay", "--manifest", manifest.to_str().unwrap()], &second);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["reports.csv", "reports.json"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap()
        );
    }

    // The channel is an input, so editing it invalidates the manifest.
    let mut text = fs::read_to_string(&ch).unwrap();
    text.push(' ');
    fs::write(&ch, text).unwrap();
    let o = run(
        &["replay", "--manifest", manifest.to_str().unwrap()],
        &dir.path().join("third"),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn commands_leave_inputs_untouched() {
    let dir = TempDir::new().unwrap();
    let ch = fixture("table1_channel2.json");
    let before = fs::read(&ch).unwrap();
    run(
        &["region-wsk", "--channel", ch.to_str().unwrap(), "--grid", "5"],
        dir.path(),
    );
    assert_eq!(before, fs::read(&ch).unwrap());
}
