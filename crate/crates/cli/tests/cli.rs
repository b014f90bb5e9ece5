//! End-to-end checks of the command-line surface: exit codes, file
//! outputs, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

static DIR_SEQ: AtomicUsize = AtomicUsize::new(0);

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_minregret")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "minregret-cli-{tag}-{}-{}",
        std::process::id(),
        DIR_SEQ.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn write_toy_instance(dir: &Path) -> PathBuf {
    let instance = minregret::synthetic::gas_electric_toy(2, 1, 2, 42);
    let path = dir.join("toy.json");
    std::fs::write(&path, instance.to_json_pretty()).expect("write instance");
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_writes_certificate_and_summary() {
    let dir = scratch_dir("solve");
    let instance = write_toy_instance(&dir);
    let cert = dir.join("cert.json");
    let out = run(&[
        "solve",
        "--instance",
        instance.to_str().unwrap(),
        "--alpha",
        "0",
        "--cap-kg",
        "60000",
        "--comparator",
        "carbon-capped",
        "--eps",
        "1",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("lower bound"), "{text}");
    assert!(text.contains("GB"), "design table lists devices: {text}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(doc["status"], "converged");
    assert!(doc["upper_bound"].as_f64().unwrap().abs() < 1e-4);
    assert!(doc["design"].get("d[GB]").is_some());
}

#[test]
fn solve_zero_alpha_carbon_capped_reports_zero_regret() {
    let dir = scratch_dir("zero");
    let instance = write_toy_instance(&dir);
    let out = run(&[
        "solve",
        "--instance",
        instance.to_str().unwrap(),
        "--cap-kg",
        "50000",
        "--comparator",
        "carbon-capped",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // Epsilon was omitted: the default is echoed.
    assert!(text.contains("100 EUR (default)"), "{text}");
    assert!(text.contains("lower bound  0.0000"), "{text}");
    assert!(text.contains("upper bound  0.0000"), "{text}");
}

#[test]
fn missing_instance_exits_2_naming_the_path() {
    let out = run(&["solve", "--instance", "/no/such/file.json", "--cap-kg", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/file.json"), "{err}");
}

#[test]
fn missing_cap_exits_2() {
    let dir = scratch_dir("nocap");
    let instance = write_toy_instance(&dir);
    let out = run(&["solve", "--instance", instance.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_grid_and_unit_conversion() {
    let dir = scratch_dir("sweep");
    let instance = write_toy_instance(&dir);
    let front = dir.join("front.csv");
    let out = run(&[
        "sweep",
        "--instance",
        instance.to_str().unwrap(),
        "--alphas",
        "0.25,0.5,0.75",
        "--caps-t",
        "20,40,60",
        "--eps",
        "1",
        "--out",
        front.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&front).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10, "header + 9 cells");
    // Caps given in tonnes appear as kg.
    assert!(lines[1].starts_with("0.25,20000,"), "{}", lines[1]);
    assert!(lines[4].starts_with("0.5,20000,"), "{}", lines[4]);
}

#[test]
fn sweep_rerun_is_reproducible_apart_from_timing() {
    let dir = scratch_dir("repro");
    let instance = write_toy_instance(&dir);
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out_path in [&a, &b] {
        let out = run(&[
            "sweep",
            "--instance",
            instance.to_str().unwrap(),
            "--alphas",
            "0.3",
            "--caps-t",
            "30,60",
            "--eps",
            "1",
            "--seed",
            "42",
            "--jobs",
            "2",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    // The time_s column is wall-clock measurement; everything else must be
    // byte-identical between reruns.
    let strip_time = |text: String| -> String {
        text.lines()
            .map(|line| {
                let mut fields: Vec<&str> = line.split(',').collect();
                if fields.len() > 5 && fields[5] != "time_s" {
                    fields[5] = "-";
                }
                fields.join(",")
            })
            .collect::<Vec<String>>()
            .join("\n")
    };
    let ta = strip_time(std::fs::read_to_string(&a).unwrap());
    let tb = strip_time(std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
}

#[test]
fn mincarbon_prints_value() {
    let dir = scratch_dir("floor");
    let instance = write_toy_instance(&dir);
    let out = run(&["mincarbon", "--instance", instance.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("minimal annual carbon"));
}

#[test]
fn validate_reports_errors_with_exit_2() {
    let dir = scratch_dir("validate");
    let instance_path = write_toy_instance(&dir);
    let ok = run(&["validate", "--instance", instance_path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));

    // Break the instance: drop the cooling dummy.
    let mut instance = minregret::synthetic::gas_electric_toy(2, 1, 2, 42);
    instance.devices.retain(|d| d.abbreviation != "C-Dummy");
    let broken = dir.join("broken.json");
    std::fs::write(&broken, instance.to_json_pretty()).unwrap();
    let bad = run(&["validate", "--instance", broken.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("cooling dummy"));
}

#[test]
fn cluster_writes_days_section() {
    let dir = scratch_dir("cluster");
    let csv = dir.join("profiles.csv");
    let mut text = String::from("day,step,heat_kwh,cold_kwh\n");
    for day in 0..8 {
        let heat = if day < 4 { 10.0 } else { 2.0 };
        for step in 1..=2 {
            text.push_str(&format!("d{day},{step},{heat},{}\n", 12.0 - heat));
        }
    }
    std::fs::write(&csv, text).unwrap();
    let days = dir.join("days.json");
    let out = run(&[
        "cluster",
        "--profiles",
        csv.to_str().unwrap(),
        "-k",
        "2",
        "--out",
        days.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&days).unwrap()).unwrap();
    assert_eq!(parsed.len(), 2);
    let total: f64 = parsed.iter().map(|d| d["weight"].as_f64().unwrap()).sum();
    assert!((total - 365.0).abs() < 1e-9);
}

#[test]
fn oracle_command_runs() {
    let dir = scratch_dir("oracle");
    let instance = write_toy_instance(&dir);
    let out = run(&[
        "oracle",
        "--instance",
        instance.to_str().unwrap(),
        "--alpha",
        "0.3",
        "--cap-kg",
        "40000",
        "--comparator",
        "carbon-capped",
        "--grid-n",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("oracle min-max regret"));
}

#[test]
fn benchmark_empty_grid_writes_header_only() {
    let dir = scratch_dir("bench-empty");
    let table = dir.join("table.csv");
    let out = run(&["benchmark", "--out", table.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("instance,days,steps,metric"));
}
