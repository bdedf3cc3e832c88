use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

const SCENARIOS: [&str; 9] = [
    "tight_poa",
    "pos_linear",
    "pos_sqrt",
    "intermediate_uniform",
    "intermediate_sqrt",
    "nonexistence",
    "non_indifference",
    "general_position_fail",
    "random_singleton",
];

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_search-game"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = run(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(out: &Output) -> Option<i32> {
    out.status.code()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn tight_instance_verifies_and_has_anarchy_three_halves() {
    let dir = workdir("tight");
    ok_json(
        &dir,
        &["scenario", "--name", "tight_poa", "--k", "2", "--beta", "0", "--out", "i.json", "--profile-out", "p.json"],
    );
    let v = ok_json(&dir, &["verify", "--instance", "i.json", "--profile", "p.json"]);
    assert_eq!(v["results"]["is_equilibrium"], true);
    let w = v["results"]["welfare"].as_f64().unwrap();
    assert!((w - 2.0 / 3.0).abs() < 1e-12);

    let v = ok_json(&dir, &["poa", "--instance", "i.json", "--equilibria", "p.json"]);
    assert!((v["results"]["poa"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let v = ok_json(&dir, &["poa", "--instance", "i.json"]);
    assert!((v["results"]["poa"].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn closed_form_at_beta_one_returns_the_page_distribution() {
    let dir = workdir("beta_one");
    ok_json(&dir, &["scenario", "--name", "random_singleton", "--seed", "7", "--out", "i.json"]);
    let v = ok_json(&dir, &["solve", "--instance", "i.json", "--method", "closed-form", "--profile-out", "p.json"]);
    let inst: Value = serde_json::from_str(&fs::read_to_string(dir.join("i.json")).unwrap()).unwrap();
    let gamma: Vec<f64> = inst["types"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["prob"].as_str().unwrap().parse().unwrap())
        .collect();
    let strategy: Vec<f64> = v["results"]["strategy"]["probs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_str().unwrap().parse().unwrap())
        .collect();
    assert_eq!(strategy, gamma);
    assert_eq!(v["results"]["verification"]["is_equilibrium"], true);
    assert!(dir.join("p.json").exists());
}

#[test]
fn reports_are_byte_stable() {
    let dir = workdir("stable");
    ok_json(&dir, &["scenario", "--name", "intermediate_uniform", "--out", "i.json"]);
    let a = run(&dir, &["solve", "--instance", "i.json"]);
    let b = run(&dir, &["solve", "--instance", "i.json"]);
    assert_eq!(code(&a), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let a = run(&dir, &["scenario", "--name", "pos_sqrt", "--n", "100"]);
    let b = run(&dir, &["scenario", "--name", "pos_sqrt", "--n", "100"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = workdir("invalid");
    fs::write(dir.join("bad.json"), "{\n  \"beta\": 0.5,\n  \"engines\": \n").unwrap();
    let out = run(&dir, &["solve", "--instance", "bad.json"]);
    assert_eq!(code(&out), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("bad.json") && msg.contains("line 4"), "{msg}");

    ok_json(&dir, &["scenario", "--name", "tight_poa", "--out", "i.json", "--profile-out", "p.json"]);
    for args in [
        vec!["verify", "--instance", "i.json", "--profile", "p.json", "--epsilon", "-1"],
        vec!["verify", "--instance", "i.json", "--profile", "p.json", "--format", "csv"],
        vec!["solve", "--instance", "i.json", "--grid", "0"],
        vec!["solve", "--instance", "missing.json"],
        vec!["scenario", "--name", "no_such_scenario"],
        vec!["scenario", "--name", "intermediate_uniform", "--beta", "0.01"],
        vec!["markov", "--instance", "i.json", "--q", "0.5"],
        vec!["solve"],
    ] {
        let out = run(&dir, &args);
        assert_eq!(code(&out), Some(2), "{args:?}: {}", stderr(&out));
    }

    fs::write(dir.join("wrong.json"), r#"{"strategies": [{"probs": ["0.5", "0.6"]}, {"probs": ["1", "0"]}]}"#).unwrap();
    let out = run(&dir, &["verify", "--instance", "i.json", "--profile", "wrong.json"]);
    assert_eq!(code(&out), Some(2));
    assert!(stderr(&out).contains("wrong.json"));
    fs::write(dir.join("short.json"), r#"{"strategies": [{"probs": ["1", "0"]}]}"#).unwrap();
    let out = run(&dir, &["verify", "--instance", "i.json", "--profile", "short.json"]);
    assert_eq!(code(&out), Some(2), "{}", stderr(&out));
}

#[test]
fn dynamics_without_equilibrium_exit_with_three() {
    let dir = workdir("cycle");
    ok_json(&dir, &["scenario", "--name", "nonexistence", "--out", "i.json"]);
    let out = run(&dir, &["solve", "--instance", "i.json", "--method", "best-response", "--max-rounds", "30"]);
    assert_eq!(code(&out), Some(3), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["converged"], false);

    let v = ok_json(&dir, &["poa", "--instance", "i.json"]);
    assert_eq!(v["results"]["status"], "no_equilibrium");
}

#[test]
fn every_scenario_runs_end_to_end() {
    let dir = workdir("all");
    for name in SCENARIOS {
        let start = Instant::now();
        let instance = format!("{name}.json");
        let profile = format!("{name}.profile.json");
        let s = ok_json(&dir, &["scenario", "--name", name, "--out", &instance, "--profile-out", &profile]);
        let has_claim = !s["results"]["claims"]["equilibrium"].is_null();
        assert_eq!(has_claim, dir.join(&profile).exists());

        let solved = ok_json(&dir, &["solve", "--instance", &instance]);
        assert!(solved["instance_digest"].is_string());

        if has_claim {
            let v = ok_json(&dir, &["verify", "--instance", &instance, "--profile", &profile]);
            assert_eq!(v["results"]["is_equilibrium"], true, "{name}");
            let p = ok_json(&dir, &["poa", "--instance", &instance, "--equilibria", &profile]);
            assert!(p["results"]["poa"].as_f64().unwrap() >= 1.0 - 1e-12, "{name}");
        } else {
            let p = ok_json(&dir, &["poa", "--instance", &instance]);
            assert_eq!(p["results"]["status"], "no_equilibrium");
        }
        assert!(start.elapsed() < Duration::from_secs(60), "{name} took {:?}", start.elapsed());
    }
}

#[test]
fn scenario_list_names_the_catalog() {
    let dir = workdir("list");
    let v = ok_json(&dir, &["scenario", "--list"]);
    let names: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, SCENARIOS);
}

#[test]
fn sweep_writes_one_csv_row_per_point() {
    let dir = workdir("sweep");
    let out = run(&dir, &["poa", "--scenario", "tight_poa", "--k-values", "2,3,4", "--format", "csv"]);
    assert_eq!(code(&out), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("scenario,k,n,beta,opt_welfare"));
    for (line, k) in lines[1..].iter().zip([2.0, 3.0, 4.0]) {
        let poa: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
        assert!((poa - (2.0 * k - 1.0) / k).abs() < 1e-9, "{line}");
    }
}

#[test]
fn markov_reports_stationary_distribution_and_structure() {
    let dir = workdir("markov");
    fs::write(
        dir.join("m.json"),
        r#"{"success": [[0.9, 0.1], [0.2, 0.8]], "failure": [[0.3, 0.7], [0.5, 0.5]]}"#,
    )
    .unwrap();
    let v = ok_json(&dir, &["markov", "--model", "m.json", "--q", "0.7,0.4"]);
    let r = &v["results"];
    let pi: Vec<f64> = r["stationary"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for key in ["stationary_power", "closed_form"] {
        for (a, b) in r[key].as_array().unwrap().iter().zip(&pi) {
            assert!((a.as_f64().unwrap() - b).abs() < 1e-9, "{key}");
        }
    }
    let rt = r["engines"][0]["return_time_success"].as_f64().unwrap();
    assert!(rt > 0.0);

    let out = run(&dir, &["markov", "--model", "m.json", "--q", "0.7,0.4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("engine,q,pi"));

    let out = run(&dir, &["markov", "--model", "m.json", "--q", "0.7"]);
    assert_eq!(code(&out), Some(2));
}

#[test]
fn rulecheck_flags_the_structural_properties() {
    let dir = workdir("rulecheck");
    let v = ok_json(&dir, &["rulecheck", "--rule", "proportional", "--k", "2"]);
    let status: Vec<(String, String)> = v["results"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["property"].as_str().unwrap().to_string(), r["status"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(status.len(), 4);
    let get = |p: &str| status.iter().find(|(name, _)| name == p).unwrap().1.clone();
    assert_eq!(get("monotone"), "pass");
    assert_eq!(get("non_indifferent"), "pass");
    assert_eq!(get("convex"), "fail");

    let out = run(&dir, &["rulecheck", "--rule", "truncated_indifferent", "--pages", "3", "--format", "text"]);
    assert_eq!(code(&out), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("non_indifferent: fail")), "{text}");
}
