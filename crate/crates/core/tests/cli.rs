use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use itermeas::cli::records::TrajectoryRecord;

const K2: &str = r#"
scenario = "discrete"

[kernel]
pointers = ["a", "b"]
outcomes = ["0", "1"]
rows = [[0.7, 0.3], [0.4, 0.6]]
q0 = [0.5, 0.5]

[run]
steps = 300
trajectories = 100
seed = 7
stride = 10
"#;

fn itermeas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itermeas"))
        .args(args)
        .env_remove("ITERMEAS_THREADS")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn records(dir: &Path) -> Vec<TrajectoryRecord> {
    fs::read_to_string(dir.join("trajectories.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn summary_value(dir: &Path, section: &str, key: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[0] == section && (key.is_empty() || &r[1] == key))
        .map(|r| r[3].to_string())
        .collect()
}

#[test]
fn k2_run_writes_one_record_per_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "k2.toml", K2);
    let out = tmp.path().join("out");
    let output = itermeas(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 100);
    for (k, r) in recs.iter().enumerate() {
        assert_eq!(r.schema_version, 1);
        assert_eq!(r.trajectory_id, k as u64);
        assert_eq!(r.times.len(), r.values.len());
        assert_eq!(r.counts.as_ref().unwrap().iter().sum::<u64>(), 300);
    }
    let histogram: u64 = summary_value(&out, "histogram", "").iter().map(|v| v.parse::<u64>().unwrap()).sum();
    assert_eq!(histogram, 100);
    assert_eq!(summary_value(&out, "rate", "relative_entropy[a->b]").len(), 1);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "k2.toml", K2);
    let one = tmp.path().join("one");
    let four = tmp.path().join("four");
    assert!(itermeas(&["simulate", "--config", &config, "--out", one.to_str().unwrap(), "--threads", "1"]).status.success());
    assert!(itermeas(&["simulate", "--config", &config, "--out", four.to_str().unwrap(), "--threads", "4"]).status.success());
    for file in ["trajectories.jsonl", "summary.csv"] {
        assert_eq!(fs::read(one.join(file)).unwrap(), fs::read(four.join(file)).unwrap(), "{file}");
    }
    let other = tmp.path().join("other");
    assert!(itermeas(&["simulate", "--config", &config, "--out", other.to_str().unwrap(), "--seed", "8"]).status.success());
    assert_ne!(fs::read(one.join("trajectories.jsonl")).unwrap(), fs::read(other.join("trajectories.jsonl")).unwrap());
}

#[test]
fn validate_reports_full_table() {
    let tmp = tempfile::tempdir().unwrap();
    let text = K2.replace("\"discrete\"", "\"validate\"").replace("trajectories = 100", "trajectories = 2000");
    let config = write(tmp.path(), "k2.toml", &text);
    let out = tmp.path().join("reports");
    let output = itermeas(&["validate", "--config", &config, "--out", out.to_str().unwrap()]);
    let table = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "{table}");
    let mut reader = csv::Reader::from_path(out.join("reports.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() >= 6);
    for name in ["martingale", "collapse_law", "exchangeability", "closed_form_posterior"] {
        assert!(table.contains(name), "{name} missing");
    }
}

#[test]
fn uncollapsed_validation_exits_with_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let text = K2.replace("\"discrete\"", "\"validate\"").replace("steps = 300", "steps = 5");
    let config = write(tmp.path(), "short.toml", &text);
    assert_eq!(itermeas(&["validate", "--config", &config]).status.code(), Some(1));
}

#[test]
fn config_errors_exit_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write(tmp.path(), "bad.toml", &K2.replace("seed = 7", "seed = 7\nsede = 8"));
    let output = itermeas(&["simulate", "--config", &config, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("14:1") && stderr.contains("sede"), "{stderr}");
    let missing = itermeas(&["simulate", "--config", "/nonexistent.toml", "--out", "/tmp/x"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn positivity_loss_is_reported_per_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
scenario = "belavkin-diffusive"

[apparatus]
energies = [0.0, 0.0]
blocks = [
  { re = [[0.0, 0.0], [0.0, 0.0]], im = [[0.0, -0.5], [0.5, 0.0]] },
  { re = [[0.0, 0.0], [0.0, 0.0]], im = [[0.0, 0.5], [-0.5, 0.0]] },
]
probe_state = { re = [1.0, 0.0] }
probe_basis = [{ re = [0.7071067811865476, 0.7071067811865476] }, { re = [0.7071067811865476, -0.7071067811865476] }]
delta = 1e-3
rho0 = { re = [[0.5, 0.5], [0.5, 0.5]] }

[run]
horizon = 1.0
dt = 1e-3
trajectories = 4
seed = 3
"#;
    let config = write(tmp.path(), "pure.toml", text);
    let out = tmp.path().join("out");
    let output = itermeas(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    assert!(recs.iter().all(|r| r.error.as_deref().is_some_and(|e| e.contains("positivity"))));
}

#[test]
fn calibrate_recovers_kernel_from_peaked_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    fs::create_dir(&runs).unwrap();
    for (name, q0) in [("a", "[1.0, 0.0]"), ("b", "[0.0, 1.0]")] {
        let text = K2
            .replace("q0 = [0.5, 0.5]", &format!("q0 = {q0}"))
            .replace("steps = 300", "steps = 4000")
            .replace("trajectories = 100", "trajectories = 3")
            .replace("stride = 10", "stride = 4000");
        let config = write(tmp.path(), &format!("{name}.toml"), &text);
        let out = tmp.path().join(name);
        assert!(itermeas(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]).status.success());
        fs::copy(out.join("trajectories.jsonl"), runs.join(format!("{name}.jsonl"))).unwrap();
    }
    let output = itermeas(&["calibrate", "--runs", runs.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let parsed: toml::Value = toml::from_str(&String::from_utf8(output.stdout).unwrap()).unwrap();
    let rows = parsed["kernel"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let mut first: Vec<f64> = rows.iter().map(|r| r[0].as_float().unwrap()).collect();
    first.sort_by(f64::total_cmp);
    let sigma = (0.25f64 / 12_000.0).sqrt();
    assert!((first[0] - 0.4).abs() < 4.0 * sigma, "{first:?}");
    assert!((first[1] - 0.7).abs() < 4.0 * sigma, "{first:?}");
}

#[test]
fn every_sample_config_parses() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = fs::read_to_string(&path).unwrap();
            itermeas::cli::config::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
