use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wqpt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wqpt"))
        .args(args)
        .current_dir(dir)
        .env_remove("WQPT_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn identity_weak_perturbative_report() {
    let t = TempDir::new().unwrap();
    config(t.path(), "c.json", r#"{"scheme": "weak", "channel": {"name": "identity"}, "output": "out"}"#);
    let o = wqpt(t.path(), &["reconstruct", "--config", "c.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&t.path().join("out/report.json"));
    assert!(r["max_abs_err"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["setup_count"], 2);
    assert_eq!(r["values_per_parameter"], 5);
    assert_eq!(r["chi"][0][0][0][0][0], 1.0);
    assert!(t.path().join("out/report.meta.json").exists());
}

#[test]
fn schema_errors_exit_nonzero() {
    let t = TempDir::new().unwrap();
    config(t.path(), "a.json", r#"{"scheme": "weak", "channel": {"name": "bit_flip"}}"#);
    let o = wqpt(t.path(), &["reconstruct", "--config", "a.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("channel"), "{}", stderr(&o));

    config(t.path(), "b.json", "{\"scheme\": \"weak\",\n \"channel\": {\"name\": \"identity\"},\n \"shots_count\": 3}");
    let o = wqpt(t.path(), &["reconstruct", "--config", "b.json"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("shots_count") && msg.contains("line 3"), "{msg}");
}

#[test]
fn truth_can_be_omitted() {
    let t = TempDir::new().unwrap();
    config(
        t.path(),
        "c.json",
        r#"{"scheme": "weak", "channel": {"name": "hadamard"}, "truth": false, "output": "out"}"#,
    );
    assert!(wqpt(t.path(), &["reconstruct", "--config", "c.json"]).status.success());
    let r = json(&t.path().join("out/report.json"));
    assert!(r.get("max_abs_err").is_none() && r.get("frob_err").is_none());
    let csv = fs::read_to_string(t.path().join("out/report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,ok"));
}

#[test]
fn sampled_outputs_are_byte_identical_and_csv_parses() {
    let t = TempDir::new().unwrap();
    let body = |out: &str| {
        format!(
            r#"{{"scheme": "weak", "channel": {{"name": "amplitude_damping", "gamma": 0.3}},
                "bases": {{"psi": "fourier", "alpha": "computational", "beta": "computational", "phi": "fourier"}},
                "coupling": {{"g": 0.05, "lambda": 0.05}},
                "mode": "sampled", "shots": 20000, "seed": 11, "output": "{out}"}}"#
        )
    };
    config(t.path(), "a.json", &body("a"));
    config(t.path(), "b.json", &body("b"));
    for c in ["a.json", "b.json"] {
        let o = wqpt(t.path(), &["reconstruct", "--config", c]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["report.json", "report.csv"] {
        assert_eq!(
            fs::read(t.path().join("a").join(f)).unwrap(),
            fs::read(t.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let mut rd = csv::Reader::from_path(t.path().join("a/report.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["i1", "i2", "i3", "i4", "chi_re", "chi_im", "truth_re", "truth_im", "abs_err", "status"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        if &r[9] == "ok" {
            let _: f64 = r[4].parse().unwrap();
            let _: f64 = r[8].parse().unwrap();
        }
    }
}

#[test]
fn strict_fails_on_starved_entries() {
    let t = TempDir::new().unwrap();
    config(
        t.path(),
        "c.json",
        r#"{"scheme": "weak", "channel": {"name": "identity"}, "mode": "sampled", "shots": 1000, "output": "out"}"#,
    );
    assert!(wqpt(t.path(), &["reconstruct", "--config", "c.json"]).status.success());
    let r = json(&t.path().join("out/report.json"));
    assert!(!r["missing"].as_array().unwrap().is_empty());
    let o = wqpt(t.path(), &["reconstruct", "--config", "c.json", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("undetermined"));
}

#[test]
fn output_dir_from_environment() {
    let t = TempDir::new().unwrap();
    config(t.path(), "c.json", r#"{"scheme": "ancilla", "channel": {"name": "identity"}}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_wqpt"))
        .args(["reconstruct", "--config", "c.json"])
        .current_dir(t.path())
        .env("WQPT_OUTPUT_DIR", "envdir")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&t.path().join("envdir/report.json"));
    assert_eq!(r["setup_count"], 1);
    assert_eq!(r["scheme"], "ancilla");
}

#[test]
fn coupling_sweep_converges() {
    let t = TempDir::new().unwrap();
    config(
        t.path(),
        "c.json",
        r#"{"scheme": "weak", "channel": {"name": "identity"}, "mode": "exact", "output": "out"}"#,
    );
    let o = wqpt(t.path(), &["sweep", "--config", "c.json", "--axis", "coupling", "--points", "8e-3,4e-3,2e-3,1e-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&t.path().join("out/sweep.summary.json"));
    assert_eq!(s["strictly_decreasing"], true);
    let mut rd = csv::Reader::from_path(t.path().join("out/sweep.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap(),
        vec!["point", "g", "lambda", "shots", "max_abs_err", "frob_err", "setup_count"]
    );
    let g: Vec<f64> = rd.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(g, [8e-3, 4e-3, 2e-3, 1e-3]);

    let o = wqpt(t.path(), &["sweep", "--config", "c.json", "--axis", "coupling", "--points", "1e-3"]);
    assert!(o.status.success());
    let n = fs::read_to_string(t.path().join("out/sweep.csv")).unwrap().lines().count();
    assert_eq!(n, 2);
}

#[test]
fn shot_sweep_follows_inverse_square_root() {
    let t = TempDir::new().unwrap();
    config(
        t.path(),
        "c.json",
        r#"{"scheme": "weak", "channel": {"name": "hadamard"}, "coupling": {"g": 0.05, "lambda": 0.05},
            "bases": {"psi": "fourier", "alpha": "computational", "beta": "computational", "phi": "fourier"},
            "seed": 5, "output": "out"}"#,
    );
    let o = wqpt(t.path(), &["sweep", "--config", "c.json", "--axis", "shots", "--points", "1e4,1e5,1e6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let slope = json(&t.path().join("out/sweep.summary.json"))["loglog_slope"].as_f64().unwrap();
    assert!((-1.0..=-0.25).contains(&slope), "slope {slope}");
}

#[test]
fn error_accumulation_outputs() {
    let t = TempDir::new().unwrap();
    config(
        t.path(),
        "c.json",
        r#"{"scheme": "weak", "channel": {"name": "depolarizing", "p": 0.3}, "seed": 4, "output": "out"}"#,
    );
    let o = wqpt(t.path(), &["error-accum", "--config", "c.json", "--delta", "0", "--trials", "10", "--dims", "2,3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rd = csv::Reader::from_path(t.path().join("out/accum.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["dim", "trial", "delta", "mean_abs", "max_abs"]);
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() <= 1e-10));

    let o = wqpt(t.path(), &["error-accum", "--config", "c.json", "--delta", "1e-3", "--trials", "10", "--dims", "2"]);
    assert!(o.status.success());
    let s = json(&t.path().join("out/accum.summary.json"));
    let r = s["dims"][0]["mean_over_delta"].as_f64().unwrap();
    assert!(r > 0.1 && r < 10.0, "{r}");

    let o = wqpt(t.path(), &["error-accum", "--config", "c.json", "--delta", "0.5", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn channel_listing() {
    let t = TempDir::new().unwrap();
    let o = wqpt(t.path(), &["channels"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("amplitude_damping") && text.contains("tilted_qubit"));

    let o = wqpt(t.path(), &["channels", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["channels"].as_array().unwrap().len() >= 4);
    let tilted = v["pointers"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "tilted_qubit")
        .unwrap();
    assert_eq!(tilted["r4_only"], true);
    assert!((tilted["im_c1_sq"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!((tilted["c2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn every_scheme_runs_from_config() {
    let t = TempDir::new().unwrap();
    let cases = [
        (r#"{"scheme": "strong", "channel": {"name": "amplitude_damping", "gamma": 0.5}, "mode": "exact", "coupling": {"g": 1.0, "lambda": 1.0}, "output": "s"}"#, 1e-9),
        (r#"{"scheme": "sigma-x", "channel": {"name": "hadamard"}, "output": "x"}"#, 1e-8),
        (r#"{"scheme": "sigma-x", "channel": {"name": "hadamard"}, "pointer": {"name": "tilted_qubit"}, "extraction": "r4_only", "output": "x4"}"#, 1e-8),
        (r#"{"scheme": "multi", "channel": {"name": "cnot"}, "dims": [[2, 2], [2, 2]], "output": "m"}"#, 1e-8),
        (r#"{"scheme": "weak-single-setup", "channel": {"name": "identity", "dim": 3}, "mode": "exact", "output": "w"}"#, 1e-4),
        (r#"{"scheme": "weak", "channel": {"name": "depolarizing", "p": 0.2}, "pointer": {"name": "gaussian", "delta": 1.0}, "output": "g"}"#, 1e-8),
    ];
    for (k, (body, tol)) in cases.iter().enumerate() {
        let name = format!("c{k}.json");
        config(t.path(), &name, body);
        let o = wqpt(t.path(), &["reconstruct", "--config", &name]);
        assert!(o.status.success(), "{body}: {}", stderr(&o));
        let out = serde_json::from_str::<Value>(body).unwrap()["output"].as_str().unwrap().to_string();
        let r = json(&t.path().join(out).join("report.json"));
        let err = r["max_abs_err"].as_f64().unwrap();
        assert!(err <= *tol, "{body}: {err}");
    }
}
