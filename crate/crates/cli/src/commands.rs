use std::path::Path;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use wqpt::accum::{accumulate, loglog_slope};
use wqpt::channels::{standard_channel, CHANNEL_NAMES};
use wqpt::pointer::{gaussian_pointer, qubit_pointer, tilted_qubit_pointer};
use wqpt::{Coupling, Exec, Mode, PointerSpec};

use crate::config::{RunConfig, SchemeName};
use crate::output::{
    csv_num, json_num, write_json, write_report, write_rows, ACCUM_CSV_HEADER, SWEEP_CSV_HEADER,
};
use crate::pipeline::{run, run_with};

fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn meta(config: &Path, started: Instant, extra: Value) -> Value {
    json!({
        "config": config.display().to_string(),
        "finished_unix_s": unix_time(),
        "runtime_ms": started.elapsed().as_secs_f64() * 1e3,
        "parallel": Exec::default().is_parallel(),
        "extra": extra,
    })
}

pub fn reconstruct(config: &Path, strict: bool) -> Result<ExitCode> {
    let started = Instant::now();
    let cfg = RunConfig::load(config)?;
    let out = run(&cfg)?;
    let r = &out.report;
    let dir = cfg.output_dir();
    let written = write_report(
        &dir,
        "report",
        &out,
        meta(config, started, json!({"library_runtime_ms": r.runtime_ms})),
    )?;

    print!(
        "{:?} {} d_in={} d_out={} setups={} values/parameter={}",
        r.scheme,
        r.mode.label(),
        r.chi_hat.d_in(),
        r.chi_hat.d_out(),
        r.setup_count,
        r.values_per_parameter
    );
    if let Some(d) = r.truth_distance {
        print!(" max_abs_err={:.3e} frob_err={:.3e}", d.max_abs, d.frobenius);
    }
    println!();
    println!("wrote {}", written.json.display());

    if !r.missing.is_empty() {
        eprintln!("{} entries undetermined (starved post-selection):", r.missing.len());
        for idx in r.missing.iter().take(16) {
            eprintln!("  {idx:?}");
        }
        for d in &r.diagnostics {
            eprintln!("  note: {d}");
        }
        if strict {
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Coupling,
    Shots,
}

pub fn sweep(config: &Path, axis: Axis, points: &[f64]) -> Result<ExitCode> {
    let started = Instant::now();
    let cfg = RunConfig::load(config)?;
    if !cfg.truth {
        bail!("a sweep reports errors against the channel and needs `truth: true`");
    }
    if points.is_empty() {
        bail!("no sweep points");
    }
    let ch = cfg.channel()?;
    let n = cfg.particle_dims(&ch)?.len();
    let mut rows = Vec::with_capacity(points.len());
    let mut errs = Vec::with_capacity(points.len());
    let mut runtimes = Vec::with_capacity(points.len());
    for (k, &p) in points.iter().enumerate() {
        let t = Instant::now();
        let (mode, couplings) = match axis {
            Axis::Coupling => {
                if p.is_nan() || p <= 0.0 {
                    bail!("coupling points must be positive, got {p}");
                }
                (cfg.mode(), vec![Coupling::symmetric(p); n])
            }
            Axis::Shots => {
                if p.is_nan() || p < 1.0 || p.fract() != 0.0 {
                    bail!("shot counts must be positive integers, got {p}");
                }
                let shots = p as u64;
                (Mode::Sampled { shots, seed: cfg.seed }, cfg.couplings(n)?)
            }
        };
        let out = run_with(&cfg, mode, Some(&couplings))
            .with_context(|| format!("sweep point {k} ({p})"))?;
        let d = out.report.truth_distance.expect("truth requested");
        let c = couplings[0];
        let shots = match mode {
            Mode::Sampled { shots, .. } => shots.to_string(),
            m => m.label().to_string(),
        };
        rows.push(vec![
            k.to_string(),
            csv_num(c.g),
            csv_num(c.lam),
            shots,
            csv_num(d.max_abs),
            csv_num(d.frobenius),
            out.report.setup_count.to_string(),
        ]);
        errs.push(d.max_abs);
        runtimes.push(t.elapsed().as_secs_f64() * 1e3);
    }

    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    write_rows(&dir.join("sweep.csv"), &SWEEP_CSV_HEADER, &rows)?;
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let slope = loglog_slope(points, &errs).ok();
    let summary = json!({
        "axis": match axis { Axis::Coupling => "coupling", Axis::Shots => "shots" },
        "points": points.iter().map(|&p| json_num(p)).collect::<Vec<_>>(),
        "max_abs_err": errs.iter().map(|&e| json_num(e)).collect::<Vec<_>>(),
        "strictly_decreasing": decreasing,
        "loglog_slope": slope.map_or(Value::Null, json_num),
    });
    write_json(&dir.join("sweep.summary.json"), &summary)?;
    write_json(
        &dir.join("sweep.meta.json"),
        &meta(config, started, json!({"row_runtime_ms": runtimes})),
    )?;
    println!(
        "{} points, max_abs_err strictly decreasing: {decreasing}{}",
        points.len(),
        slope.map_or(String::new(), |s| format!(", log-log slope {s:.3}"))
    );
    Ok(ExitCode::SUCCESS)
}

pub fn error_accum(config: &Path, delta: f64, trials: usize, dims: &[usize]) -> Result<ExitCode> {
    let started = Instant::now();
    let cfg = RunConfig::load(config)?;
    if cfg.scheme != SchemeName::Weak {
        bail!("error accumulation runs the weak scheme; set scheme to \"weak\"");
    }
    if dims.is_empty() {
        bail!("no dimensions given");
    }
    let (pu, pv) = cfg.pointers()?;
    let c = cfg.couplings(1)?[0];
    let mut rows = Vec::new();
    let mut per_dim = Vec::new();
    for &d in dims {
        let spec = cfg
            .channel
            .at_dim(d)
            .with_context(|| format!("channel at dimension {d}"))?;
        let ch = standard_channel(&spec)?;
        let bases = cfg.bases.build(d, d)?;
        let s = accumulate(&ch, &bases, &pu, &pv, c, delta, trials, cfg.seed, Exec::default())?;
        for t in &s.trials {
            rows.push(vec![
                t.dim.to_string(),
                t.trial.to_string(),
                csv_num(t.delta),
                csv_num(t.mean_abs),
                csv_num(t.max_abs),
            ]);
        }
        per_dim.push(s);
    }
    let ratios: Vec<f64> = per_dim.iter().map(|s| s.mean_over_delta).collect();
    let spread = if ratios.iter().all(|r| r.is_finite() && *r > 0.0) {
        let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
        let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
        hi / lo
    } else {
        f64::NAN
    };

    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    write_rows(&dir.join("accum.csv"), &ACCUM_CSV_HEADER, &rows)?;
    let summary = json!({
        "delta": json_num(delta),
        "trials": trials,
        "dims": per_dim.iter().map(|s| json!({
            "dim": s.dim,
            "mean_abs": json_num(s.mean_abs),
            "mean_over_delta": json_num(s.mean_over_delta),
            "mean_max_abs": json_num(s.trials.iter().map(|t| t.max_abs).sum::<f64>() / s.trials.len() as f64),
        })).collect::<Vec<_>>(),
        "max_to_min_ratio": json_num(spread),
    });
    write_json(&dir.join("accum.summary.json"), &summary)?;
    write_json(&dir.join("accum.meta.json"), &meta(config, started, Value::Null))?;
    for s in &per_dim {
        println!("d={}: mean |Δχ|/δ = {:.4}", s.dim, s.mean_over_delta);
    }
    if spread.is_finite() {
        println!("max/min ratio across dimensions: {spread:.3}");
    }
    Ok(ExitCode::SUCCESS)
}

fn pointer_entry(name: &str, params: Value, p: &PointerSpec) -> Value {
    let k = p.constants();
    json!({
        "name": name,
        "params": params,
        "dim": p.dim(),
        "c1": [json_num(k.c1.re), json_num(k.c1.im)],
        "c2": json_num(k.c2),
        "im_c1_sq": json_num(k.im_c1_sq),
        "main_scheme": k.supports_main_scheme(),
        "r4_only": k.im_c1_sq.abs() > 1e-9,
    })
}

pub fn listing() -> Result<Value> {
    let channel_params = |name: &str| -> Value {
        match name {
            "identity" => json!({"dim": "integer, default 2"}),
            "unitary" => json!({"matrix": "d x d array of [re, im]"}),
            "hadamard" | "cnot" => json!({}),
            "amplitude_damping" => json!({"gamma": "real in [0, 1]", "dim": "integer, default 2"}),
            "depolarizing" => json!({"p": "real in [0, 1]", "dim": "integer, default 2"}),
            "tensor" => json!({"factors": "list of channels, first most significant"}),
            _ => json!({"operators": "list of d_out x d_in arrays of [re, im]"}),
        }
    };
    Ok(json!({
        "channels": CHANNEL_NAMES.iter().map(|n| json!({"name": n, "params": channel_params(n)})).collect::<Vec<_>>(),
        "bases": [
            {"name": "computational", "dims": "any"},
            {"name": "fourier", "dims": "any"},
            {"name": "hadamard", "dims": "powers of two"},
            {"name": "explicit", "dims": "d x d unitary as [re, im] array"},
        ],
        "pointers": [
            pointer_entry("qubit", json!({}), &qubit_pointer()),
            pointer_entry("tilted_qubit", json!({}), &tilted_qubit_pointer()),
            pointer_entry("gaussian", json!({"delta": 1.0, "n_max": 20}), &gaussian_pointer(1.0, 20)?),
            {"name": "custom", "params": {"sigma": "density matrix", "p": "Hermitian, zero mean", "q": "Hermitian, zero mean"}},
        ],
        "schemes": [
            {"name": "weak", "modes": ["exact", "perturbative", "sampled"], "setups": "d_in", "values_per_parameter": 5},
            {"name": "weak-single-setup", "modes": ["exact"], "setups": "d_in", "values_per_parameter": 5},
            {"name": "strong", "modes": ["exact", "sampled"], "setups": "d_in", "values_per_parameter": 5, "extra_experiments_per_parameter": 3},
            {"name": "sigma-x", "modes": ["exact", "perturbative", "sampled"], "setups": 2, "values_per_parameter": 5, "extraction": ["full", "r4_only"]},
            {"name": "multi", "modes": ["exact", "perturbative", "sampled"], "setups": "d_in", "values_per_parameter": "1 + 4^N"},
            {"name": "ancilla", "modes": ["exact", "perturbative", "sampled"], "setups": 1, "values_per_parameter": 5},
        ],
        "modes": ["exact", "perturbative", "sampled"],
    }))
}

pub fn channels(as_json: bool) -> Result<ExitCode> {
    let l = listing()?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&l)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("channels:");
    for c in l["channels"].as_array().into_iter().flatten() {
        println!("  {:<18} {}", c["name"].as_str().unwrap_or(""), c["params"]);
    }
    println!("bases:");
    for b in l["bases"].as_array().into_iter().flatten() {
        println!("  {:<18} {}", b["name"].as_str().unwrap_or(""), b["dims"].as_str().unwrap_or(""));
    }
    println!("pointers:");
    for p in l["pointers"].as_array().into_iter().flatten() {
        let name = p["name"].as_str().unwrap_or("");
        if p.get("c1").is_some() {
            println!(
                "  {:<18} c1={} c2={} Im(c1²)={} main={} r4-only={}",
                name, p["c1"], p["c2"], p["im_c1_sq"], p["main_scheme"], p["r4_only"]
            );
        } else {
            println!("  {:<18} {}", name, p["params"]);
        }
    }
    println!("schemes:");
    for s in l["schemes"].as_array().into_iter().flatten() {
        print!(
            "  {:<18} modes={} setups={} values/parameter={}",
            s["name"].as_str().unwrap_or(""),
            s["modes"],
            s["setups"],
            s["values_per_parameter"]
        );
        if let Some(x) = s.get("extra_experiments_per_parameter") {
            print!(" extra experiments/parameter={x}");
        }
        println!();
    }
    Ok(ExitCode::SUCCESS)
}
