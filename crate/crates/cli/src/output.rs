//! Report files. JSON floats carry 12 significant digits, CSV floats 9.
//! Wall-clock data goes to a separate `.meta.json` so the main files are
//! byte-identical across runs with the same config and seed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use wqpt::{ChiTensor, ReconstructionReport};

use crate::pipeline::Outcome;

pub const JSON_DIGITS: usize = 12;
pub const CSV_DIGITS: usize = 9;

pub const REPORT_CSV_HEADER: [&str; 10] = [
    "i1", "i2", "i3", "i4", "chi_re", "chi_im", "truth_re", "truth_im", "abs_err", "status",
];
pub const SWEEP_CSV_HEADER: [&str; 7] =
    ["point", "g", "lambda", "shots", "max_abs_err", "frob_err", "setup_count"];
pub const ACCUM_CSV_HEADER: [&str; 5] = ["dim", "trial", "delta", "mean_abs", "max_abs"];

/// `x` rounded to `digits` significant digits; non-finite values map to `None`.
pub fn round_sig(x: f64, digits: usize) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    format!("{:.*e}", digits - 1, x).parse().ok()
}

pub fn json_num(x: f64) -> Value {
    round_sig(x, JSON_DIGITS).map_or(Value::Null, Value::from)
}

pub fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format!("{:.*e}", CSV_DIGITS - 1, x)
    } else {
        String::new()
    }
}

fn json_complex(z: Complex64) -> Value {
    json!([json_num(z.re), json_num(z.im)])
}

/// Nested `[i1][i2][i3][i4] -> [re, im]`, `null` where `skip` holds.
fn chi_json(chi: &ChiTensor, skip: impl Fn([usize; 4]) -> bool) -> Value {
    let (di, dout) = (chi.d_in(), chi.d_out());
    let cell = |idx: [usize; 4]| if skip(idx) { Value::Null } else { json_complex(chi.get(idx)) };
    Value::Array(
        (0..di)
            .map(|a| {
                Value::Array(
                    (0..di)
                        .map(|b| {
                            Value::Array(
                                (0..dout)
                                    .map(|c| Value::Array((0..dout).map(|d| cell([a, b, c, d])).collect()))
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn report_json(out: &Outcome) -> Value {
    let r = &out.report;
    let missing = |idx| r.is_missing(idx);
    let mut doc = json!({
        "scheme": to_value(&r.scheme),
        "mode": to_value(&r.mode),
        "couplings": r.couplings.iter().map(|c| json!({"g": json_num(c.g), "lambda": json_num(c.lam)})).collect::<Vec<_>>(),
        "d_in": r.chi_hat.d_in(),
        "d_out": r.chi_hat.d_out(),
        "representation": to_value(&r.chi_hat.representation()),
        "setup_count": r.setup_count,
        "values_per_parameter": r.values_per_parameter,
        "extra_experiments_per_parameter": r.extra_experiments_per_parameter,
        "missing": r.missing,
        "diagnostics": r.diagnostics,
        "chi": chi_json(&r.chi_hat, missing),
    });
    if let Some(t) = &r.chi_tilde_hat {
        doc["chi_tilde"] = chi_json(t, missing);
    }
    if let Some(d) = r.truth_distance {
        doc["max_abs_err"] = json_num(d.max_abs);
        doc["frob_err"] = json_num(d.frobenius);
    }
    doc
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

fn write_report_csv(path: &Path, r: &ReconstructionReport, truth: Option<&ChiTensor>) -> Result<()> {
    let mut w = csv_writer(path, &REPORT_CSV_HEADER)?;
    for idx in r.chi_hat.indices() {
        let missing = r.is_missing(idx);
        let z = r.chi_hat.get(idx);
        let t = truth.map(|t| t.get(idx));
        let mut row: Vec<String> = idx.iter().map(ToString::to_string).collect();
        if missing {
            row.extend([String::new(), String::new()]);
        } else {
            row.extend([csv_num(z.re), csv_num(z.im)]);
        }
        match t {
            Some(t) => row.extend([csv_num(t.re), csv_num(t.im)]),
            None => row.extend([String::new(), String::new()]),
        }
        row.push(match (t, missing) {
            (Some(t), false) => csv_num((z - t).norm()),
            _ => String::new(),
        });
        row.push(if missing { "missing" } else { "ok" }.into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub struct Written {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub meta: PathBuf,
}

pub fn write_report(dir: &Path, stem: &str, out: &Outcome, meta: Value) -> Result<Written> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let w = Written {
        json: dir.join(format!("{stem}.json")),
        csv: dir.join(format!("{stem}.csv")),
        meta: dir.join(format!("{stem}.meta.json")),
    };
    write_json(&w.json, &report_json(out))?;
    write_report_csv(&w.csv, &out.report, out.truth.as_ref())?;
    write_json(&w.meta, &meta)?;
    Ok(w)
}

pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path, header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
