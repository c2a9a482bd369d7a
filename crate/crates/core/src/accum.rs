//! Systematic-error accumulation: every preparation and measurement ket is
//! rotated by a small random angle, the perturbative experiment runs with
//! the rotated kets, and the analysis assumes the nominal ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::exec::Exec;
use crate::numkit::CMatrix;
use crate::pointer::PointerSpec;
use crate::process::{chi_from_channel, BasisQuartet, KrausChannel};
use crate::random::rotate_ket;
use crate::report::{Coupling, Mode};
use crate::sampling::block_seed;
use crate::weak::{assemble, collect_records, WeakRun};

pub const MAX_DELTA: f64 = 1e-2;
pub const MIN_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumTrial {
    pub dim: usize,
    pub trial: usize,
    pub delta: f64,
    /// Mean of `|χ̂ - χ|` over all entries.
    pub mean_abs: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumSummary {
    pub dim: usize,
    pub delta: f64,
    pub trials: Vec<AccumTrial>,
    /// Trial average of `mean_abs`.
    pub mean_abs: f64,
    /// `mean_abs / delta`; `NaN` at `delta = 0`.
    pub mean_over_delta: f64,
}

fn rotate_columns(m: &CMatrix, delta: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let cols: Vec<_> = m
        .column_iter()
        .map(|c| rotate_ket(&c.into_owned(), delta, rng))
        .collect();
    CMatrix::from_columns(&cols)
}

/// Each basis vector of all four bases rotated independently by `delta`.
pub fn perturb_quartet(bases: &BasisQuartet, delta: f64, rng: &mut ChaCha8Rng) -> BasisQuartet {
    BasisQuartet::new_unchecked(
        rotate_columns(bases.psi(), delta, rng),
        rotate_columns(bases.alpha(), delta, rng),
        rotate_columns(bases.beta(), delta, rng),
        rotate_columns(bases.phi(), delta, rng),
    )
}

/// Runs `trials` perturbed reconstructions of `ch` against its oracle.
#[allow(clippy::too_many_arguments)]
pub fn accumulate(
    ch: &KrausChannel,
    bases: &BasisQuartet,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
    delta: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<AccumSummary> {
    if !(0.0..=MAX_DELTA).contains(&delta) {
        return Err(QptError::ParameterOutOfRange {
            name: "delta",
            value: delta,
            lo: 0.0,
            hi: MAX_DELTA,
        });
    }
    if trials < MIN_TRIALS {
        return Err(QptError::Contract(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let dim = bases.d_in();
    let truth = chi_from_channel(ch, bases)?;
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(block_seed(seed, dim as u64, trial as u64, 0));
        let perturbed = perturb_quartet(bases, delta, &mut rng);
        let run = WeakRun::new(ch, &perturbed, pu, pv)
            .coupling(coupling)
            .mode(Mode::Perturbative)
            .exec(exec);
        let records = collect_records(&run)?;
        let (chi, _, missing) = assemble(&records, bases, pu, pv, coupling)?;
        if let Some(idx) = missing.first() {
            return Err(QptError::Contract(format!("entry {idx:?} starved under perturbation")));
        }
        let diffs: Vec<f64> = chi
            .entries()
            .iter()
            .zip(truth.entries())
            .map(|(a, b)| (a - b).norm())
            .collect();
        out.push(AccumTrial {
            dim,
            trial,
            delta,
            mean_abs: diffs.iter().sum::<f64>() / diffs.len() as f64,
            max_abs: diffs.iter().copied().fold(0.0, f64::max),
        });
    }
    let mean_abs = out.iter().map(|t| t.mean_abs).sum::<f64>() / trials as f64;
    Ok(AccumSummary {
        dim,
        delta,
        trials: out,
        mean_abs,
        mean_over_delta: if delta > 0.0 { mean_abs / delta } else { f64::NAN },
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| v.is_nan() || v <= 0.0) {
        return Err(QptError::Contract("slope fit needs at least two positive points".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::qubit_pointer;
    use crate::process::depolarizing;

    #[test]
    fn zero_delta_reproduces_oracle() {
        let ch = depolarizing(0.3, 2).unwrap();
        let q = qubit_pointer();
        let s = accumulate(
            &ch, &BasisQuartet::default_for(2, 2), &q, &q, Coupling::default(), 0.0, 10, 1,
            Exec::Serial,
        )
        .unwrap();
        assert!(s.trials.iter().all(|t| t.max_abs <= 1e-10));
        assert!(s.mean_over_delta.is_nan());
    }

    #[test]
    fn guards() {
        let ch = KrausChannel::identity(2);
        let b = BasisQuartet::default_for(2, 2);
        let q = qubit_pointer();
        let c = Coupling::default();
        assert!(accumulate(&ch, &b, &q, &q, c, 0.1, 10, 0, Exec::Serial).is_err());
        assert!(accumulate(&ch, &b, &q, &q, c, 1e-3, 5, 0, Exec::Serial).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn perturbation_is_seeded_and_small() {
        let b = BasisQuartet::default_for(3, 3);
        let p1 = perturb_quartet(&b, 1e-3, &mut ChaCha8Rng::seed_from_u64(9));
        let p2 = perturb_quartet(&b, 1e-3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(p1, p2);
        let d = crate::numkit::max_abs_diff(p1.alpha(), b.alpha());
        assert!(d > 0.0 && d <= 1e-3 + 1e-12);
    }
}
