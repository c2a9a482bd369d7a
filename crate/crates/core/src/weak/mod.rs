//! The main scheme: two weak couplings around the process, a complete
//! post-selection, and the linear inversion from r-values to χ.

mod inversion;
mod simulate;
mod single_setup;

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use crate::report::{Coupling, Mode, ReconstructionReport, Scheme};
pub use inversion::{
    forward_matrix, inverse_matrix, r_from_x, scaled_inverse, x_from_r, x_vector_from_r,
};
pub use simulate::{
    evolve_exact, outcomes_exact, outcomes_perturbative, outcomes_sampled,
    record_from_pointer_state, records_from_table, second_order_pointer_state,
    simulate_run_exact, simulate_run_perturbative, simulate_run_sampled, READOUTS,
};
pub use single_setup::{
    reconstruct_single_setup, simulate_parallel_setup, SetupStrengths, DEFAULT_JOINT_CAP,
};

use crate::error::{QptError, Result};
use crate::exec::Exec;
use crate::numkit::{projector, tol, CMatrix, CVector};
use crate::pointer::PointerSpec;
use crate::process::{BasisQuartet, ChiTensor, KrausChannel, Representation};

/// One choice of input state, observables and post-selection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub rho: CMatrix,
    pub a: CMatrix,
    pub b: CMatrix,
    /// Complete post-selection basis as columns.
    pub post: CMatrix,
    pub post_index: usize,
}

impl Setting {
    /// `ρ = |ψ_i1><ψ_i1|`, `A = |α_i2><α_i2|`, `B = |β_i3><β_i3|`,
    /// post-selection on `|φ_i4>`.
    pub fn from_indices(bases: &BasisQuartet, [i1, i2, i3, i4]: [usize; 4]) -> Self {
        Setting {
            rho: projector(&bases.psi_ket(i1)),
            a: projector(&bases.alpha_ket(i2)),
            b: projector(&bases.beta_ket(i3)),
            post: bases.phi().clone(),
            post_index: i4,
        }
    }

    pub fn post_ket(&self, f: usize) -> CVector {
        self.post.column(f).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    /// Post-selection probability below the starvation threshold.
    Starved,
    /// Fewer than two conditional samples in some readout configuration.
    Empty,
}

/// Conditional pointer correlators `r1..r4` and the post-selection
/// probability for one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RValueRecord {
    pub r: [f64; 4],
    pub p_f: f64,
    /// `None` for exact expectation values.
    pub shots: Option<u64>,
    /// Conditional sample count per readout configuration.
    pub samples: Option<[u64; 4]>,
    pub std_err: Option<[f64; 4]>,
    pub status: RecordStatus,
}

impl RValueRecord {
    pub fn exact(r: [f64; 4], p_f: f64) -> Self {
        RValueRecord {
            r,
            p_f,
            shots: None,
            samples: None,
            std_err: None,
            status: RecordStatus::Ok,
        }
    }

    pub fn starved(p_f: f64) -> Self {
        RValueRecord {
            status: RecordStatus::Starved,
            ..RValueRecord::exact([0.0; 4], p_f.max(0.0))
        }
    }

    pub fn is_usable(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

/// `X / (<φ_i4|β_i3> <α_i2|ψ_i1>)`
pub fn chi_entry(x: Complex64, bases: &BasisQuartet, idx: [usize; 4]) -> Result<Complex64> {
    let [i1, i2, i3, i4] = idx;
    divide_checked(x, bases.output_overlap(i3, i4) * bases.input_overlap(i1, i2), idx)
}

/// `X̃ / (<β_i3|φ_i4> <α_i2|ψ_i1>)`, the tilde-representation entry.
pub fn chi_entry_tilde(xt: Complex64, bases: &BasisQuartet, idx: [usize; 4]) -> Result<Complex64> {
    let [i1, i2, i3, i4] = idx;
    divide_checked(
        xt,
        bases.output_overlap(i3, i4).conj() * bases.input_overlap(i1, i2),
        idx,
    )
}

pub(crate) fn divide_checked(x: Complex64, denom: Complex64, idx: [usize; 4]) -> Result<Complex64> {
    if denom.norm() <= tol::OVERLAP {
        return Err(QptError::DegenerateOverlap {
            index: idx,
            magnitude: denom.norm(),
        });
    }
    Ok(x / denom)
}

/// Everything a main-scheme reconstruction needs.
#[derive(Debug, Clone, Copy)]
pub struct WeakRun<'a> {
    pub channel: &'a KrausChannel,
    pub bases: &'a BasisQuartet,
    pub pu: &'a PointerSpec,
    pub pv: &'a PointerSpec,
    pub coupling: Coupling,
    pub mode: Mode,
    pub exec: Exec,
}

impl<'a> WeakRun<'a> {
    pub fn new(
        channel: &'a KrausChannel,
        bases: &'a BasisQuartet,
        pu: &'a PointerSpec,
        pv: &'a PointerSpec,
    ) -> Self {
        WeakRun {
            channel,
            bases,
            pu,
            pv,
            coupling: Coupling::default(),
            mode: Mode::Perturbative,
            exec: Exec::default(),
        }
    }

    pub fn coupling(mut self, c: Coupling) -> Self {
        self.coupling = c;
        self
    }

    pub fn mode(mut self, m: Mode) -> Self {
        self.mode = m;
        self
    }

    pub fn exec(mut self, e: Exec) -> Self {
        self.exec = e;
        self
    }

    /// Records of every post-selection outcome for the setting
    /// `(i1, i2, i3, ·)`.
    pub fn outcomes(&self, i1: usize, i2: usize, i3: usize) -> Result<Vec<RValueRecord>> {
        let s = Setting::from_indices(self.bases, [i1, i2, i3, 0]);
        let (ch, pu, pv, c) = (self.channel, self.pu, self.pv, self.coupling);
        match self.mode {
            Mode::Exact => outcomes_exact(ch, &s, pu, pv, c),
            Mode::Perturbative => outcomes_perturbative(ch, &s, pu, pv, c),
            Mode::Sampled { shots, seed } => {
                let (di, dout) = (self.bases.d_in(), self.bases.d_out());
                let stream = ((i1 * di + i2) * dout + i3) as u64;
                outcomes_sampled(ch, &s, pu, pv, c, shots, seed, stream)
            }
        }
    }
}

/// Records for all `(i1, i2, i3, i4)`, in χ flat order.
pub fn collect_records(run: &WeakRun<'_>) -> Result<Vec<RValueRecord>> {
    let (di, dout) = (run.bases.d_in(), run.bases.d_out());
    if run.channel.d_in() != di || run.channel.d_out() != dout {
        return Err(QptError::Shape("channel and bases disagree on dimensions".into()));
    }
    let groups = run.exec.try_map(di * di * dout, |k| {
        let (i1, i2, i3) = (k / (di * dout), (k / dout) % di, k % dout);
        run.outcomes(i1, i2, i3)
    })?;
    Ok(groups.into_iter().flatten().collect())
}

/// Assembles χ and χ̃ from records in χ flat order.
pub(crate) fn assemble(
    records: &[RValueRecord],
    bases: &BasisQuartet,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<(ChiTensor, ChiTensor, Vec<[usize; 4]>)> {
    let (ku, kv) = (pu.constants(), pv.constants());
    let inv = scaled_inverse(&ku, &kv, coupling)?;
    let mut chi = ChiTensor::zeros(bases.clone(), Representation::Standard);
    let mut tilde = ChiTensor::zeros(bases.clone(), Representation::Tilde);
    let mut missing = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        let idx = chi.index_of(k);
        if !rec.is_usable() {
            missing.push(idx);
            continue;
        }
        let rhs = nalgebra::DVector::from_iterator(
            4,
            rec.r.iter().map(|&r| Complex64::new(r * rec.p_f, 0.0)),
        );
        let x = &inv * rhs;
        chi.set(idx, chi_entry(x[0], bases, idx)?);
        tilde.set(idx, chi_entry_tilde(x[1], bases, idx)?);
    }
    Ok((chi, tilde, missing))
}

/// Full main-scheme reconstruction: `d_in` setups, every `(i2, i3)`
/// observable pair per setup, all post-selection outcomes per run.
pub fn reconstruct(run: &WeakRun<'_>) -> Result<ReconstructionReport> {
    let start = Instant::now();
    let (ku, kv) = (run.pu.constants(), run.pv.constants());
    ku.require_main_scheme()?;
    kv.require_main_scheme()?;
    let records = collect_records(run)?;
    let (chi, tilde, missing) = assemble(&records, run.bases, run.pu, run.pv, run.coupling)?;
    let mut diagnostics = Vec::new();
    if !missing.is_empty() {
        diagnostics.push(format!(
            "{} of {} entries undetermined (starved or empty post-selection)",
            missing.len(),
            records.len()
        ));
    }
    Ok(ReconstructionReport {
        scheme: Scheme::Weak,
        mode: run.mode,
        couplings: vec![run.coupling],
        chi_hat: chi,
        chi_tilde_hat: Some(tilde),
        missing,
        truth_distance: None,
        setup_count: run.bases.d_in(),
        values_per_parameter: 5,
        extra_experiments_per_parameter: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics,
    })
}

#[cfg(test)]
mod tests;
