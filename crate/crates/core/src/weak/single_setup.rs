//! All weak measurements of one setup in a single run: one pre-channel
//! pointer per `|α_i2><α_i2|` and one post-channel pointer per
//! `|β_i3><β_i3|`, coupled in sequence. Each pair's r-values are read from
//! the same final state; the other pointers only perturb them at fourth
//! order in the couplings.

use std::time::Instant;

use super::{assemble, record_from_pointer_state, Coupling, RValueRecord};
use crate::error::{QptError, Result};
use crate::exec::Exec;
use crate::joint::JointState;
use crate::numkit::projector;
use crate::pointer::PointerSpec;
use crate::process::{BasisQuartet, KrausChannel};
use crate::report::{Mode, ReconstructionReport, Scheme};

pub const DEFAULT_JOINT_CAP: usize = 4096;

/// Per-pointer strengths: `g[i2]` before the channel, `lam[i3]` after.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupStrengths {
    pub g: Vec<f64>,
    pub lam: Vec<f64>,
}

impl SetupStrengths {
    pub fn uniform(c: Coupling, d_in: usize, d_out: usize) -> Self {
        SetupStrengths {
            g: vec![c.g; d_in],
            lam: vec![c.lam; d_out],
        }
    }

    /// All strengths must be zero, or positive and within a factor 4 of a
    /// common scale.
    fn validate(&self) -> Result<()> {
        let all: Vec<f64> = self.g.iter().chain(&self.lam).copied().collect();
        if all.iter().all(|&s| s == 0.0) {
            return Ok(());
        }
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(0.0, f64::max);
        if lo.is_nan() || lo <= 0.0 || hi / lo > 16.0 || !hi.is_finite() {
            return Err(QptError::Contract(format!(
                "single-setup strengths must share one order of magnitude (range {lo:e}..{hi:e})"
            )));
        }
        Ok(())
    }
}

/// Records for every `(i2, i3, i4)` of setup `input_index`, in that
/// nesting order, from one joint run with exact couplings.
pub fn simulate_parallel_setup(
    ch: &KrausChannel,
    bases: &BasisQuartet,
    input_index: usize,
    pu: &PointerSpec,
    pv: &PointerSpec,
    strengths: &SetupStrengths,
    cap: usize,
) -> Result<Vec<RValueRecord>> {
    let (di, dout) = (bases.d_in(), bases.d_out());
    if ch.d_in() != di || ch.d_out() != dout {
        return Err(QptError::Shape("channel and bases disagree on dimensions".into()));
    }
    if strengths.g.len() != di || strengths.lam.len() != dout {
        return Err(QptError::Shape(format!(
            "need {di} pre-channel and {dout} post-channel strengths"
        )));
    }
    if input_index >= di {
        return Err(QptError::Shape(format!("input index {input_index} out of range")));
    }
    strengths.validate()?;
    let pointers = pu.dim().pow(di as u32) * pv.dim().pow(dout as u32);
    let dim = di.max(dout).saturating_mul(pointers);
    if dim > cap {
        return Err(QptError::ResourceCap { dim, cap });
    }

    let rho = projector(&bases.psi_ket(input_index));
    let mut factors = vec![&rho];
    factors.extend(std::iter::repeat_n(pu.sigma(), di));
    factors.extend(std::iter::repeat_n(pv.sigma(), dout));
    let mut st = JointState::product(&factors)?;
    for i2 in 0..di {
        let a = projector(&bases.alpha_ket(i2));
        st.couple_exact(&a, pu.p_obs(), strengths.g[i2], 0, 1 + i2)?;
    }
    st.apply_channel(ch, &[0], &[dout])?;
    for i3 in 0..dout {
        let b = projector(&bases.beta_ket(i3));
        st.couple_exact(&b, pv.p_obs(), strengths.lam[i3], 0, 1 + di + i3)?;
    }

    let mut out = vec![RValueRecord::starved(0.0); di * dout * dout];
    for i4 in 0..dout {
        let cond = st.condition(&bases.phi_ket(i4), 0)?;
        for i2 in 0..di {
            for i3 in 0..dout {
                let uv = cond.reduced(&[1 + i2, 1 + di + i3])?;
                out[(i2 * dout + i3) * dout + i4] = record_from_pointer_state(&uv, pu, pv);
            }
        }
    }
    Ok(out)
}

/// Reconstruction from `d_in` single-setup runs with uniform strengths.
pub fn reconstruct_single_setup(
    ch: &KrausChannel,
    bases: &BasisQuartet,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
    cap: usize,
    exec: Exec,
) -> Result<ReconstructionReport> {
    let start = Instant::now();
    pu.constants().require_main_scheme()?;
    pv.constants().require_main_scheme()?;
    let (di, dout) = (bases.d_in(), bases.d_out());
    let strengths = SetupStrengths::uniform(coupling, di, dout);
    let per_setup = exec.try_map(di, |i1| {
        simulate_parallel_setup(ch, bases, i1, pu, pv, &strengths, cap)
    })?;
    let records: Vec<RValueRecord> = per_setup.into_iter().flatten().collect();
    let (chi, tilde, missing) = assemble(&records, bases, pu, pv, coupling)?;
    Ok(ReconstructionReport {
        scheme: Scheme::WeakSingleSetup,
        mode: Mode::Exact,
        couplings: vec![coupling],
        chi_hat: chi,
        chi_tilde_hat: Some(tilde),
        missing,
        truth_distance: None,
        setup_count: di,
        values_per_parameter: 5,
        extra_experiments_per_parameter: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics: Vec::new(),
    })
}
