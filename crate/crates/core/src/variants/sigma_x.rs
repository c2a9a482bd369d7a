//! Single-qubit scheme with `A = B = σx` and all four bases computational.
//!
//! For input `|i>` and outcome `|f>` (bars denote bit flips):
//! `χ_iiff = p_f|i`, `χ_iīff = p_f W^A`, `χ_iif̄f = p_f W^B` and
//! `χ_iīf̄f = X^if`, where `W` are the single-pointer weak values.

use std::time::Instant;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::exec::Exec;
use crate::joint::{product_expectation, JointState};
use crate::numkit::{basis_ket, identity, pauli_x, projector, tol, CMatrix};
use crate::pointer::{readout_basis, PointerConstants, PointerSpec, Quadrature};
use crate::process::{BasisQuartet, ChiTensor, KrausChannel, Representation};
use crate::report::{Coupling, Mode, ReconstructionReport, Scheme};
use crate::sampling::{sample_readouts, Readout, SampleTable};
use crate::weak::{
    evolve_exact, record_from_pointer_state, records_from_table, second_order_pointer_state,
    x_from_r, RValueRecord, RecordStatus, Setting, READOUTS,
};

/// Statistics of one `(i, f)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitSigmaXRun {
    pub i: usize,
    pub f: usize,
    pub p_f: f64,
    /// Conditional `(<p_u>, <q_u>)`.
    pub shift_u: [f64; 2],
    /// Conditional `(<p_v>, <q_v>)`.
    pub shift_v: [f64; 2],
    pub rvals: RValueRecord,
}

/// How the `χ_iīf̄f` block is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaXExtraction {
    /// All four correlators per run.
    #[default]
    Full,
    /// The `(q, q)` correlator of all four runs only.
    R4Only,
}

/// `W = (-c1* <p> + c2 <q>) / (2 c2 Im(c1) s)` from one pointer's shifts.
pub fn weak_value_from_shifts(shift: [f64; 2], k: &PointerConstants, strength: f64) -> Result<Complex64> {
    k.require_main_scheme()?;
    if strength == 0.0 || k.c2 <= 0.0 {
        return Err(QptError::SingularInversion(format!(
            "weak value needs nonzero strength and c2 (got {strength}, {})",
            k.c2
        )));
    }
    let num = -k.c1.conj() * shift[0] + Complex64::new(k.c2 * shift[1], 0.0);
    Ok(num / (2.0 * k.c2 * k.c1.im * strength))
}

fn marginals(uv: &CMatrix, pu: &PointerSpec, pv: &PointerSpec, p_f: f64) -> ([f64; 2], [f64; 2]) {
    let (iu, iv) = (identity(pu.dim()), identity(pv.dim()));
    let m = |a: &CMatrix, b: &CMatrix| product_expectation(&[a, b], uv).re / p_f;
    (
        [m(pu.p_obs(), &iv), m(pu.q_obs(), &iv)],
        [m(&iu, pv.p_obs()), m(&iu, pv.q_obs())],
    )
}

fn run_from_state(i: usize, f: usize, uv: &CMatrix, pu: &PointerSpec, pv: &PointerSpec) -> QubitSigmaXRun {
    let rvals = record_from_pointer_state(uv, pu, pv);
    let (shift_u, shift_v) = if rvals.is_usable() {
        marginals(uv, pu, pv, rvals.p_f)
    } else {
        ([0.0; 2], [0.0; 2])
    };
    QubitSigmaXRun { i, f, p_f: rvals.p_f, shift_u, shift_v, rvals }
}

#[allow(clippy::too_many_arguments)]
fn sampled_runs(
    ch: &KrausChannel,
    s: &Setting,
    i: usize,
    pu: &PointerSpec,
    pv: &PointerSpec,
    c: Coupling,
    shots: u64,
    seed: u64,
) -> Result<Vec<QubitSigmaXRun>> {
    let st = evolve_exact(ch, s, pu, pv, c)?;
    let bu = [readout_basis(pu.p_obs()), readout_basis(pu.q_obs())];
    let bv = [readout_basis(pv.p_obs()), readout_basis(pv.q_obs())];
    let idx = |q: Quadrature| usize::from(q == Quadrature::Q);
    let mut configs: Vec<Vec<Readout<'_>>> = READOUTS
        .iter()
        .map(|&(a, b)| {
            vec![
                Readout { position: 1, basis: &bu[idx(a)] },
                Readout { position: 2, basis: &bv[idx(b)] },
            ]
        })
        .collect();
    for b in &bu {
        configs.push(vec![Readout { position: 1, basis: b }]);
    }
    for b in &bv {
        configs.push(vec![Readout { position: 2, basis: b }]);
    }
    let table = sample_readouts(&st, &[(0, &s.post)], &configs, shots, seed, i as u64)?;
    let joint = SampleTable {
        shots: table.shots,
        stats: table.stats.iter().map(|row| row[..4].to_vec()).collect(),
    };
    let recs = records_from_table(&joint);
    Ok(recs
        .into_iter()
        .enumerate()
        .map(|(f, mut rvals)| {
            let row = &table.stats[f];
            if row[4..].iter().any(|s| s.count < 2) {
                rvals.status = RecordStatus::Empty;
            }
            QubitSigmaXRun {
                i,
                f,
                p_f: rvals.p_f,
                shift_u: [row[4].mean, row[5].mean],
                shift_v: [row[6].mean, row[7].mean],
                rvals,
            }
        })
        .collect())
}

/// The four `(i, f)` runs, ordered `2 i + f`.
pub fn sigma_x_runs(
    ch: &KrausChannel,
    pu: &PointerSpec,
    pv: &PointerSpec,
    c: Coupling,
    mode: Mode,
    exec: Exec,
) -> Result<Vec<QubitSigmaXRun>> {
    if ch.d_in() != 2 || ch.d_out() != 2 {
        return Err(QptError::Shape("the σx scheme is single-qubit only".into()));
    }
    let per_input = exec.try_map(2, |i| {
        let s = Setting {
            rho: projector(&basis_ket(2, i)),
            a: pauli_x(),
            b: pauli_x(),
            post: identity(2),
            post_index: 0,
        };
        match mode {
            Mode::Exact => {
                let st = evolve_exact(ch, &s, pu, pv, c)?;
                (0..2)
                    .map(|f| {
                        let uv = st.condition(&basis_ket(2, f), 0)?;
                        Ok(run_from_state(i, f, uv.matrix(), pu, pv))
                    })
                    .collect()
            }
            Mode::Perturbative => (0..2)
                .map(|f| {
                    let uv = second_order_pointer_state(ch, &s, &basis_ket(2, f), pu, pv, c)?;
                    Ok(run_from_state(i, f, &uv, pu, pv))
                })
                .collect(),
            Mode::Sampled { shots, seed } => sampled_runs(ch, &s, i, pu, pv, c, shots, seed),
        }
    })?;
    Ok(per_input.into_iter().flatten().collect())
}

/// Pointer-free `p_f|i` for both outcomes, ordered `2 i + f`.
fn bare_probabilities(ch: &KrausChannel, mode: Mode) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for i in 0..2 {
        let mut st = JointState::product(&[&projector(&basis_ket(2, i))])?;
        st.apply_channel(ch, &[0], &[2])?;
        match mode {
            Mode::Sampled { shots, seed } => {
                let id = identity(2);
                let t = sample_readouts(&st, &[(0, &id)], &[vec![]], shots, seed, 2 + i as u64)?;
                for f in 0..2 {
                    out[2 * i + f] = t.outcome_frequency(f);
                }
            }
            _ => {
                for f in 0..2 {
                    out[2 * i + f] = st.condition(&basis_ket(2, f), 0)?.trace().re;
                }
            }
        }
    }
    Ok(out)
}

/// The r4-only linear system for the settings `(i,f), (i,f̄), (ī,f),
/// (ī,f̄)` in unknowns `(Re X^if, Im X^if, Re X^if̄, Im X^if̄)`.
fn r4_system(k: &PointerConstants) -> Matrix4<f64> {
    let (a, b, s) = (k.re_c1_sq, k.im_c1_sq, k.c1.norm_sqr());
    Matrix4::new(
        a, -b, -s, 0.0, //
        -s, 0.0, a, -b, //
        -s, 0.0, a, b, //
        a, b, -s, 0.0,
    )
}

/// Predicted `r4` values for the four settings, given `X^if`, `X^if̄` and
/// the post-selection probabilities in the same setting order.
pub fn r4_forward(
    x_if: Complex64,
    x_ifbar: Complex64,
    p: [f64; 4],
    k: &PointerConstants,
    c: Coupling,
) -> [f64; 4] {
    let v = r4_system(k) * Vector4::new(x_if.re, x_if.im, x_ifbar.re, x_ifbar.im);
    std::array::from_fn(|n| -2.0 * c.g * c.lam * v[n] / p[n])
}

/// `(X^if, X^if̄)` from the `(q, q)` correlators `r4` of the settings
/// `(i,f), (i,f̄), (ī,f), (ī,f̄)` and their probabilities `p`. The system
/// has determinant `-4 Im(c1²)⁴`.
pub fn x_from_r4_only(
    r4: [f64; 4],
    p: [f64; 4],
    k: &PointerConstants,
    c: Coupling,
) -> Result<(Complex64, Complex64)> {
    let beta = k.im_c1_sq;
    if beta.abs() <= tol::OVERLAP {
        return Err(QptError::SingularInversion(format!(
            "r4-only system has determinant -4 Im(c1²)⁴ = {:.3e}; use a pointer with complex c1²",
            -4.0 * beta.powi(4)
        )));
    }
    let gl = c.g * c.lam;
    if gl == 0.0 {
        return Err(QptError::SingularInversion("coupling product g·λ is zero".into()));
    }
    let rhs = Vector4::from_fn(|n, _| p[n] * r4[n] / (-2.0 * gl));
    let sol = r4_system(k)
        .lu()
        .solve(&rhs)
        .ok_or_else(|| QptError::SingularInversion("r4-only system".into()))?;
    Ok((Complex64::new(sol[0], sol[1]), Complex64::new(sol[2], sol[3])))
}

/// All sixteen χ entries (computational quartet) from two input states.
pub fn reconstruct_qubit_sigma_x(
    ch: &KrausChannel,
    pu: &PointerSpec,
    pv: &PointerSpec,
    c: Coupling,
    mode: Mode,
    extraction: SigmaXExtraction,
    exec: Exec,
) -> Result<ReconstructionReport> {
    let start = Instant::now();
    let (ku, kv) = (pu.constants(), pv.constants());
    let runs = sigma_x_runs(ch, pu, pv, c, mode, exec)?;
    let bare = bare_probabilities(ch, mode)?;
    let mut chi = ChiTensor::zeros(BasisQuartet::computational(2, 2), Representation::Standard);
    let mut missing = Vec::new();

    let mut x = [None::<Complex64>; 4];
    match extraction {
        SigmaXExtraction::Full => {
            for run in &runs {
                if run.rvals.is_usable() {
                    x[2 * run.i + run.f] = Some(x_from_r(&run.rvals, &ku, &kv, c)?.0);
                }
            }
        }
        SigmaXExtraction::R4Only => {
            if ku != kv {
                return Err(QptError::Contract("r4-only extraction needs identical pointers".into()));
            }
            // settings (0,0), (0,1), (1,0), (1,1) give X^00 and X^01; a
            // starved setting contributes p_f r4 = 0
            if runs.iter().all(|r| r.rvals.status != RecordStatus::Empty) {
                let r4 = std::array::from_fn(|n| runs[n].rvals.r[3]);
                let p = std::array::from_fn(|n| runs[n].p_f);
                let (x00, x01) = x_from_r4_only(r4, p, &ku, c)?;
                x = [Some(x00), Some(x01), Some(x01.conj()), Some(x00.conj())];
            }
        }
    }

    for run in &runs {
        let (i, f) = (run.i, run.f);
        let (ib, fb) = (1 - i, 1 - f);
        chi.set([i, i, f, f], Complex64::new(bare[2 * i + f], 0.0));
        match x[2 * i + f] {
            Some(v) => chi.set([i, ib, fb, f], v),
            None => missing.push([i, ib, fb, f]),
        }
        if run.rvals.is_usable() {
            let wa = weak_value_from_shifts(run.shift_u, &ku, c.g)?;
            let wb = weak_value_from_shifts(run.shift_v, &kv, c.lam)?;
            chi.set([i, ib, f, f], wa * run.p_f);
            chi.set([i, i, fb, f], wb * run.p_f);
        } else {
            missing.push([i, ib, f, f]);
            missing.push([i, i, fb, f]);
        }
    }
    missing.sort_unstable();
    missing.dedup();
    // hermiticity preservation: χ_{abcd}* = χ_{badc}
    let before = missing.len();
    let partner = |[a, b, cc, d]: [usize; 4]| [b, a, d, cc];
    let filled: Vec<[usize; 4]> = missing
        .iter()
        .copied()
        .filter(|&idx| !missing.contains(&partner(idx)))
        .collect();
    for idx in &filled {
        chi.set(*idx, chi.get(partner(*idx)).conj());
    }
    missing.retain(|idx| !filled.contains(idx));
    let mut diagnostics = Vec::new();
    if before > 0 {
        diagnostics.push(format!(
            "{} entries of starved outcomes filled from their conjugate partners, {} undetermined",
            filled.len(),
            missing.len()
        ));
    }
    Ok(ReconstructionReport {
        scheme: Scheme::SigmaX,
        mode,
        couplings: vec![c],
        chi_hat: chi,
        chi_tilde_hat: None,
        missing,
        truth_distance: None,
        setup_count: 2,
        values_per_parameter: 5,
        extra_experiments_per_parameter: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics,
    })
}
