//! Exact reconstruction for projector observables at arbitrary coupling.
//!
//! For a projector `A`, `exp(-i g A ⊗ p) = I + A ⊗ D` with
//! `D = exp(-i g p) - I`, so the post-selected pointer moments are a finite
//! sum of system traces times pointer moments `m[O, L, R] = tr[O L σ R†]`.
//! Four of those traces are the X-values; the others are measured by three
//! auxiliary experiments and subtracted.

use std::time::Instant;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::joint::JointState;
use crate::numkit::{self, braket, identity, projector, CMatrix, CVector, ZERO};
use crate::pointer::{readout_basis, PointerSpec, Quadrature};
use crate::process::{BasisQuartet, ChiTensor, KrausChannel, Representation};
use crate::report::{Mode, ReconstructionReport, Scheme};
use crate::sampling::{sample_readouts, Readout};
use crate::weak::{chi_entry, chi_entry_tilde, outcomes_exact, outcomes_sampled, RValueRecord};
use crate::weak::{Setting, WeakRun};

/// Condition number above which the main 4x4 system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Coefficients of the non-X terms, each measured by an auxiliary run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongKnowns {
    /// `tr[B E(A)]` for the normalised state `A`.
    pub p_transfer: f64,
    /// `tr[B E(A ρ)]`; its partner `tr[B E(ρ A)]` is the conjugate.
    pub z_pre: Complex64,
    /// `tr[Π_f B E(A)]`; its partner `tr[Π_f E(A) B]` is the conjugate.
    pub w_post: Complex64,
}

/// `|<α|ψ>|²` and `|<β|φ>|²` for one entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongOverlaps {
    pub input: f64,
    pub output: f64,
}

impl StrongOverlaps {
    pub fn from_bases(bases: &BasisQuartet, [i1, i2, i3, i4]: [usize; 4]) -> Self {
        StrongOverlaps {
            input: bases.input_overlap(i1, i2).norm_sqr(),
            output: bases.output_overlap(i3, i4).norm_sqr(),
        }
    }
}

/// `m[O, L, R] = tr[O L σ R†]` for `O ∈ {p, q}`, `L, R ∈ {I, D}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerMomentTable {
    pub strength: f64,
    m: [[[Complex64; 2]; 2]; 2],
}

impl PointerMomentTable {
    /// `l`, `r`: `false` for `I`, `true` for `D`.
    pub fn get(&self, o: Quadrature, l: bool, r: bool) -> Complex64 {
        self.m[usize::from(o == Quadrature::Q)][usize::from(l)][usize::from(r)]
    }

    /// Largest `|m[O, I, I]|`; the expansion assumes it vanishes.
    pub fn first_moment(&self) -> f64 {
        self.m[0][0][0].norm().max(self.m[1][0][0].norm())
    }

    fn require_centered(&self) -> Result<()> {
        if self.first_moment() > 1e-12 {
            return Err(QptError::Contract(format!(
                "pointer readouts must have zero mean in σ (found {:.3e})",
                self.first_moment()
            )));
        }
        Ok(())
    }

    /// Rows `(p, q)`, columns `(m[·,D,I], m[·,I,D])`.
    fn block(&self) -> [[Complex64; 2]; 2] {
        let p = Quadrature::P;
        let q = Quadrature::Q;
        [
            [self.get(p, true, false), self.get(p, false, true)],
            [self.get(q, true, false), self.get(q, false, true)],
        ]
    }
}

pub fn pointer_moments(spec: &PointerSpec, strength: f64) -> Result<PointerMomentTable> {
    let n = spec.dim();
    let d = numkit::unitary_from_generator(spec.p_obs(), strength)? - identity(n);
    let ops = [identity(n), d];
    let mut m = [[[ZERO; 2]; 2]; 2];
    for (oi, o) in [spec.p_obs(), spec.q_obs()].into_iter().enumerate() {
        for (li, l) in ops.iter().enumerate() {
            for (ri, r) in ops.iter().enumerate() {
                m[oi][li][ri] = numkit::trace(&(o * l * spec.sigma() * r.adjoint()));
            }
        }
    }
    Ok(PointerMomentTable { strength, m })
}

/// Fails unless `m` is a Hermitian idempotent.
pub fn require_projector(m: &CMatrix) -> Result<()> {
    let dev = numkit::max_abs_diff(&(m * m), m).max(numkit::hermitian_deviation(m));
    if dev > 1e-10 {
        return Err(QptError::Contract(format!(
            "strong coupling needs projector observables (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

/// One main-experiment run; rejects non-projector observables.
pub fn simulate_strong_run(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: crate::report::Coupling,
) -> Result<RValueRecord> {
    require_projector(&s.a)?;
    require_projector(&s.b)?;
    crate::weak::simulate_run_exact(ch, s, pu, pv, coupling)
}

/// How auxiliary statistics are obtained.
#[derive(Debug, Clone, Copy)]
enum Draw {
    Exact,
    Shots { shots: u64, seed: u64, stream: u64 },
}

/// Measurement of the system in `basis`, keeping outcome `index`.
type Meas<'a> = (&'a CMatrix, usize);

fn transfer_inner(ch: &KrausChannel, alpha: &CVector, meas: Meas<'_>, draw: Draw) -> Result<f64> {
    let mut st = JointState::product(&[&projector(alpha)])?;
    st.apply_channel(ch, &[0], &[ch.d_out()])?;
    match draw {
        Draw::Exact => Ok(st.condition(&meas.0.column(meas.1).into_owned(), 0)?.trace().re),
        Draw::Shots { shots, seed, stream } => {
            let t = sample_readouts(&st, &[(0, meas.0)], &[vec![]], shots, seed, stream)?;
            Ok(t.outcome_frequency(meas.1))
        }
    }
}

/// Unnormalised `(<p>, <q>)` of pointer `pos` for one system outcome.
fn pointer_shifts(st: &JointState, pos: usize, spec: &PointerSpec, meas: Meas<'_>, draw: Draw) -> Result<[f64; 2]> {
    match draw {
        Draw::Exact => {
            let red = st.condition(&meas.0.column(meas.1).into_owned(), 0)?.reduced(&[pos])?;
            Ok([
                numkit::trace_of_product(spec.p_obs(), &red).re,
                numkit::trace_of_product(spec.q_obs(), &red).re,
            ])
        }
        Draw::Shots { shots, seed, stream } => {
            let bases = [readout_basis(spec.p_obs()), readout_basis(spec.q_obs())];
            let configs: Vec<Vec<Readout<'_>>> = bases
                .iter()
                .map(|b| vec![Readout { position: pos, basis: b }])
                .collect();
            let t = sample_readouts(st, &[(0, meas.0)], &configs, shots, seed, stream)?;
            let mut out = [0.0; 2];
            for (c, o) in out.iter_mut().enumerate() {
                let share: u64 = t.stats.iter().map(|row| row[c].count).sum();
                let s = &t.stats[meas.1][c];
                if s.count > 0 {
                    *o = s.mean * s.count as f64 / share as f64;
                }
            }
            Ok(out)
        }
    }
}

/// Solves `2 Re(u · m[O,D,I]) = y_O` for complex `u` from `O = p, q`.
fn solve_conjugate_pair(m: &PointerMomentTable, y: [f64; 2]) -> Result<Complex64> {
    let mp = m.get(Quadrature::P, true, false);
    let mq = m.get(Quadrature::Q, true, false);
    let sys = Matrix2::new(2.0 * mp.re, -2.0 * mp.im, 2.0 * mq.re, -2.0 * mq.im);
    let inv = sys.try_inverse().ok_or_else(|| {
        QptError::SingularInversion("pointer moments give a singular auxiliary system".into())
    })?;
    let v = inv * Vector2::new(y[0], y[1]);
    Ok(Complex64::new(v[0], v[1]))
}

fn unknown_from_shifts(
    shifts: [f64; 2],
    known: f64,
    m: &PointerMomentTable,
) -> Result<Complex64> {
    let y = [Quadrature::P, Quadrature::Q]
        .map(|o| shifts[usize::from(o == Quadrature::Q)] - known * m.get(o, true, true).re);
    solve_conjugate_pair(m, y)
}

/// `tr[B E(A)]`: prepare `|α>`, apply the channel, measure `|β>`.
pub fn aux_transfer_prob(ch: &KrausChannel, alpha: &CVector, beta: &CVector) -> Result<f64> {
    let b = CMatrix::from_columns(std::slice::from_ref(beta));
    transfer_inner(ch, alpha, (&b, 0), Draw::Exact)
}

#[allow(clippy::too_many_arguments)]
fn aux_pre_inner(
    ch: &KrausChannel,
    rho: &CMatrix,
    alpha: &CVector,
    meas: Meas<'_>,
    spec: &PointerSpec,
    g: f64,
    p_transfer: f64,
    draw: Draw,
) -> Result<Complex64> {
    let a = projector(alpha);
    let m = pointer_moments(spec, g)?;
    m.require_centered()?;
    let mut st = JointState::product(&[rho, spec.sigma()])?;
    st.couple_exact(&a, spec.p_obs(), g, 0, 1)?;
    st.apply_channel(ch, &[0], &[ch.d_out()])?;
    let shifts = pointer_shifts(&st, 1, spec, meas, draw)?;
    let in_sq = numkit::trace_of_product(&a, rho).re;
    unknown_from_shifts(shifts, in_sq * p_transfer, &m)
}

/// `z = tr[B E(A ρ)]` from a single pointer coupled before the channel and
/// a final projective measurement of `B = |β><β|`.
pub fn aux_pre_coupling(
    ch: &KrausChannel,
    rho: &CMatrix,
    alpha: &CVector,
    beta: &CVector,
    spec: &PointerSpec,
    g: f64,
) -> Result<Complex64> {
    let p_tr = aux_transfer_prob(ch, alpha, beta)?;
    let b = CMatrix::from_columns(std::slice::from_ref(beta));
    aux_pre_inner(ch, rho, alpha, (&b, 0), spec, g, p_tr, Draw::Exact)
}

#[allow(clippy::too_many_arguments)]
fn aux_post_inner(
    ch: &KrausChannel,
    alpha: &CVector,
    beta: &CVector,
    meas: Meas<'_>,
    spec: &PointerSpec,
    lam: f64,
    p_transfer: f64,
    draw: Draw,
) -> Result<Complex64> {
    let m = pointer_moments(spec, lam)?;
    m.require_centered()?;
    let mut st = JointState::product(&[&projector(alpha), spec.sigma()])?;
    st.apply_channel(ch, &[0], &[ch.d_out()])?;
    st.couple_exact(&projector(beta), spec.p_obs(), lam, 0, 1)?;
    let shifts = pointer_shifts(&st, 1, spec, meas, draw)?;
    let out_sq = braket(beta, &meas.0.column(meas.1).into_owned()).norm_sqr();
    unknown_from_shifts(shifts, out_sq * p_transfer, &m)
}

/// `w = tr[Π_f B E(A)]`: prepare `|α>`, apply the channel, couple one
/// pointer through `B = |β><β|`, post-select on `|φ>`.
pub fn aux_post_coupling(
    ch: &KrausChannel,
    alpha: &CVector,
    beta: &CVector,
    phi: &CVector,
    spec: &PointerSpec,
    lam: f64,
) -> Result<Complex64> {
    let p_tr = aux_transfer_prob(ch, alpha, beta)?;
    let f = CMatrix::from_columns(std::slice::from_ref(phi));
    aux_post_inner(ch, alpha, beta, (&f, 0), spec, lam, p_tr, Draw::Exact)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongSolution {
    pub x: Complex64,
    pub x_tilde: Complex64,
    /// 2-norm condition number of the main system.
    pub condition: f64,
}

/// Subtracts the known terms from `p_f r` and solves for
/// `(X, X̃, X̃*, X*)`; the conjugate pairs are averaged.
pub fn solve_x_strong(
    rec: &RValueRecord,
    knowns: &StrongKnowns,
    mu: &PointerMomentTable,
    mv: &PointerMomentTable,
    ov: StrongOverlaps,
) -> Result<StrongSolution> {
    mu.require_centered()?;
    mv.require_centered()?;
    let (bu, bv) = (mu.block(), mv.block());
    let quads = [Quadrature::P, Quadrature::Q];
    let mut sys = nalgebra::Matrix4::<Complex64>::zeros();
    let mut rhs = nalgebra::Vector4::<Complex64>::zeros();
    for (k, (ou, ov_)) in quads
        .iter()
        .flat_map(|&a| quads.iter().map(move |&b| (a, b)))
        .enumerate()
    {
        let (ru, rv) = (usize::from(ou == Quadrature::Q), usize::from(ov_ == Quadrature::Q));
        for a in 0..2 {
            for b in 0..2 {
                sys[(k, 2 * a + b)] = bu[ru][a] * bv[rv][b];
            }
        }
        let z = knowns.z_pre;
        let w = knowns.w_post;
        let t3 = ov.output
            * (z * mu.get(ou, true, false) + z.conj() * mu.get(ou, false, true))
            * mv.get(ov_, true, true);
        let t4 = ov.input
            * mu.get(ou, true, true)
            * (w * mv.get(ov_, true, false) + w.conj() * mv.get(ov_, false, true));
        let t5 = ov.input * ov.output * knowns.p_transfer
            * mu.get(ou, true, true)
            * mv.get(ov_, true, true);
        rhs[k] = Complex64::new(rec.p_f * rec.r[k], 0.0) - t3 - t4 - t5;
    }
    let sv = sys.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(QptError::IllConditioned {
            cond: condition,
            context: "strong-coupling main system".into(),
        });
    }
    let v = sys.lu().solve(&rhs).ok_or_else(|| {
        QptError::SingularInversion("strong-coupling main system".into())
    })?;
    Ok(StrongSolution {
        x: (v[0] + v[3].conj()) * 0.5,
        x_tilde: (v[1] + v[2].conj()) * 0.5,
        condition,
    })
}

fn stream(kind: u64, index: usize) -> u64 {
    (kind << 56) | index as u64
}

/// Strong-coupling reconstruction. Each entry uses its main run plus the
/// transfer, pre-coupling and post-coupling auxiliary runs; transfer
/// probabilities are shared across entries with the same `(i2, i3)`.
pub fn reconstruct_strong(run: &WeakRun<'_>) -> Result<ReconstructionReport> {
    let start = Instant::now();
    let (ch, bases, pu, pv, c) = (run.channel, run.bases, run.pu, run.pv, run.coupling);
    let (di, dout) = (bases.d_in(), bases.d_out());
    if ch.d_in() != di || ch.d_out() != dout {
        return Err(QptError::Shape("channel and bases disagree on dimensions".into()));
    }
    let draw_for = |kind: u64, index: usize| match run.mode {
        Mode::Exact => Ok(Draw::Exact),
        Mode::Sampled { shots, seed } => Ok(Draw::Shots {
            shots,
            seed,
            stream: stream(kind, index),
        }),
        Mode::Perturbative => Err(QptError::Contract(
            "the strong scheme runs in exact or sampled mode only".into(),
        )),
    };
    draw_for(0, 0)?;
    let mu = pointer_moments(pu, c.g)?;
    let mv = pointer_moments(pv, c.lam)?;
    mu.require_centered()?;
    mv.require_centered()?;

    let transfer = run.exec.try_map(di * dout, |k| {
        let (i2, i3) = (k / dout, k % dout);
        transfer_inner(ch, &bases.alpha_ket(i2), (bases.beta(), i3), draw_for(1, k)?)
    })?;
    let post = run.exec.try_map(di * dout * dout, |k| {
        let (i2, i3, i4) = (k / (dout * dout), (k / dout) % dout, k % dout);
        aux_post_inner(
            ch,
            &bases.alpha_ket(i2),
            &bases.beta_ket(i3),
            (bases.phi(), i4),
            pv,
            c.lam,
            transfer[i2 * dout + i3],
            draw_for(2, k)?,
        )
    })?;
    let groups = run.exec.try_map(di * di * dout, |k| {
        let (i1, i2, i3) = (k / (di * dout), (k / dout) % di, k % dout);
        let rho = projector(&bases.psi_ket(i1));
        let z = aux_pre_inner(
            ch,
            &rho,
            &bases.alpha_ket(i2),
            (bases.beta(), i3),
            pu,
            c.g,
            transfer[i2 * dout + i3],
            draw_for(3, k)?,
        )?;
        let s = Setting::from_indices(bases, [i1, i2, i3, 0]);
        let recs = match run.mode {
            Mode::Sampled { shots, seed } => outcomes_sampled(ch, &s, pu, pv, c, shots, seed, k as u64)?,
            _ => outcomes_exact(ch, &s, pu, pv, c)?,
        };
        Ok((z, recs))
    })?;

    let mut chi = ChiTensor::zeros(bases.clone(), Representation::Standard);
    let mut tilde = ChiTensor::zeros(bases.clone(), Representation::Tilde);
    let mut missing = Vec::new();
    let mut worst = 0.0f64;
    for (k, (z, recs)) in groups.iter().enumerate() {
        let (i1, i2, i3) = (k / (di * dout), (k / dout) % di, k % dout);
        let p_transfer = transfer[i2 * dout + i3];
        for (i4, rec) in recs.iter().enumerate() {
            let idx = [i1, i2, i3, i4];
            if !rec.is_usable() {
                missing.push(idx);
                continue;
            }
            let knowns = StrongKnowns {
                p_transfer,
                z_pre: *z,
                w_post: post[(i2 * dout + i3) * dout + i4],
            };
            let sol = solve_x_strong(rec, &knowns, &mu, &mv, StrongOverlaps::from_bases(bases, idx))?;
            worst = worst.max(sol.condition);
            chi.set(idx, chi_entry(sol.x, bases, idx)?);
            tilde.set(idx, chi_entry_tilde(sol.x_tilde, bases, idx)?);
        }
    }
    let mut diagnostics = vec![format!("largest main-system condition number {worst:.3e}")];
    if !missing.is_empty() {
        diagnostics.push(format!("{} entries undetermined", missing.len()));
    }
    Ok(ReconstructionReport {
        scheme: Scheme::Strong,
        mode: run.mode,
        couplings: vec![c],
        chi_hat: chi,
        chi_tilde_hat: Some(tilde),
        missing,
        truth_distance: None,
        setup_count: di,
        values_per_parameter: 5,
        extra_experiments_per_parameter: 3,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{basis_ket, c};
    use crate::pointer::{gaussian_pointer, qubit_pointer};
    use crate::process::{
        amplitude_damping, apply_kraus, chi_distance, chi_from_channel, hadamard_gate,
        x_value_analytic,
    };
    use crate::random::random_unitary;
    use crate::report::Coupling;
    use crate::weak::{reconstruct, x_from_r};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> CVector {
        CVector::from_vec(vec![c(0.5f64.sqrt(), 0.0); 2])
    }

    #[test]
    fn qubit_moments_match_hand_values() {
        let g = 0.37;
        let m = pointer_moments(&qubit_pointer(), g).unwrap();
        assert!(m.first_moment() < 1e-15);
        assert!((m.get(Quadrature::Q, true, false) - c(-g.sin(), 0.0)).norm() < 1e-14);
        assert!((m.get(Quadrature::P, true, false) - c(0.0, -g.sin())).norm() < 1e-14);
        for o in [Quadrature::P, Quadrature::Q] {
            assert!((m.get(o, false, true) - m.get(o, true, false).conj()).norm() < 1e-14);
        }
        let small = pointer_moments(&qubit_pointer(), 1e-6).unwrap();
        let k = qubit_pointer().constants();
        // m[q, D, I] ≈ -i s tr[q p σ] = -i s c1
        let lin = c(0.0, -1e-6) * k.c1;
        assert!((small.get(Quadrature::Q, true, false) - lin).norm() < 1e-15);
    }

    #[test]
    fn transfer_probability_examples() {
        let id = KrausChannel::identity(2);
        let (k0, k1) = (basis_ket(2, 0), basis_ket(2, 1));
        assert!((aux_transfer_prob(&id, &k0, &k0).unwrap() - 1.0).abs() < 1e-15);
        assert!(aux_transfer_prob(&id, &k0, &k1).unwrap().abs() < 1e-15);
        assert!((aux_transfer_prob(&id, &k1, &plus()).unwrap() - 0.5).abs() < 1e-14);
        let dep = crate::process::depolarizing(1.0, 2).unwrap();
        assert!((aux_transfer_prob(&dep, &k0, &k1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn pre_coupling_recovers_traces() {
        let id = KrausChannel::identity(2);
        let rho = projector(&basis_ket(2, 0));
        let z = aux_pre_coupling(&id, &rho, &plus(), &plus(), &qubit_pointer(), 0.8).unwrap();
        assert!((z - c(0.5, 0.0)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = KrausChannel::unitary(random_unitary(2, &mut rng)).unwrap();
        let alpha = crate::random::random_ket(2, &mut rng);
        let beta = crate::random::random_ket(2, &mut rng);
        let rho = projector(&crate::random::random_ket(2, &mut rng));
        let a = projector(&alpha);
        let b = projector(&beta);
        let z = aux_pre_coupling(&ch, &rho, &alpha, &beta, &gaussian_pointer(1.0, 20).unwrap(), 0.5)
            .unwrap();
        let direct = numkit::trace_of_product(&b, &apply_kraus(&ch, &(&a * &rho)).unwrap());
        let partner = numkit::trace_of_product(&b, &apply_kraus(&ch, &(&rho * &a)).unwrap());
        assert!((z - direct).norm() < 1e-10);
        assert!((partner - direct.conj()).norm() < 1e-12);
    }

    #[test]
    fn post_coupling_examples() {
        let id = KrausChannel::identity(2);
        let k0 = basis_ket(2, 0);
        let w = aux_post_coupling(&id, &plus(), &plus(), &k0, &qubit_pointer(), 0.6).unwrap();
        assert!((w - c(0.5, 0.0)).norm() < 1e-12);

        let ch = amplitude_damping(0.3, 2).unwrap();
        let alpha = plus();
        let beta = basis_ket(2, 1);
        let w = aux_post_coupling(&ch, &alpha, &beta, &k0, &qubit_pointer(), 0.7).unwrap();
        let out = apply_kraus(&ch, &projector(&alpha)).unwrap();
        let direct = numkit::trace_of_product(&(projector(&k0) * projector(&beta)), &out);
        assert!((w - direct).norm() < 1e-10);
    }

    #[test]
    fn solve_is_exact_at_strong_coupling() {
        let id = KrausChannel::identity(2);
        let bases = BasisQuartet::default_for(2, 2);
        let q = qubit_pointer();
        let cp = Coupling::symmetric(0.7);
        let idx = [0, 1, 1, 0];
        let s = Setting::from_indices(&bases, idx);
        let rec = simulate_strong_run(&id, &s, &q, &q, cp).unwrap();
        let (a1, a2, b3, f4) = (
            bases.alpha_ket(1),
            bases.psi_ket(0),
            bases.beta_ket(1),
            bases.phi_ket(0),
        );
        let knowns = StrongKnowns {
            p_transfer: aux_transfer_prob(&id, &a1, &b3).unwrap(),
            z_pre: aux_pre_coupling(&id, &projector(&a2), &a1, &b3, &q, 0.7).unwrap(),
            w_post: aux_post_coupling(&id, &a1, &b3, &f4, &q, 0.7).unwrap(),
        };
        let mu = pointer_moments(&q, 0.7).unwrap();
        let sol = solve_x_strong(&rec, &knowns, &mu, &mu, StrongOverlaps::from_bases(&bases, idx))
            .unwrap();
        let (xa, xta) =
            x_value_analytic(&id, &s.rho, &s.a, &s.b, &projector(&f4)).unwrap();
        assert!((sol.x - xa).norm() < 1e-9);
        assert!((sol.x_tilde - xta).norm() < 1e-9);
    }

    #[test]
    fn zero_data_gives_zero() {
        let m = pointer_moments(&qubit_pointer(), 0.3).unwrap();
        let rec = RValueRecord::exact([0.0; 4], 0.5);
        let k = StrongKnowns { p_transfer: 0.0, z_pre: ZERO, w_post: ZERO };
        let ov = StrongOverlaps { input: 0.5, output: 0.5 };
        let sol = solve_x_strong(&rec, &k, &m, &m, ov).unwrap();
        assert_eq!((sol.x, sol.x_tilde), (ZERO, ZERO));
    }

    #[test]
    fn weak_limit_matches_weak_inversion() {
        let ch = amplitude_damping(0.3, 2).unwrap();
        let bases = BasisQuartet::default_for(2, 2);
        let q = qubit_pointer();
        let cp = Coupling::symmetric(1e-3);
        let idx = [1, 0, 1, 1];
        let s = Setting::from_indices(&bases, idx);
        let rec = simulate_strong_run(&ch, &s, &q, &q, cp).unwrap();
        let (xw, _) = x_from_r(&rec, &q.constants(), &q.constants(), cp).unwrap();
        let (a, b) = (bases.alpha_ket(0), bases.beta_ket(1));
        let knowns = StrongKnowns {
            p_transfer: aux_transfer_prob(&ch, &a, &b).unwrap(),
            z_pre: aux_pre_coupling(&ch, &s.rho, &a, &b, &q, 1e-3).unwrap(),
            w_post: aux_post_coupling(&ch, &a, &b, &bases.phi_ket(1), &q, 1e-3).unwrap(),
        };
        let m = pointer_moments(&q, 1e-3).unwrap();
        let sol = solve_x_strong(&rec, &knowns, &m, &m, StrongOverlaps::from_bases(&bases, idx))
            .unwrap();
        assert!((sol.x - xw).norm() < 1e-6, "{} vs {}", sol.x, xw);
    }

    #[test]
    fn reconstruct_examples() {
        let q = qubit_pointer();
        let bases = BasisQuartet::default_for(2, 2);
        let h = KrausChannel::unitary(hadamard_gate()).unwrap();
        let run = WeakRun::new(&h, &bases, &q, &q)
            .mode(Mode::Exact)
            .coupling(Coupling::symmetric(0.7));
        let mut rep = reconstruct_strong(&run).unwrap();
        let d = rep.compare_to(&chi_from_channel(&h, &bases).unwrap()).unwrap();
        assert!(d.max_abs < 1e-9, "{d:?}");
        assert_eq!(rep.extra_experiments_per_parameter, 3);

        let ad = amplitude_damping(0.5, 2).unwrap();
        let run = WeakRun::new(&ad, &bases, &q, &q)
            .mode(Mode::Exact)
            .coupling(Coupling::symmetric(1.0));
        let rep = reconstruct_strong(&run).unwrap();
        let truth = chi_from_channel(&ad, &bases).unwrap();
        assert!(chi_distance(&rep.chi_hat, &truth).unwrap().max_abs < 1e-9);

        let small = WeakRun::new(&ad, &bases, &q, &q)
            .mode(Mode::Exact)
            .coupling(Coupling::symmetric(1e-3));
        let strong = reconstruct_strong(&small).unwrap();
        let weak = reconstruct(&small).unwrap();
        assert!(chi_distance(&strong.chi_hat, &weak.chi_hat).unwrap().max_abs < 1e-5);
    }

    #[test]
    fn rejects_perturbative_mode_and_non_projectors() {
        let q = qubit_pointer();
        let bases = BasisQuartet::default_for(2, 2);
        let id = KrausChannel::identity(2);
        assert!(reconstruct_strong(&WeakRun::new(&id, &bases, &q, &q)).is_err());
        let mut s = Setting::from_indices(&bases, [0, 0, 0, 0]);
        s.a = numkit::pauli_x();
        assert!(matches!(
            simulate_strong_run(&id, &s, &q, &q, Coupling::symmetric(0.5)),
            Err(QptError::Contract(_))
        ));
    }
}
