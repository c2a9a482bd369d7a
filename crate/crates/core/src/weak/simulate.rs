//! Single-setting simulators: exact unitary couplings, the literal
//! second-order state, and shot sampling.

use num_complex::Complex64;

use super::{Coupling, RValueRecord, RecordStatus, Setting};
use crate::error::{QptError, Result};
use crate::joint::{product_expectation, JointState};
use crate::numkit::{braket, kron, tol, CMatrix, CVector};
use crate::pointer::{readout_basis, PointerSpec, Quadrature};
use crate::process::{apply_kraus, KrausChannel};
use crate::sampling::{sample_readouts, Readout, SampleTable};

/// Readout order of the four correlators: `(p,p), (p,q), (q,p), (q,q)`.
pub const READOUTS: [(Quadrature, Quadrature); 4] = [
    (Quadrature::P, Quadrature::P),
    (Quadrature::P, Quadrature::Q),
    (Quadrature::Q, Quadrature::P),
    (Quadrature::Q, Quadrature::Q),
];

/// Record from the unnormalised post-selected pointer state on (u, v).
pub fn record_from_pointer_state(uv: &CMatrix, pu: &PointerSpec, pv: &PointerSpec) -> RValueRecord {
    let p_f = uv.trace().re;
    if p_f < tol::STARVED {
        return RValueRecord::starved(p_f);
    }
    let r = READOUTS.map(|(a, b)| {
        product_expectation(&[pu.observable(a), pv.observable(b)], uv).re / p_f
    });
    RValueRecord::exact(r, p_f)
}

fn check_setting(ch: &KrausChannel, s: &Setting) -> Result<()> {
    let (di, dout) = (ch.d_in(), ch.d_out());
    if s.rho.shape() != (di, di) || s.a.shape() != (di, di) {
        return Err(QptError::Shape(format!("input-side operators must be {di}x{di}")));
    }
    if s.b.shape() != (dout, dout) || s.post.nrows() != dout {
        return Err(QptError::Shape(format!("output-side operators must act on dimension {dout}")));
    }
    if s.post_index >= s.post.ncols() {
        return Err(QptError::Shape(format!(
            "post-selection index {} out of range",
            s.post_index
        )));
    }
    Ok(())
}

fn check_coupling(c: Coupling) -> Result<()> {
    for (name, v) in [("g", c.g), ("lambda", c.lam)] {
        if !v.is_finite() || v < 0.0 {
            return Err(QptError::ParameterOutOfRange {
                name,
                value: v,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
    }
    Ok(())
}

/// Joint state after both exact couplings, before post-selection.
/// Layout `(system, u, v)`.
pub fn evolve_exact(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<JointState> {
    check_setting(ch, s)?;
    check_coupling(coupling)?;
    let mut st = JointState::product(&[&s.rho, pu.sigma(), pv.sigma()])?;
    st.couple_exact(&s.a, pu.p_obs(), coupling.g, 0, 1)?;
    st.apply_channel(ch, &[0], &[ch.d_out()])?;
    st.couple_exact(&s.b, pv.p_obs(), coupling.lam, 0, 2)?;
    Ok(st)
}

/// Records for every outcome of the post-selection basis, exact couplings.
pub fn outcomes_exact(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<Vec<RValueRecord>> {
    let st = evolve_exact(ch, s, pu, pv, coupling)?;
    (0..s.post.ncols())
        .map(|f| {
            let cond = st.condition(&s.post_ket(f), 0)?;
            Ok(record_from_pointer_state(cond.matrix(), pu, pv))
        })
        .collect()
}

/// Unnormalised pointer state of the second-order expansion for one
/// post-selection ket: every term through second order in `(g, λ)`,
/// including the `gλ` cross terms.
pub fn second_order_pointer_state(
    ch: &KrausChannel,
    s: &Setting,
    f: &CVector,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<CMatrix> {
    let Coupling { g, lam } = coupling;
    let e = |m: &CMatrix| apply_kraus(ch, m);
    let t = |m: &CMatrix| braket(f, &(m * f));
    let (a, b, rho) = (&s.a, &s.b, &s.rho);
    let a2 = a * a;
    let b2 = b * b;
    let e0 = e(rho)?;
    let ea = e(&(a * rho))?;
    let ead = e(&(rho * a))?;
    let ea2 = e(&(&a2 * rho))?;
    let ea2d = e(&(rho * &a2))?;
    let eaa = e(&(a * rho * a))?;

    let (su, sv) = (pu.sigma(), pv.sigma());
    let (xu, xv) = (pu.p_obs(), pv.p_obs());
    let p_su = xu * su;
    let su_p = su * xu;
    let p_sv = xv * sv;
    let sv_p = sv * xv;
    let i = Complex64::new(0.0, 1.0);
    let re = |x: f64| Complex64::new(x, 0.0);

    let mut out = kron(su, sv) * t(&e0);
    out += kron(&(&p_su * t(&ea) - &su_p * t(&ead)), sv) * (-i * g);
    out += kron(su, &(&p_sv * t(&(b * &e0)) - &sv_p * t(&(&e0 * b)))) * (-i * lam);
    let u2 = xu * &p_su * t(&ea2) + &su_p * xu * t(&ea2d) - (xu * &su_p) * (re(2.0) * t(&eaa));
    out += kron(&u2, sv) * re(-0.5 * g * g);
    let v2 = xv * &p_sv * t(&(&b2 * &e0)) + &sv_p * xv * t(&(&e0 * &b2))
        - (xv * &sv_p) * (re(2.0) * t(&(b * &e0 * b)));
    out += kron(su, &v2) * re(-0.5 * lam * lam);
    let cross = kron(&p_su, &p_sv) * t(&(b * &ea)) - kron(&p_su, &sv_p) * t(&(&ea * b))
        - kron(&su_p, &p_sv) * t(&(b * &ead))
        + kron(&su_p, &sv_p) * t(&(&ead * b));
    out += cross * re(-lam * g);
    Ok(out)
}

/// Records for every outcome, from the second-order state.
pub fn outcomes_perturbative(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<Vec<RValueRecord>> {
    check_setting(ch, s)?;
    check_coupling(coupling)?;
    (0..s.post.ncols())
        .map(|f| {
            let uv = second_order_pointer_state(ch, s, &s.post_ket(f), pu, pv, coupling)?;
            Ok(record_from_pointer_state(&uv, pu, pv))
        })
        .collect()
}

/// Records built from a sample table whose configs follow [`READOUTS`].
pub fn records_from_table(table: &SampleTable) -> Vec<RValueRecord> {
    table
        .stats
        .iter()
        .enumerate()
        .map(|(f, row)| {
            let samples = [row[0].count, row[1].count, row[2].count, row[3].count];
            let empty = samples.iter().any(|&n| n < 2);
            RValueRecord {
                r: [row[0].mean, row[1].mean, row[2].mean, row[3].mean],
                p_f: table.outcome_frequency(f),
                shots: Some(table.shots),
                samples: Some(samples),
                std_err: Some([row[0].std_err, row[1].std_err, row[2].std_err, row[3].std_err]),
                status: if empty { RecordStatus::Empty } else { RecordStatus::Ok },
            }
        })
        .collect()
}

/// Records for every outcome from `shots` simulated shots. `stream`
/// identifies the setting so that distinct settings draw independent
/// randomness from one seed.
#[allow(clippy::too_many_arguments)]
pub fn outcomes_sampled(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<Vec<RValueRecord>> {
    let st = evolve_exact(ch, s, pu, pv, coupling)?;
    let bu = [readout_basis(pu.p_obs()), readout_basis(pu.q_obs())];
    let bv = [readout_basis(pv.p_obs()), readout_basis(pv.q_obs())];
    let idx = |q: Quadrature| usize::from(q == Quadrature::Q);
    let configs: Vec<Vec<Readout<'_>>> = READOUTS
        .iter()
        .map(|&(a, b)| {
            vec![
                Readout { position: 1, basis: &bu[idx(a)] },
                Readout { position: 2, basis: &bv[idx(b)] },
            ]
        })
        .collect();
    let table = sample_readouts(&st, &[(0, &s.post)], &configs, shots, seed, stream)?;
    Ok(records_from_table(&table))
}

fn pick(records: Vec<RValueRecord>, s: &Setting) -> Result<RValueRecord> {
    let rec = records
        .into_iter()
        .nth(s.post_index)
        .ok_or_else(|| QptError::Shape("post-selection index out of range".into()))?;
    if rec.status == RecordStatus::Starved {
        return Err(QptError::PostSelectionStarved { p_f: rec.p_f });
    }
    Ok(rec)
}

/// One setting with exact couplings.
pub fn simulate_run_exact(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<RValueRecord> {
    pick(outcomes_exact(ch, s, pu, pv, coupling)?, s)
}

/// One setting from the second-order state.
pub fn simulate_run_perturbative(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
) -> Result<RValueRecord> {
    pick(outcomes_perturbative(ch, s, pu, pv, coupling)?, s)
}

/// One setting from shot sampling; deterministic given `seed`.
pub fn simulate_run_sampled(
    ch: &KrausChannel,
    s: &Setting,
    pu: &PointerSpec,
    pv: &PointerSpec,
    coupling: Coupling,
    shots: u64,
    seed: u64,
) -> Result<RValueRecord> {
    pick(outcomes_sampled(ch, s, pu, pv, coupling, shots, seed, 0)?, s)
}
