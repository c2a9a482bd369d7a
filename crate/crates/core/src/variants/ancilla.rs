//! Ancilla-assisted scheme: one entangled system–ancilla input, the channel
//! on the system half, pointer u on the ancilla and pointer v on the system.
//!
//! The joint space is `system ⊗ ancilla`, so the main-scheme simulators run
//! unchanged with `E ⊗ I`, `I ⊗ A`, `B ⊗ I` and post-selection on
//! `|φ_i4> ⊗ |ψ_i1>`.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::exec::Exec;
use crate::numkit::{identity, kron, outer, tol, validate_density, CMatrix};
use crate::pointer::PointerSpec;
use crate::process::{hadamard_basis, BasisQuartet, ChiTensor, KrausChannel, Representation};
use crate::report::{Coupling, Mode, ReconstructionReport, Scheme};
use crate::weak::{
    divide_checked, outcomes_exact, outcomes_perturbative, outcomes_sampled, x_from_r, Setting,
};

#[derive(Debug, Clone)]
pub struct AncillaConfig {
    /// `gamma[(i1, i2)]`
    pub gamma: CMatrix,
    pub bases: BasisQuartet,
    /// `Σ γ_{i1 i2} |α_i2><ψ_i1| ⊗ |α_i2><ψ_i1|` on `system ⊗ ancilla`.
    pub rho_sr: CMatrix,
}

/// Builds and validates the input state for amplitudes `gamma`.
pub fn ancilla_input(gamma: CMatrix, bases: BasisQuartet) -> Result<AncillaConfig> {
    let d = bases.d_in();
    if gamma.shape() != (d, d) {
        return Err(QptError::Shape(format!("gamma must be {d}x{d}")));
    }
    if let Some(((i1, i2), g)) = gamma
        .iter()
        .enumerate()
        .map(|(k, g)| ((k % d, k / d), g))
        .find(|(_, g)| g.norm() <= tol::OVERLAP)
    {
        return Err(QptError::InvalidGamma(format!(
            "gamma[{i1}][{i2}] = {g} is degenerate"
        )));
    }
    let mut rho = CMatrix::zeros(d * d, d * d);
    for i1 in 0..d {
        for i2 in 0..d {
            let op = outer(&bases.alpha_ket(i2), &bases.psi_ket(i1));
            rho += kron(&op, &op) * gamma[(i1, i2)];
        }
    }
    validate_density(&rho).map_err(|e| QptError::InvalidGamma(e.to_string()))?;
    Ok(AncillaConfig { gamma, bases, rho_sr: rho })
}

/// Maximally entangled input: `γ = 1/d`, computational `ψ` and the real
/// Hadamard basis for `α`. Needs a power-of-two `d_in`; `β`, `φ` are the
/// defaults for `d_out`.
pub fn default_ancilla(d_in: usize, d_out: usize) -> Result<AncillaConfig> {
    let base = BasisQuartet::default_for(d_in, d_out);
    let bases = BasisQuartet::new(
        base.psi().clone(),
        hadamard_basis(d_in)?,
        base.beta().clone(),
        base.phi().clone(),
    )?;
    let gamma = CMatrix::from_element(d_in, d_in, Complex64::new(1.0 / d_in as f64, 0.0));
    ancilla_input(gamma, bases)
}

/// `(i2, i3)` settings of the single input state; every run yields all
/// `(i4, i1)` outcomes.
pub fn reconstruct_ancilla(
    ch: &KrausChannel,
    cfg: &AncillaConfig,
    pu: &PointerSpec,
    pv: &PointerSpec,
    c: Coupling,
    mode: Mode,
    exec: Exec,
) -> Result<ReconstructionReport> {
    let start = Instant::now();
    let bases = &cfg.bases;
    let (d, dout) = (bases.d_in(), bases.d_out());
    if ch.d_in() != d || ch.d_out() != dout {
        return Err(QptError::Shape("channel and bases disagree on dimensions".into()));
    }
    let (ku, kv) = (pu.constants(), pv.constants());
    ku.require_main_scheme()?;
    kv.require_main_scheme()?;
    let joint = ch.tensor(&KrausChannel::identity(d));
    let post = kron(bases.phi(), bases.psi());
    let groups = exec.try_map(d * dout, |k| {
        let (i2, i3) = (k / dout, k % dout);
        let s = Setting {
            rho: cfg.rho_sr.clone(),
            a: kron(&identity(d), &outer(&bases.alpha_ket(i2), &bases.alpha_ket(i2))),
            b: kron(&outer(&bases.beta_ket(i3), &bases.beta_ket(i3)), &identity(d)),
            post: post.clone(),
            post_index: 0,
        };
        match mode {
            Mode::Exact => outcomes_exact(&joint, &s, pu, pv, c),
            Mode::Perturbative => outcomes_perturbative(&joint, &s, pu, pv, c),
            Mode::Sampled { shots, seed } => outcomes_sampled(&joint, &s, pu, pv, c, shots, seed, k as u64),
        }
    })?;

    let mut chi = ChiTensor::zeros(bases.clone(), Representation::Standard);
    let mut missing = Vec::new();
    let mut total_p = 0.0;
    for (k, recs) in groups.iter().enumerate() {
        let (i2, i3) = (k / dout, k % dout);
        for (o, rec) in recs.iter().enumerate() {
            let (i4, i1) = (o / d, o % d);
            let idx = [i1, i2, i3, i4];
            if k == 0 {
                total_p += rec.p_f;
            }
            if !rec.is_usable() {
                missing.push(idx);
                continue;
            }
            let (x, _) = x_from_r(rec, &ku, &kv, c)?;
            let denom = cfg.gamma[(i1, i2)]
                * bases.output_overlap(i3, i4)
                * bases.input_overlap(i1, i2).conj();
            chi.set(idx, divide_checked(x, denom, idx)?);
        }
    }
    missing.sort_unstable();
    let mut diagnostics = vec![format!("outcome probabilities of the first setting sum to {total_p:.12}")];
    if !missing.is_empty() {
        diagnostics.push(format!("{} entries undetermined", missing.len()));
    }
    Ok(ReconstructionReport {
        scheme: Scheme::Ancilla,
        mode,
        couplings: vec![c],
        chi_hat: chi,
        chi_tilde_hat: None,
        missing,
        truth_distance: None,
        setup_count: 1,
        values_per_parameter: 5,
        extra_experiments_per_parameter: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics,
    })
}

/// Product channel `E_1 ⊗ ... ⊗ E_N`: one ancilla reconstruction per
/// factor, combined into the χ of the product quartet.
pub fn reconstruct_ancilla_product(
    factors: &[(KrausChannel, AncillaConfig)],
    pu: &PointerSpec,
    pv: &PointerSpec,
    c: Coupling,
    mode: Mode,
    exec: Exec,
) -> Result<ReconstructionReport> {
    let start = Instant::now();
    if factors.is_empty() {
        return Err(QptError::Shape("no factors".into()));
    }
    let parts = factors
        .iter()
        .map(|(ch, cfg)| reconstruct_ancilla(ch, cfg, pu, pv, c, mode, exec))
        .collect::<Result<Vec<_>>>()?;
    let quartets: Vec<BasisQuartet> = parts.iter().map(|r| r.chi_hat.bases().clone()).collect();
    let bases = BasisQuartet::product(&quartets)?;
    let mut chi = ChiTensor::zeros(bases, Representation::Standard);
    let mut missing = Vec::new();
    for idx in chi.indices().collect::<Vec<_>>() {
        let mut rest = idx;
        let mut value = Complex64::new(1.0, 0.0);
        let mut undetermined = false;
        for (p, q) in parts.iter().zip(&quartets).rev() {
            let (di, dout) = (q.d_in(), q.d_out());
            let local = [rest[0] % di, rest[1] % di, rest[2] % dout, rest[3] % dout];
            rest = [rest[0] / di, rest[1] / di, rest[2] / dout, rest[3] / dout];
            undetermined |= p.is_missing(local);
            value *= p.chi_hat.get(local);
        }
        if undetermined {
            missing.push(idx);
        } else {
            chi.set(idx, value);
        }
    }
    Ok(ReconstructionReport {
        scheme: Scheme::Ancilla,
        mode,
        couplings: vec![c],
        chi_hat: chi,
        chi_tilde_hat: None,
        missing,
        truth_distance: None,
        setup_count: 1,
        values_per_parameter: 5,
        extra_experiments_per_parameter: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics: vec![format!("composed from {} factor reconstructions", parts.len())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{max_abs_diff, ONE};
    use crate::pointer::qubit_pointer;
    use crate::process::{amplitude_damping, chi_distance, chi_from_channel, depolarizing, hadamard_gate};
    use crate::weak::{reconstruct, WeakRun};

    #[test]
    fn default_input_is_maximally_entangled() {
        for d in [2, 4] {
            let cfg = default_ancilla(d, d).unwrap();
            let mut phi = crate::numkit::zeros(d * d, 1);
            for k in 0..d {
                phi[(k * d + k, 0)] = ONE;
            }
            let want = (&phi * phi.adjoint()).scale(1.0 / d as f64);
            assert!(max_abs_diff(&cfg.rho_sr, &want) < 1e-12);
            assert!((cfg.rho_sr.trace().re - 1.0).abs() < 1e-12);
        }
        assert!(default_ancilla(3, 3).is_err());
    }

    #[test]
    fn degenerate_gamma_is_rejected() {
        let g = CMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        let err = ancilla_input(g, BasisQuartet::hadamard_for(2, 2).unwrap());
        assert!(matches!(err, Err(QptError::InvalidGamma(_))));
    }

    #[test]
    fn identity_channel_single_setup() {
        let ch = KrausChannel::identity(2);
        let cfg = default_ancilla(2, 2).unwrap();
        let q = qubit_pointer();
        let rep = reconstruct_ancilla(&ch, &cfg, &q, &q, Coupling::default(), Mode::Perturbative, Exec::Serial)
            .unwrap();
        let truth = chi_from_channel(&ch, &cfg.bases).unwrap();
        assert!(chi_distance(&rep.chi_hat, &truth).unwrap().max_abs < 1e-8);
        assert_eq!(rep.setup_count, 1);
        assert!(rep.diagnostics[0].contains("1.000000000000"));
    }

    #[test]
    fn amplitude_damping_exact_shrinks_with_coupling() {
        let ch = amplitude_damping(0.3, 2).unwrap();
        let cfg = default_ancilla(2, 2).unwrap();
        let q = qubit_pointer();
        let truth = chi_from_channel(&ch, &cfg.bases).unwrap();
        let err = |s: f64| {
            let rep = reconstruct_ancilla(&ch, &cfg, &q, &q, Coupling::symmetric(s), Mode::Exact, Exec::Serial)
                .unwrap();
            chi_distance(&rep.chi_hat, &truth).unwrap().max_abs
        };
        let (e3, e2) = (err(1e-3), err(1e-2));
        assert!(e3 <= 1e-2 && e3 < e2, "{e3} vs {e2}");
    }

    #[test]
    fn agrees_with_main_scheme() {
        let cfg = default_ancilla(2, 2).unwrap();
        let q = qubit_pointer();
        for ch in [
            amplitude_damping(0.6, 2).unwrap(),
            depolarizing(0.4, 2).unwrap(),
            KrausChannel::unitary(hadamard_gate()).unwrap(),
        ] {
            let a = reconstruct_ancilla(&ch, &cfg, &q, &q, Coupling::default(), Mode::Perturbative, Exec::Serial)
                .unwrap();
            let m = reconstruct(&WeakRun::new(&ch, &cfg.bases, &q, &q)).unwrap();
            assert!(chi_distance(&a.chi_hat, &m.chi_hat).unwrap().max_abs < 1e-7);
        }
    }

    #[test]
    fn product_composition() {
        let h = KrausChannel::unitary(hadamard_gate()).unwrap();
        let ad = amplitude_damping(0.3, 2).unwrap();
        let cfg = default_ancilla(2, 2).unwrap();
        let q = qubit_pointer();
        let rep = reconstruct_ancilla_product(
            &[(h.clone(), cfg.clone()), (ad.clone(), cfg.clone())],
            &q,
            &q,
            Coupling::default(),
            Mode::Perturbative,
            Exec::Serial,
        )
        .unwrap();
        let truth = chi_from_channel(&h.tensor(&ad), rep.chi_hat.bases()).unwrap();
        assert!(chi_distance(&rep.chi_hat, &truth).unwrap().max_abs < 1e-8);
    }
}
