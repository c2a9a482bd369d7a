//! N-particle scheme: product inputs, one pre- and one post-channel pointer
//! per particle, and the N-fold tensor power of the single-pair inversion.
//!
//! Joint layout: `(sys_1..sys_N, u_1..u_N, v_1..v_N)`. Correlator `k` has
//! base-4 digits `k_j = 2 o_u + o_v` (particle 1 most significant), with
//! `o = 0` for p̂ and `1` for q̂.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::exec::Exec;
use crate::joint::{product_expectation, JointState};
use crate::numkit::{projector, tol, CMatrix, CVector};
use crate::pointer::{readout_basis, PointerSpec, Quadrature, ReadoutBasis};
use crate::process::{BasisQuartet, ChiTensor, KrausChannel, Representation};
use crate::report::{Coupling, Mode, ReconstructionReport, Scheme};
use crate::sampling::{sample_readouts, Readout};
use crate::weak::{chi_entry, scaled_inverse, DEFAULT_JOINT_CAP};

#[derive(Debug, Clone)]
pub struct MultiPartiteSpec {
    pub local_bases: Vec<BasisQuartet>,
    pub couplings: Vec<Coupling>,
    /// `(u_j, v_j)` per particle.
    pub pointers: Vec<(PointerSpec, PointerSpec)>,
    /// Cap on the joint Hilbert-space dimension.
    pub cap: usize,
}

impl MultiPartiteSpec {
    /// Same bases, coupling and pointer pair for every particle.
    pub fn uniform(n: usize, bases: BasisQuartet, c: Coupling, pu: PointerSpec, pv: PointerSpec) -> Self {
        MultiPartiteSpec {
            local_bases: vec![bases; n],
            couplings: vec![c; n],
            pointers: vec![(pu, pv); n],
            cap: DEFAULT_JOINT_CAP,
        }
    }

    pub fn n(&self) -> usize {
        self.local_bases.len()
    }

    fn validate(&self, ch: &KrausChannel) -> Result<()> {
        let n = self.n();
        if n == 0 || self.couplings.len() != n || self.pointers.len() != n {
            return Err(QptError::Shape(
                "need one basis quartet, coupling and pointer pair per particle".into(),
            ));
        }
        let din: usize = self.local_bases.iter().map(|b| b.d_in()).product();
        let dout: usize = self.local_bases.iter().map(|b| b.d_out()).product();
        if din != ch.d_in() || dout != ch.d_out() {
            return Err(QptError::Shape(format!(
                "particle dimensions give {din}->{dout}, channel is {}->{}",
                ch.d_in(),
                ch.d_out()
            )));
        }
        let ptr: usize = self.pointers.iter().map(|(u, v)| u.dim() * v.dim()).product();
        let dim = din.max(dout).saturating_mul(ptr);
        if dim > self.cap {
            return Err(QptError::ResourceCap { dim, cap: self.cap });
        }
        Ok(())
    }
}

/// Per-particle digits of a combined index, particle 0 most significant.
fn digits(mut k: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for j in (0..radix.len()).rev() {
        out[j] = k % radix[j];
        k /= radix[j];
    }
    out
}

/// Unnormalised X for one outcome from its correlators (conditional means
/// times `p_F`), or `None` if starved.
fn x_from_correlators(unnorm: &[f64], p_f: f64, rows: &[[Complex64; 4]]) -> Option<Complex64> {
    if p_f < tol::STARVED {
        return None;
    }
    let n = rows.len();
    let mut x = Complex64::new(0.0, 0.0);
    for (k, &val) in unnorm.iter().enumerate() {
        let coeff: Complex64 = digits(k, &vec![4; n])
            .iter()
            .zip(rows)
            .map(|(&kj, row)| row[kj])
            .product();
        x += coeff * val;
    }
    Some(x)
}

struct Context<'a> {
    ch: &'a KrausChannel,
    spec: &'a MultiPartiteSpec,
    din: Vec<usize>,
    dout: Vec<usize>,
    rows: Vec<[Complex64; 4]>,
}

impl Context<'_> {
    fn n(&self) -> usize {
        self.din.len()
    }

    fn evolve(&self, i1: &[usize], i2: &[usize], i3: &[usize], exact: bool) -> Result<JointState> {
        let n = self.n();
        let sp = self.spec;
        let rhos: Vec<CMatrix> = (0..n)
            .map(|j| projector(&sp.local_bases[j].psi_ket(i1[j])))
            .collect();
        let mut factors: Vec<&CMatrix> = rhos.iter().collect();
        factors.extend(sp.pointers.iter().map(|(u, _)| u.sigma()));
        factors.extend(sp.pointers.iter().map(|(_, v)| v.sigma()));
        let mut st = JointState::product(&factors)?;
        let couple = |st: &mut JointState, a: &CMatrix, p: &CMatrix, s: f64, sys: usize, ptr: usize| {
            if exact {
                st.couple_exact(a, p, s, sys, ptr)
            } else {
                st.couple_second_order(a, p, s, sys, ptr)
            }
        };
        for (j, lb) in sp.local_bases.iter().enumerate() {
            let a = projector(&lb.alpha_ket(i2[j]));
            couple(&mut st, &a, sp.pointers[j].0.p_obs(), sp.couplings[j].g, j, n + j)?;
        }
        let positions: Vec<usize> = (0..n).collect();
        st.apply_channel(self.ch, &positions, &self.dout)?;
        for (j, lb) in sp.local_bases.iter().enumerate() {
            let b = projector(&lb.beta_ket(i3[j]));
            couple(&mut st, &b, sp.pointers[j].1.p_obs(), sp.couplings[j].lam, j, 2 * n + j)?;
        }
        Ok(st)
    }

    fn observables(&self, k: usize) -> Vec<&CMatrix> {
        let n = self.n();
        let ks = digits(k, &vec![4; n]);
        fn pick(spec: &PointerSpec, bit: usize) -> &CMatrix {
            spec.observable(if bit == 0 { Quadrature::P } else { Quadrature::Q })
        }
        let mut obs: Vec<&CMatrix> = (0..n).map(|j| pick(&self.spec.pointers[j].0, ks[j] / 2)).collect();
        obs.extend((0..n).map(|j| pick(&self.spec.pointers[j].1, ks[j] % 2)));
        obs
    }

    /// `X` for every combined outcome of one setting.
    fn x_values(&self, st: &JointState) -> Result<Vec<Option<Complex64>>> {
        let n = self.n();
        let keep: Vec<usize> = (n..3 * n).collect();
        let n_out: usize = self.dout.iter().product();
        let ncorr = 4usize.pow(n as u32);
        (0..n_out)
            .map(|f| {
                let fs = digits(f, &self.dout);
                let kets: Vec<CVector> = (0..n)
                    .map(|j| self.spec.local_bases[j].phi_ket(fs[j]))
                    .collect();
                let refs: Vec<(usize, &CVector)> = kets.iter().enumerate().collect();
                let red = st.condition_all(&refs)?.reduced(&keep)?;
                let p_f = red.trace().re;
                let unnorm: Vec<f64> = (0..ncorr)
                    .map(|k| product_expectation(&self.observables(k), &red).re)
                    .collect();
                Ok(x_from_correlators(&unnorm, p_f, &self.rows))
            })
            .collect()
    }

    fn x_values_sampled(&self, st: &JointState, shots: u64, seed: u64, stream: u64) -> Result<Vec<Option<Complex64>>> {
        let n = self.n();
        let bases: Vec<[ReadoutBasis; 2]> = self
            .spec
            .pointers
            .iter()
            .flat_map(|(u, v)| [u, v])
            .map(|p| [readout_basis(p.p_obs()), readout_basis(p.q_obs())])
            .collect();
        let ncorr = 4usize.pow(n as u32);
        let configs: Vec<Vec<Readout<'_>>> = (0..ncorr)
            .map(|k| {
                let ks = digits(k, &vec![4; n]);
                let mut r: Vec<Readout<'_>> = (0..n)
                    .map(|j| Readout { position: n + j, basis: &bases[2 * j][ks[j] / 2] })
                    .collect();
                r.extend((0..n).map(|j| Readout {
                    position: 2 * n + j,
                    basis: &bases[2 * j + 1][ks[j] % 2],
                }));
                r
            })
            .collect();
        let post: Vec<(usize, &CMatrix)> = (0..n).map(|j| (j, self.spec.local_bases[j].phi())).collect();
        let table = sample_readouts(st, &post, &configs, shots, seed, stream)?;
        Ok((0..table.stats.len())
            .map(|f| {
                let row = &table.stats[f];
                if row.iter().any(|s| s.count < 2) {
                    return None;
                }
                let p_f = table.outcome_frequency(f);
                let unnorm: Vec<f64> = row.iter().map(|s| s.mean * p_f).collect();
                x_from_correlators(&unnorm, p_f, &self.rows)
            })
            .collect())
    }
}

/// Reconstructs the N-particle χ in the product quartet of `spec`.
pub fn reconstruct_multiparticle(
    ch: &KrausChannel,
    spec: &MultiPartiteSpec,
    mode: Mode,
    exec: Exec,
) -> Result<ReconstructionReport> {
    let start = Instant::now();
    spec.validate(ch)?;
    let mut rows = Vec::with_capacity(spec.n());
    for ((u, v), c) in spec.pointers.iter().zip(&spec.couplings) {
        let g = scaled_inverse(&u.constants(), &v.constants(), *c)?;
        rows.push([g[(0, 0)], g[(0, 1)], g[(0, 2)], g[(0, 3)]]);
    }
    let ctx = Context {
        ch,
        spec,
        din: spec.local_bases.iter().map(|b| b.d_in()).collect(),
        dout: spec.local_bases.iter().map(|b| b.d_out()).collect(),
        rows,
    };
    let bases = BasisQuartet::product(&spec.local_bases)?;
    let (di, dout) = (bases.d_in(), bases.d_out());
    let groups = exec.try_map(di * di * dout, |k| {
        let (i1, i2, i3) = (k / (di * dout), (k / dout) % di, k % dout);
        let (a, b, cc) = (digits(i1, &ctx.din), digits(i2, &ctx.din), digits(i3, &ctx.dout));
        match mode {
            Mode::Exact => ctx.x_values(&ctx.evolve(&a, &b, &cc, true)?),
            Mode::Perturbative => ctx.x_values(&ctx.evolve(&a, &b, &cc, false)?),
            Mode::Sampled { shots, seed } => {
                ctx.x_values_sampled(&ctx.evolve(&a, &b, &cc, true)?, shots, seed, k as u64)
            }
        }
    })?;
    let mut chi = ChiTensor::zeros(bases.clone(), Representation::Standard);
    let mut missing = Vec::new();
    for (flat, x) in groups.into_iter().flatten().enumerate() {
        let idx = chi.index_of(flat);
        match x {
            Some(x) => chi.set(idx, chi_entry(x, &bases, idx)?),
            None => missing.push(idx),
        }
    }
    let mut diagnostics = Vec::new();
    if !missing.is_empty() {
        diagnostics.push(format!("{} entries undetermined", missing.len()));
    }
    Ok(ReconstructionReport {
        scheme: Scheme::Multi,
        mode,
        couplings: spec.couplings.clone(),
        chi_hat: chi,
        chi_tilde_hat: None,
        missing,
        truth_distance: None,
        setup_count: di,
        values_per_parameter: 1 + 4usize.pow(spec.n() as u32),
        extra_experiments_per_parameter: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::qubit_pointer;
    use crate::process::{amplitude_damping, chi_distance, chi_from_channel, cnot_gate, hadamard_gate};
    use crate::weak::{reconstruct, WeakRun};

    #[test]
    fn digits_are_mixed_radix() {
        assert_eq!(digits(7, &[2, 3, 2]), vec![1, 0, 1]);
        assert_eq!(digits(0, &[4, 4]), vec![0, 0]);
    }

    #[test]
    fn single_particle_matches_main_scheme() {
        let ch = amplitude_damping(0.3, 2).unwrap();
        let b = BasisQuartet::default_for(2, 2);
        let q = qubit_pointer();
        let spec = MultiPartiteSpec::uniform(1, b.clone(), Coupling::default(), q.clone(), q.clone());
        let multi = reconstruct_multiparticle(&ch, &spec, Mode::Perturbative, Exec::Serial).unwrap();
        let main = reconstruct(&WeakRun::new(&ch, &b, &q, &q)).unwrap();
        assert!(chi_distance(&multi.chi_hat, &main.chi_hat).unwrap().max_abs < 1e-12);
    }

    #[test]
    fn two_qubit_identity_perturbative() {
        let ch = KrausChannel::identity(4);
        let q = qubit_pointer();
        let spec = MultiPartiteSpec::uniform(
            2, BasisQuartet::default_for(2, 2), Coupling::default(), q.clone(), q,
        );
        let rep = reconstruct_multiparticle(&ch, &spec, Mode::Perturbative, Exec::default()).unwrap();
        let truth = chi_from_channel(&ch, &rep.chi_hat.bases().clone()).unwrap();
        assert_eq!(rep.chi_hat.entries().len(), 256);
        assert!(chi_distance(&rep.chi_hat, &truth).unwrap().max_abs < 1e-8);
    }

    #[test]
    fn product_channel_factorizes() {
        let h = KrausChannel::unitary(hadamard_gate()).unwrap();
        let ad = amplitude_damping(0.4, 2).unwrap();
        let ch = h.tensor(&ad);
        let b = BasisQuartet::default_for(2, 2);
        let q = qubit_pointer();
        let spec = MultiPartiteSpec::uniform(2, b.clone(), Coupling::default(), q.clone(), q);
        let rep = reconstruct_multiparticle(&ch, &spec, Mode::Perturbative, Exec::default()).unwrap();
        let (ch_h, ch_ad) = (chi_from_channel(&h, &b).unwrap(), chi_from_channel(&ad, &b).unwrap());
        for idx in rep.chi_hat.indices().collect::<Vec<_>>() {
            let part = |k: usize| idx.map(|i| if k == 0 { i / 2 } else { i % 2 });
            let want = ch_h.get(part(0)) * ch_ad.get(part(1));
            assert!((rep.chi_hat.get(idx) - want).norm() < 1e-8);
        }
    }

    #[test]
    fn cnot_exact_error_shrinks_with_coupling() {
        let ch = KrausChannel::unitary(cnot_gate()).unwrap();
        let q = qubit_pointer();
        let b = BasisQuartet::default_for(2, 2);
        let err = |s: f64| {
            let spec = MultiPartiteSpec::uniform(2, b.clone(), Coupling::symmetric(s), q.clone(), q.clone());
            let rep = reconstruct_multiparticle(&ch, &spec, Mode::Exact, Exec::default()).unwrap();
            let truth = chi_from_channel(&ch, rep.chi_hat.bases()).unwrap();
            chi_distance(&rep.chi_hat, &truth).unwrap().max_abs
        };
        let (e3, e2) = (err(1e-3), err(1e-2));
        assert!(e3 <= 2e-2 && e3 < e2, "{e3} vs {e2}");
    }

    #[test]
    fn cap_is_enforced() {
        let q = qubit_pointer();
        let mut spec = MultiPartiteSpec::uniform(
            2, BasisQuartet::default_for(2, 2), Coupling::default(), q.clone(), q,
        );
        spec.cap = 32;
        let err = reconstruct_multiparticle(&KrausChannel::identity(4), &spec, Mode::Exact, Exec::Serial);
        assert!(matches!(err, Err(QptError::ResourceCap { dim: 64, cap: 32 })));
    }
}
