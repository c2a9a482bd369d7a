//! Density operators on (system, pointers, ...) product spaces and the
//! operations the protocols apply to them.

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::numkit::{
    self, apply_left, apply_right_adjoint, conjugate_by, kron_all, partial_trace, CMatrix,
    CVector, Dims,
};
use crate::process::KrausChannel;

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    rho: CMatrix,
    dims: Dims,
}

impl JointState {
    /// `f_0 ⊗ f_1 ⊗ ...`
    pub fn product(factors: &[&CMatrix]) -> Result<Self> {
        if factors.iter().any(|f| !f.is_square()) {
            return Err(QptError::Shape("product factors must be square".into()));
        }
        let dims = Dims::new(factors.iter().map(|f| f.nrows()).collect::<Vec<_>>())?;
        Ok(JointState {
            rho: kron_all(factors.iter().copied()),
            dims,
        })
    }

    pub fn from_parts(rho: CMatrix, dims: Dims) -> Result<Self> {
        if !rho.is_square() || rho.nrows() != dims.total() {
            return Err(QptError::Shape(format!(
                "{}x{} operator does not fit layout {:?}",
                rho.nrows(),
                rho.ncols(),
                dims.as_slice()
            )));
        }
        Ok(JointState { rho, dims })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `U ρ U†` with `U` acting on `positions`.
    pub fn apply_unitary(&mut self, u: &CMatrix, positions: &[usize]) -> Result<()> {
        let same: Vec<usize> = positions.iter().map(|&p| self.dims[p]).collect();
        let (rho, _) = conjugate_by(u, &self.rho, &self.dims, positions, &same)?;
        self.rho = rho;
        Ok(())
    }

    /// Applies `ch` to the factors at `positions`, which become factors of
    /// dimensions `out_dims`.
    pub fn apply_channel(
        &mut self,
        ch: &KrausChannel,
        positions: &[usize],
        out_dims: &[usize],
    ) -> Result<()> {
        if out_dims.iter().product::<usize>() != ch.d_out() {
            return Err(QptError::Shape(format!(
                "output factors {out_dims:?} do not match channel output {}",
                ch.d_out()
            )));
        }
        let mut acc: Option<(CMatrix, Dims)> = None;
        for k in ch.kraus() {
            let (term, dims) = conjugate_by(k, &self.rho, &self.dims, positions, out_dims)?;
            acc = Some(match acc {
                None => (term, dims),
                Some((sum, dims)) => (sum + term, dims),
            });
        }
        let (rho, dims) = acc.ok_or_else(|| QptError::Shape("channel without Kraus operators".into()))?;
        self.rho = rho;
        self.dims = dims;
        Ok(())
    }

    /// Exact coupling `exp(-i s A ⊗ p)` between `system` and `pointer`.
    pub fn couple_exact(
        &mut self,
        observable: &CMatrix,
        p_obs: &CMatrix,
        strength: f64,
        system: usize,
        pointer: usize,
    ) -> Result<()> {
        if strength == 0.0 {
            return Ok(());
        }
        let u = numkit::unitary_from_generator(&numkit::kron(observable, p_obs), strength)?;
        self.apply_unitary(&u, &[system, pointer])
    }

    /// Coupling expanded to second order in `strength`:
    /// `ρ - i s [G, ρ] + s² (G ρ G - {G², ρ}/2)` with `G = A ⊗ p`.
    pub fn couple_second_order(
        &mut self,
        observable: &CMatrix,
        p_obs: &CMatrix,
        strength: f64,
        system: usize,
        pointer: usize,
    ) -> Result<()> {
        if strength == 0.0 {
            return Ok(());
        }
        let g = numkit::kron(observable, p_obs);
        if !numkit::is_hermitian(&g, numkit::tol::STRUCT) {
            return Err(QptError::NotHermitian {
                deviation: numkit::hermitian_deviation(&g),
            });
        }
        let pos = [system, pointer];
        let same = [self.dims[system], self.dims[pointer]];
        let (g_rho, _) = apply_left(&g, &self.rho, &self.dims, &pos, &same)?;
        let (rho_g, _) = apply_right_adjoint(&self.rho, &g, &self.dims, &pos, &same)?;
        let (g_rho_g, _) = apply_right_adjoint(&g_rho, &g, &self.dims, &pos, &same)?;
        let (g2_rho, _) = apply_left(&g, &g_rho, &self.dims, &pos, &same)?;
        let (rho_g2, _) = apply_right_adjoint(&rho_g, &g, &self.dims, &pos, &same)?;
        let i_s = Complex64::new(0.0, strength);
        let s2 = strength * strength;
        self.rho += (g_rho - rho_g) * (-i_s) + (g_rho_g - (g2_rho + rho_g2).scale(0.5)).scale(s2);
        Ok(())
    }

    /// `<k| ρ |k>` on the factor at `position`, which becomes one-dimensional.
    /// The result is unnormalised; its trace is the outcome probability.
    pub fn condition(&self, ket: &CVector, position: usize) -> Result<JointState> {
        let bra = ket.adjoint();
        let m = CMatrix::from_fn(1, ket.len(), |_, c| bra[(0, c)]);
        let (rho, dims) = conjugate_by(&m, &self.rho, &self.dims, &[position], &[1])?;
        Ok(JointState { rho, dims })
    }

    /// Conditions several factors on kets in turn.
    pub fn condition_all(&self, kets: &[(usize, &CVector)]) -> Result<JointState> {
        let mut out = self.clone();
        for (pos, ket) in kets {
            out = out.condition(ket, *pos)?;
        }
        Ok(out)
    }

    /// Reduced operator on the factors `keep` (ascending order).
    pub fn reduced(&self, keep: &[usize]) -> Result<CMatrix> {
        partial_trace(&self.rho, &self.dims, keep)
    }
}

/// `tr[(O_0 ⊗ O_1 ⊗ ...) m]` for a matrix `m` on the product of the
/// observables' spaces.
pub fn product_expectation(observables: &[&CMatrix], m: &CMatrix) -> Complex64 {
    numkit::trace_of_product(&kron_all(observables.iter().copied()), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{basis_ket, identity, max_abs_diff, pauli_x, projector};
    use crate::process::{amplitude_damping, apply_kraus};
    use crate::random::{random_density, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn channel_on_one_factor_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        let sigma = random_density(3, &mut rng);
        let ch = amplitude_damping(0.4, 2).unwrap();
        let mut st = JointState::product(&[&rho, &sigma]).unwrap();
        st.apply_channel(&ch, &[0], &[2]).unwrap();
        let want = numkit::kron(&apply_kraus(&ch, &rho).unwrap(), &sigma);
        assert!(max_abs_diff(st.matrix(), &want) < 1e-14);
    }

    #[test]
    fn second_order_matches_exact_to_third_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(2, &mut rng);
        let sigma = random_density(2, &mut rng);
        let a = random_hermitian(2, &mut rng);
        let p = pauli_x();
        let gap = |s: f64| {
            let mut x = JointState::product(&[&rho, &sigma]).unwrap();
            let mut y = x.clone();
            x.couple_exact(&a, &p, s, 0, 1).unwrap();
            y.couple_second_order(&a, &p, s, 0, 1).unwrap();
            max_abs_diff(x.matrix(), y.matrix())
        };
        let ratio = gap(2e-2) / gap(1e-2);
        assert!((ratio - 8.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn conditioning_gives_outcome_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(3, &mut rng);
        let sigma = random_density(2, &mut rng);
        let st = JointState::product(&[&rho, &sigma]).unwrap();
        let k = basis_ket(3, 1);
        let cond = st.condition(&k, 0).unwrap();
        assert_eq!(cond.dims().as_slice(), &[1, 2]);
        assert!((cond.trace() - rho[(1, 1)]).norm() < 1e-14);
        let red = cond.reduced(&[1]).unwrap();
        assert!(max_abs_diff(&red, &(sigma.clone() * rho[(1, 1)])) < 1e-14);
        let e = product_expectation(&[&projector(&k), &identity(2)], st.matrix());
        assert!((e - rho[(1, 1)]).norm() < 1e-14);
    }
}
