//! Measurement pointers: initial state σ, readout observables p̂ and q̂,
//! and the constants `c1 = tr(q̂ p̂ σ)`, `c2 = tr(p̂ p̂ σ)` entering the
//! r-value inversion.

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::numkit::{
    self, basis_ket, c, hermitian_eig, is_hermitian, projector, tol, validate_density, CMatrix,
    Dims,
};

pub const DEFAULT_FOCK_CUTOFF: usize = 20;
pub const MIN_FOCK_CUTOFF: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PointerSpec {
    sigma: CMatrix,
    p_obs: CMatrix,
    q_obs: CMatrix,
    label: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerConstants {
    pub c1: Complex64,
    pub c2: f64,
    /// `Re(c1²)`
    pub re_c1_sq: f64,
    /// `Im(c1²)`; must be nonzero for r4-only extraction.
    pub im_c1_sq: f64,
}

impl PointerConstants {
    pub fn from_c1_c2(c1: Complex64, c2: f64) -> Self {
        let sq = c1 * c1;
        PointerConstants {
            c1,
            c2,
            re_c1_sq: sq.re,
            im_c1_sq: sq.im,
        }
    }

    /// The main inversion divides by `(c1 - c1*)²`.
    pub fn supports_main_scheme(&self) -> bool {
        self.c1.im.abs() > tol::OVERLAP
    }

    pub fn require_main_scheme(&self) -> Result<()> {
        if self.supports_main_scheme() {
            Ok(())
        } else {
            Err(QptError::SingularInversion(format!(
                "Im c1 = {:.3e}; the r-value inversion needs a complex c1",
                self.c1.im
            )))
        }
    }
}

impl PointerSpec {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }
    pub fn p_obs(&self) -> &CMatrix {
        &self.p_obs
    }
    pub fn q_obs(&self) -> &CMatrix {
        &self.q_obs
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Readout observable by index: 0 = p̂, 1 = q̂.
    pub fn observable(&self, which: Quadrature) -> &CMatrix {
        match which {
            Quadrature::P => &self.p_obs,
            Quadrature::Q => &self.q_obs,
        }
    }

    pub fn constants(&self) -> PointerConstants {
        pointer_constants(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    P,
    Q,
}

impl Quadrature {
    pub const BOTH: [Quadrature; 2] = [Quadrature::P, Quadrature::Q];
}

/// `|↑>` with p̂ → σx and q̂ → σy.
pub fn qubit_pointer() -> PointerSpec {
    PointerSpec {
        sigma: projector(&basis_ket(2, 0)),
        p_obs: numkit::pauli_x(),
        q_obs: numkit::pauli_y(),
        label: "qubit".into(),
    }
}

/// Oscillator ground state of width `delta` in a Fock space truncated at
/// `n_max` levels; `q̂ = Δ(a + a†)`, `p̂ = i(a† - a)/(2Δ)`.
pub fn gaussian_pointer(delta: f64, n_max: usize) -> Result<PointerSpec> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(QptError::ParameterOutOfRange {
            name: "delta",
            value: delta,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if n_max < MIN_FOCK_CUTOFF {
        return Err(QptError::Truncation {
            n_max,
            min: MIN_FOCK_CUTOFF,
        });
    }
    let a = lowering(n_max);
    let ad = a.adjoint();
    Ok(PointerSpec {
        sigma: projector(&basis_ket(n_max, 0)),
        q_obs: (&a + &ad).scale(delta),
        p_obs: (&ad - &a) * c(0.0, 1.0 / (2.0 * delta)),
        label: format!("gaussian(delta={delta}, n_max={n_max})"),
    })
}

/// Truncated annihilation operator.
pub fn lowering(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

/// Validates an arbitrary pointer: σ a density matrix, p̂ and q̂ Hermitian
/// with vanishing initial expectation.
pub fn custom_pointer(
    sigma: CMatrix,
    p_obs: CMatrix,
    q_obs: CMatrix,
    label: impl Into<String>,
) -> Result<PointerSpec> {
    validate_density(&sigma)?;
    let d = sigma.nrows();
    for (name, o) in [("p", &p_obs), ("q", &q_obs)] {
        if o.shape() != (d, d) {
            return Err(QptError::Shape(format!("observable {name} must be {d}x{d}")));
        }
        if !is_hermitian(o, tol::STRUCT) {
            return Err(QptError::NotHermitian {
                deviation: numkit::hermitian_deviation(o),
            });
        }
        let mean = numkit::trace_of_product(o, &sigma);
        if mean.norm() > tol::STRUCT {
            return Err(QptError::Contract(format!(
                "pointer observable {name} has nonzero initial mean {mean}"
            )));
        }
    }
    Ok(PointerSpec {
        sigma,
        p_obs,
        q_obs,
        label: label.into(),
    })
}

/// Qubit pointer with `q̂ = (σx + σy)/√2`, giving `c1 = (1 - i)/√2` and
/// `c1² = -i`. This is the default pointer of the r4-only extraction.
pub fn tilted_qubit_pointer() -> PointerSpec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (numkit::pauli_x() + numkit::pauli_y()).scale(s);
    custom_pointer(
        projector(&basis_ket(2, 0)),
        numkit::pauli_x(),
        q,
        "tilted-qubit",
    )
    .expect("tilted qubit pointer is valid")
}

pub fn pointer_constants(spec: &PointerSpec) -> PointerConstants {
    let c1 = numkit::trace_of_product(&(&spec.q_obs * &spec.p_obs), &spec.sigma);
    let c2 = numkit::trace_of_product(&(&spec.p_obs * &spec.p_obs), &spec.sigma).re;
    PointerConstants::from_c1_c2(c1, c2)
}

/// `exp(-i s Â ⊗ p̂)` on (system, pointer).
pub fn coupling_unitary_local(
    observable: &CMatrix,
    spec: &PointerSpec,
    strength: f64,
) -> Result<CMatrix> {
    if !is_hermitian(observable, tol::STRUCT) {
        return Err(QptError::NotHermitian {
            deviation: numkit::hermitian_deviation(observable),
        });
    }
    numkit::unitary_from_generator(&numkit::kron(observable, &spec.p_obs), strength)
}

/// `exp(-i s Â ⊗ p̂)` embedded in the joint space `dims`, with the system
/// factor at `system` and the pointer at `pointer`.
pub fn coupling_unitary(
    observable: &CMatrix,
    spec: &PointerSpec,
    strength: f64,
    dims: &Dims,
    system: usize,
    pointer: usize,
) -> Result<CMatrix> {
    if system >= dims.len()
        || pointer >= dims.len()
        || dims[system] != observable.nrows()
        || dims[pointer] != spec.dim()
    {
        return Err(QptError::Shape(format!(
            "coupling layout mismatch: dims {:?}, system {system}, pointer {pointer}",
            dims.as_slice()
        )));
    }
    let local = coupling_unitary_local(observable, spec, strength)?;
    numkit::embed(&local, dims, &[system, pointer])
}

/// Eigenbasis of a readout observable with degenerate eigenvalues grouped.
#[derive(Debug, Clone)]
pub struct ReadoutBasis {
    pub vectors: CMatrix,
    /// Each cluster: representative eigenvalue and the eigenvector columns.
    pub clusters: Vec<(f64, Vec<usize>)>,
}

pub fn readout_basis(obs: &CMatrix) -> ReadoutBasis {
    let (vals, vectors) = hermitian_eig(obs);
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        match clusters.last_mut() {
            Some((rep, cols)) if (v - *rep).abs() <= tol::EIG_CLUSTER => cols.push(k),
            _ => clusters.push((v, vec![k])),
        }
    }
    ReadoutBasis { vectors, clusters }
}
