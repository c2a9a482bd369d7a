//! Quantum processes in Kraus form and in the four-basis χ representation
//!
//! ```text
//! E(Ω) = Σ χ[i1,i2,i3,i4] <α_i2|Ω|ψ_i1> |β_i3><φ_i4|
//! ```
//!
//! Ground truth is always held as a [`KrausChannel`]; χ tensors are derived
//! from it through the analytic X-values ([`chi_from_channel`]) or
//! reconstructed from simulated pointer statistics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::numkit::{
    self, braket, c, identity, is_unitary, max_abs_diff, outer, projector, tol, CMatrix, CVector,
    ONE, ZERO,
};

/// Orthonormal basis as the columns of a unitary.
pub fn computational_basis(d: usize) -> CMatrix {
    identity(d)
}

/// Discrete Fourier basis, `F[j,k] = ω^{jk} / √d`.
pub fn fourier_basis(d: usize) -> CMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |j, k| {
        let angle = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        Complex64::from_polar(norm, angle)
    })
}

/// Real Sylvester–Hadamard basis; exists for `d` a power of two.
pub fn hadamard_basis(d: usize) -> Result<CMatrix> {
    if d == 0 || !d.is_power_of_two() {
        return Err(QptError::Contract(format!(
            "real Hadamard basis requires a power-of-two dimension, got {d}"
        )));
    }
    let h2 = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, -ONE]);
    let mut h = CMatrix::from_element(1, 1, ONE);
    while h.nrows() < d {
        h = numkit::kron(&h, &h2);
    }
    Ok(h.scale(1.0 / (d as f64).sqrt()))
}

/// The four bases defining a χ tensor: `psi`, `alpha` on the input space,
/// `beta`, `phi` on the output space.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisQuartet {
    psi: CMatrix,
    alpha: CMatrix,
    beta: CMatrix,
    phi: CMatrix,
}

impl BasisQuartet {
    pub fn new(psi: CMatrix, alpha: CMatrix, beta: CMatrix, phi: CMatrix) -> Result<Self> {
        for (name, m) in [("psi", &psi), ("alpha", &alpha), ("beta", &beta), ("phi", &phi)] {
            if !is_unitary(m, tol::STRUCT) {
                return Err(QptError::Contract(format!("basis `{name}` is not unitary")));
            }
        }
        if psi.nrows() != alpha.nrows() || beta.nrows() != phi.nrows() {
            return Err(QptError::Shape(
                "psi/alpha and beta/phi must share their dimensions".into(),
            ));
        }
        let q = BasisQuartet {
            psi,
            alpha,
            beta,
            phi,
        };
        q.check_nondegenerate()?;
        Ok(q)
    }

    /// Computational `psi = phi`, Fourier `alpha = beta`.
    pub fn default_for(d_in: usize, d_out: usize) -> Self {
        BasisQuartet::new(
            computational_basis(d_in),
            fourier_basis(d_in),
            fourier_basis(d_out),
            computational_basis(d_out),
        )
        .expect("default quartet is unbiased")
    }

    /// Same as [`default_for`](Self::default_for) but with the real Hadamard
    /// basis for `alpha` and `beta`. Requires power-of-two dimensions.
    pub fn hadamard_for(d_in: usize, d_out: usize) -> Result<Self> {
        BasisQuartet::new(
            computational_basis(d_in),
            hadamard_basis(d_in)?,
            hadamard_basis(d_out)?,
            computational_basis(d_out),
        )
    }

    /// All four bases computational. Degenerate for the main scheme (most
    /// overlaps vanish); used by the single-qubit σx scheme.
    pub fn computational(d_in: usize, d_out: usize) -> Self {
        BasisQuartet {
            psi: identity(d_in),
            alpha: identity(d_in),
            beta: identity(d_out),
            phi: identity(d_out),
        }
    }

    /// Per-particle quartets combined into the product quartet, particle 0
    /// most significant.
    pub fn product(parts: &[BasisQuartet]) -> Result<Self> {
        if parts.is_empty() {
            return Err(QptError::Shape("empty product of bases".into()));
        }
        let k = |f: fn(&BasisQuartet) -> &CMatrix| numkit::kron_all(parts.iter().map(f));
        let q = BasisQuartet {
            psi: k(|b| &b.psi),
            alpha: k(|b| &b.alpha),
            beta: k(|b| &b.beta),
            phi: k(|b| &b.phi),
        };
        Ok(q)
    }

    /// Skips the non-degeneracy check. Callers must not feed the result to
    /// χ-entry divisions without checking individual overlaps.
    pub fn new_unchecked(psi: CMatrix, alpha: CMatrix, beta: CMatrix, phi: CMatrix) -> Self {
        BasisQuartet {
            psi,
            alpha,
            beta,
            phi,
        }
    }

    fn check_nondegenerate(&self) -> Result<()> {
        for i1 in 0..self.d_in() {
            for i2 in 0..self.d_in() {
                let m = self.input_overlap(i1, i2).norm();
                if m <= tol::OVERLAP {
                    return Err(QptError::DegenerateOverlap {
                        index: [i1, i2, 0, 0],
                        magnitude: m,
                    });
                }
            }
        }
        for i3 in 0..self.d_out() {
            for i4 in 0..self.d_out() {
                let m = self.output_overlap(i3, i4).norm();
                if m <= tol::OVERLAP {
                    return Err(QptError::DegenerateOverlap {
                        index: [0, 0, i3, i4],
                        magnitude: m,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn d_in(&self) -> usize {
        self.psi.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.beta.nrows()
    }

    pub fn psi(&self) -> &CMatrix {
        &self.psi
    }
    pub fn alpha(&self) -> &CMatrix {
        &self.alpha
    }
    pub fn beta(&self) -> &CMatrix {
        &self.beta
    }
    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    pub fn psi_ket(&self, i: usize) -> CVector {
        self.psi.column(i).into_owned()
    }
    pub fn alpha_ket(&self, i: usize) -> CVector {
        self.alpha.column(i).into_owned()
    }
    pub fn beta_ket(&self, i: usize) -> CVector {
        self.beta.column(i).into_owned()
    }
    pub fn phi_ket(&self, i: usize) -> CVector {
        self.phi.column(i).into_owned()
    }

    /// `<α_i2|ψ_i1>`
    pub fn input_overlap(&self, i1: usize, i2: usize) -> Complex64 {
        braket(&self.alpha_ket(i2), &self.psi_ket(i1))
    }

    /// `<φ_i4|β_i3>`
    pub fn output_overlap(&self, i3: usize, i4: usize) -> Complex64 {
        braket(&self.phi_ket(i4), &self.beta_ket(i3))
    }

    /// Quartet with the roles of `beta` and `phi` exchanged.
    pub fn swapped_output(&self) -> BasisQuartet {
        BasisQuartet {
            psi: self.psi.clone(),
            alpha: self.alpha.clone(),
            beta: self.phi.clone(),
            phi: self.beta.clone(),
        }
    }

    pub fn approx_eq(&self, other: &BasisQuartet, tol: f64) -> bool {
        let same = |a: &CMatrix, b: &CMatrix| a.shape() == b.shape() && max_abs_diff(a, b) <= tol;
        same(&self.psi, &other.psi)
            && same(&self.alpha, &other.alpha)
            && same(&self.beta, &other.beta)
            && same(&self.phi, &other.phi)
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| QptError::Shape("channel needs at least one Kraus operator".into()))?;
        let (d_out, d_in) = first.shape();
        if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
            return Err(QptError::Shape("Kraus operators differ in shape".into()));
        }
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &identity(d_in));
        if dev > tol::KRAUS {
            return Err(QptError::Contract(format!(
                "Kraus completeness violated by {dev:.3e}"
            )));
        }
        Ok(KrausChannel { d_in, d_out, kraus })
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel {
            d_in: d,
            d_out: d,
            kraus: vec![identity(d)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        if !is_unitary(&u, 1e-10) {
            return Err(QptError::Contract("unitary channel needs a unitary".into()));
        }
        KrausChannel::new(vec![u])
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `self ⊗ other`, acting on the joint input `(self, other)`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(numkit::kron(a, b));
            }
        }
        KrausChannel {
            d_in: self.d_in * other.d_in,
            d_out: self.d_out * other.d_out,
            kraus,
        }
    }
}

/// `Σ_k K ρ K†`
pub fn apply_kraus(ch: &KrausChannel, rho: &CMatrix) -> Result<CMatrix> {
    if rho.shape() != (ch.d_in, ch.d_in) {
        return Err(QptError::Shape(format!(
            "channel input is {}x{}, got {}x{}",
            ch.d_in,
            ch.d_in,
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut out = CMatrix::zeros(ch.d_out, ch.d_out);
    for k in &ch.kraus {
        out += k * rho * k.adjoint();
    }
    Ok(out)
}

/// Which output basis carries the ket in the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// `|β_i3><φ_i4|`
    Standard,
    /// `|φ_i4><β_i3|`, the representation recovered from X̃.
    Tilde,
}

/// The d_in² d_out² complex parameters of a process relative to a quartet.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiTensor {
    bases: BasisQuartet,
    representation: Representation,
    entries: Vec<Complex64>,
}

impl ChiTensor {
    pub fn zeros(bases: BasisQuartet, representation: Representation) -> Self {
        let n = bases.d_in().pow(2) * bases.d_out().pow(2);
        ChiTensor {
            bases,
            representation,
            entries: vec![ZERO; n],
        }
    }

    pub fn from_entries(
        bases: BasisQuartet,
        representation: Representation,
        entries: Vec<Complex64>,
    ) -> Result<Self> {
        let n = bases.d_in().pow(2) * bases.d_out().pow(2);
        if entries.len() != n {
            return Err(QptError::Shape(format!(
                "χ needs {n} entries, got {}",
                entries.len()
            )));
        }
        Ok(ChiTensor {
            bases,
            representation,
            entries,
        })
    }

    pub fn bases(&self) -> &BasisQuartet {
        &self.bases
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn d_in(&self) -> usize {
        self.bases.d_in()
    }

    pub fn d_out(&self) -> usize {
        self.bases.d_out()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn flat_index(&self, idx: [usize; 4]) -> usize {
        let (di, dout) = (self.d_in(), self.d_out());
        ((idx[0] * di + idx[1]) * dout + idx[2]) * dout + idx[3]
    }

    pub fn index_of(&self, flat: usize) -> [usize; 4] {
        let (di, dout) = (self.d_in(), self.d_out());
        let i4 = flat % dout;
        let i3 = (flat / dout) % dout;
        let i2 = (flat / (dout * dout)) % di;
        let i1 = flat / (dout * dout * di);
        [i1, i2, i3, i4]
    }

    pub fn get(&self, idx: [usize; 4]) -> Complex64 {
        self.entries[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: [usize; 4], value: Complex64) {
        let k = self.flat_index(idx);
        self.entries[k] = value;
    }

    pub fn indices(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        (0..self.entries.len()).map(|k| self.index_of(k))
    }
}

/// Evaluates the process defined by `t` on an arbitrary input operator.
pub fn apply_chi(t: &ChiTensor, omega: &CMatrix) -> Result<CMatrix> {
    let (di, dout) = (t.d_in(), t.d_out());
    if omega.shape() != (di, di) {
        return Err(QptError::Shape(format!(
            "χ input is {di}x{di}, got {}x{}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let b = t.bases();
    // w[(i2, i1)] = <α_i2|Ω|ψ_i1>
    let w = b.alpha().adjoint() * omega * b.psi();
    let mut coeff = CMatrix::zeros(dout, dout);
    for [i1, i2, i3, i4] in t.indices() {
        coeff[(i3, i4)] += t.get([i1, i2, i3, i4]) * w[(i2, i1)];
    }
    Ok(match t.representation() {
        Representation::Standard => b.beta() * coeff * b.phi().adjoint(),
        Representation::Tilde => b.phi() * coeff.transpose() * b.beta().adjoint(),
    })
}

/// `(X, X̃) = (tr[Π_f B E(A ρ)], tr[Π_f E(A ρ) B])`
pub fn x_value_analytic(
    ch: &KrausChannel,
    rho_i: &CMatrix,
    a: &CMatrix,
    b: &CMatrix,
    pf: &CMatrix,
) -> Result<(Complex64, Complex64)> {
    let din = ch.d_in();
    let dout = ch.d_out();
    for (name, m, d) in [("rho", rho_i, din), ("A", a, din), ("B", b, dout), ("Pi_f", pf, dout)] {
        if m.shape() != (d, d) {
            return Err(QptError::Shape(format!("{name} must be {d}x{d}")));
        }
    }
    let out = apply_kraus(ch, &(a * rho_i))?;
    let x = numkit::trace_of_product(&(pf * b), &out);
    let xt = numkit::trace_of_product(&(pf * &out), b);
    Ok((x, xt))
}

fn chi_oracle(
    ch: &KrausChannel,
    bases: &BasisQuartet,
    representation: Representation,
) -> Result<ChiTensor> {
    if ch.d_in() != bases.d_in() || ch.d_out() != bases.d_out() {
        return Err(QptError::Shape(
            "channel and bases disagree on dimensions".into(),
        ));
    }
    let mut t = ChiTensor::zeros(bases.clone(), representation);
    for i1 in 0..bases.d_in() {
        let psi = bases.psi_ket(i1);
        for i2 in 0..bases.d_in() {
            let alpha = bases.alpha_ket(i2);
            // A ρ = |α><α|ψ><ψ|
            let a_rho = outer(&alpha, &psi) * braket(&alpha, &psi);
            let out = apply_kraus(ch, &a_rho)?;
            let in_ov = bases.input_overlap(i1, i2);
            for i3 in 0..bases.d_out() {
                let beta = bases.beta_ket(i3);
                for i4 in 0..bases.d_out() {
                    let phi = bases.phi_ket(i4);
                    let (x, denom) = match representation {
                        // tr[|φ><φ|β><β| E] = <φ|β> <β|E|φ>
                        Representation::Standard => (
                            braket(&phi, &beta) * braket(&beta, &(&out * &phi)),
                            braket(&phi, &beta) * in_ov,
                        ),
                        // tr[|φ><φ| E |β><β|] = <φ|E|β> <β|φ>
                        Representation::Tilde => (
                            braket(&phi, &(&out * &beta)) * braket(&beta, &phi),
                            braket(&beta, &phi) * in_ov,
                        ),
                    };
                    if denom.norm() <= tol::OVERLAP {
                        return Err(QptError::DegenerateOverlap {
                            index: [i1, i2, i3, i4],
                            magnitude: denom.norm(),
                        });
                    }
                    t.set([i1, i2, i3, i4], x / denom);
                }
            }
        }
    }
    Ok(t)
}

/// Ground-truth χ for a Kraus channel: every entry is its analytic X-value
/// divided by `<φ_i4|β_i3><α_i2|ψ_i1>`.
pub fn chi_from_channel(ch: &KrausChannel, bases: &BasisQuartet) -> Result<ChiTensor> {
    chi_oracle(ch, bases, Representation::Standard)
}

/// Ground truth in the tilde representation (output bases exchanged),
/// built from the analytic X̃-values.
pub fn chi_tilde_from_channel(ch: &KrausChannel, bases: &BasisQuartet) -> Result<ChiTensor> {
    chi_oracle(ch, bases, Representation::Tilde)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiDistance {
    pub max_abs: f64,
    pub frobenius: f64,
}

/// Max entrywise and Frobenius distance between two tensors over the same
/// bases.
pub fn chi_distance(a: &ChiTensor, b: &ChiTensor) -> Result<ChiDistance> {
    chi_distance_masked(a, b, |_| true)
}

/// Like [`chi_distance`] but only over the entries selected by `include`.
pub fn chi_distance_masked(
    a: &ChiTensor,
    b: &ChiTensor,
    include: impl Fn([usize; 4]) -> bool,
) -> Result<ChiDistance> {
    if a.representation != b.representation || !a.bases.approx_eq(&b.bases, 1e-12) {
        return Err(QptError::BasisMismatch(
            "χ tensors refer to different bases".into(),
        ));
    }
    let mut max_abs: f64 = 0.0;
    let mut sq = 0.0;
    for (k, (x, y)) in a.entries.iter().zip(&b.entries).enumerate() {
        if !include(a.index_of(k)) {
            continue;
        }
        let d = (x - y).norm();
        max_abs = max_abs.max(d);
        sq += d * d;
    }
    Ok(ChiDistance {
        max_abs,
        frobenius: sq.sqrt(),
    })
}

/// Qudit amplitude damping: every excited level decays to `|0>` with
/// probability `gamma`.
pub fn amplitude_damping(gamma: f64, d: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(QptError::ParameterOutOfRange {
            name: "gamma",
            value: gamma,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if d < 2 {
        return Err(QptError::Shape("amplitude damping needs d >= 2".into()));
    }
    let mut k0 = CMatrix::zeros(d, d);
    k0[(0, 0)] = ONE;
    for k in 1..d {
        k0[(k, k)] = c((1.0 - gamma).sqrt(), 0.0);
    }
    let mut kraus = vec![k0];
    for k in 1..d {
        let mut m = CMatrix::zeros(d, d);
        m[(0, k)] = c(gamma.sqrt(), 0.0);
        kraus.push(m);
    }
    KrausChannel::new(kraus)
}

/// `ρ -> (1 - p) ρ + p tr(ρ) I/d`, Kraus operators from the Weyl basis.
pub fn depolarizing(p: f64, d: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QptError::ParameterOutOfRange {
            name: "p",
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let shift = CMatrix::from_fn(d, d, |r, col| if r == (col + 1) % d { ONE } else { ZERO });
    let clock = CMatrix::from_fn(d, d, |r, col| {
        if r == col {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / d as f64)
        } else {
            ZERO
        }
    });
    let d2 = (d * d) as f64;
    let mut kraus = vec![identity(d).scale((1.0 - p + p / d2).sqrt())];
    let mut xa = identity(d);
    for a in 0..d {
        let mut zb = identity(d);
        for b in 0..d {
            if a != 0 || b != 0 {
                kraus.push((&xa * &zb).scale(p.sqrt() / d as f64));
            }
            zb = &zb * &clock;
        }
        xa = &xa * &shift;
    }
    KrausChannel::new(kraus)
}

pub fn hadamard_gate() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

/// CNOT with particle 0 as control.
pub fn cnot_gate() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

/// Projector helper for basis columns.
pub fn column_projector(basis: &CMatrix, k: usize) -> CMatrix {
    projector(&basis.column(k).into_owned())
}
