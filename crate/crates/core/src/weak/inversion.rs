//! The linear relation between the four r-values and the X-value vector
//! `(X, X̃, X̃*, X*)`.
//!
//! To leading order in the couplings,
//! `r = -(g λ / p_f) F (X, X̃, X̃*, X*)ᵀ` with
//! `F = (M_u ⊗ M_v) diag(1, -1, -1, 1)` and, per pointer,
//! `M = [[c2, c2], [c1, c1*]]` (rows: p̂, q̂ readout; columns: p̂σ, σp̂).
//! For identical pointers this is the familiar
//! `diag(c2², c2, c2, 1) · [[1,-1,-1,1], [c1,-c1*,-c1,c1*], ...]`.

use num_complex::Complex64;

use super::{Coupling, RValueRecord};
use crate::error::{QptError, Result};
use crate::numkit::{kron, CMatrix, ONE};
use crate::pointer::PointerConstants;

fn pointer_block(k: &PointerConstants) -> CMatrix {
    let c2 = Complex64::new(k.c2, 0.0);
    CMatrix::from_row_slice(2, 2, &[c2, c2, k.c1, k.c1.conj()])
}

fn pointer_block_inverse(k: &PointerConstants) -> Result<CMatrix> {
    k.require_main_scheme()?;
    if k.c2 <= 0.0 {
        return Err(QptError::SingularInversion(format!("c2 = {} must be positive", k.c2)));
    }
    // det = c2 (c1* - c1) = -2i c2 Im c1
    let det = Complex64::new(k.c2, 0.0) * (k.c1.conj() - k.c1);
    let c2 = Complex64::new(k.c2, 0.0);
    Ok(CMatrix::from_row_slice(2, 2, &[k.c1.conj(), -c2, -k.c1, c2]) / det)
}

fn sign_pattern() -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE, -ONE, ONE]))
}

/// `F` with `r = -(gλ/p_f) F x`.
pub fn forward_matrix(ku: &PointerConstants, kv: &PointerConstants) -> CMatrix {
    kron(&pointer_block(ku), &pointer_block(kv)) * sign_pattern()
}

/// `F⁻¹`, so that `x = -(p_f / gλ) F⁻¹ r`.
pub fn inverse_matrix(ku: &PointerConstants, kv: &PointerConstants) -> Result<CMatrix> {
    Ok(sign_pattern() * kron(&pointer_block_inverse(ku)?, &pointer_block_inverse(kv)?))
}

/// Scaled inverse `-(1/gλ) F⁻¹`, applied to `p_f · r`.
pub fn scaled_inverse(
    ku: &PointerConstants,
    kv: &PointerConstants,
    coupling: Coupling,
) -> Result<CMatrix> {
    let gl = coupling.g * coupling.lam;
    if gl == 0.0 || !gl.is_finite() {
        return Err(QptError::SingularInversion(format!(
            "coupling product g·λ = {gl} cannot be inverted"
        )));
    }
    Ok(inverse_matrix(ku, kv)? * Complex64::new(-1.0 / gl, 0.0))
}

/// Full four-vector `(X, X̃, X̃*, X*)` recovered from a record.
pub fn x_vector_from_r(
    rec: &RValueRecord,
    ku: &PointerConstants,
    kv: &PointerConstants,
    coupling: Coupling,
) -> Result<[Complex64; 4]> {
    let inv = scaled_inverse(ku, kv, coupling)?;
    let rhs = nalgebra::DVector::from_iterator(
        4,
        rec.r.iter().map(|&r| Complex64::new(r * rec.p_f, 0.0)),
    );
    let x = inv * rhs;
    Ok([x[0], x[1], x[2], x[3]])
}

/// `(X, X̃)` from the four r-values and the post-selection probability.
pub fn x_from_r(
    rec: &RValueRecord,
    ku: &PointerConstants,
    kv: &PointerConstants,
    coupling: Coupling,
) -> Result<(Complex64, Complex64)> {
    let x = x_vector_from_r(rec, ku, kv, coupling)?;
    Ok((x[0], x[1]))
}

/// Forward map used by tests and by the single-qubit schemes: the record
/// that the leading-order theory predicts for a given X-vector.
pub fn r_from_x(
    x: [Complex64; 4],
    p_f: f64,
    ku: &PointerConstants,
    kv: &PointerConstants,
    coupling: Coupling,
) -> [f64; 4] {
    let f = forward_matrix(ku, kv);
    let v = nalgebra::DVector::from_row_slice(&x);
    let r = f * v * Complex64::new(-coupling.g * coupling.lam / p_f, 0.0);
    [r[0].re, r[1].re, r[2].re, r[3].re]
}
