//! Dense complex linear algebra on tensor-product spaces.
//!
//! Joint spaces are laid out as an ordered list of factor dimensions with the
//! first factor most significant (row-major over subsystems). The convention
//! used by every simulator in this crate is
//! `(system, pointer u, pointer v, extra pointers..., ancilla)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QptError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Shared numerical tolerances.
pub mod tol {
    /// Structural checks: Hermiticity, unitarity, trace normalisation.
    pub const STRUCT: f64 = 1e-12;
    /// Slack on the smallest eigenvalue of a density matrix.
    pub const PSD_SLACK: f64 = -1e-10;
    /// Completeness of Kraus sets.
    pub const KRAUS: f64 = 1e-10;
    /// Minimum magnitude of an overlap used as a denominator.
    pub const OVERLAP: f64 = 1e-9;
    /// Post-selection probability below which an outcome is starved.
    pub const STARVED: f64 = 1e-12;
    /// Eigenvalue clustering for pointer readout bases.
    pub const EIG_CLUSTER: f64 = 1e-10;
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ordered subsystem dimensions of a joint space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dims(Vec<usize>);

impl Dims {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() || dims.contains(&0) {
            return Err(QptError::Shape(format!("invalid dimension list {dims:?}")));
        }
        Ok(Dims(dims))
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Dimensions with the factors at `positions` replaced by `new`.
    pub fn replaced(&self, positions: &[usize], new: &[usize]) -> Dims {
        let mut out = self.0.clone();
        for (&p, &d) in positions.iter().zip(new) {
            out[p] = d;
        }
        Dims(out)
    }
}

impl std::ops::Index<usize> for Dims {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

pub fn basis_ket(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = ONE;
    v
}

/// `|v><v|`
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `|a><b|`
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// `<a|b>`
pub fn braket(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `m` from `m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermitian_deviation(m) <= tol * max_abs(m).max(1.0)
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(&(m.adjoint() * m), &identity(m.nrows())) <= tol
}

/// Checks unit trace and positivity within the shared tolerances.
pub fn validate_density(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(QptError::Shape("density matrix must be square".into()));
    }
    if !is_hermitian(m, tol::STRUCT) {
        return Err(QptError::NotHermitian {
            deviation: hermitian_deviation(m),
        });
    }
    let tr = m.trace();
    if (tr - ONE).norm() > tol::STRUCT {
        return Err(QptError::Contract(format!(
            "density matrix trace {tr} differs from 1"
        )));
    }
    let (vals, _) = hermitian_eig(m);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < tol::PSD_SLACK {
        return Err(QptError::Contract(format!(
            "density matrix has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Standard Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::from_element(1, 1, ONE), |acc, f| kron(&acc, f))
}

/// `exp(-i s h)` for Hermitian `h`, via eigendecomposition.
pub fn unitary_from_generator(h: &CMatrix, s: f64) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(QptError::Shape("generator must be square".into()));
    }
    if !is_hermitian(h, tol::STRUCT) {
        return Err(QptError::NotHermitian {
            deviation: hermitian_deviation(h),
        });
    }
    if s == 0.0 {
        return Ok(identity(h.nrows()));
    }
    let (vals, vecs) = hermitian_eig(h);
    let mut scaled = vecs.clone();
    for (k, &lam) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -s * lam);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= phase;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Index bookkeeping for operators acting on a subset of tensor factors.
///
/// `table[rest * sub + s]` is the flat index whose digits at `positions`
/// spell `s` (in `positions` order) and whose remaining digits spell `rest`.
struct FactorSplit {
    sub: usize,
    rest: usize,
    table: Vec<usize>,
}

impl FactorSplit {
    fn new(dims: &[usize], positions: &[usize]) -> Self {
        let n = dims.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let rest_pos: Vec<usize> = (0..n).filter(|k| !positions.contains(k)).collect();
        let sub: usize = positions.iter().map(|&p| dims[p]).product();
        let rest: usize = rest_pos.iter().map(|&p| dims[p]).product();
        let mut table = vec![0usize; sub * rest];
        let mut rest_digits = vec![0usize; rest_pos.len()];
        for r in 0..rest {
            let mut x = r;
            for (k, &p) in rest_pos.iter().enumerate().rev() {
                rest_digits[k] = x % dims[p];
                x /= dims[p];
            }
            let base: usize = rest_pos
                .iter()
                .zip(&rest_digits)
                .map(|(&p, &d)| d * strides[p])
                .sum();
            let mut y;
            for s in 0..sub {
                y = s;
                let mut offset = 0;
                for &p in positions.iter().rev() {
                    offset += (y % dims[p]) * strides[p];
                    y /= dims[p];
                }
                table[r * sub + s] = base + offset;
            }
        }
        FactorSplit { sub, rest, table }
    }
}

fn check_positions(dims: &Dims, positions: &[usize]) -> Result<()> {
    if positions.is_empty() {
        return Err(QptError::Shape("empty factor selection".into()));
    }
    for (k, &p) in positions.iter().enumerate() {
        if p >= dims.len() || positions[..k].contains(&p) {
            return Err(QptError::Shape(format!(
                "invalid factor positions {positions:?} for {} factors",
                dims.len()
            )));
        }
    }
    Ok(())
}

/// `(op ⊗ I_rest) · m` where `op` maps the factors at `positions` (dims from
/// `dims`) onto factors of dimensions `out_dims`.
pub fn apply_left(
    op: &CMatrix,
    m: &CMatrix,
    dims: &Dims,
    positions: &[usize],
    out_dims: &[usize],
) -> Result<(CMatrix, Dims)> {
    check_positions(dims, positions)?;
    if m.nrows() != dims.total() {
        return Err(QptError::Shape(format!(
            "operand has {} rows, layout {:?} needs {}",
            m.nrows(),
            dims.as_slice(),
            dims.total()
        )));
    }
    let in_sub: usize = positions.iter().map(|&p| dims[p]).product();
    let out_sub: usize = out_dims.iter().product();
    if out_dims.len() != positions.len() || op.ncols() != in_sub || op.nrows() != out_sub {
        return Err(QptError::Shape(format!(
            "operator {}x{} does not map factors {:?} of {:?} to {:?}",
            op.nrows(),
            op.ncols(),
            positions,
            dims.as_slice(),
            out_dims
        )));
    }
    let new_dims = dims.replaced(positions, out_dims);
    let src = FactorSplit::new(dims.as_slice(), positions);
    let dst = FactorSplit::new(new_dims.as_slice(), positions);
    let mut out = CMatrix::zeros(new_dims.total(), m.ncols());
    let mut buf = vec![ZERO; in_sub];
    for col in 0..m.ncols() {
        let mcol = m.column(col);
        for r in 0..src.rest {
            for (si, slot) in buf.iter_mut().enumerate() {
                *slot = mcol[src.table[r * in_sub + si]];
            }
            for so in 0..out_sub {
                let mut acc = ZERO;
                for (si, &v) in buf.iter().enumerate() {
                    acc += op[(so, si)] * v;
                }
                out[(dst.table[r * out_sub + so], col)] = acc;
            }
        }
    }
    Ok((out, new_dims))
}

/// `m · (op ⊗ I_rest)†`, the column-space counterpart of [`apply_left`].
pub fn apply_right_adjoint(
    m: &CMatrix,
    op: &CMatrix,
    dims: &Dims,
    positions: &[usize],
    out_dims: &[usize],
) -> Result<(CMatrix, Dims)> {
    let (t, d) = apply_left(op, &m.adjoint(), dims, positions, out_dims)?;
    Ok((t.adjoint(), d))
}

/// `(L ⊗ I) m (R ⊗ I)†` for an operator whose row and column spaces share
/// the layout `dims`.
pub fn sandwich(
    left: &CMatrix,
    m: &CMatrix,
    right: &CMatrix,
    dims: &Dims,
    positions: &[usize],
    out_dims: &[usize],
) -> Result<(CMatrix, Dims)> {
    let (t, new_dims) = apply_left(left, m, dims, positions, out_dims)?;
    let (u, _) = apply_right_adjoint(&t, right, dims, positions, out_dims)?;
    Ok((u, new_dims))
}

/// `(op ⊗ I) m (op ⊗ I)†`
pub fn conjugate_by(
    op: &CMatrix,
    m: &CMatrix,
    dims: &Dims,
    positions: &[usize],
    out_dims: &[usize],
) -> Result<(CMatrix, Dims)> {
    sandwich(op, m, op, dims, positions, out_dims)
}

/// Embeds `op`, acting on `positions`, into the full joint space.
pub fn embed(op: &CMatrix, dims: &Dims, positions: &[usize]) -> Result<CMatrix> {
    let in_dims: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
    let (m, _) = apply_left(op, &identity(dims.total()), dims, positions, &in_dims)?;
    Ok(m)
}

/// Reduced operator on the factors in `keep`, in ascending factor order.
pub fn partial_trace(m: &CMatrix, dims: &Dims, keep: &[usize]) -> Result<CMatrix> {
    if !m.is_square() || m.nrows() != dims.total() {
        return Err(QptError::Shape(format!(
            "partial trace of {}x{} matrix over layout {:?}",
            m.nrows(),
            m.ncols(),
            dims.as_slice()
        )));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(QptError::Shape(format!("keep set {keep:?} out of range")));
    }
    if keep.is_empty() {
        return Ok(CMatrix::from_element(1, 1, m.trace()));
    }
    let split = FactorSplit::new(dims.as_slice(), &keep);
    let mut out = CMatrix::zeros(split.sub, split.sub);
    for b in 0..split.sub {
        for a in 0..split.sub {
            let mut acc = ZERO;
            for r in 0..split.rest {
                acc += m[(split.table[r * split.sub + a], split.table[r * split.sub + b])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}
