//! Seeded random matrices, states and perturbations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numkit::{c, CMatrix, CVector};

fn normal_c<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Complex Ginibre matrix with standard normal entries.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| normal_c(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_matrix(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Full-rank density matrix from the Hilbert-Schmidt ensemble.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_matrix(d, d, rng);
    let w = &g * g.adjoint();
    let tr = w.trace();
    w / tr
}

pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| normal_c(rng));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_matrix(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Rotates `v` by `angle` towards a random unit direction orthogonal to it.
pub fn rotate_ket<R: Rng + ?Sized>(v: &CVector, angle: f64, rng: &mut R) -> CVector {
    let d = v.len();
    if d < 2 || angle == 0.0 {
        return v.clone();
    }
    let unit = v / c(v.norm(), 0.0);
    let mut w;
    loop {
        w = CVector::from_fn(d, |_, _| normal_c(rng));
        let proj = unit.dotc(&w);
        w -= &unit * proj;
        if w.norm() > 1e-8 {
            break;
        }
    }
    let w = &w / c(w.norm(), 0.0);
    unit.scale(angle.cos()) + w.scale(angle.sin())
}
