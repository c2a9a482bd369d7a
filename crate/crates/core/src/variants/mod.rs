//! Scheme variants: the single-qubit σx scheme with its r4-only
//! extraction, the multi-particle scheme, and the ancilla-assisted scheme.

pub mod ancilla;
pub mod multi;
pub mod sigma_x;

pub use ancilla::{
    ancilla_input, default_ancilla, reconstruct_ancilla, reconstruct_ancilla_product,
    AncillaConfig,
};
pub use multi::{reconstruct_multiparticle, MultiPartiteSpec};
pub use sigma_x::{
    r4_forward, reconstruct_qubit_sigma_x, sigma_x_runs, weak_value_from_shifts, x_from_r4_only,
    QubitSigmaXRun, SigmaXExtraction,
};
