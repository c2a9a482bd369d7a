//! Simulation and reconstruction for quantum process tomography with weak
//! pointer measurements.
//!
//! A process `E` is described by the χ tensor over four bases,
//! `E(Ω) = Σ χ[i1,i2,i3,i4] <α_i2|Ω|ψ_i1> |β_i3><φ_i4|`. Each entry is an
//! X-value `tr[Π_f B E(A ρ)]` divided by two basis overlaps, and each
//! X-value is recovered from four pointer correlators (r-values) and one
//! post-selection probability.
//!
//! Modules:
//! - [`numkit`], [`process`], [`pointer`]: linear algebra, channels, χ
//!   tensors and pointer models.
//! - [`weak`]: the main weak-coupling scheme and its single-setup mode.
//! - [`strong`]: the exact arbitrary-strength scheme for projector couplings.
//! - [`variants`]: the single-qubit σx scheme, the multi-particle scheme and
//!   the ancilla-assisted scheme.
//! - [`accum`]: systematic-error accumulation under basis misalignment.

pub mod accum;
pub mod channels;
pub mod error;
pub mod exec;
pub mod joint;
pub mod numkit;
pub mod pointer;
pub mod process;
pub mod random;
pub mod report;
pub mod sampling;
pub mod serial;
pub mod strong;
pub mod variants;
pub mod weak;

pub use error::{QptError, Result};
pub use exec::Exec;
pub use numkit::{CMatrix, CVector, Dims};
pub use pointer::{PointerConstants, PointerSpec};
pub use process::{BasisQuartet, ChiDistance, ChiTensor, KrausChannel, Representation};
pub use report::{Coupling, Mode, ReconstructionReport, Scheme};
pub use weak::{RValueRecord, Setting, WeakRun};
