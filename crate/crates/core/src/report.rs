//! Reconstruction results shared by all schemes.

use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::process::{chi_distance_masked, ChiDistance, ChiTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Weak,
    /// Weak scheme with all pointers of a setup coupled in one run.
    WeakSingleSetup,
    Strong,
    SigmaX,
    Multi,
    Ancilla,
}

/// How pointer statistics are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// Exact unitary couplings, exact expectation values.
    Exact,
    /// State expanded to second order in the couplings.
    Perturbative,
    /// Finite shots drawn from the exact final state.
    Sampled { shots: u64, seed: u64 },
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Perturbative => "perturbative",
            Mode::Sampled { .. } => "sampled",
        }
    }
}

/// Pre- and post-channel coupling strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub g: f64,
    #[serde(rename = "lambda")]
    pub lam: f64,
}

impl Coupling {
    pub fn new(g: f64, lam: f64) -> Self {
        Coupling { g, lam }
    }

    pub fn symmetric(s: f64) -> Self {
        Coupling { g: s, lam: s }
    }
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::symmetric(1e-3)
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub scheme: Scheme,
    pub mode: Mode,
    /// One entry per particle; a single entry for one-body schemes.
    pub couplings: Vec<Coupling>,
    pub chi_hat: ChiTensor,
    /// Tilde-representation estimate, where the scheme yields one.
    pub chi_tilde_hat: Option<ChiTensor>,
    /// Entries that could not be determined (starved or empty outcomes).
    pub missing: Vec<[usize; 4]>,
    pub truth_distance: Option<ChiDistance>,
    /// Distinct input preparations.
    pub setup_count: usize,
    /// Measured values entering one parameter in its primary experiment.
    pub values_per_parameter: usize,
    /// Auxiliary experiments per parameter (strong scheme only).
    pub extra_experiments_per_parameter: usize,
    pub runtime_ms: f64,
    pub diagnostics: Vec<String>,
}

impl ReconstructionReport {
    /// Distance to `truth` over the determined entries, stored on the report.
    pub fn compare_to(&mut self, truth: &ChiTensor) -> Result<ChiDistance> {
        let missing = &self.missing;
        let d = chi_distance_masked(&self.chi_hat, truth, |idx| !missing.contains(&idx))?;
        self.truth_distance = Some(d);
        Ok(d)
    }

    /// Fails if any entry is missing.
    pub fn require_complete(&self) -> Result<()> {
        match self.missing.first() {
            None => Ok(()),
            Some(idx) => Err(QptError::Contract(format!(
                "{} entries undetermined, first at {idx:?}",
                self.missing.len()
            ))),
        }
    }

    pub fn is_missing(&self, idx: [usize; 4]) -> bool {
        self.missing.contains(&idx)
    }
}
