//! Named ground-truth channels and bases, as accepted by run configurations.

use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::numkit::CMatrix;
use crate::process::{self, BasisQuartet, KrausChannel};
use crate::serial::{matrix_from_pairs, ComplexMatrix};

fn default_qubit() -> usize {
    2
}

/// Ground-truth channel description. Serialized with a `name` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum StandardChannel {
    Identity {
        #[serde(default = "default_qubit")]
        dim: usize,
    },
    Unitary {
        matrix: ComplexMatrix,
    },
    Hadamard,
    Cnot,
    AmplitudeDamping {
        gamma: f64,
        #[serde(default = "default_qubit")]
        dim: usize,
    },
    Depolarizing {
        p: f64,
        #[serde(default = "default_qubit")]
        dim: usize,
    },
    /// Tensor product of channels, first factor most significant.
    Tensor {
        factors: Vec<StandardChannel>,
    },
    /// Explicit Kraus operators, each `d_out x d_in`.
    Kraus {
        operators: Vec<ComplexMatrix>,
    },
}

pub const CHANNEL_NAMES: [&str; 8] = [
    "identity",
    "unitary",
    "hadamard",
    "cnot",
    "amplitude_damping",
    "depolarizing",
    "tensor",
    "kraus",
];

impl StandardChannel {
    /// Builds a parameterless or single-parameter channel from its name.
    pub fn from_name(name: &str, param: Option<f64>, dim: usize) -> Result<Self> {
        let need = |p: Option<f64>| {
            p.ok_or_else(|| QptError::Contract(format!("channel `{name}` needs a parameter")))
        };
        Ok(match name {
            "identity" => StandardChannel::Identity { dim },
            "hadamard" => StandardChannel::Hadamard,
            "cnot" => StandardChannel::Cnot,
            "amplitude_damping" => StandardChannel::AmplitudeDamping {
                gamma: need(param)?,
                dim,
            },
            "depolarizing" => StandardChannel::Depolarizing {
                p: need(param)?,
                dim,
            },
            other => return Err(QptError::UnknownChannel(other.to_string())),
        })
    }

    /// Same channel family at another dimension, where that makes sense.
    pub fn at_dim(&self, dim: usize) -> Result<Self> {
        Ok(match self {
            StandardChannel::Identity { .. } => StandardChannel::Identity { dim },
            StandardChannel::AmplitudeDamping { gamma, .. } => {
                StandardChannel::AmplitudeDamping { gamma: *gamma, dim }
            }
            StandardChannel::Depolarizing { p, .. } => StandardChannel::Depolarizing { p: *p, dim },
            other => {
                return Err(QptError::Contract(format!(
                    "channel {other:?} has a fixed dimension"
                )))
            }
        })
    }
}

/// Factory for ground-truth Kraus channels.
pub fn standard_channel(spec: &StandardChannel) -> Result<KrausChannel> {
    match spec {
        StandardChannel::Identity { dim } => {
            if *dim == 0 {
                return Err(QptError::Shape("identity channel needs dim >= 1".into()));
            }
            Ok(KrausChannel::identity(*dim))
        }
        StandardChannel::Unitary { matrix } => KrausChannel::unitary(matrix_from_pairs(matrix)?),
        StandardChannel::Hadamard => KrausChannel::unitary(process::hadamard_gate()),
        StandardChannel::Cnot => KrausChannel::unitary(process::cnot_gate()),
        StandardChannel::AmplitudeDamping { gamma, dim } => process::amplitude_damping(*gamma, *dim),
        StandardChannel::Depolarizing { p, dim } => process::depolarizing(*p, *dim),
        StandardChannel::Tensor { factors } => {
            let mut it = factors.iter();
            let first = it
                .next()
                .ok_or_else(|| QptError::Shape("empty tensor product".into()))?;
            let mut acc = standard_channel(first)?;
            for f in it {
                acc = acc.tensor(&standard_channel(f)?);
            }
            Ok(acc)
        }
        StandardChannel::Kraus { operators } => {
            let ks = operators
                .iter()
                .map(matrix_from_pairs)
                .collect::<Result<Vec<CMatrix>>>()?;
            KrausChannel::new(ks)
        }
    }
}

/// Named basis for one of the four slots of a quartet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedBasis {
    Computational,
    Fourier,
    Hadamard,
    Explicit(ComplexMatrix),
}

impl NamedBasis {
    pub fn build(&self, d: usize) -> Result<CMatrix> {
        let m = match self {
            NamedBasis::Computational => process::computational_basis(d),
            NamedBasis::Fourier => process::fourier_basis(d),
            NamedBasis::Hadamard => process::hadamard_basis(d)?,
            NamedBasis::Explicit(m) => matrix_from_pairs(m)?,
        };
        if m.nrows() != d {
            return Err(QptError::Shape(format!(
                "basis has dimension {}, expected {d}",
                m.nrows()
            )));
        }
        Ok(m)
    }
}

/// Quartet of named bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuartetSpec {
    pub psi: NamedBasis,
    pub alpha: NamedBasis,
    pub beta: NamedBasis,
    pub phi: NamedBasis,
}

impl Default for QuartetSpec {
    fn default() -> Self {
        QuartetSpec {
            psi: NamedBasis::Computational,
            alpha: NamedBasis::Fourier,
            beta: NamedBasis::Fourier,
            phi: NamedBasis::Computational,
        }
    }
}

impl QuartetSpec {
    pub fn build(&self, d_in: usize, d_out: usize) -> Result<BasisQuartet> {
        BasisQuartet::new(
            self.psi.build(d_in)?,
            self.alpha.build(d_in)?,
            self.beta.build(d_out)?,
            self.phi.build(d_out)?,
        )
    }
}
