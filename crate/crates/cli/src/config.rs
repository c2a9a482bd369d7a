//! Run configuration: a single JSON document, complex numbers as `[re, im]`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use wqpt::channels::{standard_channel, QuartetSpec, StandardChannel};
use wqpt::numkit::CMatrix;
use wqpt::pointer::{custom_pointer, gaussian_pointer, qubit_pointer, tilted_qubit_pointer};
use wqpt::serial::{matrix_from_pairs, ComplexMatrix};
use wqpt::variants::SigmaXExtraction;
use wqpt::weak::DEFAULT_JOINT_CAP;
use wqpt::{Coupling, KrausChannel, Mode, PointerSpec};

pub const OUTPUT_DIR_ENV: &str = "WQPT_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "wqpt-out";
pub const DEFAULT_SHOTS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Weak,
    /// All pointers of one input preparation coupled in a single run.
    WeakSingleSetup,
    Strong,
    SigmaX,
    Multi,
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    #[default]
    Perturbative,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionName {
    #[default]
    Full,
    R4Only,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum PointerConfig {
    #[default]
    Qubit,
    TiltedQubit,
    Gaussian {
        delta: f64,
        #[serde(default = "default_fock")]
        n_max: usize,
    },
    Custom {
        sigma: ComplexMatrix,
        p: ComplexMatrix,
        q: ComplexMatrix,
    },
}

fn default_fock() -> usize {
    wqpt::pointer::DEFAULT_FOCK_CUTOFF
}


impl PointerConfig {
    pub fn build(&self) -> Result<PointerSpec> {
        Ok(match self {
            PointerConfig::Qubit => qubit_pointer(),
            PointerConfig::TiltedQubit => tilted_qubit_pointer(),
            PointerConfig::Gaussian { delta, n_max } => gaussian_pointer(*delta, *n_max)?,
            PointerConfig::Custom { sigma, p, q } => custom_pointer(
                matrix_from_pairs(sigma)?,
                matrix_from_pairs(p)?,
                matrix_from_pairs(q)?,
                "custom",
            )?,
        })
    }
}

/// `[d_in, d_out]`, or one such pair per particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimsConfig {
    Single([usize; 2]),
    PerParticle(Vec<[usize; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingConfig {
    Single(Coupling),
    PerParticle(Vec<Coupling>),
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig::Single(Coupling::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: SchemeName,
    pub channel: StandardChannel,
    /// Inferred from the channel when absent; required for `multi`.
    #[serde(default)]
    pub dims: Option<DimsConfig>,
    /// Default: computational ψ and φ, Fourier α and β.
    #[serde(default)]
    pub bases: QuartetSpec,
    #[serde(default)]
    pub pointer: PointerConfig,
    /// Second pointer; defaults to `pointer`.
    #[serde(default)]
    pub pointer_v: Option<PointerConfig>,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; falls back to `$WQPT_OUTPUT_DIR`, then `wqpt-out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Cap on joint Hilbert-space dimensions.
    #[serde(default = "default_cap")]
    pub cap: usize,
    /// σx scheme only.
    #[serde(default)]
    pub extraction: ExtractionName,
    /// Ancilla amplitudes `γ[i1][i2]`; the maximally entangled input when absent.
    #[serde(default)]
    pub gamma: Option<ComplexMatrix>,
    /// Compare against the channel's own χ. Off reports no truth fields.
    #[serde(default = "default_true")]
    pub truth: bool,
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_cap() -> usize {
    DEFAULT_JOINT_CAP
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        match serde_path_to_error::deserialize(de) {
            Ok(cfg) => Ok(cfg),
            Err(err) => {
                let path = err.path().to_string();
                let inner = err.into_inner();
                bail!("config error in field `{path}`: {inner}")
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeName::Exact => Mode::Exact,
            ModeName::Perturbative => Mode::Perturbative,
            ModeName::Sampled => Mode::Sampled {
                shots: self.shots,
                seed: self.seed,
            },
        }
    }

    pub fn extraction(&self) -> SigmaXExtraction {
        match self.extraction {
            ExtractionName::Full => SigmaXExtraction::Full,
            ExtractionName::R4Only => SigmaXExtraction::R4Only,
        }
    }

    pub fn channel(&self) -> Result<KrausChannel> {
        Ok(standard_channel(&self.channel)?)
    }

    pub fn pointers(&self) -> Result<(PointerSpec, PointerSpec)> {
        let pu = self.pointer.build()?;
        let pv = match &self.pointer_v {
            Some(p) => p.build()?,
            None => pu.clone(),
        };
        Ok((pu, pv))
    }

    /// Per-particle `(d_in, d_out)`; a single entry outside the multi scheme.
    pub fn particle_dims(&self, ch: &KrausChannel) -> Result<Vec<(usize, usize)>> {
        let dims: Vec<(usize, usize)> = match &self.dims {
            None => vec![(ch.d_in(), ch.d_out())],
            Some(DimsConfig::Single([a, b])) => vec![(*a, *b)],
            Some(DimsConfig::PerParticle(v)) => v.iter().map(|[a, b]| (*a, *b)).collect(),
        };
        let (pi, po) = dims
            .iter()
            .fold((1usize, 1usize), |(x, y), (a, b)| (x * a, y * b));
        if (pi, po) != (ch.d_in(), ch.d_out()) {
            bail!(
                "dims multiply to {pi}x{po} but the channel maps {} -> {}",
                ch.d_in(),
                ch.d_out()
            );
        }
        if dims.len() > 1 && self.scheme != SchemeName::Multi {
            bail!("per-particle dims are only meaningful for the multi scheme");
        }
        Ok(dims)
    }

    pub fn couplings(&self, n: usize) -> Result<Vec<Coupling>> {
        match &self.coupling {
            CouplingConfig::Single(c) => Ok(vec![*c; n]),
            CouplingConfig::PerParticle(v) if v.len() == n => Ok(v.clone()),
            CouplingConfig::PerParticle(v) => {
                bail!("{} couplings given for {n} particles", v.len())
            }
        }
    }

    pub fn gamma(&self) -> Result<Option<CMatrix>> {
        self.gamma
            .as_ref()
            .map(|g| matrix_from_pairs(g).map_err(Into::into))
            .transpose()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_str(r#"{"scheme": "weak", "channel": {"name": "identity"}}"#).unwrap();
        assert_eq!(cfg.mode, ModeName::Perturbative);
        assert_eq!(cfg.pointer, PointerConfig::Qubit);
        assert_eq!(cfg.couplings(1).unwrap(), vec![Coupling::default()]);
        assert_eq!(cfg.cap, DEFAULT_JOINT_CAP);
        assert!(cfg.truth);
    }

    #[test]
    fn unknown_fields_name_their_location() {
        let err = RunConfig::from_str("{\n  \"scheme\": \"weak\",\n  \"chanel\": 1\n}").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("chanel"), "{msg}");
    }

    #[test]
    fn per_particle_fields() {
        let cfg = RunConfig::from_str(
            r#"{"scheme": "multi", "channel": {"name": "cnot"}, "dims": [[2, 2], [2, 2]],
                "coupling": [{"g": 1e-3, "lambda": 1e-3}, {"g": 2e-3, "lambda": 1e-3}]}"#,
        )
        .unwrap();
        let ch = cfg.channel().unwrap();
        assert_eq!(cfg.particle_dims(&ch).unwrap(), vec![(2, 2), (2, 2)]);
        assert_eq!(cfg.couplings(2).unwrap()[1].g, 2e-3);
        assert!(cfg.couplings(3).is_err());
    }
}
