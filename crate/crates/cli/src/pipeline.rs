use anyhow::{bail, Result};

use wqpt::numkit::{basis_ket, outer};
use wqpt::process::{apply_kraus, chi_from_channel, BasisQuartet};
use wqpt::strong::reconstruct_strong;
use wqpt::variants::{
    ancilla_input, default_ancilla, reconstruct_ancilla, reconstruct_multiparticle,
    reconstruct_qubit_sigma_x, MultiPartiteSpec,
};
use wqpt::weak::{reconstruct, reconstruct_single_setup};
use wqpt::{
    ChiTensor, Exec, KrausChannel, Mode, ReconstructionReport, Representation, WeakRun,
};

use crate::config::{RunConfig, SchemeName};

pub struct Outcome {
    pub report: ReconstructionReport,
    pub truth: Option<ChiTensor>,
}

/// Runs the configured scheme with `mode` overriding the config's own.
pub fn run_with(cfg: &RunConfig, mode: Mode, couplings: Option<&[wqpt::Coupling]>) -> Result<Outcome> {
    let ch = cfg.channel()?;
    let dims = cfg.particle_dims(&ch)?;
    let (pu, pv) = cfg.pointers()?;
    let couplings = match couplings {
        Some(c) => c.to_vec(),
        None => cfg.couplings(dims.len())?,
    };
    let exec = Exec::default();
    let (d_in, d_out) = (ch.d_in(), ch.d_out());
    let c = couplings[0];

    let mut report = match cfg.scheme {
        SchemeName::Weak | SchemeName::WeakSingleSetup | SchemeName::Strong => {
            let bases = cfg.bases.build(d_in, d_out)?;
            let run = WeakRun::new(&ch, &bases, &pu, &pv).coupling(c).mode(mode).exec(exec);
            match cfg.scheme {
                SchemeName::Weak => reconstruct(&run)?,
                SchemeName::Strong => reconstruct_strong(&run)?,
                _ => {
                    if mode != Mode::Exact {
                        bail!("the single-setup scheme simulates exact joint evolution only; set mode to exact");
                    }
                    reconstruct_single_setup(&ch, &bases, &pu, &pv, c, cfg.cap, exec)?
                }
            }
        }
        SchemeName::SigmaX => {
            if (d_in, d_out) != (2, 2) {
                bail!("the σx scheme needs a qubit channel, got {d_in} -> {d_out}");
            }
            reconstruct_qubit_sigma_x(&ch, &pu, &pv, c, mode, cfg.extraction(), exec)?
        }
        SchemeName::Multi => {
            let local_bases = dims
                .iter()
                .map(|&(a, b)| cfg.bases.build(a, b))
                .collect::<wqpt::Result<Vec<_>>>()?;
            let spec = MultiPartiteSpec {
                pointers: vec![(pu.clone(), pv.clone()); dims.len()],
                local_bases,
                couplings,
                cap: cfg.cap,
            };
            reconstruct_multiparticle(&ch, &spec, mode, exec)?
        }
        SchemeName::Ancilla => {
            let anc = match cfg.gamma()? {
                Some(g) => ancilla_input(g, cfg.bases.build(d_in, d_out)?)?,
                None => default_ancilla(d_in, d_out)?,
            };
            reconstruct_ancilla(&ch, &anc, &pu, &pv, c, mode, exec)?
        }
    };

    let truth = if cfg.truth {
        let t = match cfg.scheme {
            SchemeName::SigmaX => computational_chi(&ch)?,
            _ => chi_from_channel(&ch, report.chi_hat.bases())?,
        };
        report.compare_to(&t)?;
        Some(t)
    } else {
        None
    };
    Ok(Outcome { report, truth })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    run_with(cfg, cfg.mode(), None)
}

/// `χ_abcd = <c| E(|b><a|) |d>`. Written out directly because the
/// computational quartet has vanishing overlaps.
pub fn computational_chi(ch: &KrausChannel) -> Result<ChiTensor> {
    let (di, dout) = (ch.d_in(), ch.d_out());
    let bases = BasisQuartet::computational(di, dout);
    let mut entries = Vec::with_capacity(di * di * dout * dout);
    for a in 0..di {
        for b in 0..di {
            let img = apply_kraus(ch, &outer(&basis_ket(di, b), &basis_ket(di, a)))?;
            for c in 0..dout {
                for d in 0..dout {
                    entries.push(img[(c, d)]);
                }
            }
        }
    }
    Ok(ChiTensor::from_entries(bases, Representation::Standard, entries)?)
}
