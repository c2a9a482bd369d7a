//! Shot-based readout: joint Born statistics of a post-selection outcome and
//! pointer eigenvalues, sampled with counter-based seeding.
//!
//! Each readout configuration (a choice of observable on each read pointer)
//! receives an even share of the shots. Shots are drawn in fixed-size
//! blocks whose RNG is seeded from `(seed, stream, config, block)`, and only
//! integer counts are accumulated, so results do not depend on how the work
//! is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{QptError, Result};
use crate::joint::JointState;
use crate::numkit::{kron_all, CMatrix, CVector};
use crate::pointer::ReadoutBasis;

pub const BLOCK_SHOTS: u64 = 1 << 16;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one block of shots.
pub fn block_seed(seed: u64, stream: u64, config: u64, block: u64) -> u64 {
    [stream, config, block]
        .iter()
        .fold(splitmix(seed), |acc, &x| splitmix(acc ^ splitmix(x)))
}

/// Counts for `n` draws from a categorical distribution, via conditional
/// binomials.
pub fn multinomial(n: u64, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = if q <= 0.0 {
            0
        } else if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out[k] = x;
        left -= x;
        mass -= p;
    }
    out
}

/// One read pointer: its factor position and the eigenbasis of the
/// observable read on it.
#[derive(Debug, Clone, Copy)]
pub struct Readout<'a> {
    pub position: usize,
    pub basis: &'a ReadoutBasis,
}

/// Conditional statistics of the product of read eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalStat {
    pub count: u64,
    pub mean: f64,
    /// Standard error of the mean; NaN with fewer than two samples.
    pub std_err: f64,
}

/// Statistics indexed by `[outcome][config]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub shots: u64,
    pub stats: Vec<Vec<ConditionalStat>>,
}

impl SampleTable {
    pub fn outcome_frequency(&self, outcome: usize) -> f64 {
        let n: u64 = self.stats[outcome].iter().map(|s| s.count).sum();
        n as f64 / self.shots as f64
    }
}

/// Every combination of one ket per post-selected factor, first factor most
/// significant.
pub fn outcome_kets(post: &[(usize, &CMatrix)]) -> Vec<Vec<(usize, CVector)>> {
    let mut out: Vec<Vec<(usize, CVector)>> = vec![Vec::new()];
    for &(pos, basis) in post {
        let mut next = Vec::with_capacity(out.len() * basis.ncols());
        for prefix in &out {
            for k in 0..basis.ncols() {
                let mut v = prefix.clone();
                v.push((pos, basis.column(k).into_owned()));
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Categories `(outcome, eigenvalue product, probability)` for one config.
fn categories(
    state: &JointState,
    outcomes: &[Vec<(usize, CVector)>],
    readouts: &[Readout<'_>],
) -> Result<Vec<(usize, f64, f64)>> {
    if readouts.windows(2).any(|w| w[0].position >= w[1].position) {
        return Err(QptError::Contract(
            "readout positions must be strictly ascending".into(),
        ));
    }
    let keep: Vec<usize> = readouts.iter().map(|r| r.position).collect();
    let rot = kron_all(readouts.iter().map(|r| &r.basis.vectors));
    // eigenvector column -> cluster, per readout
    let member: Vec<Vec<usize>> = readouts
        .iter()
        .map(|r| {
            let mut m = vec![0; r.basis.vectors.ncols()];
            for (ci, (_, cols)) in r.basis.clusters.iter().enumerate() {
                for &col in cols {
                    m[col] = ci;
                }
            }
            m
        })
        .collect();
    let n_clusters: Vec<usize> = readouts.iter().map(|r| r.basis.clusters.len()).collect();
    let n_tuples: usize = n_clusters.iter().product();
    let values: Vec<f64> = (0..n_tuples)
        .map(|t| {
            let mut rest = t;
            let mut v = 1.0;
            for (k, r) in readouts.iter().enumerate().rev() {
                v *= r.basis.clusters[rest % n_clusters[k]].0;
                rest /= n_clusters[k];
            }
            v
        })
        .collect();
    let mut cats = Vec::with_capacity(outcomes.len() * n_tuples);
    for (f, kets) in outcomes.iter().enumerate() {
        let refs: Vec<(usize, &CVector)> = kets.iter().map(|(p, k)| (*p, k)).collect();
        let red = state.condition_all(&refs)?.reduced(&keep)?;
        let diag = (rot.adjoint() * red * &rot).diagonal();
        let mut probs = vec![0.0; n_tuples];
        for (flat, z) in diag.iter().enumerate() {
            let mut rest = flat;
            let mut tuple = 0;
            let mut radix = 1;
            for k in (0..readouts.len()).rev() {
                let size = member[k].len();
                tuple += member[k][rest % size] * radix;
                radix *= n_clusters[k];
                rest /= size;
            }
            probs[tuple] += z.re;
        }
        for (t, p) in probs.into_iter().enumerate() {
            cats.push((f, values[t], p.max(0.0)));
        }
    }
    Ok(cats)
}

/// Samples `shots` readouts split evenly across `configs`.
///
/// `state` is the joint state just before the final measurement; `post`
/// lists the measured system factors with their bases. `stream`
/// distinguishes independent runs sharing one seed.
pub fn sample_readouts(
    state: &JointState,
    post: &[(usize, &CMatrix)],
    configs: &[Vec<Readout<'_>>],
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<SampleTable> {
    if shots == 0 {
        return Err(QptError::Contract("shots must be at least 1".into()));
    }
    let outcomes = outcome_kets(post);
    let n_cfg = configs.len() as u64;
    let mut stats = vec![Vec::with_capacity(configs.len()); outcomes.len()];
    for (c, readouts) in configs.iter().enumerate() {
        let cats = categories(state, &outcomes, readouts)?;
        let probs: Vec<f64> = cats.iter().map(|c| c.2).collect();
        let share = shots / n_cfg + u64::from((c as u64) < shots % n_cfg);
        let mut counts = vec![0u64; cats.len()];
        let mut done = 0u64;
        let mut block = 0u64;
        while done < share {
            let n = (share - done).min(BLOCK_SHOTS);
            let mut rng = ChaCha8Rng::seed_from_u64(block_seed(seed, stream, c as u64, block));
            for (acc, x) in counts.iter_mut().zip(multinomial(n, &probs, &mut rng)) {
                *acc += x;
            }
            done += n;
            block += 1;
        }
        for (f, row) in stats.iter_mut().enumerate() {
            let mut n = 0u64;
            let mut sum = 0.0;
            for ((cf, v, _), &k) in cats.iter().zip(&counts) {
                if *cf == f {
                    n += k;
                    sum += *v * k as f64;
                }
            }
            let mean = if n > 0 { sum / n as f64 } else { f64::NAN };
            let std_err = if n > 1 {
                let ss: f64 = cats
                    .iter()
                    .zip(&counts)
                    .filter(|((cf, _, _), _)| *cf == f)
                    .map(|((_, v, _), &k)| k as f64 * (v - mean).powi(2))
                    .sum();
                (ss / (n - 1) as f64 / n as f64).sqrt()
            } else {
                f64::NAN
            };
            row.push(ConditionalStat {
                count: n,
                mean,
                std_err,
            });
        }
    }
    Ok(SampleTable { shots, stats })
}
