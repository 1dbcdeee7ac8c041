//! Random probe vectors and Hutchinson-style trace estimation.
//!
//! Probes are counter-based: draw `i` of a source depends only on
//! `(seed, stream, i)`, so draws can be produced in any order or in parallel
//! and still reproduce bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DosError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeDistribution {
    /// i.i.d. standard normal entries.
    #[default]
    Gaussian,
    /// i.i.d. uniform `+-1` entries.
    Rademacher,
    /// Draw `i` is `sqrt(n) e_{i mod n}`; averaging a full sweep of `n`
    /// draws reproduces the trace exactly. Used for exhaustive oracle runs.
    Canonical,
}

impl std::str::FromStr for ProbeDistribution {
    type Err = DosError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(ProbeDistribution::Gaussian),
            "rademacher" => Ok(ProbeDistribution::Rademacher),
            "canonical" | "basis" => Ok(ProbeDistribution::Canonical),
            other => Err(DosError::InvalidParameter(format!(
                "unknown probe distribution '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeVectorSource {
    pub distribution: ProbeDistribution,
    pub seed: u64,
    pub dimension: usize,
    /// Independent sub-stream id; sources with different streams never share
    /// draws.
    pub stream: u64,
}

impl ProbeVectorSource {
    pub fn new(distribution: ProbeDistribution, seed: u64, dimension: usize) -> Self {
        ProbeVectorSource {
            distribution,
            seed,
            dimension,
            stream: 0,
        }
    }

    pub fn gaussian(seed: u64, dimension: usize) -> Self {
        Self::new(ProbeDistribution::Gaussian, seed, dimension)
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    fn rng(&self, index: u64) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let word = splitmix64(&mut state) ^ self.stream.wrapping_mul(0xd134_2543_de82_ef95).rotate_left(i as u32 * 16);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// Draw number `index` from this source.
    pub fn draw(&self, index: u64) -> Vec<f64> {
        let n = self.dimension;
        match self.distribution {
            ProbeDistribution::Gaussian => {
                let mut rng = self.rng(index);
                (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
            ProbeDistribution::Rademacher => {
                let mut rng = self.rng(index);
                (0..n)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            }
            ProbeDistribution::Canonical => {
                let mut v = vec![0.0; n];
                if n > 0 {
                    v[(index % n as u64) as usize] = (n as f64).sqrt();
                }
                v
            }
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Pairwise (cascade) summation; fixed association order for a given length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Element-wise pairwise mean of equally long rows.
pub(crate) fn pairwise_mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let len = rows.first().map_or(0, Vec::len);
    let count = rows.len() as f64;
    let mut column = vec![0.0; rows.len()];
    (0..len)
        .map(|k| {
            for (c, row) in column.iter_mut().zip(rows) {
                *c = row[k];
            }
            pairwise_sum(&column) / count
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub value: f64,
    pub n_samples: usize,
    /// Unbiased sample variance of the individual quadratic forms.
    pub sample_variance: f64,
}

impl TraceEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        let mean = pairwise_sum(samples) / count as f64;
        let variance = if count > 1 {
            let dev: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
            pairwise_sum(&dev) / (count - 1) as f64
        } else {
            0.0
        };
        TraceEstimate {
            value: mean,
            n_samples: count,
            sample_variance: variance,
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.sample_variance / self.n_samples as f64).sqrt()
    }
}

/// Estimates `Trace f(A)` as the mean of `v^T f(A) v` over `n_vec` probes.
pub fn estimate_trace_quadratic<F>(
    apply_f: F,
    src: &ProbeVectorSource,
    n_vec: usize,
) -> Result<TraceEstimate>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if n_vec == 0 {
        return Err(DosError::InvalidParameter(
            "trace estimation needs at least one probe vector".into(),
        ));
    }
    let samples: Vec<f64> = (0..n_vec as u64)
        .into_par_iter()
        .map(|l| -> Result<f64> {
            let v = src.draw(l);
            let fv = apply_f(&v);
            if fv.len() != v.len() {
                return Err(DosError::DimensionMismatch {
                    expected: v.len(),
                    got: fv.len(),
                });
            }
            Ok(v.iter().zip(&fv).map(|(a, b)| a * b).sum())
        })
        .collect::<Result<_>>()?;
    Ok(TraceEstimate::from_samples(&samples))
}
