//! Trajectory descriptors, codebook learning, and bag-of-words
//! histogram encoding.

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{GaitError, Result};
use crate::numerics::kmeans::{kmeans_lloyd, nearest_center};
use crate::rgbd::Trajectory3D;

/// Per-training-sample cap on descriptors pooled for clustering.
pub const MAX_DESCRIPTORS_PER_SAMPLE: usize = 1000;
/// Global cap on the clustering pool.
pub const MAX_POOLED_DESCRIPTORS: usize = 1_000_000;
/// Number of independently seeded k-means runs; the cheapest wins.
pub const KMEANS_RESTARTS: usize = 10;
/// Default codebook size.
pub const DEFAULT_CODEBOOK_SIZE: usize = 1024;

/// Which displacement channels feed the descriptor. The complementary
/// block is zeroed before both clustering and encoding, so each variant
/// learns its own codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRestriction {
    /// Full spatial + depth descriptor.
    Full,
    /// Depth displacements only; the spatial block is zeroed.
    DepthOnly,
    /// Spatial displacements only; the depth block is zeroed.
    SpatialOnly,
}

/// A normalized displacement descriptor of length 3L:
/// (Δx_1..Δx_L, Δy_1..Δy_L, Δz_1..Δz_L).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajDescriptor {
    pub values: Vec<f64>,
}

impl TrajDescriptor {
    pub fn track_len(&self) -> usize {
        self.values.len() / 3
    }
}

/// Builds the normalized displacement descriptor of a track.
///
/// The spatial block is divided by Σ_t‖(Δx_t, Δy_t)‖₂ and the depth
/// block by Σ_t|Δz_t|; a zero-sum block stays all-zero.
pub fn describe(traj: &Trajectory3D, track_len: usize) -> Result<TrajDescriptor> {
    describe_restricted(traj, track_len, ChannelRestriction::Full)
}

pub fn describe_restricted(
    traj: &Trajectory3D,
    track_len: usize,
    restriction: ChannelRestriction,
) -> Result<TrajDescriptor> {
    if traj.points.len() != track_len + 1 {
        return Err(GaitError::Dimension {
            expected: track_len + 1,
            got: traj.points.len(),
        });
    }
    let l = track_len;
    let mut dx = Vec::with_capacity(l);
    let mut dy = Vec::with_capacity(l);
    let mut dz = Vec::with_capacity(l);
    for pair in traj.points.windows(2) {
        dx.push(pair[1][0] - pair[0][0]);
        dy.push(pair[1][1] - pair[0][1]);
        dz.push(pair[1][2] - pair[0][2]);
    }
    if restriction == ChannelRestriction::DepthOnly {
        dx.iter_mut().for_each(|v| *v = 0.0);
        dy.iter_mut().for_each(|v| *v = 0.0);
    }
    if restriction == ChannelRestriction::SpatialOnly {
        dz.iter_mut().for_each(|v| *v = 0.0);
    }
    let spatial_sum: f64 = dx
        .iter()
        .zip(&dy)
        .map(|(x, y)| (x * x + y * y).sqrt())
        .sum();
    if spatial_sum > 0.0 {
        for v in dx.iter_mut().chain(dy.iter_mut()) {
            *v /= spatial_sum;
        }
    }
    let depth_sum: f64 = dz.iter().map(|z| z.abs()).sum();
    if depth_sum > 0.0 {
        for v in dz.iter_mut() {
            *v /= depth_sum;
        }
    }
    let mut values = dx;
    values.extend(dy);
    values.extend(dz);
    Ok(TrajDescriptor { values })
}

/// K cluster centers in descriptor space.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub centers: Vec<Vec<f64>>,
    pub kmeans_cost: f64,
    pub seed: u64,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map(|c| c.len()).unwrap_or(0)
    }
}

/// Hard-assignment histogram over codebook centers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajHistogram {
    pub counts: Vec<u64>,
}

impl TrajHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Learns a codebook by restarted Lloyd k-means.
///
/// Up to 1,000 descriptors are sampled per training sample (uniform,
/// seeded) and at most 1,000,000 pooled; k-means runs 10 times with
/// derived seeds and the run with minimal within-cluster cost wins.
pub fn fit_codebook(
    training_samples: &[Vec<TrajDescriptor>],
    k: usize,
    seed: u64,
) -> Result<Codebook> {
    if k < 2 {
        return Err(GaitError::Validation(format!("K must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<Vec<f64>> = Vec::new();
    for descriptors in training_samples {
        if descriptors.len() <= MAX_DESCRIPTORS_PER_SAMPLE {
            pool.extend(descriptors.iter().map(|d| d.values.clone()));
        } else {
            let picks = sample(&mut rng, descriptors.len(), MAX_DESCRIPTORS_PER_SAMPLE);
            pool.extend(picks.iter().map(|i| descriptors[i].values.clone()));
        }
        if pool.len() >= MAX_POOLED_DESCRIPTORS {
            pool.truncate(MAX_POOLED_DESCRIPTORS);
            break;
        }
    }
    if pool.len() < k {
        return Err(GaitError::Validation(format!(
            "codebook fitting needs at least K={k} descriptors, got {}",
            pool.len()
        )));
    }
    let dim = pool[0].len();
    if pool.iter().any(|d| d.len() != dim) {
        return Err(GaitError::Validation(
            "descriptors of mixed dimension in codebook pool".into(),
        ));
    }

    let mut best: Option<crate::numerics::KmeansResult> = None;
    for restart in 0..KMEANS_RESTARTS {
        let run_seed = seed
            .wrapping_mul(0x9E3779B97F4A7C15)
            .wrapping_add(restart as u64 + 1);
        let result = kmeans_lloyd(&pool, k, run_seed)?;
        if best.as_ref().map(|b| result.cost < b.cost).unwrap_or(true) {
            best = Some(result);
        }
    }
    let best = best.unwrap();
    Ok(Codebook {
        centers: best.centers,
        kmeans_cost: best.cost,
        seed,
    })
}

/// Hard-assignment encoding: each descriptor increments its nearest
/// center's count (Euclidean, ties to the lowest index). An empty
/// descriptor list yields a valid all-zero histogram.
pub fn encode(descriptors: &[TrajDescriptor], codebook: &Codebook) -> Result<TrajHistogram> {
    let mut counts = vec![0u64; codebook.k()];
    for d in descriptors {
        if d.values.len() != codebook.dim() {
            return Err(GaitError::Dimension {
                expected: codebook.dim(),
                got: d.values.len(),
            });
        }
        counts[nearest_center(&d.values, &codebook.centers)] += 1;
    }
    Ok(TrajHistogram { counts })
}

const TGC_MAGIC: &[u8; 4] = b"TGC1";

/// Serializes a codebook: magic `TGC1`, u64 K / dim / seed, the final
/// cost, then row-major centers as little-endian f64.
pub fn save_codebook(path: &Path, codebook: &Codebook) -> Result<()> {
    let k = codebook.k();
    let dim = codebook.dim();
    let mut buf = Vec::with_capacity(4 + 8 * (4 + k * dim));
    buf.extend_from_slice(TGC_MAGIC);
    buf.extend_from_slice(&(k as u64).to_le_bytes());
    buf.extend_from_slice(&(dim as u64).to_le_bytes());
    buf.extend_from_slice(&codebook.seed.to_le_bytes());
    buf.extend_from_slice(&codebook.kmeans_cost.to_le_bytes());
    for center in &codebook.centers {
        for v in center {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| GaitError::io(path, e))
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    let data = std::fs::read(path).map_err(|e| GaitError::io(path, e))?;
    if data.len() < 4 + 32 || &data[0..4] != TGC_MAGIC {
        return Err(GaitError::Format(format!(
            "{}: not a TGC1 codebook file",
            path.display()
        )));
    }
    let u64_at = |off: usize| u64::from_le_bytes(data[off..off + 8].try_into().unwrap());
    let k = u64_at(4) as usize;
    let dim = u64_at(12) as usize;
    let seed = u64_at(20);
    let kmeans_cost = f64::from_le_bytes(data[28..36].try_into().unwrap());
    let expected = 36 + 8 * k * dim;
    if data.len() != expected {
        return Err(GaitError::Format(format!(
            "{}: truncated TGC1 payload",
            path.display()
        )));
    }
    let mut centers = Vec::with_capacity(k);
    let mut pos = 36;
    for _ in 0..k {
        let center = data[pos..pos + 8 * dim]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += 8 * dim;
        centers.push(center);
    }
    Ok(Codebook {
        centers,
        kmeans_cost,
        seed,
    })
}
