//! Feature fusion and one-vs-all subject recognition.

use std::path::Path;

use rayon::prelude::*;

use crate::eigengait::EigenGaitFeature;
use crate::error::{GaitError, Result};
use crate::numerics::{decision_value, train_linear_svm, LinearModel};
use crate::trajgait::TrajHistogram;

pub const DEFAULT_SVM_C: f64 = 1000.0;

/// L1-normalized concatenation of the EigenGait and TrajGait blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeature {
    pub values: Vec<f64>,
    /// (EigenGait length r, TrajGait length K); 0 marks an absent block.
    pub block_dims: (usize, usize),
}

/// L1 normalization over signed values: x / Σ|x_i|. A zero vector is
/// passed through unchanged.
fn l1_normalize(values: &mut [f64]) {
    let sum: f64 = values.iter().map(|v| v.abs()).sum();
    if sum > 0.0 {
        for v in values.iter_mut() {
            *v /= sum;
        }
    }
}

/// Fuses both feature blocks: each block is L1-normalized on its own
/// (zero blocks pass through), they are concatenated, and the result is
/// L1-normalized again. Errors if both blocks are all-zero.
pub fn fuse(eg: &EigenGaitFeature, tg: &TrajHistogram) -> Result<FusedFeature> {
    fuse_blocks(Some(&eg.coeffs), Some(&tg.counts))
}

/// Fusion with optional blocks, covering the EigenGait-only and
/// TrajGait-only configurations.
pub fn fuse_blocks(eg: Option<&[f64]>, tg: Option<&[u64]>) -> Result<FusedFeature> {
    let mut eg_block: Vec<f64> = eg.map(|c| c.to_vec()).unwrap_or_default();
    let mut tg_block: Vec<f64> = tg
        .map(|c| c.iter().map(|v| *v as f64).collect())
        .unwrap_or_default();
    if eg_block.is_empty() && tg_block.is_empty() {
        return Err(GaitError::Validation("no feature blocks to fuse".into()));
    }
    let all_zero = eg_block.iter().all(|v| *v == 0.0) && tg_block.iter().all(|v| *v == 0.0);
    if all_zero {
        return Err(GaitError::Validation(
            "uninformative sample: every feature block is all-zero".into(),
        ));
    }
    l1_normalize(&mut eg_block);
    l1_normalize(&mut tg_block);
    let block_dims = (eg_block.len(), tg_block.len());
    let mut values = eg_block;
    values.extend(tg_block);
    l1_normalize(&mut values);
    Ok(FusedFeature { values, block_dims })
}

/// Per-subject one-vs-all linear models over fused features.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectModel {
    pub subject_ids: Vec<String>,
    pub models: Vec<LinearModel>,
    pub block_dims: (usize, usize),
    /// Hashes of the eigen model and codebook this model was trained
    /// against, for compatibility checking.
    pub eigen_model_hash: u64,
    pub codebook_hash: u64,
}

impl SubjectModel {
    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.models.first().map(|m| m.weights.len()).unwrap_or(0)
    }
}

/// Per-subject decision values for one classified sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
}

/// Trains one one-vs-all linear SVM per subject (+1 = that subject,
/// −1 = everyone else) with the given soft-margin constant.
pub fn train(
    features: &[(String, FusedFeature)],
    c: f64,
    seed: u64,
) -> Result<SubjectModel> {
    let mut subject_ids: Vec<String> = features.iter().map(|(s, _)| s.clone()).collect();
    subject_ids.sort();
    subject_ids.dedup();
    if subject_ids.len() < 2 {
        return Err(GaitError::Validation(format!(
            "one-vs-all training needs at least 2 subjects, got {}",
            subject_ids.len()
        )));
    }
    for id in &subject_ids {
        if !features.iter().any(|(s, _)| s == id) {
            return Err(GaitError::Validation(format!(
                "subject {id} has no training features"
            )));
        }
    }
    let dim = features[0].1.values.len();
    let block_dims = features[0].1.block_dims;
    for (_, f) in features {
        if f.values.len() != dim {
            return Err(GaitError::Dimension {
                expected: dim,
                got: f.values.len(),
            });
        }
    }

    let models: Vec<LinearModel> = subject_ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let samples: Vec<(Vec<f64>, f64)> = features
                .iter()
                .map(|(s, f)| {
                    let label = if s == id { 1.0 } else { -1.0 };
                    (f.values.clone(), label)
                })
                .collect();
            train_linear_svm(&samples, c, seed.wrapping_add(i as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SubjectModel {
        subject_ids,
        models,
        block_dims,
        eigen_model_hash: 0,
        codebook_hash: 0,
    })
}

/// Classifies a feature: argmax over per-subject decision values, ties
/// to the lowest subject index. The full score vector is returned.
pub fn classify(model: &SubjectModel, feature: &FusedFeature) -> Result<(String, ScoreVector)> {
    let scores: Vec<f64> = model
        .models
        .iter()
        .map(|m| decision_value(m, &feature.values))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok((
        model.subject_ids[best].clone(),
        ScoreVector { scores },
    ))
}

/// FNV-1a over a byte stream, used for model compatibility stamps.
pub fn fnv1a_hash(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF29CE484222325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001B3);
    }
    hash
}

const SGM_MAGIC: &[u8; 4] = b"SGM1";

/// Serializes a subject model: magic `SGM1`, u64 n / feature dim /
/// block dims / compatibility hashes, the subject-id table, then
/// per-subject weights+bias as little-endian f64.
pub fn save_subject_model(path: &Path, model: &SubjectModel) -> Result<()> {
    let n = model.n_subjects();
    let dim = model.feature_dim();
    let mut buf = Vec::new();
    buf.extend_from_slice(SGM_MAGIC);
    for v in [
        n as u64,
        dim as u64,
        model.block_dims.0 as u64,
        model.block_dims.1 as u64,
        model.eigen_model_hash,
        model.codebook_hash,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for id in &model.subject_ids {
        let bytes = id.as_bytes();
        buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        buf.extend_from_slice(bytes);
    }
    for m in &model.models {
        for w in &m.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        buf.extend_from_slice(&m.bias.to_le_bytes());
        buf.extend_from_slice(&m.c.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| GaitError::io(path, e))
}

pub fn load_subject_model(path: &Path) -> Result<SubjectModel> {
    let data = std::fs::read(path).map_err(|e| GaitError::io(path, e))?;
    if data.len() < 4 + 48 || &data[0..4] != SGM_MAGIC {
        return Err(GaitError::Format(format!(
            "{}: not an SGM1 model file",
            path.display()
        )));
    }
    let mut pos = 4;
    let read_u64 = |pos: &mut usize| -> Result<u64> {
        if *pos + 8 > data.len() {
            return Err(GaitError::Format("truncated SGM1 payload".into()));
        }
        let v = u64::from_le_bytes(data[*pos..*pos + 8].try_into().unwrap());
        *pos += 8;
        Ok(v)
    };
    let n = read_u64(&mut pos)? as usize;
    let dim = read_u64(&mut pos)? as usize;
    let block_r = read_u64(&mut pos)? as usize;
    let block_k = read_u64(&mut pos)? as usize;
    let eigen_model_hash = read_u64(&mut pos)?;
    let codebook_hash = read_u64(&mut pos)?;
    let mut subject_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u64(&mut pos)? as usize;
        if pos + len > data.len() {
            return Err(GaitError::Format("truncated SGM1 payload".into()));
        }
        let id = String::from_utf8(data[pos..pos + len].to_vec())
            .map_err(|_| GaitError::Format("bad subject id encoding".into()))?;
        pos += len;
        subject_ids.push(id);
    }
    let mut models = Vec::with_capacity(n);
    for _ in 0..n {
        if pos + 8 * (dim + 2) > data.len() {
            return Err(GaitError::Format("truncated SGM1 payload".into()));
        }
        let weights: Vec<f64> = data[pos..pos + 8 * dim]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += 8 * dim;
        let bias = f64::from_le_bytes(data[pos..pos + 8].try_into().unwrap());
        pos += 8;
        let c = f64::from_le_bytes(data[pos..pos + 8].try_into().unwrap());
        pos += 8;
        models.push(LinearModel { weights, bias, c });
    }
    Ok(SubjectModel {
        subject_ids,
        models,
        block_dims: (block_r, block_k),
        eigen_model_hash,
        codebook_hash,
    })
}
