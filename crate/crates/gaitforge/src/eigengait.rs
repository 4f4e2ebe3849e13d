//! Eigenspace gait features from step windows: fit an eigenspace of
//! window-to-mean differences, project windows into it.

use std::collections::BTreeMap;
use std::path::Path;

use crate::datamodel::StepWindow;
use crate::error::{GaitError, Result};
use crate::numerics::{sym_eigen, SymmetricMatrix};

pub const DEFAULT_ENERGY_FRACTION: f64 = 0.85;

/// The learned eigenspace: overall mean curve plus the retained
/// eigenpairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGaitModel {
    pub overall_mean: Vec<f64>,
    /// Retained eigenvectors, each of length `dim()`, orthonormal.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Matching eigenvalues, descending, non-negative.
    pub eigenvalues: Vec<f64>,
    pub energy_fraction: f64,
    pub steps: usize,
}

impl EigenGaitModel {
    pub fn dim(&self) -> usize {
        self.overall_mean.len()
    }

    pub fn r(&self) -> usize {
        self.eigenvectors.len()
    }
}

/// Projection coefficients of one window in the eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGaitFeature {
    pub coeffs: Vec<f64>,
}

/// Elementwise mean of one subject's windows.
pub fn subject_mean(windows: &[StepWindow]) -> Result<Vec<f64>> {
    let first = windows
        .first()
        .ok_or_else(|| GaitError::Validation("subject has no windows".into()))?;
    let dim = first.samples.len();
    let mut mean = vec![0.0; dim];
    for w in windows {
        if w.samples.len() != dim {
            return Err(GaitError::Dimension {
                expected: dim,
                got: w.samples.len(),
            });
        }
        for (m, v) in mean.iter_mut().zip(&w.samples) {
            *m += v;
        }
    }
    let n = windows.len() as f64;
    for m in mean.iter_mut() {
        *m /= n;
    }
    Ok(mean)
}

/// Fits the eigenspace over all training windows.
///
/// The overall mean is the mean of per-subject mean curves; every
/// individual window contributes its difference from that mean to the
/// covariance, whose symmetric eigendecomposition yields the model.
/// The minimal r eigenpairs reaching `energy_fraction` of the total
/// eigenvalue mass are retained.
pub fn fit(
    per_subject_windows: &BTreeMap<String, Vec<StepWindow>>,
    energy_fraction: f64,
) -> Result<EigenGaitModel> {
    if per_subject_windows.len() < 2 {
        return Err(GaitError::Validation(format!(
            "eigengait fit needs at least 2 subjects, got {}",
            per_subject_windows.len()
        )));
    }
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(GaitError::Validation(
            "energy fraction must be in (0, 1]".into(),
        ));
    }

    let mut subject_means = Vec::with_capacity(per_subject_windows.len());
    let mut steps = None;
    for windows in per_subject_windows.values() {
        let mean = subject_mean(windows)?;
        for w in windows {
            match steps {
                None => steps = Some(w.steps),
                Some(s) if s != w.steps => {
                    return Err(GaitError::Validation(
                        "mixed window step counts in eigengait fit".into(),
                    ))
                }
                _ => {}
            }
        }
        subject_means.push(mean);
    }
    let dim = subject_means[0].len();
    if subject_means.iter().any(|m| m.len() != dim) {
        return Err(GaitError::Validation(
            "subjects have windows of different lengths".into(),
        ));
    }

    let mut overall_mean = vec![0.0; dim];
    for mean in &subject_means {
        for (o, m) in overall_mean.iter_mut().zip(mean) {
            *o += m;
        }
    }
    let n_subjects = subject_means.len() as f64;
    for o in overall_mean.iter_mut() {
        *o /= n_subjects;
    }

    // Covariance over per-window differences from the overall mean.
    let mut cov = SymmetricMatrix::zeros(dim);
    let mut n_windows = 0usize;
    let mut diff = vec![0.0; dim];
    for windows in per_subject_windows.values() {
        for w in windows {
            for ((d, v), o) in diff.iter_mut().zip(&w.samples).zip(&overall_mean) {
                *d = v - o;
            }
            for i in 0..dim {
                for j in i..dim {
                    cov.add(i, j, diff[i] * diff[j]);
                }
            }
            n_windows += 1;
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov.get(i, j) / n_windows as f64;
            cov.set(i, j, v);
        }
    }

    let (mut eigenvalues, eigenvectors) = sym_eigen(&cov)?;
    // Round-off can leave tiny negative eigenvalues.
    for v in eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = eigenvalues.iter().sum();
    let mut r = 1;
    if total > 0.0 {
        let mut acc = eigenvalues[0];
        while acc < energy_fraction * total && r < eigenvalues.len() {
            acc += eigenvalues[r];
            r += 1;
        }
    }

    Ok(EigenGaitModel {
        overall_mean,
        eigenvectors: eigenvectors[..r].to_vec(),
        eigenvalues: eigenvalues[..r].to_vec(),
        energy_fraction,
        steps: steps.unwrap_or(0),
    })
}

/// Projects a window into the eigenspace: coeffs[i] = ⟨u_i, w − mean⟩.
pub fn project(model: &EigenGaitModel, window: &StepWindow) -> Result<EigenGaitFeature> {
    if window.samples.len() != model.dim() {
        return Err(GaitError::Dimension {
            expected: model.dim(),
            got: window.samples.len(),
        });
    }
    let coeffs = model
        .eigenvectors
        .iter()
        .map(|u| {
            u.iter()
                .zip(&window.samples)
                .zip(&model.overall_mean)
                .map(|((ui, s), m)| ui * (s - m))
                .sum()
        })
        .collect();
    Ok(EigenGaitFeature { coeffs })
}

const EGM_MAGIC: &[u8; 4] = b"EGM1";

/// Serializes the model: magic `EGM1`, u64 dim / r / steps, then the
/// mean, eigenvalues, and row-major eigenvectors as little-endian f64.
pub fn save_model(path: &Path, model: &EigenGaitModel) -> Result<()> {
    let dim = model.dim();
    let r = model.r();
    let mut buf = Vec::with_capacity(4 + 8 * (3 + dim + r + r * dim + 1));
    buf.extend_from_slice(EGM_MAGIC);
    buf.extend_from_slice(&(dim as u64).to_le_bytes());
    buf.extend_from_slice(&(r as u64).to_le_bytes());
    buf.extend_from_slice(&(model.steps as u64).to_le_bytes());
    buf.extend_from_slice(&model.energy_fraction.to_le_bytes());
    for v in &model.overall_mean {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &model.eigenvalues {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for row in &model.eigenvectors {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| GaitError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<EigenGaitModel> {
    let data = std::fs::read(path).map_err(|e| GaitError::io(path, e))?;
    if data.len() < 4 + 8 * 4 || &data[0..4] != EGM_MAGIC {
        return Err(GaitError::Format(format!(
            "{}: not an EGM1 model file",
            path.display()
        )));
    }
    let mut pos = 4;
    let read_u64 = |data: &[u8], pos: &mut usize| -> u64 {
        let v = u64::from_le_bytes(data[*pos..*pos + 8].try_into().unwrap());
        *pos += 8;
        v
    };
    let dim = read_u64(&data, &mut pos) as usize;
    let r = read_u64(&data, &mut pos) as usize;
    let steps = read_u64(&data, &mut pos) as usize;
    let expected = 4 + 8 * (3 + 1 + dim + r + r * dim);
    if data.len() != expected {
        return Err(GaitError::Format(format!(
            "{}: truncated EGM1 payload",
            path.display()
        )));
    }
    let mut read_f64s = |count: usize| -> Vec<f64> {
        let out = data[pos..pos + 8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += 8 * count;
        out
    };
    let energy_fraction = read_f64s(1)[0];
    let overall_mean = read_f64s(dim);
    let eigenvalues = read_f64s(r);
    let eigenvectors = (0..r).map(|_| read_f64s(dim)).collect();
    Ok(EigenGaitModel {
        overall_mean,
        eigenvectors,
        eigenvalues,
        energy_fraction,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn window_of(samples: Vec<f64>) -> StepWindow {
        assert_eq!(samples.len() % 50, 0);
        let steps = samples.len() / 50;
        StepWindow::new(steps, samples).unwrap()
    }

    fn random_window(rng: &mut ChaCha8Rng, steps: usize) -> StepWindow {
        let samples = (0..50 * steps).map(|_| rng.random_range(0.0..12.0)).collect();
        window_of(samples)
    }

    #[test]
    fn subject_mean_basic() {
        let w1 = window_of(vec![1.0; 50]);
        let w2 = window_of(vec![3.0; 50]);
        let mean = subject_mean(&[w1.clone(), w2]).unwrap();
        assert!(mean.iter().all(|v| (v - 2.0).abs() < 1e-12));
        let single = subject_mean(&[w1.clone()]).unwrap();
        assert_eq!(single, w1.samples);
        assert!(subject_mean(&[]).is_err());
    }

    #[test]
    fn subject_mean_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let windows: Vec<StepWindow> = (0..100).map(|_| random_window(&mut rng, 1)).collect();
        let mean = subject_mean(&windows).unwrap();
        for k in 0..50 {
            let naive: f64 =
                windows.iter().map(|w| w.samples[k]).sum::<f64>() / windows.len() as f64;
            assert!((mean[k] - naive).abs() < 1e-12);
        }
    }

    /// Low-dimensional fixture: two subjects with padded distinct means.
    fn two_subject_map() -> BTreeMap<String, Vec<StepWindow>> {
        let mut a = vec![5.0; 50];
        let mut b = vec![5.0; 50];
        a[0] = 6.0;
        a[1] = 4.0;
        b[0] = 4.0;
        b[1] = 6.0;
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), vec![window_of(a)]);
        map.insert("b".to_string(), vec![window_of(b)]);
        map
    }

    #[test]
    fn rank_one_case() {
        let map = two_subject_map();
        let model = fit(&map, 0.85).unwrap();
        assert_eq!(model.r(), 1);
        // The sole eigenvector is parallel to the difference of the two
        // curves, sign-normalized.
        let u = &model.eigenvectors[0];
        let expected_dir = {
            let mut d = vec![0.0; 50];
            d[0] = 1.0 / 2f64.sqrt();
            d[1] = -1.0 / 2f64.sqrt();
            d
        };
        let dot: f64 = u.iter().zip(&expected_dir).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-9, "dot = {dot}");
        for (i, lam) in model.eigenvalues.iter().enumerate().skip(1) {
            assert!(*lam < 1e-12, "λ_{i} = {lam}");
        }
    }

    #[test]
    fn fewer_than_two_subjects_rejected() {
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), vec![window_of(vec![1.0; 50])]);
        assert!(fit(&map, 0.85).is_err());
    }

    #[test]
    fn covariance_reconstruction_oracle() {
        // Fit with energy_fraction = 1 on full-rank-ish data and check
        // U diag(λ) Uᵀ against a directly computed covariance.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut map = BTreeMap::new();
        for s in 0..5 {
            let windows: Vec<StepWindow> = (0..30).map(|_| random_window(&mut rng, 1)).collect();
            map.insert(format!("s{s}"), windows);
        }
        let model = fit(&map, 1.0).unwrap();

        // Direct covariance oracle.
        let all: Vec<&StepWindow> = map.values().flatten().collect();
        let subject_means: Vec<Vec<f64>> =
            map.values().map(|ws| subject_mean(ws).unwrap()).collect();
        let mut mean = vec![0.0; 50];
        for sm in &subject_means {
            for (m, v) in mean.iter_mut().zip(sm) {
                *m += v / subject_means.len() as f64;
            }
        }
        let mut cov = vec![vec![0.0; 50]; 50];
        for w in &all {
            let d: Vec<f64> = w.samples.iter().zip(&mean).map(|(v, m)| v - m).collect();
            for i in 0..50 {
                for j in 0..50 {
                    cov[i][j] += d[i] * d[j] / all.len() as f64;
                }
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..50 {
            for j in 0..50 {
                let recon: f64 = (0..model.r())
                    .map(|k| model.eigenvalues[k] * model.eigenvectors[k][i] * model.eigenvectors[k][j])
                    .sum();
                num += (recon - cov[i][j]).powi(2);
                den += cov[i][j].powi(2);
            }
        }
        assert!(num.sqrt() <= 1e-8 * den.sqrt(), "relative Frobenius error too large");
    }

    #[test]
    fn energy_rule_minimal_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut map = BTreeMap::new();
        for s in 0..6 {
            let windows: Vec<StepWindow> = (0..20).map(|_| random_window(&mut rng, 1)).collect();
            map.insert(format!("s{s}"), windows);
        }
        let model = fit(&map, 0.85).unwrap();
        let full = fit(&map, 1.0).unwrap();
        let total: f64 = full.eigenvalues.iter().sum();
        let retained: f64 = model.eigenvalues.iter().sum();
        assert!(retained >= 0.85 * total);
        if model.r() > 1 {
            let without_last: f64 = model.eigenvalues[..model.r() - 1].iter().sum();
            assert!(without_last < 0.85 * total);
        }
        // Orthonormality of the retained basis.
        for i in 0..model.r() {
            for j in 0..model.r() {
                let dot: f64 = model.eigenvectors[i]
                    .iter()
                    .zip(&model.eigenvectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mean_projects_to_origin_and_eigen_direction_recovers_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut map = BTreeMap::new();
        for s in 0..4 {
            let windows: Vec<StepWindow> = (0..10).map(|_| random_window(&mut rng, 1)).collect();
            map.insert(format!("s{s}"), windows);
        }
        let model = fit(&map, 0.85).unwrap();

        let mean_window = window_of(model.overall_mean.clone());
        let feature = project(&model, &mean_window).unwrap();
        assert!(feature.coeffs.iter().all(|c| c.abs() < 1e-9));

        let c = 2.75;
        let shifted: Vec<f64> = model
            .overall_mean
            .iter()
            .zip(&model.eigenvectors[0])
            .map(|(m, u)| m + c * u)
            .collect();
        let feature = project(&model, &window_of(shifted)).unwrap();
        assert!((feature.coeffs[0] - c).abs() < 1e-9);
        for coeff in &feature.coeffs[1..] {
            assert!(coeff.abs() < 1e-9);
        }
    }

    #[test]
    fn projection_shrinks_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut map = BTreeMap::new();
        for s in 0..4 {
            let windows: Vec<StepWindow> = (0..10).map(|_| random_window(&mut rng, 1)).collect();
            map.insert(format!("s{s}"), windows);
        }
        let model = fit(&map, 0.85).unwrap();
        for _ in 0..20 {
            let w = random_window(&mut rng, 1);
            let feature = project(&model, &w).unwrap();
            let mut recon = model.overall_mean.clone();
            for (coeff, u) in feature.coeffs.iter().zip(&model.eigenvectors) {
                for (r, ui) in recon.iter_mut().zip(u) {
                    *r += coeff * ui;
                }
            }
            let resid: f64 = w
                .samples
                .iter()
                .zip(&recon)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let base: f64 = w
                .samples
                .iter()
                .zip(&model.overall_mean)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            assert!(resid <= base + 1e-9);
        }
    }

    #[test]
    fn projection_dimension_mismatch() {
        let map = two_subject_map();
        let model = fit(&map, 0.85).unwrap();
        let wrong = window_of(vec![0.0; 100]);
        assert!(project(&model, &wrong).is_err());
    }

    #[test]
    fn model_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut map = BTreeMap::new();
        for s in 0..3 {
            let windows: Vec<StepWindow> = (0..8).map(|_| random_window(&mut rng, 2)).collect();
            map.insert(format!("s{s}"), windows);
        }
        let model = fit(&map, 0.85).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.egm");
        save_model(&path, &model).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model, loaded);
    }
}
