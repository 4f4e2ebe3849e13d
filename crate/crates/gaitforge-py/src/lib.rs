//! Python bindings for the gaitforge toolkit.

use std::path::Path;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use gaitforge::datamodel::io::{curve_from_samples, load_accel_csv, load_manifest};
use gaitforge::datamodel::{Covariate, GaitCurve, Pace, SampleRecord};
use gaitforge::eval::{auc, evaluate_split, roc_from_scores, stratified_split, SplitSpec};
use gaitforge::pipeline::{
    extract_dataset, extract_sample, featurize, train_pipeline, Mode, PipelineConfig, RawSample,
    TrainedPipeline,
};
use gaitforge::synth::{generate_dataset as gen_dataset, GeneratorConfig};
use gaitforge::GaitError;

fn to_py_err(err: GaitError) -> PyErr {
    match &err {
        GaitError::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// Orientation-invariant compound acceleration √(ax²+ay²+az²).
#[pyfunction]
fn compound(ax: f64, ay: f64, az: f64) -> PyResult<f64> {
    gaitforge::accel::compound(ax, ay, az).map_err(to_py_err)
}

/// Partition a compound-acceleration curve into step boundaries;
/// returns (index, t_ms, value) triples.
#[pyfunction]
#[pyo3(signature = (values, rate_hz=50.0))]
fn partition_steps(values: Vec<f64>, rate_hz: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    let curve = GaitCurve::new(values, rate_hz).map_err(to_py_err)?;
    Ok(gaitforge::accel::partition_steps(&curve)
        .into_iter()
        .map(|p| (p.index, p.t_ms, p.value))
        .collect())
}

/// Extract resampled multi-step windows (50·steps values each).
#[pyfunction]
#[pyo3(signature = (values, rate_hz=50.0, steps=2))]
fn extract_windows(values: Vec<f64>, rate_hz: f64, steps: usize) -> PyResult<Vec<Vec<f64>>> {
    let curve = GaitCurve::new(values, rate_hz).map_err(to_py_err)?;
    let points = gaitforge::accel::partition_steps(&curve);
    Ok(gaitforge::accel::extract_windows(&curve, &points, steps)
        .map_err(to_py_err)?
        .into_iter()
        .map(|w| w.samples)
        .collect())
}

/// Load an accelerometer CSV and return its compound curve.
#[pyfunction]
fn load_gait_curve(path: &str) -> PyResult<Vec<f64>> {
    let samples = load_accel_csv(Path::new(path)).map_err(to_py_err)?;
    let curve = curve_from_samples(&samples).map_err(to_py_err)?;
    Ok(curve.values)
}

/// L1-block fusion of an eigen-coefficient vector and a histogram.
#[pyfunction]
fn fuse(eigen_coeffs: Vec<f64>, histogram: Vec<u64>) -> PyResult<Vec<f64>> {
    gaitforge::recognition::fuse_blocks(Some(&eigen_coeffs), Some(&histogram))
        .map(|f| f.values)
        .map_err(to_py_err)
}

/// Area under the ROC curve of (score, is_positive) pairs.
#[pyfunction]
fn roc_auc(scored: Vec<(f64, bool)>) -> PyResult<f64> {
    roc_from_scores(&scored).map(|c| auc(&c)).map_err(to_py_err)
}

/// Generate a seeded synthetic dataset; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (out_dir, subjects=10, samples=20, seed=0, covariates=false, frames=20, walk_secs=8.0))]
fn generate_dataset(
    out_dir: &str,
    subjects: usize,
    samples: usize,
    seed: u64,
    covariates: bool,
    frames: usize,
    walk_secs: f64,
) -> PyResult<String> {
    let cfg = GeneratorConfig {
        n_subjects: subjects,
        samples_per_subject: samples,
        covariates: if covariates {
            Covariate::ALL_EIGHT.to_vec()
        } else {
            vec![Covariate::None]
        },
        frames_per_sample: frames,
        walk_secs,
        seed,
        ..GeneratorConfig::default()
    };
    gen_dataset(&cfg, Path::new(out_dir)).map_err(to_py_err)?;
    Ok(Path::new(out_dir).join("manifest.json").display().to_string())
}

/// The full recognition pipeline: extraction, model fitting and
/// classification for one feature mode.
#[pyclass]
struct GaitPipeline {
    config: PipelineConfig,
    trained: Option<TrainedPipeline>,
}

fn load_raw(manifest_path: &str, config: &PipelineConfig) -> PyResult<Vec<RawSample>> {
    let path = Path::new(manifest_path);
    let manifest = load_manifest(path).map_err(to_py_err)?;
    manifest
        .validate(path.parent().unwrap_or(Path::new(".")))
        .map_err(to_py_err)?;
    extract_dataset(&manifest, path, config.steps, config.track_len).map_err(to_py_err)
}

#[pymethods]
impl GaitPipeline {
    #[new]
    #[pyo3(signature = (mode="fused", steps=2, codebook_size=1024, track_len=15, svm_c=1000.0, energy=0.85, seed=0))]
    fn new(
        mode: &str,
        steps: usize,
        codebook_size: usize,
        track_len: usize,
        svm_c: f64,
        energy: f64,
        seed: u64,
    ) -> PyResult<Self> {
        Ok(GaitPipeline {
            config: PipelineConfig {
                mode: Mode::parse(mode).map_err(to_py_err)?,
                steps,
                codebook_size,
                track_len,
                svm_c,
                energy_fraction: energy,
                seed,
            },
            trained: None,
        })
    }

    /// Train on every sample of a dataset manifest.
    fn train(&mut self, manifest_path: &str) -> PyResult<()> {
        let raw = load_raw(manifest_path, &self.config)?;
        let refs: Vec<&RawSample> = raw.iter().collect();
        self.trained = Some(train_pipeline(&refs, &self.config).map_err(to_py_err)?);
        Ok(())
    }

    /// Enrolled subject ids, sorted.
    fn subjects(&self) -> PyResult<Vec<String>> {
        match &self.trained {
            Some(t) => Ok(t.subject_model.subject_ids.clone()),
            None => Err(PyValueError::new_err("pipeline is not trained")),
        }
    }

    /// Classify a sample description JSON; returns (subject_id, scores).
    fn classify(&self, sample_json: &str) -> PyResult<(String, Vec<f64>)> {
        let trained = self
            .trained
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("pipeline is not trained"))?;
        let path = Path::new(sample_json);
        let body = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        let record: SampleRecord =
            serde_json_from_str(&body).map_err(|e| PyValueError::new_err(e))?;
        let (windows, trajectories) = extract_sample(
            path,
            record.accel.as_deref(),
            record.rgbd.as_deref(),
            self.config.steps,
            self.config.track_len,
        )
        .map_err(to_py_err)?;
        let raw = RawSample {
            subject_id: String::new(),
            sample_id: record.id,
            pace: Pace::Unknown,
            covariate: record.covariate,
            windows,
            trajectories,
        };
        let feature = featurize(
            &raw,
            trained.eigen.as_ref(),
            trained.codebook.as_ref(),
            &self.config,
        )
        .map_err(to_py_err)?;
        let (decided, scores) =
            gaitforge::recognition::classify(&trained.subject_model, &feature)
                .map_err(to_py_err)?;
        Ok((decided, scores.scores))
    }

    /// Single stratified split evaluation; returns test accuracy.
    #[pyo3(signature = (manifest_path, train_fraction=0.5, split_seed=0))]
    fn evaluate(
        &self,
        manifest_path: &str,
        train_fraction: f64,
        split_seed: u64,
    ) -> PyResult<f64> {
        let raw = load_raw(manifest_path, &self.config)?;
        let split = stratified_split(
            &raw,
            &SplitSpec {
                train_fraction,
                seed: split_seed,
            },
        )
        .map_err(to_py_err)?;
        evaluate_split(&raw, &split, &self.config)
            .map(|o| o.accuracy)
            .map_err(to_py_err)
    }
}

fn serde_json_from_str(body: &str) -> Result<SampleRecord, String> {
    serde_json::from_str(body).map_err(|e| e.to_string())
}

#[pymodule]
fn gaitforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(compound, m)?)?;
    m.add_function(wrap_pyfunction!(partition_steps, m)?)?;
    m.add_function(wrap_pyfunction!(extract_windows, m)?)?;
    m.add_function(wrap_pyfunction!(load_gait_curve, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_class::<GaitPipeline>()?;
    Ok(())
}
