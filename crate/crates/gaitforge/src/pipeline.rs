//! End-to-end orchestration: manifest → raw per-sample material →
//! fitted models → fused features → subject decisions.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::accel::{extract_windows, partition_steps};
use crate::datamodel::io::{curve_from_samples, load_accel_csv, load_rgbd_sequence, resolve};
use crate::datamodel::{Covariate, DatasetManifest, Pace, StepWindow};
use crate::eigengait::{self, EigenGaitModel};
use crate::error::{GaitError, Result};
use crate::recognition::{self, fuse_blocks, FusedFeature, ScoreVector, SubjectModel};
use crate::rgbd::{calc_trajectories, estimate_fields, prepare_frames, PyramidalFlow, Trajectory3D};
use crate::trajgait::{self, describe_restricted, ChannelRestriction, Codebook};

/// Which feature blocks drive recognition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    EigenGait,
    TrajGait,
    TrajGaitDepth,
    TrajGaitRgb,
    Fused,
}

impl Mode {
    pub fn uses_eigen(&self) -> bool {
        matches!(self, Mode::EigenGait | Mode::Fused)
    }

    pub fn uses_traj(&self) -> bool {
        !matches!(self, Mode::EigenGait)
    }

    pub fn restriction(&self) -> ChannelRestriction {
        match self {
            Mode::TrajGaitDepth => ChannelRestriction::DepthOnly,
            Mode::TrajGaitRgb => ChannelRestriction::SpatialOnly,
            _ => ChannelRestriction::Full,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::EigenGait => "eigengait",
            Mode::TrajGait => "trajgait",
            Mode::TrajGaitDepth => "trajgait-depth",
            Mode::TrajGaitRgb => "trajgait-rgb",
            Mode::Fused => "fused",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "eigengait" => Ok(Mode::EigenGait),
            "trajgait" => Ok(Mode::TrajGait),
            "trajgait-depth" => Ok(Mode::TrajGaitDepth),
            "trajgait-rgb" => Ok(Mode::TrajGaitRgb),
            "fused" => Ok(Mode::Fused),
            other => Err(GaitError::Config(format!(
                "unknown mode {other}; expected eigengait, trajgait, \
                 trajgait-depth, trajgait-rgb or fused"
            ))),
        }
    }
}

/// Everything a pipeline run needs to know.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub steps: usize,
    pub codebook_size: usize,
    pub track_len: usize,
    pub svm_c: f64,
    pub energy_fraction: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Fused,
            steps: 2,
            codebook_size: trajgait::DEFAULT_CODEBOOK_SIZE,
            track_len: crate::rgbd::DEFAULT_TRACK_LEN,
            svm_c: recognition::DEFAULT_SVM_C,
            energy_fraction: eigengait::DEFAULT_ENERGY_FRACTION,
            seed: 0,
        }
    }
}

/// Mode-independent per-sample material: step windows from the
/// accelerometer stream and raw 3D trajectories from the RGBD stream.
/// Featurization for any mode derives from this without touching disk
/// or rerunning flow.
#[derive(Debug, Clone)]
pub struct RawSample {
    pub subject_id: String,
    pub sample_id: String,
    pub pace: Pace,
    pub covariate: Covariate,
    pub windows: Vec<StepWindow>,
    pub trajectories: Vec<Trajectory3D>,
}

/// Loads and preprocesses one sample's streams.
pub fn extract_sample(
    manifest_path: &Path,
    accel_rel: Option<&str>,
    rgbd_rel: Option<&str>,
    steps: usize,
    track_len: usize,
) -> Result<(Vec<StepWindow>, Vec<Trajectory3D>)> {
    let windows = match accel_rel {
        Some(rel) => {
            let samples = load_accel_csv(&resolve(manifest_path, rel))?;
            let curve = curve_from_samples(&samples)?;
            let points = partition_steps(&curve);
            extract_windows(&curve, &points, steps)?
        }
        None => Vec::new(),
    };
    let trajectories = match rgbd_rel {
        Some(rel) => {
            let frames = load_rgbd_sequence(&resolve(manifest_path, rel))?;
            let prepared = prepare_frames(&frames);
            let fields = estimate_fields(&frames, &PyramidalFlow::default())?;
            calc_trajectories(&prepared, &fields, track_len)
        }
        None => Vec::new(),
    };
    Ok((windows, trajectories))
}

/// Extracts raw material for every sample in a manifest, in parallel.
pub fn extract_dataset(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    steps: usize,
    track_len: usize,
) -> Result<Vec<RawSample>> {
    let jobs: Vec<(&str, &crate::datamodel::SampleRecord)> = manifest
        .subjects
        .iter()
        .flat_map(|s| s.samples.iter().map(move |r| (s.id.as_str(), r)))
        .collect();
    jobs.par_iter()
        .map(|(subject_id, record)| {
            let (windows, trajectories) = extract_sample(
                manifest_path,
                record.accel.as_deref(),
                record.rgbd.as_deref(),
                steps,
                track_len,
            )?;
            Ok(RawSample {
                subject_id: subject_id.to_string(),
                sample_id: record.id.clone(),
                pace: record.pace,
                covariate: record.covariate,
                windows,
                trajectories,
            })
        })
        .collect()
}

/// The fitted models for one mode, trained on one partition.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub config: PipelineConfig,
    pub eigen: Option<EigenGaitModel>,
    pub codebook: Option<Codebook>,
    pub subject_model: SubjectModel,
}

fn sample_descriptors(
    sample: &RawSample,
    track_len: usize,
    restriction: ChannelRestriction,
) -> Result<Vec<trajgait::TrajDescriptor>> {
    sample
        .trajectories
        .iter()
        .map(|t| describe_restricted(t, track_len, restriction))
        .collect()
}

/// A sample's fused feature under the given fitted models. A sample
/// missing one stream (no windows, or no surviving trajectories) still
/// yields a feature from the remaining block: the absent block enters
/// fusion as all zeros.
pub fn featurize(
    sample: &RawSample,
    eigen: Option<&EigenGaitModel>,
    codebook: Option<&Codebook>,
    config: &PipelineConfig,
) -> Result<FusedFeature> {
    let eg_block: Option<Vec<f64>> = match eigen {
        Some(model) => Some(if sample.windows.is_empty() {
            vec![0.0; model.r()]
        } else {
            // Projection is linear, so the sample feature — the mean of
            // its windows' projections — equals the projection of the
            // mean window. Averaging suppresses the sub-sample jitter
            // of the partition anchors.
            let mean = eigengait::subject_mean(&sample.windows)?;
            let window = StepWindow::new(sample.windows[0].steps, mean)?;
            eigengait::project(model, &window)?.coeffs
        }),
        None => None,
    };
    let tg_block: Option<Vec<u64>> = match codebook {
        Some(cb) => {
            let descriptors =
                sample_descriptors(sample, config.track_len, config.mode.restriction())?;
            Some(trajgait::encode(&descriptors, cb)?.counts)
        }
        None => None,
    };
    fuse_blocks(eg_block.as_deref(), tg_block.as_deref())
}

/// Fits every model of the configured mode on the given training
/// samples: the eigenspace and/or codebook first, then the one-vs-all
/// subject SVMs over the resulting fused features.
pub fn train_pipeline(train: &[&RawSample], config: &PipelineConfig) -> Result<TrainedPipeline> {
    train_pipeline_with_labels(train, None, config)
}

/// As `train_pipeline`, but with optional replacement subject labels
/// (index-aligned with `train`) for permutation controls.
pub fn train_pipeline_with_labels(
    train: &[&RawSample],
    labels: Option<&[String]>,
    config: &PipelineConfig,
) -> Result<TrainedPipeline> {
    if let Some(labels) = labels {
        if labels.len() != train.len() {
            return Err(GaitError::Dimension {
                expected: train.len(),
                got: labels.len(),
            });
        }
    }
    let label_of = |i: usize| -> &str {
        match labels {
            Some(l) => l[i].as_str(),
            None => train[i].subject_id.as_str(),
        }
    };

    let eigen = if config.mode.uses_eigen() {
        let mut per_subject: BTreeMap<String, Vec<StepWindow>> = BTreeMap::new();
        for (i, sample) in train.iter().enumerate() {
            per_subject
                .entry(label_of(i).to_string())
                .or_default()
                .extend(sample.windows.iter().cloned());
        }
        per_subject.retain(|_, windows| !windows.is_empty());
        Some(eigengait::fit(&per_subject, config.energy_fraction)?)
    } else {
        None
    };

    let codebook = if config.mode.uses_traj() {
        let per_sample: Vec<Vec<trajgait::TrajDescriptor>> = train
            .iter()
            .map(|s| sample_descriptors(s, config.track_len, config.mode.restriction()))
            .collect::<Result<_>>()?;
        Some(trajgait::fit_codebook(
            &per_sample,
            config.codebook_size,
            config.seed,
        )?)
    } else {
        None
    };

    let features: Vec<(String, FusedFeature)> = train
        .par_iter()
        .enumerate()
        .map(|(i, sample)| {
            let feature = featurize(sample, eigen.as_ref(), codebook.as_ref(), config)?;
            Ok((label_of(i).to_string(), feature))
        })
        .collect::<Result<_>>()?;

    let subject_model = recognition::train(&features, config.svm_c, config.seed)?;
    Ok(TrainedPipeline {
        config: config.clone(),
        eigen,
        codebook,
        subject_model,
    })
}

impl TrainedPipeline {
    /// Classifies one raw sample, returning the decided subject id and
    /// the per-subject decision values.
    pub fn classify(&self, sample: &RawSample) -> Result<(String, ScoreVector)> {
        let feature = featurize(
            sample,
            self.eigen.as_ref(),
            self.codebook.as_ref(),
            &self.config,
        )?;
        recognition::classify(&self.subject_model, &feature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, GeneratorConfig};

    fn small_dataset(dir: &Path) -> DatasetManifest {
        let cfg = GeneratorConfig {
            n_subjects: 3,
            samples_per_subject: 4,
            frames_per_sample: 18,
            walk_secs: 6.0,
            seed: 42,
            ..GeneratorConfig::default()
        };
        generate_dataset(&cfg, dir).unwrap()
    }

    fn test_config(mode: Mode) -> PipelineConfig {
        PipelineConfig {
            mode,
            codebook_size: 16,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn fused_pipeline_classifies_training_samples() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = small_dataset(dir.path());
        let manifest_path = dir.path().join("manifest.json");
        let raw = extract_dataset(&manifest, &manifest_path, 2, 15).unwrap();
        assert_eq!(raw.len(), 12);
        for sample in &raw {
            assert!(!sample.windows.is_empty(), "{} has no windows", sample.sample_id);
            assert!(
                sample.trajectories.len() >= 20,
                "{} has only {} trajectories",
                sample.sample_id,
                sample.trajectories.len()
            );
        }
        let config = test_config(Mode::Fused);
        let refs: Vec<&RawSample> = raw.iter().collect();
        let trained = train_pipeline(&refs, &config).unwrap();
        assert!(trained.eigen.is_some());
        assert!(trained.codebook.is_some());
        let correct = raw
            .iter()
            .filter(|s| trained.classify(s).unwrap().0 == s.subject_id)
            .count();
        // Training-set accuracy with C=1000 should be near-perfect.
        assert!(correct >= 11, "only {correct}/12 training samples correct");
    }

    #[test]
    fn eigengait_mode_skips_codebook() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = small_dataset(dir.path());
        let manifest_path = dir.path().join("manifest.json");
        let raw = extract_dataset(&manifest, &manifest_path, 2, 15).unwrap();
        let refs: Vec<&RawSample> = raw.iter().collect();
        let trained = train_pipeline(&refs, &test_config(Mode::EigenGait)).unwrap();
        assert!(trained.eigen.is_some());
        assert!(trained.codebook.is_none());
        let (_, scores) = trained.classify(&raw[0]).unwrap();
        assert_eq!(scores.scores.len(), 3);
    }

    #[test]
    fn restricted_modes_zero_the_other_block() {
        let traj = Trajectory3D {
            points: (0..16)
                .map(|i| [i as f64 * 2.0, 1.0, 3000.0 - 25.0 * i as f64])
                .collect(),
            start_frame: 0,
        };
        let depth_only =
            describe_restricted(&traj, 15, Mode::TrajGaitDepth.restriction()).unwrap();
        assert!(depth_only.values[..30].iter().all(|v| *v == 0.0));
        assert!(depth_only.values[30..].iter().any(|v| *v != 0.0));
        let rgb_only = describe_restricted(&traj, 15, Mode::TrajGaitRgb.restriction()).unwrap();
        assert!(rgb_only.values[..30].iter().any(|v| *v != 0.0));
        assert!(rgb_only.values[30..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn missing_trajectories_fall_back_to_eigen_block() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = small_dataset(dir.path());
        let manifest_path = dir.path().join("manifest.json");
        let raw = extract_dataset(&manifest, &manifest_path, 2, 15).unwrap();
        let refs: Vec<&RawSample> = raw.iter().collect();
        let config = test_config(Mode::Fused);
        let trained = train_pipeline(&refs, &config).unwrap();
        let mut gutted = raw[0].clone();
        gutted.trajectories.clear();
        let feature = featurize(
            &gutted,
            trained.eigen.as_ref(),
            trained.codebook.as_ref(),
            &config,
        )
        .unwrap();
        let (r, k) = feature.block_dims;
        assert_eq!(k, 16);
        assert!(feature.values[r..].iter().all(|v| *v == 0.0));
        assert!(feature.values[..r].iter().any(|v| *v != 0.0));
    }

    #[test]
    fn mode_parse_round_trips() {
        for mode in [
            Mode::EigenGait,
            Mode::TrajGait,
            Mode::TrajGaitDepth,
            Mode::TrajGaitRgb,
            Mode::Fused,
        ] {
            assert_eq!(Mode::parse(mode.name()).unwrap(), mode);
        }
        assert!(Mode::parse("hog").is_err());
    }
}
