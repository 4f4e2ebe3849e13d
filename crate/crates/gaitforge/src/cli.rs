//! The `gaitforge` command line: generation, extraction, training,
//! classification and evaluation behind one binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datamodel::io::load_manifest;
use crate::datamodel::{Covariate, Pace, SampleRecord};
use crate::error::{GaitError, Result};
use crate::eval::{
    accuracy_sweep, average_rocs, auc, covariate_breakdown, evaluate_split, per_subject_rocs,
    plot_svg, stratified_split, write_csv, SplitSpec,
};
use crate::pipeline::{
    extract_dataset, extract_sample, featurize, train_pipeline, Mode, PipelineConfig, RawSample,
};
use crate::synth::{generate_dataset, GeneratorConfig};
use crate::{eigengait, recognition, trajgait};

#[derive(Parser, Debug)]
#[command(
    name = "gaitforge",
    about = "Multi-sensor gait recognition: accelerometer eigenspace + RGBD dense trajectories",
    version
)]
pub struct Cli {
    /// Worker threads (falls back to GAITFORGE_THREADS, then all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    /// Feature configuration: eigengait, trajgait, trajgait-depth,
    /// trajgait-rgb or fused
    #[arg(long, default_value = "fused")]
    pub mode: String,
    /// Steps per window (1-8)
    #[arg(long, default_value_t = 2)]
    pub steps: usize,
    /// Codebook size K
    #[arg(short = 'k', long = "codebook-size", default_value_t = 1024)]
    pub k: usize,
    /// Trajectory length L in frames
    #[arg(short = 'l', long = "track-len", default_value_t = 15)]
    pub track_len: usize,
    /// SVM soft-margin constant C
    #[arg(short = 'c', long, default_value_t = 1000.0)]
    pub c: f64,
    /// Retained eigenvalue energy fraction
    #[arg(long, default_value_t = 0.85)]
    pub energy: f64,
    /// Master seed for every random choice
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PipelineArgs {
    pub fn to_config(&self) -> Result<PipelineConfig> {
        if !(1..=8).contains(&self.steps) {
            return Err(GaitError::Config(format!(
                "--steps must be in 1..=8, got {}",
                self.steps
            )));
        }
        if self.track_len == 0 {
            return Err(GaitError::Config("--track-len must be positive".into()));
        }
        if self.c <= 0.0 {
            return Err(GaitError::Config("-c must be positive".into()));
        }
        if !(self.energy > 0.0 && self.energy <= 1.0) {
            return Err(GaitError::Config("--energy must be in (0, 1]".into()));
        }
        Ok(PipelineConfig {
            mode: Mode::parse(&self.mode)?,
            steps: self.steps,
            codebook_size: self.k,
            track_len: self.track_len,
            svm_c: self.c,
            energy_fraction: self.energy,
            seed: self.seed,
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded synthetic dataset
    Gen {
        /// Number of subjects
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        /// Samples per subject
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Cycle samples through the eight hard covariates
        #[arg(long)]
        covariates: bool,
        /// Alternate normal and fast pace
        #[arg(long)]
        paces: bool,
        /// RGBD frames per sample
        #[arg(long, default_value_t = 20)]
        frames: usize,
        /// Accelerometer walk duration in seconds
        #[arg(long, default_value_t = 8.0)]
        walk_secs: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Extract intermediate features from a dataset
    Extract {
        /// Stream to extract: accel (step windows) or traj (descriptors)
        stream: String,
        /// Dataset manifest path
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train a recognition model on a full dataset
    Train {
        /// Dataset manifest path
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Model output directory
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Classify one sample against a trained model
    Classify {
        /// Model directory written by `train`
        model: PathBuf,
        /// Sample description JSON ({"id", "accel", "rgbd"}, paths
        /// relative to the JSON file)
        sample: PathBuf,
    },
    /// Accuracy-vs-training-fraction sweep with covariate breakdown
    Eval {
        /// Dataset manifest path
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Fraction range start:end:step
        #[arg(long, default_value = "0.1:0.9:0.1")]
        fractions: String,
        /// Random splits averaged per fraction
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Also write a per-covariate accuracy table at this training
        /// fraction
        #[arg(long)]
        covariate_breakdown: Option<f64>,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Per-subject ROC curves and their vertical average
    Roc {
        /// Dataset manifest path
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Training fraction for the single split
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// On-disk description of a trained model directory.
#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    mode: String,
    steps: usize,
    codebook_size: usize,
    track_len: usize,
    svm_c: f64,
    energy_fraction: f64,
    seed: u64,
}

impl ModelMeta {
    fn from_config(config: &PipelineConfig) -> Self {
        ModelMeta {
            mode: config.mode.name().to_string(),
            steps: config.steps,
            codebook_size: config.codebook_size,
            track_len: config.track_len,
            svm_c: config.svm_c,
            energy_fraction: config.energy_fraction,
            seed: config.seed,
        }
    }

    fn to_config(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            mode: Mode::parse(&self.mode)?,
            steps: self.steps,
            codebook_size: self.codebook_size,
            track_len: self.track_len,
            svm_c: self.svm_c,
            energy_fraction: self.energy_fraction,
            seed: self.seed,
        })
    }
}

fn parse_fractions(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || GaitError::Config(format!("--fractions expects start:end:step, got {spec}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || start <= 0.0 || end >= 1.0 || start > end {
        return Err(GaitError::Config(format!(
            "fractions must satisfy 0 < start <= end < 1 with positive step, got {spec}"
        )));
    }
    let mut out = Vec::new();
    let mut f = start;
    while f <= end + 1e-9 {
        out.push((f * 1e9).round() / 1e9);
        f += step;
    }
    Ok(out)
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| GaitError::io(path, e))
}

fn load_raw(manifest_path: &Path, config: &PipelineConfig) -> Result<Vec<RawSample>> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest.validate(base)?;
    extract_dataset(&manifest, manifest_path, config.steps, config.track_len)
}

fn init_threads(threads: Option<usize>) {
    let n = threads.or_else(|| {
        std::env::var("GAITFORGE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Runs the parsed command; the binary maps errors to exit codes.
pub fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads);
    match cli.command {
        Command::Gen {
            subjects,
            samples,
            covariates,
            paces,
            frames,
            walk_secs,
            seed,
            out,
        } => {
            let cfg = GeneratorConfig {
                n_subjects: subjects,
                samples_per_subject: samples,
                covariates: if covariates {
                    Covariate::ALL_EIGHT.to_vec()
                } else {
                    vec![Covariate::None]
                },
                paces: if paces {
                    vec![Pace::Normal, Pace::Fast]
                } else {
                    vec![Pace::Normal]
                },
                frames_per_sample: frames,
                walk_secs,
                seed,
                ..GeneratorConfig::default()
            };
            eprintln!(
                "gen: subjects={subjects} samples={samples} covariates={covariates} \
                 paces={paces} frames={frames} walk_secs={walk_secs} seed={seed}"
            );
            let manifest = generate_dataset(&cfg, &out)?;
            println!("{}", out.join("manifest.json").display());
            eprintln!(
                "gen: wrote {} samples over {} subjects",
                manifest.total_samples(),
                manifest.subjects.len()
            );
            Ok(())
        }

        Command::Extract {
            stream,
            manifest,
            pipeline,
            out,
        } => {
            let config = pipeline.to_config()?;
            eprintln!("extract: stream={stream} mode={} seed={}", config.mode.name(), config.seed);
            mkdir(&out)?;
            let raw = load_raw(&manifest, &config)?;
            match stream.as_str() {
                "accel" => {
                    for sample in &raw {
                        let rows: Vec<Vec<String>> = sample
                            .windows
                            .iter()
                            .map(|w| w.samples.iter().map(|v| format!("{v}")).collect())
                            .collect();
                        let path = out.join(format!("{}_windows.csv", sample.sample_id));
                        let header: Vec<String> = (0..config.steps * 50)
                            .map(|i| format!("v{i}"))
                            .collect();
                        write_csv(&path, &header.join(","), &rows)?;
                    }
                }
                "traj" => {
                    for sample in &raw {
                        let rows: Vec<Vec<String>> = sample
                            .trajectories
                            .iter()
                            .map(|t| {
                                trajgait::describe(t, config.track_len)
                                    .map(|d| d.values.iter().map(|v| format!("{v}")).collect())
                            })
                            .collect::<Result<_>>()?;
                        let path = out.join(format!("{}_descriptors.csv", sample.sample_id));
                        let header: Vec<String> =
                            (0..3 * config.track_len).map(|i| format!("d{i}")).collect();
                        write_csv(&path, &header.join(","), &rows)?;
                    }
                }
                other => {
                    return Err(GaitError::Config(format!(
                        "unknown stream {other}; expected accel or traj"
                    )))
                }
            }
            println!("{}", out.display());
            Ok(())
        }

        Command::Train {
            manifest,
            pipeline,
            out,
        } => {
            let config = pipeline.to_config()?;
            eprintln!(
                "train: mode={} steps={} k={} l={} c={} energy={} seed={}",
                config.mode.name(),
                config.steps,
                config.codebook_size,
                config.track_len,
                config.svm_c,
                config.energy_fraction,
                config.seed
            );
            mkdir(&out)?;
            let raw = load_raw(&manifest, &config)?;
            let refs: Vec<&RawSample> = raw.iter().collect();
            let trained = train_pipeline(&refs, &config)?;
            if let Some(eigen) = &trained.eigen {
                eigengait::save_model(&out.join("eigen.egm"), eigen)?;
            }
            if let Some(codebook) = &trained.codebook {
                trajgait::save_codebook(&out.join("codebook.tgc"), codebook)?;
            }
            recognition::save_subject_model(&out.join("subjects.sgm"), &trained.subject_model)?;
            let meta = ModelMeta::from_config(&config);
            let meta_path = out.join("model.json");
            let body = serde_json::to_string_pretty(&meta)
                .map_err(|e| GaitError::Format(e.to_string()))?;
            std::fs::write(&meta_path, body).map_err(|e| GaitError::io(&meta_path, e))?;
            println!("{}", out.display());
            Ok(())
        }

        Command::Classify { model, sample } => {
            let meta_path = model.join("model.json");
            let body =
                std::fs::read_to_string(&meta_path).map_err(|e| GaitError::io(&meta_path, e))?;
            let meta: ModelMeta = serde_json::from_str(&body).map_err(|e| GaitError::Parse {
                path: meta_path.clone(),
                line: 0,
                msg: e.to_string(),
            })?;
            let config = meta.to_config()?;
            eprintln!("classify: mode={} seed={}", config.mode.name(), config.seed);
            let eigen = if config.mode.uses_eigen() {
                Some(eigengait::load_model(&model.join("eigen.egm"))?)
            } else {
                None
            };
            let codebook = if config.mode.uses_traj() {
                Some(trajgait::load_codebook(&model.join("codebook.tgc"))?)
            } else {
                None
            };
            let subject_model = recognition::load_subject_model(&model.join("subjects.sgm"))?;

            let body =
                std::fs::read_to_string(&sample).map_err(|e| GaitError::io(&sample, e))?;
            let record: SampleRecord = serde_json::from_str(&body).map_err(|e| GaitError::Parse {
                path: sample.clone(),
                line: 0,
                msg: e.to_string(),
            })?;
            let (windows, trajectories) = extract_sample(
                &sample,
                record.accel.as_deref(),
                record.rgbd.as_deref(),
                config.steps,
                config.track_len,
            )?;
            let raw = RawSample {
                subject_id: String::new(),
                sample_id: record.id,
                pace: record.pace,
                covariate: record.covariate,
                windows,
                trajectories,
            };
            let feature = featurize(&raw, eigen.as_ref(), codebook.as_ref(), &config)?;
            let (decided, scores) = recognition::classify(&subject_model, &feature)?;
            println!("{decided}");
            for (id, score) in subject_model.subject_ids.iter().zip(&scores.scores) {
                println!("{id},{score:.6}");
            }
            Ok(())
        }

        Command::Eval {
            manifest,
            pipeline,
            fractions,
            repeats,
            covariate_breakdown: breakdown_fraction,
            out,
        } => {
            let config = pipeline.to_config()?;
            let fractions = parse_fractions(&fractions)?;
            eprintln!(
                "eval: mode={} fractions={fractions:?} repeats={repeats} seed={}",
                config.mode.name(),
                config.seed
            );
            mkdir(&out)?;
            let raw = load_raw(&manifest, &config)?;
            let rows = accuracy_sweep(&raw, &fractions, repeats, &config)?;
            let csv_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        format!("{:.3}", r.fraction),
                        format!("{:.6}", r.mean),
                        format!("{:.6}", r.std),
                    ]
                })
                .collect();
            write_csv(&out.join("accuracy.csv"), "fraction,accuracy,std", &csv_rows)?;
            plot_svg(
                &out.join("accuracy.svg"),
                &format!("accuracy vs training fraction ({})", config.mode.name()),
                "training fraction",
                "accuracy",
                &[(
                    config.mode.name().to_string(),
                    rows.iter().map(|r| (r.fraction, r.mean)).collect(),
                )],
            )?;
            for r in &rows {
                println!("{:.3},{:.6},{:.6}", r.fraction, r.mean, r.std);
            }

            if let Some(fraction) = breakdown_fraction {
                let split = stratified_split(
                    &raw,
                    &SplitSpec {
                        train_fraction: fraction,
                        seed: config.seed,
                    },
                )?;
                let outcome = evaluate_split(&raw, &split, &config)?;
                let table = covariate_breakdown(&outcome.predictions);
                let rows: Vec<Vec<String>> = table
                    .iter()
                    .map(|r| {
                        vec![r.covariate.name().to_string(), format!("{:.6}", r.accuracy)]
                    })
                    .collect();
                write_csv(&out.join("covariates.csv"), "covariate,accuracy", &rows)?;
                plot_svg(
                    &out.join("covariates.svg"),
                    &format!("per-covariate accuracy ({})", config.mode.name()),
                    "covariate index",
                    "accuracy",
                    &[(
                        config.mode.name().to_string(),
                        table
                            .iter()
                            .enumerate()
                            .map(|(i, r)| (i as f64, r.accuracy))
                            .collect(),
                    )],
                )?;
            }
            Ok(())
        }

        Command::Roc {
            manifest,
            pipeline,
            train_fraction,
            out,
        } => {
            let config = pipeline.to_config()?;
            eprintln!(
                "roc: mode={} train_fraction={train_fraction} seed={}",
                config.mode.name(),
                config.seed
            );
            mkdir(&out)?;
            let raw = load_raw(&manifest, &config)?;
            let split = stratified_split(
                &raw,
                &SplitSpec {
                    train_fraction,
                    seed: config.seed,
                },
            )?;
            let outcome = evaluate_split(&raw, &split, &config)?;
            let curves = per_subject_rocs(&outcome)?;
            let mut series = Vec::new();
            for (id, curve) in &curves {
                let rows: Vec<Vec<String>> = curve
                    .points
                    .iter()
                    .map(|(fpr, tpr)| vec![format!("{fpr:.6}"), format!("{tpr:.6}")])
                    .collect();
                write_csv(&out.join(format!("roc_{id}.csv")), "fpr,tpr", &rows)?;
                println!("{id},{:.6}", auc(curve));
                series.push((id.clone(), curve.points.clone()));
            }
            let mean = average_rocs(&curves.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>())?;
            let rows: Vec<Vec<String>> = mean
                .points
                .iter()
                .map(|(fpr, tpr)| vec![format!("{fpr:.6}"), format!("{tpr:.6}")])
                .collect();
            write_csv(&out.join("roc_mean.csv"), "fpr,tpr", &rows)?;
            println!("mean,{:.6}", auc(&mean));
            series.push(("mean".to_string(), mean.points.clone()));
            plot_svg(
                &out.join("roc.svg"),
                &format!("ROC ({})", config.mode.name()),
                "false positive rate",
                "true positive rate",
                &series,
            )?;
            Ok(())
        }
    }
}

/// Maps an error to the process exit code: 2 for I/O trouble, 1 for
/// everything else.
pub fn exit_code(err: &GaitError) -> i32 {
    match err {
        GaitError::Io { .. } => 2,
        _ => 1,
    }
}
