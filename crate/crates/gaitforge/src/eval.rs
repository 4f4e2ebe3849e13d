//! Evaluation harness: stratified splits, accuracy sweeps, covariate
//! breakdowns, ROC analysis, and CSV/SVG report writers.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datamodel::Covariate;
use crate::error::{GaitError, Result};
use crate::pipeline::{train_pipeline_with_labels, PipelineConfig, RawSample};

/// A train/test partition request, stratified by subject.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Index sets into a sample slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits per subject so every subject keeps at least one training and
/// one test sample. The per-subject sample order is shuffled with the
/// split seed; subjects are processed in sorted-id order, so the split
/// is deterministic.
pub fn stratified_split(samples: &[RawSample], spec: &SplitSpec) -> Result<Split> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(GaitError::Validation(format!(
            "train fraction must be in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_subject.entry(s.subject_id.as_str()).or_default().push(i);
    }
    if by_subject.len() < 2 {
        return Err(GaitError::Validation(format!(
            "stratified split needs at least 2 subjects, got {}",
            by_subject.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (subject, mut indices) in by_subject {
        if indices.len() < 2 {
            return Err(GaitError::Validation(format!(
                "subject {subject} has {} sample(s); a stratified split \
                 needs at least 2 per subject",
                indices.len()
            )));
        }
        indices.shuffle(&mut rng);
        let n = indices.len();
        let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        split.train.extend(&indices[..n_train]);
        split.test.extend(&indices[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// One test-sample decision.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub sample_index: usize,
    pub truth: String,
    pub predicted: String,
    pub covariate: Covariate,
    /// Decision values aligned with the model's sorted subject ids.
    pub scores: Vec<f64>,
}

/// Full result of evaluating one split.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub accuracy: f64,
    /// Sorted subject ids of the trained model.
    pub subject_ids: Vec<String>,
    pub predictions: Vec<Prediction>,
}

/// Trains on the split's training partition only and classifies the
/// test partition. Accuracy is correct test decisions over total test
/// decisions.
pub fn evaluate_split(
    samples: &[RawSample],
    split: &Split,
    config: &PipelineConfig,
) -> Result<EvalOutcome> {
    evaluate_split_with_labels(samples, split, config, None)
}

/// As `evaluate_split`, but training labels can be replaced (aligned
/// with `split.train`) for permutation controls. Test-sample truth is
/// always the real subject id.
pub fn evaluate_split_with_labels(
    samples: &[RawSample],
    split: &Split,
    config: &PipelineConfig,
    train_labels: Option<&[String]>,
) -> Result<EvalOutcome> {
    let train: Vec<&RawSample> = split.train.iter().map(|&i| &samples[i]).collect();
    let trained = train_pipeline_with_labels(&train, train_labels, config)?;
    let predictions: Vec<Prediction> = split
        .test
        .par_iter()
        .map(|&i| {
            let sample = &samples[i];
            let (predicted, scores) = trained.classify(sample)?;
            Ok(Prediction {
                sample_index: i,
                truth: sample.subject_id.clone(),
                predicted,
                covariate: sample.covariate,
                scores: scores.scores,
            })
        })
        .collect::<Result<_>>()?;
    let correct = predictions.iter().filter(|p| p.predicted == p.truth).count();
    Ok(EvalOutcome {
        accuracy: correct as f64 / predictions.len().max(1) as f64,
        subject_ids: trained.subject_model.subject_ids.clone(),
        predictions,
    })
}

/// Label-shuffle control: trains with randomly permuted training
/// labels; the resulting test accuracy should sit at chance.
pub fn evaluate_split_shuffled(
    samples: &[RawSample],
    split: &Split,
    config: &PipelineConfig,
    shuffle_seed: u64,
) -> Result<EvalOutcome> {
    let mut labels: Vec<String> = split
        .train
        .iter()
        .map(|&i| samples[i].subject_id.clone())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    labels.shuffle(&mut rng);
    evaluate_split_with_labels(samples, split, config, Some(&labels))
}

/// Mean/std accuracy at one training fraction.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub fraction: f64,
    pub mean: f64,
    pub std: f64,
}

fn derived_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(i)
}

/// Accuracy as a function of training fraction, averaged over repeated
/// random splits.
pub fn accuracy_sweep(
    samples: &[RawSample],
    fractions: &[f64],
    repeats: usize,
    config: &PipelineConfig,
) -> Result<Vec<SweepRow>> {
    if repeats == 0 {
        return Err(GaitError::Validation("repeats must be at least 1".into()));
    }
    fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            let accuracies: Vec<f64> = (0..repeats)
                .map(|rep| {
                    let spec = SplitSpec {
                        train_fraction: fraction,
                        seed: derived_seed(config.seed, (fi * repeats + rep) as u64),
                    };
                    let split = stratified_split(samples, &spec)?;
                    Ok(evaluate_split(samples, &split, config)?.accuracy)
                })
                .collect::<Result<_>>()?;
            let mean = accuracies.iter().sum::<f64>() / repeats as f64;
            let var = accuracies
                .iter()
                .map(|a| (a - mean) * (a - mean))
                .sum::<f64>()
                / repeats as f64;
            Ok(SweepRow {
                fraction,
                mean,
                std: var.sqrt(),
            })
        })
        .collect()
}

/// Accuracy of one prediction set restricted to one covariate.
#[derive(Debug, Clone)]
pub struct CovariateRow {
    pub covariate: Covariate,
    pub n: usize,
    pub accuracy: f64,
}

/// Per-covariate accuracies of a single jointly trained model's test
/// decisions. The covariate-count-weighted mean of the rows equals the
/// overall accuracy by construction.
pub fn covariate_breakdown(predictions: &[Prediction]) -> Vec<CovariateRow> {
    let mut groups: BTreeMap<&'static str, (Covariate, usize, usize)> = BTreeMap::new();
    for p in predictions {
        let entry = groups
            .entry(p.covariate.name())
            .or_insert((p.covariate, 0, 0));
        entry.1 += 1;
        if p.predicted == p.truth {
            entry.2 += 1;
        }
    }
    groups
        .into_values()
        .map(|(covariate, n, correct)| CovariateRow {
            covariate,
            n,
            accuracy: correct as f64 / n as f64,
        })
        .collect()
}

/// An ROC curve as (FPR, TPR) points with FPR non-decreasing, from
/// (0, 0) to (1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

/// Number of FPR grid points used when averaging curves.
pub const ROC_GRID_POINTS: usize = 101;

/// Builds an ROC curve from scored decisions by sweeping the decision
/// threshold across every distinct score. Tied scores move together,
/// producing the diagonal tie segments that make the trapezoidal area
/// equal the pairwise ranking statistic.
pub fn roc_from_scores(scored: &[(f64, bool)]) -> Result<RocCurve> {
    let n_pos = scored.iter().filter(|(_, p)| *p).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(GaitError::Validation(format!(
            "ROC needs both classes; got {n_pos} positive and {n_neg} negative"
        )));
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|p| (p[1].0 - p[0].0) * (p[1].1 + p[0].1) / 2.0)
        .sum()
}

/// Linear interpolation of TPR at a given FPR along the curve.
fn tpr_at(curve: &RocCurve, fpr: f64) -> f64 {
    let pts = &curve.points;
    if fpr <= pts[0].0 {
        return pts[0].1;
    }
    for pair in pts.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if fpr <= x1 {
            if x1 == x0 {
                return y1;
            }
            return y0 + (y1 - y0) * (fpr - x0) / (x1 - x0);
        }
    }
    pts.last().unwrap().1
}

/// Vertical averaging on a fixed 101-point FPR grid.
pub fn average_rocs(curves: &[RocCurve]) -> Result<RocCurve> {
    if curves.is_empty() {
        return Err(GaitError::Validation("no ROC curves to average".into()));
    }
    let points = (0..ROC_GRID_POINTS)
        .map(|i| {
            let fpr = i as f64 / (ROC_GRID_POINTS - 1) as f64;
            let tpr =
                curves.iter().map(|c| tpr_at(c, fpr)).sum::<f64>() / curves.len() as f64;
            (fpr, tpr)
        })
        .collect();
    Ok(RocCurve { points })
}

/// Per-subject ROC curves from one outcome's decision values: for each
/// subject, that subject's column of the score matrix scored against
/// the true-identity indicator.
pub fn per_subject_rocs(outcome: &EvalOutcome) -> Result<Vec<(String, RocCurve)>> {
    outcome
        .subject_ids
        .iter()
        .enumerate()
        .map(|(col, id)| {
            let scored: Vec<(f64, bool)> = outcome
                .predictions
                .iter()
                .map(|p| (p.scores[col], p.truth == *id))
                .collect();
            Ok((id.clone(), roc_from_scores(&scored)?))
        })
        .collect()
}

/// Writes a simple CSV with a header row.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| GaitError::io(path, e))
}

/// Renders line series into a standalone SVG plot on a unit-range-aware
/// axis box.
pub fn plot_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    if all.is_empty() {
        return Err(GaitError::Validation("nothing to plot".into()));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let file = std::fs::File::create(path).map_err(|e| GaitError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e: std::io::Error| GaitError::io(path, e);
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">"
    )
    .map_err(io)?;
    writeln!(w, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").map_err(io)?;
    writeln!(
        w,
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        W - 2.0 * M,
        H - 2.0 * M
    )
    .map_err(io)?;
    writeln!(
        w,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>",
        W / 2.0
    )
    .map_err(io)?;
    writeln!(
        w,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{x_label}</text>",
        W / 2.0,
        H - 16.0
    )
    .map_err(io)?;
    writeln!(
        w,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 18 {})\">{y_label}</text>",
        H / 2.0,
        H / 2.0
    )
    .map_err(io)?;
    for (tick, value) in [(0.0, x0), (0.5, (x0 + x1) / 2.0), (1.0, x1)] {
        let x = M + tick * (W - 2.0 * M);
        writeln!(
            w,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{value:.2}</text>",
            H - M + 18.0
        )
        .map_err(io)?;
    }
    for (tick, value) in [(0.0, y0), (0.5, (y0 + y1) / 2.0), (1.0, y1)] {
        let y = H - M - tick * (H - 2.0 * M);
        writeln!(
            w,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{value:.2}</text>",
            M - 8.0,
            y + 4.0
        )
        .map_err(io)?;
    }
    for (i, (name, points)) in series.iter().enumerate() {
        let color = palette[i % palette.len()];
        let path_points: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        writeln!(
            w,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path_points.join(" ")
        )
        .map_err(io)?;
        writeln!(
            w,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>",
            W - M - 150.0,
            M + 18.0 + 16.0 * i as f64
        )
        .map_err(io)?;
    }
    writeln!(w, "</svg>").map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Pace;
    use crate::pipeline::Mode;
    use crate::synth::{generate_dataset, GeneratorConfig};

    fn dummy_sample(subject: &str, id: usize) -> RawSample {
        RawSample {
            subject_id: subject.to_string(),
            sample_id: format!("{subject}_{id}"),
            pace: Pace::Normal,
            covariate: Covariate::None,
            windows: Vec::new(),
            trajectories: Vec::new(),
        }
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let mut samples = Vec::new();
        for subject in ["a", "b", "c"] {
            for i in 0..7 {
                samples.push(dummy_sample(subject, i));
            }
        }
        for seed in 0..20 {
            let split = stratified_split(
                &samples,
                &SplitSpec {
                    train_fraction: 0.3,
                    seed,
                },
            )
            .unwrap();
            assert_eq!(split.train.len() + split.test.len(), samples.len());
            let mut seen = std::collections::HashSet::new();
            for i in split.train.iter().chain(&split.test) {
                assert!(seen.insert(*i));
            }
            for subject in ["a", "b", "c"] {
                let in_train = split
                    .train
                    .iter()
                    .filter(|&&i| samples[i].subject_id == subject)
                    .count();
                let in_test = split
                    .test
                    .iter()
                    .filter(|&&i| samples[i].subject_id == subject)
                    .count();
                assert_eq!(in_train, 2, "30% of 7, rounded");
                assert!(in_test >= 1);
            }
        }
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let samples: Vec<RawSample> = ["a", "b"]
            .iter()
            .flat_map(|s| (0..10).map(move |i| dummy_sample(s, i)))
            .collect();
        let spec = SplitSpec {
            train_fraction: 0.5,
            seed: 11,
        };
        assert_eq!(
            stratified_split(&samples, &spec).unwrap(),
            stratified_split(&samples, &spec).unwrap()
        );
        let other = stratified_split(
            &samples,
            &SplitSpec {
                train_fraction: 0.5,
                seed: 12,
            },
        )
        .unwrap();
        assert_ne!(stratified_split(&samples, &spec).unwrap(), other);
    }

    #[test]
    fn split_rejects_degenerate_requests() {
        let samples = vec![dummy_sample("a", 0), dummy_sample("a", 1)];
        assert!(stratified_split(
            &samples,
            &SplitSpec {
                train_fraction: 0.5,
                seed: 0
            }
        )
        .is_err());
        let mut samples = vec![
            dummy_sample("a", 0),
            dummy_sample("a", 1),
            dummy_sample("b", 0),
        ];
        assert!(stratified_split(
            &samples,
            &SplitSpec {
                train_fraction: 0.5,
                seed: 0
            }
        )
        .is_err());
        samples.push(dummy_sample("b", 1));
        assert!(stratified_split(
            &samples,
            &SplitSpec {
                train_fraction: 1.0,
                seed: 0
            }
        )
        .is_err());
    }

    /// Pairwise ranking statistic: P(score_pos > score_neg) + ½P(tie).
    fn pairwise_auc(scored: &[(f64, bool)]) -> f64 {
        let pos: Vec<f64> = scored.iter().filter(|(_, p)| *p).map(|(s, _)| *s).collect();
        let neg: Vec<f64> = scored.iter().filter(|(_, p)| !*p).map(|(s, _)| *s).collect();
        let mut total = 0.0;
        for p in &pos {
            for n in &neg {
                total += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn roc_fixtures() {
        let perfect = [(2.0, true), (1.5, true), (0.5, false), (0.1, false)];
        let curve = roc_from_scores(&perfect).unwrap();
        assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
        assert!((auc(&curve) - 1.0).abs() < 1e-12);

        let inverted = [(0.1, true), (0.2, true), (0.8, false), (0.9, false)];
        assert!(auc(&roc_from_scores(&inverted).unwrap()).abs() < 1e-12);

        // All scores tied: the diagonal.
        let tied = [(0.5, true), (0.5, false), (0.5, true), (0.5, false)];
        assert!((auc(&roc_from_scores(&tied).unwrap()) - 0.5).abs() < 1e-12);

        assert!(roc_from_scores(&[(1.0, true)]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_statistic() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let scored: Vec<(f64, bool)> = (0..40)
                .map(|_| {
                    // Coarse scores force plenty of ties.
                    let s = (rng.random_range(0.0..1.0f64) * 8.0).round() / 8.0;
                    (s, rng.random::<bool>())
                })
                .collect();
            let n_pos = scored.iter().filter(|(_, p)| *p).count();
            if n_pos == 0 || n_pos == scored.len() {
                continue;
            }
            let a = auc(&roc_from_scores(&scored).unwrap());
            let b = pairwise_auc(&scored);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn averaging_identical_curves_is_identity_on_grid() {
        let scored = [
            (0.9, true),
            (0.8, false),
            (0.7, true),
            (0.4, false),
            (0.2, true),
            (0.1, false),
        ];
        let curve = roc_from_scores(&scored).unwrap();
        let avg = average_rocs(&[curve.clone(), curve.clone(), curve.clone()]).unwrap();
        assert_eq!(avg.points.len(), ROC_GRID_POINTS);
        for &(fpr, tpr) in &avg.points {
            assert!((tpr - tpr_at(&curve, fpr)).abs() < 1e-12);
        }
        assert!((avg.points[0].0 - 0.0).abs() < 1e-12);
        assert!((avg.points.last().unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariate_rows_weighted_mean_is_overall_accuracy() {
        let mut predictions = Vec::new();
        let pattern = [
            (Covariate::NaturalWalking, 7, 9),
            (Covariate::BothHandsInPocket, 2, 5),
            (Covariate::LeftHandWithLoadings, 4, 4),
        ];
        let mut idx = 0;
        for (covariate, correct, n) in pattern {
            for i in 0..n {
                predictions.push(Prediction {
                    sample_index: idx,
                    truth: "x".into(),
                    predicted: if i < correct { "x".into() } else { "y".into() },
                    covariate,
                    scores: vec![],
                });
                idx += 1;
            }
        }
        let rows = covariate_breakdown(&predictions);
        assert_eq!(rows.len(), 3);
        let total: usize = rows.iter().map(|r| r.n).sum();
        let weighted: f64 = rows
            .iter()
            .map(|r| r.accuracy * r.n as f64 / total as f64)
            .sum();
        let overall = predictions
            .iter()
            .filter(|p| p.predicted == p.truth)
            .count() as f64
            / predictions.len() as f64;
        assert!((weighted - overall).abs() < 1e-12);
    }

    #[test]
    fn end_to_end_eval_beats_chance_and_shuffle_does_not() {
        let dir = tempfile::tempdir().unwrap();
        let gen = GeneratorConfig {
            n_subjects: 3,
            samples_per_subject: 6,
            frames_per_sample: 3,
            walk_secs: 8.0,
            seed: 21,
            ..GeneratorConfig::default()
        };
        let manifest = generate_dataset(&gen, dir.path()).unwrap();
        let raw = crate::pipeline::extract_dataset(
            &manifest,
            &dir.path().join("manifest.json"),
            2,
            15,
        )
        .unwrap();
        // EigenGait-only keeps this test fast (3 frames ⇒ no tracks).
        let config = PipelineConfig {
            mode: Mode::EigenGait,
            ..PipelineConfig::default()
        };
        let split = stratified_split(
            &raw,
            &SplitSpec {
                train_fraction: 0.5,
                seed: 1,
            },
        )
        .unwrap();
        let outcome = evaluate_split(&raw, &split, &config).unwrap();
        assert!(outcome.accuracy > 0.6, "accuracy {}", outcome.accuracy);

        let mut shuffled = Vec::new();
        for s in 0..4 {
            shuffled
                .push(evaluate_split_shuffled(&raw, &split, &config, 1000 + s).unwrap().accuracy);
        }
        let mean = shuffled.iter().sum::<f64>() / shuffled.len() as f64;
        assert!(mean < 0.65, "shuffled mean accuracy {mean}");
    }

    #[test]
    fn csv_and_svg_writers_produce_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("rows.csv");
        write_csv(
            &csv,
            "fraction,accuracy",
            &[
                vec!["0.1".into(), "0.82".into()],
                vec!["0.5".into(), "0.97".into()],
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text, "fraction,accuracy\n0.1,0.82\n0.5,0.97\n");

        let svg = dir.path().join("plot.svg");
        plot_svg(
            &svg,
            "accuracy",
            "fraction",
            "accuracy",
            &[("fused".into(), vec![(0.1, 0.82), (0.5, 0.97), (0.9, 0.99)])],
        )
        .unwrap();
        let body = std::fs::read_to_string(&svg).unwrap();
        assert!(body.starts_with("<svg"));
        assert!(body.contains("polyline"));
        assert!(body.trim_end().ends_with("</svg>"));
    }
}
