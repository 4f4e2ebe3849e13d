//! Seeded synthetic multi-sensor gait datasets: harmonic accelerometer
//! waveforms plus rendered RGBD walks of an articulated figure.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datamodel::io::{save_accel_csv, save_manifest, save_rgbd_sequence};
use crate::datamodel::{
    AccelSample, ColorImage, Covariate, DatasetManifest, DepthImage, Grid, Pace, RgbdFrame,
    SampleRecord, SubjectRecord,
};
use crate::error::{GaitError, Result};

/// Generator knobs; the defaults are the desk-scale benchmark settings.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub n_subjects: usize,
    pub samples_per_subject: usize,
    pub paces: Vec<Pace>,
    pub covariates: Vec<Covariate>,
    pub seed: u64,
    /// Walk duration driving the accelerometer sequence, in seconds.
    pub walk_secs: f64,
    pub color_width: usize,
    pub color_height: usize,
    pub depth_width: usize,
    pub depth_height: usize,
    pub frames_per_sample: usize,
    /// Depth sweep of the approach, in millimetres.
    pub depth_far_mm: f64,
    pub depth_near_mm: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_subjects: 2,
            samples_per_subject: 10,
            paces: vec![Pace::Normal],
            covariates: vec![Covariate::None],
            seed: 0,
            walk_secs: 8.0,
            color_width: 160,
            color_height: 120,
            depth_width: 80,
            depth_height: 60,
            frames_per_sample: 20,
            depth_far_mm: 5000.0,
            depth_near_mm: 1000.0,
        }
    }
}

/// Per-subject gait parameters: waveform harmonics for the compound
/// acceleration and limb-motion parameters for the rendered figure.
#[derive(Debug, Clone)]
pub struct SubjectProfile {
    pub subject_index: usize,
    /// Fundamental step frequency at normal pace, in Hz.
    pub step_rate_hz: f64,
    /// Harmonic amplitudes; index 0 is the fundamental.
    pub harmonic_amps: Vec<f64>,
    pub harmonic_phases: Vec<f64>,
    /// Arm and leg swing amplitudes in radians: [left arm, right arm,
    /// left leg, right leg].
    pub swing_amps: [f64; 4],
    pub swing_phase: f64,
    /// Lateral sway amplitude as a fraction of figure height.
    pub sway_amp: f64,
    /// Clothing texture parameters: stripe frequency and base color.
    pub stripe_freq: f64,
    pub shirt_rgb: [u8; 3],
    pub trouser_rgb: [u8; 3],
    pub noise_scale: f64,
}

/// Minimum pairwise L2 distance between subject waveform signatures.
const MIN_PROFILE_SEPARATION: f64 = 4.0;
const MAX_PROFILE_ATTEMPTS: usize = 100_000;
/// Evaluation grid for the unimodality and peak-location checks.
const WAVEFORM_GRID: usize = 512;
/// Signature resolution used for the separation check.
const SIGNATURE_POINTS: usize = 64;
/// Allowed deviation of the compound-waveform peak from the fundamental's
/// own peak at pi/2, in radians of step phase.
const PEAK_TOLERANCE: f64 = 0.15;

/// Compound gait waveform over one step cycle (gravity excluded),
/// sampled at `n` equally spaced phases.
fn compound_waveform(amps: &[f64], phases: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / n as f64;
            amps.iter()
                .zip(phases)
                .enumerate()
                .map(|(k, (a, p))| a * ((k + 1) as f64 * theta + p).sin())
                .sum()
        })
        .collect()
}

/// True when the periodic waveform has exactly one strict local maximum
/// per cycle, so step partitioning anchors on the same peak every cycle.
fn is_unimodal(waveform: &[f64]) -> bool {
    let n = waveform.len();
    let mut maxima = 0;
    for i in 0..n {
        let prev = waveform[(i + n - 1) % n];
        let next = waveform[(i + 1) % n];
        if waveform[i] > prev && waveform[i] > next {
            maxima += 1;
        }
    }
    maxima == 1
}

/// Phase of the waveform's global maximum, in radians.
fn peak_phase(waveform: &[f64]) -> f64 {
    let (argmax, _) = waveform
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    std::f64::consts::TAU * argmax as f64 / waveform.len() as f64
}

fn profile_signature(p: &SubjectProfile) -> Vec<f64> {
    compound_waveform(&p.harmonic_amps, &p.harmonic_phases, SIGNATURE_POINTS)
}

/// Minimum pairwise distance between limb-motion parameter vectors, so
/// subjects are also distinguishable through the camera.
const MIN_SWING_SEPARATION: f64 = 0.35;

fn swing_signature(p: &SubjectProfile) -> Vec<f64> {
    let mut sig: Vec<f64> = p.swing_amps.to_vec();
    sig.push(p.sway_amp * 10.0);
    sig
}

fn signature_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Draws distinct subject profiles, enforcing a minimum parameter
/// separation so generated subjects are distinguishable by construction.
pub fn draw_profiles(n_subjects: usize, rng: &mut ChaCha8Rng) -> Result<Vec<SubjectProfile>> {
    let mut profiles: Vec<SubjectProfile> = Vec::with_capacity(n_subjects);
    let mut signatures: Vec<Vec<f64>> = Vec::new();
    let mut swing_signatures: Vec<Vec<f64>> = Vec::new();
    for subject_index in 0..n_subjects {
        let mut accepted = None;
        for _ in 0..MAX_PROFILE_ATTEMPTS {
            let candidate = SubjectProfile {
                subject_index,
                step_rate_hz: rng.random_range(0.85..1.35),
                // A strong, nearly fixed fundamental plus seven free
                // overtones. Candidates are rejected below unless the
                // compound waveform keeps a single local maximum per step
                // cycle (otherwise partitioning locks onto different peak
                // subsequences from walk to walk) and that maximum sits
                // near the fundamental's own peak (otherwise the
                // between-subject peak shift dominates the covariance
                // spectrum and the energy cut collapses to one direction).
                harmonic_amps: std::iter::once(rng.random_range(5.9..6.1))
                    .chain((0..7).map(|_| rng.random_range(0.15..0.45)))
                    .collect(),
                harmonic_phases: std::iter::once(0.0)
                    .chain((0..7).map(|_| rng.random_range(0.0..std::f64::consts::TAU)))
                    .collect(),
                swing_amps: [
                    rng.random_range(0.15..0.9),
                    rng.random_range(0.15..0.9),
                    rng.random_range(0.25..0.75),
                    rng.random_range(0.25..0.75),
                ],
                swing_phase: rng.random_range(0.0..std::f64::consts::TAU),
                sway_amp: rng.random_range(0.005..0.055),
                stripe_freq: rng.random_range(0.15..1.2),
                shirt_rgb: [rng.random(), rng.random(), rng.random()],
                trouser_rgb: [rng.random(), rng.random(), rng.random()],
                noise_scale: rng.random_range(0.02..0.06),
            };
            let waveform = compound_waveform(
                &candidate.harmonic_amps,
                &candidate.harmonic_phases,
                WAVEFORM_GRID,
            );
            if !is_unimodal(&waveform) {
                continue;
            }
            if (peak_phase(&waveform) - std::f64::consts::FRAC_PI_2).abs() > PEAK_TOLERANCE {
                continue;
            }
            let sig = profile_signature(&candidate);
            let swing = swing_signature(&candidate);
            if signatures
                .iter()
                .zip(&swing_signatures)
                .all(|(s, w)| {
                    signature_distance(s, &sig) >= MIN_PROFILE_SEPARATION
                        && signature_distance(w, &swing) >= MIN_SWING_SEPARATION
                })
            {
                signatures.push(sig);
                swing_signatures.push(swing);
                accepted = Some(candidate);
                break;
            }
        }
        match accepted {
            Some(p) => profiles.push(p),
            None => {
                return Err(GaitError::Config(format!(
                    "could not separate {n_subjects} subject profiles; \
                     reduce the subject count or widen the parameter space"
                )))
            }
        }
    }
    Ok(profiles)
}

/// Covariate effect on the waveform and the figure: per-harmonic damping
/// plus an extra low-frequency sway harmonic, and limb-swing damping.
struct CovariateEffect {
    /// Multipliers on the fundamental and the seven overtones. Kept at
    /// or below 1.0 so a covariate never re-introduces extra local
    /// maxima into an accepted unimodal waveform.
    harmonic_scale: [f64; 8],
    extra_sway: f64,
    /// Multipliers on [left arm, right arm, left leg, right leg].
    swing_scale: [f64; 4],
}

fn covariate_effect(covariate: Covariate) -> CovariateEffect {
    match covariate {
        Covariate::None | Covariate::NaturalWalking => CovariateEffect {
            harmonic_scale: [1.0; 8],
            extra_sway: 0.0,
            swing_scale: [1.0, 1.0, 1.0, 1.0],
        },
        Covariate::LeftHandInPocket => CovariateEffect {
            harmonic_scale: [1.0, 0.65, 1.0, 0.85, 1.0, 0.9, 1.0, 0.9],
            extra_sway: 0.5,
            swing_scale: [0.15, 1.0, 1.0, 1.0],
        },
        Covariate::RightHandInPocket => CovariateEffect {
            harmonic_scale: [1.0, 1.0, 0.65, 0.85, 1.0, 0.9, 0.9, 1.0],
            extra_sway: 0.5,
            swing_scale: [1.0, 0.15, 1.0, 1.0],
        },
        Covariate::BothHandsInPocket => CovariateEffect {
            harmonic_scale: [0.9, 0.45, 0.45, 0.65, 0.8, 0.7, 0.7, 0.7],
            extra_sway: 1.0,
            swing_scale: [0.1, 0.1, 1.0, 1.0],
        },
        Covariate::LeftHandHoldingBook => CovariateEffect {
            harmonic_scale: [1.0, 0.85, 1.0, 1.0, 1.0, 0.95, 1.0, 1.0],
            extra_sway: 0.1,
            swing_scale: [0.3, 1.0, 1.0, 1.0],
        },
        Covariate::RightHandHoldingBook => CovariateEffect {
            harmonic_scale: [1.0, 1.0, 0.85, 1.0, 1.0, 1.0, 0.95, 1.0],
            extra_sway: 0.1,
            swing_scale: [1.0, 0.3, 1.0, 1.0],
        },
        Covariate::LeftHandWithLoadings => CovariateEffect {
            harmonic_scale: [0.95, 0.6, 1.0, 0.9, 0.9, 0.8, 1.0, 0.85],
            extra_sway: 0.8,
            swing_scale: [0.4, 1.1, 0.95, 1.0],
        },
        Covariate::RightHandWithLoadings => CovariateEffect {
            harmonic_scale: [0.95, 1.0, 0.6, 0.9, 0.9, 1.0, 0.8, 0.85],
            extra_sway: 0.8,
            swing_scale: [1.1, 0.4, 1.0, 0.95],
        },
    }
}

const GRAVITY: f64 = 9.81;

/// Synthesizes one walk's tri-axial acceleration sequence at 50 Hz. The
/// waveform is built on the compound magnitude and distributed over the
/// axes by a slowly drifting orientation, so only the compound value
/// carries gait structure.
pub fn synth_accel_walk(
    profile: &SubjectProfile,
    pace: Pace,
    covariate: Covariate,
    walk_secs: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<AccelSample> {
    let pace_factor = match pace {
        Pace::Fast => 1.3,
        _ => 1.0,
    };
    let f = profile.step_rate_hz * pace_factor;
    let effect = covariate_effect(covariate);
    let n = (walk_secs * 50.0) as usize;

    // Smooth per-walk deformation: two low-frequency sinusoids. Keeping
    // the deformation below the fundamental frequency avoids spurious
    // local maxima inside a step.
    let slow = [
        (
            rng.random_range(0.15..0.45),
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.5..1.5) * profile.noise_scale * 3.0,
        ),
        (
            rng.random_range(0.1..0.3),
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.5..1.5) * profile.noise_scale * 2.0,
        ),
    ];
    // A random start offset within one step cycle: a pure time shift,
    // so the waveform shape (and hence the peak-aligned windows) stays
    // subject-characteristic across walks.
    let t_shift: f64 = rng.random_range(0.0..(1.0 / f));

    // Slowly drifting orientation of the device in the pocket.
    let theta0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let phi0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let theta_rate: f64 = rng.random_range(-0.05..0.05);
    let phi_rate: f64 = rng.random_range(-0.05..0.05);

    (0..n)
        .map(|i| {
            let t = i as f64 / 50.0;
            let gait_t = t + t_shift;
            let mut magnitude = GRAVITY;
            for (k, ((amp, phase), scale)) in profile
                .harmonic_amps
                .iter()
                .zip(&profile.harmonic_phases)
                .map(|(a, p)| (*a, *p))
                .zip(effect.harmonic_scale)
                .enumerate()
            {
                let freq = f * (k + 1) as f64;
                magnitude +=
                    amp * scale * (std::f64::consts::TAU * freq * gait_t + phase).sin();
            }
            magnitude +=
                effect.extra_sway * (std::f64::consts::TAU * 0.5 * f * gait_t).sin();
            for (freq, phase, amp) in slow {
                magnitude += amp * (std::f64::consts::TAU * freq * t + phase).sin();
            }
            let magnitude = magnitude.max(0.1);
            let theta = theta0 + theta_rate * t;
            let phi = phi0 + phi_rate * t;
            AccelSample {
                t_ms: (i as i64) * 20,
                ax: magnitude * theta.cos() * phi.sin(),
                ay: magnitude * theta.sin() * phi.sin(),
                az: magnitude * phi.cos(),
            }
        })
        .collect()
}

fn checker_background(w: usize, h: usize, seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random_range(0.08..0.5),
                rng.random_range(0.08..0.5),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(12.0..30.0),
            )
        })
        .collect();
    let mut image = ColorImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut val = 110.0;
            for &(kx, ky, phase, amp) in &phases {
                val += amp * (kx * x as f64 + ky * y as f64 + phase).sin();
            }
            let v = val.clamp(0.0, 255.0) as u8;
            image.set(x, y, [v, v.saturating_add(10), v]);
        }
    }
    image
}

struct Limb {
    /// Anchor point as a fraction of the figure box (x, y).
    anchor: (f64, f64),
    /// Length and width as fractions of figure height.
    len: f64,
    width: f64,
    angle: f64,
    color: [u8; 3],
    /// Depth offset relative to the torso in mm.
    depth_offset: f64,
}

/// Renders one frame of the articulated figure; returns the color image
/// and the foreground-coded depth image (0 background, depth elsewhere).
#[allow(clippy::too_many_arguments)]
fn render_frame(
    cfg: &GeneratorConfig,
    profile: &SubjectProfile,
    effect: &CovariateEffect,
    background: &ColorImage,
    phase: f64,
    progress: f64,
    depth_mm: f64,
) -> (ColorImage, DepthImage) {
    let (cw, ch) = (cfg.color_width, cfg.color_height);
    let mut color = background.clone();
    // Depth rendered at color resolution, then downsampled to the depth
    // sensor resolution.
    let mut depth_hi: Grid<f64> = Grid::new(cw, ch);

    // Figure height grows as the subject approaches. Even at the far
    // end the silhouette must clear the 1000 px component-pruning
    // threshold of the segmenter.
    let fig_h = 0.66 * ch as f64 + 0.26 * ch as f64 * progress;
    let cx = cw as f64 / 2.0 + profile.sway_amp * fig_h * (phase + 1.3).sin() * 3.0;
    let foot_y = ch as f64 * 0.92;
    let top_y = foot_y - fig_h;

    let swing = |amp: f64, offset: f64| amp * (phase + profile.swing_phase + offset).sin();
    let arm_l = swing(profile.swing_amps[0] * effect.swing_scale[0], 0.0);
    let arm_r = swing(
        profile.swing_amps[1] * effect.swing_scale[1],
        std::f64::consts::PI,
    );
    let leg_l = swing(
        profile.swing_amps[2] * effect.swing_scale[2],
        std::f64::consts::PI,
    );
    let leg_r = swing(profile.swing_amps[3] * effect.swing_scale[3], 0.0);

    let torso_w = 0.52 * fig_h * 0.5;
    let torso_h = 0.46 * fig_h;
    let hip_y = top_y + 0.18 * fig_h + torso_h;
    let shoulder_y = top_y + 0.22 * fig_h;

    let mut paint_rect = |x0: f64, y0: f64, w: f64, h: f64, angle: f64, rgb: [u8; 3], stripes: f64, dz: f64| {
        // Rotated rectangle hung from its top-center anchor.
        let (s, c) = angle.sin_cos();
        let steps_l = (h.ceil() as usize).max(1) * 2;
        let steps_w = (w.ceil() as usize).max(1) * 2;
        for i in 0..=steps_l {
            let along = h * i as f64 / steps_l as f64;
            for j in 0..=steps_w {
                let across = w * (j as f64 / steps_w as f64 - 0.5);
                let px = x0 + across * c - along * s;
                let py = y0 + across * s + along * c;
                let xi = px.round() as isize;
                let yi = py.round() as isize;
                if xi < 0 || yi < 0 || xi >= cw as isize || yi >= ch as isize {
                    continue;
                }
                let (xu, yu) = (xi as usize, yi as usize);
                let stripe =
                    (40.0 * ((along + across) * stripes * profile.stripe_freq).sin()) as i16;
                let shade = |base: u8| (base as i16 + stripe).clamp(0, 255) as u8;
                color.set(xu, yu, [shade(rgb[0]), shade(rgb[1]), shade(rgb[2])]);
                depth_hi.set(xu, yu, depth_mm + dz);
            }
        }
    };

    // Torso and head first, limbs painted over them.
    paint_rect(
        cx,
        top_y + 0.18 * fig_h,
        torso_w,
        torso_h,
        0.0,
        profile.shirt_rgb,
        0.9,
        0.0,
    );
    let head_r = 0.09 * fig_h;
    paint_rect(
        cx,
        top_y,
        head_r * 1.6,
        head_r * 2.0,
        0.0,
        [224, 180, 150],
        0.2,
        0.0,
    );
    let limbs = [
        Limb {
            anchor: (cx - torso_w * 0.55, shoulder_y),
            len: 0.36 * fig_h,
            width: 0.12 * fig_h * 0.5,
            angle: arm_l,
            color: profile.shirt_rgb.map(|v| v.saturating_add(25)),
            depth_offset: -60.0 * arm_l.sin(),
        },
        Limb {
            anchor: (cx + torso_w * 0.55, shoulder_y),
            len: 0.36 * fig_h,
            width: 0.12 * fig_h * 0.5,
            angle: arm_r,
            color: profile.shirt_rgb.map(|v| v.saturating_sub(25)),
            depth_offset: -60.0 * arm_r.sin(),
        },
        Limb {
            anchor: (cx - torso_w * 0.3, hip_y - 0.05 * fig_h),
            len: 0.40 * fig_h,
            width: 0.16 * fig_h * 0.5,
            angle: leg_l,
            color: profile.trouser_rgb,
            depth_offset: -90.0 * leg_l.sin(),
        },
        Limb {
            anchor: (cx + torso_w * 0.3, hip_y - 0.05 * fig_h),
            len: 0.40 * fig_h,
            width: 0.16 * fig_h * 0.5,
            angle: leg_r,
            color: profile.trouser_rgb.map(|v| v.saturating_add(20)),
            depth_offset: -90.0 * leg_r.sin(),
        },
    ];
    for limb in limbs {
        paint_rect(
            limb.anchor.0,
            limb.anchor.1,
            limb.width,
            limb.len,
            limb.angle,
            limb.color,
            1.4,
            limb.depth_offset,
        );
    }

    // Downsample the foreground-coded depth to sensor resolution by
    // majority-of-block sampling.
    let mut depth: DepthImage = Grid::new(cfg.depth_width, cfg.depth_height);
    let bx = cw as f64 / cfg.depth_width as f64;
    let by = ch as f64 / cfg.depth_height as f64;
    for y in 0..cfg.depth_height {
        for x in 0..cfg.depth_width {
            let x0 = (x as f64 * bx) as usize;
            let y0 = (y as f64 * by) as usize;
            let x1 = (((x + 1) as f64 * bx) as usize).min(cw);
            let y1 = (((y + 1) as f64 * by) as usize).min(ch);
            let mut sum = 0.0;
            let mut fg = 0usize;
            let mut total = 0usize;
            for yy in y0..y1 {
                for xx in x0..x1 {
                    let v = depth_hi.get(xx, yy);
                    if v > 0.0 {
                        sum += v;
                        fg += 1;
                    }
                    total += 1;
                }
            }
            if fg * 2 > total {
                let mm = sum / fg as f64;
                depth.set(x, y, mm.round().clamp(1.0, 8191.0) as u16);
            }
        }
    }
    (color, depth)
}

/// Renders one RGBD walk toward the camera.
pub fn synth_rgbd_walk(
    cfg: &GeneratorConfig,
    profile: &SubjectProfile,
    pace: Pace,
    covariate: Covariate,
    background_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<RgbdFrame> {
    let effect = covariate_effect(covariate);
    let background = checker_background(cfg.color_width, cfg.color_height, background_seed);
    let pace_factor = match pace {
        Pace::Fast => 1.3,
        _ => 1.0,
    };
    let f = profile.step_rate_hz * pace_factor;
    let phase0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let n = cfg.frames_per_sample;
    (0..n)
        .map(|i| {
            let t = i as f64 / 15.0;
            let progress = i as f64 / (n - 1).max(1) as f64;
            let depth_mm =
                cfg.depth_far_mm + (cfg.depth_near_mm - cfg.depth_far_mm) * progress;
            let phase = phase0 + std::f64::consts::TAU * f * t;
            let (color, depth) =
                render_frame(cfg, profile, &effect, &background, phase, progress, depth_mm);
            RgbdFrame {
                color,
                depth,
                t_ms: (i as i64) * 66,
            }
        })
        .collect()
}

/// Generates a complete on-disk dataset and returns its manifest.
/// Deterministic per seed: regenerating with the same config is
/// bit-identical.
pub fn generate_dataset(cfg: &GeneratorConfig, out_dir: &Path) -> Result<DatasetManifest> {
    if cfg.n_subjects < 2 {
        return Err(GaitError::Config(format!(
            "need at least 2 subjects, got {}",
            cfg.n_subjects
        )));
    }
    if cfg.frames_per_sample < 2 {
        return Err(GaitError::Config("frames_per_sample must be >= 2".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| GaitError::io(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let profiles = draw_profiles(cfg.n_subjects, &mut rng)?;
    let background_seed = cfg.seed.wrapping_mul(0x2545F4914F6CDD1D).wrapping_add(1);

    let paces = if cfg.paces.is_empty() {
        vec![Pace::Normal]
    } else {
        cfg.paces.clone()
    };
    let covariates = if cfg.covariates.is_empty() {
        vec![Covariate::None]
    } else {
        cfg.covariates.clone()
    };

    // Plan every sample first so per-sample RNG seeds are stable and the
    // rendering can run in parallel.
    struct Plan {
        subject: usize,
        sample: usize,
        pace: Pace,
        covariate: Covariate,
        seed: u64,
    }
    let mut plans = Vec::new();
    for (si, _) in profiles.iter().enumerate() {
        for j in 0..cfg.samples_per_subject {
            let pace = paces[j % paces.len()];
            let covariate = covariates[j % covariates.len()];
            plans.push(Plan {
                subject: si,
                sample: j,
                pace,
                covariate,
                seed: cfg
                    .seed
                    .wrapping_mul(0x9E3779B97F4A7C15)
                    .wrapping_add((si as u64) << 20)
                    .wrapping_add(j as u64),
            });
        }
    }

    let records: Vec<(usize, SampleRecord)> = plans
        .par_iter()
        .map(|plan| -> Result<(usize, SampleRecord)> {
            let profile = &profiles[plan.subject];
            let mut sample_rng = ChaCha8Rng::seed_from_u64(plan.seed);
            let accel = synth_accel_walk(
                profile,
                plan.pace,
                plan.covariate,
                cfg.walk_secs,
                &mut sample_rng,
            );
            let frames = synth_rgbd_walk(
                cfg,
                profile,
                plan.pace,
                plan.covariate,
                background_seed,
                &mut sample_rng,
            );
            let subject_dir = format!("subject_{:03}", plan.subject);
            let sample_id = format!("s{:03}_w{:03}", plan.subject, plan.sample);
            let accel_rel = format!("{subject_dir}/{sample_id}.csv");
            let rgbd_rel = format!("{subject_dir}/{sample_id}_rgbd");
            std::fs::create_dir_all(out_dir.join(&subject_dir))
                .map_err(|e| GaitError::io(out_dir.join(&subject_dir), e))?;
            save_accel_csv(&out_dir.join(&accel_rel), &accel)?;
            save_rgbd_sequence(&out_dir.join(&rgbd_rel), &frames)?;
            Ok((
                plan.subject,
                SampleRecord {
                    id: sample_id,
                    accel: Some(accel_rel),
                    rgbd: Some(rgbd_rel),
                    pace: plan.pace,
                    covariate: plan.covariate,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut subjects: Vec<SubjectRecord> = (0..cfg.n_subjects)
        .map(|i| SubjectRecord {
            id: format!("subject_{i:03}"),
            samples: Vec::new(),
        })
        .collect();
    for (si, record) in records {
        subjects[si].samples.push(record);
    }
    for s in subjects.iter_mut() {
        s.samples.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let manifest = DatasetManifest { subjects };
    save_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::partition_steps;
    use crate::datamodel::io::curve_from_samples;

    fn profile_for_test(seed: u64) -> SubjectProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        draw_profiles(1, &mut rng).unwrap().into_iter().next().unwrap()
    }

    #[test]
    fn profiles_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let profiles = draw_profiles(10, &mut rng).unwrap();
        for i in 0..profiles.len() {
            for j in (i + 1)..profiles.len() {
                let d = signature_distance(
                    &profile_signature(&profiles[i]),
                    &profile_signature(&profiles[j]),
                );
                assert!(d >= MIN_PROFILE_SEPARATION);
            }
        }
    }

    #[test]
    fn accel_walk_partitions_into_steps() {
        for seed in 0..10 {
            let profile = profile_for_test(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let samples =
                synth_accel_walk(&profile, Pace::Normal, Covariate::None, 8.0, &mut rng);
            let curve = curve_from_samples(&samples).unwrap();
            let points = partition_steps(&curve);
            assert!(
                points.len() >= 3,
                "seed {seed}: only {} partition points",
                points.len()
            );
        }
    }

    #[test]
    fn rgbd_walk_has_large_foreground() {
        let cfg = GeneratorConfig::default();
        let profile = profile_for_test(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let frames = synth_rgbd_walk(
            &cfg,
            &profile,
            Pace::Normal,
            Covariate::None,
            7,
            &mut rng,
        );
        assert_eq!(frames.len(), cfg.frames_per_sample);
        for frame in &frames {
            frame.validate().unwrap();
            let mask = crate::rgbd::segment_mask(
                &frame.depth,
                cfg.color_width,
                cfg.color_height,
                0,
            );
            assert!(
                mask.count() >= 1000,
                "mask only {} px at t={}",
                mask.count(),
                frame.t_ms
            );
        }
        // Depth decreases toward the camera.
        let mean_depth = |f: &RgbdFrame| {
            let vals: Vec<f64> = f
                .depth
                .data
                .iter()
                .filter(|v| **v > 0)
                .map(|v| *v as f64)
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        assert!(mean_depth(&frames[0]) > 4000.0);
        assert!(mean_depth(frames.last().unwrap()) < 1600.0);
    }

    #[test]
    fn dataset_deterministic_per_seed() {
        let cfg = GeneratorConfig {
            n_subjects: 2,
            samples_per_subject: 2,
            frames_per_sample: 3,
            walk_secs: 2.0,
            seed: 7,
            ..GeneratorConfig::default()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        generate_dataset(&cfg, dir_a.path()).unwrap();
        generate_dataset(&cfg, dir_b.path()).unwrap();
        for entry in walk_files(dir_a.path()) {
            let rel = entry.strip_prefix(dir_a.path()).unwrap();
            let a = std::fs::read(&entry).unwrap();
            let b = std::fs::read(dir_b.path().join(rel)).unwrap();
            assert_eq!(a, b, "mismatch at {}", rel.display());
        }
    }

    fn walk_files(dir: &Path) -> Vec<std::path::PathBuf> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    out.push(path);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn covariate_shifts_mean_curves() {
        let profile = profile_for_test(5);
        let mean_curve = |covariate: Covariate, seed: u64| -> Vec<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = synth_accel_walk(&profile, Pace::Normal, covariate, 8.0, &mut rng);
            let curve = curve_from_samples(&samples).unwrap();
            let points = partition_steps(&curve);
            let windows = crate::accel::extract_windows(&curve, &points, 2).unwrap();
            crate::eigengait::subject_mean(&windows).unwrap()
        };
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let mut within = Vec::new();
        let mut across = Vec::new();
        for s in 0..6u64 {
            let none_a = mean_curve(Covariate::None, 2 * s);
            let none_b = mean_curve(Covariate::None, 2 * s + 1);
            let pocket = mean_curve(Covariate::BothHandsInPocket, 2 * s);
            within.push(dist(&none_a, &none_b));
            across.push(dist(&none_a, &pocket));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&across) > mean(&within),
            "across {} vs within {}",
            mean(&across),
            mean(&within)
        );
    }

    #[test]
    fn too_few_subjects_rejected() {
        let cfg = GeneratorConfig {
            n_subjects: 1,
            ..GeneratorConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(generate_dataset(&cfg, dir.path()).is_err());
    }
}
