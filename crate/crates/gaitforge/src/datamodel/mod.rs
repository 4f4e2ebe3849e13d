//! Core domain types shared by every pipeline stage.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

/// Nominal accelerometer sampling rate in Hz.
pub const NOMINAL_RATE_HZ: f64 = 50.0;

/// One tri-axial accelerometer reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSample {
    /// Timestamp in milliseconds, strictly increasing within a sequence.
    pub t_ms: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

/// Walking pace annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pace {
    Normal,
    Fast,
    Unknown,
}

impl Default for Pace {
    fn default() -> Self {
        Pace::Unknown
    }
}

/// The eight hard-covariate walking conditions, plus `None` for
/// unconstrained data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    None,
    NaturalWalking,
    LeftHandInPocket,
    RightHandInPocket,
    BothHandsInPocket,
    LeftHandHoldingBook,
    RightHandHoldingBook,
    LeftHandWithLoadings,
    RightHandWithLoadings,
}

impl Default for Covariate {
    fn default() -> Self {
        Covariate::None
    }
}

impl Covariate {
    /// The eight conditions of the covariate benchmark, in a fixed order.
    pub const ALL_EIGHT: [Covariate; 8] = [
        Covariate::NaturalWalking,
        Covariate::LeftHandInPocket,
        Covariate::RightHandInPocket,
        Covariate::BothHandsInPocket,
        Covariate::LeftHandHoldingBook,
        Covariate::RightHandHoldingBook,
        Covariate::LeftHandWithLoadings,
        Covariate::RightHandWithLoadings,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Covariate::None => "none",
            Covariate::NaturalWalking => "natural_walking",
            Covariate::LeftHandInPocket => "left_hand_in_pocket",
            Covariate::RightHandInPocket => "right_hand_in_pocket",
            Covariate::BothHandsInPocket => "both_hands_in_pocket",
            Covariate::LeftHandHoldingBook => "left_hand_holding_book",
            Covariate::RightHandHoldingBook => "right_hand_holding_book",
            Covariate::LeftHandWithLoadings => "left_hand_with_loadings",
            Covariate::RightHandWithLoadings => "right_hand_with_loadings",
        }
    }
}

/// A fixed-rate compound-acceleration time series for one walk.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitCurve {
    /// Compound accelerations in m/s², all non-negative.
    pub values: Vec<f64>,
    pub rate_hz: f64,
    pub subject_id: Option<String>,
    pub pace: Pace,
    pub covariate: Covariate,
}

impl GaitCurve {
    pub fn new(values: Vec<f64>, rate_hz: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GaitError::Validation(
                "gait curve values must be finite and non-negative".into(),
            ));
        }
        if rate_hz <= 0.0 {
            return Err(GaitError::Validation("sampling rate must be positive".into()));
        }
        Ok(GaitCurve {
            values,
            rate_hz,
            subject_id: None,
            pace: Pace::Unknown,
            covariate: Covariate::None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Milliseconds per sample at this curve's rate.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }
}

/// Samples-per-step after temporal resampling.
pub const SAMPLES_PER_STEP: usize = 50;

/// A resampled multi-step window: exactly 50·steps values.
#[derive(Debug, Clone, PartialEq)]
pub struct StepWindow {
    pub steps: usize,
    pub samples: Vec<f64>,
    pub source_curve_id: Option<String>,
}

impl StepWindow {
    pub fn new(steps: usize, samples: Vec<f64>) -> Result<Self> {
        if !(1..=8).contains(&steps) {
            return Err(GaitError::Validation(format!(
                "steps must be in 1..=8, got {steps}"
            )));
        }
        if samples.len() != SAMPLES_PER_STEP * steps {
            return Err(GaitError::Dimension {
                expected: SAMPLES_PER_STEP * steps,
                got: samples.len(),
            });
        }
        Ok(StepWindow {
            steps,
            samples,
            source_curve_id: None,
        })
    }
}

/// Maximum representable depth value (13-bit range).
pub const DEPTH_MAX: u16 = 8191;

/// A dense grid of values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy + Default> Grid<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Grid {
            width,
            height,
            data: vec![T::default(); width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(GaitError::Dimension {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

/// An 8-bit RGB color image.
pub type ColorImage = Grid<[u8; 3]>;
/// A 13-bit depth image; 0 marks an invalid return.
pub type DepthImage = Grid<u16>;

/// A temporally synchronized color + depth frame pair.
#[derive(Debug, Clone)]
pub struct RgbdFrame {
    pub color: ColorImage,
    pub depth: DepthImage,
    pub t_ms: i64,
}

impl RgbdFrame {
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.depth.data.iter().find(|v| **v > DEPTH_MAX) {
            return Err(GaitError::Format(format!(
                "depth value {v} exceeds 13-bit maximum {DEPTH_MAX}"
            )));
        }
        Ok(())
    }
}

/// One recorded walk of one subject, referencing its on-disk pieces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    /// Path to the acceleration CSV, relative to the manifest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accel: Option<String>,
    /// Path to the RGBD frame directory, relative to the manifest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rgbd: Option<String>,
    #[serde(default)]
    pub pace: Pace,
    #[serde(default)]
    pub covariate: Covariate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub samples: Vec<SampleRecord>,
}

/// Top-level dataset description; the unit every pipeline run consumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub subjects: Vec<SubjectRecord>,
}

impl DatasetManifest {
    /// Checks subject-id uniqueness and that every referenced path exists.
    pub fn validate(&self, base: &std::path::Path) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for subject in &self.subjects {
            if !seen.insert(&subject.id) {
                return Err(GaitError::Validation(format!(
                    "duplicate subject id {}",
                    subject.id
                )));
            }
            for sample in &subject.samples {
                for path in [&sample.accel, &sample.rgbd].into_iter().flatten() {
                    let full = base.join(path);
                    if !full.exists() {
                        return Err(GaitError::Validation(format!(
                            "sample {} references missing path {}",
                            sample.id,
                            full.display()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.subjects.iter().map(|s| s.samples.len()).sum()
    }
}
