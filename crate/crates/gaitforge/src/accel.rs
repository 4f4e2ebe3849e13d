//! Acceleration pre-processing: compound acceleration, step
//! partitioning, and fixed-length window extraction.

use crate::datamodel::{GaitCurve, StepWindow, SAMPLES_PER_STEP};
use crate::error::{GaitError, Result};

/// Minimum compound value for a partition point, in m/s².
pub const PEAK_MIN_VALUE: f64 = 4.0;
/// Minimum spacing between accepted partition points, in milliseconds.
pub const PEAK_MIN_SPACING_MS: f64 = 700.0;

/// An accepted step-partitioning point on a gait curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionPoint {
    pub index: usize,
    pub t_ms: f64,
    pub value: f64,
}

/// Compound acceleration: the Euclidean norm of the tri-axial reading.
/// Invariant under any rotation of the device.
pub fn compound(ax: f64, ay: f64, az: f64) -> Result<f64> {
    if !(ax.is_finite() && ay.is_finite() && az.is_finite()) {
        return Err(GaitError::Validation("non-finite acceleration input".into()));
    }
    Ok((ax * ax + ay * ay + az * az).sqrt())
}

/// Partitions a gait curve into steps.
///
/// A sample becomes a partition point when, scanning left to right, it
/// is a strict local maximum, lies at least 700 ms after the previously
/// accepted point, and exceeds 4 m/s². Plateaus count at their leftmost
/// sample.
pub fn partition_steps(curve: &GaitCurve) -> Vec<PartitionPoint> {
    let values = &curve.values;
    let period = curve.period_ms();
    let mut points: Vec<PartitionPoint> = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if !is_local_max(values, i) {
            continue;
        }
        if values[i] <= PEAK_MIN_VALUE {
            continue;
        }
        let t_ms = i as f64 * period;
        if let Some(prev) = points.last() {
            if t_ms - prev.t_ms < PEAK_MIN_SPACING_MS {
                continue;
            }
        }
        points.push(PartitionPoint {
            index: i,
            t_ms,
            value: values[i],
        });
    }
    points
}

/// Strict local maximum, with plateaus attributed to their leftmost
/// sample: values[i] > the nearest differing value on each side.
fn is_local_max(values: &[f64], i: usize) -> bool {
    if i == 0 || values[i] <= values[i - 1] {
        return false;
    }
    // Walk right across any plateau of equal values.
    let mut j = i + 1;
    while j < values.len() && values[j] == values[i] {
        j += 1;
    }
    j < values.len() && values[j] < values[i]
}

/// Extracts non-overlapping multi-step windows from a partitioned curve.
///
/// Window k spans partition points [k·steps, (k+1)·steps]; each one-step
/// segment is resampled to 50 values by linear interpolation, then the
/// segments are concatenated.
pub fn extract_windows(
    curve: &GaitCurve,
    points: &[PartitionPoint],
    steps: usize,
) -> Result<Vec<StepWindow>> {
    if !(1..=8).contains(&steps) {
        return Err(GaitError::Validation(format!(
            "steps must be in 1..=8, got {steps}"
        )));
    }
    let mut windows = Vec::new();
    if points.len() < steps + 1 {
        return Ok(windows);
    }
    let mut start = 0;
    while start + steps < points.len() {
        let mut samples = Vec::with_capacity(SAMPLES_PER_STEP * steps);
        for s in 0..steps {
            let a = points[start + s].index;
            let b = points[start + s + 1].index;
            samples.extend(resample_segment(&curve.values[a..=b], SAMPLES_PER_STEP));
        }
        let mut window = StepWindow::new(steps, samples)?;
        window.source_curve_id = curve.subject_id.clone();
        windows.push(window);
        start += steps;
    }
    Ok(windows)
}

/// Linearly resamples a closed segment onto `n` uniformly spaced points,
/// preserving both endpoints.
fn resample_segment(segment: &[f64], n: usize) -> Vec<f64> {
    debug_assert!(segment.len() >= 2 && n >= 2);
    let last = (segment.len() - 1) as f64;
    (0..n)
        .map(|k| {
            let pos = k as f64 / (n - 1) as f64 * last;
            let i = (pos.floor() as usize).min(segment.len() - 2);
            let frac = pos - i as f64;
            segment[i] * (1.0 - frac) + segment[i + 1] * frac
        })
        .collect()
}
