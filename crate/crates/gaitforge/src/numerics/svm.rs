//! Linear SVM trained by dual coordinate descent on the L1-hinge loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{GaitError, Result};

/// A trained linear decision function w·x + b.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

pub const SVM_TOLERANCE: f64 = 1e-4;
pub const SVM_MAX_EPOCHS: usize = 1000;

/// Evaluates w·x + b.
pub fn decision_value(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.weights.len() {
        return Err(GaitError::Dimension {
            expected: model.weights.len(),
            got: x.len(),
        });
    }
    Ok(model.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + model.bias)
}

/// Trains min ½‖w‖² + C·Σ hinge(y_i(w·x_i + b)) by dual coordinate
/// descent. The bias is carried as an augmented constant feature, so the
/// dual is the standard box-constrained QP with α ∈ [0, C]. Coordinates
/// are visited in a seeded random permutation each epoch.
pub fn train_linear_svm(
    samples: &[(Vec<f64>, f64)],
    c: f64,
    seed: u64,
) -> Result<LinearModel> {
    if samples.is_empty() {
        return Err(GaitError::Validation("no training samples".into()));
    }
    if c <= 0.0 {
        return Err(GaitError::Validation("C must be positive".into()));
    }
    let has_pos = samples.iter().any(|(_, y)| *y > 0.0);
    let has_neg = samples.iter().any(|(_, y)| *y < 0.0);
    if !has_pos || !has_neg {
        return Err(GaitError::Validation(
            "training set must contain both classes".into(),
        ));
    }
    let dim = samples[0].0.len();
    for (x, y) in samples {
        if x.len() != dim {
            return Err(GaitError::Dimension {
                expected: dim,
                got: x.len(),
            });
        }
        if y.abs() != 1.0 {
            return Err(GaitError::Validation(format!("labels must be ±1, got {y}")));
        }
    }

    let n = samples.len();
    // Augmented feature dimension: dim + 1 with a trailing constant 1.
    let q_diag: Vec<f64> = samples
        .iter()
        .map(|(x, _)| x.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _epoch in 0..SVM_MAX_EPOCHS {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let (x, y) = &samples[i];
            let wx: f64 =
                w[..dim].iter().zip(x).map(|(wv, xv)| wv * xv).sum::<f64>() + w[dim];
            let g = y * wx - 1.0;
            // Projected gradient for the box constraint.
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > max_violation {
                max_violation = pg.abs();
            }
            if pg.abs() > 1e-14 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y;
                if delta != 0.0 {
                    for (wv, xv) in w[..dim].iter_mut().zip(x) {
                        *wv += delta * xv;
                    }
                    w[dim] += delta;
                }
            }
        }
        if max_violation < SVM_TOLERANCE {
            break;
        }
    }

    let bias = w[dim];
    w.truncate(dim);
    Ok(LinearModel { weights: w, bias, c })
}

/// Primal objective ½‖w‖² (bias included via augmentation) + C·Σ hinge.
pub fn primal_objective(model: &LinearModel, samples: &[(Vec<f64>, f64)]) -> f64 {
    let reg: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let hinge: f64 = samples
        .iter()
        .map(|(x, y)| {
            let margin = y * (decision_value(model, x).unwrap());
            (1.0 - margin).max(0.0)
        })
        .sum();
    0.5 * reg + model.c * hinge
}
