//! Lloyd k-means with k-means++ seeding and empty-cluster repair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GaitError, Result};

#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub centers: Vec<Vec<f64>>,
    /// Final within-cluster sum of squared distances.
    pub cost: f64,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 100;

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center under Euclidean distance; ties go to the
/// lowest index.
#[inline]
pub fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn kmeans_plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.random_range(0..points.len());
    centers.push(points[first].clone());
    let mut dists: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dists.iter().sum();
        let idx = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(points[idx].clone());
        let new_center = centers.last().unwrap();
        for (d, p) in dists.iter_mut().zip(points) {
            let nd = squared_distance(p, new_center);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centers
}

/// One Lloyd run from a k-means++ start. The per-iteration cost is
/// non-increasing; iteration stops when assignments stabilize or after
/// 100 iterations. Empty clusters are repaired by stealing the point
/// farthest from its current center.
pub fn kmeans_lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KmeansResult> {
    if points.len() < k {
        return Err(GaitError::Validation(format!(
            "k-means needs at least k={k} points, got {}",
            points.len()
        )));
    }
    if k < 1 {
        return Err(GaitError::Validation("k must be at least 1".into()));
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut prev_cost = f64::INFINITY;
    let mut iterations = 0;

    loop {
        iterations += 1;
        // Assignment step: parallel over points, deterministic output.
        let new_assignments: Vec<usize> = points
            .par_iter()
            .map(|p| nearest_center(p, &centers))
            .collect();
        let cost: f64 = points
            .par_iter()
            .zip(&new_assignments)
            .map(|(p, &a)| squared_distance(p, &centers[a]))
            .sum();
        debug_assert!(
            cost <= prev_cost * (1.0 + 1e-9) + 1e-12,
            "Lloyd cost increased: {prev_cost} -> {cost}"
        );
        let converged = new_assignments == assignments;
        assignments = new_assignments;
        if converged || iterations >= MAX_ITERATIONS {
            return Ok(KmeansResult {
                centers,
                cost,
                assignments,
                iterations,
            });
        }
        prev_cost = cost;

        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (center_x, sum_x) in centers[c].iter_mut().zip(&sums[c]) {
                    *center_x = sum_x / counts[c] as f64;
                }
            }
        }
        // Empty-cluster repair: move in the point farthest from its
        // center, one per empty cluster.
        let mut taken = std::collections::HashSet::new();
        for c in 0..k {
            if counts[c] == 0 {
                let mut far: Option<(usize, f64)> = None;
                for (i, p) in points.iter().enumerate() {
                    if taken.contains(&i) || counts[assignments[i]] <= 1 {
                        continue;
                    }
                    let d = squared_distance(p, &centers[assignments[i]]);
                    if far.map(|(_, fd)| d > fd).unwrap_or(true) {
                        far = Some((i, d));
                    }
                }
                if let Some((i, _)) = far {
                    taken.insert(i);
                    centers[c] = points[i].clone();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: &[f64], n: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + rng.random_range(-spread..spread))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_separated_blobs() {
        let mut points = blob(&[0.0, 0.0], 50, 0.005, 1);
        points.extend(blob(&[10.0, 10.0], 50, 0.005, 2));
        let result = kmeans_lloyd(&points, 2, 7).unwrap();
        let mut centers = result.centers.clone();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((centers[0][0]).abs() < 0.01 && (centers[0][1]).abs() < 0.01);
        assert!((centers[1][0] - 10.0).abs() < 0.01 && (centers[1][1] - 10.0).abs() < 0.01);
    }

    #[test]
    fn deterministic_per_seed() {
        let points = blob(&[1.0, -2.0, 3.0], 200, 2.0, 9);
        let a = kmeans_lloyd(&points, 5, 123).unwrap();
        let b = kmeans_lloyd(&points, 5, 123).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.cost, b.cost);
    }

    #[test]
    fn too_few_points_rejected() {
        let points = blob(&[0.0], 3, 1.0, 0);
        assert!(kmeans_lloyd(&points, 5, 0).is_err());
    }

    #[test]
    fn cost_matches_assignments() {
        let points = blob(&[0.0, 0.0], 100, 3.0, 4);
        let result = kmeans_lloyd(&points, 4, 11).unwrap();
        let recomputed: f64 = points
            .iter()
            .zip(&result.assignments)
            .map(|(p, &a)| squared_distance(p, &result.centers[a]))
            .sum();
        assert!((result.cost - recomputed).abs() < 1e-9 * (1.0 + recomputed));
    }
}
