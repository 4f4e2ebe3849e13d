//! Dense motion estimation. The reference estimator is a coarse-to-fine
//! pyramidal gradient method (iterative Lucas-Kanade over a 5×5 window,
//! 3 pyramid levels). Precomputed flow files can be ingested instead.

use crate::datamodel::{ColorImage, Grid};
use crate::error::{GaitError, Result};

/// Per-pixel displacement between two consecutive color frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    pub u: Grid<f32>,
    pub v: Grid<f32>,
}

impl MotionField {
    pub fn zeros(width: usize, height: usize) -> Self {
        MotionField {
            u: Grid::new(width, height),
            v: Grid::new(width, height),
        }
    }

    pub fn width(&self) -> usize {
        self.u.width
    }

    pub fn height(&self) -> usize {
        self.u.height
    }
}

/// A pluggable dense motion estimator.
pub trait MotionEstimator: Send + Sync {
    fn estimate(&self, prev: &ColorImage, next: &ColorImage) -> Result<MotionField>;
}

/// Coarse-to-fine pyramidal block/gradient estimator.
#[derive(Debug, Clone)]
pub struct PyramidalFlow {
    pub levels: usize,
    pub window: usize,
    pub iterations: usize,
}

impl Default for PyramidalFlow {
    fn default() -> Self {
        PyramidalFlow {
            levels: 3,
            window: 5,
            iterations: 5,
        }
    }
}

impl MotionEstimator for PyramidalFlow {
    fn estimate(&self, prev: &ColorImage, next: &ColorImage) -> Result<MotionField> {
        if prev.width != next.width || prev.height != next.height {
            return Err(GaitError::Dimension {
                expected: prev.width * prev.height,
                got: next.width * next.height,
            });
        }
        let g_prev = to_gray(prev);
        let g_next = to_gray(next);
        if g_prev.data == g_next.data {
            return Ok(MotionField::zeros(prev.width, prev.height));
        }
        let pyr_prev = build_pyramid(&g_prev, self.levels);
        let pyr_next = build_pyramid(&g_next, self.levels);

        let coarsest = pyr_prev.len() - 1;
        let mut field = MotionField::zeros(pyr_prev[coarsest].width, pyr_prev[coarsest].height);
        for level in (0..pyr_prev.len()).rev() {
            if level != coarsest {
                field = upsample_flow(&field, pyr_prev[level].width, pyr_prev[level].height);
            }
            refine_level(
                &pyr_prev[level],
                &pyr_next[level],
                &mut field,
                self.window,
                self.iterations,
            );
        }
        Ok(field)
    }
}

fn to_gray(image: &ColorImage) -> Grid<f32> {
    let data = image
        .data
        .iter()
        .map(|[r, g, b]| 0.299 * *r as f32 + 0.587 * *g as f32 + 0.114 * *b as f32)
        .collect();
    Grid {
        width: image.width,
        height: image.height,
        data,
    }
}

fn downsample(image: &Grid<f32>) -> Grid<f32> {
    let w = (image.width / 2).max(1);
    let h = (image.height / 2).max(1);
    let mut out = Grid::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let x2 = (2 * x).min(image.width - 1);
            let y2 = (2 * y).min(image.height - 1);
            let x3 = (2 * x + 1).min(image.width - 1);
            let y3 = (2 * y + 1).min(image.height - 1);
            let avg =
                (image.get(x2, y2) + image.get(x3, y2) + image.get(x2, y3) + image.get(x3, y3))
                    / 4.0;
            out.set(x, y, avg);
        }
    }
    out
}

fn build_pyramid(base: &Grid<f32>, levels: usize) -> Vec<Grid<f32>> {
    let mut pyramid = vec![base.clone()];
    for _ in 1..levels {
        let last = pyramid.last().unwrap();
        if last.width < 16 || last.height < 16 {
            break;
        }
        pyramid.push(downsample(last));
    }
    pyramid
}

fn upsample_flow(field: &MotionField, out_w: usize, out_h: usize) -> MotionField {
    let scale_x = out_w as f32 / field.width() as f32;
    let scale_y = out_h as f32 / field.height() as f32;
    let mut out = MotionField::zeros(out_w, out_h);
    for y in 0..out_h {
        let sy = (y as f32 + 0.5) / scale_y - 0.5;
        for x in 0..out_w {
            let sx = (x as f32 + 0.5) / scale_x - 0.5;
            out.u.set(x, y, bilinear(&field.u, sx, sy) * scale_x);
            out.v.set(x, y, bilinear(&field.v, sx, sy) * scale_y);
        }
    }
    out
}

/// Bilinear sample with clamped borders.
pub fn bilinear(grid: &Grid<f32>, x: f32, y: f32) -> f32 {
    let x = x.clamp(0.0, (grid.width - 1) as f32);
    let y = y.clamp(0.0, (grid.height - 1) as f32);
    let x0 = (x.floor() as usize).min(grid.width - 1);
    let y0 = (y.floor() as usize).min(grid.height - 1);
    let x1 = (x0 + 1).min(grid.width - 1);
    let y1 = (y0 + 1).min(grid.height - 1);
    let fx = x - x0 as f32;
    let fy = y - y0 as f32;
    let top = grid.get(x0, y0) * (1.0 - fx) + grid.get(x1, y0) * fx;
    let bottom = grid.get(x0, y1) * (1.0 - fx) + grid.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Truncated sliding box sum: each output is the sum of all in-bounds
/// values within `half` in both directions. Separable two-pass
/// implementation with f64 running accumulators.
fn window_sum(grid: &Grid<f32>, half: usize) -> Grid<f32> {
    let (w, h) = (grid.width, grid.height);
    let mut rows: Grid<f32> = Grid::new(w, h);
    for y in 0..h {
        let row = &grid.data[y * w..(y + 1) * w];
        let mut acc: f64 = row.iter().take(half + 1).map(|v| *v as f64).sum();
        for x in 0..w {
            rows.data[y * w + x] = acc as f32;
            if x + half + 1 < w {
                acc += row[x + half + 1] as f64;
            }
            if x >= half {
                acc -= row[x - half] as f64;
            }
        }
    }
    let mut out: Grid<f32> = Grid::new(w, h);
    for x in 0..w {
        let mut acc: f64 = (0..(half + 1).min(h)).map(|y| rows.get(x, y) as f64).sum();
        for y in 0..h {
            out.set(x, y, acc as f32);
            if y + half + 1 < h {
                acc += rows.get(x, y + half + 1) as f64;
            }
            if y >= half {
                acc -= rows.get(x, y - half) as f64;
            }
        }
    }
    out
}

/// Iterative Lucas-Kanade refinement of `field` at one pyramid level.
///
/// The structure tensor of the previous frame is window-summed once;
/// each iteration warps the next frame by the current per-pixel flow,
/// window-sums the gradient-times-residual products, and solves the
/// 2×2 normal equations per pixel.
fn refine_level(
    prev: &Grid<f32>,
    next: &Grid<f32>,
    field: &mut MotionField,
    window: usize,
    iterations: usize,
) {
    let (w, h) = (prev.width, prev.height);
    let half = window / 2;

    // Spatial gradients of the previous frame, central differences.
    let mut ix: Grid<f32> = Grid::new(w, h);
    let mut iy: Grid<f32> = Grid::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(h - 1);
            ix.set(x, y, (prev.get(xp, y) - prev.get(xm, y)) / 2.0);
            iy.set(x, y, (prev.get(x, yp) - prev.get(x, ym)) / 2.0);
        }
    }
    let mut gxx: Grid<f32> = Grid::new(w, h);
    let mut gxy: Grid<f32> = Grid::new(w, h);
    let mut gyy: Grid<f32> = Grid::new(w, h);
    for i in 0..w * h {
        let gx = ix.data[i];
        let gy = iy.data[i];
        gxx.data[i] = gx * gx;
        gxy.data[i] = gx * gy;
        gyy.data[i] = gy * gy;
    }
    let sxx = window_sum(&gxx, half);
    let sxy = window_sum(&gxy, half);
    let syy = window_sum(&gyy, half);

    let mut gxt: Grid<f32> = Grid::new(w, h);
    let mut gyt: Grid<f32> = Grid::new(w, h);
    for _ in 0..iterations {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let it = bilinear(
                    next,
                    x as f32 + field.u.data[i],
                    y as f32 + field.v.data[i],
                ) - prev.data[i];
                gxt.data[i] = ix.data[i] * it;
                gyt.data[i] = iy.data[i] * it;
            }
        }
        let sxt = window_sum(&gxt, half);
        let syt = window_sum(&gyt, half);
        for i in 0..w * h {
            let (xx, xy, yy) = (sxx.data[i], sxy.data[i], syy.data[i]);
            let det = xx * yy - xy * xy;
            if det.abs() > 1e-4 && (xx + yy) > 1e-3 {
                let inc_u = (-yy * sxt.data[i] + xy * syt.data[i]) / det;
                let inc_v = (xy * sxt.data[i] - xx * syt.data[i]) / det;
                // Clamp the per-iteration increment to stay stable.
                field.u.data[i] += inc_u.clamp(-2.0, 2.0);
                field.v.data[i] += inc_v.clamp(-2.0, 2.0);
            }
        }
        // Median regularization keeps the per-pixel warps coherent.
        *field = median_filter_3x3(field);
    }
}

/// Median of nine values via a fixed exchange network.
fn median9(mut v: [f32; 9]) -> f32 {
    #[inline]
    fn cx(v: &mut [f32; 9], a: usize, b: usize) {
        if v[a] > v[b] {
            v.swap(a, b);
        }
    }
    cx(&mut v, 1, 2);
    cx(&mut v, 4, 5);
    cx(&mut v, 7, 8);
    cx(&mut v, 0, 1);
    cx(&mut v, 3, 4);
    cx(&mut v, 6, 7);
    cx(&mut v, 1, 2);
    cx(&mut v, 4, 5);
    cx(&mut v, 7, 8);
    cx(&mut v, 0, 3);
    cx(&mut v, 5, 8);
    cx(&mut v, 4, 7);
    cx(&mut v, 3, 6);
    cx(&mut v, 1, 4);
    cx(&mut v, 2, 5);
    cx(&mut v, 4, 7);
    cx(&mut v, 4, 2);
    cx(&mut v, 6, 4);
    cx(&mut v, 4, 2);
    v[4]
}

/// 3×3 median filter applied to both planes of a motion field; borders
/// are handled by edge replication.
pub fn median_filter_3x3(field: &MotionField) -> MotionField {
    let (w, h) = (field.width(), field.height());
    let mut out = MotionField::zeros(w, h);
    for plane in 0..2 {
        let (src, dst) = if plane == 0 {
            (&field.u, &mut out.u)
        } else {
            (&field.v, &mut out.v)
        };
        for y in 0..h {
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(h - 1);
            for x in 0..w {
                let xm = x.saturating_sub(1);
                let xp = (x + 1).min(w - 1);
                dst.set(
                    x,
                    y,
                    median9([
                        src.get(xm, ym),
                        src.get(x, ym),
                        src.get(xp, ym),
                        src.get(xm, y),
                        src.get(x, y),
                        src.get(xp, y),
                        src.get(xm, yp),
                        src.get(x, yp),
                        src.get(xp, yp),
                    ]),
                );
            }
        }
    }
    out
}
