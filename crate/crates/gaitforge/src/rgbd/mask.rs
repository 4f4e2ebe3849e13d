//! Person-mask extraction from a foreground-coded depth image: bicubic
//! resize to color dimensions, fixed-threshold binarization, border
//! flood hole filling, and small-component pruning.

use crate::datamodel::{DepthImage, Grid, DEPTH_MAX};

/// Binarization threshold on the foreground-coded depth image.
pub const MASK_THRESHOLD: f64 = 113.0;
/// Connected components smaller than this are removed (8-connected).
pub const MIN_COMPONENT_PIXELS: usize = 1000;

/// A per-frame boolean person mask at color resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonMask {
    pub grid: Grid<bool>,
    pub frame_index: usize,
}

impl PersonMask {
    pub fn is_empty(&self) -> bool {
        !self.grid.data.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.grid.data.iter().filter(|&&b| b).count()
    }
}

fn cubic_kernel(t: f64) -> f64 {
    // Catmull-Rom (a = -0.5).
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

/// Bicubic (Catmull-Rom) resize of a depth grid, clamped to the 13-bit
/// range.
pub fn resize_depth_bicubic(depth: &DepthImage, out_w: usize, out_h: usize) -> DepthImage {
    if depth.width == out_w && depth.height == out_h {
        return depth.clone();
    }
    let mut out = Grid::new(out_w, out_h);
    let sx = depth.width as f64 / out_w as f64;
    let sy = depth.height as f64 / out_h as f64;
    let sample = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, depth.width as isize - 1) as usize;
        let y = y.clamp(0, depth.height as isize - 1) as usize;
        depth.get(x, y) as f64
    };
    for oy in 0..out_h {
        let src_y = (oy as f64 + 0.5) * sy - 0.5;
        let y0 = src_y.floor() as isize;
        let fy = src_y - y0 as f64;
        for ox in 0..out_w {
            let src_x = (ox as f64 + 0.5) * sx - 0.5;
            let x0 = src_x.floor() as isize;
            let fx = src_x - x0 as f64;
            let mut acc = 0.0;
            for dy in -1..=2isize {
                let wy = cubic_kernel(dy as f64 - fy);
                if wy == 0.0 {
                    continue;
                }
                for dx in -1..=2isize {
                    let wx = cubic_kernel(dx as f64 - fx);
                    if wx == 0.0 {
                        continue;
                    }
                    acc += wx * wy * sample(x0 + dx, y0 + dy);
                }
            }
            out.set(ox, oy, acc.round().clamp(0.0, DEPTH_MAX as f64) as u16);
        }
    }
    out
}

/// Extracts the person mask at color resolution.
///
/// Recipe: bicubic resize of the foreground-coded depth to the color
/// dimensions, binarize above 113, fill interior holes by border flood
/// fill, then drop 8-connected components under 1000 pixels. An
/// all-background result is returned as an empty mask.
pub fn segment_mask(
    depth: &DepthImage,
    color_w: usize,
    color_h: usize,
    frame_index: usize,
) -> PersonMask {
    let resized = resize_depth_bicubic(depth, color_w, color_h);
    let mut fg: Grid<bool> = Grid::new(color_w, color_h);
    for (out, &v) in fg.data.iter_mut().zip(&resized.data) {
        *out = v as f64 > MASK_THRESHOLD;
    }
    fill_holes(&mut fg);
    prune_small_components(&mut fg, MIN_COMPONENT_PIXELS);
    PersonMask {
        grid: fg,
        frame_index,
    }
}

/// Marks as foreground any background pixel unreachable from the image
/// border through background (4-connected flood from the border).
pub fn fill_holes(mask: &mut Grid<bool>) {
    let (w, h) = (mask.width, mask.height);
    if w == 0 || h == 0 {
        return;
    }
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    for x in 0..w {
        for y in [0, h - 1] {
            if !mask.get(x, y) && !outside[y * w + x] {
                outside[y * w + x] = true;
                stack.push((x, y));
            }
        }
    }
    for y in 0..h {
        for x in [0, w - 1] {
            if !mask.get(x, y) && !outside[y * w + x] {
                outside[y * w + x] = true;
                stack.push((x, y));
            }
        }
    }
    while let Some((x, y)) = stack.pop() {
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !mask.get(nx, ny) && !outside[ny * w + nx] {
                outside[ny * w + nx] = true;
                stack.push((nx, ny));
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) && !outside[y * w + x] {
                mask.set(x, y, true);
            }
        }
    }
}

/// Removes 8-connected foreground components smaller than `min_pixels`.
pub fn prune_small_components(mask: &mut Grid<bool>, min_pixels: usize) {
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut component = Vec::new();
    let mut stack = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if !mask.get(sx, sy) || visited[sy * w + sx] {
                continue;
            }
            component.clear();
            stack.push((sx, sy));
            visited[sy * w + sx] = true;
            while let Some((x, y)) = stack.pop() {
                component.push((x, y));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if mask.get(nx, ny) && !visited[ny * w + nx] {
                            visited[ny * w + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            if component.len() < min_pixels {
                for &(x, y) in &component {
                    mask.set(x, y, false);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Grid;

    fn depth_with_rect(w: usize, h: usize, x0: usize, y0: usize, rw: usize, rh: usize, v: u16) -> DepthImage {
        let mut d: DepthImage = Grid::new(w, h);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                d.set(x, y, v);
            }
        }
        d
    }

    #[test]
    fn clean_rectangle_becomes_mask() {
        let depth = depth_with_rect(400, 300, 100, 50, 200, 200, 200);
        let mask = segment_mask(&depth, 400, 300, 0);
        assert_eq!(mask.count(), 200 * 200);
        assert!(mask.grid.get(150, 100));
        assert!(!mask.grid.get(10, 10));
    }

    #[test]
    fn interior_hole_is_filled() {
        let mut depth = depth_with_rect(400, 300, 100, 50, 200, 200, 200);
        for y in 120..130 {
            for x in 180..190 {
                depth.set(x, y, 0);
            }
        }
        let mask = segment_mask(&depth, 400, 300, 0);
        assert_eq!(mask.count(), 200 * 200);
        assert!(mask.grid.get(185, 125));
    }

    #[test]
    fn undersized_component_pruned() {
        // 30×30 = 900 px < 1000.
        let depth = depth_with_rect(400, 300, 100, 50, 30, 30, 200);
        let mask = segment_mask(&depth, 400, 300, 0);
        assert!(mask.is_empty());
    }

    #[test]
    fn all_background_yields_empty_mask() {
        let depth: DepthImage = Grid::new(64, 48);
        let mask = segment_mask(&depth, 128, 96, 3);
        assert!(mask.is_empty());
        assert_eq!(mask.frame_index, 3);
    }

    #[test]
    fn bicubic_preserves_constant_grid() {
        let mut d: DepthImage = Grid::new(16, 12);
        for v in d.data.iter_mut() {
            *v = 1234;
        }
        let out = resize_depth_bicubic(&d, 64, 48);
        assert!(out.data.iter().all(|&v| v == 1234));
    }

    #[test]
    fn bicubic_identity_when_same_size() {
        let depth = depth_with_rect(20, 20, 5, 5, 8, 8, 999);
        let out = resize_depth_bicubic(&depth, 20, 20);
        assert_eq!(out, depth);
    }
}
