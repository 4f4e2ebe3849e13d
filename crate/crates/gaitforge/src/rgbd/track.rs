//! Dense 3D trajectory tracking over masked RGBD sequences.

use rayon::prelude::*;

use super::flow::{bilinear, median_filter_3x3, MotionEstimator, MotionField};
use super::mask::{resize_depth_bicubic, segment_mask, PersonMask};
use crate::datamodel::{DepthImage, RgbdFrame};
use crate::error::Result;

/// Mask and color-resolution depth for one frame.
#[derive(Debug, Clone)]
pub struct PreparedFrame {
    pub mask: PersonMask,
    /// Depth resized to color dimensions; 0 stays invalid.
    pub depth: DepthImage,
}

/// A completed L-step track: exactly L+1 (x, y, z) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory3D {
    pub points: Vec<[f64; 3]>,
    pub start_frame: usize,
}

impl Trajectory3D {
    pub fn track_len(&self) -> usize {
        self.points.len() - 1
    }
}

#[derive(Debug, Clone)]
pub struct TrackParams {
    /// Dense seeding stride in pixels.
    pub stride: usize,
    /// Kill threshold on single-frame displacement in pixels.
    pub max_step_px: f64,
    /// Discard finished tracks whose total spatial displacement is below
    /// this many pixels.
    pub static_prune_px: f64,
    pub prune_static: bool,
}

impl Default for TrackParams {
    fn default() -> Self {
        TrackParams {
            stride: 5,
            max_step_px: 15.0,
            static_prune_px: 1.0,
            prune_static: true,
        }
    }
}

/// Segments every frame and resizes its depth to color resolution.
pub fn prepare_frames(frames: &[RgbdFrame]) -> Vec<PreparedFrame> {
    frames
        .par_iter()
        .enumerate()
        .map(|(i, frame)| {
            let (cw, ch) = (frame.color.width, frame.color.height);
            PreparedFrame {
                mask: segment_mask(&frame.depth, cw, ch, i),
                depth: resize_depth_bicubic(&frame.depth, cw, ch),
            }
        })
        .collect()
}

/// Computes motion fields for every consecutive frame pair.
pub fn estimate_fields(
    frames: &[RgbdFrame],
    estimator: &dyn MotionEstimator,
) -> Result<Vec<MotionField>> {
    frames
        .par_windows(2)
        .map(|pair| estimator.estimate(&pair[0].color, &pair[1].color))
        .collect()
}

struct LiveTrack {
    points: Vec<[f64; 3]>,
    start_frame: usize,
}

/// Tracks dense points through the masked sequence.
///
/// Seeds lie on a stride-spaced grid inside each mask where no live
/// track already occupies the cell. Each track advances by bilinear
/// sampling of the 3×3-median-filtered motion field and reads depth at
/// the nearest pixel. A track dies when it exits the mask, lands on
/// invalid depth, or moves more than `max_step_px` in one frame; it is
/// emitted once it holds L+1 points.
pub fn calc_trajectories(
    prepared: &[PreparedFrame],
    fields: &[MotionField],
    track_len: usize,
) -> Vec<Trajectory3D> {
    calc_trajectories_with(prepared, fields, track_len, &TrackParams::default())
}

pub fn calc_trajectories_with(
    prepared: &[PreparedFrame],
    fields: &[MotionField],
    track_len: usize,
    params: &TrackParams,
) -> Vec<Trajectory3D> {
    if prepared.is_empty() || fields.len() + 1 != prepared.len() || track_len == 0 {
        return Vec::new();
    }
    let stride = params.stride.max(1);
    let mut live: Vec<LiveTrack> = Vec::new();
    let mut done: Vec<Trajectory3D> = Vec::new();

    let filtered: Vec<MotionField> = fields.par_iter().map(median_filter_3x3).collect();

    for t in 0..prepared.len() {
        seed_tracks(&mut live, &prepared[t], t, stride);
        if t == prepared.len() - 1 {
            break;
        }
        let field = &filtered[t];
        let next = &prepared[t + 1];
        live.retain_mut(|track| {
            let [x, y, _] = *track.points.last().unwrap();
            let du = bilinear(&field.u, x as f32, y as f32) as f64;
            let dv = bilinear(&field.v, x as f32, y as f32) as f64;
            if (du * du + dv * dv).sqrt() > params.max_step_px {
                return false;
            }
            let nx = x + du;
            let ny = y + dv;
            let px = nx.round() as isize;
            let py = ny.round() as isize;
            if !next.mask.grid.in_bounds(px, py) {
                return false;
            }
            let (pxu, pyu) = (px as usize, py as usize);
            if !next.mask.grid.get(pxu, pyu) {
                return false;
            }
            let z = next.depth.get(pxu, pyu);
            if z == 0 {
                return false;
            }
            track.points.push([nx, ny, z as f64]);
            if track.points.len() == track_len + 1 {
                if !params.prune_static || !is_static(&track.points, params.static_prune_px) {
                    done.push(Trajectory3D {
                        points: std::mem::take(&mut track.points),
                        start_frame: track.start_frame,
                    });
                }
                return false;
            }
            true
        });
    }
    done
}

fn is_static(points: &[[f64; 3]], threshold: f64) -> bool {
    let total: f64 = points
        .windows(2)
        .map(|p| {
            let dx = p[1][0] - p[0][0];
            let dy = p[1][1] - p[0][1];
            (dx * dx + dy * dy).sqrt()
        })
        .sum();
    total < threshold
}

fn seed_tracks(live: &mut Vec<LiveTrack>, frame: &PreparedFrame, t: usize, stride: usize) {
    let grid = &frame.mask.grid;
    let cells_w = grid.width / stride + 1;
    let cells_h = grid.height / stride + 1;
    let mut occupied = vec![false; cells_w * cells_h];
    for track in live.iter() {
        let [x, y, _] = *track.points.last().unwrap();
        let cx = (x as usize / stride).min(cells_w - 1);
        let cy = (y as usize / stride).min(cells_h - 1);
        occupied[cy * cells_w + cx] = true;
    }
    let mut y = stride / 2;
    while y < grid.height {
        let mut x = stride / 2;
        while x < grid.width {
            let cx = x / stride;
            let cy = y / stride;
            if !occupied[cy * cells_w + cx] && grid.get(x, y) && frame.depth.get(x, y) > 0 {
                occupied[cy * cells_w + cx] = true;
                live.push(LiveTrack {
                    points: vec![[x as f64, y as f64, frame.depth.get(x, y) as f64]],
                    start_frame: t,
                });
            }
            x += stride;
        }
        y += stride;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Grid;

    /// A mask-and-depth sequence with a rectangle translating dx px per
    /// frame, plus exact flow fields.
    fn rigid_translation_setup(
        n_frames: usize,
        dx: f64,
    ) -> (Vec<PreparedFrame>, Vec<MotionField>) {
        let (w, h) = (200, 120);
        let prepared: Vec<PreparedFrame> = (0..n_frames)
            .map(|t| {
                let mut mask: Grid<bool> = Grid::new(w, h);
                let mut depth: DepthImage = Grid::new(w, h);
                let x0 = 10 + (t as f64 * dx) as usize;
                for y in 20..100 {
                    for x in x0..x0 + 60 {
                        mask.set(x, y, true);
                        depth.set(x, y, 3000 - 10 * t as u16);
                    }
                }
                PreparedFrame {
                    mask: PersonMask {
                        grid: mask,
                        frame_index: t,
                    },
                    depth,
                }
            })
            .collect();
        let fields: Vec<MotionField> = (0..n_frames - 1)
            .map(|_| {
                let mut f = MotionField::zeros(w, h);
                for v in f.u.data.iter_mut() {
                    *v = dx as f32;
                }
                f
            })
            .collect();
        (prepared, fields)
    }

    #[test]
    fn static_scene_pruned_by_default() {
        let (prepared, fields) = rigid_translation_setup(17, 0.0);
        let tracks = calc_trajectories(&prepared, &fields, 15);
        assert!(tracks.is_empty());

        let params = TrackParams {
            prune_static: false,
            ..TrackParams::default()
        };
        let tracks = calc_trajectories_with(&prepared, &fields, 15, &params);
        assert!(!tracks.is_empty());
    }

    #[test]
    fn rigid_translation_tracks_follow_flow() {
        let (prepared, fields) = rigid_translation_setup(17, 3.0);
        let tracks = calc_trajectories(&prepared, &fields, 15);
        assert!(!tracks.is_empty());
        for track in &tracks {
            assert_eq!(track.points.len(), 16);
            for pair in track.points.windows(2) {
                let step_x = pair[1][0] - pair[0][0];
                let step_y = pair[1][1] - pair[0][1];
                assert!((step_x - 3.0).abs() < 0.3, "step_x = {step_x}");
                assert!(step_y.abs() < 0.3);
            }
        }
    }

    #[test]
    fn every_point_inside_its_mask() {
        let (prepared, fields) = rigid_translation_setup(20, 2.0);
        let tracks = calc_trajectories(&prepared, &fields, 15);
        assert!(!tracks.is_empty());
        for track in &tracks {
            for (offset, p) in track.points.iter().enumerate() {
                let frame = &prepared[track.start_frame + offset];
                let x = p[0].round() as usize;
                let y = p[1].round() as usize;
                assert!(frame.mask.grid.get(x, y));
                assert!(p[2] > 0.0);
            }
        }
    }

    #[test]
    fn invalid_depth_kills_track() {
        let (mut prepared, fields) = rigid_translation_setup(17, 3.0);
        // Zero out all depth at frame 8: every live track dies there.
        for v in prepared[8].depth.data.iter_mut() {
            *v = 0;
        }
        let tracks = calc_trajectories(&prepared, &fields, 15);
        // Nothing can span 16 points through a dead frame 8 of 17.
        assert!(tracks.is_empty());
    }

    #[test]
    fn excessive_step_kills_track() {
        let (prepared, mut fields) = rigid_translation_setup(17, 3.0);
        for v in fields[4].u.data.iter_mut() {
            *v = 40.0;
        }
        let tracks = calc_trajectories(&prepared, &fields, 15);
        assert!(tracks.is_empty());
    }

    #[test]
    fn deterministic_output() {
        let (prepared, fields) = rigid_translation_setup(20, 2.5);
        let a = calc_trajectories(&prepared, &fields, 15);
        let b = calc_trajectories(&prepared, &fields, 15);
        assert_eq!(a, b);
    }
}
