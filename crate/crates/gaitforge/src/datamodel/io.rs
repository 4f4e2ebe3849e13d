//! On-disk formats: acceleration CSV, PPM/PGM frame pairs, JSON
//! manifests, and raw flow files.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{
    AccelSample, ColorImage, DatasetManifest, DepthImage, GaitCurve, Grid, RgbdFrame, DEPTH_MAX,
};
use crate::error::{GaitError, Result};
use crate::rgbd::MotionField;

/// Loads an acceleration CSV with header `t_ms,ax,ay,az`.
///
/// Rows must be in strictly increasing timestamp order. An empty data
/// section is valid and yields an empty list.
pub fn load_accel_csv(path: &Path) -> Result<Vec<AccelSample>> {
    let file = fs::File::open(path).map_err(|e| GaitError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| GaitError::Format(format!("{}: empty file, missing header", path.display())))?;
    let header = header.map_err(|e| GaitError::io(path, e))?;
    if header.trim() != "t_ms,ax,ay,az" {
        return Err(GaitError::Parse {
            path: path.into(),
            line: 1,
            msg: format!("expected header `t_ms,ax,ay,az`, got `{}`", header.trim()),
        });
    }

    for (idx, line) in lines {
        let line = line.map_err(|e| GaitError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(GaitError::Parse {
                path: path.into(),
                line: lineno,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse_err = |msg: String| GaitError::Parse {
            path: path.into(),
            line: lineno,
            msg,
        };
        let t_ms: i64 = fields[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad timestamp `{}`: {e}", fields[0])))?;
        let mut vals = [0.0f64; 3];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = fields[i + 1]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad value `{}`: {e}", fields[i + 1])))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value `{}`", fields[i + 1])));
            }
        }
        if let Some(last) = samples.last() {
            let last: &AccelSample = last;
            if t_ms <= last.t_ms {
                return Err(GaitError::Validation(format!(
                    "{}:{}: timestamps not strictly increasing ({} after {})",
                    path.display(),
                    lineno,
                    t_ms,
                    last.t_ms
                )));
            }
        }
        samples.push(AccelSample {
            t_ms,
            ax: vals[0],
            ay: vals[1],
            az: vals[2],
        });
    }
    Ok(samples)
}

pub fn save_accel_csv(path: &Path, samples: &[AccelSample]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| GaitError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| GaitError::io(path, e);
    writeln!(w, "t_ms,ax,ay,az").map_err(io_err)?;
    for s in samples {
        writeln!(w, "{},{},{},{}", s.t_ms, s.ax, s.ay, s.az).map_err(io_err)?;
    }
    Ok(())
}

/// Infers the sampling rate from median inter-sample spacing, rejecting
/// jitter beyond ±20% of the nominal period.
pub fn infer_rate_hz(samples: &[AccelSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Ok(super::NOMINAL_RATE_HZ);
    }
    let mut deltas: Vec<i64> = samples.windows(2).map(|w| w[1].t_ms - w[0].t_ms).collect();
    deltas.sort_unstable();
    let median = deltas[deltas.len() / 2] as f64;
    for &d in &deltas {
        if (d as f64 - median).abs() > 0.2 * median {
            return Err(GaitError::Validation(format!(
                "sampling jitter exceeds 20% of the median period ({d} ms vs {median} ms)"
            )));
        }
    }
    Ok(1000.0 / median)
}

/// Builds a compound-acceleration gait curve from raw samples.
pub fn curve_from_samples(samples: &[AccelSample]) -> Result<GaitCurve> {
    let rate = infer_rate_hz(samples)?;
    let values = samples
        .iter()
        .map(|s| crate::accel::compound(s.ax, s.ay, s.az))
        .collect::<Result<Vec<f64>>>()?;
    GaitCurve::new(values, rate)
}

fn read_pnm_header(data: &[u8], path: &Path, magic: &str) -> Result<(usize, usize, usize, usize)> {
    // Returns (width, height, maxval, offset of binary payload).
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 && pos < data.len() {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        tokens.push(std::str::from_utf8(&data[start..pos]).map_err(|_| {
            GaitError::Format(format!("{}: non-ascii header", path.display()))
        })?);
    }
    if tokens.len() < 4 {
        return Err(GaitError::Format(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    if tokens[0] != magic {
        return Err(GaitError::Format(format!(
            "{}: expected magic {magic}, got {}",
            path.display(),
            tokens[0]
        )));
    }
    let parse = |t: &str| -> Result<usize> {
        t.parse()
            .map_err(|_| GaitError::Format(format!("{}: bad header token `{t}`", path.display())))
    };
    let width = parse(tokens[1])?;
    let height = parse(tokens[2])?;
    let maxval = parse(tokens[3])?;
    // Exactly one whitespace byte separates the header from the payload.
    Ok((width, height, maxval, pos + 1))
}

/// Reads a binary P6 PPM (maxval 255).
pub fn load_ppm(path: &Path) -> Result<ColorImage> {
    let data = fs::read(path).map_err(|e| GaitError::io(path, e))?;
    let (w, h, maxval, offset) = read_pnm_header(&data, path, "P6")?;
    if maxval != 255 {
        return Err(GaitError::Format(format!(
            "{}: PPM maxval must be 255, got {maxval}",
            path.display()
        )));
    }
    let payload = &data[offset..];
    if payload.len() < w * h * 3 {
        return Err(GaitError::Format(format!(
            "{}: truncated pixel data",
            path.display()
        )));
    }
    let pixels = payload[..w * h * 3]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Grid::from_vec(w, h, pixels)
}

pub fn save_ppm(path: &Path, image: &ColorImage) -> Result<()> {
    let mut buf = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    for px in &image.data {
        buf.extend_from_slice(px);
    }
    fs::write(path, buf).map_err(|e| GaitError::io(path, e))
}

/// Reads a binary P5 PGM holding 13-bit depth (maxval 8191, big-endian
/// 16-bit samples).
pub fn load_depth_pgm(path: &Path) -> Result<DepthImage> {
    let data = fs::read(path).map_err(|e| GaitError::io(path, e))?;
    let (w, h, maxval, offset) = read_pnm_header(&data, path, "P5")?;
    if maxval > DEPTH_MAX as usize {
        return Err(GaitError::Format(format!(
            "{}: depth PGM maxval {maxval} exceeds {DEPTH_MAX}",
            path.display()
        )));
    }
    let payload = &data[offset..];
    if payload.len() < w * h * 2 {
        return Err(GaitError::Format(format!(
            "{}: truncated pixel data",
            path.display()
        )));
    }
    let mut values = Vec::with_capacity(w * h);
    for c in payload[..w * h * 2].chunks_exact(2) {
        let v = u16::from_be_bytes([c[0], c[1]]);
        if v > DEPTH_MAX {
            return Err(GaitError::Format(format!(
                "{}: depth value {v} exceeds 13-bit maximum {DEPTH_MAX}",
                path.display()
            )));
        }
        values.push(v);
    }
    Grid::from_vec(w, h, values)
}

pub fn save_depth_pgm(path: &Path, depth: &DepthImage) -> Result<()> {
    if let Some(v) = depth.data.iter().find(|v| **v > DEPTH_MAX) {
        return Err(GaitError::Format(format!(
            "depth value {v} exceeds 13-bit maximum {DEPTH_MAX}"
        )));
    }
    let mut buf = format!("P5\n{} {}\n{}\n", depth.width, depth.height, DEPTH_MAX).into_bytes();
    for v in &depth.data {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, buf).map_err(|e| GaitError::io(path, e))
}

/// Per-frame index entry inside an RGBD sequence directory.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FrameEntry {
    pub color: String,
    pub depth: String,
    pub color_t_ms: i64,
    pub depth_t_ms: i64,
}

/// Loads an RGBD sequence from a directory holding `frames.json` plus
/// the PPM/PGM pairs it references.
pub fn load_rgbd_sequence(dir: &Path) -> Result<Vec<RgbdFrame>> {
    let index_path = dir.join("frames.json");
    let text = fs::read_to_string(&index_path).map_err(|e| GaitError::io(&index_path, e))?;
    let entries: Vec<FrameEntry> = serde_json::from_str(&text)
        .map_err(|e| GaitError::Format(format!("{}: {e}", index_path.display())))?;
    let mut frames = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        if entry.color_t_ms != entry.depth_t_ms {
            return Err(GaitError::Validation(format!(
                "frame {i}: color timestamp {} != depth timestamp {}",
                entry.color_t_ms, entry.depth_t_ms
            )));
        }
        let color_path = dir.join(&entry.color);
        let depth_path = dir.join(&entry.depth);
        if !color_path.exists() || !depth_path.exists() {
            return Err(GaitError::Validation(format!(
                "frame {i}: missing color or depth file"
            )));
        }
        let frame = RgbdFrame {
            color: load_ppm(&color_path)?,
            depth: load_depth_pgm(&depth_path)?,
            t_ms: entry.color_t_ms,
        };
        frame.validate()?;
        if let Some(prev) = frames.last() {
            let prev: &RgbdFrame = prev;
            if frame.t_ms <= prev.t_ms {
                return Err(GaitError::Validation(format!(
                    "frame {i}: timestamps not strictly increasing"
                )));
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Writes an RGBD sequence as numbered PPM/PGM pairs plus `frames.json`.
pub fn save_rgbd_sequence(dir: &Path, frames: &[RgbdFrame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GaitError::io(dir, e))?;
    let mut entries = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let color = format!("frame_{i:04}.ppm");
        let depth = format!("frame_{i:04}.pgm");
        save_ppm(&dir.join(&color), &frame.color)?;
        save_depth_pgm(&dir.join(&depth), &frame.depth)?;
        entries.push(FrameEntry {
            color,
            depth,
            color_t_ms: frame.t_ms,
            depth_t_ms: frame.t_ms,
        });
    }
    let index_path = dir.join("frames.json");
    let text = serde_json::to_string_pretty(&entries)
        .map_err(|e| GaitError::Format(e.to_string()))?;
    fs::write(&index_path, text).map_err(|e| GaitError::io(&index_path, e))
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| GaitError::io(path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| GaitError::Format(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest.validate(base)?;
    Ok(manifest)
}

pub fn save_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| GaitError::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| GaitError::io(path, e))
}

/// Resolves a manifest-relative path against the manifest's directory.
pub fn resolve(manifest_path: &Path, rel: &str) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(rel)
}

const FLO_MAGIC: &[u8; 4] = b"FLO1";

/// Reads a precomputed flow file: magic `FLO1`, u32 width/height,
/// then the u-plane and v-plane as little-endian f32.
pub fn load_flow(path: &Path) -> Result<MotionField> {
    let mut file = fs::File::open(path).map_err(|e| GaitError::io(path, e))?;
    let mut data = Vec::new();
    file.read_to_end(&mut data).map_err(|e| GaitError::io(path, e))?;
    if data.len() < 12 || &data[0..4] != FLO_MAGIC {
        return Err(GaitError::Format(format!(
            "{}: not a FLO1 flow file",
            path.display()
        )));
    }
    let w = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
    let expected = 12 + w * h * 8;
    if data.len() < expected {
        return Err(GaitError::Format(format!(
            "{}: truncated flow payload",
            path.display()
        )));
    }
    let read_plane = |offset: usize| -> Vec<f32> {
        data[offset..offset + w * h * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let u = read_plane(12);
    let v = read_plane(12 + w * h * 4);
    Ok(MotionField {
        u: Grid::from_vec(w, h, u)?,
        v: Grid::from_vec(w, h, v)?,
    })
}

pub fn save_flow(path: &Path, field: &MotionField) -> Result<()> {
    let w = field.u.width;
    let h = field.u.height;
    let mut buf = Vec::with_capacity(12 + w * h * 8);
    buf.extend_from_slice(FLO_MAGIC);
    buf.extend_from_slice(&(w as u32).to_le_bytes());
    buf.extend_from_slice(&(h as u32).to_le_bytes());
    for v in &field.u.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &field.v.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| GaitError::io(path, e))
}
