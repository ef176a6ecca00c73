//! Software rasterizer for posed models.
//!
//! Coverage uses 26.6 fixed-point edge functions with a top-left fill rule,
//! so shared edges are painted exactly once. Texture lookup is nearest
//! neighbour on barycentric uvs. Row bands are rendered in parallel; each
//! pixel sees the same sequence of writes as a sequential render, so the
//! output does not depend on the thread count.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::image::{composite_over, ImageError, RasterImage, Rgba};
use crate::rig::{apply_parameters, sample_clip, AnimationClip, CharacterModel, ParamValues, PosedModel, RigError};

const SUBPIXEL: i64 = 64;
const BAND_ROWS: usize = 16;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("viewport must be at least 1x1, got {0}x{1}")]
    Viewport(u32, u32),
    #[error("fps must be positive and finite, got {0}")]
    Fps(f64),
    #[error("cannot create output directory {path}: {source}")]
    OutputDir { path: String, source: std::io::Error },
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Output size; `None` renders at canvas size.
    pub viewport: Option<(u32, u32)>,
    pub background: Rgba,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { viewport: None, background: [255, 255, 255, 255] }
    }
}

/// Triangle prepared for scan conversion: counter-clockwise (positive area)
/// fixed-point vertices, clamped pixel bounds and per-edge fill bias.
struct Setup<'a> {
    v: [(i64, i64); 3],
    uv: [[f64; 2]; 3],
    area: i64,
    /// Pixel bounds, inclusive min, exclusive max.
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
    /// 0 for top-left edges, -1 otherwise: a pixel is inside when every
    /// `edge + bias >= 0`, i.e. zero counts only on top-left edges.
    bias: [i64; 3],
    texture: &'a RasterImage,
    opacity: f64,
}

fn edge(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn is_top_left(a: (i64, i64), b: (i64, i64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    dy < 0 || (dy == 0 && dx > 0)
}

fn to_fixed(v: f64) -> i64 {
    // Saturating cast keeps wild poses from overflowing the edge products.
    (v * SUBPIXEL as f64).round().clamp(-(1i64 << 40) as f64, (1i64 << 40) as f64) as i64
}

fn prepare<'a>(posed: &'a PosedModel, w: u32, h: u32) -> Vec<Setup<'a>> {
    let (cw, ch) = posed.canvas_size;
    let (sx, sy) = (w as f64 / cw.max(1) as f64, h as f64 / ch.max(1) as f64);
    let mut layers: Vec<_> = posed.layers.iter().collect();
    layers.sort_by_key(|l| l.z);
    let mut out = Vec::new();
    for layer in layers {
        if layer.opacity <= 0.0 {
            continue;
        }
        for tri in &layer.triangles {
            let idx = tri.map(|i| i as usize);
            let mut v = idx.map(|i| (to_fixed(layer.vertices[i][0] * sx), to_fixed(layer.vertices[i][1] * sy)));
            let mut uv = idx.map(|i| layer.uvs[i]);
            let mut area = edge(v[0], v[1], v[2]);
            if area == 0 {
                continue;
            }
            if area < 0 {
                v.swap(1, 2);
                uv.swap(1, 2);
                area = -area;
            }
            let min = |k: fn(&(i64, i64)) -> i64| v.iter().map(k).min().unwrap();
            let max = |k: fn(&(i64, i64)) -> i64| v.iter().map(k).max().unwrap();
            // Pixel px has its centre at px*64+32; the covered centres lie in
            // [ceil((min-32)/64), floor((max-32)/64)]. The exclusive bound of
            // `floor(a/64)` is `floor(a/64) + 1` and `ceil(a/64)` is that of `a - 1`.
            let past = |m: i64, limit: u32| ((m - 32).div_euclid(SUBPIXEL) + 1).clamp(0, limit as i64) as usize;
            let (x0, x1) = (past(min(|p| p.0) - 1, w), past(max(|p| p.0), w));
            let (y0, y1) = (past(min(|p| p.1) - 1, h), past(max(|p| p.1), h));
            if x0 >= x1 || y0 >= y1 {
                continue;
            }
            let bias = [(1, 2), (2, 0), (0, 1)].map(|(a, b)| if is_top_left(v[a], v[b]) { 0 } else { -1 });
            out.push(Setup { v, uv, area, x0, x1, y0, y1, bias, texture: &layer.texture, opacity: layer.opacity });
        }
    }
    out
}

fn draw_band(band: &mut [u8], first_row: usize, width: usize, tris: &[Setup<'_>]) {
    let rows = band.len() / (width * 4);
    let last_row = first_row + rows;
    for t in tris {
        if t.y1 <= first_row || t.y0 >= last_row {
            continue;
        }
        let (tw, th) = (t.texture.width() as usize, t.texture.height() as usize);
        let area = t.area as f64;
        for py in t.y0.max(first_row)..t.y1.min(last_row) {
            let cy = py as i64 * SUBPIXEL + SUBPIXEL / 2;
            let row = &mut band[(py - first_row) * width * 4..][..width * 4];
            for px in t.x0..t.x1 {
                let p = (px as i64 * SUBPIXEL + SUBPIXEL / 2, cy);
                let w0 = edge(t.v[1], t.v[2], p);
                let w1 = edge(t.v[2], t.v[0], p);
                let w2 = edge(t.v[0], t.v[1], p);
                if w0 + t.bias[0] < 0 || w1 + t.bias[1] < 0 || w2 + t.bias[2] < 0 {
                    continue;
                }
                let (b0, b1, b2) = (w0 as f64 / area, w1 as f64 / area, w2 as f64 / area);
                let u = b0 * t.uv[0][0] + b1 * t.uv[1][0] + b2 * t.uv[2][0];
                let v = b0 * t.uv[0][1] + b1 * t.uv[1][1] + b2 * t.uv[2][1];
                let tx = ((u * tw as f64).floor() as i64).clamp(0, tw as i64 - 1) as u32;
                let ty = ((v * th as f64).floor() as i64).clamp(0, th as i64 - 1) as u32;
                let src = t.texture.get(tx, ty);
                if src[3] == 0 {
                    continue;
                }
                let dst = &mut row[px * 4..px * 4 + 4];
                let out = composite_over([dst[0], dst[1], dst[2], dst[3]], src, t.opacity);
                dst.copy_from_slice(&out);
            }
        }
    }
}

/// Draw `posed` into a `w x h` frame over `background`. Canvas coordinates
/// are scaled to the viewport.
pub fn rasterize(posed: &PosedModel, viewport: (u32, u32), background: Rgba) -> Result<RasterImage, RasterError> {
    let (w, h) = viewport;
    if w == 0 || h == 0 {
        return Err(RasterError::Viewport(w, h));
    }
    let tris = prepare(posed, w, h);
    let width = w as usize;
    let mut buf = RasterImage::filled(w, h, background).into_raw();
    buf.par_chunks_mut(width * 4 * BAND_ROWS)
        .enumerate()
        .for_each(|(i, band)| draw_band(band, i * BAND_ROWS, width, &tris));
    Ok(RasterImage::from_raw(w, h, buf)?)
}

/// Pose with `values` and rasterize.
pub fn render_frame(model: &CharacterModel, values: &ParamValues, opts: &RenderOptions) -> Result<RasterImage, RasterError> {
    let posed = apply_parameters(model, values)?;
    rasterize(&posed, opts.viewport.unwrap_or(model.canvas_size), opts.background)
}

/// Number of frames rendered for a clip: every `k / fps` with
/// `k / fps <= duration`, endpoints included.
pub fn frame_count(duration: f64, fps: f64) -> usize {
    (duration * fps + 1e-9).floor().max(0.0) as usize + 1
}

pub fn frame_file_name(k: usize) -> String {
    format!("frame_{k:05}.png")
}

/// Render every frame of `clip` into `out` as `frame_00000.png`, ... and
/// return the frame count.
pub fn render_clip(model: &CharacterModel, clip: &AnimationClip, fps: f64, out: &Path) -> Result<usize, RasterError> {
    render_clip_with(model, clip, fps, out, &RenderOptions::default())
}

pub fn render_clip_with(
    model: &CharacterModel,
    clip: &AnimationClip,
    fps: f64,
    out: &Path,
    opts: &RenderOptions,
) -> Result<usize, RasterError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(RasterError::Fps(fps));
    }
    std::fs::create_dir_all(out).map_err(|source| RasterError::OutputDir { path: out.display().to_string(), source })?;
    let n = frame_count(clip.duration, fps);
    for k in 0..n {
        let values = sample_clip(clip, k as f64 / fps);
        render_frame(model, &values, opts)?.save_png(&out.join(frame_file_name(k)))?;
    }
    Ok(n)
}
