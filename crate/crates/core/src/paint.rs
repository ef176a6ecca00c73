//! Procedural appearance synthesis and the mask operations used to split a
//! flattened character into complete per-component layers.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composer::TemplateSheet;
use crate::image::{composite_over, ImageError, Mask, RasterImage, Rgb, Rgba, TRANSPARENT};

#[derive(Debug, Error)]
pub enum PaintError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("fully occluded component: no visible pixels to fill from")]
    FullyOccluded,
    #[error("invalid style for {0}: {1}")]
    InvalidStyle(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Pattern {
    Flat,
    /// Columns alternate between the base color and `alt` every `width` px,
    /// starting with the base color at the layer's left edge.
    VerticalStripes { width: u32, alt: Rgb },
    /// Dots of `radius` on a square grid of `spacing` px.
    PolkaDot { radius: u32, spacing: u32, dot: Rgb },
    /// Vertical ramp from the base color (top of the layer) to `to` (bottom).
    Gradient { to: Rgb },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotStyle {
    pub base: Rgb,
    pub pattern: Pattern,
}

impl SlotStyle {
    pub fn flat(base: Rgb) -> SlotStyle {
        SlotStyle { base, pattern: Pattern::Flat }
    }

    fn validate(&self, key: &str) -> Result<(), PaintError> {
        let bad = |m: &str| Err(PaintError::InvalidStyle(key.to_string(), m.to_string()));
        match self.pattern {
            Pattern::VerticalStripes { width: 0, .. } => bad("stripe width must be positive"),
            Pattern::PolkaDot { radius, spacing, .. } if radius == 0 || spacing == 0 => {
                bad("dot radius and spacing must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// Styles keyed by slot id (or base layer name). Layers without an entry use
/// [`default_style_for`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleSpec {
    pub slots: BTreeMap<String, SlotStyle>,
    pub outline: Rgb,
}

impl Default for StyleSpec {
    fn default() -> Self {
        StyleSpec { slots: BTreeMap::new(), outline: Rgb(48, 36, 48) }
    }
}

impl StyleSpec {
    pub fn style_for(&self, key: &str) -> SlotStyle {
        self.slots.get(key).cloned().unwrap_or_else(|| default_style_for(key))
    }
}

pub fn default_style_for(key: &str) -> SlotStyle {
    let base = match key {
        "body" | "face" => Rgb(255, 224, 204),
        "eyes" => Rgb(120, 72, 40),
        "mouth" => Rgb(200, 80, 90),
        "back_hair" | "mid_hair" | "front_hair" => Rgb(92, 60, 40),
        "top" => Rgb(240, 240, 235),
        "sleeves" => Rgb(225, 225, 220),
        "pants" => Rgb(60, 80, 140),
        "skirt" => Rgb(70, 70, 120),
        "shoes" => Rgb(90, 60, 50),
        _ => Rgb(160, 160, 160),
    };
    SlotStyle::flat(base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Appearance {
    /// All layers composited back to front.
    pub flattened: RasterImage,
    /// One full-canvas image per sheet layer, in sheet order.
    pub layers: Vec<(String, RasterImage)>,
}

struct Fill<'a> {
    style: &'a SlotStyle,
    bbox: (u32, u32, u32, u32),
    dot_phase: (u32, u32),
}

impl Fill<'_> {
    fn color(&self, x: u32, y: u32) -> Rgb {
        let (x0, y0, _, y1) = self.bbox;
        match &self.style.pattern {
            Pattern::Flat => self.style.base,
            Pattern::VerticalStripes { width, alt } => {
                if ((x - x0) / width).is_multiple_of(2) {
                    self.style.base
                } else {
                    *alt
                }
            }
            Pattern::PolkaDot { radius, spacing, dot } => {
                let s = *spacing as i64;
                let cx = (x as i64 + self.dot_phase.0 as i64).rem_euclid(s) - s / 2;
                let cy = (y as i64 + self.dot_phase.1 as i64).rem_euclid(s) - s / 2;
                if cx * cx + cy * cy <= (*radius as i64).pow(2) {
                    *dot
                } else {
                    self.style.base
                }
            }
            Pattern::Gradient { to } => {
                let span = (y1 - y0).max(2) - 1;
                let t = (y - y0) as f64 / span as f64;
                let lerp = |a: u8, b: u8| crate::image::quantize(a as f64 + (b as f64 - a as f64) * t);
                let b = self.style.base;
                Rgb(lerp(b.0, to.0), lerp(b.1, to.1), lerp(b.2, to.2))
            }
        }
    }
}

/// Paint every sheet layer inside its contour and flatten.
///
/// Fill colors come from the style's pattern; line art is drawn on top in
/// the outline color, clipped to the contour. The seed only shifts the
/// polka-dot grid phase.
pub fn synthesize_appearance(sheet: &TemplateSheet, style: &StyleSpec, seed: u64) -> Result<Appearance, PaintError> {
    let (w, h) = sheet.canvas_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(sheet.layers.len());
    for layer in &sheet.layers {
        let slot_style = style.style_for(layer.style_key());
        slot_style.validate(layer.style_key())?;
        let phase = (rng.random_range(0..64u32), rng.random_range(0..64u32));
        let mut img = RasterImage::new(w, h);
        if let Some(bbox) = layer.contour_mask.bbox() {
            let fill = Fill { style: &slot_style, bbox, dot_phase: phase };
            let outline = style.outline;
            for y in bbox.1..bbox.3 {
                for x in bbox.0..bbox.2 {
                    if !layer.contour_mask.get(x, y) {
                        continue;
                    }
                    let mut px = fill.color(x, y).to_rgba(255);
                    let art = layer.line_art.get(x, y);
                    if art[3] > 0 {
                        px = composite_over(px, outline.to_rgba(art[3]), 1.0);
                    }
                    img.put(x, y, px);
                }
            }
        }
        layers.push((layer.name.clone(), img));
    }
    let mut flattened = RasterImage::new(w, h);
    for (_, img) in &layers {
        for i in 0..(w as usize * h as usize) {
            let src = img.get_index(i);
            if src[3] > 0 {
                flattened.put_index(i, composite_over(flattened.get_index(i), src, 1.0));
            }
        }
    }
    Ok(Appearance { flattened, layers })
}

/// Keep `image` pixels where the mask is set; transparent elsewhere.
pub fn extract_component(image: &RasterImage, mask: &Mask) -> Result<RasterImage, PaintError> {
    mask.ensure_same_size(image.width(), image.height())?;
    let mut out = RasterImage::new(image.width(), image.height());
    for i in 0..mask.len() {
        if mask.get_index(i) {
            out.put_index(i, image.get_index(i));
        }
    }
    Ok(out)
}

/// Set masked pixels fully transparent.
pub fn erase_region(image: &RasterImage, mask: &Mask) -> Result<RasterImage, PaintError> {
    mask.ensure_same_size(image.width(), image.height())?;
    let mut out = image.clone();
    for i in 0..mask.len() {
        if mask.get_index(i) {
            out.put_index(i, TRANSPARENT);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepairOptions {
    /// 3x3 box blur over filled pixels after propagation.
    pub smooth: bool,
}

const UNSET: u32 = u32::MAX;

/// Fill the occluded part of a component from its connected visible part.
///
/// Every pixel of `component_mask ∩ occluder_mask` takes the color of the
/// visible pixel (in the component mask, outside the occluder) nearest to it
/// by 4-connected path length inside `component_mask`; ties go to the seed
/// with the smaller `(y, x)`. Occluded pixels with no path to a visible pixel
/// are left as they are. Nothing outside the occluded region is written.
pub fn repair_occlusion(
    component: &RasterImage,
    component_mask: &Mask,
    occluder_mask: &Mask,
    options: RepairOptions,
) -> Result<RasterImage, PaintError> {
    let (w, h) = component.size();
    component_mask.ensure_same_size(w, h)?;
    occluder_mask.ensure_same_size(w, h)?;
    let n = w as usize * h as usize;

    // seed[i] = linear index of the chosen visible pixel; row-major index
    // order is (y, x) order, so the minimum index is the tie-break winner.
    let mut seed = vec![UNSET; n];
    let mut frontier: Vec<usize> = Vec::new();
    for i in 0..n {
        if component_mask.get_index(i) && !occluder_mask.get_index(i) {
            seed[i] = i as u32;
            frontier.push(i);
        }
    }
    if frontier.is_empty() {
        return Err(PaintError::FullyOccluded);
    }

    let w_us = w as usize;
    let mut next: Vec<usize> = Vec::new();
    let mut pending = vec![UNSET; n];
    while !frontier.is_empty() {
        next.clear();
        for &p in &frontier {
            let s = seed[p];
            let (x, y) = (p % w_us, p / w_us);
            let mut visit = |q: usize| {
                if seed[q] != UNSET || !component_mask.get_index(q) {
                    return;
                }
                if pending[q] == UNSET {
                    next.push(q);
                    pending[q] = s;
                } else if s < pending[q] {
                    pending[q] = s;
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w_us {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w_us);
            }
            if y + 1 < h as usize {
                visit(p + w_us);
            }
        }
        for &q in &next {
            seed[q] = pending[q];
        }
        std::mem::swap(&mut frontier, &mut next);
    }

    let mut out = component.clone();
    let mut filled = Vec::new();
    for i in 0..n {
        if component_mask.get_index(i) && occluder_mask.get_index(i) && seed[i] != UNSET {
            out.put_index(i, component.get_index(seed[i] as usize));
            filled.push(i);
        }
    }
    if options.smooth {
        let src = out.clone();
        for &i in &filled {
            let (x, y) = ((i % w_us) as i64, (i / w_us) as i64);
            let mut acc = [0u32; 4];
            let mut count = 0u32;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w_us + nx as usize;
                    if !component_mask.get_index(j) {
                        continue;
                    }
                    let px = src.get_index(j);
                    for c in 0..4 {
                        acc[c] += px[c] as u32;
                    }
                    count += 1;
                }
            }
            let avg: Rgba = std::array::from_fn(|c| ((acc[c] + count / 2) / count) as u8);
            out.put_index(i, avg);
        }
    }
    Ok(out)
}

/// HSL hue and saturation of an 8-bit color (hue in degrees).
fn hue_saturation(c: Rgb) -> (f64, f64) {
    let (r, g, b) = (c.0 as f64 / 255.0, c.1 as f64 / 255.0, c.2 as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    if d == 0.0 {
        return (0.0, 0.0);
    }
    let l = (max + min) / 2.0;
    let s = d / (1.0 - (2.0 * l - 1.0).abs());
    let h = if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    (h, s.min(1.0))
}

/// Give a pixel the target's hue and saturation while keeping its HSL
/// lightness exactly: `max + min` of the output channels equals that of the
/// input.
fn recolor_pixel(px: Rgba, hue: f64, sat: f64) -> Rgba {
    let max0 = px[0].max(px[1]).max(px[2]) as i32;
    let min0 = px[0].min(px[1]).min(px[2]) as i32;
    let sum = max0 + min0;
    let chroma = (1.0 - (sum as f64 / 255.0 - 1.0).abs()) * sat * 255.0;
    let limit = sum.min(510 - sum);
    // Chroma spread with the parity of `sum` so both extremes are integers.
    let mut d = chroma.round() as i32;
    if (d - sum).rem_euclid(2) != 0 {
        d += if (d as f64) < chroma { 1 } else { -1 };
    }
    d = d.clamp(0, limit);
    if (d - sum).rem_euclid(2) != 0 {
        d -= 1;
    }
    let hi = (sum + d) / 2;
    let lo = (sum - d) / 2;
    let hp = hue / 60.0;
    let frac = 1.0 - (hp.rem_euclid(2.0) - 1.0).abs();
    let mid = lo + (d as f64 * frac).round() as i32;
    let (r, g, b) = match hp.floor() as i32 {
        0 => (hi, mid, lo),
        1 => (mid, hi, lo),
        2 => (lo, hi, mid),
        3 => (lo, mid, hi),
        4 => (mid, lo, hi),
        _ => (hi, lo, mid),
    };
    [r as u8, g as u8, b as u8, px[3]]
}

/// Recolor masked pixels to the target's hue/saturation, preserving each
/// pixel's lightness and alpha.
pub fn recolor_region(image: &RasterImage, mask: &Mask, target: Rgb) -> Result<RasterImage, PaintError> {
    mask.ensure_same_size(image.width(), image.height())?;
    let (hue, sat) = hue_saturation(target);
    let mut out = image.clone();
    for i in 0..mask.len() {
        if mask.get_index(i) {
            out.put_index(i, recolor_pixel(image.get_index(i), hue, sat));
        }
    }
    Ok(out)
}
