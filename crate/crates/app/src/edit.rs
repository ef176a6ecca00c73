//! Re-edit operations on a stored character. Every edit yields a new model;
//! the source is never touched.

use std::sync::Arc;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toonforge_core::image::{Mask, RasterImage, Rgb};
use toonforge_core::paint::{recolor_region, SlotStyle};
use toonforge_core::rig::{CharacterModel, Layer};

use crate::pipeline::{build_model, PipelineError, Resources, Timings};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    /// Replace a slot's variant (or add the slot if it was empty).
    Swap { slot: String, variant: String },
    /// Recolor every layer of a slot, or a base layer by name.
    Recolor { slot: String, rgb: Rgb },
    /// Recolor the pixels under a canvas-sized mask (PNG, base64; alpha
    /// >= 128 counts as set) on every layer.
    MaskRecolor { mask: String, rgb: Rgb },
}

#[derive(Debug, Error)]
pub enum EditError {
    /// The request itself is wrong: unknown slot or variant, bad mask.
    #[error("invalid op: {0}")]
    Invalid(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Internal(String),
}

fn invalid(m: impl Into<String>) -> EditError {
    EditError::Invalid(m.into())
}

pub fn apply_edits(res: &Resources, model: &CharacterModel, ops: &[EditOp]) -> Result<CharacterModel, EditError> {
    let mut m = model.clone();
    for op in ops {
        m = match op {
            EditOp::Swap { slot, variant } => swap(res, &m, slot, variant)?,
            EditOp::Recolor { slot, rgb } => recolor(&m, slot, *rgb)?,
            EditOp::MaskRecolor { mask, rgb } => mask_recolor(&m, mask, *rgb)?,
        };
    }
    m.validate().map_err(|e| EditError::Internal(e.to_string()))?;
    Ok(m)
}

/// Regenerate the model for the new selection and splice in only the
/// layers of the swapped slot; layers of exclusive partners are dropped.
fn swap(res: &Resources, model: &CharacterModel, slot: &str, variant: &str) -> Result<CharacterModel, EditError> {
    let cat = &res.catalog;
    if cat.slot(slot).is_none() {
        return Err(invalid(format!("unknown slot {slot}")));
    }
    match cat.variant(variant) {
        Some(v) if v.slot == slot => {}
        _ => return Err(invalid(format!("{variant} is not a {slot} variant"))),
    }
    let mut record = model
        .generation
        .clone()
        .ok_or_else(|| invalid("character has no generation record; swap needs one"))?;
    let partners: Vec<String> =
        cat.exclusive_group(slot).map(|g| g.iter().filter(|s| *s != slot).cloned().collect()).unwrap_or_default();
    for p in &partners {
        record.selection.slots.remove(p);
    }
    record.selection.slots.insert(slot.to_string(), variant.to_string());
    let fresh = build_model(res, record.clone(), &mut Timings::default())?;

    let replaced = |l: &Layer| l.slot.as_deref().is_some_and(|s| s == slot || partners.iter().any(|p| p == s));
    let mut out = model.clone();
    out.generation = Some(record);
    let dropped: Vec<String> = out.layers.iter().filter(|l| replaced(l)).map(|l| l.name.clone()).collect();
    out.layers.retain(|l| !replaced(l));
    out.deformers.retain(|d| !dropped.contains(&d.layer));
    out.blendshapes.retain(|b| !dropped.contains(&b.layer));
    let added: Vec<&Layer> = fresh.layers.iter().filter(|l| l.slot.as_deref() == Some(slot)).collect();
    for l in &added {
        out.layers.push((*l).clone());
        out.deformers.extend(fresh.deformers.iter().filter(|d| d.layer == l.name).cloned());
        out.blendshapes.extend(fresh.blendshapes.iter().filter(|b| b.layer == l.name).cloned());
    }
    out.layers.sort_by_key(|l| l.z);
    // Keep rig data in layer order so the manifest stays canonical.
    let order = |name: &str| out.layers.iter().position(|l| l.name == name).unwrap_or(usize::MAX);
    let mut deformers = std::mem::take(&mut out.deformers);
    deformers.sort_by_key(|d| order(&d.layer));
    out.deformers = deformers;
    let mut shapes = std::mem::take(&mut out.blendshapes);
    shapes.sort_by_key(|b| order(&b.layer));
    out.blendshapes = shapes;
    Ok(out)
}

fn layer_matches(l: &Layer, key: &str) -> bool {
    l.slot.as_deref().map_or(l.name == key, |s| s == key)
}

fn recolor(model: &CharacterModel, slot: &str, rgb: Rgb) -> Result<CharacterModel, EditError> {
    if !model.layers.iter().any(|l| layer_matches(l, slot)) {
        return Err(invalid(format!("character has no {slot} layer")));
    }
    let mut out = model.clone();
    for l in out.layers.iter_mut().filter(|l| layer_matches(l, slot)) {
        let full = Mask::full(l.texture.width(), l.texture.height());
        let tex = recolor_region(&l.texture, &full, rgb).map_err(|e| EditError::Internal(e.to_string()))?;
        l.texture = Arc::new(tex);
    }
    // Later swaps of this slot repaint in the new color.
    if let Some(rec) = out.generation.as_mut() {
        let style = rec.style.style_for(slot);
        rec.style.slots.insert(slot.to_string(), SlotStyle { base: rgb, ..style });
    }
    Ok(out)
}

/// Canvas origin of a layer's texture: its rest mesh's top-left corner.
fn texture_origin(l: &Layer) -> (i64, i64) {
    let x = l.mesh.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let y = l.mesh.vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
    (x.round() as i64, y.round() as i64)
}

pub fn decode_mask(b64: &str, canvas: (u32, u32)) -> Result<Mask, EditError> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(b64.trim())
        .map_err(|e| invalid(format!("mask is not base64: {e}")))?;
    let img = RasterImage::from_png_bytes(&bytes).map_err(|e| invalid(format!("mask is not a PNG: {e}")))?;
    if img.size() != canvas {
        return Err(invalid(format!("mask is {}x{}, canvas is {}x{}", img.width(), img.height(), canvas.0, canvas.1)));
    }
    Ok(Mask::from_image(&img))
}

fn mask_recolor(model: &CharacterModel, mask_b64: &str, rgb: Rgb) -> Result<CharacterModel, EditError> {
    let mask = decode_mask(mask_b64, model.canvas_size)?;
    let (cw, ch) = model.canvas_size;
    let mut out = model.clone();
    for l in &mut out.layers {
        let (ox, oy) = texture_origin(l);
        let local = Mask::from_fn(l.texture.width(), l.texture.height(), |x, y| {
            let (cx, cy) = (ox + x as i64, oy + y as i64);
            cx >= 0 && cy >= 0 && cx < cw as i64 && cy < ch as i64 && mask.get(cx as u32, cy as u32)
        });
        if local.count() == 0 {
            continue;
        }
        let tex = recolor_region(&l.texture, &local, rgb).map_err(|e| EditError::Internal(e.to_string()))?;
        l.texture = Arc::new(tex);
    }
    Ok(out)
}
