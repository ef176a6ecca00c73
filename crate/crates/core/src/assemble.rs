//! Turns painted template layers into a rigged character model.
//!
//! Every layer gets a grid mesh over its contour bounding box and a texture
//! cropped to that box. Rig data is attached by layer role: the mouth
//! carries the mouth deformers and blendshapes, the eyes blink, and head
//! layers follow the head turn.

use std::sync::Arc;

use crate::composer::{TemplateLayer, TemplateSheet};
use crate::image::RasterImage;
use crate::rig::{
    standard_parameters, Blendshape, CharacterModel, Deformer, GenerationRecord, Keyform, Layer, Mesh, RigError, Vec2,
    MOUTH_FORM, MOUTH_FUNNEL, MOUTH_OPEN_Y, MOUTH_PRESS, MOUTH_PUCKER, MOUTH_X,
};

/// Target grid cell size in canvas pixels.
const CELL: u32 = 64;

/// Head turn shift in px at |AngleX| = 30, by style key. Layers further
/// forward move more, which gives a cheap parallax.
fn head_shift(key: &str) -> Option<f64> {
    match key {
        "back_hair" => Some(6.0),
        "face" | "mid_hair" => Some(10.0),
        "eyes" | "mouth" => Some(13.0),
        "front_hair" => Some(15.0),
        _ => None,
    }
}

struct Frame {
    cx: f64,
    cy: f64,
    hw: f64,
}

fn offsets(mesh: &Mesh, f: impl Fn(f64, f64) -> Vec2) -> Vec<Vec2> {
    mesh.vertices.iter().map(|v| f(v[0], v[1])).collect()
}

fn zeros(mesh: &Mesh) -> Vec<Vec2> {
    vec![[0.0, 0.0]; mesh.vertices.len()]
}

fn deformer(layer: &str, parameter: &str, keys: Vec<(f64, Vec<Vec2>)>) -> Deformer {
    Deformer {
        layer: layer.to_string(),
        parameter: parameter.to_string(),
        keys: keys.into_iter().map(|(value, offsets)| Keyform { value, offsets }).collect(),
    }
}

fn mouth_rig(name: &str, mesh: &Mesh, f: &Frame) -> (Vec<Deformer>, Vec<Blendshape>) {
    let (cx, cy, hw) = (f.cx, f.cy, f.hw);
    let corner = |x: f64| ((x - cx) / hw).powi(2);
    let deformers = vec![
        deformer(name, MOUTH_OPEN_Y, vec![(0.0, zeros(mesh)), (1.0, offsets(mesh, |_, y| [0.0, (y - cy) * 1.2]))]),
        deformer(
            name,
            MOUTH_FORM,
            vec![
                (-1.0, offsets(mesh, |x, _| [0.0, 7.0 * corner(x)])),
                (0.0, zeros(mesh)),
                (1.0, offsets(mesh, |x, _| [0.0, -7.0 * corner(x)])),
            ],
        ),
        deformer(
            name,
            MOUTH_X,
            vec![(-1.0, offsets(mesh, |_, _| [-8.0, 0.0])), (0.0, zeros(mesh)), (1.0, offsets(mesh, |_, _| [8.0, 0.0]))],
        ),
    ];
    let shape = |n: &str, o: Vec<Vec2>| Blendshape { name: n.to_string(), layer: name.to_string(), offsets: o };
    let blendshapes = vec![
        shape(MOUTH_PUCKER, offsets(mesh, |x, _| [-(x - cx) * 0.45, 0.0])),
        shape(MOUTH_FUNNEL, offsets(mesh, |x, y| [-(x - cx) * 0.25, (y - cy) * 0.8])),
        shape(MOUTH_PRESS, offsets(mesh, |_, y| [0.0, -(y - cy) * 0.7])),
    ];
    (deformers, blendshapes)
}

/// Build one model layer plus its rig data from a template layer and its
/// full-canvas texture.
pub fn rig_layer(template: &TemplateLayer, texture: &RasterImage) -> Result<(Layer, Vec<Deformer>, Vec<Blendshape>), RigError> {
    let name = template.name.as_str();
    let (x0, y0, x1, y1) = template
        .contour_mask
        .bbox()
        .ok_or_else(|| RigError::Layer(name.to_string(), "empty contour mask".into()))?;
    let (w, h) = (x1 - x0, y1 - y0);
    let key = template.style_key();
    let (min_cols, min_rows) = if key == "mouth" { (4, 2) } else { (1, 1) };
    let cols = w.div_ceil(CELL).clamp(min_cols, 16);
    let rows = h.div_ceil(CELL).clamp(min_rows, 16);
    let mesh = Mesh::grid(x0 as f64, y0 as f64, x1 as f64, y1 as f64, cols, rows);
    let frame = Frame { cx: (x0 + x1) as f64 / 2.0, cy: (y0 + y1) as f64 / 2.0, hw: w as f64 / 2.0 };

    let mut deformers = Vec::new();
    let mut blendshapes = Vec::new();
    if key == "mouth" {
        let (d, b) = mouth_rig(name, &mesh, &frame);
        deformers.extend(d);
        blendshapes.extend(b);
    }
    if key == "eyes" {
        let cy = frame.cy;
        let closed = offsets(&mesh, |_, y| [0.0, (cy - y) * 0.85]);
        deformers.push(deformer(name, "EyeOpen", vec![(0.0, closed), (1.0, zeros(&mesh))]));
    }
    if let Some(s) = head_shift(key) {
        deformers.push(deformer(
            name,
            "AngleX",
            vec![(-30.0, offsets(&mesh, |_, _| [-s, 0.0])), (0.0, zeros(&mesh)), (30.0, offsets(&mesh, |_, _| [s, 0.0]))],
        ));
    }
    let layer = Layer {
        name: name.to_string(),
        z: template.z,
        mesh,
        texture: Arc::new(texture.crop(x0, y0, w, h)),
        opacity: 1.0,
        slot: template.slot.clone(),
    };
    Ok((layer, deformers, blendshapes))
}

/// Assemble a model from a sheet and one full-canvas texture per sheet
/// layer (same order).
pub fn assemble_model(
    sheet: &TemplateSheet,
    textures: &[RasterImage],
    generation: Option<GenerationRecord>,
) -> Result<CharacterModel, RigError> {
    if textures.len() != sheet.layers.len() {
        return Err(RigError::Layer(
            "*".into(),
            format!("{} textures for {} layers", textures.len(), sheet.layers.len()),
        ));
    }
    let mut model = CharacterModel {
        canvas_size: sheet.canvas_size,
        layers: Vec::new(),
        parameters: standard_parameters(),
        deformers: Vec::new(),
        blendshapes: Vec::new(),
        generation,
    };
    for (t, tex) in sheet.layers.iter().zip(textures) {
        let (layer, d, b) = rig_layer(t, tex)?;
        model.layers.push(layer);
        model.deformers.extend(d);
        model.blendshapes.extend(b);
    }
    model.validate()?;
    Ok(model)
}
