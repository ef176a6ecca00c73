//! Layered mesh character model and parameter-driven posing.
//!
//! Each layer is a textured triangle mesh. Deformers bind one parameter to
//! per-vertex offset keyforms on one layer and are interpolated piecewise
//! linearly; blendshapes add weighted per-vertex offsets on top. All
//! contributions are summed, so parameters compose additively.

pub mod arkit;
pub mod clip;
pub mod viseme;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Selection;
use crate::image::RasterImage;
use crate::paint::StyleSpec;

pub use arkit::{coefficients_to_clip, map_arkit_mouth, read_arkit_csv, write_arkit_csv, ArkitFrame, ARKIT_NAMES};
pub use clip::{sample_clip, AnimationClip, Interpolation, Track};
pub use viseme::{timeline_to_clip, viseme_params, Viseme, VisemeEvent, VisemeTimeline};

pub type Vec2 = [f64; 2];

/// Parameter id -> value.
pub type ParamValues = BTreeMap<String, f64>;

pub const MOUTH_OPEN_Y: &str = "MouthOpenY";
pub const MOUTH_FORM: &str = "MouthForm";
pub const MOUTH_PUCKER: &str = "MouthPucker";
pub const MOUTH_FUNNEL: &str = "MouthFunnel";
pub const MOUTH_PRESS: &str = "MouthPress";
pub const MOUTH_X: &str = "MouthX";

/// Canonical mouth parameter order used by viseme rows and ARKit mapping.
pub const MOUTH_PARAMS: [&str; 6] = [MOUTH_OPEN_Y, MOUTH_FORM, MOUTH_PUCKER, MOUTH_FUNNEL, MOUTH_PRESS, MOUTH_X];

#[derive(Debug, Error, PartialEq)]
pub enum RigError {
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("non-finite value for parameter {0}")]
    NonFinite(String),
    #[error("layer {0}: {1}")]
    Layer(String, String),
    #[error("parameter {0}: {1}")]
    Parameter(String, String),
    #[error("deformer {layer}/{parameter}: {message}")]
    Deformer { layer: String, parameter: String, message: String },
    #[error("blendshape {layer}/{name}: {message}")]
    Blendshape { layer: String, name: String, message: String },
    #[error("clip: {0}")]
    Clip(String),
    #[error("frames are not sorted by time at index {0}")]
    UnsortedFrames(usize),
    #[error("timeline: {0}")]
    Timeline(String),
    #[error("arkit: {0}")]
    Arkit(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub uvs: Vec<Vec2>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn validate(&self) -> Result<(), String> {
        if self.uvs.len() != self.vertices.len() {
            return Err(format!("{} uvs for {} vertices", self.uvs.len(), self.vertices.len()));
        }
        if self.triangles.is_empty() {
            return Err("mesh has no triangles".into());
        }
        let n = self.vertices.len() as u32;
        if self.triangles.iter().flatten().any(|&i| i >= n) {
            return Err("triangle index out of range".into());
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err("non-finite vertex".into());
        }
        if self.uvs.iter().flatten().any(|u| !(0.0..=1.0).contains(u)) {
            return Err("uv outside [0, 1]".into());
        }
        Ok(())
    }

    /// Regular grid over the rectangle `[x0, x1] x [y0, y1]` with uvs spanning
    /// the full texture. Cells are split along alternating diagonals.
    pub fn grid(x0: f64, y0: f64, x1: f64, y1: f64, cols: u32, rows: u32) -> Mesh {
        let (cols, rows) = (cols.max(1), rows.max(1));
        let mut vertices = Vec::new();
        let mut uvs = Vec::new();
        for j in 0..=rows {
            for i in 0..=cols {
                let (u, v) = (i as f64 / cols as f64, j as f64 / rows as f64);
                uvs.push([u, v]);
                // Interpolate with exact endpoints so rest vertices land on integers.
                let x = if i == cols { x1 } else { x0 + (x1 - x0) * u };
                let y = if j == rows { y1 } else { y0 + (y1 - y0) * v };
                vertices.push([x, y]);
            }
        }
        let stride = cols + 1;
        let mut triangles = Vec::new();
        for j in 0..rows {
            for i in 0..cols {
                let a = j * stride + i;
                let (b, c, d) = (a + 1, a + stride, a + stride + 1);
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, d]);
                    triangles.push([a, d, c]);
                } else {
                    triangles.push([a, b, c]);
                    triangles.push([b, d, c]);
                }
            }
        }
        Mesh { vertices, uvs, triangles }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub id: String,
    pub min: f64,
    pub max: f64,
    pub default: f64,
}

impl Parameter {
    pub fn new(id: &str, min: f64, max: f64, default: f64) -> Parameter {
        Parameter { id: id.to_string(), min, max, default }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

/// The canonical mouth set plus head turn and eye opening.
pub fn standard_parameters() -> Vec<Parameter> {
    vec![
        Parameter::new(MOUTH_OPEN_Y, 0.0, 1.0, 0.0),
        Parameter::new(MOUTH_FORM, -1.0, 1.0, 0.0),
        Parameter::new(MOUTH_PUCKER, 0.0, 1.0, 0.0),
        Parameter::new(MOUTH_FUNNEL, 0.0, 1.0, 0.0),
        Parameter::new(MOUTH_PRESS, 0.0, 1.0, 0.0),
        Parameter::new(MOUTH_X, -1.0, 1.0, 0.0),
        Parameter::new("AngleX", -30.0, 30.0, 0.0),
        Parameter::new("EyeOpen", 0.0, 1.0, 1.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyform {
    pub value: f64,
    pub offsets: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformer {
    pub layer: String,
    pub parameter: String,
    pub keys: Vec<Keyform>,
}

impl Deformer {
    /// Offset of vertex `i` at parameter value `v` (clamped to the key range).
    /// A value equal to a key returns that key's stored offset exactly.
    pub fn offset_at(&self, i: usize, v: f64) -> Vec2 {
        let keys = &self.keys;
        let first = &keys[0];
        let last = &keys[keys.len() - 1];
        if v <= first.value {
            return first.offsets[i];
        }
        if v >= last.value {
            return last.offsets[i];
        }
        let hi = keys.partition_point(|k| k.value <= v);
        let (a, b) = (&keys[hi - 1], &keys[hi]);
        if v == a.value {
            return a.offsets[i];
        }
        let t = (v - a.value) / (b.value - a.value);
        let (oa, ob) = (a.offsets[i], b.offsets[i]);
        [oa[0] + (ob[0] - oa[0]) * t, oa[1] + (ob[1] - oa[1]) * t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blendshape {
    pub name: String,
    pub layer: String,
    pub offsets: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub z: i32,
    pub mesh: Mesh,
    pub texture: Arc<RasterImage>,
    pub opacity: f64,
    /// Catalog slot that produced this layer, if any.
    pub slot: Option<String>,
}

/// How a character was generated; carried in the bundle so later edits can
/// re-run parts of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub text: String,
    pub seed: Option<u64>,
    pub selection: Selection,
    pub style: StyleSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterModel {
    pub canvas_size: (u32, u32),
    /// Sorted by strictly increasing z.
    pub layers: Vec<Layer>,
    pub parameters: Vec<Parameter>,
    pub deformers: Vec<Deformer>,
    pub blendshapes: Vec<Blendshape>,
    pub generation: Option<GenerationRecord>,
}

fn valid_layer_name(name: &str) -> bool {
    !name.is_empty()
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'+'))
}

impl CharacterModel {
    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn parameter(&self, id: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.id == id)
    }

    pub fn default_values(&self) -> ParamValues {
        self.parameters.iter().map(|p| (p.id.clone(), p.default)).collect()
    }

    pub fn validate(&self) -> Result<(), RigError> {
        let mut names = BTreeSet::new();
        for (i, l) in self.layers.iter().enumerate() {
            let err = |m: String| RigError::Layer(l.name.clone(), m);
            if !valid_layer_name(&l.name) {
                return Err(err("name must be non-empty [A-Za-z0-9_+-]".into()));
            }
            if !names.insert(l.name.as_str()) {
                return Err(err("duplicate layer name".into()));
            }
            if i > 0 && self.layers[i - 1].z >= l.z {
                return Err(err("layers must have strictly increasing z".into()));
            }
            l.mesh.validate().map_err(err)?;
            if !(0.0..=1.0).contains(&l.opacity) {
                return Err(err(format!("opacity {} outside [0, 1]", l.opacity)));
            }
        }
        let mut ids = BTreeSet::new();
        for p in &self.parameters {
            let err = |m: &str| RigError::Parameter(p.id.clone(), m.to_string());
            if !ids.insert(p.id.as_str()) {
                return Err(err("duplicate parameter id"));
            }
            if ![p.min, p.max, p.default].iter().all(|v| v.is_finite()) {
                return Err(err("non-finite bound"));
            }
            if !(p.min <= p.default && p.default <= p.max) {
                return Err(err("requires min <= default <= max"));
            }
        }
        for d in &self.deformers {
            let err = |m: String| RigError::Deformer { layer: d.layer.clone(), parameter: d.parameter.clone(), message: m };
            let layer = self.layer(&d.layer).ok_or_else(|| err("unknown layer".into()))?;
            let param = self.parameter(&d.parameter).ok_or_else(|| err("unknown parameter".into()))?;
            if d.keys.is_empty() {
                return Err(err("no keys".into()));
            }
            if d.keys.windows(2).any(|w| !(w[0].value < w[1].value)) {
                return Err(err("key values must be strictly increasing".into()));
            }
            let n = layer.mesh.vertices.len();
            for k in &d.keys {
                if k.offsets.len() != n {
                    return Err(err(format!("key {} has {} offsets for {} vertices", k.value, k.offsets.len(), n)));
                }
                if k.offsets.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(err("non-finite offset".into()));
                }
            }
            match d.keys.iter().find(|k| k.value == param.default) {
                None => return Err(err(format!("missing key at default value {}", param.default))),
                Some(k) if k.offsets.iter().flatten().any(|&v| v != 0.0) => {
                    return Err(err("key at default value must have zero offsets".into()))
                }
                _ => {}
            }
        }
        let mut shape_names = BTreeSet::new();
        for b in &self.blendshapes {
            let err = |m: &str| RigError::Blendshape { layer: b.layer.clone(), name: b.name.clone(), message: m.to_string() };
            let layer = self.layer(&b.layer).ok_or_else(|| err("unknown layer"))?;
            if b.offsets.len() != layer.mesh.vertices.len() {
                return Err(err("offset count does not match layer vertices"));
            }
            if b.offsets.iter().flatten().any(|v| !v.is_finite()) {
                return Err(err("non-finite offset"));
            }
            if !shape_names.insert((b.layer.as_str(), b.name.as_str())) {
                return Err(err("duplicate blendshape name on layer"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosedLayer {
    pub name: String,
    pub z: i32,
    pub vertices: Vec<Vec2>,
    pub uvs: Vec<Vec2>,
    pub triangles: Vec<[u32; 3]>,
    pub texture: Arc<RasterImage>,
    pub opacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosedModel {
    pub canvas_size: (u32, u32),
    pub layers: Vec<PosedLayer>,
}

/// Resolve a value map against the model: every key must name a parameter
/// or a blendshape. Parameters are clamped to their range; blendshape
/// weights (a blendshape takes the value of the same-named key) to [0, 1].
fn resolve<'m>(model: &'m CharacterModel, values: &ParamValues) -> Result<(BTreeMap<&'m str, f64>, BTreeMap<&'m str, f64>), RigError> {
    for (k, v) in values {
        let known = model.parameter(k).is_some() || model.blendshapes.iter().any(|b| &b.name == k);
        if !known {
            return Err(RigError::UnknownParameter(k.clone()));
        }
        if !v.is_finite() {
            return Err(RigError::NonFinite(k.clone()));
        }
    }
    let params: BTreeMap<&str, f64> = model
        .parameters
        .iter()
        .map(|p| (p.id.as_str(), p.clamp(values.get(&p.id).copied().unwrap_or(p.default))))
        .collect();
    let mut weights = BTreeMap::new();
    for b in &model.blendshapes {
        let w = values.get(&b.name).copied().or_else(|| params.get(b.name.as_str()).copied()).unwrap_or(0.0);
        weights.insert(b.name.as_str(), w.clamp(0.0, 1.0));
    }
    Ok((params, weights))
}

/// Pose every layer. Contributions are summed in a fixed order (deformers
/// sorted by parameter id, then blendshapes by name), so the result does not
/// depend on the order deformers are listed in the model.
pub fn apply_parameters(model: &CharacterModel, values: &ParamValues) -> Result<PosedModel, RigError> {
    let (params, weights) = resolve(model, values)?;
    let mut layers = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let mut verts = layer.mesh.vertices.clone();
        let mut deformers: Vec<&Deformer> = model.deformers.iter().filter(|d| d.layer == layer.name).collect();
        deformers.sort_by(|a, b| a.parameter.cmp(&b.parameter));
        for d in deformers {
            let v = params[d.parameter.as_str()];
            for (i, p) in verts.iter_mut().enumerate() {
                let o = d.offset_at(i, v);
                p[0] += o[0];
                p[1] += o[1];
            }
        }
        let mut shapes: Vec<&Blendshape> = model.blendshapes.iter().filter(|b| b.layer == layer.name).collect();
        shapes.sort_by(|a, b| a.name.cmp(&b.name));
        for b in shapes {
            let w = weights[b.name.as_str()];
            if w == 0.0 {
                continue;
            }
            for (p, o) in verts.iter_mut().zip(&b.offsets) {
                p[0] += w * o[0];
                p[1] += w * o[1];
            }
        }
        layers.push(PosedLayer {
            name: layer.name.clone(),
            z: layer.z,
            vertices: verts,
            uvs: layer.mesh.uvs.clone(),
            triangles: layer.mesh.triangles.clone(),
            texture: Arc::clone(&layer.texture),
            opacity: layer.opacity,
        });
    }
    Ok(PosedModel { canvas_size: model.canvas_size, layers })
}
