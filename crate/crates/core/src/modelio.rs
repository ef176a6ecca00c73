//! On-disk format for character models and animation clips.
//!
//! A model bundle is a directory with a canonical `model.json` manifest and
//! one PNG per layer under `textures/`. The schema is documented in
//! `docs/format.md`. Bundles are also handled in memory as a sorted map of
//! relative path to bytes, which is what the service hashes and zips.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::image::{ImageError, RasterImage};
use crate::rig::{
    AnimationClip, Blendshape, CharacterModel, Deformer, GenerationRecord, Layer, Mesh, Parameter, RigError, Track,
};

pub const FORMAT_VERSION: u64 = 1;
pub const MODEL_FILE: &str = "model.json";
pub const TEXTURE_DIR: &str = "textures";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(String),
    #[error("{file}: malformed: {message}")]
    Malformed { file: String, message: String },
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("{file}: {source}")]
    Image {
        file: String,
        #[source]
        source: ImageError,
    },
    #[error("invalid model: {0}")]
    Invalid(#[source] RigError),
    #[error("invalid clip: {0}")]
    Clip(#[source] RigError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelIoError + '_ {
    move |source| ModelIoError::Io { path: path.to_path_buf(), source }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelManifest {
    format_version: u64,
    canvas_size: (u32, u32),
    layers: Vec<LayerEntry>,
    parameters: Vec<Parameter>,
    deformers: Vec<Deformer>,
    blendshapes: Vec<Blendshape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generation: Option<GenerationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    name: String,
    z: i32,
    opacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot: Option<String>,
    texture: String,
    mesh: Mesh,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClipManifest {
    format_version: u64,
    duration: f64,
    tracks: Vec<Track>,
}

/// In-memory bundle: relative path (forward slashes) -> file bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bundle {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn manifest(&self) -> Option<&[u8]> {
        self.files.get(MODEL_FILE).map(|b| b.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, ModelIoError> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            std::fs::write(&path, bytes).map_err(io_err(&path))?;
        }
        Ok(dir.join(MODEL_FILE))
    }

    /// Read the manifest and the textures it references.
    pub fn read_from(dir: &Path) -> Result<Bundle, ModelIoError> {
        let manifest_path = dir.join(MODEL_FILE);
        let manifest = match std::fs::read(&manifest_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ModelIoError::MissingFile(manifest_path.display().to_string()))
            }
            Err(e) => return Err(io_err(&manifest_path)(e)),
        };
        let parsed = parse_manifest(&manifest)?;
        let mut files = BTreeMap::from([(MODEL_FILE.to_string(), manifest)]);
        for l in &parsed.layers {
            check_texture_path(&l.texture)?;
            let path = dir.join(&l.texture);
            match std::fs::read(&path) {
                Ok(b) => {
                    files.insert(l.texture.clone(), b);
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(ModelIoError::MissingFile(l.texture.clone()))
                }
                Err(e) => return Err(io_err(&path)(e)),
            }
        }
        Ok(Bundle { files })
    }
}

/// Texture paths must stay inside the bundle.
fn check_texture_path(p: &str) -> Result<(), ModelIoError> {
    let ok = p.starts_with("textures/") && !p.split('/').any(|c| c.is_empty() || c == "." || c == "..") && !p.contains('\\');
    if ok {
        Ok(())
    } else {
        Err(ModelIoError::Malformed { file: MODEL_FILE.into(), message: format!("bad texture path {p:?}") })
    }
}

/// Reject unknown versions before attempting the full schema, so an old
/// reader reports the version rather than a field error.
fn check_version(bytes: &[u8], file: &str) -> Result<(), ModelIoError> {
    let malformed = |message: String| ModelIoError::Malformed { file: file.into(), message };
    let v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    match v.get("format_version") {
        Some(n) if n.as_u64() == Some(FORMAT_VERSION) => Ok(()),
        Some(n) => Err(ModelIoError::Version(n.to_string())),
        None => Err(malformed("missing format_version".into())),
    }
}

fn parse_manifest(bytes: &[u8]) -> Result<ModelManifest, ModelIoError> {
    check_version(bytes, MODEL_FILE)?;
    serde_json::from_slice(bytes).map_err(|e| ModelIoError::Malformed { file: MODEL_FILE.into(), message: e.to_string() })
}

pub fn texture_path(layer: &str) -> String {
    format!("{TEXTURE_DIR}/{layer}.png")
}

/// Serialize a validated model.
pub fn model_to_bundle(model: &CharacterModel) -> Result<Bundle, ModelIoError> {
    model.validate().map_err(ModelIoError::Invalid)?;
    let mut files = BTreeMap::new();
    let mut layers = Vec::with_capacity(model.layers.len());
    for l in &model.layers {
        let texture = texture_path(&l.name);
        let png = l.texture.encode_png().map_err(|source| ModelIoError::Image { file: texture.clone(), source })?;
        files.insert(texture.clone(), png);
        layers.push(LayerEntry {
            name: l.name.clone(),
            z: l.z,
            opacity: l.opacity,
            slot: l.slot.clone(),
            texture,
            mesh: l.mesh.clone(),
        });
    }
    let manifest = ModelManifest {
        format_version: FORMAT_VERSION,
        canvas_size: model.canvas_size,
        layers,
        parameters: model.parameters.clone(),
        deformers: model.deformers.clone(),
        blendshapes: model.blendshapes.clone(),
        generation: model.generation.clone(),
    };
    let text = canonical::to_string(&manifest)
        .map_err(|e| ModelIoError::Malformed { file: MODEL_FILE.into(), message: e.to_string() })?;
    files.insert(MODEL_FILE.to_string(), text.into_bytes());
    Ok(Bundle { files })
}

pub fn model_from_bundle(bundle: &Bundle) -> Result<CharacterModel, ModelIoError> {
    let manifest = parse_manifest(bundle.manifest().ok_or_else(|| ModelIoError::MissingFile(MODEL_FILE.into()))?)?;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for l in manifest.layers {
        check_texture_path(&l.texture)?;
        let bytes = bundle.files.get(&l.texture).ok_or_else(|| ModelIoError::MissingFile(l.texture.clone()))?;
        let texture = RasterImage::from_png_bytes(bytes).map_err(|source| ModelIoError::Image { file: l.texture.clone(), source })?;
        layers.push(Layer { name: l.name, z: l.z, mesh: l.mesh, texture: Arc::new(texture), opacity: l.opacity, slot: l.slot });
    }
    let model = CharacterModel {
        canvas_size: manifest.canvas_size,
        layers,
        parameters: manifest.parameters,
        deformers: manifest.deformers,
        blendshapes: manifest.blendshapes,
        generation: manifest.generation,
    };
    model.validate().map_err(ModelIoError::Invalid)?;
    Ok(model)
}

/// Write `model` into `dir` and return the manifest path.
pub fn save_model(model: &CharacterModel, dir: &Path) -> Result<PathBuf, ModelIoError> {
    let bundle = model_to_bundle(model)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    bundle.write_to(dir)
}

pub fn load_model(dir: &Path) -> Result<CharacterModel, ModelIoError> {
    model_from_bundle(&Bundle::read_from(dir)?)
}

pub fn clip_to_string(clip: &AnimationClip) -> Result<String, ModelIoError> {
    clip.validate(None).map_err(ModelIoError::Clip)?;
    let m = ClipManifest { format_version: FORMAT_VERSION, duration: clip.duration, tracks: clip.tracks.clone() };
    canonical::to_string(&m).map_err(|e| ModelIoError::Malformed { file: "clip".into(), message: e.to_string() })
}

/// Parse and validate a clip. With `params`, every track must name one of
/// them and stay inside its range.
pub fn clip_from_str(text: &str, params: Option<&[Parameter]>) -> Result<AnimationClip, ModelIoError> {
    check_version(text.as_bytes(), "clip")?;
    let m: ClipManifest =
        serde_json::from_str(text).map_err(|e| ModelIoError::Malformed { file: "clip".into(), message: e.to_string() })?;
    let clip = AnimationClip { duration: m.duration, tracks: m.tracks };
    clip.validate(params).map_err(ModelIoError::Clip)?;
    Ok(clip)
}

pub fn save_clip(clip: &AnimationClip, path: &Path) -> Result<(), ModelIoError> {
    let text = clip_to_string(clip)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn load_clip(path: &Path, params: Option<&[Parameter]>) -> Result<AnimationClip, ModelIoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    clip_from_str(&text, params)
}
