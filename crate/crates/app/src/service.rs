//! Transport-independent operations behind the HTTP API.

use std::io::{Cursor, Write};
use std::sync::Arc;

use thiserror::Error;
use toonforge_core::canonical;
use toonforge_core::modelio::{model_from_bundle, model_to_bundle, Bundle, ModelIoError};
use toonforge_core::raster::{frame_count, frame_file_name, render_frame, RenderOptions};
use toonforge_core::rig::{sample_clip, timeline_to_clip, ParamValues, VisemeTimeline};
use zip::write::SimpleFileOptions;

use crate::edit::{apply_edits, EditError, EditOp};
use crate::pipeline::{generate, PipelineError, Resources};
use crate::store::{ClipRecord, Store, StoreError};

/// Frames per clip request are capped so one request cannot run forever.
pub const MAX_FRAMES: usize = 3000;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    /// Well-formed request that cannot be applied.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Internal(String),
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ServiceError::NotFound(id),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<ModelIoError> for ServiceError {
    fn from(e: ModelIoError) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

impl From<EditError> for ServiceError {
    fn from(e: EditError) -> Self {
        match e {
            EditError::Invalid(m) => ServiceError::Invalid(m),
            EditError::Pipeline(p) => ServiceError::Pipeline(p),
            EditError::Internal(m) => ServiceError::Internal(m),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

/// Deterministic zip: entries in the given order, fixed timestamps.
pub fn zip_files<'a>(files: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> Result<Vec<u8>, ServiceError> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());
    for (name, bytes) in files {
        w.start_file(name, opts).map_err(internal)?;
        w.write_all(bytes).map_err(internal)?;
    }
    Ok(w.finish().map_err(internal)?.into_inner())
}

/// `name:value,name:value`; empty means defaults.
pub fn parse_params(s: &str) -> Result<ParamValues, ServiceError> {
    let mut out = ParamValues::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item.split_once(':').ok_or_else(|| ServiceError::Invalid(format!("bad param {item:?}")))?;
        let v: f64 = v.trim().parse().map_err(|_| ServiceError::Invalid(format!("bad value in {item:?}")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

#[derive(Clone)]
pub struct Service {
    pub resources: Arc<Resources>,
    pub store: Arc<dyn Store>,
}

impl Service {
    pub fn new(resources: Arc<Resources>, store: Arc<dyn Store>) -> Service {
        Service { resources, store }
    }

    pub fn create(&self, text: &str, seed: Option<u64>) -> Result<String, ServiceError> {
        let generated = generate(&self.resources, text, seed)?;
        let bundle = model_to_bundle(&generated.model)?;
        Ok(self.store.put_character(&bundle, None)?)
    }

    pub fn bundle(&self, id: &str) -> Result<Bundle, ServiceError> {
        Ok(self.store.get_character(id)?)
    }

    pub fn model_zip(&self, id: &str) -> Result<Vec<u8>, ServiceError> {
        let b = self.bundle(id)?;
        zip_files(b.files.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
    }

    pub fn edit(&self, id: &str, ops: &[EditOp]) -> Result<String, ServiceError> {
        let model = model_from_bundle(&self.bundle(id)?)?;
        let edited = apply_edits(&self.resources, &model, ops)?;
        let bundle = model_to_bundle(&edited)?;
        let ops_text = canonical::to_compact_string(ops).map_err(internal)?;
        Ok(self.store.put_character(&bundle, Some((id, &ops_text)))?)
    }

    pub fn frame(&self, id: &str, values: &ParamValues, viewport: Option<(u32, u32)>) -> Result<Vec<u8>, ServiceError> {
        let model = model_from_bundle(&self.bundle(id)?)?;
        for k in values.keys() {
            if model.parameter(k).is_none() && !model.blendshapes.iter().any(|b| &b.name == k) {
                return Err(ServiceError::Invalid(format!("unknown parameter {k}")));
            }
        }
        let opts = RenderOptions { viewport, ..Default::default() };
        let img = render_frame(&model, values, &opts).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        img.encode_png().map_err(internal)
    }

    pub fn create_clip(&self, id: &str, visemes: &str) -> Result<String, ServiceError> {
        self.bundle(id)?;
        let tl = VisemeTimeline::parse(visemes).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        Ok(self.store.put_clip(&ClipRecord { character: id.to_string(), visemes: tl.to_text() })?)
    }

    /// Every frame of a stored clip as PNGs in a zip.
    pub fn clip_frames(&self, clip_id: &str, fps: f64, viewport: Option<(u32, u32)>) -> Result<Vec<u8>, ServiceError> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(ServiceError::Invalid(format!("fps must be positive, got {fps}")));
        }
        let rec = self.store.get_clip(clip_id)?;
        let model = model_from_bundle(&self.bundle(&rec.character)?)?;
        let tl = VisemeTimeline::parse(&rec.visemes).map_err(internal)?;
        let clip = timeline_to_clip(&tl);
        let n = frame_count(clip.duration, fps);
        if n > MAX_FRAMES {
            return Err(ServiceError::Invalid(format!("{n} frames exceeds the limit of {MAX_FRAMES}")));
        }
        let opts = RenderOptions { viewport, ..Default::default() };
        let mut frames = Vec::with_capacity(n);
        for k in 0..n {
            let img = render_frame(&model, &sample_clip(&clip, k as f64 / fps), &opts).map_err(internal)?;
            frames.push((frame_file_name(k), img.encode_png().map_err(internal)?));
        }
        zip_files(frames.iter().map(|(n, b)| (n.as_str(), b.as_slice())))
    }
}
