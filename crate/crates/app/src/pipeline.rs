//! Text to rigged character, stage by stage.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use thiserror::Error;
use toonforge_core::assemble::assemble_model;
use toonforge_core::catalog::{default_selection, load_catalog, ComponentCatalog, Selection};
use toonforge_core::composer::{compose_template, TemplateSheet};
use toonforge_core::image::{Mask, RasterImage};
use toonforge_core::paint::{
    erase_region, extract_component, repair_occlusion, synthesize_appearance, PaintError, RepairOptions, SlotStyle,
    StyleSpec,
};
use toonforge_core::rig::{CharacterModel, GenerationRecord};
use toonforge_core::textparse::{parse_description, Lexicon, ParsedDescription};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Parse,
    Select,
    Compose,
    Style,
    Paint,
    Delayer,
    Assemble,
    Save,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Parse => "parse",
            Stage::Select => "select",
            Stage::Compose => "compose",
            Stage::Style => "style",
            Stage::Paint => "paint",
            Stage::Delayer => "delayer",
            Stage::Assemble => "assemble",
            Stage::Save => "save",
        };
        f.pad(s)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> PipelineError {
        PipelineError { stage, source: source.into() }
    }
}

fn at<E: Into<Box<dyn std::error::Error + Send + Sync>>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

/// Catalog and lexicon, loaded once and shared by every request.
#[derive(Debug)]
pub struct Resources {
    pub catalog: ComponentCatalog,
    pub lexicon: Lexicon,
}

impl Resources {
    pub fn load(catalog_dir: &Path, lexicon_path: &Path) -> Result<Resources, PipelineError> {
        let catalog = load_catalog(catalog_dir).map_err(at(Stage::Load))?;
        let lexicon = Lexicon::load(lexicon_path).map_err(at(Stage::Load))?;
        lexicon.validate(&catalog).map_err(at(Stage::Load))?;
        Ok(Resources { catalog, lexicon })
    }

    /// The shipped catalog and lexicon under `data/`.
    pub fn load_default() -> Result<Resources, PipelineError> {
        let dir = toonforge_core::default_data_dir();
        Resources::load(&dir.join("catalog"), &dir.join("lexicon.txt"))
    }
}

#[derive(Debug, Default)]
pub struct Timings(pub Vec<(Stage, Duration)>);

impl Timings {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((stage, start.elapsed()));
        out
    }

    pub fn total(&self) -> Duration {
        self.0.iter().map(|(_, d)| *d).sum()
    }
}

#[derive(Debug)]
pub struct Generated {
    pub model: CharacterModel,
    pub parsed: ParsedDescription,
    pub timings: Timings,
}

/// Defaults for the seed, overridden by whatever the text named. A named
/// garment displaces the other members of its exclusive group.
pub fn resolve_selection(parsed: &ParsedDescription, catalog: &ComponentCatalog, seed: Option<u64>) -> Selection {
    let mut sel = default_selection(catalog, seed);
    for (slot, variant) in &parsed.selection {
        if let Some(group) = catalog.exclusive_group(slot) {
            for other in group.iter().filter(|g| *g != slot) {
                sel.slots.remove(other);
            }
        }
        sel.slots.insert(slot.clone(), variant.clone());
    }
    sel.attributes.extend(parsed.attributes.clone());
    sel
}

/// Flat fills for every color the text gave. Eye color comes from the
/// parsed color, else from the eye_color attribute when the lexicon knows
/// that color name.
pub fn style_from(parsed: &ParsedDescription, selection: &Selection, lexicon: &Lexicon) -> StyleSpec {
    let mut style = StyleSpec::default();
    for (key, rgb) in &parsed.colors {
        let key = if key == "eye_color" { "eyes" } else { key.as_str() };
        style.slots.insert(key.to_string(), SlotStyle::flat(*rgb));
    }
    if !style.slots.contains_key("eyes") {
        if let Some(name) = selection.attributes.get("eye_color") {
            if let Some(c) = lexicon.colors.iter().find(|c| &c.name() == name) {
                style.slots.insert("eyes".into(), SlotStyle::flat(c.rgb));
            }
        }
    }
    style
}

/// Recover one full-canvas texture per layer from the flattened painting:
/// cut each layer's region out, drop what layers above it cover and fill
/// that part back from the layer's own visible pixels. A layer hidden
/// entirely keeps its painted texture.
pub fn delayer(sheet: &TemplateSheet, flattened: &RasterImage, painted: &[RasterImage]) -> Result<Vec<RasterImage>, PaintError> {
    let (w, h) = sheet.canvas_size;
    let mut above = Mask::new(w, h);
    let mut out = vec![RasterImage::new(w, h); sheet.layers.len()];
    for (i, layer) in sheet.layers.iter().enumerate().rev() {
        let mask = &layer.contour_mask;
        let occluded = mask.and(&above);
        let visible = extract_component(flattened, mask)?;
        let cut = erase_region(&visible, &occluded)?;
        out[i] = match repair_occlusion(&cut, mask, &above, RepairOptions::default()) {
            Ok(img) => img,
            Err(PaintError::FullyOccluded) => painted[i].clone(),
            Err(e) => return Err(e),
        };
        above.union_in_place(mask);
    }
    Ok(out)
}

/// Build textures and rig for an explicit selection and style.
pub fn build_model(
    res: &Resources,
    record: GenerationRecord,
    timings: &mut Timings,
) -> Result<CharacterModel, PipelineError> {
    let sheet = timings
        .time(Stage::Compose, || compose_template(&record.selection, &res.catalog))
        .map_err(at(Stage::Compose))?;
    let app = timings
        .time(Stage::Paint, || synthesize_appearance(&sheet, &record.style, record.seed.unwrap_or(0)))
        .map_err(at(Stage::Paint))?;
    let painted: Vec<RasterImage> = app.layers.into_iter().map(|(_, t)| t).collect();
    let textures = timings
        .time(Stage::Delayer, || delayer(&sheet, &app.flattened, &painted))
        .map_err(at(Stage::Delayer))?;
    timings
        .time(Stage::Assemble, || assemble_model(&sheet, &textures, Some(record)))
        .map_err(at(Stage::Assemble))
}

pub fn generate(res: &Resources, text: &str, seed: Option<u64>) -> Result<Generated, PipelineError> {
    let mut timings = Timings::default();
    let parsed = timings.time(Stage::Parse, || parse_description(text, &res.lexicon, &res.catalog));
    let selection = timings.time(Stage::Select, || resolve_selection(&parsed, &res.catalog, seed));
    let style = timings.time(Stage::Style, || style_from(&parsed, &selection, &res.lexicon));
    let record = GenerationRecord { text: text.to_string(), seed, selection, style };
    let model = build_model(res, record, &mut timings)?;
    Ok(Generated { model, parsed, timings })
}
