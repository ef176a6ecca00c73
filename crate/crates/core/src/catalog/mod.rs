//! Component library: slots, variants with contour masks, base layers and
//! attribute domains.
//!
//! A catalog is a directory holding `catalog.json` plus the PNG masks and
//! line art it references. Derived variants (short hair cut from long hair)
//! are not stored as images; they are rebuilt at load time from their parent
//! and a stored clip mask.

pub mod builtin;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::composer::derive_variant;
use crate::image::{ImageError, Mask, RasterImage};

pub const MANIFEST_FILE: &str = "catalog.json";
pub const CATALOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("manifest not found: {0}")]
    ManifestNotFound(PathBuf),
    #[error("{path}: malformed manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("unsupported catalog format_version {0}")]
    Version(u32),
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: ImageError,
    },
    #[error("variant {variant}: {path}: size {got:?} does not match canvas {canvas:?}")]
    SizeMismatch { variant: String, path: PathBuf, got: (u32, u32), canvas: (u32, u32) },
    #[error("variant {variant} references unknown slot {slot}")]
    UnknownSlot { variant: String, slot: String },
    #[error("unknown slot: {0}")]
    NoSuchSlot(String),
    #[error("variant {variant} derives from unknown parent {parent}")]
    UnknownParent { variant: String, parent: String },
    #[error("variant {0}: {1}")]
    InvalidVariant(String, String),
    #[error("duplicate id: {0}")]
    Duplicate(String),
    #[error("invalid catalog: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSlot {
    pub id: String,
    pub layer_bindings: Vec<String>,
    pub z_band: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentVariant {
    pub id: String,
    pub slot: String,
    pub contour_mask: Mask,
    pub line_art: RasterImage,
    pub anchor: (i32, i32),
    pub derived_from: Option<String>,
}

/// Always-present artwork (body, face, eyes, mouth) that no slot selects.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseLayer {
    pub name: String,
    pub z_band: i32,
    pub contour_mask: Mask,
    pub line_art: RasterImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCatalog {
    pub canvas_size: (u32, u32),
    pub slots: Vec<ComponentSlot>,
    pub base_layers: Vec<BaseLayer>,
    pub variants: Vec<ComponentVariant>,
    pub exclusive_groups: Vec<Vec<String>>,
    pub attribute_domains: BTreeMap<String, Vec<String>>,
    pub default_attributes: BTreeMap<String, String>,
}

/// Slot -> variant choices plus parse-only attribute values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub slots: BTreeMap<String, String>,
    pub attributes: BTreeMap<String, String>,
}

impl ComponentCatalog {
    pub fn slot(&self, id: &str) -> Option<&ComponentSlot> {
        self.slots.iter().find(|s| s.id == id)
    }

    pub fn variant(&self, id: &str) -> Option<&ComponentVariant> {
        self.variants.iter().find(|v| v.id == id)
    }

    pub fn variants_of<'a>(&'a self, slot: &'a str) -> impl Iterator<Item = &'a ComponentVariant> + 'a {
        self.variants.iter().filter(move |v| v.slot == slot)
    }

    /// The exclusive group containing `slot`, if any.
    pub fn exclusive_group(&self, slot: &str) -> Option<&[String]> {
        self.exclusive_groups
            .iter()
            .find(|g| g.iter().any(|s| s == slot))
            .map(|g| g.as_slice())
    }

    pub fn is_attribute(&self, id: &str) -> bool {
        self.attribute_domains.contains_key(id)
    }

    /// Slot owning a layer name, or `None` for base layers.
    pub fn slot_of_layer(&self, layer: &str) -> Option<&ComponentSlot> {
        self.slots.iter().find(|s| s.layer_bindings.iter().any(|l| l == layer))
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let (w, h) = self.canvas_size;
        if w == 0 || h == 0 {
            return Err(CatalogError::Invalid("canvas must be non-empty".into()));
        }
        let mut ids = BTreeSet::new();
        let mut bands = BTreeSet::new();
        let mut layer_names = BTreeSet::new();
        for s in &self.slots {
            if !ids.insert(s.id.as_str()) {
                return Err(CatalogError::Duplicate(s.id.clone()));
            }
            if !bands.insert(s.z_band) {
                return Err(CatalogError::Invalid(format!("slot {} shares z_band {}", s.id, s.z_band)));
            }
            if s.layer_bindings.is_empty() {
                return Err(CatalogError::Invalid(format!("slot {} binds no layers", s.id)));
            }
            for l in &s.layer_bindings {
                if !layer_names.insert(l.as_str()) {
                    return Err(CatalogError::Duplicate(l.clone()));
                }
            }
        }
        for b in &self.base_layers {
            if bands.contains(&b.z_band) {
                return Err(CatalogError::Invalid(format!("base layer {} collides with a slot z_band", b.name)));
            }
            if !layer_names.insert(b.name.as_str()) {
                return Err(CatalogError::Duplicate(b.name.clone()));
            }
            check_size(&b.name, b.contour_mask.size(), b.line_art.size(), self.canvas_size)?;
        }
        if let (Some(back), Some(front)) = (self.slot("back_hair"), self.slot("front_hair")) {
            let base_ok = self.base_layers.iter().all(|b| back.z_band < b.z_band && b.z_band < front.z_band);
            let others_ok = self
                .slots
                .iter()
                .filter(|s| s.id != back.id && s.id != front.id)
                .all(|s| back.z_band < s.z_band && s.z_band < front.z_band);
            if !(base_ok && others_ok) {
                return Err(CatalogError::Invalid("back_hair must be deepest and front_hair topmost".into()));
            }
        }
        let mut vids = BTreeSet::new();
        for v in &self.variants {
            if !vids.insert(v.id.as_str()) {
                return Err(CatalogError::Duplicate(v.id.clone()));
            }
            if self.slot(&v.slot).is_none() {
                return Err(CatalogError::UnknownSlot { variant: v.id.clone(), slot: v.slot.clone() });
            }
            check_size(&v.id, v.contour_mask.size(), v.line_art.size(), self.canvas_size)?;
            if v.contour_mask.is_empty() {
                return Err(CatalogError::InvalidVariant(v.id.clone(), "empty contour mask".into()));
            }
            if !line_art_inside(&v.line_art, &v.contour_mask) {
                return Err(CatalogError::InvalidVariant(v.id.clone(), "line art leaves the contour mask".into()));
            }
        }
        for s in &self.slots {
            if self.variants_of(&s.id).next().is_none() {
                return Err(CatalogError::Invalid(format!("slot {} has no variants", s.id)));
            }
        }
        for g in &self.exclusive_groups {
            for s in g {
                if self.slot(s).is_none() {
                    return Err(CatalogError::NoSuchSlot(s.clone()));
                }
            }
        }
        for (k, v) in &self.default_attributes {
            match self.attribute_domains.get(k) {
                Some(d) if d.contains(v) => {}
                _ => return Err(CatalogError::Invalid(format!("default attribute {k}={v} outside its domain"))),
            }
        }
        Ok(())
    }
}

fn check_size(id: &str, mask: (u32, u32), art: (u32, u32), canvas: (u32, u32)) -> Result<(), CatalogError> {
    for got in [mask, art] {
        if got != canvas {
            return Err(CatalogError::SizeMismatch {
                variant: id.to_string(),
                path: PathBuf::new(),
                got,
                canvas,
            });
        }
    }
    Ok(())
}

/// Every opaque line-art pixel lies inside the mask dilated by one pixel.
pub fn line_art_inside(art: &RasterImage, mask: &Mask) -> bool {
    let grown = mask.dilate1();
    (0..mask.len()).all(|i| art.get_index(i)[3] == 0 || grown.get_index(i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ManifestSlot {
    pub id: String,
    pub layers: Vec<String>,
    pub z_band: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ManifestBase {
    pub name: String,
    pub z_band: i32,
    pub mask: String,
    pub line_art: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ManifestVariant {
    pub id: String,
    pub slot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_art: Option<String>,
    #[serde(default)]
    pub anchor: (i32, i32),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Manifest {
    pub format_version: u32,
    pub canvas_size: (u32, u32),
    pub slots: Vec<ManifestSlot>,
    pub base_layers: Vec<ManifestBase>,
    pub variants: Vec<ManifestVariant>,
    #[serde(default)]
    pub exclusive_groups: Vec<Vec<String>>,
    #[serde(default)]
    pub attribute_domains: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub default_attributes: BTreeMap<String, String>,
}

struct Loader<'a> {
    dir: &'a Path,
    canvas: (u32, u32),
}

impl Loader<'_> {
    fn image(&self, owner: &str, rel: &str) -> Result<RasterImage, CatalogError> {
        let path = self.dir.join(rel);
        let img = RasterImage::load_png(&path).map_err(|source| CatalogError::Image { path: path.clone(), source })?;
        if img.size() != self.canvas {
            return Err(CatalogError::SizeMismatch {
                variant: owner.to_string(),
                path,
                got: img.size(),
                canvas: self.canvas,
            });
        }
        Ok(img)
    }

    fn mask(&self, owner: &str, rel: &str) -> Result<Mask, CatalogError> {
        self.image(owner, rel).map(|i| Mask::from_image(&i))
    }
}

/// Load and validate a catalog directory.
pub fn load_catalog(dir: &Path) -> Result<ComponentCatalog, CatalogError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = match std::fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CatalogError::ManifestNotFound(manifest_path))
        }
        Err(e) => return Err(CatalogError::Manifest { path: manifest_path, message: e.to_string() }),
    };
    let manifest: Manifest = canonical::from_str(&text)
        .map_err(|e| CatalogError::Manifest { path: manifest_path.clone(), message: e.to_string() })?;
    if manifest.format_version != CATALOG_FORMAT_VERSION {
        return Err(CatalogError::Version(manifest.format_version));
    }
    let loader = Loader { dir, canvas: manifest.canvas_size };

    let slots: Vec<ComponentSlot> = manifest
        .slots
        .iter()
        .map(|s| ComponentSlot { id: s.id.clone(), layer_bindings: s.layers.clone(), z_band: s.z_band })
        .collect();

    let mut base_layers = Vec::new();
    for b in &manifest.base_layers {
        base_layers.push(BaseLayer {
            name: b.name.clone(),
            z_band: b.z_band,
            contour_mask: loader.mask(&b.name, &b.mask)?,
            line_art: loader.image(&b.name, &b.line_art)?,
        });
    }

    let mut variants: Vec<ComponentVariant> = Vec::new();
    for v in &manifest.variants {
        if !slots.iter().any(|s| s.id == v.slot) {
            return Err(CatalogError::UnknownSlot { variant: v.id.clone(), slot: v.slot.clone() });
        }
        let variant = match (&v.derived_from, &v.clip, &v.mask, &v.line_art) {
            (Some(parent), Some(clip), None, None) => {
                let parent_v = variants
                    .iter()
                    .find(|p| &p.id == parent)
                    .ok_or_else(|| CatalogError::UnknownParent { variant: v.id.clone(), parent: parent.clone() })?;
                let clip_mask = loader.mask(&v.id, clip)?;
                let mut child = derive_variant(parent_v, &clip_mask)
                    .map_err(|e| CatalogError::InvalidVariant(v.id.clone(), e.to_string()))?;
                child.id = v.id.clone();
                child
            }
            (derived_from, None, Some(mask), Some(art)) => ComponentVariant {
                id: v.id.clone(),
                slot: v.slot.clone(),
                contour_mask: loader.mask(&v.id, mask)?,
                line_art: loader.image(&v.id, art)?,
                anchor: v.anchor,
                derived_from: derived_from.clone(),
            },
            _ => {
                return Err(CatalogError::InvalidVariant(
                    v.id.clone(),
                    "expected either mask+line_art or derived_from+clip".into(),
                ))
            }
        };
        if variant.slot != v.slot {
            return Err(CatalogError::InvalidVariant(v.id.clone(), "derived variant changes slot".into()));
        }
        variants.push(variant);
    }

    let catalog = ComponentCatalog {
        canvas_size: manifest.canvas_size,
        slots,
        base_layers,
        variants,
        exclusive_groups: manifest.exclusive_groups,
        attribute_domains: manifest.attribute_domains,
        default_attributes: manifest.default_attributes,
    };
    catalog.validate()?;
    Ok(catalog)
}

/// Variant ids of a slot in manifest order.
pub fn list_variants(catalog: &ComponentCatalog, slot: &str) -> Result<Vec<String>, CatalogError> {
    if catalog.slot(slot).is_none() {
        return Err(CatalogError::NoSuchSlot(slot.to_string()));
    }
    Ok(catalog.variants_of(slot).map(|v| v.id.clone()).collect())
}

/// First variant per slot, or a seeded uniform pick. Exactly one member of
/// each exclusive group is selected: the first member without a seed, a
/// uniformly chosen member with one.
pub fn default_selection(catalog: &ComponentCatalog, seed: Option<u64>) -> Selection {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut excluded: BTreeSet<&str> = BTreeSet::new();
    for group in &catalog.exclusive_groups {
        let keep = match rng.as_mut() {
            Some(r) => r.random_range(0..group.len()),
            None => 0,
        };
        excluded.extend(group.iter().enumerate().filter(|(i, _)| *i != keep).map(|(_, s)| s.as_str()));
    }
    let mut selection = Selection { slots: BTreeMap::new(), attributes: catalog.default_attributes.clone() };
    for slot in &catalog.slots {
        let ids: Vec<&ComponentVariant> = catalog.variants_of(&slot.id).collect();
        let pick = match rng.as_mut() {
            Some(r) => r.random_range(0..ids.len()),
            None => 0,
        };
        if excluded.contains(slot.id.as_str()) {
            continue;
        }
        selection.slots.insert(slot.id.clone(), ids[pick].id.clone());
    }
    selection
}
