//! Template sheet assembly: places the selected variants' contour masks and
//! line art into z-ordered layers, derives clipped variants and merges
//! adjacent layers.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::catalog::{ComponentCatalog, ComponentVariant, Selection};
use crate::image::{composite_over, Mask, RasterImage, TRANSPARENT};

/// Layers per z band; layer z = band * Z_STRIDE + index within the band.
pub const Z_STRIDE: i32 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("unknown slot {0}")]
    UnknownSlot(String),
    #[error("unknown variant {variant} for slot {slot}")]
    UnknownVariant { slot: String, variant: String },
    #[error("exclusive group violated: {0:?} selected together")]
    ExclusiveGroup(Vec<String>),
    #[error("clip mask is {got:?}, expected {expected:?}")]
    SizeMismatch { got: (u32, u32), expected: (u32, u32) },
    #[error("clipping {0} leaves an empty component")]
    EmptyIntersection(String),
    #[error("unknown layer {0}")]
    UnknownLayer(String),
    #[error("layer {0} appears in more than one merge group")]
    OverlappingGroups(String),
    #[error("merge group {0:?} is not contiguous in z")]
    NonContiguous(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLayer {
    pub name: String,
    /// Owning slot; `None` for base layers.
    pub slot: Option<String>,
    pub contour_mask: Mask,
    pub line_art: RasterImage,
    pub z: i32,
}

impl TemplateLayer {
    /// Style key: the slot id, or the layer name for base layers.
    pub fn style_key(&self) -> &str {
        self.slot.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSheet {
    pub canvas_size: (u32, u32),
    pub layers: Vec<TemplateLayer>,
}

impl TemplateSheet {
    pub fn layer(&self, name: &str) -> Option<&TemplateLayer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn union_mask(&self) -> Mask {
        let (w, h) = self.canvas_size;
        let mut m = Mask::new(w, h);
        for l in &self.layers {
            m.union_in_place(&l.contour_mask);
        }
        m
    }
}

fn translate_image(img: &RasterImage, dx: i32, dy: i32) -> RasterImage {
    if dx == 0 && dy == 0 {
        return img.clone();
    }
    let (w, h) = img.size();
    let mut out = RasterImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (nx, ny) = (x as i64 + dx as i64, y as i64 + dy as i64);
            if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                out.put(nx as u32, ny as u32, img.get(x, y));
            }
        }
    }
    out
}

/// Restrict an image to the columns `[x0, x1)`.
fn column_band(img: &RasterImage, x0: u32, x1: u32) -> RasterImage {
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in (0..x0).chain(x1..img.width()) {
            out.put(x, y, TRANSPARENT);
        }
    }
    out
}

fn check_selection(selection: &Selection, catalog: &ComponentCatalog) -> Result<(), ComposeError> {
    for (slot, variant) in &selection.slots {
        if catalog.slot(slot).is_none() {
            return Err(ComposeError::UnknownSlot(slot.clone()));
        }
        match catalog.variant(variant) {
            Some(v) if &v.slot == slot => {}
            _ => return Err(ComposeError::UnknownVariant { slot: slot.clone(), variant: variant.clone() }),
        }
    }
    for group in &catalog.exclusive_groups {
        let chosen: Vec<String> = group.iter().filter(|s| selection.slots.contains_key(*s)).cloned().collect();
        if chosen.len() > 1 {
            return Err(ComposeError::ExclusiveGroup(chosen));
        }
    }
    Ok(())
}

/// Build the per-layer control template for a selection.
///
/// A slot bound to `k` layers splits its variant into `k` equal-width column
/// bands, left to right (the sleeves slot yields `sleeve_left` and
/// `sleeve_right`). Base layers are always present.
pub fn compose_template(selection: &Selection, catalog: &ComponentCatalog) -> Result<TemplateSheet, ComposeError> {
    check_selection(selection, catalog)?;
    let (w, h) = catalog.canvas_size;
    let mut layers = Vec::new();

    let mut band_index: std::collections::BTreeMap<i32, i32> = Default::default();
    for base in &catalog.base_layers {
        let idx = band_index.entry(base.z_band).or_insert(0);
        layers.push(TemplateLayer {
            name: base.name.clone(),
            slot: None,
            contour_mask: base.contour_mask.clone(),
            line_art: base.line_art.clone(),
            z: base.z_band * Z_STRIDE + *idx,
        });
        *idx += 1;
    }

    for slot in &catalog.slots {
        let Some(variant_id) = selection.slots.get(&slot.id) else { continue };
        let variant = catalog.variant(variant_id).expect("checked above");
        let (ax, ay) = variant.anchor;
        let mask = variant.contour_mask.translated(ax, ay);
        let art = translate_image(&variant.line_art, ax, ay);
        let k = slot.layer_bindings.len() as u32;
        for (j, name) in slot.layer_bindings.iter().enumerate() {
            let (x0, x1) = (w * j as u32 / k, w * (j as u32 + 1) / k);
            let (m, a) = if k == 1 {
                (mask.clone(), art.clone())
            } else {
                let band = Mask::from_fn(w, h, |x, _| x >= x0 && x < x1);
                (mask.and(&band), column_band(&art, x0, x1))
            };
            layers.push(TemplateLayer {
                name: name.clone(),
                slot: Some(slot.id.clone()),
                contour_mask: m,
                line_art: a,
                z: slot.z_band * Z_STRIDE + j as i32,
            });
        }
    }
    layers.sort_by_key(|l| l.z);
    Ok(TemplateSheet { canvas_size: (w, h), layers })
}

/// Cut a smaller variant out of a larger one. Layer bindings and anchor are
/// inherited so the parent's mesh binding still applies.
pub fn derive_variant(parent: &ComponentVariant, clip_mask: &Mask) -> Result<ComponentVariant, ComposeError> {
    let expected = parent.contour_mask.size();
    if clip_mask.size() != expected {
        return Err(ComposeError::SizeMismatch { got: clip_mask.size(), expected });
    }
    let contour_mask = parent.contour_mask.and(clip_mask);
    if contour_mask.is_empty() {
        return Err(ComposeError::EmptyIntersection(parent.id.clone()));
    }
    let keep = clip_mask.and(&contour_mask.dilate1());
    let mut line_art = parent.line_art.clone();
    for i in 0..keep.len() {
        if !keep.get_index(i) {
            line_art.put_index(i, TRANSPARENT);
        }
    }
    Ok(ComponentVariant {
        id: format!("{}_clipped", parent.id),
        slot: parent.slot.clone(),
        contour_mask,
        line_art,
        anchor: parent.anchor,
        derived_from: Some(parent.id.clone()),
    })
}

/// Replace each group of z-adjacent layers by one layer (masks unioned, line
/// art composited back to front, z = group minimum, name = members joined
/// by `+`).
pub fn merge_layers(sheet: &TemplateSheet, groups: &[Vec<String>]) -> Result<TemplateSheet, ComposeError> {
    let mut seen = BTreeSet::new();
    let mut spans = Vec::new();
    for group in groups {
        let mut positions = Vec::new();
        for name in group {
            let pos = sheet
                .layers
                .iter()
                .position(|l| &l.name == name)
                .ok_or_else(|| ComposeError::UnknownLayer(name.clone()))?;
            if !seen.insert(name.clone()) {
                return Err(ComposeError::OverlappingGroups(name.clone()));
            }
            positions.push(pos);
        }
        if positions.is_empty() {
            continue;
        }
        positions.sort_unstable();
        let (lo, hi) = (positions[0], positions[positions.len() - 1]);
        if hi - lo + 1 != positions.len() {
            return Err(ComposeError::NonContiguous(group.clone()));
        }
        spans.push((lo, hi));
    }

    let mut out = Vec::new();
    let mut i = 0;
    while i < sheet.layers.len() {
        let Some(&(lo, hi)) = spans.iter().find(|(lo, _)| *lo == i) else {
            out.push(sheet.layers[i].clone());
            i += 1;
            continue;
        };
        let members = &sheet.layers[lo..=hi];
        let mut mask = members[0].contour_mask.clone();
        let mut art = members[0].line_art.clone();
        for m in &members[1..] {
            mask.union_in_place(&m.contour_mask);
            for p in 0..mask.len() {
                let src = m.line_art.get_index(p);
                if src[3] > 0 {
                    art.put_index(p, composite_over(art.get_index(p), src, 1.0));
                }
            }
        }
        let slot = members[0].slot.clone().filter(|s| members.iter().all(|m| m.slot.as_ref() == Some(s)));
        out.push(TemplateLayer {
            name: members.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join("+"),
            slot,
            contour_mask: mask,
            line_art: art,
            z: members[0].z,
        });
        i = hi + 1;
    }
    Ok(TemplateSheet { canvas_size: sheet.canvas_size, layers: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{default_selection, line_art_inside};
    use crate::test_support::default_catalog;

    #[test]
    fn default_sheet_has_slot_and_base_layers_in_z_order() {
        let c = default_catalog();
        let sheet = compose_template(&default_selection(c, None), c).unwrap();
        let slot_layers = sheet.layers.iter().filter(|l| l.slot.is_some()).count();
        assert_eq!(slot_layers, 8);
        assert_eq!(sheet.layers.len(), 8 + c.base_layers.len());
        assert!(sheet.layers.windows(2).all(|w| w[0].z < w[1].z));
        for l in &sheet.layers {
            assert_eq!(l.contour_mask.size(), (1024, 1024));
            assert!(line_art_inside(&l.line_art, &l.contour_mask), "{}", l.name);
        }
    }

    #[test]
    fn pants_and_skirt_together_is_rejected() {
        let c = default_catalog();
        let mut s = default_selection(c, None);
        s.slots.insert("skirt".into(), "sk_long".into());
        assert!(matches!(compose_template(&s, c), Err(ComposeError::ExclusiveGroup(_))));
    }

    #[test]
    fn unknown_variant_is_rejected() {
        let c = default_catalog();
        let mut s = default_selection(c, None);
        s.slots.insert("top".into(), "bh_long".into());
        assert!(matches!(compose_template(&s, c), Err(ComposeError::UnknownVariant { .. })));
    }

    #[test]
    fn union_of_layers_equals_union_of_selected_masks() {
        let c = default_catalog();
        for seed in [None, Some(3), Some(11)] {
            let sel = default_selection(c, seed);
            let sheet = compose_template(&sel, c).unwrap();
            let mut expected = Mask::new(1024, 1024);
            for b in &c.base_layers {
                expected.union_in_place(&b.contour_mask);
            }
            for v in sel.slots.values() {
                expected.union_in_place(&c.variant(v).unwrap().contour_mask);
            }
            // pixel-set comparison
            let got = sheet.union_mask();
            let mismatches = (0..got.len()).filter(|&i| got.get_index(i) != expected.get_index(i)).count();
            assert_eq!(mismatches, 0);
        }
    }

    #[test]
    fn derive_with_full_clip_is_identity_on_mask() {
        let c = default_catalog();
        let parent = c.variant("bh_long").unwrap();
        let child = derive_variant(parent, &Mask::full(1024, 1024)).unwrap();
        assert_eq!(child.contour_mask, parent.contour_mask);
        assert_eq!(child.derived_from.as_deref(), Some("bh_long"));
    }

    #[test]
    fn derive_with_empty_clip_fails() {
        let parent = default_catalog().variant("bh_long").unwrap();
        assert!(matches!(
            derive_variant(parent, &Mask::new(1024, 1024)),
            Err(ComposeError::EmptyIntersection(_))
        ));
    }

    #[test]
    fn derive_upper_half_matches_per_pixel_count() {
        let parent = default_catalog().variant("bh_long").unwrap();
        let clip = Mask::from_fn(1024, 1024, |_, y| y < 512);
        let child = derive_variant(parent, &clip).unwrap();
        let mut brute = 0;
        for y in 0..512 {
            for x in 0..1024 {
                brute += parent.contour_mask.get(x, y) as usize;
            }
        }
        assert_eq!(child.contour_mask.count(), brute);
        assert_eq!(child.anchor, parent.anchor);
        assert!(line_art_inside(&child.line_art, &child.contour_mask));
    }

    #[test]
    fn derive_is_idempotent() {
        let parent = default_catalog().variant("sl_long").unwrap();
        let clip = Mask::from_fn(1024, 1024, |x, y| y < 600 && x > 300);
        let once = derive_variant(parent, &clip).unwrap();
        let twice = derive_variant(&once, &clip).unwrap();
        assert_eq!(once.contour_mask, twice.contour_mask);
        assert_eq!(once.line_art, twice.line_art);
    }

    fn tiny_layer(name: &str, z: i32, mask: Mask) -> TemplateLayer {
        let art = RasterImage::new(mask.width(), mask.height());
        TemplateLayer { name: name.into(), slot: None, contour_mask: mask, line_art: art, z }
    }

    #[test]
    fn merge_single_layer_group_is_identity() {
        let c = default_catalog();
        let sheet = compose_template(&default_selection(c, None), c).unwrap();
        let merged = merge_layers(&sheet, &[vec!["top".into()]]).unwrap();
        assert_eq!(merged, sheet);
    }

    #[test]
    fn merging_disjoint_layers_sums_counts() {
        let a = Mask::from_fn(8, 8, |x, _| x < 3);
        let b = Mask::from_fn(8, 8, |x, _| x > 5);
        let sheet = TemplateSheet {
            canvas_size: (8, 8),
            layers: vec![tiny_layer("a", 3, a.clone()), tiny_layer("b", 4, b.clone())],
        };
        let merged = merge_layers(&sheet, &[vec!["a".into(), "b".into()]]).unwrap();
        assert_eq!(merged.layers.len(), 1);
        assert_eq!(merged.layers[0].contour_mask.count(), a.count() + b.count());
        assert_eq!(merged.layers[0].z, 3);
        assert_eq!(merged.layers[0].name, "a+b");
    }

    #[test]
    fn merging_across_a_foreign_layer_fails() {
        let m = || Mask::full(2, 2);
        let sheet = TemplateSheet {
            canvas_size: (2, 2),
            layers: vec![tiny_layer("a", 3, m()), tiny_layer("mid", 4, m()), tiny_layer("b", 5, m())],
        };
        assert!(matches!(
            merge_layers(&sheet, &[vec!["a".into(), "b".into()]]),
            Err(ComposeError::NonContiguous(_))
        ));
    }

    #[test]
    fn merged_line_art_is_composited_back_to_front() {
        let mut lo = tiny_layer("lo", 0, Mask::full(1, 1));
        let mut hi = tiny_layer("hi", 1, Mask::full(1, 1));
        lo.line_art.put(0, 0, [0, 0, 255, 255]);
        hi.line_art.put(0, 0, [255, 0, 0, 255]);
        let sheet = TemplateSheet { canvas_size: (1, 1), layers: vec![lo, hi] };
        let merged = merge_layers(&sheet, &[vec!["hi".into(), "lo".into()]]).unwrap();
        assert_eq!(merged.layers[0].line_art.get(0, 0), [255, 0, 0, 255]);
    }
}
