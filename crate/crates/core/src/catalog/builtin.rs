//! Programmatic placeholder art for the shipped catalog.
//!
//! Every shape is a union of ellipses, rectangles and trapezoids on a
//! 1024x1024 canvas, symmetric about the vertical centre line where a body
//! part comes in pairs. Line art is the 4-connected boundary of each mask.
//! `write_default_catalog` regenerates `data/catalog/` byte-for-byte.

use std::collections::BTreeMap;
use std::path::Path;

use super::{Manifest, ManifestBase, ManifestSlot, ManifestVariant, CATALOG_FORMAT_VERSION, MANIFEST_FILE};
use crate::canonical;
use crate::image::{ImageError, Mask, RasterImage, Rgba};

pub const CANVAS: u32 = 1024;
const OUTLINE: Rgba = [48, 36, 48, 255];

type Shape = Box<dyn Fn(f64, f64) -> bool>;

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> Shape {
    Box::new(move |x, y| {
        let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
        dx * dx + dy * dy <= 1.0
    })
}

fn circle(cx: f64, cy: f64, r: f64) -> Shape {
    ellipse(cx, cy, r, r)
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Shape {
    Box::new(move |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
}

/// Horizontal band `[y0, y1)` whose left/right edges interpolate linearly
/// from `(top_l, top_r)` to `(bot_l, bot_r)`.
fn trapezoid(y0: f64, y1: f64, top: (f64, f64), bot: (f64, f64)) -> Shape {
    Box::new(move |x, y| {
        if y < y0 || y >= y1 {
            return false;
        }
        let t = (y - y0) / (y1 - y0);
        let l = top.0 + (bot.0 - top.0) * t;
        let r = top.1 + (bot.1 - top.1) * t;
        x >= l && x < r
    })
}

fn union(shapes: Vec<Shape>) -> Shape {
    Box::new(move |x, y| shapes.iter().any(|s| s(x, y)))
}

fn intersect(a: Shape, b: Shape) -> Shape {
    Box::new(move |x, y| a(x, y) && b(x, y))
}

/// The shape plus its mirror image about the canvas centre line.
fn mirrored(s: Shape) -> Shape {
    let w = CANVAS as f64;
    Box::new(move |x, y| s(x, y) || s(w - x, y))
}

fn below(y_max: f64) -> Shape {
    Box::new(move |_, y| y < y_max)
}

fn rasterize_shape(shape: &Shape) -> Mask {
    // Sample at pixel centres.
    Mask::from_fn(CANVAS, CANVAS, |x, y| shape(x as f64 + 0.5, y as f64 + 0.5))
}

/// Boundary pixels: set pixels with a 4-neighbour outside the mask or canvas.
pub fn outline_of(mask: &Mask) -> RasterImage {
    let (w, h) = mask.size();
    let mut art = RasterImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1);
            if edge {
                art.put(x, y, OUTLINE);
            }
        }
    }
    art
}

fn head() -> Shape {
    circle(512.0, 300.0, 150.0)
}

fn base_shapes() -> Vec<(&'static str, i32, Shape)> {
    vec![
        (
            "body",
            1,
            union(vec![
                rect(482.0, 420.0, 542.0, 480.0),
                rect(432.0, 460.0, 592.0, 720.0),
                mirrored(rect(384.0, 470.0, 430.0, 700.0)),
                mirrored(circle(407.0, 712.0, 22.0)),
                mirrored(rect(462.0, 700.0, 506.0, 950.0)),
                mirrored(rect(456.0, 940.0, 508.0, 975.0)),
            ]),
        ),
        ("face", 2, head()),
        ("eyes", 2, mirrored(ellipse(452.0, 310.0, 26.0, 34.0))),
        ("mouth", 2, ellipse(512.0, 392.0, 34.0, 12.0)),
    ]
}

fn slots() -> Vec<(&'static str, Vec<&'static str>, i32)> {
    vec![
        ("back_hair", vec!["back_hair"], 0),
        ("pants", vec!["pants"], 3),
        ("skirt", vec!["skirt"], 4),
        ("shoes", vec!["shoes"], 5),
        ("top", vec!["top"], 6),
        ("sleeves", vec!["sleeve_left", "sleeve_right"], 7),
        ("mid_hair", vec!["mid_hair"], 8),
        ("front_hair", vec!["front_hair"], 9),
    ]
}

enum Art {
    Drawn(Shape),
    Derived { parent: &'static str, clip: Shape },
}

fn variants() -> Vec<(&'static str, &'static str, Art)> {
    use Art::*;
    let long_hair = || {
        union(vec![
            ellipse(512.0, 300.0, 190.0, 185.0),
            rect(330.0, 300.0, 694.0, 740.0),
            ellipse(512.0, 740.0, 182.0, 40.0),
        ])
    };
    let fringe = || circle(512.0, 300.0, 158.0);
    vec![
        ("bh_long", "back_hair", Drawn(long_hair())),
        ("bh_short", "back_hair", Derived { parent: "bh_long", clip: below(470.0) }),
        (
            "bh_pony",
            "back_hair",
            Drawn(union(vec![ellipse(512.0, 300.0, 175.0, 170.0), ellipse(700.0, 430.0, 50.0, 170.0)])),
        ),
        (
            "bh_twin",
            "back_hair",
            Drawn(union(vec![ellipse(512.0, 300.0, 175.0, 170.0), mirrored(ellipse(322.0, 480.0, 45.0, 200.0))])),
        ),
        ("bh_bob", "back_hair", Derived { parent: "bh_long", clip: below(540.0) }),
        ("mh_locks", "mid_hair", Drawn(mirrored(rect(340.0, 250.0, 388.0, 540.0)))),
        (
            "mh_braids",
            "mid_hair",
            Drawn(mirrored(union((0..7).map(|k| circle(360.0, 280.0 + 40.0 * k as f64, 22.0)).collect()))),
        ),
        ("mh_curls", "mid_hair", Drawn(mirrored(ellipse(355.0, 420.0, 30.0, 120.0)))),
        ("fh_blunt", "front_hair", Drawn(intersect(fringe(), below(235.0)))),
        (
            "fh_swept",
            "front_hair",
            Drawn(intersect(fringe(), Box::new(|x, y| y < 190.0 + (x - 354.0) * 0.25))),
        ),
        (
            "fh_parted",
            "front_hair",
            Drawn(intersect(fringe(), Box::new(|x, y| y < 250.0 - (70.0 - (x - 512.0).abs()).max(0.0) * 1.2))),
        ),
        (
            "tp_hoodie",
            "top",
            Drawn(union(vec![rect(426.0, 455.0, 598.0, 730.0), ellipse(512.0, 468.0, 84.0, 30.0)])),
        ),
        (
            "tp_shirt",
            "top",
            Drawn(union(vec![rect(428.0, 458.0, 596.0, 720.0), trapezoid(446.0, 470.0, (470.0, 554.0), (480.0, 544.0))])),
        ),
        ("tp_tshirt", "top", Drawn(rect(430.0, 460.0, 594.0, 710.0))),
        ("tp_jacket", "top", Drawn(rect(420.0, 452.0, 604.0, 735.0))),
        ("tp_sweater", "top", Drawn(rect(424.0, 455.0, 600.0, 745.0))),
        ("sl_long", "sleeves", Drawn(mirrored(rect(378.0, 462.0, 436.0, 705.0)))),
        ("sl_short", "sleeves", Derived { parent: "sl_long", clip: below(570.0) }),
        ("sl_none", "sleeves", Drawn(mirrored(rect(420.0, 458.0, 440.0, 490.0)))),
        ("sl_puff", "sleeves", Drawn(mirrored(ellipse(405.0, 500.0, 38.0, 40.0)))),
        ("sl_rolled", "sleeves", Drawn(mirrored(rect(380.0, 462.0, 434.0, 640.0)))),
        (
            "sl_wide",
            "sleeves",
            Drawn(mirrored(trapezoid(462.0, 705.0, (380.0, 436.0), (356.0, 446.0)))),
        ),
        (
            "pt_jeans",
            "pants",
            Drawn(union(vec![mirrored(rect(456.0, 700.0, 510.0, 935.0)), rect(456.0, 700.0, 568.0, 760.0)])),
        ),
        ("pt_shorts", "pants", Derived { parent: "pt_jeans", clip: below(800.0) }),
        (
            "pt_trousers",
            "pants",
            Drawn(union(vec![mirrored(rect(450.0, 700.0, 511.0, 940.0)), rect(450.0, 700.0, 574.0, 770.0)])),
        ),
        (
            "pt_leggings",
            "pants",
            Drawn(union(vec![mirrored(rect(460.0, 700.0, 508.0, 930.0)), rect(460.0, 700.0, 564.0, 740.0)])),
        ),
        (
            "pt_cargo",
            "pants",
            Drawn(union(vec![
                mirrored(rect(454.0, 700.0, 511.0, 935.0)),
                rect(454.0, 700.0, 570.0, 760.0),
                mirrored(rect(438.0, 780.0, 456.0, 840.0)),
            ])),
        ),
        ("sk_pleated", "skirt", Drawn(trapezoid(700.0, 820.0, (436.0, 588.0), (406.0, 618.0)))),
        ("sk_long", "skirt", Drawn(trapezoid(700.0, 920.0, (436.0, 588.0), (396.0, 628.0)))),
        ("sk_mini", "skirt", Derived { parent: "sk_long", clip: below(770.0) }),
        ("sk_aline", "skirt", Drawn(trapezoid(700.0, 850.0, (436.0, 588.0), (386.0, 638.0)))),
        (
            "sk_ruffled",
            "skirt",
            Drawn(union(vec![
                trapezoid(700.0, 800.0, (436.0, 588.0), (416.0, 608.0)),
                union((0..7).map(|k| circle(426.0 + 28.5 * k as f64, 800.0, 16.0)).collect()),
            ])),
        ),
        ("sh_sneakers", "shoes", Drawn(mirrored(rect(450.0, 930.0, 508.0, 980.0)))),
        ("sh_boots", "shoes", Drawn(mirrored(rect(452.0, 872.0, 508.0, 982.0)))),
        ("sh_loafers", "shoes", Drawn(mirrored(rect(454.0, 938.0, 506.0, 976.0)))),
        ("sh_sandals", "shoes", Drawn(mirrored(rect(454.0, 952.0, 506.0, 972.0)))),
        (
            "sh_maryjanes",
            "shoes",
            Drawn(mirrored(union(vec![rect(454.0, 944.0, 506.0, 977.0), rect(462.0, 932.0, 498.0, 944.0)]))),
        ),
        (
            "sh_heels",
            "shoes",
            Drawn(mirrored(union(vec![
                trapezoid(936.0, 970.0, (456.0, 506.0), (446.0, 506.0)),
                rect(488.0, 970.0, 498.0, 990.0),
            ]))),
        ),
    ]
}

fn attribute_domains() -> BTreeMap<String, Vec<String>> {
    let d = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    BTreeMap::from([
        ("eye_color".to_string(), d(&["blue", "green", "brown", "red", "purple", "amber"])),
        ("eyebrows".to_string(), d(&["straight", "thick", "thin", "arched"])),
        ("face_shape".to_string(), d(&["oval", "round", "heart-shaped", "square"])),
    ])
}

/// Write the shipped catalog (manifest, masks, line art, clip masks) into `dir`.
pub fn write_default_catalog(dir: &Path) -> Result<(), ImageError> {
    let io = |source: std::io::Error| ImageError::Io { path: dir.display().to_string(), source };
    for sub in ["base", "variants", "clips"] {
        std::fs::create_dir_all(dir.join(sub)).map_err(io)?;
    }
    let save_pair = |prefix: &str, id: &str, mask: &Mask| -> Result<(String, String), ImageError> {
        let m = format!("{prefix}/{id}_mask.png");
        let l = format!("{prefix}/{id}_line.png");
        mask.to_image().save_png(&dir.join(&m))?;
        outline_of(mask).save_png(&dir.join(&l))?;
        Ok((m, l))
    };

    let mut base_layers = Vec::new();
    for (name, band, shape) in base_shapes() {
        let (mask, line_art) = save_pair("base", name, &rasterize_shape(&shape))?;
        base_layers.push(ManifestBase { name: name.into(), z_band: band, mask, line_art });
    }

    let mut out_variants = Vec::new();
    for (id, slot, art) in variants() {
        let entry = match art {
            Art::Drawn(shape) => {
                let (mask, line_art) = save_pair("variants", id, &rasterize_shape(&shape))?;
                ManifestVariant {
                    id: id.into(),
                    slot: slot.into(),
                    mask: Some(mask),
                    line_art: Some(line_art),
                    anchor: (0, 0),
                    derived_from: None,
                    clip: None,
                }
            }
            Art::Derived { parent, clip } => {
                let rel = format!("clips/{id}_clip.png");
                rasterize_shape(&clip).to_image().save_png(&dir.join(&rel))?;
                ManifestVariant {
                    id: id.into(),
                    slot: slot.into(),
                    mask: None,
                    line_art: None,
                    anchor: (0, 0),
                    derived_from: Some(parent.into()),
                    clip: Some(rel),
                }
            }
        };
        out_variants.push(entry);
    }

    let manifest = Manifest {
        format_version: CATALOG_FORMAT_VERSION,
        canvas_size: (CANVAS, CANVAS),
        slots: slots()
            .into_iter()
            .map(|(id, layers, z_band)| ManifestSlot {
                id: id.into(),
                layers: layers.into_iter().map(String::from).collect(),
                z_band,
            })
            .collect(),
        base_layers,
        variants: out_variants,
        exclusive_groups: vec![vec!["pants".into(), "skirt".into()]],
        attribute_domains: attribute_domains(),
        default_attributes: BTreeMap::from([
            ("eye_color".to_string(), "brown".to_string()),
            ("eyebrows".to_string(), "straight".to_string()),
            ("face_shape".to_string(), "oval".to_string()),
        ]),
    };
    let text = canonical::to_string(&manifest).expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST_FILE), text).map_err(io)
}
