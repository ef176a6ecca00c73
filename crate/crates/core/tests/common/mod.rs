//! Reference implementations and random fixtures shared by the integration
//! tests. The oracles are written directly from the contracts and share no
//! code with the library beyond its data types.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toonforge_core::image::{Mask, RasterImage};
use toonforge_core::rig::{
    standard_parameters, AnimationClip, Blendshape, CharacterModel, Deformer, Interpolation, Keyform, Layer, Mesh,
    ParamValues, Track,
};

/// Occlusion repair by brute force: for every occluded pixel run its own BFS
/// inside the component mask and take the visible pixel at the smallest
/// distance, smallest (y, x) among equals. `None` when nothing is visible.
pub fn repair_oracle(img: &RasterImage, mask: &Mask, occ: &Mask) -> Option<RasterImage> {
    let (w, h) = img.size();
    let (w, h) = (w as i64, h as i64);
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as u32, y as u32);
    let visible = |x: i64, y: i64| inside(x, y) && !occ.get(x as u32, y as u32);
    if !(0..h).any(|y| (0..w).any(|x| visible(x, y))) {
        return None;
    }
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            if !(inside(x, y) && occ.get(x as u32, y as u32)) {
                continue;
            }
            let mut dist = vec![-1i64; (w * h) as usize];
            let mut q = VecDeque::from([(x, y)]);
            dist[(y * w + x) as usize] = 0;
            let mut best: Option<(i64, i64, i64)> = None;
            while let Some((cx, cy)) = q.pop_front() {
                let d = dist[(cy * w + cx) as usize];
                if best.is_some_and(|b| d > b.0) {
                    break;
                }
                if visible(cx, cy) {
                    let cand = (d, cy, cx);
                    if best.is_none_or(|b| cand < b) {
                        best = Some(cand);
                    }
                    continue;
                }
                for (nx, ny) in [(cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)] {
                    if inside(nx, ny) && dist[(ny * w + nx) as usize] < 0 {
                        dist[(ny * w + nx) as usize] = d + 1;
                        q.push_back((nx, ny));
                    }
                }
            }
            if let Some((_, sy, sx)) = best {
                out.put(x as u32, y as u32, img.get(sx as u32, sy as u32));
            }
        }
    }
    Some(out)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> RasterImage {
    let px: Vec<u8> = (0..w * h * 4).map(|_| rng.random()).collect();
    RasterImage::from_raw(w, h, px).unwrap()
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32, p: f64) -> Mask {
    let mut m = Mask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            m.set(x, y, rng.random_bool(p));
        }
    }
    m
}

fn lerp_keys(keys: &[Keyform], i: usize, v: f64) -> [f64; 2] {
    if v <= keys[0].value {
        return keys[0].offsets[i];
    }
    for pair in keys.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if v == a.value {
            return a.offsets[i];
        }
        if v < b.value {
            let t = (v - a.value) / (b.value - a.value);
            return [
                a.offsets[i][0] + t * (b.offsets[i][0] - a.offsets[i][0]),
                a.offsets[i][1] + t * (b.offsets[i][1] - a.offsets[i][1]),
            ];
        }
    }
    keys[keys.len() - 1].offsets[i]
}

/// Per-vertex reference evaluator in model list order.
pub fn naive_pose(model: &CharacterModel, values: &ParamValues) -> Vec<Vec<[f64; 2]>> {
    let value_of = |id: &str| {
        let p = model.parameters.iter().find(|p| p.id == id).unwrap();
        values.get(id).copied().unwrap_or(p.default).clamp(p.min, p.max)
    };
    model
        .layers
        .iter()
        .map(|layer| {
            (0..layer.mesh.vertices.len())
                .map(|i| {
                    let mut p = layer.mesh.vertices[i];
                    for d in model.deformers.iter().filter(|d| d.layer == layer.name) {
                        let o = lerp_keys(&d.keys, i, value_of(&d.parameter));
                        p[0] += o[0];
                        p[1] += o[1];
                    }
                    for b in model.blendshapes.iter().filter(|b| b.layer == layer.name) {
                        let w = values
                            .get(&b.name)
                            .copied()
                            .or_else(|| model.parameters.iter().any(|p| p.id == b.name).then(|| value_of(&b.name)))
                            .unwrap_or(0.0)
                            .clamp(0.0, 1.0);
                        p[0] += w * b.offsets[i][0];
                        p[1] += w * b.offsets[i][1];
                    }
                    p
                })
                .collect()
        })
        .collect()
}

fn small_f(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    // Mix of "nice" and arbitrary binary fractions to exercise float output.
    if rng.random_bool(0.3) {
        (rng.random_range(-40..=40) as f64) / 4.0
    } else {
        (rng.random::<f64>() - 0.5) * scale
    }
}

/// Random valid model: a few grid layers with deformers on the standard
/// parameters and optional blendshapes.
pub fn random_model(seed: u64) -> CharacterModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parameters = standard_parameters();
    let n_layers = rng.random_range(1..=4);
    let mut layers = Vec::new();
    let mut deformers = Vec::new();
    let mut blendshapes = Vec::new();
    for li in 0..n_layers {
        let x0 = rng.random_range(0..40) as f64;
        let y0 = rng.random_range(0..40) as f64;
        let mesh = Mesh::grid(x0, y0, x0 + rng.random_range(4..24) as f64, y0 + rng.random_range(4..24) as f64, rng.random_range(1..4), rng.random_range(1..4));
        let n = mesh.vertices.len();
        let name = format!("layer{li}");
        let (tw, th) = (rng.random_range(1..6), rng.random_range(1..6));
        layers.push(Layer {
            name: name.clone(),
            z: li * 3 - 2,
            mesh,
            texture: Arc::new(random_image(&mut rng, tw, th)),
            opacity: [1.0, 0.5, 0.25][rng.random_range(0..3)],
            slot: rng.random_bool(0.5).then(|| "top".to_string()),
        });
        for p in &parameters {
            if !rng.random_bool(0.4) {
                continue;
            }
            let mut values = vec![p.default];
            for _ in 0..rng.random_range(1..3) {
                let v = p.min + (p.max - p.min) * rng.random::<f64>();
                if !values.contains(&v) {
                    values.push(v);
                }
            }
            values.sort_by(f64::total_cmp);
            let keys = values
                .into_iter()
                .map(|v| Keyform {
                    value: v,
                    offsets: if v == p.default {
                        vec![[0.0, 0.0]; n]
                    } else {
                        (0..n).map(|_| [small_f(&mut rng, 20.0), small_f(&mut rng, 20.0)]).collect()
                    },
                })
                .collect();
            deformers.push(Deformer { layer: name.clone(), parameter: p.id.clone(), keys });
        }
        for bname in ["MouthPucker", "MouthFunnel", "Wink"] {
            if rng.random_bool(0.3) {
                blendshapes.push(Blendshape {
                    name: bname.into(),
                    layer: name.clone(),
                    offsets: (0..n).map(|_| [small_f(&mut rng, 10.0), small_f(&mut rng, 10.0)]).collect(),
                });
            }
        }
    }
    let model = CharacterModel { canvas_size: (64, 64), layers, parameters, deformers, blendshapes, generation: None };
    model.validate().unwrap();
    model
}

pub fn random_clip(seed: u64) -> AnimationClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = standard_parameters();
    let duration = rng.random_range(0..40) as f64 / 8.0 + rng.random::<f64>();
    let mut tracks = Vec::new();
    for p in &params {
        if !rng.random_bool(0.6) {
            continue;
        }
        let mut times: Vec<f64> = (0..rng.random_range(0..6)).map(|_| rng.random::<f64>() * duration).collect();
        times.sort_by(f64::total_cmp);
        let interpolation = if rng.random_bool(0.5) { Interpolation::Linear } else { Interpolation::Hold };
        let keyframes = times.into_iter().map(|t| (t, p.min + (p.max - p.min) * rng.random::<f64>())).collect();
        tracks.push(Track { parameter: p.id.clone(), interpolation, keyframes });
    }
    AnimationClip { duration, tracks }
}

pub fn default_model() -> &'static CharacterModel {
    use std::sync::OnceLock;
    use toonforge_core::{assemble::assemble_model, catalog, composer, paint};
    static MODEL: OnceLock<CharacterModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let cat = catalog::load_catalog(&toonforge_core::default_data_dir().join("catalog")).unwrap();
        let sheet = composer::compose_template(&catalog::default_selection(&cat, None), &cat).unwrap();
        let app = paint::synthesize_appearance(&sheet, &paint::StyleSpec::default(), 0).unwrap();
        let textures: Vec<RasterImage> = app.layers.into_iter().map(|(_, t)| t).collect();
        assemble_model(&sheet, &textures, None).unwrap()
    })
}

fn random_values(rng: &mut ChaCha8Rng, model: &CharacterModel) -> ParamValues {
    let mut v = ParamValues::new();
    for p in &model.parameters {
        if rng.random_bool(0.7) {
            // Occasionally out of range to exercise clamping.
            let span = p.max - p.min;
            v.insert(p.id.clone(), p.min - 0.2 * span + 1.4 * span * rng.random::<f64>());
        }
    }
    v
}

// ---- rig checks, shared with the acceptance runner ----

use toonforge_core::rig::{apply_parameters, map_arkit_mouth, ArkitFrame};

/// Defaults plus zero blendshape weights reproduce rest vertices bitwise.
pub fn check_rest_identity() -> Result<(), String> {
    let mut models: Vec<CharacterModel> = (0..20).map(random_model).collect();
    models.push(default_model().clone());
    for (i, m) in models.iter().enumerate() {
        let posed = apply_parameters(m, &m.default_values()).map_err(|e| e.to_string())?;
        for (l, p) in m.layers.iter().zip(&posed.layers) {
            let same = l.mesh.vertices.iter().zip(&p.vertices).all(|(a, b)| a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits());
            if !same {
                return Err(format!("model {i} layer {} moved at rest", l.name));
            }
        }
    }
    Ok(())
}

/// Between two adjacent keys a single parameter moves each vertex along a
/// line: three values give collinear points (cross product within tol).
pub fn check_collinearity(tol: f64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut models: Vec<CharacterModel> = (0..20).map(random_model).collect();
    models.push(default_model().clone());
    for (mi, m) in models.iter().enumerate() {
        for d in &m.deformers {
            for pair in d.keys.windows(2) {
                let (a, b) = (pair[0].value, pair[1].value);
                let mut ts: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                ts.sort_by(f64::total_cmp);
                let posed: Vec<_> = ts
                    .iter()
                    .map(|t| {
                        let mut v = m.default_values();
                        v.insert(d.parameter.clone(), a + (b - a) * t);
                        apply_parameters(m, &v).unwrap()
                    })
                    .collect();
                let li = m.layers.iter().position(|l| l.name == d.layer).unwrap();
                for k in 0..m.layers[li].mesh.vertices.len() {
                    let [p1, p2, p3] = [0, 1, 2].map(|j| posed[j].layers[li].vertices[k]);
                    let cross = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p2[1] - p1[1]) * (p3[0] - p1[0]);
                    if cross.abs() > tol {
                        return Err(format!("model {mi} {}:{} vertex {k}: cross {cross:e}", d.layer, d.parameter));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reordering deformers and blendshapes in the model changes nothing.
pub fn check_order_independence() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..30 {
        let m = random_model(seed);
        let mut shuffled = m.clone();
        use rand::seq::SliceRandom;
        shuffled.deformers.shuffle(&mut rng);
        shuffled.blendshapes.shuffle(&mut rng);
        shuffled.parameters.shuffle(&mut rng);
        let v = random_values(&mut rng, &m);
        if apply_parameters(&m, &v).unwrap() != apply_parameters(&shuffled, &v).unwrap() {
            return Err(format!("model {seed} pose depends on list order"));
        }
    }
    Ok(())
}

/// Posing agrees with the naive evaluator.
pub fn check_naive_evaluator(tol: f64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 0..50 {
        let m = random_model(seed);
        for _ in 0..5 {
            let v = random_values(&mut rng, &m);
            let got = apply_parameters(&m, &v).map_err(|e| e.to_string())?;
            let want = naive_pose(&m, &v);
            for (gl, wl) in got.layers.iter().zip(&want) {
                for (g, w) in gl.vertices.iter().zip(wl) {
                    if (g[0] - w[0]).abs() > tol || (g[1] - w[1]).abs() > tol {
                        return Err(format!("model {seed} layer {}: {g:?} vs {w:?}", gl.name));
                    }
                }
            }
        }
    }
    Ok(())
}

/// The mouth mapping table. Each row: coefficient settings, expected values
/// in MOUTH_PARAMS order.
pub fn arkit_table() -> Vec<(Vec<(&'static str, f64)>, [f64; 6])> {
    vec![
        (vec![], [0.0; 6]),
        (vec![("jawOpen", 1.0)], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        (
            vec![("mouthSmileLeft", 0.6), ("mouthSmileRight", 0.6), ("mouthFrownLeft", 0.1), ("mouthFrownRight", 0.1)],
            [0.0, 0.5, 0.0, 0.0, 0.0, 0.0],
        ),
        (vec![("mouthFrownLeft", 1.0), ("mouthFrownRight", 1.0)], [0.0, -1.0, 0.0, 0.0, 0.0, 0.0]),
        (vec![("mouthSmileLeft", 1.0)], [0.0, 0.5, 0.0, 0.0, 0.0, 0.0]),
        (vec![("mouthPucker", 0.3), ("mouthFunnel", 0.7)], [0.0, 0.0, 0.3, 0.7, 0.0, 0.0]),
        (vec![("mouthPressLeft", 0.2), ("mouthPressRight", 0.6)], [0.0, 0.0, 0.0, 0.0, 0.4, 0.0]),
        (vec![("mouthLeft", 0.9), ("mouthRight", 0.2)], [0.0, 0.0, 0.0, 0.0, 0.0, 0.7]),
        (vec![("mouthRight", 1.0)], [0.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
        // Coefficients outside the mouth map are ignored.
        (vec![("eyeBlinkLeft", 1.0), ("browInnerUp", 0.8), ("tongueOut", 1.0)], [0.0; 6]),
    ]
}

pub fn check_arkit_table(tol: f64) -> Result<(), String> {
    for (i, (coeffs, want)) in arkit_table().into_iter().enumerate() {
        let mut frame = ArkitFrame::rest(0.0);
        for (n, v) in &coeffs {
            frame.set(n, *v);
        }
        let got = map_arkit_mouth(&frame);
        for (p, w) in toonforge_core::rig::MOUTH_PARAMS.iter().zip(want) {
            let g = got[*p];
            if (g - w).abs() > tol {
                return Err(format!("row {i} {p}: {g} != {w}"));
            }
        }
    }
    Ok(())
}

/// MouthOpenY follows jawOpen monotonically, and so does the lowest mouth
/// vertex of the default character.
pub fn check_jaw_monotone() -> Result<(), String> {
    let m = default_model();
    let li = m.layers.iter().position(|l| l.name == "mouth").ok_or("no mouth layer")?;
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..=100 {
        let jaw = k as f64 / 100.0;
        let values = map_arkit_mouth(&ArkitFrame::rest(0.0).with("jawOpen", jaw));
        let open = values[toonforge_core::rig::MOUTH_OPEN_Y];
        let posed = apply_parameters(m, &values).map_err(|e| e.to_string())?;
        let low = posed.layers[li].vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
        if open < prev.0 || low < prev.1 {
            return Err(format!("not monotone at jawOpen={jaw}"));
        }
        prev = (open, low);
    }
    if prev.1 <= apply_parameters(m, &m.default_values()).unwrap().layers[li].vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max) {
        return Err("mouth never opens".into());
    }
    Ok(())
}

// ---- raster checks ----

use toonforge_core::raster::{rasterize, render_frame, RenderOptions};
use toonforge_core::rig::{PosedLayer, PosedModel};

fn solid_layer(z: i32, vertices: Vec<[f64; 2]>, triangles: Vec<[u32; 3]>, color: [u8; 4]) -> PosedLayer {
    PosedLayer {
        name: format!("l{z}"),
        z,
        uvs: vec![[0.5, 0.5]; vertices.len()],
        vertices,
        triangles,
        texture: Arc::new(RasterImage::filled(1, 1, color)),
        opacity: 1.0,
    }
}

fn painted(img: &RasterImage, bg: [u8; 4]) -> Vec<bool> {
    (0..img.width() as usize * img.height() as usize).map(|i| img.get_index(i) != bg).collect()
}

/// One right triangle covering x + y < w: painted count equals the number
/// of pixel centers strictly inside, w(w-1)/2.
pub fn check_half_plane() -> Result<(), String> {
    let bg = [0, 0, 0, 0];
    for w in [1u32, 2, 3, 7, 16, 33, 100, 257] {
        let wf = w as f64;
        let posed = PosedModel {
            canvas_size: (w, w),
            layers: vec![solid_layer(0, vec![[0.0, 0.0], [wf, 0.0], [0.0, wf]], vec![[0, 1, 2]], [255, 0, 0, 255])],
        };
        let img = rasterize(&posed, (w, w), bg).map_err(|e| e.to_string())?;
        let got = painted(&img, bg).iter().filter(|p| **p).count() as u64;
        // Centers (x + 0.5, y + 0.5) with x + y + 1 < w.
        let mut want = 0u64;
        for y in 0..w as u64 {
            for x in 0..w as u64 {
                if x + y + 1 < w as u64 {
                    want += 1;
                }
            }
        }
        if got != want || want != (w as u64) * (w as u64 - 1) / 2 {
            return Err(format!("w={w}: painted {got}, expected {want}"));
        }
    }
    Ok(())
}

/// A quad split along either diagonal covers exactly the pixel centers of
/// its rectangle, each once: drawn at half opacity, a double hit would show
/// as a darker pixel.
pub fn check_watertight() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let bg = [255, 255, 255, 255];
    for case in 0..200 {
        let pts: Vec<f64> = (0..4).map(|_| rng.random_range(0..64 * 40) as f64 / 64.0).collect();
        let (x0, x1) = (pts[0].min(pts[1]), pts[0].max(pts[1]));
        let (y0, y1) = (pts[2].min(pts[3]), pts[2].max(pts[3]));
        let verts = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
        for tris in [vec![[0, 1, 2], [0, 2, 3]], vec![[0, 1, 3], [1, 2, 3]]] {
            let mut layer = solid_layer(0, verts.clone(), tris, [0, 0, 0, 255]);
            layer.opacity = 0.5;
            let img = rasterize(&PosedModel { canvas_size: (40, 40), layers: vec![layer] }, (40, 40), bg).map_err(|e| e.to_string())?;
            for y in 0..40u32 {
                for x in 0..40u32 {
                    let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                    let inside = cx >= x0 && cx < x1 && cy >= y0 && cy < y1;
                    let want = if inside { [128, 128, 128, 255] } else { bg };
                    if img.get(x, y) != want {
                        return Err(format!("case {case} pixel ({x},{y}): {:?} want {want:?}", img.get(x, y)));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn golden_dir() -> std::path::PathBuf {
    // Anchored on the core crate so other crates including this file agree.
    let data = toonforge_core::default_data_dir();
    data.parent().expect("data dir has a parent").join("crates/core/tests/golden")
}

/// The pinned golden frames: name and rendered image.
pub fn golden_frames() -> Vec<(&'static str, RasterImage)> {
    let m = default_model();
    let small = RenderOptions { viewport: Some((256, 256)), background: [255, 255, 255, 255] };
    let posed_values = ParamValues::from([
        ("MouthOpenY".to_string(), 1.0),
        ("MouthForm".to_string(), 1.0),
        ("AngleX".to_string(), 20.0),
        ("EyeOpen".to_string(), 0.0),
    ]);
    let synthetic = random_model(3);
    let mut sv = ParamValues::new();
    for p in &synthetic.parameters {
        sv.insert(p.id.clone(), (p.min + p.max) / 2.0 + 0.1 * (p.max - p.min));
    }
    let clear = RenderOptions { viewport: Some((96, 80)), background: [0, 0, 0, 0] };
    vec![
        ("default_rest", render_frame(m, &m.default_values(), &small).unwrap()),
        ("default_posed", render_frame(m, &posed_values, &small).unwrap()),
        ("synthetic", render_frame(&synthetic, &sv, &clear).unwrap()),
    ]
}

/// Compare rendered goldens to the stored PNGs by decoded pixels. With
/// `update`, rewrite the stored files instead.
pub fn check_goldens(update: bool) -> Result<(), String> {
    let dir = golden_dir();
    for (name, img) in golden_frames() {
        let path = dir.join(format!("{name}.png"));
        if update {
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            img.save_png(&path).map_err(|e| e.to_string())?;
            continue;
        }
        let stored = RasterImage::load_png(&path).map_err(|e| format!("{name}: {e}"))?;
        if stored != img {
            let diff = stored.as_raw().iter().zip(img.as_raw()).filter(|(a, b)| a != b).count();
            return Err(format!("{name}: {diff} bytes differ"));
        }
    }
    Ok(())
}

// ---- serialization checks ----

use toonforge_core::modelio::{load_clip, load_model, save_clip, save_model, Bundle};

/// save, load, save: every file of the second bundle matches the first.
pub fn check_model_round_trips(n: u64) -> Result<(), String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    for seed in 0..n {
        let m = random_model(1000 + seed);
        let (a, b) = (root.path().join(format!("a{seed}")), root.path().join(format!("b{seed}")));
        save_model(&m, &a).map_err(|e| e.to_string())?;
        let loaded = load_model(&a).map_err(|e| e.to_string())?;
        if loaded != m {
            return Err(format!("model {seed}: load differs from saved value"));
        }
        save_model(&loaded, &b).map_err(|e| e.to_string())?;
        let (ba, bb) = (Bundle::read_from(&a).map_err(|e| e.to_string())?, Bundle::read_from(&b).map_err(|e| e.to_string())?);
        if ba != bb {
            return Err(format!("model {seed}: second save differs"));
        }
    }
    Ok(())
}

pub fn check_clip_round_trips(n: u64) -> Result<(), String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let params = toonforge_core::rig::standard_parameters();
    for seed in 0..n {
        let clip = random_clip(2000 + seed);
        let (a, b) = (root.path().join(format!("a{seed}.json")), root.path().join(format!("b{seed}.json")));
        save_clip(&clip, &a).map_err(|e| e.to_string())?;
        let loaded = load_clip(&a, Some(&params)).map_err(|e| e.to_string())?;
        if loaded != clip {
            return Err(format!("clip {seed}: load differs from saved value"));
        }
        save_clip(&loaded, &b).map_err(|e| e.to_string())?;
        if std::fs::read(&a).ok() != std::fs::read(&b).ok() {
            return Err(format!("clip {seed}: second save differs"));
        }
    }
    Ok(())
}

// ---- catalog and lexicon fixtures ----

use toonforge_core::catalog::ComponentCatalog;
use toonforge_core::textparse::Lexicon;

pub fn catalog() -> &'static ComponentCatalog {
    static CAT: std::sync::OnceLock<ComponentCatalog> = std::sync::OnceLock::new();
    CAT.get_or_init(|| toonforge_core::catalog::load_catalog(&toonforge_core::default_data_dir().join("catalog")).unwrap())
}

pub fn lexicon() -> &'static Lexicon {
    static LEX: std::sync::OnceLock<Lexicon> = std::sync::OnceLock::new();
    LEX.get_or_init(|| Lexicon::load(&toonforge_core::default_data_dir().join("lexicon.txt")).unwrap())
}

// ---- repair checks ----

use toonforge_core::paint::{repair_occlusion, PaintError, RepairOptions};

/// Random 16x16 instances against the oracle; returns the number of
/// mismatching pixels over all instances.
pub fn repair_mismatches(instances: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for case in 0..instances {
        let img = random_image(&mut rng, 16, 16);
        let mask = random_mask(&mut rng, 16, 16, 0.7);
        let occ = random_mask(&mut rng, 16, 16, 0.5);
        let got = repair_occlusion(&img, &mask, &occ, RepairOptions::default());
        match (got, repair_oracle(&img, &mask, &occ)) {
            (Ok(g), Some(w)) => bad += (0..256).filter(|&i| g.get_index(i) != w.get_index(i)).count(),
            (Err(PaintError::FullyOccluded), None) => {}
            (g, w) => return Err(format!("case {case}: got {:?}, oracle {}", g.err(), w.is_some())),
        }
    }
    Ok(bad)
}

/// Two components separated by a gap column, each with one visible edge:
/// every filled pixel takes its own island's color.
pub fn check_two_islands() -> Result<(), String> {
    let mut img = RasterImage::filled(16, 4, [9, 9, 9, 255]);
    for y in 0..4 {
        img.put(0, y, [255, 0, 0, 255]);
        img.put(15, y, [0, 0, 255, 255]);
    }
    let mask = Mask::from_fn(16, 4, |x, _| x != 8);
    let occ = Mask::from_fn(16, 4, |x, _| x != 0 && x != 15);
    let out = repair_occlusion(&img, &mask, &occ, RepairOptions::default()).map_err(|e| e.to_string())?;
    for y in 0..4 {
        for x in 0..16 {
            let want = match x {
                0..8 => [255, 0, 0, 255],
                8 => [9, 9, 9, 255],
                _ => [0, 0, 255, 255],
            };
            if out.get(x, y) != want {
                return Err(format!("pixel ({x},{y}) is {:?}, want {want:?}", out.get(x, y)));
            }
        }
    }
    Ok(())
}
