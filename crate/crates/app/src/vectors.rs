//! Golden posing vectors for checking other implementations of the rig
//! math (the browser viewer) against this one.

use std::collections::BTreeMap;

use serde::Serialize;
use toonforge_core::rig::{apply_parameters, viseme_params, CharacterModel, ParamValues, RigError, VisemeTimeline};

pub const VECTORS_VERSION: u32 = 1;

/// Timeline sampled for the viseme section; covers overlapping fades.
pub const SAMPLE_TIMELINE: &str = "0.1 A 1\n0.4 I 0.8\n0.43 U 1\n0.7 M 1\n0.75 E 0.5\n1.0 O 1\n1.3 sil 1\n";

#[derive(Debug, Serialize)]
pub struct PoseCase {
    pub values: ParamValues,
    /// Layer name -> posed vertices.
    pub layers: BTreeMap<String, Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
pub struct VisemeSample {
    pub t: f64,
    pub values: ParamValues,
}

#[derive(Debug, Serialize)]
pub struct GoldenVectors {
    pub format_version: u32,
    pub poses: Vec<PoseCase>,
    pub timeline: String,
    pub viseme_samples: Vec<VisemeSample>,
}

fn value_sets(model: &CharacterModel) -> Vec<ParamValues> {
    let mut sets = vec![ParamValues::new()];
    for p in &model.parameters {
        for v in [p.min, (p.min + p.default) / 2.0, p.max, p.max + (p.max - p.min)] {
            sets.push(ParamValues::from([(p.id.clone(), v)]));
        }
    }
    // Every parameter at a quarter of its range at once.
    sets.push(model.parameters.iter().map(|p| (p.id.clone(), p.min + 0.25 * (p.max - p.min))).collect());
    sets.push(model.parameters.iter().map(|p| (p.id.clone(), p.min + 0.8 * (p.max - p.min))).collect());
    sets
}

pub fn golden_vectors(model: &CharacterModel) -> Result<GoldenVectors, RigError> {
    let mut poses = Vec::new();
    for values in value_sets(model) {
        let posed = apply_parameters(model, &values)?;
        let layers = posed.layers.into_iter().map(|l| (l.name, l.vertices)).collect();
        poses.push(PoseCase { values, layers });
    }
    let tl = VisemeTimeline::parse(SAMPLE_TIMELINE)?;
    let viseme_samples = (0..=80)
        .map(|k| {
            let t = k as f64 * 0.02;
            VisemeSample { t, values: viseme_params(&tl, t) }
        })
        .collect();
    Ok(GoldenVectors { format_version: VECTORS_VERSION, poses, timeline: tl.to_text(), viseme_samples })
}
