//! ARKit face blendshape frames and their mapping onto the mouth parameters.

use std::io::Read;

use super::clip::{AnimationClip, Interpolation, Track};
use super::{ParamValues, RigError, MOUTH_FORM, MOUTH_FUNNEL, MOUTH_OPEN_Y, MOUTH_PARAMS, MOUTH_PRESS, MOUTH_PUCKER, MOUTH_X};

/// The 52 ARKit face blendshape names in canonical (alphabetical) order.
pub const ARKIT_NAMES: [&str; 52] = [
    "browDownLeft",
    "browDownRight",
    "browInnerUp",
    "browOuterUpLeft",
    "browOuterUpRight",
    "cheekPuff",
    "cheekSquintLeft",
    "cheekSquintRight",
    "eyeBlinkLeft",
    "eyeBlinkRight",
    "eyeLookDownLeft",
    "eyeLookDownRight",
    "eyeLookInLeft",
    "eyeLookInRight",
    "eyeLookOutLeft",
    "eyeLookOutRight",
    "eyeLookUpLeft",
    "eyeLookUpRight",
    "eyeSquintLeft",
    "eyeSquintRight",
    "eyeWideLeft",
    "eyeWideRight",
    "jawForward",
    "jawLeft",
    "jawOpen",
    "jawRight",
    "mouthClose",
    "mouthDimpleLeft",
    "mouthDimpleRight",
    "mouthFrownLeft",
    "mouthFrownRight",
    "mouthFunnel",
    "mouthLeft",
    "mouthLowerDownLeft",
    "mouthLowerDownRight",
    "mouthPressLeft",
    "mouthPressRight",
    "mouthPucker",
    "mouthRight",
    "mouthRollLower",
    "mouthRollUpper",
    "mouthShrugLower",
    "mouthShrugUpper",
    "mouthSmileLeft",
    "mouthSmileRight",
    "mouthStretchLeft",
    "mouthStretchRight",
    "mouthUpperUpLeft",
    "mouthUpperUpRight",
    "noseSneerLeft",
    "noseSneerRight",
    "tongueOut",
];

pub fn arkit_index(name: &str) -> Option<usize> {
    ARKIT_NAMES.binary_search(&name).ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArkitFrame {
    pub t: f64,
    coefficients: [f64; 52],
}

impl ArkitFrame {
    /// All coefficients zero (rest face).
    pub fn rest(t: f64) -> ArkitFrame {
        ArkitFrame { t, coefficients: [0.0; 52] }
    }

    /// Values are clamped to [0, 1]; NaN becomes 0.
    pub fn new(t: f64, coefficients: [f64; 52]) -> ArkitFrame {
        let mut f = ArkitFrame { t, coefficients: [0.0; 52] };
        for (i, c) in coefficients.into_iter().enumerate() {
            f.coefficients[i] = clamp01(c);
        }
        f
    }

    pub fn with(mut self, name: &str, value: f64) -> ArkitFrame {
        self.set(name, value);
        self
    }

    /// Panics on an unknown name.
    pub fn set(&mut self, name: &str, value: f64) {
        let i = arkit_index(name).unwrap_or_else(|| panic!("unknown ARKit blendshape {name}"));
        self.coefficients[i] = clamp01(value);
    }

    pub fn get(&self, name: &str) -> f64 {
        arkit_index(name).map_or(0.0, |i| self.coefficients[i])
    }

    pub fn coefficients(&self) -> &[f64; 52] {
        &self.coefficients
    }
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// ARKit coefficients -> canonical mouth parameters. Coefficients other than
/// jaw open, smile, frown, pucker, funnel, press and mouth left/right do not
/// affect the mouth.
pub fn map_arkit_mouth(frame: &ArkitFrame) -> ParamValues {
    let c = |n: &str| frame.get(n);
    let form = (c("mouthSmileLeft") + c("mouthSmileRight")) / 2.0 - (c("mouthFrownLeft") + c("mouthFrownRight")) / 2.0;
    ParamValues::from([
        (MOUTH_OPEN_Y.to_string(), c("jawOpen")),
        (MOUTH_FORM.to_string(), form.clamp(-1.0, 1.0)),
        (MOUTH_PUCKER.to_string(), c("mouthPucker")),
        (MOUTH_FUNNEL.to_string(), c("mouthFunnel")),
        (MOUTH_PRESS.to_string(), (c("mouthPressLeft") + c("mouthPressRight")) / 2.0),
        (MOUTH_X.to_string(), (c("mouthLeft") - c("mouthRight")).clamp(-1.0, 1.0)),
    ])
}

/// One linear keyframe per frame per mouth parameter.
pub fn coefficients_to_clip(frames: &[ArkitFrame]) -> Result<AnimationClip, RigError> {
    if let Some(i) = frames.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(RigError::UnsortedFrames(i + 1));
    }
    let mapped: Vec<(f64, ParamValues)> = frames.iter().map(|f| (f.t, map_arkit_mouth(f))).collect();
    let tracks = MOUTH_PARAMS
        .iter()
        .map(|p| Track {
            parameter: p.to_string(),
            interpolation: Interpolation::Linear,
            keyframes: mapped.iter().map(|(t, v)| (*t, v[*p])).collect(),
        })
        .collect();
    Ok(AnimationClip { duration: frames.last().map_or(0.0, |f| f.t), tracks })
}

/// Parse a coefficient CSV: header `timestamp` followed by the 52 ARKit
/// names (any order), one frame per row.
pub fn read_arkit_csv<R: Read>(r: R) -> Result<Vec<ArkitFrame>, RigError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(|e| RigError::Arkit(e.to_string()))?.clone();
    if header.get(0) != Some("timestamp") {
        return Err(RigError::Arkit("first column must be \"timestamp\"".into()));
    }
    let mut columns = Vec::new();
    for name in header.iter().skip(1) {
        let idx = arkit_index(name).ok_or_else(|| RigError::Arkit(format!("unknown blendshape column {name}")))?;
        if columns.contains(&idx) {
            return Err(RigError::Arkit(format!("duplicate column {name}")));
        }
        columns.push(idx);
    }
    if columns.len() != 52 {
        return Err(RigError::Arkit(format!("expected 52 blendshape columns, found {}", columns.len())));
    }
    let mut frames = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| RigError::Arkit(e.to_string()))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| RigError::Arkit(format!("row {}: bad number {s:?}", row + 1)));
        let t = num(rec.get(0).unwrap_or(""))?;
        let mut coeffs = [0.0; 52];
        for (col, &idx) in columns.iter().enumerate() {
            coeffs[idx] = num(rec.get(col + 1).unwrap_or(""))?;
        }
        frames.push(ArkitFrame::new(t, coeffs));
    }
    Ok(frames)
}

pub fn write_arkit_csv(frames: &[ArkitFrame]) -> String {
    let mut out = String::from("timestamp");
    for n in ARKIT_NAMES {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for f in frames {
        out.push_str(&f.t.to_string());
        for c in f.coefficients() {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}
