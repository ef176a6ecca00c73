use serde::{Deserialize, Serialize};

use super::{ParamValues, Parameter, RigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub parameter: String,
    pub interpolation: Interpolation,
    /// `(t, value)` pairs with non-decreasing t.
    pub keyframes: Vec<(f64, f64)>,
}

impl Track {
    pub fn sample(&self, t: f64) -> Option<f64> {
        let kf = &self.keyframes;
        let (first, last) = (kf.first()?, kf.last()?);
        if t <= first.0 {
            return Some(first.1);
        }
        if t >= last.0 {
            return Some(last.1);
        }
        // First keyframe strictly after t; the one before it is at or before t.
        let hi = kf.partition_point(|k| k.0 <= t);
        let (a, b) = (kf[hi - 1], kf[hi]);
        Some(match self.interpolation {
            Interpolation::Hold => a.1,
            Interpolation::Linear => {
                if t == a.0 {
                    a.1
                } else {
                    a.1 + (b.1 - a.1) * ((t - a.0) / (b.0 - a.0))
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimationClip {
    pub duration: f64,
    pub tracks: Vec<Track>,
}

impl AnimationClip {
    /// Structural checks; with `params`, track ids must exist and keyframe
    /// values must lie in the parameter's range.
    pub fn validate(&self, params: Option<&[Parameter]>) -> Result<(), RigError> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(RigError::Clip(format!("invalid duration {}", self.duration)));
        }
        for tr in &self.tracks {
            if tr.keyframes.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                return Err(RigError::Clip(format!("track {}: non-finite keyframe", tr.parameter)));
            }
            if tr.keyframes.windows(2).any(|w| w[1].0 < w[0].0) {
                return Err(RigError::Clip(format!("track {}: keyframe times decrease", tr.parameter)));
            }
            if let Some(params) = params {
                let p = params
                    .iter()
                    .find(|p| p.id == tr.parameter)
                    .ok_or_else(|| RigError::Clip(format!("unknown parameter {}", tr.parameter)))?;
                if let Some((t, v)) = tr.keyframes.iter().find(|(_, v)| *v < p.min || *v > p.max) {
                    return Err(RigError::Clip(format!(
                        "track {}: value {v} at t={t} outside [{}, {}]",
                        tr.parameter, p.min, p.max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parameter values at time `t`: each track interpolates between its
/// surrounding keyframes and clamps outside its first/last keyframe.
pub fn sample_clip(clip: &AnimationClip, t: f64) -> ParamValues {
    clip.tracks
        .iter()
        .filter_map(|tr| tr.sample(t).map(|v| (tr.parameter.clone(), v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(interp: Interpolation) -> AnimationClip {
        AnimationClip {
            duration: 2.0,
            tracks: vec![Track { parameter: "P".into(), interpolation: interp, keyframes: vec![(0.0, 0.0), (2.0, 1.0)] }],
        }
    }

    #[test]
    fn linear_midpoint() {
        assert_eq!(sample_clip(&clip(Interpolation::Linear), 1.0)["P"], 0.5);
    }

    #[test]
    fn hold_keeps_previous_value() {
        assert_eq!(sample_clip(&clip(Interpolation::Hold), 1.99)["P"], 0.0);
        assert_eq!(sample_clip(&clip(Interpolation::Hold), 2.0)["P"], 1.0);
    }

    #[test]
    fn clamps_outside_keyframes() {
        let c = clip(Interpolation::Linear);
        assert_eq!(sample_clip(&c, 5.0)["P"], 1.0);
        let mut late = c.clone();
        late.tracks[0].keyframes[0].0 = 0.5;
        assert_eq!(sample_clip(&late, 0.1)["P"], 0.0);
    }

    #[test]
    fn exact_keyframe_times_return_stored_values() {
        let c = AnimationClip {
            duration: 0.3,
            tracks: vec![Track {
                parameter: "P".into(),
                interpolation: Interpolation::Linear,
                keyframes: vec![(0.0, 0.1), (0.1, 0.7), (0.3, 0.2)],
            }],
        };
        assert_eq!(sample_clip(&c, 0.1)["P"], 0.7);
        assert_eq!(sample_clip(&c, 0.3)["P"], 0.2);
    }

    #[test]
    fn empty_track_samples_nothing() {
        let c = AnimationClip { duration: 1.0, tracks: vec![Track { parameter: "P".into(), interpolation: Interpolation::Linear, keyframes: vec![] }] };
        assert!(sample_clip(&c, 0.5).is_empty());
        c.validate(None).unwrap();
    }

    #[test]
    fn validate_rejects_out_of_range_and_unsorted() {
        let params = [Parameter::new("P", 0.0, 1.0, 0.0)];
        let mut c = clip(Interpolation::Linear);
        c.validate(Some(&params)).unwrap();
        c.tracks[0].keyframes[1].1 = 1.5;
        assert!(c.validate(Some(&params)).is_err());
        let mut c = clip(Interpolation::Linear);
        c.tracks[0].keyframes.reverse();
        assert!(c.validate(None).is_err());
    }
}
