//! Procedural lip-sync: a timeline of viseme events mapped through a fixed
//! table onto the mouth parameters, with a short linear cross-fade at each
//! event.

use std::fmt;
use std::str::FromStr;

use super::clip::{AnimationClip, Interpolation, Track};
use super::{ParamValues, RigError, MOUTH_PARAMS};

/// Cross-fade length in seconds.
pub const FADE: f64 = 0.06;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Viseme {
    A,
    I,
    U,
    E,
    O,
    /// Closed lips (M, B, P).
    M,
    F,
    Sil,
}

impl Viseme {
    pub const ALL: [Viseme; 8] = [Viseme::A, Viseme::I, Viseme::U, Viseme::E, Viseme::O, Viseme::M, Viseme::F, Viseme::Sil];

    /// Weights in `MOUTH_PARAMS` order.
    pub fn row(self) -> [f64; 6] {
        match self {
            Viseme::A => [0.9, 0.2, 0.0, 0.0, 0.0, 0.0],
            Viseme::I => [0.25, 0.6, 0.0, 0.0, 0.0, 0.0],
            Viseme::U => [0.3, -0.2, 0.8, 0.4, 0.0, 0.0],
            Viseme::E => [0.5, 0.4, 0.0, 0.0, 0.0, 0.0],
            Viseme::O => [0.7, -0.1, 0.3, 0.8, 0.0, 0.0],
            Viseme::M => [0.0, 0.0, 0.0, 0.0, 0.8, 0.0],
            Viseme::F => [0.15, 0.0, 0.0, 0.0, 0.5, 0.0],
            Viseme::Sil => [0.0; 6],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Viseme::A => "A",
            Viseme::I => "I",
            Viseme::U => "U",
            Viseme::E => "E",
            Viseme::O => "O",
            Viseme::M => "M",
            Viseme::F => "F",
            Viseme::Sil => "sil",
        }
    }
}

impl fmt::Display for Viseme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Viseme {
    type Err = RigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "a" => Viseme::A,
            "i" => Viseme::I,
            "u" => Viseme::U,
            "e" => Viseme::E,
            "o" => Viseme::O,
            "m" | "closed" => Viseme::M,
            "f" => Viseme::F,
            "sil" | "silence" => Viseme::Sil,
            _ => return Err(RigError::Timeline(format!("unknown viseme {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisemeEvent {
    pub t: f64,
    pub viseme: Viseme,
    pub weight: f64,
}

impl VisemeEvent {
    pub fn new(t: f64, viseme: Viseme, weight: f64) -> VisemeEvent {
        VisemeEvent { t, viseme, weight }
    }

    fn target(&self) -> [f64; 6] {
        self.viseme.row().map(|v| v * self.weight)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VisemeTimeline {
    events: Vec<VisemeEvent>,
}

impl VisemeTimeline {
    pub fn new(events: Vec<VisemeEvent>) -> Result<VisemeTimeline, RigError> {
        for (i, e) in events.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return Err(RigError::Timeline(format!("event {i}: invalid time {}", e.t)));
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(RigError::Timeline(format!("event {i}: weight {} outside [0, 1]", e.weight)));
            }
            if i > 0 && e.t < events[i - 1].t {
                return Err(RigError::Timeline(format!("event {i}: time decreases")));
            }
        }
        Ok(VisemeTimeline { events })
    }

    pub fn events(&self) -> &[VisemeEvent] {
        &self.events
    }

    /// Parse lines of `t viseme weight`. Blank lines and `#` comments are
    /// skipped; a missing weight means 1.
    pub fn parse(text: &str) -> Result<VisemeTimeline, RigError> {
        let mut events = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |m: &str| RigError::Timeline(format!("line {}: {m}", n + 1));
            if !(2..=3).contains(&fields.len()) {
                return Err(bad("expected \"t viseme weight\""));
            }
            let t: f64 = fields[0].parse().map_err(|_| bad("bad time"))?;
            let viseme: Viseme = fields[1].parse().map_err(|e: RigError| bad(&e.to_string()))?;
            let weight = match fields.get(2) {
                Some(w) => w.parse().map_err(|_| bad("bad weight"))?,
                None => 1.0,
            };
            events.push(VisemeEvent { t, viseme, weight });
        }
        VisemeTimeline::new(events)
    }

    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| format!("{} {} {}\n", e.t, e.viseme, e.weight)).collect()
    }

    /// Time at which the last fade has completed.
    pub fn end(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t + FADE)
    }

    /// Mouth values just before event `i` takes over.
    fn value_before(&self, i: usize) -> [f64; 6] {
        // Walk back to an event whose fade completed before its successor
        // started; from there the value is known exactly.
        let mut j = i;
        while j > 0 && self.events[j].t - self.events[j - 1].t < FADE {
            j -= 1;
        }
        let mut v = if j == 0 { [0.0; 6] } else { self.events[j - 1].target() };
        for k in j..i {
            v = fade(v, &self.events[k], self.events[k + 1].t);
        }
        v
    }

    fn value_at(&self, t: f64) -> [f64; 6] {
        let i = self.events.partition_point(|e| e.t <= t);
        if i == 0 {
            return [0.0; 6];
        }
        let i = i - 1;
        fade(self.value_before(i), &self.events[i], t)
    }
}

/// Blend from `start` toward the event's target, `t - e.t` seconds in.
fn fade(start: [f64; 6], e: &VisemeEvent, t: f64) -> [f64; 6] {
    let alpha = (t - e.t) / FADE;
    let target = e.target();
    if alpha >= 1.0 {
        return target;
    }
    let mut out = [0.0; 6];
    for k in 0..6 {
        out[k] = start[k] + (target[k] - start[k]) * alpha;
    }
    out
}

fn to_values(row: [f64; 6]) -> ParamValues {
    MOUTH_PARAMS.iter().zip(row).map(|(p, v)| (p.to_string(), v)).collect()
}

/// Mouth parameter values at time `t`. Before the first event the mouth is
/// at rest.
pub fn viseme_params(timeline: &VisemeTimeline, t: f64) -> ParamValues {
    to_values(timeline.value_at(t))
}

/// Equivalent linear clip. Between breakpoints (event starts and fade ends)
/// the timeline is linear, so keyframes at those times reproduce it.
pub fn timeline_to_clip(timeline: &VisemeTimeline) -> AnimationClip {
    let ev = timeline.events();
    let mut times = vec![0.0];
    for (i, e) in ev.iter().enumerate() {
        times.push(e.t);
        let next = ev.get(i + 1).map_or(f64::INFINITY, |n| n.t);
        if next - e.t > FADE {
            times.push(e.t + FADE);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let rows: Vec<(f64, [f64; 6])> = times
        .iter()
        .map(|&t| {
            // At an event time the track must hold the value the fade starts
            // from; the fade itself is continuous so value_at(t) is that value.
            (t, timeline.value_at(t))
        })
        .collect();
    let tracks = MOUTH_PARAMS
        .iter()
        .enumerate()
        .map(|(k, p)| Track {
            parameter: p.to_string(),
            interpolation: Interpolation::Linear,
            keyframes: rows.iter().map(|(t, r)| (*t, r[k])).collect(),
        })
        .collect();
    AnimationClip { duration: timeline.end(), tracks }
}
