//! Synthetic text/selection corpus and the accuracy harness.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::canonical;
use crate::catalog::ComponentCatalog;

use super::{parse_description, ColorTerm, LexEntry, Lexicon, ParsedDescription, TextParseError};

const OPENERS: [&str; 8] = [
    "a girl with",
    "a boy with",
    "a character with",
    "an anime girl wearing",
    "a young man in",
    "draw a character with",
    "a cartoon kid with",
    "a woman wearing",
];

/// Words the noisy generator may slip between a color and its form.
const ADJECTIVES: [&str; 6] = ["cute", "fluffy", "stylish", "neat", "lovely", "cozy"];

const P_SLOT: f64 = 0.7;
const P_COLOR: f64 = 0.5;
const P_EYES: f64 = 0.5;
const P_ATTRIBUTE: f64 = 0.3;
const P_ADJECTIVE: f64 = 0.2;
const MAX_DISTRACTORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPair {
    pub text: String,
    pub gold: ParsedDescription,
}

/// Per-slot choices: `(variant id, forms)`.
struct SlotPlan<'a> {
    slot: &'a str,
    variants: Vec<(&'a str, Vec<&'a LexEntry>)>,
}

struct Plan<'a> {
    slots: Vec<SlotPlan<'a>>,
    groups: &'a [Vec<String>],
    attributes: Vec<(&'a str, Vec<(&'a str, Vec<&'a LexEntry>)>)>,
    eye_colors: Vec<&'a ColorTerm>,
    colors: &'a [ColorTerm],
    distractors: &'a [String],
}

fn plan<'a>(catalog: &'a ComponentCatalog, lexicon: &'a Lexicon) -> Plan<'a> {
    let slots = catalog
        .slots
        .iter()
        .map(|s| SlotPlan {
            slot: &s.id,
            variants: catalog
                .variants_of(&s.id)
                .map(|v| (v.id.as_str(), lexicon.forms_for(&s.id, &v.id)))
                .filter(|(_, f)| !f.is_empty())
                .collect(),
        })
        .filter(|p| !p.variants.is_empty())
        .collect();
    let attributes = catalog
        .attribute_domains
        .iter()
        .filter(|(id, _)| id.as_str() != "eye_color")
        .map(|(id, domain)| {
            let values = domain
                .iter()
                .map(|v| (v.as_str(), lexicon.forms_for(id, v)))
                .filter(|(_, f)| !f.is_empty())
                .collect();
            (id.as_str(), values)
        })
        .collect();
    let eye_domain = catalog.attribute_domains.get("eye_color");
    let eye_colors = lexicon.colors.iter().filter(|c| eye_domain.is_some_and(|d| d.contains(&c.name()))).collect();
    Plan { slots, groups: &catalog.exclusive_groups, attributes, eye_colors, colors: &lexicon.colors, distractors: &lexicon.distractors }
}

fn pick_form<'a>(rng: &mut ChaCha8Rng, forms: &[&'a LexEntry], noise: bool) -> &'a LexEntry {
    if noise {
        forms.choose(rng).copied().unwrap_or(forms[0])
    } else {
        forms[0]
    }
}

fn clause(rng: &mut ChaCha8Rng, color: Option<&ColorTerm>, form: &LexEntry, noise: bool) -> String {
    let mut words: Vec<String> = Vec::new();
    if let Some(c) = color {
        words.push(c.name());
    }
    if noise && rng.random_bool(P_ADJECTIVE) {
        words.push(ADJECTIVES.choose(rng).copied().unwrap_or("cute").to_string());
    }
    words.push(form.form.join(" "));
    words.join(" ")
}

fn sample_pair(rng: &mut ChaCha8Rng, plan: &Plan<'_>, noise: bool) -> CorpusPair {
    loop {
        let mut gold = ParsedDescription::default();
        let mut clauses: Vec<String> = Vec::new();

        // One decision per exclusive group: include a garment, then which.
        let mut group_pick: BTreeMap<usize, Option<String>> = BTreeMap::new();
        for (gi, g) in plan.groups.iter().enumerate() {
            let chosen = rng.random_bool(P_SLOT).then(|| g[rng.random_range(0..g.len())].clone());
            group_pick.insert(gi, chosen);
        }
        for sp in &plan.slots {
            let include = match plan.groups.iter().position(|g| g.iter().any(|s| s == sp.slot)) {
                Some(gi) => group_pick[&gi].as_deref() == Some(sp.slot),
                None => rng.random_bool(P_SLOT),
            };
            if !include {
                continue;
            }
            let (variant, forms) = &sp.variants[rng.random_range(0..sp.variants.len())];
            let form = pick_form(rng, forms, noise);
            let color = rng.random_bool(P_COLOR).then(|| &plan.colors[rng.random_range(0..plan.colors.len())]);
            gold.selection.insert(sp.slot.to_string(), variant.to_string());
            if let Some(c) = color {
                gold.colors.insert(sp.slot.to_string(), c.rgb);
            }
            clauses.push(clause(rng, color, form, noise));
        }
        if !plan.eye_colors.is_empty() && rng.random_bool(P_EYES) {
            let c = plan.eye_colors[rng.random_range(0..plan.eye_colors.len())];
            gold.colors.insert("eye_color".into(), c.rgb);
            gold.attributes.insert("eye_color".into(), c.name());
            clauses.push(format!("{} eyes", c.name()));
        }
        for (id, values) in &plan.attributes {
            if values.is_empty() || !rng.random_bool(P_ATTRIBUTE) {
                continue;
            }
            let (value, forms) = &values[rng.random_range(0..values.len())];
            gold.attributes.insert(id.to_string(), value.to_string());
            clauses.push(pick_form(rng, forms, noise).form.join(" "));
        }
        if clauses.is_empty() {
            continue;
        }
        clauses.shuffle(rng);
        if noise && !plan.distractors.is_empty() {
            for _ in 0..rng.random_range(0..=MAX_DISTRACTORS) {
                let d = plan.distractors[rng.random_range(0..plan.distractors.len())].clone();
                let at = rng.random_range(0..=clauses.len());
                clauses.insert(at, d);
            }
        }
        let opener = OPENERS[rng.random_range(0..OPENERS.len())];
        let body = match clauses.split_last() {
            Some((last, rest)) if !rest.is_empty() => format!("{} and {last}", rest.join(", ")),
            _ => clauses.join(""),
        };
        return CorpusPair { text: format!("{opener} {body}"), gold };
    }
}

/// `n` text/gold pairs. Clean pairs use each value's canonical form; noisy
/// pairs draw synonyms, add filler adjectives and insert up to three
/// distractor phrases.
pub fn generate_corpus(
    catalog: &ComponentCatalog,
    lexicon: &Lexicon,
    n: usize,
    seed: u64,
    noise: bool,
) -> Result<Vec<CorpusPair>, TextParseError> {
    if n == 0 {
        return Err(TextParseError::ZeroCount);
    }
    let plan = plan(catalog, lexicon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sample_pair(&mut rng, &plan, noise)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub n: usize,
    pub per_slot_accuracy: BTreeMap<String, f64>,
    pub per_attribute_accuracy: BTreeMap<String, f64>,
    /// Selection, colors and attributes all equal to gold.
    pub exact_match: f64,
}

pub fn evaluate_parser(
    corpus: &[CorpusPair],
    lexicon: &Lexicon,
    catalog: &ComponentCatalog,
) -> Result<AccuracyReport, TextParseError> {
    if corpus.is_empty() {
        return Err(TextParseError::EmptyCorpus);
    }
    let mut slot_ok: BTreeMap<String, usize> = catalog.slots.iter().map(|s| (s.id.clone(), 0)).collect();
    let mut attr_ok: BTreeMap<String, usize> = catalog.attribute_domains.keys().map(|k| (k.clone(), 0)).collect();
    let mut exact = 0;
    for pair in corpus {
        let got = parse_description(&pair.text, lexicon, catalog);
        for (slot, ok) in slot_ok.iter_mut() {
            *ok += (got.selection.get(slot) == pair.gold.selection.get(slot)) as usize;
        }
        for (attr, ok) in attr_ok.iter_mut() {
            *ok += (got.attributes.get(attr) == pair.gold.attributes.get(attr)) as usize;
        }
        exact += got.same_content(&pair.gold) as usize;
    }
    let n = corpus.len();
    let frac = |k: usize| k as f64 / n as f64;
    Ok(AccuracyReport {
        n,
        per_slot_accuracy: slot_ok.into_iter().map(|(k, v)| (k, frac(v))).collect(),
        per_attribute_accuracy: attr_ok.into_iter().map(|(k, v)| (k, frac(v))).collect(),
        exact_match: frac(exact),
    })
}

/// One pair per line: text, TAB, compact canonical gold.
pub fn write_corpus(pairs: &[CorpusPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&p.text);
        out.push('\t');
        // Serialization of string/color maps cannot fail.
        out.push_str(&canonical::to_compact_string(&p.gold).unwrap_or_default());
        out.push('\n');
    }
    out
}

pub fn read_corpus(text: &str) -> Result<Vec<CorpusPair>, TextParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = |m: String| TextParseError::CorpusLine { line: i + 1, message: m };
            let (t, g) = line.split_once('\t').ok_or_else(|| bad("missing TAB".into()))?;
            let gold = canonical::from_str(g).map_err(|e| bad(e.to_string()))?;
            Ok(CorpusPair { text: t.to_string(), gold })
        })
        .collect()
}
