//! Lexicon-driven description parser.
//!
//! Text is lowercased and split into words; punctuation other than in-word
//! hyphens is dropped, and clause punctuation (`, . ; : ! ?`) separates
//! segments that a multi-word form may not span. Color terms are found
//! first; component forms are then matched greedily, longest first, over
//! the remaining words. Each color binds to the match whose span encloses
//! it, else to the first match starting at most three words to its right,
//! else to the previous match.

mod corpus;
mod lexicon;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ComponentCatalog;
use crate::image::Rgb;

pub use corpus::{evaluate_parser, generate_corpus, read_corpus, write_corpus, AccuracyReport, CorpusPair};
pub use lexicon::{ColorTerm, LexEntry, Lexicon};

/// Words a color may sit to the left of the form it describes.
pub const COLOR_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum TextParseError {
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("lexicon form {form:?}: {message}")]
    UnknownValue { form: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus size must be at least 1")]
    ZeroCount,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus line {line}: {message}")]
    CorpusLine { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDescription {
    pub selection: BTreeMap<String, String>,
    /// Keyed by slot or attribute id.
    pub colors: BTreeMap<String, Rgb>,
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched_tokens: Vec<String>,
}

impl ParsedDescription {
    /// Equal on everything but the unmatched token list.
    pub fn same_content(&self, other: &ParsedDescription) -> bool {
        self.selection == other.selection && self.colors == other.colors && self.attributes == other.attributes
    }
}

/// Lowercased words grouped into punctuation-delimited segments. Empty
/// segments are dropped.
pub fn tokenize(text: &str) -> Vec<Vec<String>> {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut segments = vec![];
    let mut words: Vec<String> = vec![];
    let mut word = String::new();
    let flush_word = |word: &mut String, words: &mut Vec<String>| {
        if !word.is_empty() {
            words.push(std::mem::take(word));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let inword_hyphen = c == '-' && !word.is_empty() && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inword_hyphen {
            word.push(c);
        } else if c == '\'' || c == '\u{2019}' {
            // "girl's" -> "girls"
        } else {
            flush_word(&mut word, &mut words);
            if matches!(c, ',' | '.' | ';' | ':' | '!' | '?') && !words.is_empty() {
                segments.push(std::mem::take(&mut words));
            }
        }
    }
    flush_word(&mut word, &mut words);
    if !words.is_empty() {
        segments.push(words);
    }
    segments
}

#[derive(Debug)]
struct Token {
    word: String,
    segment: usize,
}

#[derive(Debug)]
struct ColorHit<'a> {
    start: usize,
    end: usize,
    term: &'a ColorTerm,
}

#[derive(Debug)]
struct Match<'a> {
    start: usize,
    end: usize,
    entry: &'a LexEntry,
}

/// Parse free text into a partial selection. Never fails.
pub fn parse_description(text: &str, lexicon: &Lexicon, catalog: &ComponentCatalog) -> ParsedDescription {
    let tokens: Vec<Token> = tokenize(text)
        .into_iter()
        .enumerate()
        .flat_map(|(segment, words)| words.into_iter().map(move |word| Token { word, segment }))
        .collect();
    let words: Vec<String> = tokens.iter().map(|t| t.word.clone()).collect();
    let mut used = vec![false; tokens.len()];

    // Colors, longest first.
    let mut colors = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let hit = (1..=lexicon.max_color().min(tokens.len() - i)).rev().find_map(|len| {
            let span = &tokens[i..i + len];
            if span.iter().any(|t| t.segment != tokens[i].segment) {
                return None;
            }
            lexicon.color(&words[i..i + len]).map(|term| ColorHit { start: i, end: i + len - 1, term })
        });
        match hit {
            Some(h) => {
                used[h.start..=h.end].fill(true);
                i = h.end + 1;
                colors.push(h);
            }
            None => i += 1,
        }
    }

    // Components over the color-free stream.
    let stream: Vec<usize> = (0..tokens.len()).filter(|&k| !used[k]).collect();
    let mut matches: Vec<Match> = Vec::new();
    let mut s = 0;
    while s < stream.len() {
        let seg = tokens[stream[s]].segment;
        let hit = (1..=lexicon.max_form().min(stream.len() - s)).rev().find_map(|len| {
            let idx = &stream[s..s + len];
            if idx.iter().any(|&k| tokens[k].segment != seg) {
                return None;
            }
            let form: Vec<String> = idx.iter().map(|&k| words[k].clone()).collect();
            lexicon.lookup(&form).map(|entry| (len, entry))
        });
        match hit {
            Some((len, entry)) => {
                for &k in &stream[s..s + len] {
                    used[k] = true;
                }
                matches.push(Match { start: stream[s], end: stream[s + len - 1], entry });
                s += len;
            }
            None => s += 1,
        }
    }

    let mut out = ParsedDescription::default();
    let mut removed_by_group: Vec<String> = Vec::new();
    for m in &matches {
        let Some(value) = &m.entry.value else { continue };
        let target = &m.entry.target;
        if catalog.is_attribute(target) {
            out.attributes.insert(target.clone(), value.clone());
        } else {
            if let Some(group) = catalog.exclusive_group(target) {
                for other in group.iter().filter(|g| *g != target) {
                    if out.selection.remove(other).is_some() {
                        removed_by_group.push(other.clone());
                    }
                }
            }
            out.selection.insert(target.clone(), value.clone());
        }
    }

    let eye_domain = catalog.attribute_domains.get("eye_color");
    for c in &colors {
        let bound = matches
            .iter()
            .find(|m| m.start < c.start && c.end < m.end)
            .or_else(|| matches.iter().find(|m| m.start > c.end && m.start - c.end <= COLOR_WINDOW))
            .or_else(|| matches.iter().rev().find(|m| m.end < c.start));
        match bound {
            Some(m) => {
                let target = &m.entry.target;
                out.colors.insert(target.clone(), c.term.rgb);
                let name = c.term.name();
                if target == "eye_color" && eye_domain.is_some_and(|d| d.contains(&name)) {
                    out.attributes.insert(target.clone(), name);
                }
            }
            None => out.unmatched_tokens.extend(words[c.start..=c.end].iter().cloned()),
        }
    }
    // A garment displaced by its exclusive partner takes its color with it,
    // unless the partner itself was later displaced.
    for slot in removed_by_group {
        if !out.selection.contains_key(&slot) {
            out.colors.remove(&slot);
        }
    }

    let mut unmatched: Vec<String> = (0..tokens.len()).filter(|&k| !used[k]).map(|k| words[k].clone()).collect();
    unmatched.append(&mut out.unmatched_tokens);
    out.unmatched_tokens = unmatched;
    out
}
