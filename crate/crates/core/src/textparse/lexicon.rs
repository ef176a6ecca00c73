use std::collections::HashMap;
use std::path::Path;

use crate::catalog::ComponentCatalog;
use crate::image::Rgb;

use super::{tokenize, TextParseError};

/// What a surface form points at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub form: Vec<String>,
    /// Slot id or attribute id.
    pub target: String,
    /// Variant id or attribute value; `None` for mention-only anchors.
    pub value: Option<String>,
    pub priority: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorTerm {
    pub form: Vec<String>,
    pub rgb: Rgb,
}

impl ColorTerm {
    pub fn name(&self) -> String {
        self.form.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub entries: Vec<LexEntry>,
    pub colors: Vec<ColorTerm>,
    pub distractors: Vec<String>,
    /// Form -> entry indices, best candidate first.
    index: HashMap<Vec<String>, Vec<usize>>,
    color_index: HashMap<Vec<String>, usize>,
    max_form: usize,
    max_color: usize,
}

impl Lexicon {
    pub fn new(entries: Vec<LexEntry>, colors: Vec<ColorTerm>, distractors: Vec<String>) -> Result<Lexicon, TextParseError> {
        let mut index: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            let slot = index.entry(e.form.clone()).or_default();
            if slot.iter().any(|&j| entries[j].target == e.target) {
                return Err(TextParseError::Lexicon {
                    line: 0,
                    message: format!("duplicate form {:?} for {}", e.form.join(" "), e.target),
                });
            }
            slot.push(i);
        }
        for ids in index.values_mut() {
            // Stable sort keeps file order among equal priorities.
            ids.sort_by_key(|&i| std::cmp::Reverse(entries[i].priority));
        }
        let mut color_index = HashMap::new();
        for (i, c) in colors.iter().enumerate() {
            if color_index.insert(c.form.clone(), i).is_some() {
                return Err(TextParseError::Lexicon { line: 0, message: format!("duplicate color {:?}", c.name()) });
            }
        }
        let max_form = entries.iter().map(|e| e.form.len()).max().unwrap_or(0);
        let max_color = colors.iter().map(|c| c.form.len()).max().unwrap_or(0);
        Ok(Lexicon { entries, colors, distractors, index, color_index, max_form, max_color })
    }

    /// Parse the line format `form | target | value | priority`.
    pub fn parse(text: &str) -> Result<Lexicon, TextParseError> {
        let mut entries = Vec::new();
        let mut colors = Vec::new();
        let mut distractors = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| TextParseError::Lexicon { line: n + 1, message };
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            let [form, target, value, priority] = fields[..] else {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            };
            let priority: i32 = priority.parse().map_err(|_| bad(format!("bad priority {priority:?}")))?;
            let tokens = tokenize(form);
            if tokens.len() != 1 || tokens[0].is_empty() {
                return Err(bad(format!("form {form:?} must be a single run of words")));
            }
            let tokens = tokens.into_iter().next().unwrap_or_default();
            match target {
                "color" => {
                    let rgb: Rgb = value.parse().map_err(|_| bad(format!("bad color {value:?}")))?;
                    colors.push(ColorTerm { form: tokens, rgb });
                }
                "filler" => distractors.push(tokens.join(" ")),
                _ => entries.push(LexEntry {
                    form: tokens,
                    target: target.to_string(),
                    value: (value != "-").then(|| value.to_string()),
                    priority,
                }),
            }
        }
        Lexicon::new(entries, colors, distractors)
    }

    pub fn load(path: &Path) -> Result<Lexicon, TextParseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TextParseError::Io { path: path.display().to_string(), source })?;
        Lexicon::parse(&text)
    }

    /// Every target must be a slot or attribute of the catalog and every
    /// value one of its variants or domain values.
    pub fn validate(&self, catalog: &ComponentCatalog) -> Result<(), TextParseError> {
        for e in &self.entries {
            let form = e.form.join(" ");
            let bad = |m: String| TextParseError::UnknownValue { form: form.clone(), message: m };
            if let Some(domain) = catalog.attribute_domains.get(&e.target) {
                if let Some(v) = &e.value {
                    if !domain.contains(v) {
                        return Err(bad(format!("{v} is not a {} value", e.target)));
                    }
                }
            } else if catalog.slot(&e.target).is_some() {
                if let Some(v) = &e.value {
                    match catalog.variant(v) {
                        Some(var) if var.slot == e.target => {}
                        _ => return Err(bad(format!("{v} is not a {} variant", e.target))),
                    }
                }
            } else {
                return Err(bad(format!("unknown target {}", e.target)));
            }
        }
        Ok(())
    }

    /// Best entry for an exact form.
    pub(crate) fn lookup(&self, form: &[String]) -> Option<&LexEntry> {
        self.index.get(form).and_then(|ids| ids.first()).map(|&i| &self.entries[i])
    }

    pub(crate) fn color(&self, form: &[String]) -> Option<&ColorTerm> {
        self.color_index.get(form).map(|&i| &self.colors[i])
    }

    pub(crate) fn max_form(&self) -> usize {
        self.max_form
    }

    pub(crate) fn max_color(&self) -> usize {
        self.max_color
    }

    /// Forms that select `value` for `target`, in file order.
    pub fn forms_for(&self, target: &str, value: &str) -> Vec<&LexEntry> {
        self.entries
            .iter()
            .filter(|e| e.target == target && e.value.as_deref() == Some(value))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fields_and_anchors() {
        let lex = Lexicon::parse("# c\nlong hair | back_hair | bh_long | 2\nhair | back_hair | - | 0\npink | color | #ff69b4 | 0\nwaving | filler | - | 0\n").unwrap();
        assert_eq!(lex.entries.len(), 2);
        assert_eq!(lex.entries[1].value, None);
        assert_eq!(lex.colors[0].rgb, Rgb(255, 105, 180));
        assert_eq!(lex.distractors, vec!["waving"]);
        assert_eq!(lex.max_form(), 2);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(Lexicon::parse("a | b | c"), Err(TextParseError::Lexicon { line: 1, .. })));
        assert!(Lexicon::parse("x | top | tp_a | high").is_err());
        assert!(Lexicon::parse("x | color | nope | 0").is_err());
        assert!(Lexicon::parse("x | top | a | 0\nx | top | b | 0").is_err());
    }

    #[test]
    fn priority_then_file_order() {
        let lex = Lexicon::parse("cap | top | a | 0\ncap | shoes | b | 1\ncap | skirt | c | 1").unwrap();
        assert_eq!(lex.lookup(&["cap".to_string()]).unwrap().value.as_deref(), Some("b"));
    }
}
