//! Caption segmentation into labeled descriptions and a deterministic
//! rule paraphraser.
//!
//! Keyword rules and the synonym table ship as tab-separated data files
//! (`pattern<TAB>replacement` / `keyword<TAB>label`); the built-in copies
//! are embedded from `data/`.

use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::tokenize_text_spans;
use crate::numerics::Rng;
use crate::segment::{ExpertiseSegmentation, Segment};

#[derive(Debug, Error)]
pub enum TextSegError {
    #[error("empty caption")]
    EmptyInput,
    #[error("rule table io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad rule table line {line}: {reason}")]
    BadTable { line: usize, reason: String },
}

/// Closed label set for caption descriptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExpertiseLabel {
    Function,
    Origin,
    Structure,
    Type,
    Property,
    Other,
}

impl ExpertiseLabel {
    pub const ALL: [ExpertiseLabel; 6] = [
        ExpertiseLabel::Function,
        ExpertiseLabel::Origin,
        ExpertiseLabel::Structure,
        ExpertiseLabel::Type,
        ExpertiseLabel::Property,
        ExpertiseLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExpertiseLabel::Function => "Function",
            ExpertiseLabel::Origin => "Origin",
            ExpertiseLabel::Structure => "Structure",
            ExpertiseLabel::Type => "Type",
            ExpertiseLabel::Property => "Property",
            ExpertiseLabel::Other => "Other",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for ExpertiseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One description span of a caption. `start..end` is the byte range of
/// the trimmed span in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Description {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub label: ExpertiseLabel,
}

/// Ordered description spans covering all non-whitespace caption text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionSegmentation {
    pub descriptions: Vec<Description>,
    pub source: String,
}

impl CaptionSegmentation {
    pub fn len(&self) -> usize {
        self.descriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    pub fn labels(&self) -> Vec<ExpertiseLabel> {
        self.descriptions.iter().map(|d| d.label).collect()
    }
}

/// Keyword classification rules and the synonym substitution table.
#[derive(Debug, Clone)]
pub struct RuleTables {
    /// (lowercased keyword, label), in priority order; first match wins.
    pub keywords: Vec<(String, ExpertiseLabel)>,
    /// (pattern, replacement), applied in order as substring rewrites.
    pub synonyms: Vec<(String, String)>,
}

static BUILTIN: LazyLock<RuleTables> = LazyLock::new(|| {
    RuleTables::parse(
        include_str!("../../data/keywords.tsv"),
        include_str!("../../data/synonyms.tsv"),
    )
    .expect("built-in rule tables are well-formed")
});

impl RuleTables {
    pub fn builtin() -> &'static RuleTables {
        &BUILTIN
    }

    pub fn from_files(keywords: &Path, synonyms: &Path) -> Result<Self, TextSegError> {
        RuleTables::parse(
            &std::fs::read_to_string(keywords)?,
            &std::fs::read_to_string(synonyms)?,
        )
    }

    pub fn parse(keywords: &str, synonyms: &str) -> Result<Self, TextSegError> {
        let mut kw = Vec::new();
        for (i, line) in keywords.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (pattern, label) = line.split_once('\t').ok_or(TextSegError::BadTable {
                line: i + 1,
                reason: "expected keyword<TAB>label".to_string(),
            })?;
            let label = ExpertiseLabel::parse(label.trim()).ok_or(TextSegError::BadTable {
                line: i + 1,
                reason: format!("unknown label {label:?}"),
            })?;
            kw.push((pattern.trim().to_ascii_lowercase(), label));
        }
        let mut syn = Vec::new();
        for (i, line) in synonyms.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (pattern, replacement) = line.split_once('\t').ok_or(TextSegError::BadTable {
                line: i + 1,
                reason: "expected pattern<TAB>replacement".to_string(),
            })?;
            syn.push((pattern.to_string(), replacement.to_string()));
        }
        Ok(RuleTables {
            keywords: kw,
            synonyms: syn,
        })
    }
}

/// Split a caption at sentence terminators (`.` `!` `?`) outside
/// parentheses/brackets, then at top-level semicolons. A period only
/// terminates when followed by whitespace and a capital letter or by the
/// end of the text, so "pH 7.3" stays together.
pub fn segment_caption(text: &str) -> Result<CaptionSegmentation, TextSegError> {
    segment_caption_with(RuleTables::builtin(), text)
}

pub fn segment_caption_with(
    tables: &RuleTables,
    text: &str,
) -> Result<CaptionSegmentation, TextSegError> {
    if text.trim().is_empty() {
        return Err(TextSegError::EmptyInput);
    }

    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut cuts = Vec::new(); // byte offset just after a terminator
    let mut depth = 0i32;
    for (pos, &(offset, c)) in chars.iter().enumerate() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '!' | '?' | ';' if depth == 0 => cuts.push(offset + c.len_utf8()),
            '.' if depth == 0 => {
                let mut rest = chars[pos + 1..].iter().map(|&(_, ch)| ch);
                let splits = match rest.next() {
                    None => true,
                    Some(ws) if ws.is_whitespace() => {
                        // skip further whitespace, require a capital next
                        let next = chars[pos + 1..]
                            .iter()
                            .map(|&(_, ch)| ch)
                            .find(|ch| !ch.is_whitespace());
                        matches!(next, Some(up) if up.is_uppercase())
                    }
                    Some(_) => false,
                };
                if splits {
                    cuts.push(offset + c.len_utf8());
                }
            }
            _ => {}
        }
    }
    cuts.push(text.len());
    cuts.dedup();

    let mut descriptions = Vec::new();
    let mut begin = 0;
    for cut in cuts {
        let raw = &text[begin..cut];
        let trimmed = raw.trim();
        if !trimmed.is_empty() {
            let start = begin + (raw.len() - raw.trim_start().len());
            descriptions.push(Description {
                text: trimmed.to_string(),
                start,
                end: start + trimmed.len(),
                label: classify_description_with(tables, trimmed),
            });
        }
        begin = cut;
    }
    if descriptions.is_empty() {
        return Err(TextSegError::EmptyInput);
    }

    Ok(CaptionSegmentation {
        descriptions,
        source: text.to_string(),
    })
}

/// First matching keyword rule wins; no match gives `Other`.
pub fn classify_description(text: &str) -> ExpertiseLabel {
    classify_description_with(RuleTables::builtin(), text)
}

pub fn classify_description_with(tables: &RuleTables, text: &str) -> ExpertiseLabel {
    let lower = text.to_ascii_lowercase();
    tables
        .keywords
        .iter()
        .find(|(kw, _)| lower.contains(kw.as_str()))
        .map(|&(_, label)| label)
        .unwrap_or(ExpertiseLabel::Other)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphraseResult {
    pub text: String,
    /// False when no rewrite rule applied (identity fallback).
    pub changed: bool,
}

/// Deterministic caption rewrite: seeded synonym-table substitutions plus
/// description reordering when there are at least two descriptions. The
/// output differs from the input whenever any rule applies; otherwise the
/// input comes back flagged unchanged.
pub fn paraphrase(text: &str, seed: u64) -> ParaphraseResult {
    paraphrase_with(RuleTables::builtin(), text, seed)
}

pub fn paraphrase_with(tables: &RuleTables, text: &str, seed: u64) -> ParaphraseResult {
    let mut rng = Rng::new(seed ^ crate::numerics::fnv1a64(text.as_bytes()));

    let mut current = text.to_string();
    let mut changed = false;

    // seeded subset of applicable substitutions
    for (pattern, replacement) in &tables.synonyms {
        if current.contains(pattern.as_str()) && rng.chance(0.5) {
            current = current.replace(pattern.as_str(), replacement);
            changed = true;
        }
    }

    // description reordering (rotation) when the caption has >= 2 parts
    let parts: Vec<String> = match segment_caption_with(tables, &current) {
        Ok(seg) if seg.len() >= 2 => seg.descriptions.into_iter().map(|d| d.text).collect(),
        _ => Vec::new(),
    };
    if parts.len() >= 2 && rng.chance(0.5) {
        current = rotate_join(&parts, 1 + rng.below(parts.len() - 1));
        changed = true;
    }

    // force at least one rewrite if anything was applicable
    if !changed {
        if let Some((pattern, replacement)) = tables
            .synonyms
            .iter()
            .find(|(p, _)| current.contains(p.as_str()))
        {
            current = current.replace(pattern.as_str(), replacement);
            changed = true;
        } else if parts.len() >= 2 {
            current = rotate_join(&parts, 1);
            changed = true;
        }
    }

    ParaphraseResult {
        text: current,
        changed,
    }
}

fn rotate_join(parts: &[String], by: usize) -> String {
    let n = parts.len();
    (0..n)
        .map(|i| parts[(i + by) % n].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Tokenize a caption and lift its description spans onto token indices.
/// Returns the word tokens and the expertise segmentation used for
/// encoder routing and the memory bank.
pub fn caption_expertise(text: &str) -> Result<(Vec<String>, ExpertiseSegmentation), TextSegError> {
    caption_expertise_with(RuleTables::builtin(), text)
}

pub fn caption_expertise_with(
    tables: &RuleTables,
    text: &str,
) -> Result<(Vec<String>, ExpertiseSegmentation), TextSegError> {
    let seg = segment_caption_with(tables, text)?;
    let spans = tokenize_text_spans(text);
    let tokens: Vec<String> = spans.iter().map(|(t, _)| t.clone()).collect();

    let mut segments: Vec<Segment> = seg
        .descriptions
        .iter()
        .map(|d| Segment {
            label: d.label.as_str().to_string(),
            token_indices: Vec::new(),
        })
        .collect();
    let mut current = 0usize;
    for (idx, (_, range)) in spans.iter().enumerate() {
        while current + 1 < seg.descriptions.len()
            && range.start >= seg.descriptions[current + 1].start
        {
            current += 1;
        }
        segments[current].token_indices.push(idx);
    }
    segments.retain(|s| !s.token_indices.is_empty());

    let seg = ExpertiseSegmentation::new(segments, tokens.len())
        .expect("caption token partition by construction");
    Ok((tokens, seg))
}
