//! Text and molecule similarity scores: BLEU-n, ROUGE-1 recall,
//! METEOR-lite, normalized Levenshtein, fingerprint Tanimoto, and the
//! combined per-sample reports used by the evaluation harness.
//!
//! All scores live in [0,1]; `lev_norm` is the one where lower is better.

mod lev;
mod meteor;
mod ngram;

pub use lev::normalized_levenshtein;
pub use meteor::meteor_lite;
pub use ngram::{bleu_n, rouge1, BleuScore};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference SMILES does not parse: {0}")]
    InvalidReference(chem::ChemError),
}

/// Whitespace-plus-punctuation word tokenizer shared by the text metrics,
/// caption vocabularies, and caption span mapping. Returns (token, byte
/// range) pairs; alphanumeric runs group, every punctuation byte stands
/// alone.
pub fn tokenize_text_spans(text: &str) -> Vec<(String, std::ops::Range<usize>)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((text[start..i].to_string(), start..i));
        } else {
            out.push((text[i..i + 1].to_string(), i..i + 1));
            i += 1;
        }
    }
    out
}

pub fn tokenize_text(text: &str) -> Vec<String> {
    tokenize_text_spans(text).into_iter().map(|(t, _)| t).collect()
}

/// Per-sample text similarity (caption tasks).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextSimReport {
    pub bleu2: f64,
    pub meteor_lite: f64,
    pub rouge1_recall: f64,
}

/// Per-sample molecule similarity (SMILES tasks).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MolSimReport {
    /// BLEU-4 over SMILES tokens.
    pub bleu4: f64,
    /// Length-normalized Levenshtein over raw strings; lower is better.
    pub lev_norm: f64,
    /// Fingerprint Tanimoto; 0 whenever the candidate fails to parse.
    pub fp_tanimoto: f64,
    pub candidate_valid: bool,
}

/// Aggregate BLEU-2 / METEOR-lite / ROUGE-1 for one candidate/reference pair.
/// BLEU smoothing is on, matching evaluation defaults for short sequences.
pub fn sim_text(cand: &str, reference: &str) -> TextSimReport {
    let c = tokenize_text(cand);
    let r = tokenize_text(reference);
    TextSimReport {
        bleu2: bleu_n(&c, &r, 2, true).score,
        meteor_lite: meteor_lite(&c, &r),
        rouge1_recall: rouge1(&c, &r),
    }
}

/// Aggregate BLEU-4 / normalized Levenshtein / fingerprint Tanimoto for a
/// candidate SMILES against a reference that must parse. An unparseable
/// candidate keeps its string scores (token fallback: bytes) but scores
/// zero Tanimoto and is flagged invalid.
pub fn sim_mol(cand: &str, reference: &str) -> Result<MolSimReport, MetricsError> {
    let (_, ref_graph) = chem::parse(reference).map_err(MetricsError::InvalidReference)?;
    let ref_tokens: Vec<String> = chem::tokenize_smiles(reference)
        .expect("reference parsed")
        .tokens
        .into_iter()
        .map(|t| t.lexeme)
        .collect();

    let cand_parse = chem::parse(cand);
    let cand_tokens: Vec<String> = match chem::tokenize_smiles(cand) {
        Ok(seq) => seq.tokens.into_iter().map(|t| t.lexeme).collect(),
        Err(_) => cand.chars().map(|c| c.to_string()).collect(),
    };

    let (fp_tanimoto, candidate_valid) = match cand_parse {
        Ok((_, cand_graph)) => {
            let fa = chem::fingerprint(&cand_graph);
            let fb = chem::fingerprint(&ref_graph);
            (chem::tanimoto(&fa, &fb).expect("equal widths"), true)
        }
        Err(_) => (0.0, false),
    };

    Ok(MolSimReport {
        bleu4: bleu_n(&cand_tokens, &ref_tokens, 4, true).score,
        lev_norm: normalized_levenshtein(cand, reference),
        fp_tanimoto,
        candidate_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_splits_punctuation_and_whitespace() {
        assert_eq!(
            tokenize_text("It is an acid."),
            vec!["It", "is", "an", "acid", "."]
        );
        assert_eq!(tokenize_text("pH 7.3"), vec!["pH", "7", ".", "3"]);
        assert_eq!(tokenize_text("a-b"), vec!["a", "-", "b"]);
    }

    #[test]
    fn identical_text_scores_perfectly() {
        let r = sim_text("It derives from a hexane.", "It derives from a hexane.");
        assert_eq!(r.bleu2, 1.0);
        assert_eq!(r.rouge1_recall, 1.0);
        assert!(r.meteor_lite > 0.9);
    }

    #[test]
    fn identical_smiles_score_perfectly() {
        let r = sim_mol("CC(=O)O", "CC(=O)O").unwrap();
        assert_eq!(r.bleu4, 1.0);
        assert_eq!(r.lev_norm, 0.0);
        assert_eq!(r.fp_tanimoto, 1.0);
        assert!(r.candidate_valid);
    }

    #[test]
    fn invalid_candidate_zeroes_tanimoto_but_keeps_string_scores() {
        let r = sim_mol("adopt(C", "CCO").unwrap();
        assert!(!r.candidate_valid);
        assert_eq!(r.fp_tanimoto, 0.0);
        assert!(r.lev_norm > 0.0);
        assert!(r.bleu4 < 1.0);
    }

    #[test]
    fn invalid_reference_is_an_error() {
        assert!(sim_mol("CCO", "C(").is_err());
    }

    #[test]
    fn close_molecules_match_constituent_oracles() {
        let r = sim_mol("CCO", "CCN").unwrap();
        assert!((r.lev_norm - 1.0 / 3.0).abs() < 1e-12);
        let fa = chem::fingerprint(&chem::parse("CCO").unwrap().1);
        let fb = chem::fingerprint(&chem::parse("CCN").unwrap().1);
        assert_eq!(r.fp_tanimoto, chem::tanimoto(&fa, &fb).unwrap());
    }
}
