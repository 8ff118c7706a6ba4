//! SMILES handling: tokenizer, parser, functional-group segmentation, and
//! fingerprint similarity.
//!
//! Supported subset: organic-subset atoms (B, C, N, O, P, S, F, Cl, Br, I),
//! aromatic lowercase forms, bracket atoms with charge and explicit H, bond
//! orders `- = # :`, ring closures 1-9 and `%nn`, branches, and `.`
//! component separators. Stereo markers are lexed and ignored in the graph.
//! All operations are pure functions; values are immutable once built.

mod fingerprint;
mod groups;
mod parse;
mod tokenize;

pub use fingerprint::{
    environments, fingerprint, fingerprint_with, tanimoto, BitFingerprint, DEFAULT_RADIUS,
    DEFAULT_WIDTH,
};
pub use groups::{
    detect_functional_groups, group_token_spans, FunctionalGroupSegmentation, GroupKind,
    GroupSegment,
};
pub use parse::{parse_smiles, Atom, Bond, BondOrder, Element, MolGraph};
pub use tokenize::{tokenize_smiles, SmilesToken, SmilesTokenSeq, TokenKind};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChemError {
    #[error("empty SMILES input")]
    EmptyInput,
    #[error("illegal character {found:?} at position {position}")]
    IllegalCharacter { position: usize, found: char },
    #[error("unterminated bracket atom starting at position {position}")]
    UnterminatedBracket { position: usize },
    #[error("ring bond {ring} opened but never closed")]
    UnclosedRingBond { ring: u16 },
    #[error("unbalanced parenthesis at position {position}")]
    UnbalancedParenthesis { position: usize },
    #[error("invalid element in {text:?}")]
    InvalidElement { text: String },
    #[error("dangling bond at position {position}")]
    DanglingBond { position: usize },
    #[error("fingerprint width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
}

/// Tokenize and parse in one step.
pub fn parse(s: &str) -> Result<(SmilesTokenSeq, MolGraph), ChemError> {
    let seq = tokenize_smiles(s)?;
    let graph = parse_smiles(&seq)?;
    Ok((seq, graph))
}

/// Convenience: the full molecule-side expertise segmentation of a SMILES
/// string (tokens partitioned by functional group).
pub fn smiles_expertise(
    s: &str,
) -> Result<(SmilesTokenSeq, MolGraph, crate::segment::ExpertiseSegmentation), ChemError> {
    let (seq, graph) = parse(s)?;
    let groups = detect_functional_groups(&graph);
    let spans = group_token_spans(&seq, &graph, &groups);
    Ok((seq, graph, spans))
}
