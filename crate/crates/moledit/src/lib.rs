//! MolEdit: knowledge editing for toy sequence-to-sequence molecule
//! language models.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`chem`] — SMILES tokenization, parsing, functional-group
//!   segmentation, and hashed circular fingerprints.
//! - [`textseg`] — caption segmentation into labeled descriptions and a
//!   deterministic rule paraphraser.
//! - [`metrics`] — BLEU-n, ROUGE-1, METEOR-lite, normalized Levenshtein,
//!   Tanimoto, and the combined text/molecule similarity reports.
//! - [`numerics`] — dense f64 tensors, a reverse-mode tape, Adam, seeded
//!   randomness, and the checkpoint format.
//! - [`backbone`] — the toy encoder-decoder with per-layer adapter wrap
//!   points, greedy decoding, and pretraining.
//! - [`meka`] — the Multi-Expert Knowledge Adapter (noisy top-k routing,
//!   expertise-wise at encoder sites, token-wise at decoder sites).
//! - [`eaes`] — the Expertise-Aware Editing Switcher and its memory bank.
//! - [`editing`] — edit orchestration, fine-tune baselines, ablations.
//! - [`bench`] — synthetic corpus generation, benchmark split
//!   construction, and the Reliability/Locality/Generality evaluator.

pub mod backbone;
pub mod bench;
pub mod chem;
pub mod config;
pub mod eaes;
pub mod editing;
pub mod meka;
pub mod metrics;
pub mod textseg;
pub mod numerics;
pub mod pipeline;
pub mod rationale;
pub mod segment;
