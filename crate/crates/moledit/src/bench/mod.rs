//! Benchmark construction and the Reliability/Locality/Generality
//! evaluation harness.
//!
//! Dataset files are JSON Lines, one object per sample with fields `id`,
//! `smiles`, `caption` and optional `target_caption`, `target_smiles`,
//! `parent_id`, `variant_seed`.

mod corpus;
mod eval;

pub use corpus::{generate_corpus, CorpusConfig};
pub use eval::{
    evaluate, evaluate_threaded, pre_edit_outputs, EvalReport, Evaluation, MetricStats,
    MetricTable, PreEditCache, SampleEval,
};

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backbone::{Model, Vocab};
use crate::chem;
use crate::editing::Task;
use crate::metrics;
use crate::segment::ExpertiseSegmentation;
use crate::textseg::{self, RuleTables};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("sample {id}: {reason}")]
    InvalidSample { id: String, reason: String },
    #[error("empty result: no samples passed the threshold (score histogram {histogram:?})")]
    EmptyResult { histogram: Vec<usize> },
    #[error("locality requires a cached pre-edit output for sample {id}")]
    MissingPreEditCache { id: String },
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {source}")]
    BadJson {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Backbone(#[from] crate::backbone::BackboneError),
    #[error(transparent)]
    Editing(#[from] crate::editing::EditingError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

/// One corpus entry. `smiles`/`caption` are what the model trained on;
/// the optional target fields carry corrected ground truth where the
/// trained pair was wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub id: String,
    pub smiles: String,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_smiles: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_seed: Option<u64>,
}

impl Sample {
    /// Ground-truth caption for the caption task.
    pub fn true_caption(&self) -> &str {
        self.target_caption.as_deref().unwrap_or(&self.caption)
    }

    /// Ground-truth SMILES for the molecule task.
    pub fn true_smiles(&self) -> &str {
        self.target_smiles.as_deref().unwrap_or(&self.smiles)
    }
}

/// A sample with both modalities tokenized and segmented, ready for
/// encoding.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub sample: Sample,
    /// SMILES lexemes of the trained molecule and their group spans.
    pub mol_tokens: Vec<String>,
    pub mol_seg: ExpertiseSegmentation,
    /// Caption word tokens of the trained caption and their description spans.
    pub cap_tokens: Vec<String>,
    pub cap_seg: ExpertiseSegmentation,
}

/// Validate a sample's invariants (SMILES parses, caption segments, target
/// fields well-formed) and precompute both segmentations.
pub fn prepare(sample: Sample) -> Result<PreparedSample, BenchError> {
    let bad = |reason: String| BenchError::InvalidSample {
        id: sample.id.clone(),
        reason,
    };
    let (seq, _, mol_seg) =
        chem::smiles_expertise(&sample.smiles).map_err(|e| bad(format!("smiles: {e}")))?;
    let (cap_tokens, cap_seg) =
        textseg::caption_expertise(&sample.caption).map_err(|e| bad(format!("caption: {e}")))?;
    if let Some(t) = &sample.target_smiles {
        chem::parse(t).map_err(|e| bad(format!("target_smiles: {e}")))?;
    }
    if let Some(t) = &sample.target_caption {
        textseg::segment_caption(t).map_err(|e| bad(format!("target_caption: {e}")))?;
    }
    let mol_tokens = seq.tokens.into_iter().map(|t| t.lexeme).collect();
    Ok(PreparedSample {
        sample,
        mol_tokens,
        mol_seg,
        cap_tokens,
        cap_seg,
    })
}

pub fn prepare_all(samples: Vec<Sample>) -> Result<Vec<PreparedSample>, BenchError> {
    samples.into_iter().map(prepare).collect()
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Sample>, BenchError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| BenchError::BadJson {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, samples: &[Sample]) -> Result<(), BenchError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut w, s).expect("sample serializes");
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Build the SMILES-token and caption-word vocabularies from a corpus.
/// Synonym-table replacements join the word vocabulary so paraphrased
/// captions stay encodable.
pub fn build_vocabs(samples: &[Sample], tables: &RuleTables) -> (Vocab, Vocab) {
    let mut smiles_tokens: Vec<String> = Vec::new();
    let mut words: Vec<String> = Vec::new();
    for s in samples {
        for text in [Some(s.smiles.as_str()), s.target_smiles.as_deref()]
            .into_iter()
            .flatten()
        {
            if let Ok(seq) = chem::tokenize_smiles(text) {
                smiles_tokens.extend(seq.tokens.into_iter().map(|t| t.lexeme));
            }
        }
        for text in [Some(s.caption.as_str()), s.target_caption.as_deref()]
            .into_iter()
            .flatten()
        {
            words.extend(metrics::tokenize_text(text));
        }
    }
    for (_, replacement) in &tables.synonyms {
        words.extend(metrics::tokenize_text(replacement));
    }
    (Vocab::new(smiles_tokens), Vocab::new(words))
}

/// Task-oriented view of the two vocabularies: encoding of inputs and
/// targets plus decoding of model outputs back to text.
#[derive(Debug, Clone)]
pub struct TaskCodec {
    pub task: Task,
    pub smiles_vocab: Vocab,
    pub word_vocab: Vocab,
}

impl TaskCodec {
    pub fn new(task: Task, smiles_vocab: Vocab, word_vocab: Vocab) -> Self {
        TaskCodec {
            task,
            smiles_vocab,
            word_vocab,
        }
    }

    pub fn src_vocab(&self) -> &Vocab {
        match self.task {
            Task::CaptionGen => &self.smiles_vocab,
            Task::MoleculeGen => &self.word_vocab,
        }
    }

    pub fn tgt_vocab(&self) -> &Vocab {
        match self.task {
            Task::CaptionGen => &self.word_vocab,
            Task::MoleculeGen => &self.smiles_vocab,
        }
    }

    /// Encoder input ids and routing segmentation for a sample.
    pub fn src_ids(
        &self,
        prepared: &PreparedSample,
    ) -> Result<(Vec<u32>, ExpertiseSegmentation), BenchError> {
        let (tokens, seg) = match self.task {
            Task::CaptionGen => (&prepared.mol_tokens, &prepared.mol_seg),
            Task::MoleculeGen => (&prepared.cap_tokens, &prepared.cap_seg),
        };
        let ids = self.src_vocab().encode(tokens)?;
        Ok((ids, seg.clone()))
    }

    /// Encoder input built from free text (generality paraphrases).
    pub fn src_ids_from_text(
        &self,
        text: &str,
    ) -> Result<(Vec<u32>, ExpertiseSegmentation), BenchError> {
        match self.task {
            Task::CaptionGen => {
                let (seq, _, seg) = chem::smiles_expertise(text).map_err(|e| {
                    BenchError::InvalidSample {
                        id: "<text>".to_string(),
                        reason: e.to_string(),
                    }
                })?;
                let tokens: Vec<String> = seq.tokens.into_iter().map(|t| t.lexeme).collect();
                Ok((self.smiles_vocab.encode(&tokens)?, seg))
            }
            Task::MoleculeGen => {
                let (tokens, seg) =
                    textseg::caption_expertise(text).map_err(|e| BenchError::InvalidSample {
                        id: "<text>".to_string(),
                        reason: e.to_string(),
                    })?;
                Ok((self.word_vocab.encode(&tokens)?, seg))
            }
        }
    }

    /// Ground-truth output text of a sample for this task.
    pub fn truth<'a>(&self, sample: &'a Sample) -> &'a str {
        match self.task {
            Task::CaptionGen => sample.true_caption(),
            Task::MoleculeGen => sample.true_smiles(),
        }
    }

    /// Target token ids of ground-truth output text.
    pub fn tgt_ids(&self, text: &str) -> Result<Vec<u32>, BenchError> {
        let tokens: Vec<String> = match self.task {
            Task::CaptionGen => metrics::tokenize_text(text),
            Task::MoleculeGen => chem::tokenize_smiles(text)
                .map_err(|e| BenchError::InvalidSample {
                    id: "<target>".to_string(),
                    reason: e.to_string(),
                })?
                .tokens
                .into_iter()
                .map(|t| t.lexeme)
                .collect(),
        };
        Ok(self.tgt_vocab().encode(&tokens)?)
    }

    /// Decode model output ids back to text: words join with spaces,
    /// SMILES lexemes concatenate.
    pub fn decode_output(&self, ids: &[u32]) -> String {
        let tokens = self.tgt_vocab().decode(ids);
        match self.task {
            Task::CaptionGen => tokens.join(" "),
            Task::MoleculeGen => tokens.concat(),
        }
    }

    /// Per-sample score on the task's primary benchmark metric (BLEU-2
    /// for captions, fingerprint Tanimoto for molecules).
    pub fn primary_score(&self, output: &str, truth: &str) -> Result<f64, BenchError> {
        Ok(match self.task {
            Task::CaptionGen => metrics::sim_text(output, truth).bleu2,
            Task::MoleculeGen => metrics::sim_mol(output, truth)?.fp_tanimoto,
        })
    }
}

/// Threshold set used during split construction, echoed into split
/// metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Keep a sample in the edit set when its score falls below this.
    pub low: f64,
    /// Keep a sample in the locality pool when its score exceeds this.
    pub high: f64,
    /// Edit set cap: keep only the N worst-scoring samples (0 = all).
    pub edit_size: usize,
    /// Locality set size (top-similarity ranked).
    pub loc_size: usize,
    /// Paraphrase variants per edit sample.
    pub gen_variants: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            low: 0.2,
            high: 0.95,
            edit_size: 0,
            loc_size: 20,
            gen_variants: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSplit {
    pub task: Task,
    pub edit: Vec<Sample>,
    pub locality: Vec<Sample>,
    /// Molecule task only; empty for captions.
    pub generality: Vec<Sample>,
    pub thresholds: Thresholds,
}

/// Run the unedited model over the corpus and keep samples scoring below
/// `low` on the task's primary metric; their targets are the ground
/// truth. Results come worst-first; `edit_size` > 0 keeps only that many.
pub fn build_edit_set(
    model: &Model,
    codec: &TaskCodec,
    corpus: &[PreparedSample],
    low: f64,
    edit_size: usize,
) -> Result<Vec<Sample>, BenchError> {
    let mut kept: Vec<(f64, usize, Sample)> = Vec::new();
    let mut histogram = vec![0usize; 10];
    for (idx, prepared) in corpus.iter().enumerate() {
        let (src, seg) = codec.src_ids(prepared)?;
        let output = model.generate(&src, &seg, false)?;
        let text = codec.decode_output(&output);
        let score = codec.primary_score(&text, codec.truth(&prepared.sample))?;
        histogram[(score * 10.0).min(9.0).max(0.0) as usize] += 1;
        if score < low {
            kept.push((score, idx, prepared.sample.clone()));
        }
    }
    if kept.is_empty() {
        return Err(BenchError::EmptyResult { histogram });
    }
    kept.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    if edit_size > 0 {
        kept.truncate(edit_size);
    }
    Ok(kept.into_iter().map(|(_, _, s)| s).collect())
}

/// High-scoring samples ranked by their maximum similarity to any edit-set
/// member (fingerprint Tanimoto for molecules, caption BLEU-2 for
/// captions); the top `size` survive. Returns the samples and whether the
/// pool was smaller than requested.
pub fn build_loc_set(
    model: &Model,
    codec: &TaskCodec,
    corpus: &[PreparedSample],
    high: f64,
    edit_set: &[Sample],
    size: usize,
) -> Result<(Vec<Sample>, bool), BenchError> {
    let edit_ids: BTreeSet<&str> = edit_set.iter().map(|s| s.id.as_str()).collect();
    let mut pool: Vec<(usize, f64, &PreparedSample)> = Vec::new();
    let mut histogram = vec![0usize; 10];
    for (idx, prepared) in corpus.iter().enumerate() {
        if edit_ids.contains(prepared.sample.id.as_str()) {
            continue;
        }
        let (src, seg) = codec.src_ids(prepared)?;
        let output = model.generate(&src, &seg, false)?;
        let text = codec.decode_output(&output);
        let score = codec.primary_score(&text, codec.truth(&prepared.sample))?;
        histogram[(score * 10.0).min(9.0).max(0.0) as usize] += 1;
        if score <= high {
            continue;
        }
        let mut closeness = 0.0f64;
        for edit in edit_set {
            let sim = match codec.task {
                Task::MoleculeGen => {
                    metrics::sim_mol(prepared.sample.true_smiles(), edit.true_smiles())?
                        .fp_tanimoto
                }
                Task::CaptionGen => {
                    metrics::sim_text(prepared.sample.true_caption(), edit.true_caption()).bleu2
                }
            };
            closeness = closeness.max(sim);
        }
        pool.push((idx, closeness, prepared));
    }
    if pool.is_empty() {
        return Err(BenchError::EmptyResult { histogram });
    }
    pool.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let truncated = pool.len() < size;
    let kept = pool
        .into_iter()
        .take(size)
        .map(|(_, _, p)| p.sample.clone())
        .collect();
    Ok((kept, truncated))
}

/// Deterministic paraphrase variants of the edit-set captions, keyed by
/// (sample id, variant index). Each entry keeps its parent's ground-truth
/// SMILES as the reference output.
pub fn build_gen_set(edit_set: &[Sample], variants: usize) -> Vec<Sample> {
    let mut out = Vec::with_capacity(edit_set.len() * variants);
    for sample in edit_set {
        for v in 0..variants {
            let seed = crate::numerics::fnv1a64(sample.id.as_bytes()) ^ v as u64;
            let rewritten = textseg::paraphrase(&sample.caption, seed);
            out.push(Sample {
                id: format!("{}#g{v}", sample.id),
                smiles: sample.true_smiles().to_string(),
                caption: rewritten.text,
                target_caption: None,
                target_smiles: None,
                parent_id: Some(sample.id.clone()),
                variant_seed: Some(seed),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str) -> Sample {
        Sample {
            id: id.to_string(),
            smiles: "CCO".to_string(),
            caption: "It is an ethane derivative. A hydroxyl group is attached at the chain end."
                .to_string(),
            target_caption: None,
            target_smiles: None,
            parent_id: None,
            variant_seed: None,
        }
    }

    #[test]
    fn jsonl_round_trips_and_rejects_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.jsonl");
        let samples = vec![sample("a"), sample("b")];
        write_jsonl(&path, &samples).unwrap();
        let loaded = read_jsonl(&path).unwrap();
        assert_eq!(loaded, samples);

        std::fs::write(&path, "{\"id\":\"x\",\"smiles\":\"C\",\"caption\":\"It melts.\",\"bogus\":1}\n")
            .unwrap();
        assert!(matches!(
            read_jsonl(&path),
            Err(BenchError::BadJson { line: 1, .. })
        ));
    }

    #[test]
    fn prepare_validates_all_fields() {
        let good = prepare(sample("ok")).unwrap();
        assert!(good.mol_seg.len() >= 2); // hydroxyl + backbone
        assert_eq!(good.cap_seg.len(), 2);

        let mut bad = sample("bad");
        bad.smiles = "C(".to_string();
        assert!(matches!(prepare(bad), Err(BenchError::InvalidSample { .. })));

        let mut bad = sample("bad2");
        bad.target_smiles = Some("C1CC".to_string());
        assert!(matches!(prepare(bad), Err(BenchError::InvalidSample { .. })));
    }

    #[test]
    fn vocabs_cover_corpus_and_synonym_replacements() {
        let corpus = generate_corpus(&CorpusConfig::new(30, 3));
        let tables = RuleTables::builtin();
        let (smiles_vocab, word_vocab) = build_vocabs(&corpus, tables);
        for s in &corpus {
            for t in chem::tokenize_smiles(&s.smiles).unwrap().tokens {
                assert!(smiles_vocab.id(&t.lexeme).is_some(), "missing {:?}", t.lexeme);
            }
            for w in metrics::tokenize_text(&s.caption) {
                assert!(word_vocab.id(&w).is_some(), "missing {w:?}");
            }
        }
        // paraphrases of corpus captions stay encodable
        for s in corpus.iter().take(10) {
            let p = textseg::paraphrase(&s.caption, 1);
            for w in metrics::tokenize_text(&p.text) {
                assert!(word_vocab.id(&w).is_some(), "paraphrase word {w:?} missing");
            }
        }
    }

    #[test]
    fn gen_set_maps_every_entry_to_a_parent() {
        let mut edit = vec![sample("e0"), sample("e1")];
        edit[1].target_smiles = Some("CCN".to_string());
        let gen = build_gen_set(&edit, 2);
        assert_eq!(gen.len(), 4);
        for g in &gen {
            let parent = g.parent_id.as_ref().unwrap();
            assert!(edit.iter().any(|e| &e.id == parent));
            assert!(g.variant_seed.is_some());
        }
        // ground truth follows the parent's corrected molecule
        assert_eq!(gen[2].smiles, "CCN");
        // same id + variant -> same paraphrase, different variants differ
        let again = build_gen_set(&edit, 2);
        assert_eq!(gen[0].caption, again[0].caption);
    }
}
