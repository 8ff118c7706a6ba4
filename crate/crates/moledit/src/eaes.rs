//! Expertise-Aware Editing Switcher: a memory bank of per-expertise mean
//! encoder embeddings from applied edits, and the all-expertise match rule
//! that gates adapter activation.
//!
//! Bank embeddings come from the unedited encoder (adapters inactive), and
//! decision-time means are computed the same way, so the matching space
//! stays stationary across sequential edits. One decision gates every
//! wrapped site.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backbone::{BackboneError, EncodeTrace, Model};
use crate::numerics::Tensor;
use crate::segment::ExpertiseSegmentation;

pub const BANK_MAGIC: &[u8; 4] = b"MEKB";
pub const BANK_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EaesError {
    #[error("empty expertise segment")]
    EmptySegment,
    #[error("zero-norm expertise embedding for edit {edit_id} segment {label:?}")]
    DegenerateEmbedding { edit_id: u64, label: String },
    #[error("bank io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad bank file: {0}")]
    BadBankFile(String),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
}

/// Mean encoder embedding over one expertise segment, with a degeneracy
/// flag for zero-norm means.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseMean {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Arithmetic mean of the final-encoder-layer token embeddings over a
/// segment.
pub fn expertise_mean(enc_final: &Tensor, segment: &[usize]) -> Result<ExpertiseMean, EaesError> {
    if segment.is_empty() {
        return Err(EaesError::EmptySegment);
    }
    let d = enc_final.cols();
    let mut values = vec![0.0; d];
    for &i in segment {
        for (acc, v) in values.iter_mut().zip(enc_final.row(i)) {
            *acc += v;
        }
    }
    for v in values.iter_mut() {
        *v /= segment.len() as f64;
    }
    let degenerate = norm(&values) == 0.0;
    Ok(ExpertiseMean { values, degenerate })
}

/// All per-segment means of an encoder pass, labeled.
pub fn segmented_means(
    enc_final: &Tensor,
    seg: &ExpertiseSegmentation,
) -> Result<Vec<(String, ExpertiseMean)>, EaesError> {
    seg.segments
        .iter()
        .map(|s| Ok((s.label.clone(), expertise_mean(enc_final, &s.token_indices)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub edit_id: u64,
    pub label: String,
    pub embedding: Vec<f64>,
}

/// Append-only store of expertise embeddings of applied edits plus the
/// similarity threshold tau.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpertiseMemoryBank {
    pub tau: f64,
    entries: Vec<BankEntry>,
}

/// Outcome of the all-expertise match rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchDecision {
    pub active: bool,
    /// Best cosine similarity per input expertise (-1 against an empty bank).
    pub best_similarities: Vec<f64>,
    /// Index of the input expertise with the lowest best similarity.
    pub limiting: usize,
}

impl ExpertiseMemoryBank {
    pub fn new(tau: f64) -> Self {
        assert!(tau > 0.0 && tau <= 1.0, "tau must lie in (0,1]");
        ExpertiseMemoryBank {
            tau,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    /// Append one entry per expertise segment of an applied edit.
    /// Duplicate edit ids are allowed and append again.
    pub fn register_edit(
        &mut self,
        edit_id: u64,
        means: &[(String, ExpertiseMean)],
    ) -> Result<usize, EaesError> {
        for (label, mean) in means {
            if mean.degenerate {
                return Err(EaesError::DegenerateEmbedding {
                    edit_id,
                    label: label.clone(),
                });
            }
        }
        for (label, mean) in means {
            self.entries.push(BankEntry {
                edit_id,
                label: label.clone(),
                embedding: mean.values.clone(),
            });
        }
        Ok(means.len())
    }

    /// Active iff every input expertise finds a bank entry with cosine
    /// similarity at least tau. An empty bank never activates.
    pub fn decide(&self, input_means: &[ExpertiseMean]) -> SwitchDecision {
        assert!(!input_means.is_empty(), "decide needs at least one expertise");
        let best: Vec<f64> = input_means
            .iter()
            .map(|m| {
                self.entries
                    .iter()
                    .map(|e| cosine(&m.values, &e.embedding))
                    .fold(-1.0f64, f64::max)
            })
            .collect();
        let limiting = best
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        SwitchDecision {
            active: best.iter().all(|&s| s >= self.tau),
            best_similarities: best,
            limiting,
        }
    }

    /// Binary format: magic `MEKB`, version u32, tau f64, entry count
    /// u32, then per entry: edit id u64, label length u32 + bytes,
    /// embedding width u32, f64 embedding. Little-endian throughout.
    pub fn save(&self, path: &Path) -> Result<(), EaesError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(BANK_MAGIC)?;
        w.write_all(&BANK_VERSION.to_le_bytes())?;
        w.write_all(&self.tau.to_le_bytes())?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for e in &self.entries {
            w.write_all(&e.edit_id.to_le_bytes())?;
            w.write_all(&(e.label.len() as u32).to_le_bytes())?;
            w.write_all(e.label.as_bytes())?;
            w.write_all(&(e.embedding.len() as u32).to_le_bytes())?;
            for &v in &e.embedding {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EaesError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BANK_MAGIC {
            return Err(EaesError::BadBankFile("bad magic".to_string()));
        }
        let version = read_u32(&mut r)?;
        if version != BANK_VERSION {
            return Err(EaesError::BadBankFile(format!("unsupported version {version}")));
        }
        let mut f8 = [0u8; 8];
        r.read_exact(&mut f8)?;
        let tau = f64::from_le_bytes(f8);
        let count = read_u32(&mut r)? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut f8)?;
            let edit_id = u64::from_le_bytes(f8);
            let label_len = read_u32(&mut r)? as usize;
            let mut label = vec![0u8; label_len];
            r.read_exact(&mut label)?;
            let label = String::from_utf8(label)
                .map_err(|_| EaesError::BadBankFile("non-utf8 label".to_string()))?;
            let width = read_u32(&mut r)? as usize;
            let mut embedding = Vec::with_capacity(width);
            for _ in 0..width {
                r.read_exact(&mut f8)?;
                embedding.push(f64::from_le_bytes(f8));
            }
            entries.push(BankEntry {
                edit_id,
                label,
                embedding,
            });
        }
        Ok(ExpertiseMemoryBank { tau, entries })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, EaesError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; zero-norm vectors score 0 against everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (na * nb)
}

/// Result of a switched inference pass.
#[derive(Debug, Clone)]
pub struct RouteOutcome {
    pub output: Vec<u32>,
    pub decision: SwitchDecision,
    /// Encoder trace of the unedited pass (reused for bank queries).
    pub unedited_trace: EncodeTrace,
}

/// Inference through the switcher: an unedited encoder pass produces the
/// expertise means; if every expertise matches the bank, rerun with
/// adapters active at all wrapped sites, otherwise emit the unedited
/// model's output (same pass, bit-identical by construction).
pub fn route_inference(
    model: &Model,
    bank: &ExpertiseMemoryBank,
    src: &[u32],
    seg: &ExpertiseSegmentation,
    decision_seg: &ExpertiseSegmentation,
) -> Result<RouteOutcome, EaesError> {
    let unedited = model.encode(src, seg, false)?;
    let means = segmented_means(&unedited.final_norm, decision_seg)?;
    let mean_vecs: Vec<ExpertiseMean> = means.into_iter().map(|(_, m)| m).collect();
    let decision = bank.decide(&mean_vecs);
    let output = if decision.active {
        let edited = model.encode(src, seg, true)?;
        model.decode_greedy(&edited, true, model.config.max_len)?
    } else {
        model.decode_greedy(&unedited, false, model.config.max_len)?
    };
    Ok(RouteOutcome {
        output,
        decision,
        unedited_trace: unedited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_of(values: Vec<f64>) -> ExpertiseMean {
        let degenerate = norm(&values) == 0.0;
        ExpertiseMean { values, degenerate }
    }

    #[test]
    fn single_token_mean_is_that_embedding() {
        let enc = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let m = expertise_mean(&enc, &[1]).unwrap();
        assert_eq!(m.values, vec![3.0, 4.0]);
        assert!(!m.degenerate);
    }

    #[test]
    fn opposite_vectors_flag_degenerate() {
        let enc = Tensor::from_rows(&[vec![1.0, -2.0], vec![-1.0, 2.0]]);
        let m = expertise_mean(&enc, &[0, 1]).unwrap();
        assert_eq!(m.values, vec![0.0, 0.0]);
        assert!(m.degenerate);
    }

    #[test]
    fn three_token_mean_matches_direct_summation() {
        let rows = [vec![1.0, 0.0, 2.0], vec![0.5, 3.0, -1.0], vec![2.5, 0.0, 5.0]];
        let enc = Tensor::from_rows(&rows);
        let m = expertise_mean(&enc, &[0, 1, 2]).unwrap();
        for j in 0..3 {
            let direct = (rows[0][j] + rows[1][j] + rows[2][j]) / 3.0;
            assert!((m.values[j] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_segment_is_an_error() {
        let enc = Tensor::zeros(&[2, 2]);
        assert!(matches!(expertise_mean(&enc, &[]), Err(EaesError::EmptySegment)));
    }

    #[test]
    fn register_appends_one_entry_per_segment() {
        let mut bank = ExpertiseMemoryBank::new(0.9);
        let means = vec![
            ("Origin".to_string(), mean_of(vec![1.0, 0.0])),
            ("Type".to_string(), mean_of(vec![0.0, 1.0])),
            ("Property".to_string(), mean_of(vec![1.0, 1.0])),
        ];
        assert_eq!(bank.register_edit(1, &means).unwrap(), 3);
        assert_eq!(bank.len(), 3);
        // duplicate registration appends again
        bank.register_edit(1, &means).unwrap();
        assert_eq!(bank.len(), 6);
    }

    #[test]
    fn degenerate_embedding_is_rejected_atomically() {
        let mut bank = ExpertiseMemoryBank::new(0.9);
        let means = vec![
            ("a".to_string(), mean_of(vec![1.0, 0.0])),
            ("b".to_string(), mean_of(vec![0.0, 0.0])),
        ];
        assert!(matches!(
            bank.register_edit(2, &means),
            Err(EaesError::DegenerateEmbedding { edit_id: 2, .. })
        ));
        assert_eq!(bank.len(), 0);
    }

    #[test]
    fn empty_bank_never_activates() {
        let bank = ExpertiseMemoryBank::new(0.5);
        let d = bank.decide(&[mean_of(vec![1.0, 0.0])]);
        assert!(!d.active);
        assert_eq!(d.best_similarities, vec![-1.0]);
    }

    #[test]
    fn exact_matches_activate() {
        let mut bank = ExpertiseMemoryBank::new(0.9);
        bank.register_edit(
            1,
            &[
                ("a".to_string(), mean_of(vec![1.0, 0.0])),
                ("b".to_string(), mean_of(vec![0.0, 1.0])),
            ],
        )
        .unwrap();
        let d = bank.decide(&[mean_of(vec![1.0, 0.0]), mean_of(vec![0.0, 1.0])]);
        assert!(d.active);
        assert_eq!(d.best_similarities, vec![1.0, 1.0]);
    }

    #[test]
    fn one_orthogonal_expertise_blocks_activation() {
        let mut bank = ExpertiseMemoryBank::new(0.5);
        bank.register_edit(
            1,
            &[
                ("a".to_string(), mean_of(vec![1.0, 0.0, 0.0])),
                ("b".to_string(), mean_of(vec![0.0, 1.0, 0.0])),
            ],
        )
        .unwrap();
        // first expertise matches perfectly, second is orthogonal to all
        let d = bank.decide(&[
            mean_of(vec![1.0, 0.0, 0.0]),
            mean_of(vec![0.0, 0.0, 1.0]),
        ]);
        assert!(!d.active);
        assert_eq!(d.limiting, 1);
        assert_eq!(d.best_similarities[0], 1.0);
        assert!(d.best_similarities[1] <= 0.0);
    }

    #[test]
    fn raising_tau_never_turns_inactive_active() {
        let mut bank_low = ExpertiseMemoryBank::new(0.3);
        bank_low
            .register_edit(1, &[("a".to_string(), mean_of(vec![1.0, 0.2]))])
            .unwrap();
        let mut bank_high = bank_low.clone();
        bank_high.tau = 0.95;
        let inputs = [
            vec![1.0, 0.2],
            vec![1.0, 0.0],
            vec![0.4, 1.0],
            vec![-1.0, 0.0],
        ];
        for v in inputs {
            let low = bank_low.decide(&[mean_of(v.clone())]);
            let high = bank_high.decide(&[mean_of(v)]);
            assert!(!(high.active && !low.active), "monotonicity violated");
        }
    }

    #[test]
    fn self_recall_is_immediate() {
        let mut bank = ExpertiseMemoryBank::new(1.0 - 1e-9);
        let means = vec![
            ("a".to_string(), mean_of(vec![0.3, -1.2, 0.7])),
            ("b".to_string(), mean_of(vec![2.0, 0.1, 0.0])),
        ];
        bank.register_edit(9, &means).unwrap();
        let d = bank.decide(&[means[0].1.clone(), means[1].1.clone()]);
        assert!(d.active);
    }

    #[test]
    fn tau_above_every_similarity_deactivates_everything() {
        let mut bank = ExpertiseMemoryBank::new(1.0);
        bank.register_edit(1, &[("a".to_string(), mean_of(vec![1.0, 0.0]))]).unwrap();
        // slightly rotated: similarity strictly below 1, tau = 1
        let d = bank.decide(&[mean_of(vec![1.0, 0.01])]);
        assert!(!d.active);
    }

    #[test]
    fn bank_file_round_trips() {
        let mut bank = ExpertiseMemoryBank::new(0.8);
        bank.register_edit(
            42,
            &[
                ("hydroxyl".to_string(), mean_of(vec![0.5, -1.5, 2.25])),
                ("backbone".to_string(), mean_of(vec![1.0, 1.0, 1.0])),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.bin");
        bank.save(&path).unwrap();
        let loaded = ExpertiseMemoryBank::load(&path).unwrap();
        assert_eq!(loaded.tau, bank.tau);
        assert_eq!(loaded.entries(), bank.entries());

        std::fs::write(&path, b"XXXX").unwrap();
        assert!(matches!(
            ExpertiseMemoryBank::load(&path),
            Err(EaesError::BadBankFile(_)) | Err(EaesError::Io(_))
        ));
    }
}
