//! The Reliability / Locality / Generality evaluator.
//!
//! Reliability compares routed outputs on the edit set against ground
//! truth; Locality compares routed outputs on the locality set against
//! cached pre-edit outputs (never ground truth); Generality (molecule
//! task) compares routed outputs on paraphrased captions against the
//! parent's ground-truth SMILES.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BenchError, BenchmarkSplit, PreparedSample, Sample, TaskCodec};
use crate::backbone::Model;
use crate::editing::{Editor, Task};
use crate::metrics::{self, MolSimReport, TextSimReport};

/// Cached unedited-model outputs keyed by sample id.
pub type PreEditCache = BTreeMap<String, String>;

/// Decode the unedited model over samples and cache outputs by id.
pub fn pre_edit_outputs(
    model: &Model,
    codec: &TaskCodec,
    samples: &[PreparedSample],
) -> Result<PreEditCache, BenchError> {
    let mut cache = PreEditCache::new();
    for prepared in samples {
        let (src, seg) = codec.src_ids(prepared)?;
        let output = model.generate(&src, &seg, false)?;
        cache.insert(prepared.sample.id.clone(), codec.decode_output(&output));
    }
    Ok(cache)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
}

fn stats(values: &[f64]) -> MetricStats {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MetricStats {
        mean,
        std: var.sqrt(),
    }
}

/// Per-metric means and population standard deviations for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub count: usize,
    pub metrics: BTreeMap<String, MetricStats>,
}

/// Per-sample evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleEval {
    pub id: String,
    pub output: String,
    pub reference: String,
    /// Whether the switcher activated the adapters for this input.
    pub switch_active: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<TextSimReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mol: Option<MolSimReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub reliability: MetricTable,
    pub locality: MetricTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generality: Option<MetricTable>,
}

/// Report plus the per-sample rows behind it.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub reliability_rows: Vec<SampleEval>,
    pub locality_rows: Vec<SampleEval>,
    pub generality_rows: Vec<SampleEval>,
}

fn score_row(
    codec: &TaskCodec,
    id: &str,
    output: String,
    reference: &str,
    switch_active: bool,
) -> Result<SampleEval, BenchError> {
    let (text, mol) = match codec.task {
        Task::CaptionGen => (Some(metrics::sim_text(&output, reference)), None),
        Task::MoleculeGen => (None, Some(metrics::sim_mol(&output, reference)?)),
    };
    Ok(SampleEval {
        id: id.to_string(),
        output,
        reference: reference.to_string(),
        switch_active,
        text,
        mol,
    })
}

fn table(task: Task, rows: &[SampleEval]) -> MetricTable {
    let mut metrics: BTreeMap<String, MetricStats> = BTreeMap::new();
    let collect = |f: &dyn Fn(&SampleEval) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    match task {
        Task::CaptionGen => {
            metrics.insert("bleu2".into(), stats(&collect(&|r| r.text.unwrap().bleu2)));
            metrics.insert(
                "meteor_lite".into(),
                stats(&collect(&|r| r.text.unwrap().meteor_lite)),
            );
            metrics.insert(
                "rouge1_recall".into(),
                stats(&collect(&|r| r.text.unwrap().rouge1_recall)),
            );
        }
        Task::MoleculeGen => {
            metrics.insert("bleu4".into(), stats(&collect(&|r| r.mol.unwrap().bleu4)));
            metrics.insert(
                "lev_norm".into(),
                stats(&collect(&|r| r.mol.unwrap().lev_norm)),
            );
            metrics.insert(
                "fp_tanimoto".into(),
                stats(&collect(&|r| r.mol.unwrap().fp_tanimoto)),
            );
            metrics.insert(
                "validity".into(),
                stats(&collect(&|r| f64::from(r.mol.unwrap().candidate_valid))),
            );
        }
    }
    MetricTable {
        count: rows.len(),
        metrics,
    }
}

/// Order-preserving parallel map over samples; workers share the editor
/// read-only (frozen model, frozen bank).
fn par_map<R: Send>(
    items: &[Sample],
    threads: usize,
    f: impl Fn(&Sample) -> Result<R, BenchError> + Sync,
) -> Result<Vec<R>, BenchError> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk_size = items.len().div_ceil(threads);
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk_size)
            .map(|chunk| scope.spawn(|| chunk.iter().map(&f).collect::<Result<Vec<R>, _>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("eval worker panicked"))
            .collect::<Result<Vec<Vec<R>>, _>>()
    })?;
    Ok(results.into_iter().flatten().collect())
}

/// Evaluate an edited pipeline over a benchmark split. Locality samples
/// must all appear in the pre-edit cache.
pub fn evaluate(
    editor: &Editor,
    codec: &TaskCodec,
    split: &BenchmarkSplit,
    cache: &PreEditCache,
) -> Result<Evaluation, BenchError> {
    evaluate_threaded(editor, codec, split, cache, 1)
}

/// As `evaluate`, with samples fanned out over a worker pool. Results are
/// identical to the sequential path (order-preserving merge).
pub fn evaluate_threaded(
    editor: &Editor,
    codec: &TaskCodec,
    split: &BenchmarkSplit,
    cache: &PreEditCache,
    threads: usize,
) -> Result<Evaluation, BenchError> {
    let route_text = |sample: &Sample| -> Result<(String, bool), BenchError> {
        let prepared = super::prepare(sample.clone())?;
        let (src, seg) = codec.src_ids(&prepared)?;
        let outcome = editor.route(&src, &seg)?;
        Ok((codec.decode_output(&outcome.output), outcome.decision.active))
    };

    let reliability_rows = par_map(&split.edit, threads, |sample| {
        let (output, active) = route_text(sample)?;
        score_row(codec, &sample.id, output, codec.truth(sample), active)
    })?;

    let locality_rows = par_map(&split.locality, threads, |sample| {
        let reference = cache
            .get(&sample.id)
            .ok_or_else(|| BenchError::MissingPreEditCache {
                id: sample.id.clone(),
            })?;
        let (output, active) = route_text(sample)?;
        score_row(codec, &sample.id, output, reference, active)
    })?;

    let generality_rows = if codec.task == Task::MoleculeGen {
        par_map(&split.generality, threads, |sample| {
            let (src, seg) = codec.src_ids_from_text(&sample.caption)?;
            let outcome = editor.route(&src, &seg)?;
            let output = codec.decode_output(&outcome.output);
            score_row(
                codec,
                &sample.id,
                output,
                &sample.smiles,
                outcome.decision.active,
            )
        })?
    } else {
        Vec::new()
    };

    let report = EvalReport {
        task: codec.task,
        reliability: table(codec.task, &reliability_rows),
        locality: table(codec.task, &locality_rows),
        generality: if codec.task == Task::MoleculeGen {
            Some(table(codec.task, &generality_rows))
        } else {
            None
        },
    };
    Ok(Evaluation {
        report,
        reliability_rows,
        locality_rows,
        generality_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_match_hand_averages() {
        let s = stats(&[0.2, 0.4, 0.9]);
        assert!((s.mean - 0.5).abs() < 1e-12);
        let var = ((0.2f64 - 0.5).powi(2) + (0.4f64 - 0.5).powi(2) + (0.9f64 - 0.5).powi(2)) / 3.0;
        assert!((s.std - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn caption_tables_carry_three_metrics() {
        let rows = vec![SampleEval {
            id: "x".into(),
            output: "It is an acid.".into(),
            reference: "It is an acid.".into(),
            switch_active: true,
            text: Some(metrics::sim_text("It is an acid.", "It is an acid.")),
            mol: None,
        }];
        let t = table(Task::CaptionGen, &rows);
        assert_eq!(t.count, 1);
        assert_eq!(t.metrics["bleu2"].mean, 1.0);
        assert_eq!(t.metrics["rouge1_recall"].mean, 1.0);
    }
}
