//! End-to-end glue shared by the CLI and the acceptance suite: corpus to
//! vocabularies to pretrained model to benchmark split to sequential
//! edits to evaluation.

use crate::backbone::{Model, ModelConfig};
use crate::bench::{
    self, build_edit_set, build_gen_set, build_loc_set, BenchError, BenchmarkSplit,
    PreEditCache, PreparedSample, Sample, TaskCodec, Thresholds,
};
use crate::config::RunConfig;
use crate::editing::{
    AblationFlags, EditRequest, EditResult, EditSample, Editor, EditorConfig, Task,
};
use crate::segment::ExpertiseSegmentation;
use crate::textseg::RuleTables;

/// Trained-side text of a sample for a task (what pretraining teaches,
/// including any planted wrong knowledge).
pub fn trained_text<'a>(task: Task, sample: &'a Sample) -> &'a str {
    match task {
        Task::CaptionGen => &sample.caption,
        Task::MoleculeGen => &sample.smiles,
    }
}

/// Teacher-forcing tuples for pretraining on the trained fields.
pub fn training_tuples(
    codec: &TaskCodec,
    corpus: &[PreparedSample],
) -> Result<Vec<(Vec<u32>, ExpertiseSegmentation, Vec<u32>)>, BenchError> {
    corpus
        .iter()
        .map(|p| {
            let (src, seg) = codec.src_ids(p)?;
            let tgt = codec.tgt_ids(trained_text(codec.task, &p.sample))?;
            Ok((src, seg, tgt))
        })
        .collect()
}

/// Build the codec for a task from a corpus (vocabularies grown from all
/// sample fields plus synonym replacements).
pub fn codec_for(task: Task, corpus: &[Sample]) -> TaskCodec {
    let (smiles_vocab, word_vocab) = bench::build_vocabs(corpus, RuleTables::builtin());
    TaskCodec::new(task, smiles_vocab, word_vocab)
}

/// Model dimensions from the run config with vocab sizes from the codec.
pub fn model_config(run: &RunConfig, codec: &TaskCodec, seed: u64) -> ModelConfig {
    ModelConfig {
        src_vocab: codec.src_vocab().len(),
        tgt_vocab: codec.tgt_vocab().len(),
        d_model: run.model.d_model,
        n_enc_layers: run.model.n_enc_layers,
        n_dec_layers: run.model.n_dec_layers,
        d_ffn: run.model.d_ffn,
        max_len: run.model.max_len,
        seed,
    }
}

/// Pretrain a fresh model on the trained fields of the corpus.
pub fn pretrain_model(
    run: &RunConfig,
    codec: &TaskCodec,
    corpus: &[PreparedSample],
) -> Result<(Model, Vec<f64>), BenchError> {
    let mut model = Model::new(model_config(run, codec, run.seed));
    let tuples = training_tuples(codec, corpus)?;
    let log = model.pretrain(&tuples, run.pretrain.epochs, run.pretrain.lr)?;
    Ok((model, log))
}

/// Construct the three benchmark sets from an unedited model.
pub fn build_split(
    model: &Model,
    codec: &TaskCodec,
    corpus: &[PreparedSample],
    thresholds: Thresholds,
) -> Result<(BenchmarkSplit, bool), BenchError> {
    let edit = build_edit_set(model, codec, corpus, thresholds.low, thresholds.edit_size)?;
    let (locality, truncated) =
        build_loc_set(model, codec, corpus, thresholds.high, &edit, thresholds.loc_size)?;
    let generality = if codec.task == Task::MoleculeGen {
        build_gen_set(&edit, thresholds.gen_variants)
    } else {
        Vec::new()
    };
    Ok((
        BenchmarkSplit {
            task: codec.task,
            edit,
            locality,
            generality,
            thresholds,
        },
        truncated,
    ))
}

/// Convert an edit-set sample into an editable request payload.
pub fn edit_sample(codec: &TaskCodec, sample: &Sample) -> Result<EditSample, BenchError> {
    let prepared = bench::prepare(sample.clone())?;
    let (src, seg) = codec.src_ids(&prepared)?;
    let tgt = codec.tgt_ids(codec.truth(sample))?;
    Ok(EditSample { src, seg, tgt })
}

/// Apply all edits sequentially: one piece of knowledge per request for
/// molecule generation, two for caption generation. Returns one result
/// per request.
pub fn run_edits(
    editor: &mut Editor,
    codec: &TaskCodec,
    split: &BenchmarkSplit,
    run: &RunConfig,
) -> Result<Vec<EditResult>, BenchError> {
    let task = codec.task;
    let limit = if run.edit.max_edits == 0 {
        split.edit.len()
    } else {
        run.edit.max_edits.min(split.edit.len())
    };
    let batch = match task {
        Task::CaptionGen => 2,
        Task::MoleculeGen => 1,
    };
    let mut results = Vec::new();
    for chunk in split.edit[..limit].chunks(batch) {
        let samples = chunk
            .iter()
            .map(|s| edit_sample(codec, s))
            .collect::<Result<Vec<_>, _>>()?;
        let request = EditRequest {
            task,
            samples,
            steps: run.edit.steps,
            lr: run.edit.lr_for(task),
            early_stop_loss: run.edit.early_stop_loss,
        };
        results.push(editor.apply_edit(&request)?);
    }
    Ok(results)
}

/// Everything a finished pipeline run exposes for evaluation and reports.
pub struct PipelineOutcome {
    pub codec: TaskCodec,
    pub corpus: Vec<PreparedSample>,
    pub pretrain_log: Vec<f64>,
    pub split: BenchmarkSplit,
    pub locality_truncated: bool,
    pub cache: PreEditCache,
    pub editor: Editor,
    pub edit_results: Vec<EditResult>,
}

/// Full run: generate corpus, pretrain, build the split, cache pre-edit
/// outputs, install adapters, apply the edits.
pub fn run_pipeline(
    run: &RunConfig,
    task: Task,
    flags: AblationFlags,
) -> Result<PipelineOutcome, BenchError> {
    let samples = bench::generate_corpus(&run.corpus_config());
    run_pipeline_on(run, task, flags, samples)
}

/// As `run_pipeline` but over an existing corpus.
pub fn run_pipeline_on(
    run: &RunConfig,
    task: Task,
    flags: AblationFlags,
    samples: Vec<Sample>,
) -> Result<PipelineOutcome, BenchError> {
    let codec = codec_for(task, &samples);
    let corpus = bench::prepare_all(samples)?;
    let (model, pretrain_log) = pretrain_model(run, &codec, &corpus)?;
    let (split, locality_truncated) = build_split(&model, &codec, &corpus, run.bench)?;

    let needs_cache: Vec<PreparedSample> = corpus
        .iter()
        .filter(|p| split.locality.iter().any(|s| s.id == p.sample.id))
        .cloned()
        .collect();
    let cache = bench::pre_edit_outputs(&model, &codec, &needs_cache)?;

    let mut editor_config = EditorConfig::new(&model, run.tau_for(task), flags, run.seed ^ 0xed17);
    editor_config.adapter.experts = run.adapter.experts;
    editor_config.adapter.top_k = run.adapter.top_k;
    editor_config.adapter.lambda = run.adapter.lambda;
    editor_config.adapter.gate_noise_std = run.adapter.gate_noise_std;
    editor_config.adapter.expert_hidden = run.adapter.expert_hidden;
    let mut editor = Editor::install(model, editor_config)?;
    let edit_results = run_edits(&mut editor, &codec, &split, run)?;

    Ok(PipelineOutcome {
        codec,
        corpus,
        pretrain_log,
        split,
        locality_truncated,
        cache,
        editor,
        edit_results,
    })
}
