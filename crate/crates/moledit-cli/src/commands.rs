//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use moledit::bench::{
    self, evaluate_threaded, BenchError, BenchmarkSplit, PreEditCache, Sample, Thresholds,
};
use moledit::config::RunConfig;
use moledit::editing::{AblationFlags, EditingError, Editor, EditorConfig, Task};
use moledit::pipeline;
use moledit::rationale;

use crate::bundles::{
    self, content_hash, load_bench, load_edited, load_model, EditedMeta, ModelMeta,
};
use crate::{AppError, AppResult};

pub fn gen_corpus(run: &RunConfig, out: &Path, size: Option<usize>) -> AppResult<()> {
    let mut config = run.corpus_config();
    if let Some(size) = size {
        config.size = size;
    }
    let samples = bench::generate_corpus(&config);
    bench::write_jsonl(out, &samples).context("write corpus")?;
    println!(
        "wrote {} samples to {} (seed {})",
        samples.len(),
        out.display(),
        config.seed
    );
    Ok(())
}

pub fn pretrain(
    run: &RunConfig,
    corpus_path: &Path,
    task: Task,
    out: &Path,
    resume: bool,
) -> AppResult<()> {
    let samples = bench::read_jsonl(corpus_path).context("read corpus")?;
    if samples.is_empty() {
        return Err(AppError::Data(anyhow!(
            "corpus {} is empty",
            corpus_path.display()
        )));
    }
    let corpus = bench::prepare_all(samples.clone()).map_err(data)?;

    let (mut model, codec, mut loss_log, epochs_before) = if resume {
        let bundle = load_model(out)?;
        if bundle.meta.config_hash != run.content_hash() {
            return Err(AppError::Data(anyhow!(
                "resume rejected: checkpoint config hash {:#x} does not match the resolved config {:#x}",
                bundle.meta.config_hash,
                run.content_hash()
            )));
        }
        if bundle.meta.task != task {
            return Err(AppError::Data(anyhow!("resume rejected: task mismatch")));
        }
        (
            bundle.model,
            bundle.codec,
            bundle.meta.loss_log,
            bundle.meta.epochs_done,
        )
    } else {
        let codec = pipeline::codec_for(task, &samples);
        let model = moledit::backbone::Model::new(pipeline::model_config(run, &codec, run.seed));
        (model, codec, Vec::new(), 0)
    };

    let tuples = pipeline::training_tuples(&codec, &corpus).map_err(data)?;
    let log = model
        .pretrain(&tuples, run.pretrain.epochs, run.pretrain.lr)
        .map_err(|e| AppError::Data(anyhow!("pretrain: {e}")))?;
    loss_log.extend(log);
    let accuracy = model.token_accuracy(&tuples).map_err(data_bb)?;

    let meta = ModelMeta {
        task,
        config: run.clone(),
        config_hash: run.content_hash(),
        model: model.config.clone(),
        epochs_done: epochs_before + run.pretrain.epochs,
        loss_log,
    };
    bundles::save_model(out, &meta, &model, &codec)?;
    println!(
        "pretrained {} epochs (total {}): final loss {:.4}, token accuracy {:.4}",
        run.pretrain.epochs,
        meta.epochs_done,
        meta.loss_log.last().copied().unwrap_or(f64::NAN),
        accuracy
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct BenchMeta {
    task: Task,
    thresholds: Thresholds,
    edit_count: usize,
    locality_count: usize,
    generality_count: usize,
    locality_truncated: bool,
    config: RunConfig,
    corpus_hash: String,
}

pub fn bench_build(
    run: &RunConfig,
    model_path: &Path,
    corpus_path: &Path,
    task: Task,
    out: &Path,
    thresholds: Thresholds,
) -> AppResult<()> {
    let bundle = load_model(model_path)?;
    if bundle.meta.task != task {
        return Err(AppError::Data(anyhow!(
            "model was pretrained for task {:?}",
            bundle.meta.task
        )));
    }
    let samples = bench::read_jsonl(corpus_path).context("read corpus")?;
    let corpus = bench::prepare_all(samples).map_err(data)?;

    let (split, truncated) =
        match pipeline::build_split(&bundle.model, &bundle.codec, &corpus, thresholds) {
            Ok(v) => v,
            Err(BenchError::EmptyResult { histogram }) => {
                eprintln!("score histogram (0.0-1.0 in tenths): {histogram:?}");
                return Err(AppError::Data(anyhow!(
                    "no samples passed the threshold; see histogram above"
                )));
            }
            Err(e) => return Err(data(e)),
        };
    if truncated {
        eprintln!(
            "warning: locality pool smaller than requested size {}",
            thresholds.loc_size
        );
    }

    std::fs::create_dir_all(out)?;
    bench::write_jsonl(&out.join("edit.jsonl"), &split.edit).map_err(data)?;
    bench::write_jsonl(&out.join("locality.jsonl"), &split.locality).map_err(data)?;
    if task == Task::MoleculeGen {
        bench::write_jsonl(&out.join("generality.jsonl"), &split.generality).map_err(data)?;
    }
    let meta = BenchMeta {
        task,
        thresholds,
        edit_count: split.edit.len(),
        locality_count: split.locality.len(),
        generality_count: split.generality.len(),
        locality_truncated: truncated,
        config: run.clone(),
        corpus_hash: content_hash(&[corpus_path])?,
    };
    std::fs::write(out.join("meta.json"), serde_json::to_vec_pretty(&meta)?)?;
    println!(
        "built benchmark: {} edit, {} locality, {} generality -> {}",
        meta.edit_count,
        meta.locality_count,
        meta.generality_count,
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRow {
    id: String,
    output: String,
}

fn write_cache(path: &Path, cache: &PreEditCache) -> AppResult<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (id, output) in cache {
        serde_json::to_writer(
            &mut w,
            &CacheRow {
                id: id.clone(),
                output: output.clone(),
            },
        )?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn read_cache(path: &Path) -> AppResult<PreEditCache> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("missing pre-edit cache {}", path.display()))?;
    let mut cache = PreEditCache::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: CacheRow = serde_json::from_str(line)?;
        cache.insert(row.id, row.output);
    }
    Ok(cache)
}

pub fn edit(
    run: &RunConfig,
    model_path: &Path,
    bench_dir: &Path,
    task: Task,
    ablate: &str,
    out: &Path,
) -> AppResult<()> {
    let flags = AblationFlags::parse(ablate).map_err(|e| match e {
        EditingError::UnknownFlag(_) | EditingError::ConflictingFlags => {
            AppError::Usage(e.to_string())
        }
        other => AppError::Data(other.into()),
    })?;
    let bundle = load_model(model_path)?;
    if bundle.meta.task != task {
        return Err(AppError::Data(anyhow!(
            "model was pretrained for task {:?}",
            bundle.meta.task
        )));
    }
    let sets = load_bench(bench_dir, task)?;
    let backbone_before = bundle.model.backbone_checksum();

    // locality references must predate the edits
    let locality_prepared = bench::prepare_all(sets.locality.clone()).map_err(data)?;
    let cache = bench::pre_edit_outputs(&bundle.model, &bundle.codec, &locality_prepared)
        .map_err(data)?;

    let mut editor_config =
        EditorConfig::new(&bundle.model, run.tau_for(task), flags, run.seed ^ 0xed17);
    editor_config.adapter.experts = run.adapter.experts;
    editor_config.adapter.top_k = run.adapter.top_k;
    editor_config.adapter.lambda = run.adapter.lambda;
    editor_config.adapter.gate_noise_std = run.adapter.gate_noise_std;
    editor_config.adapter.expert_hidden = run.adapter.expert_hidden;
    let mut editor = Editor::install(bundle.model, editor_config.clone()).map_err(data_ed)?;

    let limit = if run.edit.max_edits == 0 {
        sets.edit.len()
    } else {
        run.edit.max_edits.min(sets.edit.len())
    };
    let results =
        pipeline::run_edits(&mut editor, &bundle.codec, &sets.edit[..limit], run).map_err(data)?;

    if editor.model.backbone_checksum() != backbone_before {
        return Err(AppError::Invariant(
            "backbone parameters changed during editing".to_string(),
        ));
    }

    std::fs::create_dir_all(out)?;
    let mut log = std::io::BufWriter::new(std::fs::File::create(out.join("edit_log.jsonl"))?);
    for r in &results {
        serde_json::to_writer(&mut log, r)?;
        log.write_all(b"\n")?;
    }
    log.flush()?;
    write_cache(&out.join("pre_edit_outputs.jsonl"), &cache)?;
    bench::write_jsonl(&out.join("edited_samples.jsonl"), &sets.edit[..limit]).map_err(data)?;
    bench::write_jsonl(&out.join("unrelated_samples.jsonl"), &sets.locality).map_err(data)?;

    let meta = EditedMeta {
        task,
        config: run.clone(),
        editor: editor_config,
        model: editor.model.config.clone(),
        next_edit_id: editor.next_edit_id(),
        edited_ids: sets.edit[..limit].iter().map(|s| s.id.clone()).collect(),
    };
    bundles::save_edited(out, &meta, &editor, &bundle.codec)?;
    println!(
        "applied {} edit requests over {} samples -> {}",
        results.len(),
        limit,
        out.display()
    );
    for r in &results {
        println!(
            "  edit {}: loss {:.4} -> {:.4} in {} steps, post-edit score {:.3}",
            r.edit_id, r.initial_loss, r.final_loss, r.steps_used, r.post_edit_score
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReportEnvelope<T: Serialize> {
    config: RunConfig,
    inputs_hash: String,
    report: T,
}

pub fn eval(
    run: &RunConfig,
    edited_dir: &Path,
    bench_dir: &Path,
    task: Task,
    report_path: &Path,
) -> AppResult<()> {
    let bundle = load_edited(edited_dir)?;
    if bundle.meta.task != task {
        return Err(AppError::Data(anyhow!(
            "edited state belongs to task {:?}",
            bundle.meta.task
        )));
    }
    let sets = load_bench(bench_dir, task)?;
    let cache = read_cache(&edited_dir.join("pre_edit_outputs.jsonl"))?;
    let split = BenchmarkSplit {
        task,
        edit: sets.edit,
        locality: sets.locality,
        generality: sets.generality,
        thresholds: run.bench,
    };
    let evaluation = evaluate_threaded(
        &bundle.editor,
        &bundle.codec,
        &split,
        &cache,
        run.threads.max(1),
    )
    .map_err(data)?;

    let inputs_hash = content_hash(&[
        &bench_dir.join("edit.jsonl"),
        &bench_dir.join("locality.jsonl"),
        &edited_dir.join("state.ckpt"),
        &edited_dir.join("bank.bin"),
    ])?;
    let envelope = ReportEnvelope {
        config: run.clone(),
        inputs_hash,
        report: &evaluation.report,
    };
    std::fs::write(report_path, serde_json::to_vec_pretty(&envelope)?)?;

    println!("evaluation ({task:?}):");
    for (dim, table) in [
        ("reliability", Some(&evaluation.report.reliability)),
        ("locality", Some(&evaluation.report.locality)),
        ("generality", evaluation.report.generality.as_ref()),
    ] {
        if let Some(table) = table {
            let cells: Vec<String> = table
                .metrics
                .iter()
                .map(|(name, s)| format!("{name}={:.4}", s.mean))
                .collect();
            println!("  {dim} (n={}): {}", table.count, cells.join(" "));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RationaleReport {
    histogram: rationale::ActivationHistogram,
    switch: rationale::SwitchReport,
    switch_accuracy: f64,
    whole_input_accuracy: f64,
}

pub fn rationale(run: &RunConfig, edited_dir: &Path, report_path: &Path) -> AppResult<()> {
    let bundle = load_edited(edited_dir)?;
    let edited: Vec<Sample> =
        bench::read_jsonl(&edited_dir.join("edited_samples.jsonl")).map_err(data)?;
    let unrelated: Vec<Sample> =
        bench::read_jsonl(&edited_dir.join("unrelated_samples.jsonl")).map_err(data)?;

    let histogram = rationale::activation_histogram(&bundle.editor, &bundle.codec, &edited)
        .map_err(data)?;
    let switch = rationale::switch_report(&bundle.editor, &bundle.codec, &edited, &unrelated)
        .map_err(data)?;
    let report = RationaleReport {
        switch_accuracy: switch.expertise.accuracy(),
        whole_input_accuracy: switch.whole_input.accuracy(),
        histogram,
        switch,
    };
    let envelope = ReportEnvelope {
        config: run.clone(),
        inputs_hash: content_hash(&[
            &edited_dir.join("state.ckpt"),
            &edited_dir.join("bank.bin"),
        ])?,
        report: &report,
    };
    std::fs::write(report_path, serde_json::to_vec_pretty(&envelope)?)?;

    println!(
        "expert activation over {} routed segments:",
        report.histogram.routed_segments
    );
    for (site, bins) in &report.histogram.per_site {
        println!("  {site}: {bins:?}");
    }
    println!(
        "switch accuracy: expertise-aware {:.3} vs whole-input {:.3}",
        report.switch_accuracy, report.whole_input_accuracy
    );
    Ok(())
}

fn data(e: BenchError) -> AppError {
    AppError::Data(e.into())
}

fn data_bb(e: moledit::backbone::BackboneError) -> AppError {
    AppError::Data(e.into())
}

fn data_ed(e: EditingError) -> AppError {
    AppError::Data(e.into())
}

/// Keep an explicit map for command-level structures that need ordered
/// output (reserved for future per-command tables).
#[allow(dead_code)]
type Ordered = BTreeMap<String, String>;
