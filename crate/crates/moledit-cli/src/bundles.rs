//! On-disk bundles: model checkpoints and edited-state directories, each
//! a binary parameter file plus JSON metadata and vocabulary files.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use moledit::backbone::{Model, ModelConfig, Vocab};
use moledit::bench::{self, Sample, TaskCodec};
use moledit::config::RunConfig;
use moledit::eaes::ExpertiseMemoryBank;
use moledit::editing::{Editor, EditorConfig, Task};
use moledit::numerics::checkpoint;

use crate::AppResult;

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelMeta {
    pub task: Task,
    pub config: RunConfig,
    pub config_hash: u64,
    pub model: ModelConfig,
    pub epochs_done: usize,
    pub loss_log: Vec<f64>,
}

pub struct ModelBundle {
    pub meta: ModelMeta,
    pub model: Model,
    pub codec: TaskCodec,
}

fn meta_path(ckpt: &Path) -> PathBuf {
    append_ext(ckpt, "meta.json")
}

fn vocab_path(ckpt: &Path, side: &str) -> PathBuf {
    append_ext(ckpt, &format!("{side}.vocab"))
}

fn append_ext(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

pub fn save_model(ckpt: &Path, meta: &ModelMeta, model: &Model, codec: &TaskCodec) -> AppResult<()> {
    checkpoint::save(&model.params, ckpt).context("write checkpoint")?;
    std::fs::write(meta_path(ckpt), serde_json::to_vec_pretty(meta)?)?;
    codec.src_vocab().save(&vocab_path(ckpt, "src"))?;
    codec.tgt_vocab().save(&vocab_path(ckpt, "tgt"))?;
    Ok(())
}

pub fn load_model(ckpt: &Path) -> AppResult<ModelBundle> {
    let meta: ModelMeta = serde_json::from_slice(
        &std::fs::read(meta_path(ckpt))
            .with_context(|| format!("missing checkpoint metadata for {}", ckpt.display()))?,
    )?;
    let params = checkpoint::load(ckpt).context("read checkpoint")?;
    let model = Model::with_params(meta.model.clone(), params).context("rebuild model")?;
    let src = Vocab::load(&vocab_path(ckpt, "src")).context("read source vocab")?;
    let tgt = Vocab::load(&vocab_path(ckpt, "tgt")).context("read target vocab")?;
    let codec = match meta.task {
        Task::CaptionGen => TaskCodec::new(meta.task, src, tgt),
        Task::MoleculeGen => TaskCodec::new(meta.task, tgt, src),
    };
    Ok(ModelBundle { meta, model, codec })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EditedMeta {
    pub task: Task,
    pub config: RunConfig,
    pub editor: EditorConfig,
    pub model: ModelConfig,
    pub next_edit_id: u64,
    pub edited_ids: Vec<String>,
}

pub struct EditedBundle {
    pub meta: EditedMeta,
    pub editor: Editor,
    pub codec: TaskCodec,
}

pub fn save_edited(dir: &Path, meta: &EditedMeta, editor: &Editor, codec: &TaskCodec) -> AppResult<()> {
    std::fs::create_dir_all(dir)?;
    checkpoint::save(&editor.model.params, &dir.join("state.ckpt")).context("write state")?;
    editor.bank.save(&dir.join("bank.bin")).context("write bank")?;
    std::fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(meta)?)?;
    codec.src_vocab().save(&dir.join("src.vocab"))?;
    codec.tgt_vocab().save(&dir.join("tgt.vocab"))?;
    Ok(())
}

pub fn load_edited(dir: &Path) -> AppResult<EditedBundle> {
    let meta: EditedMeta = serde_json::from_slice(
        &std::fs::read(dir.join("meta.json"))
            .with_context(|| format!("missing edited-state metadata in {}", dir.display()))?,
    )?;
    let params = checkpoint::load(&dir.join("state.ckpt")).context("read state")?;
    let model = Model::with_params(meta.model.clone(), params).context("rebuild model")?;
    let bank = ExpertiseMemoryBank::load(&dir.join("bank.bin")).context("read bank")?;
    let editor = Editor::attach(model, meta.editor.clone(), bank, meta.next_edit_id)
        .map_err(|e| anyhow!("reattach adapters: {e}"))?;
    let src = Vocab::load(&dir.join("src.vocab")).context("read source vocab")?;
    let tgt = Vocab::load(&dir.join("tgt.vocab")).context("read target vocab")?;
    let codec = match meta.task {
        Task::CaptionGen => TaskCodec::new(meta.task, src, tgt),
        Task::MoleculeGen => TaskCodec::new(meta.task, tgt, src),
    };
    Ok(EditedBundle { meta, editor, codec })
}

/// Content hash of input files for report provenance (SHA-256 over
/// length-prefixed file bytes, hex).
pub fn content_hash(paths: &[&Path]) -> AppResult<String> {
    let mut hasher = Sha256::new();
    for path in paths {
        let bytes = std::fs::read(path)
            .with_context(|| format!("hash input {}", path.display()))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Benchmark directory layout.
pub struct BenchDir {
    pub edit: Vec<Sample>,
    pub locality: Vec<Sample>,
    pub generality: Vec<Sample>,
}

pub fn load_bench(dir: &Path, task: Task) -> AppResult<BenchDir> {
    let edit = bench::read_jsonl(&dir.join("edit.jsonl")).context("read edit set")?;
    let locality = bench::read_jsonl(&dir.join("locality.jsonl")).context("read locality set")?;
    let generality = if task == Task::MoleculeGen {
        bench::read_jsonl(&dir.join("generality.jsonl")).context("read generality set")?
    } else {
        Vec::new()
    };
    Ok(BenchDir {
        edit,
        locality,
        generality,
    })
}
