//! Edit orchestration: wrap sites, train adapter parameters against a
//! frozen backbone, register expertise into the memory bank, route
//! inference through the switcher. Also the plain fine-tune baseline and
//! the ablation switches.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backbone::{default_wrap_sites, HookMode, Model, Site, TrainSample, TrainScope};
use crate::eaes::{self, EaesError, ExpertiseMemoryBank, RouteOutcome};
use crate::meka::{AdapterConfig, MekaAdapter};
use crate::metrics::bleu_n;
use crate::numerics::{AdamHyper, OptimizerState, Rng};
use crate::segment::ExpertiseSegmentation;

#[derive(Debug, Error)]
pub enum EditingError {
    #[error("encoder_only and decoder_only conflict")]
    ConflictingFlags,
    #[error("unknown ablation flag {0:?}")]
    UnknownFlag(String),
    #[error("edit requests take 1 or 2 samples, got {0}")]
    BadSampleCount(usize),
    #[error(transparent)]
    Backbone(#[from] crate::backbone::BackboneError),
    #[error(transparent)]
    Eaes(#[from] EaesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    CaptionGen,
    MoleculeGen,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::CaptionGen => "cap",
            Task::MoleculeGen => "mol",
        }
    }

    /// Edit-training learning-rate defaults (caption task value, molecule
    /// task value for the contrastive-backbone setting). The toy backbone
    /// typically needs larger steps; runs configure their own.
    pub fn default_edit_lr(self) -> f64 {
        match self {
            Task::CaptionGen => 1e-4,
            Task::MoleculeGen => 2e-5,
        }
    }

    /// BLEU order of the task's primary reliability metric.
    pub fn primary_bleu_order(self) -> usize {
        match self {
            Task::CaptionGen => 2,
            Task::MoleculeGen => 4,
        }
    }
}

/// Ablation switches (mutually compatible except encoder/decoder-only).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Single expert (P=1, k=1) instead of the expert pool.
    pub no_meka: bool,
    /// Whole-input mean similarity instead of expertise-wise matching.
    pub no_eaes: bool,
    pub encoder_only: bool,
    pub decoder_only: bool,
}

impl AblationFlags {
    pub fn validate(&self) -> Result<(), EditingError> {
        if self.encoder_only && self.decoder_only {
            return Err(EditingError::ConflictingFlags);
        }
        Ok(())
    }

    /// Parse a comma-separated flag list, e.g. "no_meka,encoder_only".
    pub fn parse(csv: &str) -> Result<Self, EditingError> {
        let mut flags = AblationFlags::default();
        for raw in csv.split(',') {
            let flag = raw.trim();
            match flag {
                "" => {}
                "no_meka" => flags.no_meka = true,
                "no_eaes" => flags.no_eaes = true,
                "encoder_only" => flags.encoder_only = true,
                "decoder_only" => flags.decoder_only = true,
                other => return Err(EditingError::UnknownFlag(other.to_string())),
            }
        }
        flags.validate()?;
        Ok(flags)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditorConfig {
    pub adapter: AdapterConfig,
    /// Switch similarity threshold.
    pub tau: f64,
    pub flags: AblationFlags,
    /// Wrap sites (encoder layer, decoder layer).
    pub enc_site: usize,
    pub dec_site: usize,
    pub seed: u64,
}

impl EditorConfig {
    pub fn new(model: &Model, tau: f64, flags: AblationFlags, seed: u64) -> Self {
        let (enc_site, dec_site) =
            default_wrap_sites(model.config.n_enc_layers, model.config.n_dec_layers);
        EditorConfig {
            adapter: AdapterConfig::new(model.config.d_model),
            tau,
            flags,
            enc_site,
            dec_site,
            seed,
        }
    }
}

/// One editable input: source tokens, the routing segmentation over them,
/// and target tokens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditSample {
    pub src: Vec<u32>,
    pub seg: ExpertiseSegmentation,
    pub tgt: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditRequest {
    pub task: Task,
    /// One piece of knowledge at a time, two for caption batches.
    pub samples: Vec<EditSample>,
    pub steps: usize,
    pub lr: f64,
    pub early_stop_loss: f64,
}

impl EditRequest {
    pub fn new(task: Task, samples: Vec<EditSample>, lr: f64) -> Self {
        EditRequest {
            task,
            samples,
            steps: 200,
            lr,
            early_stop_loss: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditResult {
    pub edit_id: u64,
    pub task: Task,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub steps_used: usize,
    pub bank_entries_added: usize,
    /// False when the loss failed to go down over the whole run
    /// (reported, not fatal).
    pub improved: bool,
    /// Mean primary-metric BLEU of routed outputs against the edit
    /// targets, right after this edit.
    pub post_edit_score: f64,
    /// Loss curve downsampled to at most 50 points.
    pub loss_curve: Vec<f64>,
    pub wall_time_ms: u64,
}

/// Editing pipeline: a frozen backbone with adapters at the configured
/// wrap sites and the expertise memory bank.
#[derive(Debug, Clone)]
pub struct Editor {
    pub model: Model,
    pub bank: ExpertiseMemoryBank,
    pub config: EditorConfig,
    enc_adapter: Option<MekaAdapter>,
    dec_adapter: Option<MekaAdapter>,
    rng: Rng,
    next_edit_id: u64,
}

impl Editor {
    /// Install fresh adapters (zero experts, seeded gates) per the config
    /// and ablation flags.
    pub fn install(mut model: Model, config: EditorConfig) -> Result<Self, EditingError> {
        config.flags.validate()?;
        let adapter_config = Self::effective_adapter_config(&config);
        let mut rng = Rng::new(config.seed);

        let mut enc_adapter = None;
        let mut dec_adapter = None;
        if !config.flags.decoder_only {
            let a = MekaAdapter::install(
                adapter_config.clone(),
                Site::Encoder(config.enc_site),
                &mut model.params,
                &mut rng,
            );
            model.install_wrap(Site::Encoder(config.enc_site), Arc::new(a.clone()))?;
            enc_adapter = Some(a);
        }
        if !config.flags.encoder_only {
            let a = MekaAdapter::install(
                adapter_config,
                Site::Decoder(config.dec_site),
                &mut model.params,
                &mut rng,
            );
            model.install_wrap(Site::Decoder(config.dec_site), Arc::new(a.clone()))?;
            dec_adapter = Some(a);
        }

        Ok(Editor {
            bank: ExpertiseMemoryBank::new(config.tau),
            model,
            rng,
            config,
            enc_adapter,
            dec_adapter,
            next_edit_id: 0,
        })
    }

    /// Rewire adapters around parameters already present in the model
    /// store (checkpoint reload), with an existing bank.
    pub fn attach(
        mut model: Model,
        config: EditorConfig,
        bank: ExpertiseMemoryBank,
        next_edit_id: u64,
    ) -> Result<Self, EditingError> {
        config.flags.validate()?;
        let adapter_config = Self::effective_adapter_config(&config);
        let mut enc_adapter = None;
        let mut dec_adapter = None;
        if !config.flags.decoder_only {
            let a = MekaAdapter::attach(
                adapter_config.clone(),
                Site::Encoder(config.enc_site),
                &model.params,
            );
            model.install_wrap(Site::Encoder(config.enc_site), Arc::new(a.clone()))?;
            enc_adapter = Some(a);
        }
        if !config.flags.encoder_only {
            let a = MekaAdapter::attach(
                adapter_config,
                Site::Decoder(config.dec_site),
                &model.params,
            );
            model.install_wrap(Site::Decoder(config.dec_site), Arc::new(a.clone()))?;
            dec_adapter = Some(a);
        }
        let rng = Rng::new(config.seed ^ next_edit_id);
        Ok(Editor {
            model,
            bank,
            config,
            enc_adapter,
            dec_adapter,
            rng,
            next_edit_id,
        })
    }

    fn effective_adapter_config(config: &EditorConfig) -> AdapterConfig {
        if config.flags.no_meka {
            AdapterConfig {
                experts: 1,
                top_k: 1,
                ..config.adapter.clone()
            }
        } else {
            config.adapter.clone()
        }
    }

    pub fn enc_adapter(&self) -> Option<&MekaAdapter> {
        self.enc_adapter.as_ref()
    }

    pub fn dec_adapter(&self) -> Option<&MekaAdapter> {
        self.dec_adapter.as_ref()
    }

    pub fn next_edit_id(&self) -> u64 {
        self.next_edit_id
    }

    /// The segmentation the switcher matches on: expertise-wise normally,
    /// a single whole-input segment under the no-EAES ablation.
    pub fn decision_seg(&self, seg: &ExpertiseSegmentation) -> ExpertiseSegmentation {
        if self.config.flags.no_eaes {
            ExpertiseSegmentation::whole(seg.token_count, "input")
        } else {
            seg.clone()
        }
    }

    /// Switched inference for one input.
    pub fn route(
        &self,
        src: &[u32],
        seg: &ExpertiseSegmentation,
    ) -> Result<RouteOutcome, EditingError> {
        let decision = self.decision_seg(seg);
        Ok(eaes::route_inference(&self.model, &self.bank, src, seg, &decision)?)
    }

    /// Apply one edit: register expertise means from the pre-edit encoder
    /// pass, then train only adapter parameters (gates forced active)
    /// until the loss target or the step budget. The backbone never
    /// changes a bit.
    pub fn apply_edit(&mut self, req: &EditRequest) -> Result<EditResult, EditingError> {
        if req.samples.is_empty() || req.samples.len() > 2 {
            return Err(EditingError::BadSampleCount(req.samples.len()));
        }
        let started = Instant::now();
        let checksum_before = self.model.backbone_checksum();
        let edit_id = self.next_edit_id;
        self.next_edit_id += 1;

        // bank registration from the unedited encoder pass
        let mut entries_added = 0;
        for sample in &req.samples {
            let trace = self.model.encode(&sample.src, &sample.seg, false)?;
            let decision_seg = self.decision_seg(&sample.seg);
            let means = eaes::segmented_means(&trace.final_norm, &decision_seg)?;
            entries_added += self.bank.register_edit(edit_id, &means)?;
        }

        // adapter-only training, gates forced active
        let mut opt = OptimizerState::new(AdamHyper::with_lr(req.lr));
        let mut losses = Vec::with_capacity(req.steps);
        let train_samples: Vec<TrainSample> = req
            .samples
            .iter()
            .map(|s| TrainSample {
                src: &s.src,
                seg: &s.seg,
                tgt: &s.tgt,
            })
            .collect();
        let mut steps_used = 0;
        for _ in 0..req.steps {
            let loss = self.model.train_step(
                &train_samples,
                TrainScope::AdapterOnly,
                &mut opt,
                HookMode::Active { training: true },
                &mut self.rng,
            )?;
            steps_used += 1;
            losses.push(loss);
            if loss <= req.early_stop_loss {
                break;
            }
        }

        assert_eq!(
            checksum_before,
            self.model.backbone_checksum(),
            "backbone changed during adapter-only editing"
        );

        let initial_loss = losses.first().copied().unwrap_or(0.0);
        let final_loss = losses.last().copied().unwrap_or(0.0);

        // post-edit reliability on the edited samples through the switch
        let mut score_sum = 0.0;
        for sample in &req.samples {
            let outcome = self.route(&sample.src, &sample.seg)?;
            score_sum += token_bleu(&outcome.output, &sample.tgt, req.task.primary_bleu_order());
        }
        let post_edit_score = score_sum / req.samples.len() as f64;

        Ok(EditResult {
            edit_id,
            task: req.task,
            initial_loss,
            final_loss,
            steps_used,
            bank_entries_added: entries_added,
            improved: steps_used == 0 || final_loss < initial_loss,
            post_edit_score,
            loss_curve: downsample(&losses, 50),
            wall_time_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// BLEU over raw token ids (used for post-edit scores where no vocabulary
/// is in scope).
pub fn token_bleu(cand: &[u32], reference: &[u32], order: usize) -> f64 {
    let c: Vec<String> = cand.iter().map(u32::to_string).collect();
    let r: Vec<String> = reference.iter().map(u32::to_string).collect();
    bleu_n(&c, &r, order, true).score
}

fn downsample(values: &[f64], limit: usize) -> Vec<f64> {
    if values.len() <= limit {
        return values.to_vec();
    }
    let stride = values.len().div_ceil(limit);
    let mut out: Vec<f64> = values.iter().step_by(stride).copied().collect();
    if *out.last().unwrap() != *values.last().unwrap() {
        out.push(*values.last().unwrap());
    }
    out
}

/// Scope choices for the fine-tune baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FineTuneScope {
    Encoder,
    Decoder,
    All,
}

impl FineTuneScope {
    fn train_scope(self) -> TrainScope {
        match self {
            FineTuneScope::Encoder => TrainScope::BackboneEncoder,
            FineTuneScope::Decoder => TrainScope::BackboneDecoder,
            FineTuneScope::All => TrainScope::Backbone,
        }
    }
}

/// Plain fine-tuning baseline: full-gradient training of the selected
/// backbone subset on a copy of the model; the original is untouched.
pub fn fine_tune_baseline(
    model: &Model,
    samples: &[EditSample],
    scope: FineTuneScope,
    steps: usize,
    lr: f64,
) -> Result<Model, EditingError> {
    let mut copy = model.clone();
    copy.remove_wraps();
    let mut opt = OptimizerState::new(AdamHyper::with_lr(lr));
    let mut rng = Rng::new(model.config.seed ^ 0xf17e);
    let train: Vec<TrainSample> = samples
        .iter()
        .map(|s| TrainSample {
            src: &s.src,
            seg: &s.seg,
            tgt: &s.tgt,
        })
        .collect();
    for _ in 0..steps {
        copy.train_step(&train, scope.train_scope(), &mut opt, HookMode::Off, &mut rng)?;
    }
    Ok(copy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::{Model, ModelConfig};

    fn tiny_model(seed: u64) -> Model {
        Model::new(ModelConfig {
            src_vocab: 14,
            tgt_vocab: 14,
            d_model: 16,
            n_enc_layers: 2,
            n_dec_layers: 2,
            d_ffn: 24,
            max_len: 16,
            seed,
        })
    }

    fn sample(src: Vec<u32>, tgt: Vec<u32>) -> EditSample {
        let seg = ExpertiseSegmentation::whole(src.len(), "input");
        EditSample { src, seg, tgt }
    }

    fn editor(seed: u64, flags: AblationFlags) -> Editor {
        let model = tiny_model(seed);
        let config = EditorConfig::new(&model, 0.9, flags, seed);
        Editor::install(model, config).unwrap()
    }

    /// Editing against a zero-initialized output head cannot move the
    /// loss (the frozen head caps every logit margin), so edit tests run
    /// on a converged backbone like the real pipeline does.
    fn pretrained_editor(seed: u64, flags: AblationFlags) -> Editor {
        let mut model = tiny_model(seed);
        let mut rng = Rng::new(seed ^ 0xabc);
        let corpus: Vec<(Vec<u32>, ExpertiseSegmentation, Vec<u32>)> = (0..8)
            .map(|_| {
                let n = 3 + rng.below(3);
                let src: Vec<u32> = (0..n).map(|_| 3 + rng.below(11) as u32).collect();
                let tgt: Vec<u32> = (0..n).map(|_| 3 + rng.below(11) as u32).collect();
                (src.clone(), ExpertiseSegmentation::whole(n, "input"), tgt)
            })
            .collect();
        model.pretrain(&corpus, 60, 2e-3).unwrap();
        let config = EditorConfig::new(&model, 0.9, flags, seed);
        Editor::install(model, config).unwrap()
    }

    #[test]
    fn ablation_flag_parsing() {
        assert_eq!(AblationFlags::parse("").unwrap(), AblationFlags::default());
        let flags = AblationFlags::parse("no_meka,no_eaes").unwrap();
        assert!(flags.no_meka && flags.no_eaes);
        assert!(matches!(
            AblationFlags::parse("bogus"),
            Err(EditingError::UnknownFlag(_))
        ));
        assert!(matches!(
            AblationFlags::parse("encoder_only,decoder_only"),
            Err(EditingError::ConflictingFlags)
        ));
    }

    #[test]
    fn site_flags_control_installed_wraps() {
        let both = editor(1, AblationFlags::default());
        assert_eq!(both.model.wrapped_sites().len(), 2);

        let enc_only = editor(
            1,
            AblationFlags {
                encoder_only: true,
                ..Default::default()
            },
        );
        assert!(matches!(enc_only.model.wrapped_sites()[..], [Site::Encoder(_)]));
        assert!(enc_only.dec_adapter().is_none());

        let dec_only = editor(
            1,
            AblationFlags {
                decoder_only: true,
                ..Default::default()
            },
        );
        assert!(matches!(dec_only.model.wrapped_sites()[..], [Site::Decoder(_)]));
    }

    #[test]
    fn no_meka_forces_single_expert() {
        let e = editor(
            2,
            AblationFlags {
                no_meka: true,
                ..Default::default()
            },
        );
        assert_eq!(e.enc_adapter().unwrap().config.experts, 1);
        assert_eq!(e.enc_adapter().unwrap().config.top_k, 1);
    }

    #[test]
    fn no_eaes_collapses_decision_to_one_segment() {
        let e = editor(
            2,
            AblationFlags {
                no_eaes: true,
                ..Default::default()
            },
        );
        let seg = ExpertiseSegmentation::new(
            vec![
                crate::segment::Segment {
                    label: "a".to_string(),
                    token_indices: vec![0, 1],
                },
                crate::segment::Segment {
                    label: "b".to_string(),
                    token_indices: vec![2],
                },
            ],
            3,
        )
        .unwrap();
        assert_eq!(e.decision_seg(&seg).len(), 1);
    }

    #[test]
    fn fresh_editor_is_an_exact_identity() {
        let plain = tiny_model(3);
        let e = editor(3, AblationFlags::default());
        let src = [3, 5, 7, 9];
        let seg = ExpertiseSegmentation::whole(4, "input");
        let unwrapped = plain.encode(&src, &seg, false).unwrap();
        let wrapped = e.model.encode(&src, &seg, true).unwrap();
        let bits = |t: &crate::numerics::Tensor| -> Vec<u64> {
            t.data().iter().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&unwrapped.final_norm), bits(&wrapped.final_norm));
    }

    #[test]
    fn no_meka_zero_init_is_still_an_identity() {
        let plain = tiny_model(4);
        let e = editor(
            4,
            AblationFlags {
                no_meka: true,
                ..Default::default()
            },
        );
        let src = [3, 5, 7];
        let seg = ExpertiseSegmentation::whole(3, "input");
        let a = plain.generate(&src, &seg, false).unwrap();
        let b = e.model.generate(&src, &seg, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_step_edit_updates_bank_but_not_outputs() {
        let mut e = editor(5, AblationFlags::default());
        let s = sample(vec![3, 4, 5], vec![6, 7]);
        let before = e.model.generate(&s.src, &s.seg, true).unwrap();
        let mut req = EditRequest::new(Task::CaptionGen, vec![s.clone()], 1e-2);
        req.steps = 0;
        let result = e.apply_edit(&req).unwrap();
        assert_eq!(result.steps_used, 0);
        assert_eq!(result.bank_entries_added, 1);
        assert!(e.bank.len() > 0);
        let after = e.model.generate(&s.src, &s.seg, true).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn sample_count_is_validated() {
        let mut e = editor(6, AblationFlags::default());
        let req = EditRequest::new(Task::CaptionGen, vec![], 1e-2);
        assert!(matches!(e.apply_edit(&req), Err(EditingError::BadSampleCount(0))));
        let s = sample(vec![3], vec![4]);
        let req = EditRequest::new(
            Task::CaptionGen,
            vec![s.clone(), s.clone(), s],
            1e-2,
        );
        assert!(matches!(e.apply_edit(&req), Err(EditingError::BadSampleCount(3))));
    }

    #[test]
    fn editing_converges_and_freezes_the_backbone() {
        let mut e = pretrained_editor(7, AblationFlags::default());
        let checksum = e.model.backbone_checksum();
        let s = sample(vec![3, 4, 5, 6], vec![7, 8, 9]);
        let mut req = EditRequest::new(Task::CaptionGen, vec![s.clone()], 2e-2);
        req.steps = 300;
        req.early_stop_loss = 5e-3;
        let result = e.apply_edit(&req).unwrap();
        assert!(result.improved);
        assert!(
            result.final_loss < 0.05,
            "edit failed to converge: {}",
            result.final_loss
        );
        assert_eq!(e.model.backbone_checksum(), checksum);
        // the edited sample routes through the adapters and hits its target
        let outcome = e.route(&s.src, &s.seg).unwrap();
        assert!(outcome.decision.active, "self-recall failed");
        assert_eq!(outcome.output, s.tgt);
        assert!(result.post_edit_score > 0.9);
    }

    #[test]
    fn gate_closed_inputs_reproduce_the_pre_edit_output() {
        let mut e = pretrained_editor(8, AblationFlags::default());
        let s = sample(vec![3, 4, 5, 6], vec![7, 8]);
        let pre_edit: Vec<Vec<u32>> = (3..8)
            .map(|t| {
                let src = vec![t, t + 1, t + 2];
                let seg = ExpertiseSegmentation::whole(3, "input");
                e.model.generate(&src, &seg, false).unwrap()
            })
            .collect();
        let mut req = EditRequest::new(Task::CaptionGen, vec![s], 2e-2);
        req.steps = 120;
        e.apply_edit(&req).unwrap();
        for (i, t) in (3..8).enumerate() {
            let src = vec![t, t + 1, t + 2];
            let seg = ExpertiseSegmentation::whole(3, "input");
            let outcome = e.route(&src, &seg).unwrap();
            if !outcome.decision.active {
                assert_eq!(outcome.output, pre_edit[i], "gate-closed output drifted");
            }
        }
    }

    #[test]
    fn fine_tune_scopes_respect_parameter_boundaries() {
        let model = tiny_model(9);
        let samples = vec![sample(vec![3, 4], vec![5, 6])];
        let decoder_sum = model.params.checksum(|n| {
            n.starts_with("backbone.dec.") || n.starts_with("backbone.out.") || n == "backbone.tgt_embed"
        });
        let tuned = fine_tune_baseline(&model, &samples, FineTuneScope::Encoder, 5, 1e-3).unwrap();
        let decoder_after = tuned.params.checksum(|n| {
            n.starts_with("backbone.dec.") || n.starts_with("backbone.out.") || n == "backbone.tgt_embed"
        });
        assert_eq!(decoder_sum, decoder_after, "encoder scope touched the decoder");
        // original untouched
        assert_eq!(
            model.params.checksum(|_| true),
            tiny_model(9).params.checksum(|_| true)
        );

        let frozen = fine_tune_baseline(&model, &samples, FineTuneScope::All, 0, 1e-3).unwrap();
        assert_eq!(model.params.checksum(|_| true), frozen.params.checksum(|_| true));
    }

    #[test]
    fn fine_tuning_raises_the_reliability_score() {
        let model = tiny_model(10);
        let s = sample(vec![3, 4, 5], vec![6, 7, 8]);
        let score = |m: &Model| {
            let out = m.generate(&s.src, &s.seg, false).unwrap();
            token_bleu(&out, &s.tgt, 2)
        };
        let before = score(&model);
        let tuned =
            fine_tune_baseline(&model, &[s.clone()], FineTuneScope::All, 150, 3e-3).unwrap();
        let after = score(&tuned);
        assert!(after >= before, "FT made reliability worse: {before} -> {after}");
        assert!(after > 0.9, "FT failed to fit one sample: {after}");
    }

    #[test]
    fn loss_curves_downsample_to_fifty_points() {
        let values: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let ds = downsample(&values, 50);
        assert!(ds.len() <= 51);
        assert_eq!(*ds.first().unwrap(), 0.0);
        assert_eq!(*ds.last().unwrap(), 499.0);
    }
}
