//! Model construction, forward passes, greedy decoding, and training.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AdapterHook, BackboneError, RouteRecord, Site, TapeBuilder, TrainScope};
use crate::numerics::{
    AdamHyper, NodeId, OptimizerState, ParamStore, Rng, Tensor,
};
use crate::segment::ExpertiseSegmentation;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub d_model: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub d_ffn: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn toy(src_vocab: usize, tgt_vocab: usize, seed: u64) -> Self {
        ModelConfig {
            src_vocab,
            tgt_vocab,
            d_model: 64,
            n_enc_layers: 4,
            n_dec_layers: 4,
            d_ffn: 128,
            max_len: 64,
            seed,
        }
    }

    fn validate(&self) {
        assert!(self.src_vocab > 3 && self.tgt_vocab > 3, "vocab too small");
        assert!(
            self.d_model > 0
                && self.n_enc_layers > 0
                && self.n_dec_layers > 0
                && self.d_ffn > 0
                && self.max_len > 0,
            "config fields must be positive"
        );
    }
}

/// Mid-to-late wrap placement scaled to the stack depth: the midpoint
/// layer in the encoder and the three-quarter layer in the decoder
/// (1-based positions, returned as 0-based indices). A 4+4 model wraps
/// encoder layer 2 and decoder layer 3.
pub fn default_wrap_sites(n_enc: usize, n_dec: usize) -> (usize, usize) {
    let place = |depth: usize, fraction: f64| -> usize {
        let pos = (depth as f64 * fraction).round().max(1.0) as usize;
        pos.min(depth) - 1
    };
    (place(n_enc, 0.5), place(n_dec, 0.75))
}

/// Whether adapter hooks participate in a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookMode {
    Off,
    Active { training: bool },
}

impl HookMode {
    fn active(&self) -> bool {
        matches!(self, HookMode::Active { .. })
    }

    fn training(&self) -> bool {
        matches!(self, HookMode::Active { training: true })
    }
}

/// Encoder activations: one matrix per layer boundary (embedding first,
/// then each layer output), plus the final layer-norm output consumed by
/// cross-attention and the switcher.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    pub layers: Vec<Tensor>,
    pub final_norm: Tensor,
    pub routes: Vec<RouteRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub src: &'a [u32],
    pub seg: &'a ExpertiseSegmentation,
    pub tgt: &'a [u32],
}

#[derive(Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
    wraps: BTreeMap<Site, Arc<dyn AdapterHook>>,
    pos_table: Tensor,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("config", &self.config)
            .field("params", &self.params.len())
            .field("wraps", &self.wraps.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Model {
    pub fn new(config: ModelConfig) -> Self {
        config.validate();
        let mut rng = Rng::new(config.seed);
        let mut params = ParamStore::new();
        let d = config.d_model;
        let ffn = config.d_ffn;
        let wstd = 1.0 / (d as f64).sqrt();
        let fstd1 = (2.0 / (d + ffn) as f64).sqrt();

        params.insert(
            "backbone.src_embed",
            Tensor::randn(&[config.src_vocab, d], 0.1, &mut rng),
        );
        params.insert(
            "backbone.tgt_embed",
            Tensor::randn(&[config.tgt_vocab, d], 0.1, &mut rng),
        );

        let layer_norm = |params: &mut ParamStore, name: String| {
            params.insert(&format!("{name}.g"), Tensor::filled(&[1, d], 1.0));
            params.insert(&format!("{name}.b"), Tensor::zeros(&[1, d]));
        };

        for l in 0..config.n_enc_layers {
            let p = format!("backbone.enc.{l}");
            layer_norm(&mut params, format!("{p}.ln1"));
            for w in ["self", "left", "right"] {
                params.insert(&format!("{p}.mix.{w}"), Tensor::randn(&[d, d], wstd, &mut rng));
            }
            params.insert(&format!("{p}.mix.b"), Tensor::zeros(&[1, d]));
            layer_norm(&mut params, format!("{p}.ln2"));
            params.insert(&format!("{p}.ffn.w1"), Tensor::randn(&[d, ffn], fstd1, &mut rng));
            params.insert(&format!("{p}.ffn.b1"), Tensor::zeros(&[1, ffn]));
            params.insert(&format!("{p}.ffn.w2"), Tensor::randn(&[ffn, d], fstd1, &mut rng));
            params.insert(&format!("{p}.ffn.b2"), Tensor::zeros(&[1, d]));
        }
        layer_norm(&mut params, "backbone.enc.final".to_string());

        for l in 0..config.n_dec_layers {
            let p = format!("backbone.dec.{l}");
            layer_norm(&mut params, format!("{p}.ln1"));
            for w in ["self", "left"] {
                params.insert(&format!("{p}.mix.{w}"), Tensor::randn(&[d, d], wstd, &mut rng));
            }
            params.insert(&format!("{p}.mix.b"), Tensor::zeros(&[1, d]));
            layer_norm(&mut params, format!("{p}.lnc"));
            for w in ["wq", "wk", "wv", "wo"] {
                params.insert(&format!("{p}.cross.{w}"), Tensor::randn(&[d, d], wstd, &mut rng));
            }
            params.insert(&format!("{p}.cross.b"), Tensor::zeros(&[1, d]));
            layer_norm(&mut params, format!("{p}.ln2"));
            params.insert(&format!("{p}.ffn.w1"), Tensor::randn(&[d, ffn], fstd1, &mut rng));
            params.insert(&format!("{p}.ffn.b1"), Tensor::zeros(&[1, ffn]));
            params.insert(&format!("{p}.ffn.w2"), Tensor::randn(&[ffn, d], fstd1, &mut rng));
            params.insert(&format!("{p}.ffn.b2"), Tensor::zeros(&[1, d]));
        }
        layer_norm(&mut params, "backbone.dec.final".to_string());

        // zero head: uniform logits at init, gradient reaches it immediately
        params.insert("backbone.out.w", Tensor::zeros(&[d, config.tgt_vocab]));
        params.insert("backbone.out.b", Tensor::zeros(&[1, config.tgt_vocab]));

        let pos_table = positional_table(config.max_len, d);
        Model {
            config,
            params,
            wraps: BTreeMap::new(),
            pos_table,
        }
    }

    /// Rebuild a model around externally loaded parameters (checkpoint).
    pub fn with_params(config: ModelConfig, params: ParamStore) -> Result<Self, BackboneError> {
        config.validate();
        for required in ["backbone.src_embed", "backbone.tgt_embed", "backbone.out.w"] {
            assert!(params.contains(required), "checkpoint missing {required}");
        }
        let pos_table = positional_table(config.max_len, config.d_model);
        Ok(Model {
            config,
            params,
            wraps: BTreeMap::new(),
            pos_table,
        })
    }

    pub fn wrapped_sites(&self) -> Vec<Site> {
        self.wraps.keys().copied().collect()
    }

    /// Attach an adapter at a layer site; one adapter per site.
    pub fn install_wrap(
        &mut self,
        site: Site,
        hook: Arc<dyn AdapterHook>,
    ) -> Result<(), BackboneError> {
        let depth = match site {
            Site::Encoder(_) => self.config.n_enc_layers,
            Site::Decoder(_) => self.config.n_dec_layers,
        };
        let index = match site {
            Site::Encoder(i) | Site::Decoder(i) => i,
        };
        if index >= depth {
            return Err(BackboneError::SiteOutOfRange { site, depth });
        }
        if self.wraps.contains_key(&site) {
            return Err(BackboneError::SiteOccupied { site });
        }
        self.wraps.insert(site, hook);
        Ok(())
    }

    pub fn remove_wraps(&mut self) {
        self.wraps.clear();
    }

    /// Bit-exact witness over backbone parameters (freeze contract).
    pub fn backbone_checksum(&self) -> u64 {
        self.params.checksum(|n| n.starts_with("backbone."))
    }

    fn check_tokens(&self, tokens: &[u32], vocab_size: usize) -> Result<(), BackboneError> {
        if tokens.len() > self.config.max_len {
            return Err(BackboneError::SequenceTooLong {
                len: tokens.len(),
                max: self.config.max_len,
            });
        }
        for &t in tokens {
            if t as usize >= vocab_size {
                return Err(BackboneError::TokenOutOfVocab {
                    token: t,
                    vocab_size,
                });
            }
        }
        Ok(())
    }

    fn embed(
        &self,
        tb: &mut TapeBuilder,
        table: &str,
        tokens: &[u32],
    ) -> Result<NodeId, BackboneError> {
        let ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
        let table = tb.param(table);
        let emb = tb.graph.gather_rows(table, &ids)?;
        let pos = tb.graph.constant(Tensor::from_rows(
            &(0..ids.len())
                .map(|i| self.pos_table.row(i).to_vec())
                .collect::<Vec<_>>(),
        ));
        Ok(tb.graph.add(emb, pos)?)
    }

    fn layer_norm(
        &self,
        tb: &mut TapeBuilder,
        x: NodeId,
        prefix: &str,
    ) -> Result<NodeId, BackboneError> {
        let g = tb.param(&format!("{prefix}.g"));
        let b = tb.param(&format!("{prefix}.b"));
        Ok(tb.graph.layer_norm(x, g, b, LN_EPS)?)
    }

    fn ffn(&self, tb: &mut TapeBuilder, x: NodeId, prefix: &str) -> Result<NodeId, BackboneError> {
        let w1 = tb.param(&format!("{prefix}.w1"));
        let b1 = tb.param(&format!("{prefix}.b1"));
        let w2 = tb.param(&format!("{prefix}.w2"));
        let b2 = tb.param(&format!("{prefix}.b2"));
        let h = tb.graph.matmul(x, w1)?;
        let h = tb.graph.add_bias(h, b1)?;
        let h = tb.graph.relu(h);
        let h = tb.graph.matmul(h, w2)?;
        Ok(tb.graph.add_bias(h, b2)?)
    }

    /// Build the encoder stack; returns per-layer outputs (embedding
    /// first) and the final-norm node.
    pub(crate) fn build_encoder(
        &self,
        tb: &mut TapeBuilder,
        src: &[u32],
        seg: &ExpertiseSegmentation,
        hooks: HookMode,
        mut noise: Option<&mut Rng>,
        routes: &mut Vec<RouteRecord>,
    ) -> Result<(Vec<NodeId>, NodeId), BackboneError> {
        let mut x = self.embed(tb, "backbone.src_embed", src)?;
        let mut layers = vec![x];
        for l in 0..self.config.n_enc_layers {
            let p = format!("backbone.enc.{l}");
            let z_prev = x;

            let h = self.layer_norm(tb, x, &format!("{p}.ln1"))?;
            let w_self = tb.param(&format!("{p}.mix.self"));
            let w_left = tb.param(&format!("{p}.mix.left"));
            let w_right = tb.param(&format!("{p}.mix.right"));
            let b_mix = tb.param(&format!("{p}.mix.b"));
            let own = tb.graph.matmul(h, w_self)?;
            let prev = tb.graph.shift_rows(h, 1);
            let prev = tb.graph.matmul(prev, w_left)?;
            let next = tb.graph.shift_rows(h, -1);
            let next = tb.graph.matmul(next, w_right)?;
            let mix = tb.graph.add(own, prev)?;
            let mix = tb.graph.add(mix, next)?;
            let mix = tb.graph.add_bias(mix, b_mix)?;
            let x1 = tb.graph.add(x, mix)?;

            let h2 = self.layer_norm(tb, x1, &format!("{p}.ln2"))?;
            let f = self.ffn(tb, h2, &format!("{p}.ffn"))?;
            let mut out = tb.graph.add(x1, f)?;

            if hooks.active() {
                if let Some(hook) = self.wraps.get(&Site::Encoder(l)) {
                    let delta = hook.encoder_delta(
                        tb,
                        z_prev,
                        seg,
                        noise.as_deref_mut(),
                        routes,
                    )?;
                    out = tb.graph.add(out, delta)?;
                }
            }
            x = out;
            layers.push(x);
        }
        let final_norm = self.layer_norm(tb, x, "backbone.enc.final")?;
        Ok((layers, final_norm))
    }

    /// Build the decoder stack over a teacher-forced input; returns the
    /// logits node.
    pub(crate) fn build_decoder(
        &self,
        tb: &mut TapeBuilder,
        tgt_in: &[u32],
        enc_final: NodeId,
        hooks: HookMode,
        mut noise: Option<&mut Rng>,
        routes: &mut Vec<RouteRecord>,
    ) -> Result<NodeId, BackboneError> {
        let d = self.config.d_model;
        let mut y = self.embed(tb, "backbone.tgt_embed", tgt_in)?;
        for l in 0..self.config.n_dec_layers {
            let p = format!("backbone.dec.{l}");
            let z_prev = y;

            let h = self.layer_norm(tb, y, &format!("{p}.ln1"))?;
            let w_self = tb.param(&format!("{p}.mix.self"));
            let w_left = tb.param(&format!("{p}.mix.left"));
            let b_mix = tb.param(&format!("{p}.mix.b"));
            let own = tb.graph.matmul(h, w_self)?;
            let prev = tb.graph.shift_rows(h, 1);
            let prev = tb.graph.matmul(prev, w_left)?;
            let mix = tb.graph.add(own, prev)?;
            let mix = tb.graph.add_bias(mix, b_mix)?;
            let y1 = tb.graph.add(y, mix)?;

            let hc = self.layer_norm(tb, y1, &format!("{p}.lnc"))?;
            let wq = tb.param(&format!("{p}.cross.wq"));
            let wk = tb.param(&format!("{p}.cross.wk"));
            let wv = tb.param(&format!("{p}.cross.wv"));
            let wo = tb.param(&format!("{p}.cross.wo"));
            let b_c = tb.param(&format!("{p}.cross.b"));
            let q = tb.graph.matmul(hc, wq)?;
            let k = tb.graph.matmul(enc_final, wk)?;
            let v = tb.graph.matmul(enc_final, wv)?;
            let scores = tb.graph.matmul_nt(q, k)?;
            let scores = tb.graph.scale(scores, 1.0 / (d as f64).sqrt());
            let probs = tb.graph.softmax_rows(scores);
            let ctx = tb.graph.matmul(probs, v)?;
            let ctx = tb.graph.matmul(ctx, wo)?;
            let ctx = tb.graph.add_bias(ctx, b_c)?;
            let y2 = tb.graph.add(y1, ctx)?;

            let h2 = self.layer_norm(tb, y2, &format!("{p}.ln2"))?;
            let f = self.ffn(tb, h2, &format!("{p}.ffn"))?;
            let mut out = tb.graph.add(y2, f)?;

            if hooks.active() {
                if let Some(hook) = self.wraps.get(&Site::Decoder(l)) {
                    let delta = hook.decoder_delta(tb, z_prev, noise.as_deref_mut(), routes)?;
                    out = tb.graph.add(out, delta)?;
                }
            }
            y = out;
        }
        let final_norm = self.layer_norm(tb, y, "backbone.dec.final")?;
        let w_out = tb.param("backbone.out.w");
        let b_out = tb.param("backbone.out.b");
        let logits = tb.graph.matmul(final_norm, w_out)?;
        Ok(tb.graph.add_bias(logits, b_out)?)
    }

    /// Run the encoder and return all layer activations. With
    /// `hooks_active` any installed adapters participate (inference mode:
    /// no gate noise).
    pub fn encode(
        &self,
        src: &[u32],
        seg: &ExpertiseSegmentation,
        hooks_active: bool,
    ) -> Result<EncodeTrace, BackboneError> {
        self.check_tokens(src, self.config.src_vocab)?;
        if seg.token_count != src.len() {
            return Err(BackboneError::SegmentationMismatch {
                got: seg.token_count,
                expected: src.len(),
            });
        }
        let mut tb = TapeBuilder::new(&self.params, TrainScope::None);
        let mut routes = Vec::new();
        let mode = if hooks_active {
            HookMode::Active { training: false }
        } else {
            HookMode::Off
        };
        let (layers, final_norm) = self.build_encoder(&mut tb, src, seg, mode, None, &mut routes)?;
        Ok(EncodeTrace {
            layers: layers.iter().map(|&id| tb.graph.value(id).clone()).collect(),
            final_norm: tb.graph.value(final_norm).clone(),
            routes,
        })
    }

    /// Greedy decode against cached encoder output: argmax per step (ties
    /// break toward the lowest token id) until the end token or `max_len`.
    pub fn decode_greedy(
        &self,
        enc: &EncodeTrace,
        hooks_active: bool,
        max_len: usize,
    ) -> Result<Vec<u32>, BackboneError> {
        let mode = if hooks_active {
            HookMode::Active { training: false }
        } else {
            HookMode::Off
        };
        let mut out: Vec<u32> = Vec::new();
        while out.len() < max_len.min(self.config.max_len.saturating_sub(1)) {
            let mut tgt_in = Vec::with_capacity(out.len() + 1);
            tgt_in.push(super::START_TOKEN);
            tgt_in.extend_from_slice(&out);

            let mut tb = TapeBuilder::new(&self.params, TrainScope::None);
            let mut routes = Vec::new();
            let enc_final = tb.graph.constant(enc.final_norm.clone());
            let logits =
                self.build_decoder(&mut tb, &tgt_in, enc_final, mode, None, &mut routes)?;
            let row = tb.graph.value(logits).row(tgt_in.len() - 1).to_vec();
            let next = argmax_lowest(&row);
            if next == super::END_TOKEN {
                break;
            }
            out.push(next);
        }
        Ok(out)
    }

    /// Encode-then-decode convenience.
    pub fn generate(
        &self,
        src: &[u32],
        seg: &ExpertiseSegmentation,
        hooks_active: bool,
    ) -> Result<Vec<u32>, BackboneError> {
        let enc = self.encode(src, seg, hooks_active)?;
        self.decode_greedy(&enc, hooks_active, self.config.max_len)
    }

    /// Decoder routing trace for one teacher-forced target (rationale
    /// reports want decoder gate decisions, which greedy decoding makes
    /// awkward to collect incrementally).
    pub fn trace_routes(
        &self,
        src: &[u32],
        seg: &ExpertiseSegmentation,
        tgt: &[u32],
    ) -> Result<Vec<RouteRecord>, BackboneError> {
        self.check_tokens(src, self.config.src_vocab)?;
        self.check_tokens(tgt, self.config.tgt_vocab)?;
        let mut tb = TapeBuilder::new(&self.params, TrainScope::None);
        let mut routes = Vec::new();
        let mode = HookMode::Active { training: false };
        let (_, enc_final) = self.build_encoder(&mut tb, src, seg, mode, None, &mut routes)?;
        let mut tgt_in = vec![super::START_TOKEN];
        tgt_in.extend_from_slice(tgt);
        self.build_decoder(&mut tb, &tgt_in, enc_final, mode, None, &mut routes)?;
        Ok(routes)
    }

    /// One optimizer step of teacher-forced cross-entropy over the given
    /// samples (losses averaged). Only parameters admitted by `scope`
    /// move. Hook noise draws from `rng` when hooks are in training mode.
    pub fn train_step(
        &mut self,
        samples: &[TrainSample],
        scope: TrainScope,
        opt: &mut OptimizerState,
        hooks: HookMode,
        rng: &mut Rng,
    ) -> Result<f64, BackboneError> {
        assert!(!samples.is_empty(), "train_step needs samples");
        for s in samples {
            self.check_tokens(s.src, self.config.src_vocab)?;
            self.check_tokens(s.tgt, self.config.tgt_vocab)?;
            if s.seg.token_count != s.src.len() {
                return Err(BackboneError::SegmentationMismatch {
                    got: s.seg.token_count,
                    expected: s.src.len(),
                });
            }
        }

        let mut tb = TapeBuilder::new(&self.params, scope);
        let mut routes = Vec::new();
        let mut total: Option<NodeId> = None;
        for s in samples {
            let noise = hooks.training().then_some(&mut *rng);
            let (_, enc_final) = self.build_encoder(&mut tb, s.src, s.seg, hooks, noise, &mut routes)?;
            let mut tgt_in = vec![super::START_TOKEN];
            tgt_in.extend_from_slice(s.tgt);
            let mut labels: Vec<usize> = s.tgt.iter().map(|&t| t as usize).collect();
            labels.push(super::END_TOKEN as usize);
            let noise = hooks.training().then_some(&mut *rng);
            let logits = self.build_decoder(&mut tb, &tgt_in, enc_final, hooks, noise, &mut routes)?;
            let loss = tb.graph.cross_entropy(logits, &labels)?;
            let scaled = tb.graph.scale(loss, 1.0 / samples.len() as f64);
            total = Some(match total {
                Some(acc) => tb.graph.add(acc, scaled)?,
                None => scaled,
            });
        }
        let total = total.expect("non-empty samples");
        let loss_value = tb.graph.value(total).item();

        if scope != TrainScope::None {
            tb.graph.backward(total)?;
            let grads = tb.grads();
            if !grads.is_empty() {
                opt.step(&mut self.params, &grads);
            }
        }
        Ok(loss_value)
    }

    /// Full-parameter training over a corpus; returns per-epoch mean loss.
    /// Sample order reshuffles each epoch from the model seed.
    pub fn pretrain(
        &mut self,
        corpus: &[(Vec<u32>, ExpertiseSegmentation, Vec<u32>)],
        epochs: usize,
        lr: f64,
    ) -> Result<Vec<f64>, BackboneError> {
        if corpus.is_empty() {
            return Err(BackboneError::EmptyCorpus);
        }
        let mut opt = OptimizerState::new(AdamHyper::with_lr(lr));
        let mut rng = Rng::new(self.config.seed ^ 0x7072_6574);
        let mut log = Vec::with_capacity(epochs);
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        for _ in 0..epochs {
            rng.shuffle(&mut order);
            let mut sum = 0.0;
            for &i in &order {
                let (src, seg, tgt) = &corpus[i];
                let sample = TrainSample {
                    src,
                    seg,
                    tgt,
                };
                sum += self.train_step(&[sample], TrainScope::Backbone, &mut opt, HookMode::Off, &mut rng)?;
            }
            log.push(sum / corpus.len() as f64);
        }
        Ok(log)
    }

    /// Teacher-forced argmax accuracy over a corpus (fraction of target
    /// positions, including the end token, predicted exactly).
    pub fn token_accuracy(
        &self,
        corpus: &[(Vec<u32>, ExpertiseSegmentation, Vec<u32>)],
    ) -> Result<f64, BackboneError> {
        let mut hits = 0usize;
        let mut total = 0usize;
        for (src, seg, tgt) in corpus {
            let mut tb = TapeBuilder::new(&self.params, TrainScope::None);
            let mut routes = Vec::new();
            let (_, enc_final) =
                self.build_encoder(&mut tb, src, seg, HookMode::Off, None, &mut routes)?;
            let mut tgt_in = vec![super::START_TOKEN];
            tgt_in.extend_from_slice(tgt);
            let logits = self.build_decoder(&mut tb, &tgt_in, enc_final, HookMode::Off, None, &mut routes)?;
            let values = tb.graph.value(logits);
            let mut labels: Vec<u32> = tgt.clone();
            labels.push(super::END_TOKEN);
            for (i, &label) in labels.iter().enumerate() {
                if argmax_lowest(values.row(i)) == label {
                    hits += 1;
                }
                total += 1;
            }
        }
        Ok(hits as f64 / total.max(1) as f64)
    }
}

fn argmax_lowest(row: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best as u32
}

fn positional_table(max_len: usize, d: usize) -> Tensor {
    let mut table = Tensor::zeros(&[max_len, d]);
    for i in 0..max_len {
        for j in 0..d {
            let angle = i as f64 / 10_000f64.powf((2 * (j / 2)) as f64 / d as f64);
            table.data_mut()[i * d + j] = if j % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    table
}

