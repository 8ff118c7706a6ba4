//! Multi-Expert Knowledge Adapter: noisy top-k gating over a pool of
//! expert transforms, routed per expertise segment at encoder sites and
//! per token at decoder sites.
//!
//! A gate turns a query embedding into softmax probabilities over the P
//! experts, then zeroes all but the top k (ties break toward the lower
//! expert index; retained entries keep their raw softmax values, no
//! renormalization). The adapter output is the wrapped layer's output
//! plus the gate-weighted sum of expert transforms of the layer input,
//! scaled by lambda at decoder sites.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backbone::{AdapterHook, RouteRecord, Site, TapeBuilder};
use crate::numerics::{NodeId, NumericsError, ParamStore, Rng, Tensor};
use crate::segment::ExpertiseSegmentation;

#[derive(Debug, Error)]
pub enum MekaError {
    #[error("empty expertise segment")]
    EmptySegment,
    #[error("segmentation covers {got} tokens, adapter input has {expected}")]
    SegmentationMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    /// Number of experts P.
    pub experts: usize,
    /// Retained experts per gate decision.
    pub top_k: usize,
    /// Decoder-side delta scale; encoder deltas are unscaled.
    pub lambda: f64,
    /// Std of the Gaussian logit noise during training.
    pub gate_noise_std: f64,
    pub d_model: usize,
    /// Hidden width for two-layer experts; single linear maps when absent.
    pub expert_hidden: Option<usize>,
}

impl AdapterConfig {
    pub fn new(d_model: usize) -> Self {
        AdapterConfig {
            experts: 5,
            top_k: 1,
            lambda: 1.0,
            gate_noise_std: 0.1,
            d_model,
            expert_hidden: None,
        }
    }

    /// Single-expert configuration used by the no-MEKA ablation.
    pub fn single_expert(d_model: usize) -> Self {
        AdapterConfig {
            experts: 1,
            top_k: 1,
            ..AdapterConfig::new(d_model)
        }
    }

    fn validate(&self) {
        assert!(self.experts >= 1, "need at least one expert");
        assert!(
            (1..=self.experts).contains(&self.top_k),
            "top_k must lie in 1..=experts"
        );
        assert!(self.gate_noise_std >= 0.0, "noise std must be non-negative");
    }
}

/// Sparse gate decision: at most k nonzero weights, each the raw softmax
/// probability of its expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateVector {
    pub weights: Vec<f64>,
}

impl GateVector {
    pub fn selected(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }
}

/// One adapter instance (one wrap site): gate matrix plus P expert maps,
/// with parameters living in the shared store under `prefix`.
#[derive(Debug, Clone)]
pub struct MekaAdapter {
    pub config: AdapterConfig,
    pub site: Site,
    prefix: String,
}

impl MekaAdapter {
    /// Register gate and expert parameters under
    /// `adapter.<enc|dec>.<layer>`. Experts start at zero so a fresh
    /// adapter is an exact identity; the gate starts at a small random
    /// spread so routing is not degenerate.
    pub fn install(
        config: AdapterConfig,
        site: Site,
        params: &mut ParamStore,
        rng: &mut Rng,
    ) -> Self {
        config.validate();
        let prefix = match site {
            Site::Encoder(l) => format!("adapter.enc.{l}"),
            Site::Decoder(l) => format!("adapter.dec.{l}"),
        };
        let d = config.d_model;
        let gate_std = 1.0 / (d as f64).sqrt();
        params.insert(
            &format!("{prefix}.gate"),
            Tensor::randn(&[d, config.experts], gate_std, rng),
        );
        for p in 0..config.experts {
            match config.expert_hidden {
                None => {
                    params.insert(&format!("{prefix}.expert.{p}.w"), Tensor::zeros(&[d, d]));
                }
                Some(hidden) => {
                    params.insert(
                        &format!("{prefix}.expert.{p}.w1"),
                        Tensor::randn(&[d, hidden], 1.0 / (d as f64).sqrt(), rng),
                    );
                    params.insert(
                        &format!("{prefix}.expert.{p}.w2"),
                        Tensor::zeros(&[hidden, d]),
                    );
                }
            }
        }
        MekaAdapter {
            config,
            site,
            prefix,
        }
    }

    /// Reattach to parameters previously created by `install` (checkpoint
    /// reload path).
    pub fn attach(config: AdapterConfig, site: Site, params: &ParamStore) -> Self {
        config.validate();
        let prefix = match site {
            Site::Encoder(l) => format!("adapter.enc.{l}"),
            Site::Decoder(l) => format!("adapter.dec.{l}"),
        };
        assert!(
            params.contains(&format!("{prefix}.gate")),
            "no adapter parameters under {prefix}"
        );
        MekaAdapter {
            config,
            site,
            prefix,
        }
    }

    pub fn param_prefix(&self) -> &str {
        &self.prefix
    }

    /// Gate from a query embedding node ([1,d]): logits, optional
    /// training noise, softmax, top-k mask. Returns the masked gate node
    /// ([1,P]) and its concrete values.
    fn gate_node(
        &self,
        tb: &mut TapeBuilder,
        query: NodeId,
        noise: Option<&mut Rng>,
    ) -> Result<(NodeId, GateVector), NumericsError> {
        let gate_w = tb.param(&format!("{}.gate", self.prefix));
        let mut logits = tb.graph.matmul(query, gate_w)?;
        if let Some(rng) = noise {
            if self.config.gate_noise_std > 0.0 {
                let eps = Tensor::new(
                    vec![1, self.config.experts],
                    (0..self.config.experts)
                        .map(|_| rng.normal(0.0, self.config.gate_noise_std))
                        .collect(),
                );
                let eps = tb.graph.constant(eps);
                logits = tb.graph.add(logits, eps)?;
            }
        }
        let probs = tb.graph.softmax_rows(logits);
        let masked = tb.graph.top_k_mask(probs, self.config.top_k);
        let weights = tb.graph.value(masked).data().to_vec();
        Ok((masked, GateVector { weights }))
    }

    /// Gate-weighted sum of expert transforms of `rows`ome ([n,d]).
    fn expert_mix(
        &self,
        tb: &mut TapeBuilder,
        rows: NodeId,
        gate: NodeId,
        gate_values: &GateVector,
    ) -> Result<NodeId, NumericsError> {
        let mut acc: Option<NodeId> = None;
        for p in 0..self.config.experts {
            // hard-masked experts contribute exactly zero; skipping them
            // is gradient-exact because the retained softmax values flow
            // through the picked entries only
            if gate_values.weights[p] == 0.0 {
                continue;
            }
            let y = match self.config.expert_hidden {
                None => {
                    let w = tb.param(&format!("{}.expert.{p}.w", self.prefix));
                    tb.graph.matmul(rows, w)?
                }
                Some(_) => {
                    let w1 = tb.param(&format!("{}.expert.{p}.w1", self.prefix));
                    let w2 = tb.param(&format!("{}.expert.{p}.w2", self.prefix));
                    let h = tb.graph.matmul(rows, w1)?;
                    let h = tb.graph.relu(h);
                    tb.graph.matmul(h, w2)?
                }
            };
            let weight = tb.graph.pick(gate, 0, p)?;
            let scaled = tb.graph.mul_scalar(y, weight)?;
            acc = Some(match acc {
                Some(a) => tb.graph.add(a, scaled)?,
                None => scaled,
            });
        }
        match acc {
            Some(a) => Ok(a),
            None => Ok(tb.graph.scale(rows, 0.0)),
        }
    }
}

impl AdapterHook for MekaAdapter {
    /// Expertise-wise routing: one gate per segment from the mean of the
    /// segment's layer-input embeddings; the delta for the segment's rows
    /// is the gate-weighted expert mix of those rows.
    fn encoder_delta(
        &self,
        tb: &mut TapeBuilder,
        z_prev: NodeId,
        seg: &ExpertiseSegmentation,
        mut noise: Option<&mut Rng>,
        routes: &mut Vec<RouteRecord>,
    ) -> Result<NodeId, NumericsError> {
        let n = tb.graph.value(z_prev).rows();
        let mut acc: Option<NodeId> = None;
        for segment in &seg.segments {
            let rows = tb.graph.gather_rows(z_prev, &segment.token_indices)?;
            let mean = tb.graph.mean_rows(rows);
            let (gate, values) = self.gate_node(tb, mean, noise.as_deref_mut())?;
            routes.push(RouteRecord {
                site: self.site,
                label: segment.label.clone(),
                token_count: segment.token_indices.len(),
                weights: values.weights.clone(),
                selected: values.selected(),
            });
            let mixed = self.expert_mix(tb, rows, gate, &values)?;
            let spread = tb.graph.scatter_rows(mixed, &segment.token_indices, n)?;
            acc = Some(match acc {
                Some(a) => tb.graph.add(a, spread)?,
                None => spread,
            });
        }
        match acc {
            Some(a) => Ok(a),
            None => Ok(tb.graph.scale(z_prev, 0.0)),
        }
    }

    /// Token-wise routing: one gate per token from that token's layer
    /// input; the summed delta is scaled by lambda.
    fn decoder_delta(
        &self,
        tb: &mut TapeBuilder,
        z_prev: NodeId,
        mut noise: Option<&mut Rng>,
        routes: &mut Vec<RouteRecord>,
    ) -> Result<NodeId, NumericsError> {
        let n = tb.graph.value(z_prev).rows();
        let mut acc: Option<NodeId> = None;
        for i in 0..n {
            let row = tb.graph.gather_rows(z_prev, &[i])?;
            let (gate, values) = self.gate_node(tb, row, noise.as_deref_mut())?;
            routes.push(RouteRecord {
                site: self.site,
                label: "token".to_string(),
                token_count: 1,
                weights: values.weights.clone(),
                selected: values.selected(),
            });
            let mixed = self.expert_mix(tb, row, gate, &values)?;
            let spread = tb.graph.scatter_rows(mixed, &[i], n)?;
            acc = Some(match acc {
                Some(a) => tb.graph.add(a, spread)?,
                None => spread,
            });
        }
        let total = match acc {
            Some(a) => a,
            None => tb.graph.scale(z_prev, 0.0),
        };
        Ok(tb.graph.scale(total, self.config.lambda))
    }
}

/// Standalone gate decision for a segment of token embeddings (mean over
/// the segment rows, then the noisy top-k gate). The graph-building path
/// inside `AdapterHook` uses the same computation.
pub fn gate_expertise(
    adapter: &MekaAdapter,
    params: &ParamStore,
    embeddings: &Tensor,
    segment: &[usize],
    training: bool,
    rng: &mut Rng,
) -> Result<GateVector, MekaError> {
    if segment.is_empty() {
        return Err(MekaError::EmptySegment);
    }
    let mut tb = TapeBuilder::new(params, crate::backbone::TrainScope::None);
    let all = tb.graph.constant(embeddings.clone());
    let rows = tb.graph.gather_rows(all, segment)?;
    let mean = tb.graph.mean_rows(rows);
    let noise = training.then_some(rng);
    let (_, values) = adapter.gate_node(&mut tb, mean, noise)?;
    Ok(values)
}

/// Standalone per-token gate decision.
pub fn gate_token(
    adapter: &MekaAdapter,
    params: &ParamStore,
    token_embedding: &Tensor,
    training: bool,
    rng: &mut Rng,
) -> Result<GateVector, MekaError> {
    let mut tb = TapeBuilder::new(params, crate::backbone::TrainScope::None);
    let row = tb.graph.constant(token_embedding.clone());
    let noise = training.then_some(rng);
    let (_, values) = adapter.gate_node(&mut tb, row, noise)?;
    Ok(values)
}
