//! Toy encoder-decoder sequence model with per-layer adapter wrap points.
//!
//! Mixing blocks are attention-free: a per-token linear map plus
//! neighborhood (previous/next token) maps in the encoder, the causal half
//! of that in the decoder, and a single-head cross-attention-style
//! weighted sum over encoder outputs. Adapters wrap whole layers: a
//! wrapped layer emits `layer(z_prev) + delta(z_prev)` where the hook
//! computes the delta from the layer input.

mod model;
mod vocab;

pub use model::{
    default_wrap_sites, EncodeTrace, HookMode, Model, ModelConfig, TrainSample,
};
pub use vocab::{Vocab, END_TOKEN, PAD_TOKEN, START_TOKEN};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{Graph, NodeId, NumericsError, ParamStore, Rng, Tensor};
use crate::segment::ExpertiseSegmentation;

#[derive(Debug, Error)]
pub enum BackboneError {
    #[error("token {token} out of vocabulary (size {vocab_size})")]
    TokenOutOfVocab { token: u32, vocab_size: usize },
    #[error("sequence length {len} exceeds max_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("segmentation covers {got} tokens but the input has {expected}")]
    SegmentationMismatch { got: usize, expected: usize },
    #[error("adapter site {site:?} already occupied")]
    SiteOccupied { site: Site },
    #[error("adapter site {site:?} out of range (depth {depth})")]
    SiteOutOfRange { site: Site, depth: usize },
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A wrappable layer position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Encoder(usize),
    Decoder(usize),
}

/// Which parameters receive gradients in a training step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainScope {
    /// Gradients for nothing; the loss is still computed.
    None,
    /// Adapter parameters only (edit training).
    AdapterOnly,
    /// Every backbone parameter (pretraining, FT-all baseline).
    Backbone,
    /// Source-side backbone: source embedding and encoder stack.
    BackboneEncoder,
    /// Target-side backbone: target embedding, decoder stack, output head.
    BackboneDecoder,
    All,
}

impl TrainScope {
    pub fn admits(&self, name: &str) -> bool {
        match self {
            TrainScope::None => false,
            TrainScope::AdapterOnly => name.starts_with("adapter."),
            TrainScope::Backbone => name.starts_with("backbone."),
            TrainScope::BackboneEncoder => {
                name.starts_with("backbone.enc.") || name == "backbone.src_embed"
            }
            TrainScope::BackboneDecoder => {
                name.starts_with("backbone.dec.")
                    || name.starts_with("backbone.out.")
                    || name == "backbone.tgt_embed"
            }
            TrainScope::All => true,
        }
    }
}

/// One gate decision made by an adapter, for rationale reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteRecord {
    pub site: Site,
    /// Segment label at encoder sites, "token" at decoder sites.
    pub label: String,
    pub token_count: usize,
    /// Full gate vector (raw softmax values after the top-k mask).
    pub weights: Vec<f64>,
    /// Indices of the retained experts.
    pub selected: Vec<usize>,
}

/// Layer adapters plug in through this interface; both methods return the
/// delta tensor to add to the wrapped layer's output. `noise` is `Some`
/// only during training, which keeps inference independent of any RNG.
/// Hooks are shared read-only across evaluation workers.
pub trait AdapterHook: Send + Sync {
    fn encoder_delta(
        &self,
        tb: &mut TapeBuilder,
        z_prev: NodeId,
        seg: &ExpertiseSegmentation,
        noise: Option<&mut Rng>,
        routes: &mut Vec<RouteRecord>,
    ) -> Result<NodeId, NumericsError>;

    fn decoder_delta(
        &self,
        tb: &mut TapeBuilder,
        z_prev: NodeId,
        noise: Option<&mut Rng>,
        routes: &mut Vec<RouteRecord>,
    ) -> Result<NodeId, NumericsError>;
}

/// A computation graph under construction plus the parameter leaves it has
/// pulled in. Leaves are cached per name; gradient collection after
/// `backward` walks the cache.
pub struct TapeBuilder<'a> {
    pub graph: Graph,
    store: &'a ParamStore,
    scope: TrainScope,
    leaves: BTreeMap<String, NodeId>,
}

impl<'a> TapeBuilder<'a> {
    pub fn new(store: &'a ParamStore, scope: TrainScope) -> Self {
        TapeBuilder {
            graph: Graph::with_capacity(256),
            store,
            scope,
            leaves: BTreeMap::new(),
        }
    }

    /// Leaf node for a named parameter (cached per tape).
    pub fn param(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.leaves.get(name) {
            return id;
        }
        let requires = self.scope.admits(name);
        let id = self.graph.leaf(self.store.get(name).clone(), requires);
        self.leaves.insert(name.to_string(), id);
        id
    }

    /// Gradients of every trainable leaf, by parameter name.
    pub fn grads(&self) -> BTreeMap<String, Tensor> {
        self.leaves
            .iter()
            .filter(|(name, _)| self.scope.admits(name))
            .filter_map(|(name, &id)| self.graph.grad(id).map(|g| (name.clone(), g.clone())))
            .collect()
    }
}
