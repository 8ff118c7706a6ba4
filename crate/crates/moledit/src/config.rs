//! Run configuration: every knob of the pipeline in one structure,
//! loadable from a TOML file with unknown keys rejected. Reports echo the
//! resolved configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{CorpusConfig, Thresholds};
use crate::editing::Task;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelDims {
    pub d_model: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub d_ffn: usize,
    pub max_len: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            d_model: 64,
            n_enc_layers: 4,
            n_dec_layers: 4,
            d_ffn: 128,
            max_len: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainSettings {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for PretrainSettings {
    fn default() -> Self {
        PretrainSettings {
            epochs: 60,
            lr: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdapterSettings {
    pub experts: usize,
    pub top_k: usize,
    pub lambda: f64,
    pub gate_noise_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expert_hidden: Option<usize>,
}

impl Default for AdapterSettings {
    fn default() -> Self {
        AdapterSettings {
            experts: 5,
            top_k: 1,
            lambda: 1.0,
            gate_noise_std: 0.1,
            expert_hidden: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwitcherSettings {
    /// Similarity threshold for the caption task.
    pub tau_caption: f64,
    /// Similarity threshold for the molecule task.
    pub tau_molecule: f64,
}

impl Default for SwitcherSettings {
    fn default() -> Self {
        SwitcherSettings {
            tau_caption: 0.9,
            tau_molecule: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EditSettings {
    pub steps: usize,
    pub lr_caption: f64,
    pub lr_molecule: f64,
    pub early_stop_loss: f64,
    /// How many edit-set samples to edit (0 = all).
    pub max_edits: usize,
}

impl Default for EditSettings {
    fn default() -> Self {
        EditSettings {
            steps: 200,
            lr_caption: 1e-4,
            lr_molecule: 2e-5,
            early_stop_loss: 1e-3,
            max_edits: 10,
        }
    }
}

impl EditSettings {
    pub fn lr_for(&self, task: Task) -> f64 {
        match task {
            Task::CaptionGen => self.lr_caption,
            Task::MoleculeGen => self.lr_molecule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub corpus: CorpusSettings,
    pub model: ModelDims,
    pub pretrain: PretrainSettings,
    pub bench: Thresholds,
    pub adapter: AdapterSettings,
    pub switcher: SwitcherSettings,
    pub edit: EditSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSettings {
    pub size: usize,
    pub caption_corrupt_fraction: f64,
    pub molecule_corrupt_fraction: f64,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        CorpusSettings {
            size: 200,
            caption_corrupt_fraction: 0.08,
            molecule_corrupt_fraction: 0.08,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            threads: 1,
            corpus: CorpusSettings::default(),
            model: ModelDims::default(),
            pretrain: PretrainSettings::default(),
            bench: Thresholds::default(),
            adapter: AdapterSettings::default(),
            switcher: SwitcherSettings::default(),
            edit: EditSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            size: self.corpus.size,
            seed: self.seed,
            caption_corrupt_fraction: self.corpus.caption_corrupt_fraction,
            molecule_corrupt_fraction: self.corpus.molecule_corrupt_fraction,
        }
    }

    pub fn tau_for(&self, task: Task) -> f64 {
        match task {
            Task::CaptionGen => self.switcher.tau_caption,
            Task::MoleculeGen => self.switcher.tau_molecule,
        }
    }

    /// Stable hash of the resolved configuration (checkpoint compatibility
    /// checks).
    pub fn content_hash(&self) -> u64 {
        crate::numerics::fnv1a64(self.to_toml_string().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = RunConfig::default();
        let text = config.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn defaults_match_the_reference_settings() {
        let c = RunConfig::default();
        assert_eq!(c.adapter.experts, 5);
        assert_eq!(c.adapter.top_k, 1);
        assert_eq!(c.switcher.tau_caption, 0.9);
        assert_eq!(c.switcher.tau_molecule, 0.8);
        assert_eq!(c.bench.low, 0.2);
        assert_eq!(c.bench.high, 0.95);
        assert_eq!(c.edit.steps, 200);
        assert_eq!(c.edit.lr_caption, 1e-4);
        assert_eq!(c.edit.lr_molecule, 2e-5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("bogus = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        let err = RunConfig::from_toml_str("[edit]\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn partial_files_override_only_named_keys() {
        let config = RunConfig::from_toml_str("seed = 99\n[edit]\nsteps = 77\n").unwrap();
        assert_eq!(config.seed, 99);
        assert_eq!(config.edit.steps, 77);
        assert_eq!(config.edit.lr_caption, 1e-4);
    }

    #[test]
    fn content_hash_tracks_changes() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.edit.steps = 123;
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
