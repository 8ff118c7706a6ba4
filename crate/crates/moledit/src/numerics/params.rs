//! Named parameter collection shared by the backbone and adapters.

use std::collections::BTreeMap;

use super::tensor::Tensor;

/// All trainable (and frozen) tensors of a model, keyed by dotted names.
/// Iteration is always name-sorted, which keeps checkpoints and checksums
/// deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    map: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) {
        let prev = self.map.insert(name.to_string(), tensor);
        assert!(prev.is_none(), "duplicate parameter {name}");
    }

    pub fn get(&self, name: &str) -> &Tensor {
        self.map
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        self.map
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.map.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn total_elements(&self) -> usize {
        self.map.values().map(Tensor::len).sum()
    }

    /// FNV-1a over names and raw f64 bits of every parameter whose name
    /// passes the filter. Bit-exact equality witness for freeze contracts.
    pub fn checksum(&self, filter: impl Fn(&str) -> bool) -> u64 {
        let mut h = super::fnv1a64_init();
        for (name, tensor) in &self.map {
            if !filter(name) {
                continue;
            }
            h = super::fnv1a64_update(h, name.as_bytes());
            for &v in tensor.data() {
                h = super::fnv1a64_update(h, &v.to_le_bytes());
            }
        }
        h
    }
}
