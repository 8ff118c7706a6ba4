//! Token vocabularies with fixed special ids.

use std::collections::HashMap;
use std::path::Path;

use super::BackboneError;

pub const END_TOKEN: u32 = 0;
pub const START_TOKEN: u32 = 1;
pub const PAD_TOKEN: u32 = 2;

const SPECIALS: [&str; 3] = ["<end>", "<start>", "<pad>"];

/// Line-per-token vocabulary; line number is the id. Ids 0/1/2 are always
/// the end/start/pad markers.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Build from content tokens (specials are prepended; duplicates and
    /// special collisions are dropped, order preserved).
    pub fn new(content: impl IntoIterator<Item = String>) -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut index: HashMap<String, u32> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        for token in content {
            if !index.contains_key(&token) {
                index.insert(token.clone(), tokens.len() as u32);
                tokens.push(token);
            }
        }
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn encode(&self, tokens: &[String]) -> Result<Vec<u32>, BackboneError> {
        tokens
            .iter()
            .map(|t| {
                self.id(t).ok_or(BackboneError::TokenOutOfVocab {
                    token: u32::MAX,
                    vocab_size: self.len(),
                })
            })
            .collect()
    }

    /// Decode ids to tokens, skipping specials.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&id| id > PAD_TOKEN)
            .filter_map(|&id| self.token(id).map(str::to_string))
            .collect()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.tokens.join("\n") + "\n")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let tokens: Vec<String> = text.lines().map(str::to_string).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocab { tokens, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_occupy_fixed_ids() {
        let v = Vocab::new(["C".to_string(), "O".to_string()]);
        assert_eq!(v.token(END_TOKEN), Some("<end>"));
        assert_eq!(v.token(START_TOKEN), Some("<start>"));
        assert_eq!(v.token(PAD_TOKEN), Some("<pad>"));
        assert_eq!(v.id("C"), Some(3));
        assert_eq!(v.id("O"), Some(4));
    }

    #[test]
    fn duplicates_collapse() {
        let v = Vocab::new(["C".to_string(), "C".to_string()]);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn file_round_trip_preserves_ids() {
        let v = Vocab::new(["x".to_string(), "y".to_string()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        v.save(&path).unwrap();
        let loaded = Vocab::load(&path).unwrap();
        assert_eq!(loaded.len(), v.len());
        for id in 0..v.len() as u32 {
            assert_eq!(loaded.token(id), v.token(id));
        }
        // line number equals id
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().nth(3), Some("x"));
    }
}
