//! Expertise segmentation of a token sequence.
//!
//! Both modalities reduce to this shape: functional groups over SMILES
//! tokens for molecules, labeled descriptions over words for captions.
//! Segments partition the token index range; they need not be contiguous.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    /// Token indices, ascending, not necessarily contiguous.
    pub token_indices: Vec<usize>,
}

/// Partition of `0..token_count` into labeled expertise segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertiseSegmentation {
    pub segments: Vec<Segment>,
    pub token_count: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentationError {
    #[error("token {token} appears in {count} segments (expected exactly 1)")]
    NotAPartition { token: usize, count: usize },
    #[error("segmentation is empty")]
    Empty,
}

impl ExpertiseSegmentation {
    /// Build and validate: every token in exactly one segment, at least one
    /// segment overall.
    pub fn new(segments: Vec<Segment>, token_count: usize) -> Result<Self, SegmentationError> {
        if segments.is_empty() || token_count == 0 {
            return Err(SegmentationError::Empty);
        }
        let mut seen = vec![0usize; token_count];
        for seg in &segments {
            for &t in &seg.token_indices {
                if t >= token_count {
                    return Err(SegmentationError::NotAPartition { token: t, count: 0 });
                }
                seen[t] += 1;
            }
        }
        for (token, &count) in seen.iter().enumerate() {
            if count != 1 {
                return Err(SegmentationError::NotAPartition { token, count });
            }
        }
        Ok(ExpertiseSegmentation {
            segments,
            token_count,
        })
    }

    /// Single segment covering everything; the degenerate fallback and the
    /// whole-input mode of the switcher ablation.
    pub fn whole(token_count: usize, label: &str) -> Self {
        ExpertiseSegmentation {
            segments: vec![Segment {
                label: label.to_string(),
                token_indices: (0..token_count).collect(),
            }],
            token_count,
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.label.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_is_enforced() {
        let segs = vec![
            Segment {
                label: "a".to_string(),
                token_indices: vec![0, 1],
            },
            Segment {
                label: "b".to_string(),
                token_indices: vec![1, 2],
            },
        ];
        let err = ExpertiseSegmentation::new(segs, 3).unwrap_err();
        assert_eq!(err, SegmentationError::NotAPartition { token: 1, count: 2 });
    }

    #[test]
    fn uncovered_token_is_rejected() {
        let segs = vec![Segment {
            label: "a".to_string(),
            token_indices: vec![0],
        }];
        let err = ExpertiseSegmentation::new(segs, 2).unwrap_err();
        assert_eq!(err, SegmentationError::NotAPartition { token: 1, count: 0 });
    }

    #[test]
    fn whole_covers_every_token() {
        let seg = ExpertiseSegmentation::whole(4, "input");
        assert_eq!(seg.len(), 1);
        assert_eq!(seg.segments[0].token_indices, vec![0, 1, 2, 3]);
    }
}
