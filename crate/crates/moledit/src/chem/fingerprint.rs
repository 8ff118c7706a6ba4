//! Hashed circular-environment fingerprints and Tanimoto similarity.
//!
//! For each atom and each radius r in 0..=R, the r-neighborhood is encoded
//! as a canonical string (child subtrees sorted lexicographically) and
//! FNV-1a-hashed onto one bit of a fixed-width vector. Not MACCS keys: the
//! curated 166-pattern set is replaced by these environments, which keep
//! the substructure-overlap role of the similarity.

use super::parse::MolGraph;
use super::ChemError;
use crate::numerics::fnv1a64;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_WIDTH: usize = 1024;

/// Fixed-width bit vector with a cached population count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFingerprint {
    width: usize,
    blocks: Vec<u64>,
    set_count: usize,
}

impl BitFingerprint {
    fn empty(width: usize) -> Self {
        BitFingerprint {
            width,
            blocks: vec![0; width.div_ceil(64)],
            set_count: 0,
        }
    }

    fn set(&mut self, bit: usize) {
        let (block, offset) = (bit / 64, bit % 64);
        if self.blocks[block] & (1 << offset) == 0 {
            self.blocks[block] |= 1 << offset;
            self.set_count += 1;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set_count(&self) -> usize {
        self.set_count
    }

    pub fn bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.blocks[b / 64] & (1 << (b % 64)) != 0)
    }
}

/// Canonical environment strings for every (atom, radius) pair.
/// Exposed so tests can enumerate environments independently of hashing.
pub fn environments(graph: &MolGraph, radius: usize) -> Vec<String> {
    let mut out = Vec::new();
    for atom in 0..graph.atom_count() {
        for r in 0..=radius {
            out.push(environment_string(graph, atom, r));
        }
    }
    out
}

fn environment_string(graph: &MolGraph, atom: usize, radius: usize) -> String {
    let a = &graph.atoms[atom];
    let mut s = format!(
        "{}{}{}",
        a.element.symbol(),
        if a.aromatic { "~" } else { "" },
        if a.charge != 0 {
            format!("{:+}", a.charge)
        } else {
            String::new()
        }
    );
    if radius > 0 {
        let mut children: Vec<String> = graph
            .neighbors(atom)
            .map(|(j, order)| {
                format!("{}{}", order.symbol(), environment_string(graph, j, radius - 1))
            })
            .collect();
        children.sort();
        s.push('(');
        s.push_str(&children.join(","));
        s.push(')');
    }
    s
}

/// Hash every circular environment up to `radius` onto a `width`-bit vector.
pub fn fingerprint_with(graph: &MolGraph, radius: usize, width: usize) -> BitFingerprint {
    let mut fp = BitFingerprint::empty(width);
    for env in environments(graph, radius) {
        fp.set((fnv1a64(env.as_bytes()) % width as u64) as usize);
    }
    fp
}

pub fn fingerprint(graph: &MolGraph) -> BitFingerprint {
    fingerprint_with(graph, DEFAULT_RADIUS, DEFAULT_WIDTH)
}

/// |a AND b| / |a OR b|; defined as 1.0 when both fingerprints are empty.
pub fn tanimoto(a: &BitFingerprint, b: &BitFingerprint) -> Result<f64, ChemError> {
    if a.width != b.width {
        return Err(ChemError::WidthMismatch {
            left: a.width,
            right: b.width,
        });
    }
    let mut and = 0u32;
    let mut or = 0u32;
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        and += (x & y).count_ones();
        or += (x | y).count_ones();
    }
    if or == 0 {
        return Ok(1.0);
    }
    Ok(and as f64 / or as f64)
}
