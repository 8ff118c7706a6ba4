//! Functional-group segmentation.
//!
//! Hand-coded graph patterns matched in a fixed priority order; every atom
//! lands in exactly one segment. Atoms claimed by no pattern become
//! `Backbone` segments, one per connected component of the residual graph.

use super::parse::{Atom, BondOrder, Element, MolGraph};
use super::tokenize::SmilesTokenSeq;
use crate::segment::{ExpertiseSegmentation, Segment};

/// Group labels in match-priority order (highest first), ending with the
/// residual `Backbone` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    Carboxyl,
    Ester,
    Amide,
    Carbonyl,
    Hydroxyl,
    Amine,
    Nitro,
    Sulfonamide,
    Thiol,
    Ether,
    Halogen,
    AromaticRing,
    AliphaticRing,
    Backbone,
}

impl GroupKind {
    pub const CATALOG: [GroupKind; 13] = [
        GroupKind::Carboxyl,
        GroupKind::Ester,
        GroupKind::Amide,
        GroupKind::Carbonyl,
        GroupKind::Hydroxyl,
        GroupKind::Amine,
        GroupKind::Nitro,
        GroupKind::Sulfonamide,
        GroupKind::Thiol,
        GroupKind::Ether,
        GroupKind::Halogen,
        GroupKind::AromaticRing,
        GroupKind::AliphaticRing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupKind::Carboxyl => "carboxyl",
            GroupKind::Ester => "ester",
            GroupKind::Amide => "amide",
            GroupKind::Carbonyl => "carbonyl",
            GroupKind::Hydroxyl => "hydroxyl",
            GroupKind::Amine => "amine",
            GroupKind::Nitro => "nitro",
            GroupKind::Sulfonamide => "sulfonamide",
            GroupKind::Thiol => "thiol",
            GroupKind::Ether => "ether",
            GroupKind::Halogen => "halogen",
            GroupKind::AromaticRing => "aromatic ring",
            GroupKind::AliphaticRing => "aliphatic ring",
            GroupKind::Backbone => "backbone",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSegment {
    pub label: GroupKind,
    /// Sorted atom indices.
    pub atoms: Vec<usize>,
}

/// Partition of a molecule's atoms into functional-group segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalGroupSegmentation {
    pub segments: Vec<GroupSegment>,
}

impl FunctionalGroupSegmentation {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn label_of(&self, atom: usize) -> Option<GroupKind> {
        self.segments
            .iter()
            .find(|s| s.atoms.contains(&atom))
            .map(|s| s.label)
    }

    pub fn distinct_labels(&self) -> Vec<GroupKind> {
        let mut labels: Vec<GroupKind> = self.segments.iter().map(|s| s.label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

struct Matcher<'a> {
    graph: &'a MolGraph,
    claimed: Vec<bool>,
    segments: Vec<GroupSegment>,
}

impl<'a> Matcher<'a> {
    fn free(&self, atoms: &[usize]) -> bool {
        atoms.iter().all(|&a| !self.claimed[a])
    }

    fn claim(&mut self, label: GroupKind, mut atoms: Vec<usize>) {
        atoms.sort_unstable();
        for &a in &atoms {
            self.claimed[a] = true;
        }
        self.segments.push(GroupSegment { label, atoms });
    }

    fn atom(&self, i: usize) -> &Atom {
        &self.graph.atoms[i]
    }

    fn is(&self, i: usize, e: Element) -> bool {
        self.atom(i).element == e
    }

    /// Terminal oxygen: single-bonded, exactly one heavy neighbor.
    fn terminal_single_o(&self, i: usize) -> bool {
        self.is(i, Element::O)
            && !self.atom(i).aromatic
            && self.graph.degree(i) == 1
            && self
                .graph
                .neighbors(i)
                .all(|(_, order)| order == BondOrder::Single)
    }

    fn double_o_neighbors(&self, i: usize) -> Vec<usize> {
        self.graph
            .neighbors(i)
            .filter(|&(j, order)| order == BondOrder::Double && self.is(j, Element::O))
            .map(|(j, _)| j)
            .collect()
    }
}

/// Assign every atom to exactly one functional-group segment, matching the
/// catalog in priority order; ties inside one pattern resolve toward the
/// lowest root atom index. A match only fires when all of its atoms are
/// still unclaimed.
pub fn detect_functional_groups(graph: &MolGraph) -> FunctionalGroupSegmentation {
    let n = graph.atom_count();
    let mut m = Matcher {
        graph,
        claimed: vec![false; n],
        segments: Vec::new(),
    };

    for kind in GroupKind::CATALOG {
        match kind {
            GroupKind::Carboxyl => match_acyl(&mut m, kind),
            GroupKind::Ester => match_acyl(&mut m, kind),
            GroupKind::Amide => match_acyl(&mut m, kind),
            GroupKind::Carbonyl => match_carbonyl(&mut m),
            GroupKind::Hydroxyl => match_hydroxyl(&mut m),
            GroupKind::Amine => match_amine(&mut m),
            GroupKind::Nitro => match_nitro(&mut m),
            GroupKind::Sulfonamide => match_sulfonamide(&mut m),
            GroupKind::Thiol => match_thiol(&mut m),
            GroupKind::Ether => match_ether(&mut m),
            GroupKind::Halogen => match_halogen(&mut m),
            GroupKind::AromaticRing => match_ring(&mut m, true),
            GroupKind::AliphaticRing => match_ring(&mut m, false),
            GroupKind::Backbone => unreachable!("backbone is residual"),
        }
    }

    // residual atoms become backbone segments, one per connected component
    // of the graph restricted to unclaimed atoms
    let mut seen = vec![false; n];
    for start in 0..n {
        if m.claimed[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            for (j, _) in graph.neighbors(i) {
                if !m.claimed[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        m.claim(GroupKind::Backbone, comp);
    }

    m.segments
        .sort_by_key(|s| s.atoms.first().copied().unwrap_or(usize::MAX));
    FunctionalGroupSegmentation {
        segments: m.segments,
    }
}

/// Carboxyl, ester, and amide share the acyl core C(=O)X and differ in X.
fn match_acyl(m: &mut Matcher, kind: GroupKind) {
    for c in 0..m.graph.atom_count() {
        if m.claimed[c] || !m.is(c, Element::C) || m.atom(c).aromatic {
            continue;
        }
        let doubles = m.double_o_neighbors(c);
        let Some(&o_double) = doubles.first() else {
            continue;
        };
        let partner = m
            .graph
            .neighbors(c)
            .filter(|&(j, order)| j != o_double && order == BondOrder::Single)
            .find(|&(j, _)| match kind {
                GroupKind::Carboxyl => m.terminal_single_o(j),
                GroupKind::Ester => {
                    m.is(j, Element::O)
                        && !m.atom(j).aromatic
                        && m.graph
                            .neighbors(j)
                            .any(|(k, _)| k != c && m.is(k, Element::C))
                }
                GroupKind::Amide => m.is(j, Element::N) && !m.atom(j).aromatic,
                _ => unreachable!(),
            });
        if let Some((x, _)) = partner {
            let atoms = vec![c, o_double, x];
            if m.free(&atoms) {
                m.claim(kind, atoms);
            }
        }
    }
}

fn match_carbonyl(m: &mut Matcher) {
    for c in 0..m.graph.atom_count() {
        if m.claimed[c] || !m.is(c, Element::C) || m.atom(c).aromatic {
            continue;
        }
        if let Some(&o) = m.double_o_neighbors(c).first() {
            let atoms = vec![c, o];
            if m.free(&atoms) {
                m.claim(GroupKind::Carbonyl, atoms);
            }
        }
    }
}

fn match_hydroxyl(m: &mut Matcher) {
    for o in 0..m.graph.atom_count() {
        if m.claimed[o] || !m.terminal_single_o(o) {
            continue;
        }
        let to_carbon = m
            .graph
            .neighbors(o)
            .all(|(j, _)| m.is(j, Element::C));
        if to_carbon && m.graph.degree(o) == 1 {
            m.claim(GroupKind::Hydroxyl, vec![o]);
        }
    }
}

fn match_amine(m: &mut Matcher) {
    for n in 0..m.graph.atom_count() {
        if m.claimed[n] || !m.is(n, Element::N) || m.atom(n).aromatic {
            continue;
        }
        let plain = m.graph.neighbors(n).all(|(j, order)| {
            order == BondOrder::Single && !m.is(j, Element::S)
        });
        if plain {
            m.claim(GroupKind::Amine, vec![n]);
        }
    }
}

fn match_nitro(m: &mut Matcher) {
    for n in 0..m.graph.atom_count() {
        if m.claimed[n] || !m.is(n, Element::N) || m.atom(n).aromatic {
            continue;
        }
        let oxygens: Vec<usize> = m
            .graph
            .neighbors(n)
            .filter(|&(j, _)| m.is(j, Element::O) && m.graph.degree(j) == 1)
            .map(|(j, _)| j)
            .collect();
        let has_double = m
            .graph
            .neighbors(n)
            .any(|(j, order)| m.is(j, Element::O) && order == BondOrder::Double);
        if has_double && oxygens.len() >= 2 {
            let mut atoms = vec![n];
            atoms.extend(&oxygens);
            if m.free(&atoms) {
                m.claim(GroupKind::Nitro, atoms);
            }
        }
    }
}

fn match_sulfonamide(m: &mut Matcher) {
    for s in 0..m.graph.atom_count() {
        if m.claimed[s] || !m.is(s, Element::S) {
            continue;
        }
        let doubles = m.double_o_neighbors(s);
        let nitrogen = m
            .graph
            .neighbors(s)
            .find(|&(j, order)| order == BondOrder::Single && m.is(j, Element::N));
        if doubles.len() >= 2 {
            if let Some((n, _)) = nitrogen {
                let atoms = vec![s, doubles[0], doubles[1], n];
                if m.free(&atoms) {
                    m.claim(GroupKind::Sulfonamide, atoms);
                }
            }
        }
    }
}

fn match_thiol(m: &mut Matcher) {
    for s in 0..m.graph.atom_count() {
        if m.claimed[s] || !m.is(s, Element::S) || m.atom(s).aromatic {
            continue;
        }
        let terminal = m.graph.degree(s) == 1
            && m.graph
                .neighbors(s)
                .all(|(j, order)| order == BondOrder::Single && m.is(j, Element::C));
        if terminal {
            m.claim(GroupKind::Thiol, vec![s]);
        }
    }
}

fn match_ether(m: &mut Matcher) {
    for o in 0..m.graph.atom_count() {
        if m.claimed[o] || !m.is(o, Element::O) || m.atom(o).aromatic {
            continue;
        }
        let neighbors: Vec<(usize, BondOrder)> = m.graph.neighbors(o).collect();
        let bridging = neighbors.len() == 2
            && neighbors
                .iter()
                .all(|&(j, order)| order == BondOrder::Single && m.is(j, Element::C));
        if bridging {
            m.claim(GroupKind::Ether, vec![o]);
        }
    }
}

fn match_halogen(m: &mut Matcher) {
    for x in 0..m.graph.atom_count() {
        if m.claimed[x] {
            continue;
        }
        if matches!(
            m.atom(x).element,
            Element::F | Element::Cl | Element::Br | Element::I
        ) {
            m.claim(GroupKind::Halogen, vec![x]);
        }
    }
}

/// Aromatic rings: connected components of aromatic atoms. Aliphatic
/// rings: connected components of non-aromatic cycle atoms.
fn match_ring(m: &mut Matcher, aromatic: bool) {
    let in_cycle = m.graph.ring_atoms();
    let eligible: Vec<bool> = (0..m.graph.atom_count())
        .map(|i| {
            !m.claimed[i]
                && m.atom(i).aromatic == aromatic
                && (aromatic || in_cycle[i])
        })
        .collect();
    let mut seen = vec![false; m.graph.atom_count()];
    for start in 0..m.graph.atom_count() {
        if !eligible[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            for (j, _) in m.graph.neighbors(i) {
                if eligible[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        m.claim(
            if aromatic {
                GroupKind::AromaticRing
            } else {
                GroupKind::AliphaticRing
            },
            comp,
        );
    }
}

/// Lift an atom segmentation onto the token sequence: atom tokens take
/// their atom's segment, everything else (bonds, parens, ring digits)
/// follows the nearest preceding atom token.
pub fn group_token_spans(
    seq: &SmilesTokenSeq,
    graph: &MolGraph,
    groups: &FunctionalGroupSegmentation,
) -> ExpertiseSegmentation {
    let n_tokens = seq.tokens.len();
    let mut token_segment = vec![usize::MAX; n_tokens];
    for (atom, &token) in graph.atom_token.iter().enumerate() {
        let seg = groups
            .segments
            .iter()
            .position(|s| s.atoms.contains(&atom))
            .expect("segmentation covers every atom");
        token_segment[token] = seg;
    }

    let mut current = token_segment
        .iter()
        .copied()
        .find(|&s| s != usize::MAX)
        .unwrap_or(0);
    for slot in token_segment.iter_mut() {
        if *slot == usize::MAX {
            *slot = current;
        } else {
            current = *slot;
        }
    }

    let segments = groups
        .segments
        .iter()
        .enumerate()
        .map(|(idx, g)| Segment {
            label: g.label.as_str().to_string(),
            token_indices: (0..n_tokens).filter(|&t| token_segment[t] == idx).collect(),
        })
        .filter(|s| !s.token_indices.is_empty())
        .collect();

    ExpertiseSegmentation::new(segments, n_tokens).expect("token partition by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse::parse_smiles;
    use crate::chem::tokenize::tokenize_smiles;

    fn groups_of(s: &str) -> (MolGraph, FunctionalGroupSegmentation) {
        let g = parse_smiles(&tokenize_smiles(s).unwrap()).unwrap();
        let seg = detect_functional_groups(&g);
        (g, seg)
    }

    fn labels(seg: &FunctionalGroupSegmentation) -> Vec<(GroupKind, Vec<usize>)> {
        seg.segments.iter().map(|s| (s.label, s.atoms.clone())).collect()
    }

    #[test]
    fn ethanol_is_hydroxyl_plus_backbone() {
        let (_, seg) = groups_of("CCO");
        assert_eq!(
            labels(&seg),
            vec![
                (GroupKind::Backbone, vec![0, 1]),
                (GroupKind::Hydroxyl, vec![2]),
            ]
        );
    }

    #[test]
    fn acetic_acid_is_carboxyl_plus_methyl_backbone() {
        let (_, seg) = groups_of("CC(=O)O");
        assert_eq!(
            labels(&seg),
            vec![
                (GroupKind::Backbone, vec![0]),
                (GroupKind::Carboxyl, vec![1, 2, 3]),
            ]
        );
    }

    /// Exhaustive oracle over the 4-atom acetic-acid graph: enumerate every
    /// atom subset and test the carboxyl definition directly; exactly one
    /// subset qualifies and it is the one the matcher claims.
    #[test]
    fn acetic_acid_matches_exhaustive_carboxyl_oracle() {
        let (g, seg) = groups_of("CC(=O)O");
        let n = g.atom_count();
        let mut hits = Vec::new();
        for mask in 0u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if subset.len() != 3 {
                continue;
            }
            // carboxyl: a carbon double-bonded to one subset oxygen and
            // single-bonded to another subset oxygen with no second heavy
            // neighbor
            let ok = subset.iter().any(|&c| {
                g.atoms[c].element == Element::C
                    && subset.iter().any(|&o1| {
                        g.atoms[o1].element == Element::O
                            && g.bond_between(c, o1) == Some(BondOrder::Double)
                            && subset.iter().any(|&o2| {
                                o2 != o1
                                    && g.atoms[o2].element == Element::O
                                    && g.bond_between(c, o2) == Some(BondOrder::Single)
                                    && g.degree(o2) == 1
                            })
                    })
            });
            if ok {
                hits.push(subset);
            }
        }
        assert_eq!(hits, vec![vec![1, 2, 3]]);
        let carboxyl = seg.segments.iter().find(|s| s.label == GroupKind::Carboxyl).unwrap();
        assert_eq!(carboxyl.atoms, hits[0]);
    }

    #[test]
    fn benzene_is_one_aromatic_ring() {
        let (_, seg) = groups_of("c1ccccc1");
        assert_eq!(labels(&seg), vec![(GroupKind::AromaticRing, vec![0, 1, 2, 3, 4, 5])]);
    }

    #[test]
    fn ester_and_amide_take_priority_over_carbonyl() {
        let (_, seg) = groups_of("CC(=O)OC");
        assert!(seg.segments.iter().any(|s| s.label == GroupKind::Ester));
        assert!(!seg.segments.iter().any(|s| s.label == GroupKind::Carbonyl));

        let (_, seg) = groups_of("CC(=O)N");
        assert!(seg.segments.iter().any(|s| s.label == GroupKind::Amide));
    }

    #[test]
    fn nitro_survives_amine_priority() {
        let (_, seg) = groups_of("CC[N+](=O)[O-]");
        let nitro = seg.segments.iter().find(|s| s.label == GroupKind::Nitro).unwrap();
        assert_eq!(nitro.atoms, vec![2, 3, 4]);
        assert!(!seg.segments.iter().any(|s| s.label == GroupKind::Amine));
    }

    #[test]
    fn sulfonamide_keeps_its_nitrogen() {
        let (_, seg) = groups_of("CS(=O)(=O)N");
        let sulf = seg
            .segments
            .iter()
            .find(|s| s.label == GroupKind::Sulfonamide)
            .unwrap();
        assert_eq!(sulf.atoms, vec![1, 2, 3, 4]);
    }

    #[test]
    fn thiol_ether_halogen_and_aliphatic_ring() {
        let (_, seg) = groups_of("CCS");
        assert!(seg.segments.iter().any(|s| s.label == GroupKind::Thiol));
        let (_, seg) = groups_of("COC");
        assert!(seg.segments.iter().any(|s| s.label == GroupKind::Ether));
        let (_, seg) = groups_of("CCCl");
        assert!(seg.segments.iter().any(|s| s.label == GroupKind::Halogen));
        let (_, seg) = groups_of("C1CCCCC1");
        assert_eq!(
            labels(&seg),
            vec![(GroupKind::AliphaticRing, vec![0, 1, 2, 3, 4, 5])]
        );
    }

    #[test]
    fn segmentation_partitions_the_atom_set() {
        for s in [
            "CCO",
            "CC(=O)O",
            "c1ccccc1O",
            "CC(=O)Nc1ccccc1",
            "CS(=O)(=O)NCC(=O)O",
            "C1CC1CO",
            "CC.OC",
        ] {
            let (g, seg) = groups_of(s);
            let mut seen = vec![0; g.atom_count()];
            for segment in &seg.segments {
                for &a in &segment.atoms {
                    seen[a] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "partition violated for {s}: {seen:?}");
            assert!(seg.len() >= 1);
        }
    }

    #[test]
    fn token_spans_follow_preceding_atoms() {
        // "CCO": hydroxyl token is the O, backbone gets the carbons
        let seq = tokenize_smiles("CCO").unwrap();
        let g = parse_smiles(&seq).unwrap();
        let seg = detect_functional_groups(&g);
        let spans = group_token_spans(&seq, &g, &seg);
        let hydroxyl = spans.segments.iter().find(|s| s.label == "hydroxyl").unwrap();
        assert_eq!(hydroxyl.token_indices, vec![2]);
        let backbone = spans.segments.iter().find(|s| s.label == "backbone").unwrap();
        assert_eq!(backbone.token_indices, vec![0, 1]);
    }

    #[test]
    fn parens_and_bonds_join_the_preceding_atom_segment() {
        // all six tokens of C(=O)O belong to the carboxyl segment
        let seq = tokenize_smiles("C(=O)O").unwrap();
        let g = parse_smiles(&seq).unwrap();
        let seg = detect_functional_groups(&g);
        assert_eq!(seg.segments.len(), 1);
        assert_eq!(seg.segments[0].label, GroupKind::Carboxyl);
        let spans = group_token_spans(&seq, &g, &seg);
        assert_eq!(spans.segments.len(), 1);
        assert_eq!(spans.segments[0].token_indices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn every_token_lands_in_exactly_one_span() {
        for s in ["CC(=O)Nc1ccccc1", "C(/C=C/Cl)(O)C1CC1", "CC(C)(C)O"] {
            let seq = tokenize_smiles(s).unwrap();
            let g = parse_smiles(&seq).unwrap();
            let seg = detect_functional_groups(&g);
            let spans = group_token_spans(&seq, &g, &seg);
            let mut seen = vec![0; seq.len()];
            for segment in &spans.segments {
                for &t in &segment.token_indices {
                    seen[t] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "token partition violated for {s}");
        }
    }
}
