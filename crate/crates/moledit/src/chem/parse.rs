//! SMILES token stream to molecular graph.

use std::collections::HashMap;

use super::tokenize::{SmilesTokenSeq, TokenKind};
use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::P => "P",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    fn from_symbol(s: &str) -> Option<Element> {
        Some(match s {
            "H" => Element::H,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "P" => Element::P,
            "S" => Element::S,
            "F" => Element::F,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn symbol(self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i32,
    pub explicit_h: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

/// Parsed molecular structure plus the atom-to-token alignment into the
/// producing token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// atom index -> token index in the source `SmilesTokenSeq`
    pub atom_token: Vec<usize>,
}

impl MolGraph {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.bonds.iter().filter_map(move |b| {
            if b.a == i {
                Some((b.b, b.order))
            } else if b.b == i {
                Some((b.a, b.order))
            } else {
                None
            }
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.bonds
            .iter()
            .find(|bond| (bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
            .map(|bond| bond.order)
    }

    /// Connected components as sorted atom-index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(i) = stack.pop() {
                comp.push(i);
                for (j, _) in self.neighbors(i) {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Atoms lying on at least one cycle (the 2-core of the graph).
    pub fn ring_atoms(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut degree: Vec<usize> = (0..n).map(|i| self.degree(i)).collect();
        let mut alive = vec![true; n];
        let mut queue: Vec<usize> = (0..n).filter(|&i| degree[i] <= 1).collect();
        while let Some(i) = queue.pop() {
            if !alive[i] {
                continue;
            }
            alive[i] = false;
            for (j, _) in self.neighbors(i) {
                if alive[j] {
                    degree[j] -= 1;
                    if degree[j] <= 1 {
                        queue.push(j);
                    }
                }
            }
        }
        alive
    }
}

#[derive(Debug)]
struct PendingRing {
    atom: usize,
    order: Option<BondOrder>,
    position: usize,
}

/// Resolve ring closures and branch structure into a `MolGraph`.
pub fn parse_smiles(seq: &SmilesTokenSeq) -> Result<MolGraph, ChemError> {
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut atom_token: Vec<usize> = Vec::new();

    let mut prev: Option<usize> = None;
    let mut stack: Vec<usize> = Vec::new();
    let mut pending: Option<(BondOrder, usize)> = None;
    let mut rings: HashMap<u16, PendingRing> = HashMap::new();

    let push_bond =
        |bonds: &mut Vec<Bond>, a: usize, b: usize, order: BondOrder, pos: usize| {
            if a == b
                || bonds
                    .iter()
                    .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
            {
                return Err(ChemError::DanglingBond { position: pos });
            }
            bonds.push(Bond { a, b, order });
            Ok(())
        };

    for (idx, token) in seq.tokens.iter().enumerate() {
        match token.kind {
            TokenKind::Atom | TokenKind::AromaticAtom | TokenKind::BracketAtom => {
                let atom = match token.kind {
                    TokenKind::Atom => Atom {
                        element: Element::from_symbol(&token.lexeme).ok_or_else(|| {
                            ChemError::InvalidElement {
                                text: token.lexeme.clone(),
                            }
                        })?,
                        aromatic: false,
                        charge: 0,
                        explicit_h: 0,
                    },
                    TokenKind::AromaticAtom => Atom {
                        element: Element::from_symbol(&token.lexeme.to_ascii_uppercase())
                            .ok_or_else(|| ChemError::InvalidElement {
                                text: token.lexeme.clone(),
                            })?,
                        aromatic: true,
                        charge: 0,
                        explicit_h: 0,
                    },
                    TokenKind::BracketAtom => parse_bracket(&token.lexeme)?,
                    _ => unreachable!(),
                };
                let id = atoms.len();
                atoms.push(atom);
                atom_token.push(idx);
                if let Some(p) = prev {
                    let order = match pending.take() {
                        Some((o, _)) => o,
                        None => implicit_order(&atoms, p, id),
                    };
                    push_bond(&mut bonds, p, id, order, token.start)?;
                } else if let Some((_, pos)) = pending.take() {
                    return Err(ChemError::DanglingBond { position: pos });
                }
                prev = Some(id);
            }
            TokenKind::Bond | TokenKind::Stereo => {
                if pending.is_some() {
                    return Err(ChemError::DanglingBond {
                        position: token.start,
                    });
                }
                let order = match token.lexeme.as_str() {
                    "-" | "/" | "\\" => BondOrder::Single,
                    "=" => BondOrder::Double,
                    "#" => BondOrder::Triple,
                    ":" => BondOrder::Aromatic,
                    other => panic!("lexer produced bond {other}"),
                };
                pending = Some((order, token.start));
            }
            TokenKind::RingClosure => {
                let current = prev.ok_or(ChemError::DanglingBond {
                    position: token.start,
                })?;
                let num: u16 = if let Some(stripped) = token.lexeme.strip_prefix('%') {
                    stripped.parse().unwrap()
                } else {
                    token.lexeme.parse().unwrap()
                };
                let here_order = pending.take().map(|(o, _)| o);
                match rings.remove(&num) {
                    Some(open) => {
                        let order = match (open.order, here_order) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(ChemError::DanglingBond {
                                    position: token.start,
                                })
                            }
                            (Some(a), _) => a,
                            (None, Some(b)) => b,
                            (None, None) => implicit_order(&atoms, open.atom, current),
                        };
                        push_bond(&mut bonds, open.atom, current, order, token.start)?;
                    }
                    None => {
                        rings.insert(
                            num,
                            PendingRing {
                                atom: current,
                                order: here_order,
                                position: token.start,
                            },
                        );
                    }
                }
            }
            TokenKind::OpenParen => {
                let current = prev.ok_or(ChemError::UnbalancedParenthesis {
                    position: token.start,
                })?;
                if pending.is_some() {
                    return Err(ChemError::DanglingBond {
                        position: token.start,
                    });
                }
                stack.push(current);
            }
            TokenKind::CloseParen => {
                if pending.is_some() {
                    return Err(ChemError::DanglingBond {
                        position: token.start,
                    });
                }
                prev = Some(stack.pop().ok_or(ChemError::UnbalancedParenthesis {
                    position: token.start,
                })?);
            }
            TokenKind::Dot => {
                if pending.is_some() || !stack.is_empty() {
                    return Err(ChemError::DanglingBond {
                        position: token.start,
                    });
                }
                prev = None;
            }
        }
    }

    if let Some((_, pos)) = pending {
        return Err(ChemError::DanglingBond { position: pos });
    }
    if !stack.is_empty() {
        return Err(ChemError::UnbalancedParenthesis {
            position: seq.source.len(),
        });
    }
    if let Some((&ring, open)) = rings.iter().min_by_key(|(_, r)| r.position) {
        let _ = open;
        return Err(ChemError::UnclosedRingBond { ring });
    }
    if atoms.is_empty() {
        return Err(ChemError::EmptyInput);
    }

    Ok(MolGraph {
        atoms,
        bonds,
        atom_token,
    })
}

fn implicit_order(atoms: &[Atom], a: usize, b: usize) -> BondOrder {
    if atoms[a].aromatic && atoms[b].aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

/// Parse `[...]` content: element with optional aromatic form, `@` stereo
/// (skipped), explicit H count, and charge. Isotopes and atom classes are
/// outside the supported subset.
fn parse_bracket(lexeme: &str) -> Result<Atom, ChemError> {
    let inner = &lexeme[1..lexeme.len() - 1];
    let bad = || ChemError::InvalidElement {
        text: lexeme.to_string(),
    };
    let bytes = inner.as_bytes();
    if inner.is_empty() || bytes[0].is_ascii_digit() {
        return Err(bad());
    }

    let (element, aromatic, mut i) = if inner.len() >= 2
        && Element::from_symbol(&inner[..2]).is_some()
        && bytes[1].is_ascii_lowercase()
    {
        (Element::from_symbol(&inner[..2]).unwrap(), false, 2)
    } else {
        let first = &inner[..1];
        if let Some(e) = Element::from_symbol(first) {
            (e, false, 1)
        } else if let Some(e) = Element::from_symbol(&first.to_ascii_uppercase()) {
            (e, true, 1)
        } else {
            return Err(bad());
        }
    };

    let mut explicit_h: u8 = 0;
    let mut charge: i32 = 0;
    while i < bytes.len() {
        match bytes[i] as char {
            '@' => i += 1,
            'H' => {
                i += 1;
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                explicit_h = if i > start {
                    inner[start..i].parse().map_err(|_| bad())?
                } else {
                    1
                };
            }
            c @ ('+' | '-') => {
                let sign = if c == '+' { 1 } else { -1 };
                let mut count = 1;
                i += 1;
                while i < bytes.len() && bytes[i] as char == c {
                    count += 1;
                    i += 1;
                }
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                charge = if i > start {
                    if count > 1 {
                        return Err(bad());
                    }
                    sign * inner[start..i].parse::<i32>().map_err(|_| bad())?
                } else {
                    sign * count
                };
            }
            _ => return Err(bad()),
        }
    }

    Ok(Atom {
        element,
        aromatic,
        charge,
        explicit_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::tokenize::tokenize_smiles;

    fn parse(s: &str) -> Result<MolGraph, ChemError> {
        parse_smiles(&tokenize_smiles(s)?)
    }

    #[test]
    fn ethanol_has_two_single_bonds() {
        let g = parse("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 2);
        assert!(g.bonds.iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(g.atom_token, vec![0, 1, 2]);
    }

    #[test]
    fn cyclopropane_ring_closes() {
        let g = parse("C1CC1").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 3);
        assert!(g.bond_between(0, 2).is_some());
    }

    #[test]
    fn unclosed_ring_is_an_error() {
        assert_eq!(parse("C1CC").unwrap_err(), ChemError::UnclosedRingBond { ring: 1 });
    }

    #[test]
    fn branches_attach_to_the_right_atom() {
        let g = parse("CC(=O)O").unwrap();
        assert_eq!(g.atom_count(), 4);
        assert_eq!(g.bond_between(1, 2), Some(BondOrder::Double));
        assert_eq!(g.bond_between(1, 3), Some(BondOrder::Single));
        assert_eq!(g.bond_between(0, 1), Some(BondOrder::Single));
    }

    #[test]
    fn benzene_is_aromatic() {
        let g = parse("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        assert!(g.atoms.iter().all(|a| a.aromatic));
        assert!(g.bonds.iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn unbalanced_parens_are_errors() {
        assert!(matches!(
            parse("CC)O").unwrap_err(),
            ChemError::UnbalancedParenthesis { .. }
        ));
        assert!(matches!(
            parse("C(CO").unwrap_err(),
            ChemError::UnbalancedParenthesis { .. }
        ));
        assert!(matches!(
            parse("(CC)").unwrap_err(),
            ChemError::UnbalancedParenthesis { .. }
        ));
    }

    #[test]
    fn dangling_bonds_are_errors() {
        assert!(matches!(parse("CC=").unwrap_err(), ChemError::DanglingBond { .. }));
        assert!(matches!(parse("=CC").unwrap_err(), ChemError::DanglingBond { .. }));
        assert!(matches!(parse("C(=)C").unwrap_err(), ChemError::DanglingBond { .. }));
        assert!(matches!(parse("C==C").unwrap_err(), ChemError::DanglingBond { .. }));
    }

    #[test]
    fn bracket_atoms_carry_charge_and_hydrogens() {
        let g = parse("C[NH4+]").unwrap();
        let n = g.atoms[1];
        assert_eq!(n.element, Element::N);
        assert_eq!(n.explicit_h, 4);
        assert_eq!(n.charge, 1);

        let g = parse("[O-]C").unwrap();
        assert_eq!(g.atoms[0].charge, -1);
        let g = parse("[O--]C").unwrap();
        assert_eq!(g.atoms[0].charge, -2);
        let g = parse("[N+2]").unwrap();
        assert_eq!(g.atoms[0].charge, 2);
    }

    #[test]
    fn aromatic_bracket_nitrogen() {
        let g = parse("[nH]").unwrap();
        assert!(g.atoms[0].aromatic);
        assert_eq!(g.atoms[0].element, Element::N);
        assert_eq!(g.atoms[0].explicit_h, 1);
    }

    #[test]
    fn isotopes_and_unknown_elements_are_invalid() {
        assert!(matches!(parse("[13C]").unwrap_err(), ChemError::InvalidElement { .. }));
        assert!(matches!(parse("[Xe]").unwrap_err(), ChemError::InvalidElement { .. }));
    }

    #[test]
    fn stereo_markers_parse_as_single_bonds() {
        let g = parse("C/C=C\\C").unwrap();
        assert_eq!(g.bond_count(), 3);
        assert_eq!(g.bond_between(0, 1), Some(BondOrder::Single));
        assert_eq!(g.bond_between(1, 2), Some(BondOrder::Double));
        assert_eq!(g.bond_between(2, 3), Some(BondOrder::Single));
        let g = parse("C[C@H](O)N").unwrap();
        assert_eq!(g.atom_count(), 4);
    }

    #[test]
    fn dot_separates_components() {
        let g = parse("CC.OC").unwrap();
        assert_eq!(g.atom_count(), 4);
        assert_eq!(g.bond_count(), 2);
        assert_eq!(g.components().len(), 2);
    }

    #[test]
    fn duplicate_bond_is_rejected() {
        assert!(matches!(parse("C1C1").unwrap_err(), ChemError::DanglingBond { .. }));
    }

    #[test]
    fn ring_bond_order_may_come_from_either_side() {
        let g = parse("C=1CCCCC=1").unwrap();
        assert_eq!(g.bond_between(0, 5), Some(BondOrder::Double));
        let g = parse("C=1CCCCC1").unwrap();
        assert_eq!(g.bond_between(0, 5), Some(BondOrder::Double));
        assert!(parse("C=1CCCCC#1").is_err());
    }

    #[test]
    fn ring_atoms_finds_the_two_core() {
        let g = parse("CC1CC1").unwrap();
        let rings = g.ring_atoms();
        assert_eq!(rings, vec![false, true, true, true]);
    }
}
