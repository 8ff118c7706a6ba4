//! Synthetic molecule-caption corpus.
//!
//! Molecules assemble from a scaffold (carbon chain, benzene, or an
//! aliphatic ring) plus one or two functional-group decorations; captions
//! are templated sentences covering the Type / Structure / Function /
//! Origin / Property expertise labels and always describe the true
//! molecule. A configurable fraction of samples carries planted wrong
//! knowledge: the trained caption (or SMILES) is swapped for a decoy
//! built from an alternate template set, with the corrected text kept in
//! `target_caption` / `target_smiles`. These planted samples are what the
//! benchmark builder later finds below its reliability threshold.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Sample;
use crate::chem;
use crate::metrics;
use crate::numerics::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub size: usize,
    pub seed: u64,
    /// Fraction of samples with a planted wrong caption.
    pub caption_corrupt_fraction: f64,
    /// Fraction of samples with a planted wrong SMILES.
    pub molecule_corrupt_fraction: f64,
}

impl CorpusConfig {
    pub fn new(size: usize, seed: u64) -> Self {
        CorpusConfig {
            size,
            seed,
            caption_corrupt_fraction: 0.08,
            molecule_corrupt_fraction: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scaffold {
    Chain(usize),
    Benzene,
    Cyclohexane,
    Cyclopentane,
}

impl Scaffold {
    fn name(self) -> &'static str {
        match self {
            Scaffold::Chain(2) => "ethane",
            Scaffold::Chain(3) => "propane",
            Scaffold::Chain(4) => "butane",
            Scaffold::Chain(5) => "pentane",
            Scaffold::Chain(_) => "hexane",
            Scaffold::Benzene => "benzene",
            Scaffold::Cyclohexane => "cyclohexane",
            Scaffold::Cyclopentane => "cyclopentane",
        }
    }

    fn is_ring(self) -> bool {
        !matches!(self, Scaffold::Chain(_))
    }

    fn smiles(self) -> String {
        match self {
            Scaffold::Chain(n) => "C".repeat(n),
            Scaffold::Benzene => "c1ccccc1".to_string(),
            Scaffold::Cyclohexane => "C1CCCCC1".to_string(),
            Scaffold::Cyclopentane => "C1CCCC1".to_string(),
        }
    }
}

struct Decoration {
    group: &'static str,
    fragment: &'static str,
}

const DECORATIONS: [Decoration; 11] = [
    Decoration { group: "hydroxyl", fragment: "O" },
    Decoration { group: "carboxyl", fragment: "C(=O)O" },
    Decoration { group: "ester", fragment: "C(=O)OC" },
    Decoration { group: "amide", fragment: "C(=O)N" },
    Decoration { group: "carbonyl", fragment: "C=O" },
    Decoration { group: "amine", fragment: "N" },
    Decoration { group: "nitro", fragment: "[N+](=O)[O-]" },
    Decoration { group: "sulfonamide", fragment: "S(=O)(=O)N" },
    Decoration { group: "thiol", fragment: "S" },
    Decoration { group: "ether", fragment: "OC" },
    Decoration { group: "halogen", fragment: "Cl" },
];

const ROLES: [&str; 8] = [
    "antibacterial",
    "antioxidant",
    "antiviral",
    "antifungal",
    "antiseptic",
    "herbicidal",
    "insecticidal",
    "flavoring",
];

const PARENTS: [&str; 12] = [
    "velutinol",
    "mannitol",
    "crassipin",
    "taxifolin",
    "limonene",
    "geraniol",
    "farnesol",
    "linalool",
    "citronellol",
    "carvacrol",
    "thymol",
    "eugenol",
];

struct MolDraft {
    smiles: String,
    caption: String,
    decoy_caption: String,
}

fn article(word: &str) -> &'static str {
    match word.as_bytes().first() {
        Some(b'a' | b'e' | b'i' | b'o' | b'u') => "an",
        _ => "a",
    }
}

/// One molecule plus a matching caption and the decoy caption used for
/// planted-wrong-knowledge samples.
fn draft(rng: &mut Rng) -> Option<MolDraft> {
    let scaffold = *rng.pick(&[
        Scaffold::Chain(2),
        Scaffold::Chain(3),
        Scaffold::Chain(4),
        Scaffold::Chain(5),
        Scaffold::Chain(6),
        Scaffold::Benzene,
        Scaffold::Cyclohexane,
        Scaffold::Cyclopentane,
    ]);
    let n_dec = 1 + usize::from(rng.chance(0.45));
    let mut picks: Vec<usize> = Vec::new();
    while picks.len() < n_dec {
        let i = rng.below(DECORATIONS.len());
        if !picks.contains(&i) {
            picks.push(i);
        }
    }

    // assemble: first decoration appends to the scaffold tail, a second
    // one branches mid-chain (or appends again on rings)
    let mut smiles = scaffold.smiles();
    let mut placements: Vec<(usize, String)> = Vec::new(); // (decoration idx, phrase)
    for (which, &di) in picks.iter().enumerate() {
        let frag = DECORATIONS[di].fragment;
        match (scaffold, which) {
            (Scaffold::Chain(n), 1) => {
                let k = 2 + rng.below(n.saturating_sub(2).max(1));
                // branch after the k-th carbon of the original chain
                let byte = k.min(n - 1);
                smiles.insert_str(byte, &format!("({frag})"));
                placements.push((di, format!("at position {k}")));
            }
            (_, _) if scaffold.is_ring() => {
                smiles.push_str(frag);
                placements.push((di, "on the ring".to_string()));
            }
            _ => {
                smiles.push_str(frag);
                placements.push((di, "at the chain end".to_string()));
            }
        }
    }

    // the planted branch insertion can collide with a prior fragment;
    // accept only clean parses with every decorated group detected
    let (_, graph) = chem::parse(&smiles).ok()?;
    let groups = chem::detect_functional_groups(&graph);
    let found: BTreeSet<&str> = groups.segments.iter().map(|s| s.label.as_str()).collect();
    for &di in &picks {
        if !found.contains(DECORATIONS[di].group) {
            return None;
        }
    }

    let role = *rng.pick(&ROLES);
    let parent = *rng.pick(&PARENTS);
    let mut sentences = vec![format!(
        "It is {} {} derivative.",
        article(scaffold.name()),
        scaffold.name()
    )];
    for (di, phrase) in &placements {
        let group = DECORATIONS[*di].group;
        sentences.push(format!("A {group} group is attached {phrase}."));
    }
    // one rotating extra description keeps captions short but spreads the
    // Function/Origin/Property labels across the corpus
    match rng.below(4) {
        0 => sentences.push(format!("It has a role as {} {} agent.", article(role), role)),
        1 => sentences.push(format!("It derives from {parent}.")),
        2 => {
            let level = *rng.pick(&["low", "moderate", "high"]);
            sentences.push(format!("Its solubility in water is {level}."));
        }
        _ => {
            let digit = rng.below(10);
            let species = *rng.pick(&["an anion", "a neutral form", "a cation"]);
            sentences.push(format!("The major species at pH 7.{digit} is {species}."));
        }
    }
    let caption = sentences.join(" ");

    // decoy caption from alternate sentence frames: same facts structure,
    // deliberately disjoint phrasing so a memorized decoy scores far from
    // the true caption
    let alt_role = *rng.pick(&ROLES);
    let alt_parent = *rng.pick(&PARENTS);
    let mut alt = vec![format!(
        "This species is classified as {} {} compound.",
        article(scaffold.name()),
        scaffold.name()
    )];
    for (di, phrase) in &placements {
        let group = DECORATIONS[*di].group;
        let site = phrase.replace("at the chain end", "the terminal site");
        let site = site.replace("on the ring", "the ring rim");
        let site = site.replace("at position", "slot");
        alt.push(format!("The {group} moiety occupies {site}."));
    }
    if rng.chance(0.5) {
        alt.push(format!("It serves as {} {} additive.", article(alt_role), alt_role));
    } else {
        alt.push(format!("This material was isolated from {alt_parent} extracts."));
    }
    let decoy_caption = alt.join(" ");

    Some(MolDraft {
        smiles,
        caption,
        decoy_caption,
    })
}

/// Deterministic corpus generation. Sample ids are `m000`, `m001`, ...;
/// molecules and captions are unique within the corpus; planted-wrong
/// samples sit at seeded positions with their corrections in the target
/// fields.
pub fn generate_corpus(config: &CorpusConfig) -> Vec<Sample> {
    let mut rng = Rng::new(config.seed);
    let mut seen_smiles = BTreeSet::new();
    let mut seen_captions = BTreeSet::new();
    let fresh = |rng: &mut Rng, seen_s: &mut BTreeSet<String>, seen_c: &mut BTreeSet<String>| loop {
        if let Some(d) = draft(rng) {
            if d.smiles.len() < 56
                && metrics::tokenize_text(&d.caption).len() < 56
                && seen_s.insert(d.smiles.clone())
                && seen_c.insert(d.caption.clone())
            {
                return d;
            }
        }
    };

    let drafts: Vec<MolDraft> = (0..config.size)
        .map(|_| fresh(&mut rng, &mut seen_smiles, &mut seen_captions))
        .collect();
    // decoy pool, disjoint from the corpus molecules
    let decoys: Vec<MolDraft> = (0..config.size / 2 + 8)
        .map(|_| fresh(&mut rng, &mut seen_smiles, &mut seen_captions))
        .collect();

    let cap_corrupt = (config.size as f64 * config.caption_corrupt_fraction).round() as usize;
    let mol_corrupt = (config.size as f64 * config.molecule_corrupt_fraction).round() as usize;
    let mut order: Vec<usize> = (0..config.size).collect();
    rng.shuffle(&mut order);
    let cap_ids: BTreeSet<usize> = order.iter().copied().take(cap_corrupt).collect();
    let mol_ids: BTreeSet<usize> = order
        .iter()
        .copied()
        .skip(cap_corrupt)
        .take(mol_corrupt)
        .collect();

    let mut decoy_iter = decoys.iter();
    let mut pick_decoy = |avoid_smiles: &str, avoid_caption: &str, want_far_molecule: bool| loop {
        let d = decoy_iter.next().expect("decoy pool exhausted");
        let cap_sim = metrics::sim_text(&d.decoy_caption, avoid_caption).bleu2;
        let mol_far = if want_far_molecule {
            let fa = chem::fingerprint(&chem::parse(&d.smiles).unwrap().1);
            let fb = chem::fingerprint(&chem::parse(avoid_smiles).unwrap().1);
            chem::tanimoto(&fa, &fb).unwrap() < 0.18
        } else {
            true
        };
        if cap_sim < 0.18 && mol_far {
            return d;
        }
    };

    drafts
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let id = format!("m{i:03}");
            if cap_ids.contains(&i) {
                let decoy = pick_decoy(&d.smiles, &d.caption, false);
                Sample {
                    id,
                    smiles: d.smiles.clone(),
                    caption: decoy.decoy_caption.clone(),
                    target_caption: Some(d.caption.clone()),
                    target_smiles: None,
                    parent_id: None,
                    variant_seed: None,
                }
            } else if mol_ids.contains(&i) {
                let decoy = pick_decoy(&d.smiles, &d.caption, true);
                Sample {
                    id,
                    smiles: decoy.smiles.clone(),
                    caption: d.caption.clone(),
                    target_caption: None,
                    target_smiles: Some(d.smiles.clone()),
                    parent_id: None,
                    variant_seed: None,
                }
            } else {
                Sample {
                    id,
                    smiles: d.smiles.clone(),
                    caption: d.caption.clone(),
                    target_caption: None,
                    target_smiles: None,
                    parent_id: None,
                    variant_seed: None,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textseg;

    #[test]
    fn same_seed_reproduces_byte_identical_corpora() {
        let cfg = CorpusConfig::new(40, 11);
        let a = generate_corpus(&cfg);
        let b = generate_corpus(&cfg);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn corpus_samples_parse_and_segment() {
        let corpus = generate_corpus(&CorpusConfig::new(60, 3));
        assert_eq!(corpus.len(), 60);
        for s in &corpus {
            chem::parse(&s.smiles).unwrap_or_else(|e| panic!("{}: {e}", s.id));
            textseg::segment_caption(&s.caption).unwrap();
            if let Some(t) = &s.target_caption {
                textseg::segment_caption(t).unwrap();
            }
            if let Some(t) = &s.target_smiles {
                chem::parse(t).unwrap();
            }
        }
    }

    #[test]
    fn planted_samples_sit_far_from_their_truth() {
        let corpus = generate_corpus(&CorpusConfig::new(100, 5));
        let cap_planted: Vec<_> = corpus.iter().filter(|s| s.target_caption.is_some()).collect();
        let mol_planted: Vec<_> = corpus.iter().filter(|s| s.target_smiles.is_some()).collect();
        assert_eq!(cap_planted.len(), 8);
        assert_eq!(mol_planted.len(), 8);
        for s in cap_planted {
            let truth = s.target_caption.as_ref().unwrap();
            let sim = metrics::sim_text(&s.caption, truth).bleu2;
            assert!(sim < 0.2, "{}: planted caption too close ({sim})", s.id);
        }
        for s in mol_planted {
            let truth = s.target_smiles.as_ref().unwrap();
            let report = metrics::sim_mol(&s.smiles, truth).unwrap();
            assert!(
                report.fp_tanimoto < 0.2,
                "{}: planted molecule too close ({})",
                s.id,
                report.fp_tanimoto
            );
        }
    }

    #[test]
    fn corpus_spans_many_functional_groups() {
        let corpus = generate_corpus(&CorpusConfig::new(120, 9));
        let mut labels = BTreeSet::new();
        for s in &corpus {
            let (_, graph) = chem::parse(&s.smiles).unwrap();
            for seg in chem::detect_functional_groups(&graph).segments {
                labels.insert(seg.label.as_str().to_string());
            }
        }
        assert!(labels.len() >= 6, "only {labels:?}");
    }

    #[test]
    fn captions_cover_all_expertise_labels() {
        let corpus = generate_corpus(&CorpusConfig::new(120, 13));
        let mut labels = BTreeSet::new();
        for s in &corpus {
            for d in textseg::segment_caption(&s.caption).unwrap().descriptions {
                labels.insert(d.label);
            }
        }
        for want in [
            textseg::ExpertiseLabel::Type,
            textseg::ExpertiseLabel::Structure,
            textseg::ExpertiseLabel::Function,
            textseg::ExpertiseLabel::Origin,
            textseg::ExpertiseLabel::Property,
        ] {
            assert!(labels.contains(&want), "missing {want}: {labels:?}");
        }
    }
}
