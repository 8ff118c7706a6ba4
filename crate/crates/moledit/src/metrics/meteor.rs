//! METEOR-lite: exact + stem unigram alignment, harmonic F with alpha=0.9,
//! and a chunk fragmentation penalty. No synonym resource.

const ALPHA: f64 = 0.9;
const GAMMA: f64 = 0.5;
const BETA: f64 = 3.0;
/// Stems match when their longest common prefix reaches this length.
const STEM_PREFIX: usize = 4;

/// Strip one standard suffix (longest applicable of ing/es/ed/s).
fn stem(word: &str) -> &str {
    for suffix in ["ing", "es", "ed", "s"] {
        if let Some(base) = word.strip_suffix(suffix) {
            if !base.is_empty() {
                return base;
            }
        }
    }
    word
}

fn stems_match(a: &str, b: &str) -> bool {
    let (sa, sb) = (stem(a), stem(b));
    let lcp = sa
        .bytes()
        .zip(sb.bytes())
        .take_while(|(x, y)| x == y)
        .count();
    lcp >= STEM_PREFIX
}

/// Score a candidate against a reference.
///
/// Alignment is greedy left-to-right: an exact pass, then a stem pass over
/// the leftovers, each candidate token pairing with the leftmost free
/// reference token. `chunks` counts maximal runs of pairs contiguous on
/// both sides; score = F * (1 - gamma * (chunks/matches)^beta).
pub fn meteor_lite(cand: &[String], reference: &[String]) -> f64 {
    assert!(!reference.is_empty(), "meteor_lite needs a non-empty reference");
    if cand.is_empty() {
        return 0.0;
    }

    let mut cand_to_ref: Vec<Option<usize>> = vec![None; cand.len()];
    let mut ref_taken = vec![false; reference.len()];

    for exact in [true, false] {
        for (i, c) in cand.iter().enumerate() {
            if cand_to_ref[i].is_some() {
                continue;
            }
            for (j, r) in reference.iter().enumerate() {
                if ref_taken[j] {
                    continue;
                }
                let hit = if exact { c == r } else { stems_match(c, r) };
                if hit {
                    cand_to_ref[i] = Some(j);
                    ref_taken[j] = true;
                    break;
                }
            }
        }
    }

    let pairs: Vec<(usize, usize)> = cand_to_ref
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let matches = pairs.len();
    if matches == 0 {
        return 0.0;
    }

    let mut chunks = 1usize;
    for w in pairs.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1;
        }
    }

    let precision = matches as f64 / cand.len() as f64;
    let recall = matches as f64 / reference.len() as f64;
    let f = precision * recall / (ALPHA * precision + (1.0 - ALPHA) * recall);
    let penalty = GAMMA * (chunks as f64 / matches as f64).powf(BETA);
    f * (1.0 - penalty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    /// Hand oracle: identical two-token inputs give matches=2, chunks=1,
    /// F=1, penalty 0.5*(1/2)^3 = 0.0625 -> 0.9375.
    #[test]
    fn identical_two_tokens_score_hand_value() {
        let got = meteor_lite(&toks("hexane backbone"), &toks("hexane backbone"));
        assert!((got - 0.9375).abs() < 1e-12, "{got}");
    }

    /// Hand oracle: single identical token: chunks = matches = 1,
    /// penalty 0.5 -> 0.5.
    #[test]
    fn single_identical_token_scores_half() {
        let got = meteor_lite(&toks("acid"), &toks("acid"));
        assert!((got - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_matches_score_zero() {
        assert_eq!(meteor_lite(&toks("x y"), &toks("a b")), 0.0);
        assert_eq!(meteor_lite(&[], &toks("a")), 0.0);
    }

    #[test]
    fn stem_matching_pairs_inflected_forms() {
        assert!(stems_match("derives", "derived"));
        assert!(stems_match("groups", "group"));
        assert!(stems_match("structural", "structures"));
        assert!(!stems_match("the", "they")); // prefix too short after strip
        assert!(!stems_match("acid", "ring"));
    }

    #[test]
    fn stem_match_contributes_to_score() {
        let with_stem = meteor_lite(&toks("it derives quickly"), &toks("it derived quickly"));
        let without = meteor_lite(&toks("it zzz quickly"), &toks("it derived quickly"));
        assert!(with_stem > without);
    }

    #[test]
    fn fragmentation_lowers_the_score() {
        // same matched multiset, different order -> more chunks
        let contiguous = meteor_lite(&toks("a b c d"), &toks("a b c d"));
        let scrambled = meteor_lite(&toks("d c b a"), &toks("a b c d"));
        assert!(contiguous > scrambled);
    }

    #[test]
    fn bounded_in_unit_interval() {
        let cases = [
            ("a", "a b c d e f"),
            ("a b c d e f", "a"),
            ("x", "y"),
            ("a a a", "a"),
        ];
        for (c, r) in cases {
            let got = meteor_lite(&toks(c), &toks(r));
            assert!((0.0..=1.0).contains(&got), "{c} vs {r}: {got}");
        }
    }
}
