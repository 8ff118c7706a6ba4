//! BLEU-n and ROUGE-1.

use std::collections::HashMap;

/// BLEU score plus the flag raised for an empty candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuScore {
    pub score: f64,
    pub empty_candidate: bool,
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-n: geometric mean of modified i-gram precisions for
/// i in 1..=n, times the brevity penalty exp(1 - |ref|/|cand|) when the
/// candidate is shorter than the reference.
///
/// With `smoothing`, any precision with a zero numerator is replaced by
/// (num+1)/(den+1); without it a single zero precision zeroes the score.
/// An empty candidate scores 0 with the `empty_candidate` flag set.
pub fn bleu_n(cand: &[String], reference: &[String], n: usize, smoothing: bool) -> BleuScore {
    assert!(n >= 1, "bleu_n needs n >= 1");
    assert!(!reference.is_empty(), "bleu_n needs a non-empty reference");
    if cand.is_empty() {
        return BleuScore {
            score: 0.0,
            empty_candidate: true,
        };
    }

    let mut log_sum = 0.0;
    for i in 1..=n {
        let cand_counts = ngram_counts(cand, i);
        let ref_counts = ngram_counts(reference, i);
        let numerator: usize = cand_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let denominator = cand.len().saturating_sub(i - 1);
        let precision = if numerator > 0 {
            numerator as f64 / denominator as f64
        } else if smoothing {
            1.0 / (denominator + 1) as f64
        } else {
            return BleuScore {
                score: 0.0,
                empty_candidate: false,
            };
        };
        log_sum += precision.ln();
    }

    let brevity = if cand.len() < reference.len() {
        (1.0 - reference.len() as f64 / cand.len() as f64).exp()
    } else {
        1.0
    };
    BleuScore {
        score: brevity * (log_sum / n as f64).exp(),
        empty_candidate: false,
    }
}

/// ROUGE-1 recall: clipped unigram overlap divided by reference length.
pub fn rouge1(cand: &[String], reference: &[String]) -> f64 {
    assert!(!reference.is_empty(), "rouge1 needs a non-empty reference");
    if cand.is_empty() {
        return 0.0;
    }
    let cand_counts = ngram_counts(cand, 1);
    let ref_counts = ngram_counts(reference, 1);
    let overlap: usize = ref_counts
        .iter()
        .map(|(gram, &r)| r.min(cand_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    overlap as f64 / reference.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identical_sequences_score_one() {
        for n in 1..=4 {
            let t = toks("a b c d e");
            assert_eq!(bleu_n(&t, &t, n, false).score, 1.0);
            assert_eq!(bleu_n(&t, &t, n, true).score, 1.0);
        }
    }

    /// Hand-count oracle: cand=[A,B], ref=[A,C], n=1: one of two unigrams
    /// matches, brevity penalty 1, so BLEU-1 = 0.5.
    #[test]
    fn half_overlap_unigram_bleu_is_half() {
        let got = bleu_n(&toks("A B"), &toks("A C"), 1, false).score;
        assert!((got - 0.5).abs() < 1e-9);
    }

    #[test]
    fn candidate_shorter_than_n_scores_zero_without_smoothing() {
        let got = bleu_n(&toks("A B"), &toks("A B C D"), 4, false);
        assert_eq!(got.score, 0.0);
        assert!(!got.empty_candidate);
    }

    #[test]
    fn empty_candidate_flags_and_scores_zero() {
        let got = bleu_n(&[], &toks("A"), 2, true);
        assert_eq!(got.score, 0.0);
        assert!(got.empty_candidate);
    }

    /// Hand oracle with smoothing: cand=[A,B], ref=[A,C], n=2.
    /// p1 = 1/2; p2 numerator 0 -> (0+1)/(1+1) = 1/2; BP = 1.
    /// score = sqrt(1/4) = 1/2.
    #[test]
    fn smoothing_replaces_zero_counts_with_add_one() {
        let got = bleu_n(&toks("A B"), &toks("A C"), 2, true).score;
        assert!((got - 0.5).abs() < 1e-9);
    }

    /// Brevity oracle: cand=[A], ref=[A,B]: p1=1, BP=exp(1-2)=e^-1.
    #[test]
    fn brevity_penalty_applies_when_candidate_is_short() {
        let got = bleu_n(&toks("A"), &toks("A B"), 1, false).score;
        assert!((got - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn appending_unmatched_tokens_never_raises_precision_numerators() {
        // monotonicity of the modified-precision numerator
        let reference = toks("A B C");
        let base = toks("A B");
        let extended = toks("A B X");
        for n in 1..=2 {
            let num = |cand: &[String]| -> usize {
                let cc = ngram_counts(cand, n);
                let rc = ngram_counts(&reference, n);
                cc.iter()
                    .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                    .sum()
            };
            assert_eq!(num(&base), num(&extended));
        }
    }

    #[test]
    fn rouge1_oracles() {
        assert_eq!(rouge1(&toks("A B C"), &toks("A B C")), 1.0);
        assert_eq!(rouge1(&[], &toks("A B")), 0.0);
        // clipped: cand has A twice but ref only once
        assert!((rouge1(&toks("A A"), &toks("A B")) - 0.5).abs() < 1e-12);
    }
}
