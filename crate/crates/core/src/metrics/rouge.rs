//! ROUGE-1/2/L.
//!
//! Tokenization: lowercase, split on any run of non-alphanumeric characters,
//! no stemming, no stopword removal. ROUGE-L is the LCS over the whole
//! summary taken as one token sequence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const TOKENIZATION: &str =
    "lowercase; split on non-alphanumeric runs; no stemming; no stopword removal";
pub const ROUGE_L_VARIANT: &str = "summary-level LCS over the whole token sequence";

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    /// `overlap / candidate` and `overlap / reference`, 0 for empty denominators.
    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Self::from_pr(ratio(overlap, candidate), ratio(overlap, reference))
    }

    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Prf>) -> Option<Prf> {
        let mut n = 0usize;
        let mut acc = Prf::default();
        for p in items {
            n += 1;
            acc.precision += p.precision;
            acc.recall += p.recall;
            acc.f1 += p.f1;
        }
        (n > 0).then(|| Prf {
            precision: acc.precision / n as f64,
            recall: acc.recall / n as f64,
            f1: acc.f1 / n as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1: Prf,
    pub rouge2: Prf,
    pub rouge_l: Prf,
}

impl RougeScores {
    pub fn r1_f1(&self) -> f64 {
        self.rouge1.f1
    }

    pub fn r2_f1(&self) -> f64 {
        self.rouge2.f1
    }

    pub fn rl_f1(&self) -> f64 {
        self.rouge_l.f1
    }

    pub fn mean<'a>(
        items: impl IntoIterator<Item = &'a RougeScores> + Clone,
    ) -> Option<RougeScores> {
        Some(RougeScores {
            rouge1: Prf::mean(items.clone().into_iter().map(|s| &s.rouge1))?,
            rouge2: Prf::mean(items.clone().into_iter().map(|s| &s.rouge2))?,
            rouge_l: Prf::mean(items.into_iter().map(|s| &s.rouge_l))?,
        })
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn rouge_n_tokens(candidate: &[String], reference: &[String], n: usize) -> Prf {
    assert!(n >= 1, "n must be >= 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    let total = |m: &HashMap<&[String], usize>| m.values().sum::<usize>();
    Prf::from_counts(overlap, total(&cand), total(&refs))
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Prf {
    rouge_n_tokens(&tokenize(candidate), &tokenize(reference), n)
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> Prf {
    Prf::from_counts(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

pub fn rouge_l(candidate: &str, reference: &str) -> Prf {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

/// ROUGE-1, ROUGE-2 and ROUGE-L of `candidate` against one reference.
pub fn rouge(candidate: &str, reference: &str) -> RougeScores {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    RougeScores {
        rouge1: rouge_n_tokens(&c, &r, 1),
        rouge2: rouge_n_tokens(&c, &r, 2),
        rouge_l: rouge_l_tokens(&c, &r),
    }
}
