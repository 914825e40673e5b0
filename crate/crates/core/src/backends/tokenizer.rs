use serde::{Deserialize, Serialize};

/// Token counting. Implementations must be monotone: appending words never
/// lowers the count.
pub trait Tokenizer: Send + Sync {
    fn count_tokens(&self, text: &str) -> usize;
}

/// Approximates a subword tokenizer as `ceil(words * words_to_tokens)`.
///
/// The default ratio 1.6 maps a 512-word chunk to ~820 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WordRatioTokenizer {
    pub words_to_tokens: f64,
}

impl Default for WordRatioTokenizer {
    fn default() -> Self {
        Self {
            words_to_tokens: 1.6,
        }
    }
}

impl WordRatioTokenizer {
    pub fn new(words_to_tokens: f64) -> Self {
        assert!(words_to_tokens > 0.0, "words_to_tokens must be positive");
        Self { words_to_tokens }
    }

    pub fn tokens_for_words(&self, words: usize) -> usize {
        // 1e-9 absorbs representation error, e.g. 10 * 1.6 = 16.000000000000004
        (words as f64 * self.words_to_tokens - 1e-9).ceil().max(0.0) as usize
    }
}

impl Tokenizer for WordRatioTokenizer {
    fn count_tokens(&self, text: &str) -> usize {
        self.tokens_for_words(text.split_whitespace().count())
    }
}

/// Longest whole-word prefix of `text` whose token count is within `limit`.
/// The prefix is a slice of the original text, so inner spacing survives.
pub fn truncate_to_limit<'a>(tokenizer: &dyn Tokenizer, text: &'a str, limit: usize) -> &'a str {
    if tokenizer.count_tokens(text) <= limit {
        return text;
    }
    // byte offsets where each word ends
    let ends: Vec<usize> = text
        .split_whitespace()
        .map(|w| w.as_ptr() as usize - text.as_ptr() as usize + w.len())
        .collect();
    let prefix = |k: usize| if k == 0 { "" } else { &text[..ends[k - 1]] };
    // largest k in [0, ends.len()) with count(prefix(k)) <= limit
    let (mut lo, mut hi) = (0usize, ends.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tokenizer.count_tokens(prefix(mid)) <= limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    prefix(lo).trim_start()
}
