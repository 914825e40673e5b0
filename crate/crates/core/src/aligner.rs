//! Sentence-to-snippet alignment by embedding similarity.
//!
//! Every reference sentence is compared against all fixed-width turn windows
//! of its conversation. Windows at or above the similarity threshold are
//! merged when they overlap or touch, and the longest merged span becomes
//! the sentence's source snippet.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{cosine_similarity, BackendError, EmbeddingProvider, Tokenizer};
use crate::records::{Method, SummaryRecord, TrainingExample};
use crate::transcript::{split_sentences, window_turns, Conversation};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("conversation {conv_id}: embedding windows {windows:?} failed: {source}")]
    Embedding {
        conv_id: String,
        windows: Range<usize>,
        #[source]
        source: BackendError,
    },
    #[error("conversation {conv_id}: {message}")]
    BadEmbedding { conv_id: String, message: String },
    #[error("invalid align config: {0}")]
    Config(String),
    #[error("conversation {0}: no references given")]
    NoReferences(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignConfig {
    pub window_turns: usize,
    pub train_stride: usize,
    pub infer_stride: usize,
    pub similarity_threshold: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            window_turns: 8,
            train_stride: 1,
            infer_stride: 4,
            similarity_threshold: 0.7,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.window_turns == 0 || self.train_stride == 0 || self.infer_stride == 0 {
            return Err(AlignError::Config("window and strides must be >= 1".into()));
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(AlignError::Config(format!(
                "similarity_threshold must be in (0, 1], got {}",
                self.similarity_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub conv_id: String,
    pub turns: Range<usize>,
    pub rendered: String,
}

impl Snippet {
    pub fn new(conv: &Conversation, turns: Range<usize>) -> Self {
        Self {
            conv_id: conv.id().to_string(),
            rendered: conv.render_range(turns.clone()),
            turns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub sentence: String,
    pub matched: Option<Snippet>,
    pub candidate_windows: Vec<Range<usize>>,
}

/// Merges ranges that overlap or share a boundary. Output is sorted.
pub fn coalesce(windows: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut sorted: Vec<Range<usize>> = windows.iter().filter(|w| !w.is_empty()).cloned().collect();
    sorted.sort_by_key(|w| (w.start, w.end));
    let mut merged: Vec<Range<usize>> = Vec::new();
    for w in sorted {
        match merged.last_mut() {
            Some(last) if w.start <= last.end => last.end = last.end.max(w.end),
            _ => merged.push(w),
        }
    }
    merged
}

/// Windows scoring at least `threshold` and the longest coalesced span among
/// them (earliest start on ties).
pub fn select_match(
    windows: &[Range<usize>],
    similarities: &[f64],
    threshold: f64,
) -> (Vec<Range<usize>>, Option<Range<usize>>) {
    assert_eq!(windows.len(), similarities.len());
    let candidates: Vec<Range<usize>> = windows
        .iter()
        .zip(similarities)
        .filter(|&(_, &s)| s >= threshold)
        .map(|(w, _)| w.clone())
        .collect();
    let best =
        coalesce(&candidates)
            .into_iter()
            .fold(None::<Range<usize>>, |best, span| match best {
                Some(b) if b.len() >= span.len() => Some(b),
                _ => Some(span),
            });
    (candidates, best)
}

/// Pre-embedded training windows of one conversation, reusable across all
/// sentences of all its references.
pub struct WindowIndex<'c> {
    conv: &'c Conversation,
    windows: Vec<Range<usize>>,
    vectors: Vec<Vec<f32>>,
}

impl<'c> WindowIndex<'c> {
    pub fn build(
        conv: &'c Conversation,
        embedder: &dyn EmbeddingProvider,
        cfg: &AlignConfig,
    ) -> Result<Self, AlignError> {
        cfg.validate()?;
        let windows = window_turns(conv, cfg.window_turns, cfg.train_stride);
        let texts: Vec<String> = windows
            .iter()
            .map(|w| conv.render_range(w.clone()))
            .collect();
        let vectors = embedder
            .embed(&texts)
            .map_err(|source| AlignError::Embedding {
                conv_id: conv.id().to_string(),
                windows: 0..windows.len(),
                source,
            })?;
        if vectors.len() != windows.len() {
            return Err(AlignError::BadEmbedding {
                conv_id: conv.id().to_string(),
                message: format!(
                    "embedder returned {} vectors for {} windows",
                    vectors.len(),
                    windows.len()
                ),
            });
        }
        if let Some(dim) = vectors.first().map(Vec::len) {
            if let Some(i) = vectors.iter().position(|v| v.len() != dim) {
                return Err(AlignError::BadEmbedding {
                    conv_id: conv.id().to_string(),
                    message: format!(
                        "window {:?} has dimension {} (expected {dim})",
                        windows[i],
                        vectors[i].len()
                    ),
                });
            }
        }
        Ok(Self {
            conv,
            windows,
            vectors,
        })
    }

    pub fn windows(&self) -> &[Range<usize>] {
        &self.windows
    }

    pub fn similarities(&self, sentence_vector: &[f32]) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| cosine_similarity(sentence_vector, v))
            .collect()
    }

    pub fn align(
        &self,
        sentence: &str,
        embedder: &dyn EmbeddingProvider,
        cfg: &AlignConfig,
    ) -> Result<Alignment, AlignError> {
        let vec = embedder
            .embed(&[sentence.to_string()])
            .map_err(|source| AlignError::Embedding {
                conv_id: self.conv.id().to_string(),
                windows: 0..0,
                source,
            })?
            .pop()
            .ok_or_else(|| AlignError::BadEmbedding {
                conv_id: self.conv.id().to_string(),
                message: "no vector returned for sentence".into(),
            })?;
        let sims = self.similarities(&vec);
        let (candidate_windows, best) =
            select_match(&self.windows, &sims, cfg.similarity_threshold);
        Ok(Alignment {
            sentence: sentence.to_string(),
            matched: best.map(|span| Snippet::new(self.conv, span)),
            candidate_windows,
        })
    }
}

pub fn align_sentence(
    conv: &Conversation,
    sentence: &str,
    embedder: &dyn EmbeddingProvider,
    cfg: &AlignConfig,
) -> Result<Alignment, AlignError> {
    WindowIndex::build(conv, embedder, cfg)?.align(sentence, embedder, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetTokenStats {
    pub count: usize,
    pub mean_tokens: f64,
    pub max_tokens: usize,
    pub token_limit: usize,
    pub within_limit_fraction: f64,
}

impl SnippetTokenStats {
    fn from_counts(counts: &[usize], token_limit: usize) -> Self {
        let count = counts.len();
        let (mean_tokens, within_limit_fraction) = if count == 0 {
            (0.0, 1.0)
        } else {
            (
                counts.iter().sum::<usize>() as f64 / count as f64,
                counts.iter().filter(|&&c| c <= token_limit).count() as f64 / count as f64,
            )
        };
        Self {
            count,
            mean_tokens,
            max_tokens: counts.iter().copied().max().unwrap_or(0),
            token_limit,
            within_limit_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub conv_id: String,
    pub sentences_total: usize,
    pub sentences_matched: usize,
    pub snippet_token_stats: SnippetTokenStats,
}

/// One example per matched reference sentence: source is the matched
/// snippet, target the sentence. Unmatched sentences are dropped and counted.
pub fn build_sentbert_training_examples(
    conv: &Conversation,
    references: &[SummaryRecord],
    embedder: &dyn EmbeddingProvider,
    tokenizer: &dyn Tokenizer,
    token_limit: usize,
    cfg: &AlignConfig,
) -> Result<(Vec<TrainingExample>, BuildReport), AlignError> {
    if references.is_empty() {
        return Err(AlignError::NoReferences(conv.id().to_string()));
    }
    let index = WindowIndex::build(conv, embedder, cfg)?;
    let mut examples = Vec::new();
    let mut total = 0;
    let mut token_counts = Vec::new();
    for reference in references {
        for (j, sentence) in split_sentences(&reference.text).iter().enumerate() {
            total += 1;
            let alignment = index.align(sentence, embedder, cfg)?;
            if let Some(snippet) = alignment.matched {
                token_counts.push(tokenizer.count_tokens(&snippet.rendered));
                examples.push(TrainingExample {
                    conv_id: conv.id().to_string(),
                    piece_id: format!("{}/s{j}", reference.origin),
                    source: snippet.rendered,
                    target: sentence.to_string(),
                    method: Method::Sentbert,
                });
            }
        }
    }
    let report = BuildReport {
        conv_id: conv.id().to_string(),
        sentences_total: total,
        sentences_matched: examples.len(),
        snippet_token_stats: SnippetTokenStats::from_counts(&token_counts, token_limit),
    };
    Ok((examples, report))
}

/// Inference windows (`window_turns` wide, `infer_stride` apart), including
/// the trailing short window.
pub fn build_inference_snippets(conv: &Conversation, cfg: &AlignConfig) -> Vec<Snippet> {
    window_turns(conv, cfg.window_turns, cfg.infer_stride)
        .into_iter()
        .map(|w| Snippet::new(conv, w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{HashingEmbedder, WordRatioTokenizer};
    use crate::transcript::{SpeakerRole, Turn};

    fn conv(n: usize) -> Conversation {
        let turns = (0..n)
            .map(|i| {
                let role = if i % 2 == 0 {
                    SpeakerRole::Doctor
                } else {
                    SpeakerRole::Patient
                };
                Turn::new(role, &format!("utterance{i} topic{i} detail{i}"))
            })
            .collect();
        Conversation::new("c", turns).unwrap()
    }

    #[test]
    fn identical_text_matches_its_window() {
        let c = conv(20);
        let sentence = c.render_range(2..10);
        let a = align_sentence(
            &c,
            &sentence,
            &HashingEmbedder::default(),
            &AlignConfig::default(),
        )
        .unwrap();
        let m = a.matched.unwrap();
        assert!(m.turns.start <= 2 && m.turns.end >= 10, "{:?}", m.turns);
        assert!(a.candidate_windows.contains(&(2..10)));
    }

    #[test]
    fn overlapping_candidates_merge() {
        let (_, best) = select_match(&[0..8, 4..12], &[0.9, 0.8], 0.7);
        assert_eq!(best, Some(0..12));
        let (_, best) = select_match(&[0..8, 8..16], &[0.9, 0.8], 0.7);
        assert_eq!(best, Some(0..16));
        let (_, best) = select_match(&[0..8, 9..17], &[0.9, 0.8], 0.7);
        assert_eq!(best, Some(0..8));
    }

    #[test]
    fn below_threshold_is_absent() {
        let (cands, best) = select_match(&[0..8, 1..9], &[0.69, 0.1], 0.7);
        assert!(cands.is_empty() && best.is_none());
        let c = conv(12);
        let a = align_sentence(
            &c,
            "completely unrelated words",
            &HashingEmbedder::default(),
            &AlignConfig::default(),
        )
        .unwrap();
        assert!(a.matched.is_none());
    }

    #[test]
    fn inference_snippets() {
        let spans = |n| {
            build_inference_snippets(&conv(n), &AlignConfig::default())
                .into_iter()
                .map(|s| s.turns)
                .collect::<Vec<_>>()
        };
        assert_eq!(spans(20), vec![0..8, 4..12, 8..16, 12..20]);
        assert_eq!(spans(6), vec![0..6]);
        assert_eq!(spans(9), vec![0..8, 4..9]);
    }

    #[test]
    fn training_examples_and_drop_count() {
        let c = conv(20);
        let matched = c.render_range(0..8);
        let text = format!(
            "{matched}. Zebra quantum giraffe. Then {}",
            c.render_range(10..18)
        );
        let refs = vec![SummaryRecord::new("c", "ann1", &text)];
        let (ex, report) = build_sentbert_training_examples(
            &c,
            &refs,
            &HashingEmbedder::default(),
            &WordRatioTokenizer::default(),
            1024,
            &AlignConfig::default(),
        )
        .unwrap();
        assert_eq!(report.sentences_total, 3);
        assert_eq!(report.sentences_matched, 2);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].piece_id, "ann1/s0");
        assert_eq!(ex[1].piece_id, "ann1/s2");
        assert_eq!(report.snippet_token_stats.count, 2);
        assert_eq!(report.snippet_token_stats.within_limit_fraction, 1.0);
    }

    #[test]
    fn config_checks() {
        let mut cfg = AlignConfig::default();
        cfg.similarity_threshold = 0.0;
        assert!(cfg.validate().is_err());
        cfg.similarity_threshold = 1.0;
        assert!(cfg.validate().is_ok());
        cfg.infer_stride = 0;
        assert!(cfg.validate().is_err());
    }
}
