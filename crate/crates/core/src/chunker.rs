//! Header + body chunking of long conversations.
//!
//! Every chunk starts with the same header (a prefix of whole turns, rounded
//! up to a turn end) followed by a body. Bodies partition the turns after
//! the header and are filled greedily with whole turns up to the chunk word
//! limit. An ellipsis marks text missing between header and body and at the
//! end of every chunk except the last.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{Method, TrainingExample};
use crate::transcript::{Conversation, Turn};

#[derive(Debug, Error, PartialEq)]
pub enum ChunkConfigError {
    #[error("chunk_word_limit must be >= 1")]
    ZeroLimit,
    #[error("header_fraction must be in [0, 1), got {0}")]
    HeaderFraction(f64),
    #[error("header budget {budget} words must be below the chunk limit {limit}")]
    HeaderTooLarge { budget: usize, limit: usize },
    #[error("target summary is empty")]
    EmptyTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkConfig {
    pub chunk_word_limit: usize,
    pub header_fraction: f64,
    pub ellipsis_token: String,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_word_limit: 512,
            header_fraction: 0.25,
            ellipsis_token: "...".to_string(),
        }
    }
}

impl ChunkConfig {
    pub fn with_header_fraction(mut self, fraction: f64) -> Self {
        self.header_fraction = fraction;
        self
    }

    /// `round(header_fraction * chunk_word_limit)`.
    pub fn header_budget(&self) -> usize {
        (self.header_fraction * self.chunk_word_limit as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), ChunkConfigError> {
        if self.chunk_word_limit == 0 {
            return Err(ChunkConfigError::ZeroLimit);
        }
        if !(0.0..1.0).contains(&self.header_fraction) {
            return Err(ChunkConfigError::HeaderFraction(self.header_fraction));
        }
        let budget = self.header_budget();
        if budget >= self.chunk_word_limit {
            return Err(ChunkConfigError::HeaderTooLarge {
                budget,
                limit: self.chunk_word_limit,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub conv_id: String,
    pub index: usize,
    pub header_turns: Range<usize>,
    pub body_turns: Range<usize>,
    pub is_terminal: bool,
    pub rendered: String,
}

impl Chunk {
    pub fn piece_id(&self) -> String {
        format!("chunk-{}", self.index)
    }

    /// Body directly follows the header.
    pub fn is_contiguous(&self) -> bool {
        self.body_turns.start == self.header_turns.end
    }
}

/// Smallest prefix of whole turns covering the header word budget, or the
/// whole conversation when it is shorter than the budget.
pub fn build_header(conv: &Conversation, cfg: &ChunkConfig) -> Range<usize> {
    0..header_end(conv.turns(), cfg.header_budget())
}

fn header_end(turns: &[Turn], budget: usize) -> usize {
    if budget == 0 {
        return 0;
    }
    let mut words = 0;
    for (i, turn) in turns.iter().enumerate() {
        words += turn.word_count();
        if words >= budget {
            return i + 1;
        }
    }
    turns.len()
}

pub fn build_chunks(conv: &Conversation, cfg: &ChunkConfig) -> Vec<Chunk> {
    let turns = conv.turns();
    let n = turns.len();
    let header = build_header(conv, cfg);
    let header_words = conv.words_in(header.clone());
    let limit = cfg.chunk_word_limit;

    let mut bodies = Vec::new();
    if conv.word_count() <= limit || header.end == n {
        bodies.push(header.end..n);
    } else {
        let mut start = header.end;
        while start < n {
            let mut end = start;
            let mut words = header_words;
            while end < n && words + turns[end].word_count() <= limit {
                words += turns[end].word_count();
                end += 1;
            }
            if end == start {
                // oversized turn is admitted whole
                end = start + 1;
            }
            bodies.push(start..end);
            start = end;
        }
    }

    let last = bodies.len() - 1;
    bodies
        .into_iter()
        .enumerate()
        .map(|(index, body)| {
            let mut chunk = Chunk {
                conv_id: conv.id().to_string(),
                index,
                header_turns: header.clone(),
                body_turns: body,
                is_terminal: index == last,
                rendered: String::new(),
            };
            chunk.rendered = render_chunk(&chunk, conv, cfg);
            chunk
        })
        .collect()
}

/// Header, optional inner ellipsis, body, optional trailing ellipsis; joined
/// by single spaces.
pub fn render_chunk(chunk: &Chunk, conv: &Conversation, cfg: &ChunkConfig) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(4);
    if !chunk.header_turns.is_empty() {
        parts.push(conv.render_range(chunk.header_turns.clone()));
    }
    if !chunk.is_contiguous() {
        parts.push(cfg.ellipsis_token.clone());
    }
    if !chunk.body_turns.is_empty() {
        parts.push(conv.render_range(chunk.body_turns.clone()));
    }
    if !chunk.is_terminal {
        parts.push(cfg.ellipsis_token.clone());
    }
    parts.join(" ")
}

/// One example per chunk, each targeting the complete summary.
pub fn build_chunk_training_examples(
    conv: &Conversation,
    target_summary: &str,
    cfg: &ChunkConfig,
) -> Result<Vec<TrainingExample>, ChunkConfigError> {
    if target_summary.trim().is_empty() {
        return Err(ChunkConfigError::EmptyTarget);
    }
    Ok(build_chunks(conv, cfg)
        .into_iter()
        .map(|chunk| TrainingExample {
            conv_id: chunk.conv_id.clone(),
            piece_id: chunk.piece_id(),
            source: chunk.rendered,
            target: target_summary.to_string(),
            method: Method::Chunking,
        })
        .collect())
}
