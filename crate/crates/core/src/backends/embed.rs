//! Sentence embedding providers.

use serde::{Deserialize, Serialize};

use super::http::{agent, join_url, post_json};
use super::BackendError;
use crate::metrics::tokenize;

pub trait EmbeddingProvider: Send + Sync {
    /// One vector per text, all of the same dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError>;
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
    }
}

/// Feature-hashed bag of words over the ROUGE tokenization, with a fixed
/// 64-bit FNV-1a hash and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashingEmbedder {
    pub dimension: usize,
    pub seed: u64,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            dimension: 512,
            seed: 0x5eed,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl HashingEmbedder {
    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f32; self.dimension];
        for token in tokenize(text) {
            let h = fnv1a(self.seed, token.as_bytes());
            let slot = (h % self.dimension as u64) as usize;
            // top bit picks the sign to spread collisions
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[slot] += sign;
        }
        v
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        if self.dimension == 0 {
            return Err(BackendError::Config(
                "embedding dimension must be >= 1".into(),
            ));
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f32>>,
}

/// `POST {endpoint}/v1/embed`.
pub struct HttpEmbedder {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            agent: agent(),
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let url = join_url(&self.endpoint, "/v1/embed");
        let reply: EmbedReply = post_json(&self.agent, &url, &EmbedBody { texts })?;
        if reply.vectors.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                reply.vectors.len()
            )));
        }
        Ok(reply.vectors)
    }
}
