//! Lexicon-based medical concept extraction and the concept P/R/F1 metric.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rouge::{tokenize, Prf};
use crate::backends::BackendError;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("invalid lexicon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("concept {0:?} has no surface forms")]
    NoSurfaces(String),
    #[error("surface {surface:?} of concept {concept:?} normalizes to nothing")]
    EmptySurface { concept: String, surface: String },
    #[error("surface {surface:?} is listed for both {first:?} and {second:?}")]
    DuplicateSurface {
        surface: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub id: String,
    pub canonical: String,
    pub surfaces: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Deserialize, Serialize)]
struct LexiconFile {
    concepts: Vec<ConceptEntry>,
}

/// A set of concept ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptSet(pub BTreeSet<String>);

impl ConceptSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn intersection_len(&self, other: &ConceptSet) -> usize {
        self.0.intersection(&other.0).count()
    }
}

impl<S: Into<String>> FromIterator<S> for ConceptSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        ConceptSet(iter.into_iter().map(Into::into).collect())
    }
}

/// A surface occurrence in a token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptMatch {
    pub start: usize,
    pub len: usize,
    pub concept_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    concepts: Vec<ConceptEntry>,
    surfaces: HashMap<Vec<String>, usize>,
    max_surface_len: usize,
}

impl Lexicon {
    pub fn new(concepts: Vec<ConceptEntry>) -> Result<Self, LexiconError> {
        let mut surfaces: HashMap<Vec<String>, usize> = HashMap::new();
        let mut max_surface_len = 0;
        for (idx, c) in concepts.iter().enumerate() {
            if c.surfaces.is_empty() {
                return Err(LexiconError::NoSurfaces(c.id.clone()));
            }
            for s in &c.surfaces {
                let key = tokenize(s);
                if key.is_empty() {
                    return Err(LexiconError::EmptySurface {
                        concept: c.id.clone(),
                        surface: s.clone(),
                    });
                }
                if let Some(&prev) = surfaces.get(&key) {
                    return Err(LexiconError::DuplicateSurface {
                        surface: s.clone(),
                        first: concepts[prev].id.clone(),
                        second: c.id.clone(),
                    });
                }
                max_surface_len = max_surface_len.max(key.len());
                surfaces.insert(key, idx);
            }
        }
        Ok(Self {
            concepts,
            surfaces,
            max_surface_len,
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty lexicon is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(json)?;
        Self::new(file.concepts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LexiconFile {
            concepts: self.concepts.clone(),
        })
        .expect("lexicon serializes")
    }

    pub fn concepts(&self) -> &[ConceptEntry] {
        &self.concepts
    }

    /// Keeps only concepts whose category is in `categories`.
    pub fn restrict_to_categories(&self, categories: &[String]) -> Self {
        let kept = self
            .concepts
            .iter()
            .filter(|c| {
                c.category
                    .as_ref()
                    .is_some_and(|cat| categories.contains(cat))
            })
            .cloned()
            .collect();
        Self::new(kept).expect("subset of a valid lexicon is valid")
    }

    /// Non-overlapping surface matches: longer matches win over any match
    /// they overlap, ties go to the leftmost. Returned in text order.
    pub fn find_matches(&self, text: &str) -> Vec<ConceptMatch> {
        let tokens = tokenize(text);
        let mut candidates = Vec::new();
        for start in 0..tokens.len() {
            let longest = self.max_surface_len.min(tokens.len() - start);
            for len in 1..=longest {
                if let Some(&idx) = self.surfaces.get(&tokens[start..start + len]) {
                    candidates.push((start, len, idx));
                }
            }
        }
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut taken = vec![false; tokens.len()];
        let mut chosen = Vec::new();
        for (start, len, idx) in candidates {
            if taken[start..start + len].iter().any(|&t| t) {
                continue;
            }
            taken[start..start + len].iter_mut().for_each(|t| *t = true);
            chosen.push(ConceptMatch {
                start,
                len,
                concept_id: self.concepts[idx].id.clone(),
            });
        }
        chosen.sort_by_key(|m| m.start);
        chosen
    }

    pub fn extract(&self, text: &str) -> ConceptSet {
        self.find_matches(text)
            .into_iter()
            .map(|m| m.concept_id)
            .collect()
    }
}

pub fn extract_concepts(text: &str, lexicon: &Lexicon) -> ConceptSet {
    lexicon.extract(text)
}

/// Concepts in at least three sets, or in every set when fewer than three
/// are given.
pub fn majority_vote_filter(reference_sets: &[ConceptSet]) -> ConceptSet {
    let required = reference_sets.len().min(3);
    if required == 0 {
        return ConceptSet::default();
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for set in reference_sets {
        for id in &set.0 {
            *counts.entry(id.as_str()).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n >= required)
        .map(|(id, _)| id.to_string())
        .collect()
}

/// Set-overlap P/R/F1. Two empty sets agree perfectly (1/1/1); otherwise an
/// empty side scores 0 on the measure it is the denominator of.
pub fn concept_prf(generated: &ConceptSet, reference: &ConceptSet) -> Prf {
    if generated.is_empty() && reference.is_empty() {
        return Prf {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    Prf::from_counts(
        generated.intersection_len(reference),
        generated.len(),
        reference.len(),
    )
}

/// Anything that maps summaries to concept sets.
pub trait ConceptExtractor: Send + Sync {
    fn extract_batch(&self, texts: &[String]) -> Result<Vec<ConceptSet>, BackendError>;
}

impl ConceptExtractor for Lexicon {
    fn extract_batch(&self, texts: &[String]) -> Result<Vec<ConceptSet>, BackendError> {
        Ok(texts.iter().map(|t| self.extract(t)).collect())
    }
}

#[derive(Serialize)]
struct ExtractBody<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct ExtractReply {
    concept_sets: Vec<Vec<String>>,
}

/// External extractor at `POST {endpoint}/v1/extract`.
pub struct HttpConceptExtractor {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpConceptExtractor {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            agent: crate::backends::http_agent(),
        }
    }
}

impl ConceptExtractor for HttpConceptExtractor {
    fn extract_batch(&self, texts: &[String]) -> Result<Vec<ConceptSet>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let url = format!("{}/v1/extract", self.endpoint.trim_end_matches('/'));
        let reply: ExtractReply =
            crate::backends::post_json(&self.agent, &url, &ExtractBody { texts })?;
        if reply.concept_sets.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "asked for {} concept sets, got {}",
                texts.len(),
                reply.concept_sets.len()
            )));
        }
        Ok(reply
            .concept_sets
            .into_iter()
            .map(|ids| ids.into_iter().collect())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon() -> Lexicon {
        Lexicon::from_json(
            r#"{"concepts":[
                {"id":"C-SOB","canonical":"dyspnea","surfaces":["shortness of breath","SOB"],"category":"symptom"},
                {"id":"C-CHEST-PAIN","canonical":"chest pain","surfaces":["chest pain"],"category":"symptom"},
                {"id":"C-PAIN","canonical":"pain","surfaces":["pain"],"category":"symptom"},
                {"id":"C-DM","canonical":"diabetes","surfaces":["diabetes"],"category":"disorder"}
            ]}"#,
        )
        .unwrap()
    }

    fn set(ids: &[&str]) -> ConceptSet {
        ids.iter().copied().collect()
    }

    #[test]
    fn single_surface_hit() {
        assert_eq!(
            lexicon().extract("Reports Shortness of breath."),
            set(&["C-SOB"])
        );
    }

    #[test]
    fn longest_match_wins() {
        assert_eq!(lexicon().extract("chest pain"), set(&["C-CHEST-PAIN"]));
        assert_eq!(
            lexicon().extract("chest pain and back pain"),
            set(&["C-CHEST-PAIN", "C-PAIN"])
        );
    }

    #[test]
    fn empty_text() {
        assert!(lexicon().extract("").is_empty());
    }

    #[test]
    fn category_restriction() {
        let lex = lexicon().restrict_to_categories(&["disorder".to_string()]);
        assert_eq!(lex.extract("diabetes and chest pain"), set(&["C-DM"]));
    }

    #[test]
    fn duplicate_surfaces_rejected() {
        let err = Lexicon::from_json(
            r#"{"concepts":[{"id":"A","canonical":"a","surfaces":["Cough"]},{"id":"B","canonical":"b","surfaces":["cough!"]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateSurface { .. }));
        assert!(matches!(
            Lexicon::from_json(r#"{"concepts":[{"id":"A","canonical":"a","surfaces":[]}]}"#),
            Err(LexiconError::NoSurfaces(_))
        ));
    }

    #[test]
    fn majority_vote_rules() {
        let mut sets: Vec<ConceptSet> = (0..15).map(|_| set(&[])).collect();
        for s in sets.iter_mut().take(3) {
            s.0.insert("x".into());
        }
        assert!(majority_vote_filter(&sets).contains("x"));

        let two = vec![set(&["a", "b"]), set(&["a"])];
        assert_eq!(majority_vote_filter(&two), set(&["a"]));

        let five = vec![set(&["a"]), set(&["a"]), set(&[]), set(&[]), set(&[])];
        assert!(majority_vote_filter(&five).is_empty());
    }

    #[test]
    fn prf_cases() {
        let p = concept_prf(&set(&["a", "b", "c"]), &set(&["b", "c", "d"]));
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(concept_prf(&set(&["a"]), &set(&["a"])).f1, 1.0);
        assert_eq!(concept_prf(&set(&[]), &set(&[])).f1, 1.0);
        assert_eq!(concept_prf(&set(&[]), &set(&["a"])).recall, 0.0);
        assert_eq!(concept_prf(&set(&["a"]), &set(&[])).precision, 0.0);
    }
}
