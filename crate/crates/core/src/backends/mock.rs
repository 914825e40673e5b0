//! Deterministic in-process summarizers for tests and desk-scale runs.

use super::{BackendDescriptor, BackendError, SummarizeRequest, SummarizeResponse, Summarizer};
use crate::metrics::Lexicon;
use crate::transcript::split_sentences;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockKind {
    /// First `sentences` sentences of the input body.
    Lead {
        sentences: usize,
        max_words: Option<usize>,
    },
    /// The input body itself.
    Echo { max_words: Option<usize> },
    /// Sentences of the input body containing at least one lexicon hit.
    Keyword { max_words: Option<usize> },
}

impl MockKind {
    /// Parses `lead<k>`, `lead`, `echo` or `keyword`, each optionally
    /// followed by `:w<n>` to cap the output at `n` words.
    pub fn parse(spec: &str) -> Result<Self, BackendError> {
        let bad = || BackendError::Config(format!("unknown mock spec {spec:?}"));
        let (name, cap) = match spec.split_once(':') {
            Some((name, cap)) => {
                let n = cap
                    .strip_prefix('w')
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(bad)?;
                (name, Some(n))
            }
            None => (spec, None),
        };
        match name {
            "echo" => Ok(MockKind::Echo { max_words: cap }),
            "keyword" => Ok(MockKind::Keyword { max_words: cap }),
            _ => {
                let k = name.strip_prefix("lead").ok_or_else(bad)?;
                let sentences = if k.is_empty() {
                    1
                } else {
                    k.parse::<usize>().map_err(|_| bad())?
                };
                if sentences == 0 {
                    return Err(bad());
                }
                Ok(MockKind::Lead {
                    sentences,
                    max_words: cap,
                })
            }
        }
    }

    fn max_words(&self) -> Option<usize> {
        match self {
            MockKind::Lead { max_words, .. }
            | MockKind::Echo { max_words }
            | MockKind::Keyword { max_words } => *max_words,
        }
    }
}

pub struct MockSummarizer {
    descriptor: BackendDescriptor,
    kind: MockKind,
    lexicon: Option<Lexicon>,
}

impl MockSummarizer {
    pub fn new(
        descriptor: BackendDescriptor,
        kind: MockKind,
        lexicon: Option<Lexicon>,
    ) -> Result<Self, BackendError> {
        if matches!(kind, MockKind::Keyword { .. }) && lexicon.is_none() {
            return Err(BackendError::Config(
                "keyword mock requires a lexicon".into(),
            ));
        }
        Ok(Self {
            descriptor,
            kind,
            lexicon,
        })
    }

    pub fn from_spec(spec: &str) -> Result<Self, BackendError> {
        Self::new(BackendDescriptor::mock(spec), MockKind::parse(spec)?, None)
    }

    /// The summary for one input; a pure function of the request.
    pub fn summarize(&self, input: &str, prefix: Option<&str>) -> String {
        let body = strip_markup(input);
        let mut summary = match &self.kind {
            MockKind::Lead { sentences, .. } => {
                let s = split_sentences(&body);
                s.0.into_iter()
                    .take(*sentences)
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            MockKind::Echo { .. } => body,
            MockKind::Keyword { .. } => {
                let lexicon = self.lexicon.as_ref().expect("checked in new");
                split_sentences(&body)
                    .0
                    .into_iter()
                    .filter(|s| !lexicon.extract(s).is_empty())
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        };
        if let Some(cap) = self.kind.max_words() {
            summary = summary
                .split_whitespace()
                .take(cap)
                .collect::<Vec<_>>()
                .join(" ");
        }
        match prefix {
            Some(p) if !p.is_empty() => format!("{p} {summary}").trim_end().to_string(),
            _ => summary,
        }
    }
}

/// Drops role tags and ellipsis markers.
fn strip_markup(input: &str) -> String {
    input
        .split_whitespace()
        .filter(|w| !matches!(*w, "[doctor]" | "[patient]" | "[other]" | "..."))
        .collect::<Vec<_>>()
        .join(" ")
}

impl Summarizer for MockSummarizer {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn call(&self, requests: &[SummarizeRequest]) -> Result<Vec<SummarizeResponse>, BackendError> {
        Ok(requests
            .iter()
            .map(|r| SummarizeResponse {
                id: r.id.clone(),
                summary: self.summarize(&r.input, r.prefix.as_deref()),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(
            MockKind::parse("lead1").unwrap(),
            MockKind::Lead {
                sentences: 1,
                max_words: None
            }
        );
        assert_eq!(
            MockKind::parse("lead3:w60").unwrap(),
            MockKind::Lead {
                sentences: 3,
                max_words: Some(60)
            }
        );
        assert_eq!(
            MockKind::parse("echo:w5").unwrap(),
            MockKind::Echo { max_words: Some(5) }
        );
        assert!(MockKind::parse("lead0").is_err());
        assert!(MockKind::parse("lead1:60").is_err());
        assert!(MockKind::parse("gpt").is_err());
    }

    #[test]
    fn lead_one() {
        let m = MockSummarizer::from_spec("lead1").unwrap();
        assert_eq!(m.summarize("A. B. C.", None), "A.");
        assert_eq!(
            m.summarize("[doctor] Any fever? [patient] No. ...", None),
            "Any fever?"
        );
    }

    #[test]
    fn word_cap_and_prefix() {
        let m = MockSummarizer::from_spec("echo:w3").unwrap();
        assert_eq!(
            m.summarize("[doctor] one two three four", None),
            "one two three"
        );
        assert_eq!(m.summarize("x", Some("Patient:")), "Patient: x");
    }

    #[test]
    fn keyword_requires_lexicon() {
        assert!(MockSummarizer::from_spec("keyword").is_err());
        let lex = Lexicon::from_json(
            r#"{"concepts":[{"id":"C1","canonical":"cough","surfaces":["cough"]}]}"#,
        )
        .unwrap();
        let m = MockSummarizer::new(
            BackendDescriptor::mock("keyword"),
            MockKind::Keyword { max_words: None },
            Some(lex),
        )
        .unwrap();
        assert_eq!(
            m.summarize(
                "[patient] I slept well. Then a cough started. It is sunny.",
                None
            ),
            "Then a cough started."
        );
    }
}
