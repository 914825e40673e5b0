//! The JSON config file and its resolution against command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use medsum_core::aligner::AlignConfig;
use medsum_core::backends::{
    open_summarizer, BackendDescriptor, EmbeddingProvider, HashingEmbedder, HttpEmbedder,
    Summarizer, WordRatioTokenizer,
};
use medsum_core::chunker::ChunkConfig;
use medsum_core::dataset::{Corpus, StatsConfig};
use medsum_core::metrics::{ConceptExtractor, EvalOptions, HttpConceptExtractor, Lexicon};
use medsum_core::pipeline::Gender;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmbedderConfig {
    Hashing {
        #[serde(default = "default_dimension")]
        dimension: usize,
        #[serde(default = "default_embed_seed")]
        seed: u64,
    },
    Http {
        endpoint: String,
    },
}

fn default_dimension() -> usize {
    HashingEmbedder::default().dimension
}

fn default_embed_seed() -> u64 {
    HashingEmbedder::default().seed
}

impl EmbedderConfig {
    /// `hashing` or an http(s) URL.
    pub fn parse_short(s: &str) -> Result<Self> {
        if s == "hashing" {
            Ok(EmbedderConfig::Hashing {
                dimension: default_dimension(),
                seed: default_embed_seed(),
            })
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(EmbedderConfig::Http {
                endpoint: s.to_string(),
            })
        } else {
            bail!("cannot parse embedder {s:?}; use `hashing` or an http(s) URL")
        }
    }

    pub fn open(&self) -> Box<dyn EmbeddingProvider> {
        match self {
            EmbedderConfig::Hashing { dimension, seed } => Box::new(HashingEmbedder {
                dimension: *dimension,
                seed: *seed,
            }),
            EmbedderConfig::Http { endpoint } => Box::new(HttpEmbedder::new(endpoint.clone())),
        }
    }
}

fn default_max_new_tokens() -> usize {
    256
}

/// Everything a command may need. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub conversations: Option<PathBuf>,
    pub references: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Restrict the lexicon to these categories for target selection and
    /// concept metrics; empty keeps everything.
    pub concept_categories: Vec<String>,
    /// External `/v1/extract` service, used instead of the lexicon.
    pub extractor_endpoint: Option<String>,
    pub embedder: Option<EmbedderConfig>,
    pub stage1_backend: Option<BackendDescriptor>,
    pub stage2_backend: Option<BackendDescriptor>,
    pub chunk: ChunkConfig,
    pub align: AlignConfig,
    pub tokenizer: WordRatioTokenizer,
    pub gender_prefix: Option<Gender>,
    pub stage1_max_new_tokens: usize,
    pub stage2_max_new_tokens: usize,
    pub eval: EvalOptions,
    pub stats: StatsConfig,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            conversations: None,
            references: None,
            splits: None,
            lexicon: None,
            concept_categories: Vec::new(),
            extractor_endpoint: None,
            embedder: None,
            stage1_backend: None,
            stage2_backend: None,
            chunk: ChunkConfig::default(),
            align: AlignConfig::default(),
            tokenizer: WordRatioTokenizer::default(),
            gender_prefix: None,
            stage1_max_new_tokens: default_max_new_tokens(),
            stage2_max_new_tokens: default_max_new_tokens(),
            eval: EvalOptions::default(),
            stats: StatsConfig::default(),
            output_dir: None,
            workers: None,
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: CliConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.conversations,
            &mut cfg.references,
            &mut cfg.splits,
            &mut cfg.lexicon,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn require<'a>(&self, value: &'a Option<PathBuf>, what: &str, flag: &str) -> Result<&'a Path> {
        value.as_deref().with_context(|| {
            format!("no {what} configured (set `{flag}` in the config or pass --{flag})")
        })
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        let convs = self.require(&self.conversations, "conversation file", "conversations")?;
        let refs = self.require(&self.references, "reference file", "references")?;
        for p in [Some(convs), Some(refs), self.splits.as_deref()]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                bail!("{} does not exist", p.display());
            }
        }
        Corpus::load(convs, refs, self.splits.as_deref()).context("loading corpus")
    }

    pub fn load_lexicon(&self) -> Result<Option<Lexicon>> {
        let Some(path) = &self.lexicon else {
            return Ok(None);
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading lexicon {}", path.display()))?;
        let lexicon = Lexicon::from_json(&text)
            .with_context(|| format!("parsing lexicon {}", path.display()))?;
        Ok(Some(if self.concept_categories.is_empty() {
            lexicon
        } else {
            lexicon.restrict_to_categories(&self.concept_categories)
        }))
    }

    /// The configured extractor: the external service, else the lexicon.
    pub fn extractor(&self, lexicon: Option<&Lexicon>) -> Option<Box<dyn ConceptExtractor>> {
        if let Some(endpoint) = &self.extractor_endpoint {
            return Some(Box::new(HttpConceptExtractor::new(endpoint.clone())));
        }
        lexicon.map(|l| Box::new(l.clone()) as Box<dyn ConceptExtractor>)
    }

    pub fn stage1(&self) -> Result<&BackendDescriptor> {
        self.stage1_backend
            .as_ref()
            .context("no stage-1 backend configured (set `stage1_backend` or pass --backend)")
    }

    pub fn output_dir(&self, flag: Option<&Path>, default_leaf: &str) -> Result<PathBuf> {
        if let Some(p) = flag {
            return Ok(p.to_path_buf());
        }
        match &self.output_dir {
            Some(base) => Ok(base.join(default_leaf)),
            None => bail!("no output directory (set `output_dir` or pass --out)"),
        }
    }
}

pub fn open_backend(
    desc: &BackendDescriptor,
    lexicon: Option<&Lexicon>,
) -> Result<Box<dyn Summarizer>> {
    open_summarizer(desc, lexicon).with_context(|| format!("opening backend {:?}", desc.endpoint))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<CliConfig>(r#"{"conversatons": "x"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"conversations": "data/c.jsonl", "lexicon": "/abs/lex.json"}"#,
        )
        .unwrap();
        let cfg = CliConfig::load(&path).unwrap();
        assert_eq!(cfg.conversations.unwrap(), dir.path().join("data/c.jsonl"));
        assert_eq!(cfg.lexicon.unwrap(), PathBuf::from("/abs/lex.json"));
    }

    #[test]
    fn embedder_forms() {
        let e: EmbedderConfig = serde_json::from_str(r#"{"kind": "hashing"}"#).unwrap();
        assert_eq!(e, EmbedderConfig::parse_short("hashing").unwrap());
        assert!(EmbedderConfig::parse_short("sbert").is_err());
    }
}
