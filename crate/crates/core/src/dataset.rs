//! Corpora, splits, target selection, fine-tuning export and corpus stats.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aligner::{build_sentbert_training_examples, AlignConfig, AlignError, BuildReport};
use crate::backends::{BackendError, EmbeddingProvider, Tokenizer, WordRatioTokenizer};
use crate::chunker::{build_chunk_training_examples, ChunkConfig, ChunkConfigError};
use crate::metrics::ConceptExtractor;
use crate::records::{
    parse_references, write_jsonl, Method, RecordError, SummaryRecord, TrainingExample,
};
use crate::transcript::{parse_transcripts, Conversation, TranscriptError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("duplicate conversation id {0:?}")]
    DuplicateConversation(String),
    #[error("reference for unknown conversation {0:?}")]
    UnknownReferenceConversation(String),
    #[error("conversation {conv_id:?} has two references from annotator {annotator:?}")]
    DuplicateReference { conv_id: String, annotator: String },
    #[error("split lists unknown conversation {0:?}")]
    UnknownSplitConversation(String),
    #[error("conversation {0:?} appears in more than one split")]
    OverlappingSplits(String),
    #[error("conversation {0:?} is not assigned to any split")]
    Unassigned(String),
    #[error("no references to choose a target from")]
    NoReferences,
    #[error("embedding backend required for the sentbert method")]
    EmbedderRequired,
    #[error("split sizes {train}+{dev} exceed corpus size {total}")]
    SplitSizes {
        train: usize,
        dev: usize,
        total: usize,
    },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Chunk(#[from] ChunkConfigError),
    #[error("concept extraction failed: {0}")]
    Extractor(#[from] BackendError),
    #[error("invalid splits file: {0}")]
    SplitsJson(serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown split {s:?} (expected train, dev or test)"))
    }
}

/// Conversation ids per split, each list sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Splits {
    #[serde(default)]
    pub train: Vec<String>,
    #[serde(default)]
    pub dev: Vec<String>,
    #[serde(default)]
    pub test: Vec<String>,
}

impl Splits {
    /// Seeded shuffle of `ids`, then the first `train` go to train, the next
    /// `dev` to dev and the rest to test.
    pub fn from_sizes(
        ids: &[String],
        train: usize,
        dev: usize,
        seed: u64,
    ) -> Result<Self, DatasetError> {
        if train + dev > ids.len() {
            return Err(DatasetError::SplitSizes {
                train,
                dev,
                total: ids.len(),
            });
        }
        let mut sorted = ids.to_vec();
        sorted.sort();
        sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut splits = Splits {
            train: sorted[..train].to_vec(),
            dev: sorted[train..train + dev].to_vec(),
            test: sorted[train + dev..].to_vec(),
        };
        splits.sort();
        Ok(splits)
    }

    /// Everything in one split.
    pub fn all_in(split: Split, ids: impl IntoIterator<Item = String>) -> Self {
        let mut s = Splits::default();
        *s.get_mut(split) = ids.into_iter().collect();
        s.sort();
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let mut s: Splits = serde_json::from_str(text).map_err(DatasetError::SplitsJson)?;
        s.sort();
        Ok(s)
    }

    pub fn get(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    fn get_mut(&mut self, split: Split) -> &mut Vec<String> {
        match split {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Test => &mut self.test,
        }
    }

    fn sort(&mut self) {
        for split in Split::ALL {
            self.get_mut(split).sort();
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    conversations: BTreeMap<String, Conversation>,
    references: BTreeMap<String, Vec<SummaryRecord>>,
    splits: Splits,
    assignment: BTreeMap<String, Split>,
}

impl Corpus {
    /// Validates ids, references and split coverage. References are kept
    /// sorted by annotator id.
    pub fn new(
        conversations: Vec<Conversation>,
        references: Vec<SummaryRecord>,
        splits: Splits,
    ) -> Result<Self, DatasetError> {
        let mut convs = BTreeMap::new();
        for c in conversations {
            let id = c.id().to_string();
            if convs.insert(id.clone(), c).is_some() {
                return Err(DatasetError::DuplicateConversation(id));
            }
        }
        let mut refs: BTreeMap<String, Vec<SummaryRecord>> = BTreeMap::new();
        for r in references {
            if !convs.contains_key(&r.conv_id) {
                return Err(DatasetError::UnknownReferenceConversation(r.conv_id));
            }
            let list = refs.entry(r.conv_id.clone()).or_default();
            if list.iter().any(|x| x.origin == r.origin) {
                return Err(DatasetError::DuplicateReference {
                    conv_id: r.conv_id,
                    annotator: r.origin,
                });
            }
            list.push(r);
        }
        for list in refs.values_mut() {
            list.sort_by(|a, b| a.origin.cmp(&b.origin));
        }

        let mut splits = splits;
        splits.sort();
        let mut assignment = BTreeMap::new();
        for split in Split::ALL {
            for id in splits.get(split) {
                if !convs.contains_key(id) {
                    return Err(DatasetError::UnknownSplitConversation(id.clone()));
                }
                if assignment.insert(id.clone(), split).is_some() {
                    return Err(DatasetError::OverlappingSplits(id.clone()));
                }
            }
        }
        if let Some(id) = convs.keys().find(|id| !assignment.contains_key(*id)) {
            return Err(DatasetError::Unassigned(id.clone()));
        }
        Ok(Self {
            conversations: convs,
            references: refs,
            splits,
            assignment,
        })
    }

    /// Loads transcripts and references JSONL; without a splits file every
    /// conversation is assigned to test.
    pub fn load(
        conversations: &Path,
        references: &Path,
        splits: Option<&Path>,
    ) -> Result<Self, DatasetError> {
        let convs = parse_transcripts(BufReader::new(fs::File::open(conversations)?))?;
        let refs = parse_references(BufReader::new(fs::File::open(references)?))?;
        let splits = match splits {
            Some(p) => Splits::from_json(&fs::read_to_string(p)?)?,
            None => Splits::all_in(Split::Test, convs.iter().map(|c| c.id().to_string())),
        };
        Corpus::new(convs, refs, splits)
    }

    pub fn conversations(&self) -> &BTreeMap<String, Conversation> {
        &self.conversations
    }

    pub fn references(&self) -> &BTreeMap<String, Vec<SummaryRecord>> {
        &self.references
    }

    pub fn references_for(&self, conv_id: &str) -> &[SummaryRecord] {
        self.references
            .get(conv_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn split_of(&self, conv_id: &str) -> Option<Split> {
        self.assignment.get(conv_id).copied()
    }

    /// Conversations of one split in id order.
    pub fn in_split(&self, split: Split) -> Vec<&Conversation> {
        self.splits
            .get(split)
            .iter()
            .map(|id| &self.conversations[id])
            .collect()
    }

    pub fn len(&self) -> usize {
        self.conversations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conversations.is_empty()
    }
}

/// The reference with the most extracted concepts; ties go to the smallest
/// annotator id.
pub fn select_target_reference<'r>(
    refs: &'r [SummaryRecord],
    extractor: &dyn ConceptExtractor,
) -> Result<&'r SummaryRecord, DatasetError> {
    if refs.is_empty() {
        return Err(DatasetError::NoReferences);
    }
    let texts: Vec<String> = refs.iter().map(|r| r.text.clone()).collect();
    let sets = extractor.extract_batch(&texts)?;
    let best = refs
        .iter()
        .zip(&sets)
        .max_by(|(ra, sa), (rb, sb)| {
            sa.len()
                .cmp(&sb.len())
                .then_with(|| rb.origin.cmp(&ra.origin))
        })
        .map(|(r, _)| r)
        .expect("non-empty");
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    pub method: Method,
    #[serde(default)]
    pub chunk_cfg: ChunkConfig,
    #[serde(default)]
    pub align_cfg: AlignConfig,
    #[serde(default)]
    pub tokenizer: WordRatioTokenizer,
    /// Budget used for the snippet-within-limit statistic.
    #[serde(default = "default_token_limit")]
    pub token_limit: usize,
}

fn default_token_limit() -> usize {
    1024
}

impl ExportConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            chunk_cfg: ChunkConfig::default(),
            align_cfg: AlignConfig::default(),
            tokenizer: WordRatioTokenizer::default(),
            token_limit: default_token_limit(),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipNote {
    pub conv_id: String,
    pub split: Split,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub method: Method,
    pub splits: Splits,
    pub counts: BTreeMap<String, usize>,
    /// Fraction of reference sentences without a matching snippet (sentbert).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_drop_rate: Option<f64>,
    pub targets: BTreeMap<String, String>,
    pub skipped: Vec<SkipNote>,
    pub config_hash: String,
}

struct ConvExport {
    examples: Vec<TrainingExample>,
    target: Option<String>,
    report: Option<BuildReport>,
    skip: Option<String>,
}

fn export_one(
    conv: &Conversation,
    refs: &[SummaryRecord],
    cfg: &ExportConfig,
    extractor: &dyn ConceptExtractor,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<ConvExport, DatasetError> {
    let skip = |reason: &str| ConvExport {
        examples: Vec::new(),
        target: None,
        report: None,
        skip: Some(reason.to_string()),
    };
    if refs.is_empty() {
        return Ok(skip("no references"));
    }
    let target = select_target_reference(refs, extractor)?;
    if target.text.is_empty() {
        return Ok(skip("selected reference is empty"));
    }
    let mut report = None;
    let examples = match cfg.method {
        Method::Single => vec![TrainingExample {
            conv_id: conv.id().to_string(),
            piece_id: "full".to_string(),
            source: conv.serialize_with_roles(),
            target: target.text.clone(),
            method: Method::Single,
        }],
        Method::Chunking => build_chunk_training_examples(conv, &target.text, &cfg.chunk_cfg)?,
        Method::Sentbert => {
            let embedder = embedder.ok_or(DatasetError::EmbedderRequired)?;
            let (examples, r) = build_sentbert_training_examples(
                conv,
                std::slice::from_ref(target),
                embedder,
                &cfg.tokenizer,
                cfg.token_limit,
                &cfg.align_cfg,
            )?;
            report = Some(r);
            examples
        }
    };
    Ok(ConvExport {
        examples,
        target: Some(target.origin.clone()),
        report,
        skip: None,
    })
}

/// Writes `train.jsonl`, `dev.jsonl`, `manifest.json` and, for sentbert,
/// `build_report.jsonl` into `out_dir`. Conversations are processed in
/// parallel and written in id order.
pub fn export_finetune_dataset(
    corpus: &Corpus,
    cfg: &ExportConfig,
    extractor: &dyn ConceptExtractor,
    embedder: Option<&dyn EmbeddingProvider>,
    out_dir: &Path,
) -> Result<DatasetManifest, DatasetError> {
    match cfg.method {
        Method::Chunking => cfg.chunk_cfg.validate()?,
        Method::Sentbert => {
            cfg.align_cfg.validate()?;
            if embedder.is_none() {
                return Err(DatasetError::EmbedderRequired);
            }
        }
        Method::Single => {}
    }
    fs::create_dir_all(out_dir)?;

    let mut counts = BTreeMap::new();
    let mut targets = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut reports = Vec::new();
    for split in [Split::Train, Split::Dev] {
        let convs = corpus.in_split(split);
        let results: Vec<ConvExport> = convs
            .par_iter()
            .map(|c| export_one(c, corpus.references_for(c.id()), cfg, extractor, embedder))
            .collect::<Result<_, _>>()?;

        let path = out_dir.join(format!("{split}.jsonl"));
        let mut writer = BufWriter::new(fs::File::create(path)?);
        let mut n_examples = 0;
        let mut n_used = 0;
        for (conv, r) in convs.iter().zip(results) {
            if let Some(reason) = r.skip {
                skipped.push(SkipNote {
                    conv_id: conv.id().to_string(),
                    split,
                    reason,
                });
                continue;
            }
            n_used += 1;
            n_examples += r.examples.len();
            write_jsonl(&mut writer, &r.examples)?;
            if let Some(t) = r.target {
                targets.insert(conv.id().to_string(), t);
            }
            reports.extend(r.report);
        }
        writer.flush()?;
        counts.insert(format!("{split}_conversations"), n_used);
        counts.insert(format!("{split}_examples"), n_examples);
    }
    counts.insert("test_conversations".into(), corpus.splits().test.len());
    counts.insert("skipped".into(), skipped.len());

    let sentence_drop_rate = (cfg.method == Method::Sentbert).then(|| {
        let total: usize = reports.iter().map(|r| r.sentences_total).sum();
        let matched: usize = reports.iter().map(|r| r.sentences_matched).sum();
        if total == 0 {
            0.0
        } else {
            1.0 - matched as f64 / total as f64
        }
    });
    if cfg.method == Method::Sentbert {
        write_jsonl(
            BufWriter::new(fs::File::create(out_dir.join("build_report.jsonl"))?),
            &reports,
        )?;
    }

    let manifest = DatasetManifest {
        method: cfg.method,
        splits: corpus.splits().clone(),
        counts,
        sentence_drop_rate,
        targets,
        skipped,
        config_hash: cfg.hash(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(out_dir.join("manifest.json"), json)?;
    Ok(manifest)
}

/// Counts over bins `[0, e0]`, `(e0, e1]`, ..., `(e_last, inf)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<usize>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(edges: &[usize], values: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = vec![0; edges.len() + 1];
        for v in values {
            counts[edges.partition_point(|&e| e < v)] += 1;
        }
        Self {
            edges: edges.to_vec(),
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn label(&self, bin: usize) -> String {
        match bin {
            0 => format!(
                "[0, {}]",
                self.edges.first().map_or("inf".into(), |e| e.to_string())
            ),
            b if b == self.edges.len() => format!("({}, inf)", self.edges[b - 1]),
            b => format!("({}, {}]", self.edges[b - 1], self.edges[b]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    pub conversation_word_edges: Vec<usize>,
    pub conversation_token_edges: Vec<usize>,
    pub summary_word_edges: Vec<usize>,
    pub reference_count_edges: Vec<usize>,
    pub token_thresholds: Vec<usize>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            conversation_word_edges: vec![250, 500, 1000, 1500, 2000, 3000],
            conversation_token_edges: vec![512, 1024, 2048, 4096],
            summary_word_edges: vec![25, 50, 100, 150, 200],
            reference_count_edges: vec![1, 2, 3, 4],
            token_thresholds: vec![1024, 2048],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFraction {
    pub tokens: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub conversations: usize,
    pub references: usize,
    pub conversation_words: Histogram,
    pub conversation_tokens: Histogram,
    pub summary_words: Histogram,
    pub references_per_conversation: Histogram,
    /// Fraction of conversations whose role-tagged form exceeds each threshold.
    pub over_threshold: Vec<ThresholdFraction>,
}

/// Stats over one split, or the whole corpus when `split` is `None`.
pub fn corpus_stats(
    corpus: &Corpus,
    tokenizer: &dyn Tokenizer,
    cfg: &StatsConfig,
    split: Option<Split>,
) -> CorpusStats {
    let convs: Vec<&Conversation> = match split {
        Some(s) => corpus.in_split(s),
        None => corpus.conversations().values().collect(),
    };
    let tokens: Vec<usize> = convs
        .iter()
        .map(|c| tokenizer.count_tokens(&c.serialize_with_roles()))
        .collect();
    let refs: Vec<&SummaryRecord> = convs
        .iter()
        .flat_map(|c| corpus.references_for(c.id()))
        .collect();
    let n = convs.len();
    let over_threshold = cfg
        .token_thresholds
        .iter()
        .map(|&t| ThresholdFraction {
            tokens: t,
            fraction: if n == 0 {
                0.0
            } else {
                tokens.iter().filter(|&&x| x > t).count() as f64 / n as f64
            },
        })
        .collect();
    CorpusStats {
        conversations: n,
        references: refs.len(),
        conversation_words: Histogram::new(
            &cfg.conversation_word_edges,
            convs.iter().map(|c| c.word_count()),
        ),
        conversation_tokens: Histogram::new(&cfg.conversation_token_edges, tokens.iter().copied()),
        summary_words: Histogram::new(
            &cfg.summary_word_edges,
            refs.iter().map(|r| crate::transcript::word_count(&r.text)),
        ),
        references_per_conversation: Histogram::new(
            &cfg.reference_count_edges,
            convs.iter().map(|c| corpus.references_for(c.id()).len()),
        ),
        over_threshold,
    }
}

pub fn render_stats(stats: &CorpusStats) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "conversations: {}\nreferences: {}\n",
        stats.conversations, stats.references
    ));
    for t in &stats.over_threshold {
        out.push_str(&format!(
            "over {} tokens: {:.1}%\n",
            t.tokens,
            100.0 * t.fraction
        ));
    }
    let sections = [
        ("conversation words", &stats.conversation_words),
        ("conversation tokens", &stats.conversation_tokens),
        ("summary words", &stats.summary_words),
        (
            "references per conversation",
            &stats.references_per_conversation,
        ),
    ];
    for (title, h) in sections {
        out.push_str(&format!("\n{title}\n"));
        for (bin, count) in h.counts.iter().enumerate() {
            out.push_str(&format!("  {:<16} {count}\n", h.label(bin)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ConceptEntry, Lexicon};
    use crate::transcript::{SpeakerRole, Turn};
    use std::collections::BTreeSet;

    fn conv(id: &str, n: usize) -> Conversation {
        let turns = (0..n)
            .map(|i| Turn::new(SpeakerRole::Doctor, &format!("Turn {i} about cough.")))
            .collect();
        Conversation::new(id, turns).unwrap()
    }

    fn lexicon() -> Lexicon {
        let entry = |id: &str, s: &str| ConceptEntry {
            id: id.into(),
            canonical: s.into(),
            surfaces: vec![s.into()],
            category: None,
        };
        Lexicon::new(vec![
            entry("C1", "cough"),
            entry("C2", "fever"),
            entry("C3", "rash"),
            entry("C4", "nausea"),
        ])
        .unwrap()
    }

    #[test]
    fn target_has_most_findings() {
        let refs = vec![
            SummaryRecord::new("c", "a1", "cough and fever"),
            SummaryRecord::new("c", "a2", "cough"),
            SummaryRecord::new("c", "a3", "cough fever rash"),
        ];
        assert_eq!(
            select_target_reference(&refs, &lexicon()).unwrap().origin,
            "a3"
        );
        assert_eq!(
            select_target_reference(&refs[1..2], &lexicon())
                .unwrap()
                .origin,
            "a2"
        );
    }

    #[test]
    fn target_tie_goes_to_smallest_annotator() {
        let refs = vec![
            SummaryRecord::new("c", "b", "cough fever"),
            SummaryRecord::new("c", "a", "rash nausea"),
        ];
        assert_eq!(
            select_target_reference(&refs, &lexicon()).unwrap().origin,
            "a"
        );
        let mut rev = refs.clone();
        rev.reverse();
        assert_eq!(
            select_target_reference(&rev, &lexicon()).unwrap().origin,
            "a"
        );
    }

    #[test]
    fn corpus_validation() {
        let convs = || vec![conv("a", 2), conv("b", 2)];
        let both = || Splits {
            train: vec!["a".into()],
            dev: vec![],
            test: vec!["b".into()],
        };
        assert!(Corpus::new(convs(), vec![], both()).is_ok());
        let overlap = Splits {
            train: vec!["a".into()],
            dev: vec!["a".into()],
            test: vec!["b".into()],
        };
        assert!(matches!(
            Corpus::new(convs(), vec![], overlap),
            Err(DatasetError::OverlappingSplits(_))
        ));
        let partial = Splits {
            train: vec!["a".into()],
            ..Default::default()
        };
        assert!(matches!(
            Corpus::new(convs(), vec![], partial),
            Err(DatasetError::Unassigned(_))
        ));
        let bad_ref = vec![SummaryRecord::new("zz", "x", "text")];
        assert!(matches!(
            Corpus::new(convs(), bad_ref, both()),
            Err(DatasetError::UnknownReferenceConversation(_))
        ));
        let dup_ref = vec![
            SummaryRecord::new("a", "x", "t"),
            SummaryRecord::new("a", "x", "u"),
        ];
        assert!(matches!(
            Corpus::new(convs(), dup_ref, both()),
            Err(DatasetError::DuplicateReference { .. })
        ));
    }

    #[test]
    fn split_sizes_are_disjoint_and_cover() {
        let ids: Vec<String> = (0..20).map(|i| format!("c{i:02}")).collect();
        let s = Splits::from_sizes(&ids, 12, 4, 7).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (12, 4, 4));
        let all: BTreeSet<_> = s.train.iter().chain(&s.dev).chain(&s.test).collect();
        assert_eq!(all.len(), 20);
        assert_eq!(s, Splits::from_sizes(&ids, 12, 4, 7).unwrap());
        assert!(Splits::from_sizes(&ids, 18, 4, 7).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = Histogram::new(&[10, 20], [0, 10, 11, 20, 21, 500]);
        assert_eq!(h.counts, vec![2, 2, 2]);
        assert_eq!(h.label(0), "[0, 10]");
        assert_eq!(h.label(1), "(10, 20]");
        assert_eq!(h.label(2), "(20, inf)");
    }
}
