//! Single-stage and two-stage inference, and run-directory persistence.
//!
//! Run directory layout:
//!
//! ```text
//! config.json       resolved RunConfig
//! generated.jsonl   one SummaryRecord per successful conversation
//! pieces/           <conv_id>.jsonl, stage-1 inputs and outputs per piece
//! failures.jsonl    one line per failed conversation
//! ```

use std::fmt;
use std::fs;
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::{build_inference_snippets, AlignConfig};
use crate::backends::{
    summarize_batch, truncate_to_limit, BackendDescriptor, SummarizeRequest, Summarizer, Tokenizer,
    WordRatioTokenizer,
};
use crate::chunker::{build_chunks, ChunkConfig};
use crate::records::{read_jsonl, write_jsonl, RecordError, SummaryRecord};
use crate::transcript::{normalize_text, Conversation};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("mode {0} needs a stage-2 backend")]
    MissingStage2(Mode),
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    MultistageChunking,
    MultistageSentbert,
}

impl Mode {
    pub const ALL: [Mode; 3] = [
        Mode::Single,
        Mode::MultistageChunking,
        Mode::MultistageSentbert,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::MultistageChunking => "multistage-chunking",
            Mode::MultistageSentbert => "multistage-sentbert",
        }
    }

    pub fn is_multistage(self) -> bool {
        self != Mode::Single
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    /// Sentence prepended to every model input.
    pub fn prefix_sentence(self) -> &'static str {
        match self {
            Gender::Female => "The patient is a female.",
            Gender::Male => "The patient is a male.",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(format!(
                "unknown gender {other:?} (expected female or male)"
            )),
        }
    }
}

fn default_max_new_tokens() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Written as the `origin` of every generated record.
    pub run_id: String,
    pub stage1_backend: BackendDescriptor,
    #[serde(default)]
    pub stage2_backend: Option<BackendDescriptor>,
    #[serde(default)]
    pub chunk_cfg: ChunkConfig,
    #[serde(default)]
    pub align_cfg: AlignConfig,
    #[serde(default)]
    pub gender_prefix: Option<Gender>,
    #[serde(default)]
    pub tokenizer: WordRatioTokenizer,
    #[serde(default = "default_max_new_tokens")]
    pub stage1_max_new_tokens: usize,
    #[serde(default = "default_max_new_tokens")]
    pub stage2_max_new_tokens: usize,
    #[serde(default)]
    pub seed: u64,
    /// Not serialized, so run directories do not embed their own path.
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(mode: Mode, stage1: BackendDescriptor, stage2: Option<BackendDescriptor>) -> Self {
        Self {
            mode,
            run_id: mode.as_str().to_string(),
            stage1_backend: stage1,
            stage2_backend: stage2,
            chunk_cfg: ChunkConfig::default(),
            align_cfg: AlignConfig::default(),
            gender_prefix: None,
            tokenizer: WordRatioTokenizer::default(),
            stage1_max_new_tokens: default_max_new_tokens(),
            stage2_max_new_tokens: default_max_new_tokens(),
            seed: 0,
            output_dir: PathBuf::new(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.mode.is_multistage() && self.stage2_backend.is_none() {
            return Err(PipelineError::MissingStage2(self.mode));
        }
        self.stage1_backend
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(s2) = &self.stage2_backend {
            s2.validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.mode == Mode::MultistageChunking {
            self.chunk_cfg
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.mode == Mode::MultistageSentbert {
            self.align_cfg
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.stage1_max_new_tokens == 0 || self.stage2_max_new_tokens == 0 {
            return Err(PipelineError::Config("max_new_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// One stage-1 call: its input and output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceOutput {
    pub conv_id: String,
    pub piece_id: String,
    pub input: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub record: SummaryRecord,
    pub pieces: Vec<PieceOutput>,
    /// Tokens of the final-stage input before truncation.
    pub final_input_tokens: usize,
    pub final_input_truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Stage1,
    Stage2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationFailure {
    pub conv_id: String,
    pub stage: Stage,
    pub error: String,
    pub retriable: bool,
    #[serde(skip)]
    pub pieces: Vec<PieceOutput>,
}

struct PreparedInput {
    text: String,
    tokens: usize,
    truncated: bool,
}

fn prepare_input(
    body: &str,
    cfg: &RunConfig,
    tokenizer: &dyn Tokenizer,
    limit: usize,
) -> PreparedInput {
    let full = match cfg.gender_prefix {
        Some(g) => format!("{} {body}", g.prefix_sentence()),
        None => body.to_string(),
    };
    let tokens = tokenizer.count_tokens(&full);
    let text = truncate_to_limit(tokenizer, &full, limit).to_string();
    PreparedInput {
        truncated: text.len() < full.len(),
        text,
        tokens,
    }
}

fn fail(
    conv: &Conversation,
    stage: Stage,
    err: crate::backends::BackendError,
    pieces: Vec<PieceOutput>,
) -> ConversationFailure {
    ConversationFailure {
        conv_id: conv.id().to_string(),
        stage,
        retriable: err.is_retriable(),
        error: err.to_string(),
        pieces,
    }
}

fn final_call(
    conv: &Conversation,
    backend: &dyn Summarizer,
    cfg: &RunConfig,
    body: &str,
    max_new_tokens: usize,
    stage: Stage,
    pieces: Vec<PieceOutput>,
) -> Result<Generation, ConversationFailure> {
    let input = prepare_input(body, cfg, &cfg.tokenizer, backend.descriptor().token_limit);
    let id = match stage {
        Stage::Stage1 => conv.id().to_string(),
        Stage::Stage2 => format!("{}#final", conv.id()),
    };
    let req = SummarizeRequest::new(id, input.text, max_new_tokens);
    let resp = match summarize_batch(backend, std::slice::from_ref(&req)) {
        Ok(mut r) => r.pop().expect("one response per request"),
        Err(e) => return Err(fail(conv, stage, e, pieces)),
    };
    let mut record = SummaryRecord::new(conv.id(), cfg.run_id.clone(), &resp.summary);
    if stage == Stage::Stage2 {
        record.stage1_pieces = Some(pieces.iter().map(|p| p.summary.clone()).collect());
    }
    Ok(Generation {
        record,
        pieces,
        final_input_tokens: input.tokens,
        final_input_truncated: input.truncated,
    })
}

/// Role-tagged conversation, truncated to the backend limit, one call.
pub fn single_stage(
    conv: &Conversation,
    backend: &dyn Summarizer,
    cfg: &RunConfig,
) -> Result<Generation, ConversationFailure> {
    final_call(
        conv,
        backend,
        cfg,
        &conv.serialize_with_roles(),
        cfg.stage1_max_new_tokens,
        Stage::Stage1,
        Vec::new(),
    )
}

/// Stage 1 over `pieces` (in order), then stage 2 over the space-joined
/// stage-1 summaries.
fn two_stage(
    conv: &Conversation,
    pieces: Vec<(String, String)>,
    stage1: &dyn Summarizer,
    stage2: &dyn Summarizer,
    cfg: &RunConfig,
) -> Result<Generation, ConversationFailure> {
    let limit = stage1.descriptor().token_limit;
    let requests: Vec<SummarizeRequest> = pieces
        .iter()
        .map(|(piece_id, text)| {
            let input = prepare_input(text, cfg, &cfg.tokenizer, limit);
            SummarizeRequest::new(
                format!("{}#{piece_id}", conv.id()),
                input.text,
                cfg.stage1_max_new_tokens,
            )
        })
        .collect();
    let responses =
        summarize_batch(stage1, &requests).map_err(|e| fail(conv, Stage::Stage1, e, Vec::new()))?;
    let outputs: Vec<PieceOutput> = pieces
        .into_iter()
        .zip(requests)
        .zip(responses)
        .map(|(((piece_id, _), req), resp)| PieceOutput {
            conv_id: conv.id().to_string(),
            piece_id,
            input: req.input,
            summary: normalize_text(&resp.summary),
        })
        .collect();
    let joined = outputs
        .iter()
        .map(|p| p.summary.as_str())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    final_call(
        conv,
        stage2,
        cfg,
        &joined,
        cfg.stage2_max_new_tokens,
        Stage::Stage2,
        outputs,
    )
}

pub fn multistage_chunking(
    conv: &Conversation,
    stage1: &dyn Summarizer,
    stage2: &dyn Summarizer,
    cfg: &RunConfig,
) -> Result<Generation, ConversationFailure> {
    let pieces = build_chunks(conv, &cfg.chunk_cfg)
        .into_iter()
        .map(|c| (c.piece_id(), c.rendered))
        .collect();
    two_stage(conv, pieces, stage1, stage2, cfg)
}

pub fn multistage_sentbert(
    conv: &Conversation,
    stage1: &dyn Summarizer,
    stage2: &dyn Summarizer,
    cfg: &RunConfig,
) -> Result<Generation, ConversationFailure> {
    let pieces = build_inference_snippets(conv, &cfg.align_cfg)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("snippet-{i}"), s.rendered))
        .collect();
    two_stage(conv, pieces, stage1, stage2, cfg)
}

pub struct Pipeline<'a> {
    cfg: &'a RunConfig,
    stage1: &'a dyn Summarizer,
    stage2: Option<&'a dyn Summarizer>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub generations: Vec<Generation>,
    pub failures: Vec<ConversationFailure>,
}

impl RunOutcome {
    pub fn records(&self) -> Vec<SummaryRecord> {
        self.generations.iter().map(|g| g.record.clone()).collect()
    }

    /// Fraction of final-stage inputs above `tokens` before truncation.
    pub fn fraction_final_inputs_over(&self, tokens: usize) -> f64 {
        if self.generations.is_empty() {
            return 0.0;
        }
        let over = self
            .generations
            .iter()
            .filter(|g| g.final_input_tokens > tokens)
            .count();
        over as f64 / self.generations.len() as f64
    }
}

impl<'a> Pipeline<'a> {
    pub fn new(
        cfg: &'a RunConfig,
        stage1: &'a dyn Summarizer,
        stage2: Option<&'a dyn Summarizer>,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        if cfg.mode.is_multistage() && stage2.is_none() {
            return Err(PipelineError::MissingStage2(cfg.mode));
        }
        Ok(Self {
            cfg,
            stage1,
            stage2,
        })
    }

    pub fn run_conversation(&self, conv: &Conversation) -> Result<Generation, ConversationFailure> {
        match self.cfg.mode {
            Mode::Single => single_stage(conv, self.stage1, self.cfg),
            Mode::MultistageChunking => {
                multistage_chunking(conv, self.stage1, self.stage2.expect("checked"), self.cfg)
            }
            Mode::MultistageSentbert => {
                multistage_sentbert(conv, self.stage1, self.stage2.expect("checked"), self.cfg)
            }
        }
    }

    /// Runs conversations in parallel on the current rayon pool; results keep
    /// input order.
    pub fn run(&self, convs: &[&Conversation]) -> RunOutcome {
        let results: Vec<_> = convs.par_iter().map(|c| self.run_conversation(c)).collect();
        let mut outcome = RunOutcome::default();
        for r in results {
            match r {
                Ok(g) => outcome.generations.push(g),
                Err(f) => outcome.failures.push(f),
            }
        }
        outcome
    }
}

/// File-name-safe form of a conversation id.
pub fn safe_file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn write_run_dir(
    dir: &Path,
    cfg: &RunConfig,
    outcome: &RunOutcome,
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let pieces_dir = dir.join("pieces");
    if pieces_dir.exists() {
        fs::remove_dir_all(&pieces_dir)?;
    }
    fs::create_dir_all(&pieces_dir)?;

    let mut config = serde_json::to_string_pretty(cfg).expect("config serializes");
    config.push('\n');
    fs::write(dir.join("config.json"), config)?;

    let records = outcome.records();
    write_jsonl(
        BufWriter::new(fs::File::create(dir.join("generated.jsonl"))?),
        &records,
    )?;
    write_jsonl(
        BufWriter::new(fs::File::create(dir.join("failures.jsonl"))?),
        &outcome.failures,
    )?;

    let piece_sets = outcome
        .generations
        .iter()
        .map(|g| (&g.record.conv_id, &g.pieces))
        .chain(outcome.failures.iter().map(|f| (&f.conv_id, &f.pieces)));
    for (conv_id, pieces) in piece_sets {
        if pieces.is_empty() {
            continue;
        }
        let path = pieces_dir.join(format!("{}.jsonl", safe_file_stem(conv_id)));
        write_jsonl(BufWriter::new(fs::File::create(path)?), pieces)?;
    }
    Ok(())
}

pub fn read_generated(dir: &Path) -> Result<Vec<SummaryRecord>, PipelineError> {
    let file = fs::File::open(dir.join("generated.jsonl"))?;
    Ok(read_jsonl(BufReader::new(file))?)
}

pub fn read_run_config(dir: &Path) -> Result<RunConfig, PipelineError> {
    let text = fs::read_to_string(dir.join("config.json"))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("config.json: {e}")))?;
    cfg.output_dir = dir.to_path_buf();
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendError, MockSummarizer, SummarizeResponse};
    use crate::transcript::{SpeakerRole, Turn};

    fn conv(n_turns: usize, words_per_turn: usize) -> Conversation {
        let turns = (0..n_turns)
            .map(|i| {
                let role = if i % 2 == 0 {
                    SpeakerRole::Doctor
                } else {
                    SpeakerRole::Patient
                };
                let mut words: Vec<String> =
                    (0..words_per_turn).map(|k| format!("w{i}x{k}")).collect();
                words[0] = format!("Turn{i}");
                let text = format!("{}.", words.join(" "));
                Turn::new(role, &text)
            })
            .collect();
        Conversation::new("conv-1", turns).unwrap()
    }

    fn mock(spec: &str) -> MockSummarizer {
        MockSummarizer::from_spec(spec).unwrap()
    }

    fn cfg(mode: Mode) -> RunConfig {
        let s2 = mode
            .is_multistage()
            .then(|| BackendDescriptor::mock("lead1"));
        RunConfig::new(mode, BackendDescriptor::mock("lead1"), s2)
    }

    #[test]
    fn single_stage_short_input_untruncated() {
        let c = conv(20, 15); // 300 words + 20 role tags = 512 tokens
        let echo = mock("echo");
        let g = single_stage(&c, &echo, &cfg(Mode::Single)).unwrap();
        assert!(!g.final_input_truncated);
        assert_eq!(g.final_input_tokens, 512);
    }

    #[test]
    fn single_stage_long_input_truncated() {
        // 2200 words incl. role tags ~ 3500 tokens
        let c = conv(100, 21);
        let echo = mock("echo");
        let cfg = cfg(Mode::Single);
        let g = single_stage(&c, &echo, &cfg).unwrap();
        assert_eq!(g.final_input_tokens, 3520);
        assert!(g.final_input_truncated);
        let full = c.serialize_with_roles();
        let expected = truncate_to_limit(&cfg.tokenizer, &full, 1024);
        // echo strips role tags; compare word counts of the echoed body
        let tags = expected
            .split_whitespace()
            .filter(|w| w.starts_with('['))
            .count();
        assert_eq!(
            g.record.text.split_whitespace().count(),
            expected.split_whitespace().count() - tags
        );
    }

    #[test]
    fn gender_prefix_leads_input() {
        let c = conv(4, 5);
        let echo = mock("echo");
        let mut cfg = cfg(Mode::Single);
        cfg.gender_prefix = Some(Gender::Female);
        let g = single_stage(&c, &echo, &cfg).unwrap();
        assert!(g.record.text.starts_with("The patient is a female. Turn0"));
    }

    #[test]
    fn chunking_one_chunk_composes_lead() {
        let c = conv(10, 10);
        let lead = mock("lead1");
        let g = multistage_chunking(&c, &lead, &lead, &cfg(Mode::MultistageChunking)).unwrap();
        assert_eq!(g.pieces.len(), 1);
        let stage1 = lead.summarize(&build_chunks(&c, &ChunkConfig::default())[0].rendered, None);
        assert_eq!(g.record.text, lead.summarize(&stage1, None));
        assert_eq!(g.record.stage1_pieces.as_deref(), Some(&[stage1][..]));
    }

    #[test]
    fn chunking_three_chunks_in_order() {
        let c = conv(100, 10);
        let lead = mock("lead1");
        let echo = mock("echo");
        let g = multistage_chunking(&c, &echo, &lead, &cfg(Mode::MultistageChunking)).unwrap();
        assert_eq!(g.pieces.len(), 3);
        let ids: Vec<_> = g.pieces.iter().map(|p| p.piece_id.as_str()).collect();
        assert_eq!(ids, ["chunk-0", "chunk-1", "chunk-2"]);
    }

    #[test]
    fn sentbert_snippets() {
        let c = conv(20, 6);
        let lead = mock("lead1");
        let echo = mock("echo");
        let g = multistage_sentbert(&c, &lead, &echo, &cfg(Mode::MultistageSentbert)).unwrap();
        assert_eq!(g.pieces.len(), 4);
        let expected: Vec<String> = [0, 4, 8, 12]
            .iter()
            .map(|i| format!("Turn{i} w{i}x1 w{i}x2 w{i}x3 w{i}x4 w{i}x5."))
            .collect();
        assert_eq!(g.record.text, expected.join(" "));

        let short = conv(6, 6);
        let g = multistage_sentbert(&short, &lead, &echo, &cfg(Mode::MultistageSentbert)).unwrap();
        assert_eq!(g.pieces.len(), 1);
        assert_eq!(g.record.text, g.pieces[0].summary);
    }

    struct Shuffling(BackendDescriptor, u64);

    impl Summarizer for Shuffling {
        fn descriptor(&self) -> &BackendDescriptor {
            &self.0
        }

        fn call(
            &self,
            requests: &[SummarizeRequest],
        ) -> Result<Vec<SummarizeResponse>, BackendError> {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut out: Vec<_> = requests
                .iter()
                .map(|r| SummarizeResponse {
                    id: r.id.clone(),
                    summary: format!("S({}).", r.id),
                })
                .collect();
            out.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(self.1));
            Ok(out)
        }
    }

    #[test]
    fn response_order_does_not_change_stage2_input() {
        let c = conv(40, 6);
        let echo = mock("echo");
        let cfg = cfg(Mode::MultistageSentbert);
        let texts: Vec<String> = (0..5)
            .map(|seed| {
                let mut d = BackendDescriptor::mock("x");
                d.max_concurrency = 1 + seed as usize % 3;
                multistage_sentbert(&c, &Shuffling(d, seed), &echo, &cfg)
                    .unwrap()
                    .record
                    .text
            })
            .collect();
        assert!(texts.windows(2).all(|w| w[0] == w[1]));
        assert!(texts[0].starts_with("S(conv-1#snippet-0). S(conv-1#snippet-1)."));
    }

    #[test]
    fn multistage_requires_stage2() {
        let cfg = RunConfig::new(
            Mode::MultistageChunking,
            BackendDescriptor::mock("lead1"),
            None,
        );
        assert!(matches!(
            cfg.validate(),
            Err(PipelineError::MissingStage2(_))
        ));
    }

    struct Broken(BackendDescriptor);

    impl Summarizer for Broken {
        fn descriptor(&self) -> &BackendDescriptor {
            &self.0
        }

        fn call(&self, _: &[SummarizeRequest]) -> Result<Vec<SummarizeResponse>, BackendError> {
            Err(BackendError::Transport {
                backend: "broken".into(),
                message: "down".into(),
            })
        }
    }

    #[test]
    fn failures_are_isolated() {
        let c = conv(30, 10);
        let lead = mock("lead1");
        let broken = Broken(BackendDescriptor::mock("x"));
        let cfg = cfg(Mode::MultistageChunking);
        let f = multistage_chunking(&c, &lead, &broken, &cfg).unwrap_err();
        assert_eq!(f.stage, Stage::Stage2);
        assert!(f.retriable);
        assert!(!f.pieces.is_empty(), "stage-1 results kept for debugging");

        let pipeline = Pipeline::new(&cfg, &broken, Some(&lead)).unwrap();
        let c2 = conv(3, 3);
        let out = pipeline.run(&[&c, &c2]);
        assert_eq!(out.failures.len(), 2);
        assert_eq!(out.failures[0].stage, Stage::Stage1);
    }

    #[test]
    fn run_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = conv(30, 10);
        let lead = mock("lead1");
        let cfg = cfg(Mode::MultistageChunking);
        let pipeline = Pipeline::new(&cfg, &lead, Some(&lead)).unwrap();
        let out = pipeline.run(&[&c]);
        write_run_dir(dir.path(), &cfg, &out).unwrap();
        assert_eq!(read_generated(dir.path()).unwrap(), out.records());
        assert!(dir.path().join("pieces/conv-1.jsonl").exists());
        let back = read_run_config(dir.path()).unwrap();
        assert_eq!(back.mode, cfg.mode);
        assert_eq!(back.stage2_backend, cfg.stage2_backend);
    }
}
