//! Multistage summarization of doctor-patient conversations: transcript
//! handling, chunking and embedding alignment for stage-1 inputs, pluggable
//! summarizer backends, the two-stage pipeline, dataset export and the
//! multi-reference evaluation suite.

pub mod aligner;
pub mod backends;
pub mod chunker;
pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod records;
pub mod synthetic;
pub mod transcript;

pub use aligner::{AlignConfig, Snippet};
pub use backends::{BackendDescriptor, BackendError, Summarizer, Tokenizer, WordRatioTokenizer};
pub use chunker::{Chunk, ChunkConfig};
pub use dataset::{Corpus, Split, Splits};
pub use metrics::{ConceptSet, Lexicon, RougeScores};
pub use pipeline::{Mode, RunConfig};
pub use records::{Method, SummaryRecord, TrainingExample};
pub use transcript::{Conversation, SentenceList, SpeakerRole, Turn};
