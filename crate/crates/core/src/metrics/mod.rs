//! Evaluation: ROUGE, multi-reference aggregation, concept metrics with
//! majority-voted references, token buckets, baselines and rater agreement.

mod aggregate;
mod agreement;
mod concepts;
mod report;
mod rouge;

use thiserror::Error;

pub use aggregate::{
    aggregate_multi_reference, baseline_reference_loo, baseline_training_random, bucket_count,
    bucket_index, bucket_label, bucket_range, random_pairing, LooBaseline, MultiReference,
    BUCKET_EDGES,
};
pub use agreement::{cohens_kappa, kendall_tau_b, pearson, rater_agreement, Agreement};
pub use concepts::{
    concept_prf, extract_concepts, majority_vote_filter, ConceptEntry, ConceptExtractor,
    ConceptMatch, ConceptSet, HttpConceptExtractor, Lexicon, LexiconError,
};
pub use report::{
    evaluate, render_table, AggregateRow, Baselines, BucketRow, ConceptScores, ConversationScores,
    EvalInput, EvalOptions, EvalReport, EvalSettings, VacuousConcepts,
};
pub use rouge::{
    lcs_len, rouge, rouge_l, rouge_l_tokens, rouge_n, rouge_n_tokens, tokenize, Prf, RougeScores,
    ROUGE_L_VARIANT, TOKENIZATION,
};

use crate::backends::BackendError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("at least one reference is required")]
    NoReferences,
    #[error("training-target baseline needs at least one training target")]
    NoTrainingTargets,
    #[error("nothing to score")]
    NothingToScore,
    #[error("score lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("agreement needs at least 2 paired scores, got {0}")]
    TooFewPairs(usize),
    #[error("scores must be finite numbers")]
    NonFinite,
    #[error("concept extraction failed: {0}")]
    Extractor(#[from] BackendError),
}
