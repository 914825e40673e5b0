//! Full evaluation of a set of generated summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::aggregate::{
    aggregate_multi_reference, baseline_reference_loo, baseline_training_random, bucket_count,
    bucket_index, bucket_label, LooBaseline, BUCKET_EDGES,
};
use super::concepts::{concept_prf, majority_vote_filter, ConceptExtractor, ConceptSet};
use super::rouge::{Prf, RougeScores, ROUGE_L_VARIANT, TOKENIZATION};
use super::MetricsError;
use crate::backends::Tokenizer;
use crate::records::SummaryRecord;
use crate::transcript::Conversation;

/// What to do with a conversation where neither the generated summary nor
/// the filtered references contain any concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VacuousConcepts {
    /// Count it as perfect agreement.
    #[default]
    Score,
    /// Leave it out of concept averages.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub buckets: bool,
    pub baseline_training: bool,
    pub baseline_reference: bool,
    pub seed: u64,
    pub vacuous_concepts: VacuousConcepts,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            buckets: false,
            baseline_training: false,
            baseline_reference: false,
            seed: 0,
            vacuous_concepts: VacuousConcepts::Score,
        }
    }
}

pub struct EvalInput<'a> {
    /// Row label for the generated summaries, e.g. the run mode.
    pub system: &'a str,
    pub generated: &'a [SummaryRecord],
    pub references: &'a BTreeMap<String, Vec<SummaryRecord>>,
    /// Needed for bucketing; token counts use the role-tagged rendering.
    pub conversations: &'a BTreeMap<String, Conversation>,
    pub extractor: Option<&'a dyn ConceptExtractor>,
    pub tokenizer: &'a dyn Tokenizer,
    /// Targets for the random training-target baseline.
    pub training_targets: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub tokenization: String,
    pub rouge_l: String,
    pub bucket_edges: Vec<usize>,
    pub majority_min_references: usize,
    pub vacuous_concepts: VacuousConcepts,
    pub concept_extractor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScores {
    pub generated: ConceptSet,
    pub reference: ConceptSet,
    /// `None` when skipped under [`VacuousConcepts::Skip`].
    pub prf: Option<Prf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationScores {
    pub conv_id: String,
    pub input_tokens: Option<usize>,
    pub bucket: Option<usize>,
    pub references: usize,
    pub best_reference: String,
    pub mean_of_mean: RougeScores,
    pub mean_of_best: RougeScores,
    pub concepts: Option<ConceptScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub conversations: usize,
    pub mean_of_mean: Option<RougeScores>,
    pub mean_of_best: Option<RougeScores>,
    pub concept: Option<Prf>,
}

impl AggregateRow {
    fn from_entries<'a>(entries: impl Iterator<Item = &'a ConversationScores> + Clone) -> Self {
        let conversations = entries.clone().count();
        let concept_prfs: Vec<Prf> = entries
            .clone()
            .filter_map(|e| e.concepts.as_ref().and_then(|c| c.prf))
            .collect();
        Self {
            conversations,
            mean_of_mean: RougeScores::mean(entries.clone().map(|e| &e.mean_of_mean)),
            mean_of_best: RougeScores::mean(entries.map(|e| &e.mean_of_best)),
            concept: Prf::mean(&concept_prfs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub label: String,
    pub scores: AggregateRow,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Baselines {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training: Option<RougeScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<LooBaseline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub settings: EvalSettings,
    pub system: String,
    pub aggregate: AggregateRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buckets: Option<Vec<BucketRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Baselines>,
    /// Generated summaries without references.
    pub unscored: Vec<String>,
    pub per_conversation: Vec<ConversationScores>,
}

fn score_conversation(
    gen: &SummaryRecord,
    refs: &[SummaryRecord],
    input: &EvalInput<'_>,
    opts: &EvalOptions,
) -> Result<ConversationScores, MetricsError> {
    let ref_texts: Vec<&str> = refs.iter().map(|r| r.text.as_str()).collect();
    let agg = aggregate_multi_reference(&gen.text, &ref_texts)?;
    let input_tokens = input
        .conversations
        .get(&gen.conv_id)
        .map(|c| input.tokenizer.count_tokens(&c.serialize_with_roles()));
    let concepts = match input.extractor {
        None => None,
        Some(extractor) => {
            let mut texts = Vec::with_capacity(refs.len() + 1);
            texts.push(gen.text.clone());
            texts.extend(refs.iter().map(|r| r.text.clone()));
            let mut sets = extractor.extract_batch(&texts)?;
            if sets.len() != texts.len() {
                return Err(MetricsError::Extractor(
                    crate::backends::BackendError::Protocol(
                        "concept extractor returned the wrong number of sets".into(),
                    ),
                ));
            }
            let ref_sets = sets.split_off(1);
            let generated = sets.pop().expect("generated set");
            let reference = majority_vote_filter(&ref_sets);
            let vacuous = generated.is_empty() && reference.is_empty();
            let prf = if vacuous && opts.vacuous_concepts == VacuousConcepts::Skip {
                None
            } else {
                Some(concept_prf(&generated, &reference))
            };
            Some(ConceptScores {
                generated,
                reference,
                prf,
            })
        }
    };
    Ok(ConversationScores {
        conv_id: gen.conv_id.clone(),
        input_tokens,
        bucket: input_tokens.map(bucket_index),
        references: refs.len(),
        best_reference: refs[agg.best_reference].origin.clone(),
        mean_of_mean: agg.mean_of_mean,
        mean_of_best: agg.mean_of_best,
        concepts,
    })
}

pub fn evaluate(input: &EvalInput<'_>, opts: &EvalOptions) -> Result<EvalReport, MetricsError> {
    let mut generated: Vec<&SummaryRecord> = input.generated.iter().collect();
    generated.sort_by(|a, b| a.conv_id.cmp(&b.conv_id));

    let mut per_conversation = Vec::new();
    let mut unscored = Vec::new();
    for gen in &generated {
        match input.references.get(&gen.conv_id) {
            Some(refs) if !refs.is_empty() => {
                per_conversation.push(score_conversation(gen, refs, input, opts)?)
            }
            _ => unscored.push(gen.conv_id.clone()),
        }
    }

    let aggregate = AggregateRow::from_entries(per_conversation.iter());

    let buckets = opts.buckets.then(|| {
        (0..bucket_count())
            .map(|b| BucketRow {
                label: bucket_label(b),
                scores: AggregateRow::from_entries(
                    per_conversation.iter().filter(move |e| e.bucket == Some(b)),
                ),
            })
            .collect()
    });

    let baselines = if opts.baseline_training || opts.baseline_reference {
        let mut b = Baselines::default();
        if opts.baseline_training {
            let texts: Vec<&str> = generated
                .iter()
                .filter(|g| !unscored.contains(&g.conv_id))
                .map(|g| g.text.as_str())
                .collect();
            b.training = Some(baseline_training_random(
                &texts,
                input.training_targets,
                opts.seed,
            )?);
        }
        if opts.baseline_reference {
            let refs: Vec<Vec<&str>> = per_conversation
                .iter()
                .map(|e| {
                    input.references[&e.conv_id]
                        .iter()
                        .map(|r| r.text.as_str())
                        .collect()
                })
                .collect();
            b.reference = Some(baseline_reference_loo(&refs)?);
        }
        Some(b)
    } else {
        None
    };

    Ok(EvalReport {
        settings: EvalSettings {
            tokenization: TOKENIZATION.to_string(),
            rouge_l: ROUGE_L_VARIANT.to_string(),
            bucket_edges: BUCKET_EDGES.to_vec(),
            majority_min_references: 3,
            vacuous_concepts: opts.vacuous_concepts,
            concept_extractor: input.extractor.is_some(),
        },
        system: input.system.to_string(),
        aggregate,
        buckets,
        baselines,
        unscored,
        per_conversation,
    })
}

fn pair(mean: Option<f64>, best: Option<f64>) -> String {
    match (mean, best) {
        (Some(m), Some(b)) => format!("{m:.4} ({b:.4})"),
        _ => "-".to_string(),
    }
}

fn rouge_cells(mom: Option<&RougeScores>, mob: Option<&RougeScores>) -> [String; 3] {
    [
        pair(mom.map(RougeScores::r1_f1), mob.map(RougeScores::r1_f1)),
        pair(mom.map(RougeScores::r2_f1), mob.map(RougeScores::r2_f1)),
        pair(mom.map(RougeScores::rl_f1), mob.map(RougeScores::rl_f1)),
    ]
}

fn concept_cells(p: Option<&Prf>) -> [String; 3] {
    match p {
        Some(p) => [
            format!("{:.4}", p.f1),
            format!("{:.4}", p.precision),
            format!("{:.4}", p.recall),
        ],
        None => ["-".into(), "-".into(), "-".into()],
    }
}

/// Plain-text rendering: one row per system/baseline with ROUGE F1 as
/// `mean-of-mean (mean-of-best)` and concept F1/P/R, then bucket rows.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let header = format!(
        "{:<16} {:>5} {:>17} {:>17} {:>17} {:>8} {:>8} {:>8}",
        "system", "n", "ROUGE-1 F1", "ROUGE-2 F1", "ROUGE-L F1", "Conc F1", "Conc P", "Conc R"
    );
    fn row(out: &mut String, name: &str, n: usize, r: [String; 3], c: [String; 3]) {
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>17} {:>17} {:>17} {:>8} {:>8} {:>8}",
            name, n, r[0], r[1], r[2], c[0], c[1], c[2]
        );
    }
    let agg = &report.aggregate;
    row(
        &mut out,
        &report.system,
        agg.conversations,
        rouge_cells(agg.mean_of_mean.as_ref(), agg.mean_of_best.as_ref()),
        concept_cells(agg.concept.as_ref()),
    );
    if let Some(b) = &report.baselines {
        if let Some(t) = &b.training {
            row(
                &mut out,
                "training",
                agg.conversations,
                rouge_cells(Some(t), Some(t)),
                concept_cells(None),
            );
        }
        if let Some(r) = &b.reference {
            row(
                &mut out,
                "reference",
                r.conversations_scored,
                rouge_cells(Some(&r.mean_of_mean), Some(&r.mean_of_best)),
                concept_cells(None),
            );
        }
    }
    if let Some(buckets) = &report.buckets {
        out.push('\n');
        out.push_str("input tokens\n");
        for b in buckets {
            row(
                &mut out,
                &b.label,
                b.scores.conversations,
                rouge_cells(
                    b.scores.mean_of_mean.as_ref(),
                    b.scores.mean_of_best.as_ref(),
                ),
                concept_cells(b.scores.concept.as_ref()),
            );
        }
    }
    format!("{header}\n{out}")
}
