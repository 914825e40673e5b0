//! Multi-reference aggregation, token buckets and the two ROUGE baselines.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rouge::{rouge, RougeScores};
use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiReference {
    /// Arithmetic mean of every measure over all references.
    pub mean_of_mean: RougeScores,
    /// All measures against the reference with the highest ROUGE-1 F1.
    pub mean_of_best: RougeScores,
    pub best_reference: usize,
}

pub fn aggregate_multi_reference<S: AsRef<str>>(
    generated: &str,
    references: &[S],
) -> Result<MultiReference, MetricsError> {
    if references.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    let per_ref: Vec<RougeScores> = references
        .iter()
        .map(|r| rouge(generated, r.as_ref()))
        .collect();
    let mut best_reference = 0;
    for (i, s) in per_ref.iter().enumerate().skip(1) {
        // strict: ties keep the earlier reference
        if s.r1_f1() > per_ref[best_reference].r1_f1() {
            best_reference = i;
        }
    }
    Ok(MultiReference {
        mean_of_mean: RougeScores::mean(&per_ref).expect("non-empty"),
        mean_of_best: per_ref[best_reference],
        best_reference,
    })
}

/// Upper bucket edges; the last bucket is open-ended.
pub const BUCKET_EDGES: [usize; 4] = [512, 1024, 2048, 4096];

/// Index into `[0,512], (512,1024], (1024,2048], (2048,4096], (4096,inf)`.
pub fn bucket_index(tokens: usize) -> usize {
    BUCKET_EDGES
        .iter()
        .position(|&edge| tokens <= edge)
        .unwrap_or(BUCKET_EDGES.len())
}

pub fn bucket_label(index: usize) -> String {
    match index {
        0 => format!("[0, {}]", BUCKET_EDGES[0]),
        i if i < BUCKET_EDGES.len() => format!("({}, {}]", BUCKET_EDGES[i - 1], BUCKET_EDGES[i]),
        _ => format!("({}, inf)", BUCKET_EDGES[BUCKET_EDGES.len() - 1]),
    }
}

pub fn bucket_count() -> usize {
    BUCKET_EDGES.len() + 1
}

/// Seeded uniform draw of one training target index per generated summary.
pub fn random_pairing(n_generated: usize, n_targets: usize, seed: u64) -> Vec<usize> {
    assert!(n_targets > 0, "need at least one training target");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_generated)
        .map(|_| rng.random_range(0..n_targets))
        .collect()
}

/// Each generated summary scored against a random training target, averaged.
pub fn baseline_training_random<G: AsRef<str>, T: AsRef<str>>(
    generated: &[G],
    training_targets: &[T],
    seed: u64,
) -> Result<RougeScores, MetricsError> {
    if training_targets.is_empty() {
        return Err(MetricsError::NoTrainingTargets);
    }
    if generated.is_empty() {
        return Err(MetricsError::NothingToScore);
    }
    let pairing = random_pairing(generated.len(), training_targets.len(), seed);
    let scores: Vec<RougeScores> = generated
        .iter()
        .zip(pairing)
        .map(|(g, t)| rouge(g.as_ref(), training_targets[t].as_ref()))
        .collect();
    Ok(RougeScores::mean(&scores).expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LooBaseline {
    pub mean_of_mean: RougeScores,
    pub mean_of_best: RougeScores,
    pub conversations_scored: usize,
    pub conversations_skipped: usize,
}

/// Each reference in turn plays the generated summary against the others;
/// averaged per conversation, then across conversations. Conversations with
/// fewer than two references are skipped.
pub fn baseline_reference_loo<S: AsRef<str>>(
    refs_by_conv: &[Vec<S>],
) -> Result<LooBaseline, MetricsError> {
    let mut mom = Vec::new();
    let mut mob = Vec::new();
    let mut skipped = 0;
    for refs in refs_by_conv {
        if refs.len() < 2 {
            skipped += 1;
            continue;
        }
        let mut conv_mom = Vec::with_capacity(refs.len());
        let mut conv_mob = Vec::with_capacity(refs.len());
        for held_out in 0..refs.len() {
            let others: Vec<&str> = refs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != held_out)
                .map(|(_, r)| r.as_ref())
                .collect();
            let agg = aggregate_multi_reference(refs[held_out].as_ref(), &others)?;
            conv_mom.push(agg.mean_of_mean);
            conv_mob.push(agg.mean_of_best);
        }
        mom.push(RougeScores::mean(&conv_mom).expect("non-empty"));
        mob.push(RougeScores::mean(&conv_mob).expect("non-empty"));
    }
    if mom.is_empty() {
        return Err(MetricsError::NothingToScore);
    }
    Ok(LooBaseline {
        mean_of_mean: RougeScores::mean(&mom).expect("non-empty"),
        mean_of_best: RougeScores::mean(&mob).expect("non-empty"),
        conversations_scored: mom.len(),
        conversations_skipped: skipped,
    })
}

/// Token range covered by bucket `index` (inclusive upper edge).
pub fn bucket_range(index: usize) -> Range<usize> {
    let lo = if index == 0 {
        0
    } else {
        BUCKET_EDGES[index - 1] + 1
    };
    let hi = BUCKET_EDGES.get(index).map_or(usize::MAX, |&e| e + 1);
    lo..hi
}
