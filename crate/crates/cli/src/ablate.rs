//! Header-size ablation for multistage chunking.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use medsum_core::backends::Summarizer;
use medsum_core::metrics::{aggregate_multi_reference, RougeScores};
use medsum_core::pipeline::{Mode, Pipeline, RunConfig, RunOutcome};
use medsum_core::{Conversation, SummaryRecord};
use serde::{Deserialize, Serialize};

pub const DEFAULT_FRACTIONS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConversation {
    pub conv_id: String,
    pub stage1_pieces: usize,
    /// Stage-2 input size before truncation.
    pub stage2_input_tokens: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub header_fraction: f64,
    pub header_budget_words: usize,
    pub conversations: usize,
    pub failures: usize,
    pub stage1_pieces: usize,
    pub mean_stage2_input_tokens: f64,
    pub truncated: usize,
    pub truncated_percent: f64,
    /// Mean-of-best ROUGE over conversations with references.
    pub rouge: Option<RougeScores>,
    pub per_conversation: Vec<AblationConversation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub stage2_token_limit: usize,
    pub rows: Vec<AblationRow>,
}

/// Runs multistage chunking once per header fraction. `base` supplies the
/// backends and every other setting; its mode is forced to chunking.
pub fn run_ablation(
    convs: &[&Conversation],
    base: &RunConfig,
    fractions: &[f64],
    stage1: &dyn Summarizer,
    stage2: &dyn Summarizer,
    references: &BTreeMap<String, Vec<SummaryRecord>>,
) -> Result<(AblationReport, Vec<(RunConfig, RunOutcome)>)> {
    if fractions.is_empty() {
        bail!("no header fractions given");
    }
    let Some(s2) = &base.stage2_backend else {
        bail!("ablation needs a stage-2 backend")
    };
    let limit = s2.token_limit;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &fraction in fractions {
        let mut cfg = base.clone();
        cfg.mode = Mode::MultistageChunking;
        cfg.chunk_cfg = cfg.chunk_cfg.with_header_fraction(fraction);
        cfg.run_id = format!("header-{}", percent_label(fraction));
        let outcome = Pipeline::new(&cfg, stage1, Some(stage2))?.run(convs);
        rows.push(row(&cfg, &outcome, references));
        runs.push((cfg, outcome));
    }
    Ok((
        AblationReport {
            stage2_token_limit: limit,
            rows,
        },
        runs,
    ))
}

fn row(
    cfg: &RunConfig,
    outcome: &RunOutcome,
    references: &BTreeMap<String, Vec<SummaryRecord>>,
) -> AblationRow {
    let per_conversation: Vec<AblationConversation> = outcome
        .generations
        .iter()
        .map(|g| AblationConversation {
            conv_id: g.record.conv_id.clone(),
            stage1_pieces: g.pieces.len(),
            stage2_input_tokens: g.final_input_tokens,
            truncated: g.final_input_truncated,
        })
        .collect();
    let n = per_conversation.len();
    let truncated = per_conversation.iter().filter(|c| c.truncated).count();
    let scores: Vec<RougeScores> = outcome
        .generations
        .iter()
        .filter_map(|g| {
            let refs = references.get(&g.record.conv_id)?;
            let texts: Vec<&str> = refs.iter().map(|r| r.text.as_str()).collect();
            aggregate_multi_reference(&g.record.text, &texts)
                .ok()
                .map(|a| a.mean_of_best)
        })
        .collect();
    AblationRow {
        header_fraction: cfg.chunk_cfg.header_fraction,
        header_budget_words: cfg.chunk_cfg.header_budget(),
        conversations: n,
        failures: outcome.failures.len(),
        stage1_pieces: per_conversation.iter().map(|c| c.stage1_pieces).sum(),
        mean_stage2_input_tokens: if n == 0 {
            0.0
        } else {
            per_conversation
                .iter()
                .map(|c| c.stage2_input_tokens as f64)
                .sum::<f64>()
                / n as f64
        },
        truncated,
        truncated_percent: if n == 0 {
            0.0
        } else {
            100.0 * truncated as f64 / n as f64
        },
        rouge: RougeScores::mean(&scores),
        per_conversation,
    }
}

pub fn percent_label(fraction: f64) -> String {
    format!("{}", (fraction * 100.0).round() as i64)
}

pub fn render_ablation(report: &AblationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>7} {:>8} {:>10} {:>13} {:>7} {:>7} {:>7}",
        "Header", "Convs", "Pieces", "Stage-2 tk", "Truncated (%)", "R-1", "R-2", "R-L"
    );
    for r in &report.rows {
        let (r1, r2, rl) = match &r.rouge {
            Some(s) => (
                format!("{:.4}", s.r1_f1()),
                format!("{:.4}", s.r2_f1()),
                format!("{:.4}", s.rl_f1()),
            ),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{:<8} {:>7} {:>8} {:>10.1} {:>13.1} {:>7} {:>7} {:>7}",
            format!("{}%", percent_label(r.header_fraction)),
            r.conversations,
            r.stage1_pieces,
            r.mean_stage2_input_tokens,
            r.truncated_percent,
            r1,
            r2,
            rl
        );
    }
    let _ = writeln!(out, "stage-2 token limit: {}", report.stage2_token_limit);
    out
}
