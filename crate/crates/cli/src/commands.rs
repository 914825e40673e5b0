//! One function per subcommand.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use medsum_core::backends::conformance::run_conformance;
use medsum_core::backends::{
    BackendDescriptor, MockKind, MockSummarizer, SummarizeRequest, SummarizeResponse,
};
use medsum_core::dataset::{
    corpus_stats, export_finetune_dataset, render_stats, select_target_reference, ExportConfig,
    Split,
};
use medsum_core::metrics::{
    evaluate, rater_agreement, render_table, ConceptExtractor, EvalInput, Lexicon,
};
use medsum_core::pipeline::{read_generated, read_run_config, write_run_dir, Pipeline, RunConfig};
use medsum_core::synthetic::{generate, SyntheticConfig};
use medsum_core::Method;
use serde_json::json;

use crate::ablate::{render_ablation, run_ablation};
use crate::config::{open_backend, CliConfig, EmbedderConfig};
use crate::{Cli, Command, EXIT_PARTIAL};

pub fn dispatch(cli: &Cli, cfg: &CliConfig) -> Result<i32> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::BuildData(a) => build_data(cfg, a),
        Command::Infer(a) => infer(cli, cfg, a),
        Command::Eval(a) => eval(cfg, a),
        Command::AblateHeader(a) => ablate_header(cli, cfg, a),
        Command::Stats(a) => stats(cfg, a),
        Command::Agreement(a) => agreement(a),
        Command::ServeMock(a) => serve_mock(cfg, a),
        Command::Conformance(a) => conformance(cfg, a),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Config written next to a synthetic corpus. The hashing embedder's
/// sentence-to-window cosines rarely exceed 0.6, so the demo lowers the
/// alignment threshold.
fn demo_config() -> serde_json::Value {
    json!({
        "conversations": "conversations.jsonl",
        "references": "references.jsonl",
        "splits": "splits.json",
        "lexicon": "lexicon.json",
        "embedder": {"kind": "hashing"},
        "align": {"similarity_threshold": 0.35},
        "stage1_backend": {"kind": "builtin-mock", "endpoint": "keyword:w60"},
        "stage2_backend": {"kind": "builtin-mock", "endpoint": "keyword:w150"},
        "output_dir": "runs",
    })
}

fn synth(a: &crate::SynthArgs) -> Result<i32> {
    let corpus = generate(&SyntheticConfig {
        conversations: a.count,
        long_fraction: a.long_fraction,
        seed: a.seed,
        ..Default::default()
    });
    corpus
        .write(&a.out, a.seed)
        .with_context(|| format!("writing {}", a.out.display()))?;
    write_json(&a.out.join("medsum.json"), &demo_config())?;
    println!(
        "wrote {} conversations and {} references to {}",
        corpus.conversations.len(),
        corpus.references.len(),
        a.out.display()
    );
    Ok(0)
}

fn extractor_or_empty(cfg: &CliConfig, lexicon: Option<&Lexicon>) -> Box<dyn ConceptExtractor> {
    cfg.extractor(lexicon)
        .unwrap_or_else(|| Box::new(Lexicon::empty()))
}

fn build_data(cfg: &CliConfig, a: &crate::BuildDataArgs) -> Result<i32> {
    let corpus = cfg.load_corpus()?;
    let lexicon = cfg.load_lexicon()?;
    let mut export = ExportConfig::new(a.method);
    export.chunk_cfg = cfg.chunk.clone();
    export.align_cfg = cfg.align.clone();
    export.tokenizer = cfg.tokenizer;
    if let Some(f) = a.header_fraction {
        export.chunk_cfg.header_fraction = f;
    }
    if let Some(t) = a.threshold {
        export.align_cfg.similarity_threshold = t;
    }
    let embedder = match &a.embedder {
        Some(s) => Some(EmbedderConfig::parse_short(s)?),
        None => cfg.embedder.clone(),
    };
    let embedder = match (a.method, embedder) {
        (Method::Sentbert, Some(e)) => Some(e.open()),
        (Method::Sentbert, None) => {
            bail!("embedding backend required for the sentbert method (pass --embedder or set `embedder`)")
        }
        _ => None,
    };
    let out = cfg.output_dir(a.out.as_deref(), &format!("data-{}", a.method))?;
    let extractor = extractor_or_empty(cfg, lexicon.as_ref());
    let manifest = export_finetune_dataset(
        &corpus,
        &export,
        extractor.as_ref(),
        embedder.as_deref(),
        &out,
    )?;
    println!(
        "{}: {} train / {} dev examples, {} skipped -> {}",
        a.method,
        manifest.counts.get("train_examples").copied().unwrap_or(0),
        manifest.counts.get("dev_examples").copied().unwrap_or(0),
        manifest.skipped.len(),
        out.display()
    );
    if let Some(rate) = manifest.sentence_drop_rate {
        println!("sentence drop rate: {:.1}%", rate * 100.0);
    }
    Ok(0)
}

fn backend_arg(
    flag: Option<&str>,
    configured: Option<&BackendDescriptor>,
    what: &str,
) -> Result<BackendDescriptor> {
    match flag {
        Some(s) => Ok(BackendDescriptor::parse_short(s)?),
        None => configured
            .cloned()
            .with_context(|| format!("no {what} backend (pass a flag or set it in the config)")),
    }
}

fn base_run_config(
    cfg: &CliConfig,
    mode: medsum_core::Mode,
    backend: Option<&str>,
    stage2: Option<&str>,
) -> Result<RunConfig> {
    let s1 = backend_arg(backend, cfg.stage1_backend.as_ref(), "stage-1")?;
    let s2 = if mode.is_multistage() {
        Some(backend_arg(stage2, cfg.stage2_backend.as_ref(), "stage-2")?)
    } else {
        None
    };
    let mut run = RunConfig::new(mode, s1, s2);
    run.chunk_cfg = cfg.chunk.clone();
    run.align_cfg = cfg.align.clone();
    run.tokenizer = cfg.tokenizer;
    run.gender_prefix = cfg.gender_prefix;
    run.stage1_max_new_tokens = cfg.stage1_max_new_tokens;
    run.stage2_max_new_tokens = cfg.stage2_max_new_tokens;
    run.seed = cfg.eval.seed;
    Ok(run)
}

fn infer(cli: &Cli, cfg: &CliConfig, a: &crate::InferArgs) -> Result<i32> {
    let corpus = cfg.load_corpus()?;
    let lexicon = cfg.load_lexicon()?;
    let mut run = base_run_config(
        cfg,
        a.mode,
        a.backend.as_deref(),
        a.stage2_backend.as_deref(),
    )?;
    if let Some(g) = a.gender {
        run.gender_prefix = Some(g);
    }
    if let Some(f) = a.header_fraction {
        run.chunk_cfg.header_fraction = f;
    }
    let out = cfg.output_dir(a.out.as_deref(), &format!("{}-{}", a.mode, a.split))?;
    run.output_dir = out.clone();

    let convs = corpus.in_split(a.split);
    if convs.is_empty() {
        bail!("split {} is empty", a.split);
    }
    let b1 = open_backend(&run.stage1_backend, lexicon.as_ref())?;
    let b2 = run
        .stage2_backend
        .as_ref()
        .map(|d| open_backend(d, lexicon.as_ref()))
        .transpose()?;
    let outcome = Pipeline::new(&run, b1.as_ref(), b2.as_deref())?.run(&convs);
    write_run_dir(&out, &run, &outcome)?;

    let limit = run
        .stage2_backend
        .as_ref()
        .unwrap_or(&run.stage1_backend)
        .token_limit;
    println!(
        "{}: {} summarized, {} failed; {:.1}% of final inputs over {limit} tokens -> {}",
        a.mode,
        outcome.generations.len(),
        outcome.failures.len(),
        100.0 * outcome.fraction_final_inputs_over(limit),
        out.display()
    );
    for f in &outcome.failures {
        eprintln!("failed {} ({:?}): {}", f.conv_id, f.stage, f.error);
    }
    Ok(if outcome.failures.is_empty() || cli.lenient {
        0
    } else {
        EXIT_PARTIAL
    })
}

fn eval(cfg: &CliConfig, a: &crate::EvalArgs) -> Result<i32> {
    let run =
        read_run_config(&a.run).with_context(|| format!("reading run {}", a.run.display()))?;
    let generated = read_generated(&a.run)?;
    let corpus = cfg.load_corpus()?;
    let lexicon = cfg.load_lexicon()?;
    let extractor = cfg.extractor(lexicon.as_ref());

    let mut opts = cfg.eval.clone();
    opts.buckets |= a.buckets;
    for b in &a.baselines {
        match b.as_str() {
            "training" => opts.baseline_training = true,
            "reference" => opts.baseline_reference = true,
            other => bail!("unknown baseline {other:?} (expected training or reference)"),
        }
    }
    let mut training_targets = Vec::new();
    if opts.baseline_training {
        let selector = extractor_or_empty(cfg, lexicon.as_ref());
        for conv in corpus.in_split(Split::Train) {
            let refs = corpus.references_for(conv.id());
            if !refs.is_empty() {
                training_targets.push(
                    select_target_reference(refs, selector.as_ref())?
                        .text
                        .clone(),
                );
            }
        }
    }
    let input = EvalInput {
        system: &run.run_id,
        generated: &generated,
        references: corpus.references(),
        conversations: corpus.conversations(),
        extractor: extractor.as_deref(),
        tokenizer: &run.tokenizer,
        training_targets: &training_targets,
    };
    let report = evaluate(&input, &opts)?;
    let table = render_table(&report);
    let out = a.out.clone().unwrap_or_else(|| a.run.clone());
    fs::create_dir_all(&out)?;
    write_json(&out.join("eval.json"), &report)?;
    fs::write(out.join("eval.txt"), &table)?;
    print!("{table}");
    Ok(0)
}

fn ablate_header(cli: &Cli, cfg: &CliConfig, a: &crate::AblateArgs) -> Result<i32> {
    let corpus = cfg.load_corpus()?;
    let lexicon = cfg.load_lexicon()?;
    let base = base_run_config(
        cfg,
        medsum_core::Mode::MultistageChunking,
        a.backend.as_deref(),
        a.stage2_backend.as_deref(),
    )?;
    let out: PathBuf = cfg.output_dir(a.out.as_deref(), &format!("ablate-header-{}", a.split))?;
    let convs = corpus.in_split(a.split);
    if convs.is_empty() {
        bail!("split {} is empty", a.split);
    }
    let b1 = open_backend(&base.stage1_backend, lexicon.as_ref())?;
    let b2 = open_backend(
        base.stage2_backend.as_ref().expect("multistage"),
        lexicon.as_ref(),
    )?;
    let (report, runs) = run_ablation(
        &convs,
        &base,
        &a.fractions,
        b1.as_ref(),
        b2.as_ref(),
        corpus.references(),
    )?;
    let mut failures = 0;
    for (run_cfg, outcome) in &runs {
        write_run_dir(&out.join(&run_cfg.run_id), run_cfg, outcome)?;
        failures += outcome.failures.len();
    }
    write_json(&out.join("ablation.json"), &report)?;
    let table = render_ablation(&report);
    fs::write(out.join("ablation.txt"), &table)?;
    print!("{table}");
    Ok(if failures == 0 || cli.lenient {
        0
    } else {
        EXIT_PARTIAL
    })
}

fn stats(cfg: &CliConfig, a: &crate::StatsArgs) -> Result<i32> {
    let corpus = cfg.load_corpus()?;
    let stats = corpus_stats(&corpus, &cfg.tokenizer, &cfg.stats, a.split);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        print!("{}", render_stats(&stats));
    }
    Ok(0)
}

/// Parses `a b` / `a,b` pairs, skipping blank lines and `#` comments.
pub fn parse_score_pairs(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let [x, y] = fields[..] else {
            bail!("line {}: expected two scores, got {:?}", i + 1, line);
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .with_context(|| format!("line {}: bad score {s:?}", i + 1))
        };
        a.push(parse(x)?);
        b.push(parse(y)?);
    }
    Ok((a, b))
}

fn agreement(a: &crate::AgreementArgs) -> Result<i32> {
    let text =
        fs::read_to_string(&a.scores).with_context(|| format!("reading {}", a.scores.display()))?;
    let (x, y) = parse_score_pairs(&text)?;
    let g = rater_agreement(&x, &y)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&g)?);
    } else {
        let show = |v: f64, ok: bool| {
            if ok {
                format!("{v:.4}")
            } else {
                "undefined".to_string()
            }
        };
        println!("pairs:   {}", g.n);
        println!("pearson: {}", show(g.pearson_rho, g.pearson_defined));
        println!("kendall: {}", show(g.kendall_tau_b, g.kendall_defined));
        println!("kappa:   {}", show(g.cohens_kappa, g.kappa_defined));
    }
    Ok(0)
}

/// Answers one request line; malformed lines get an `error` object.
fn serve_line(mock: &MockSummarizer, line: &str) -> serde_json::Value {
    match serde_json::from_str::<SummarizeRequest>(line) {
        Ok(req) => serde_json::to_value(SummarizeResponse {
            summary: mock.summarize(&req.input, req.prefix.as_deref()),
            id: req.id,
        })
        .expect("response serializes"),
        Err(e) => json!({ "error": format!("bad request: {e}") }),
    }
}

fn serve_mock(cfg: &CliConfig, a: &crate::ServeMockArgs) -> Result<i32> {
    let lexicon = cfg.load_lexicon()?;
    let kind = MockKind::parse(&a.spec)?;
    let mock = MockSummarizer::new(BackendDescriptor::mock(&a.spec), kind, lexicon)?;
    let stdin = io::stdin();
    let mut out = BufWriter::new(io::stdout().lock());
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        serde_json::to_writer(&mut out, &serve_line(&mock, &line))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(0)
}

fn conformance(cfg: &CliConfig, a: &crate::ConformanceArgs) -> Result<i32> {
    let lexicon = cfg.load_lexicon()?;
    let desc = BackendDescriptor::parse_short(&a.backend)?;
    let backend = open_backend(&desc, lexicon.as_ref())?;
    let report = run_conformance(backend.as_ref());
    for c in &report.checks {
        let status = if c.passed { "ok  " } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{status} {}", c.name);
        } else {
            println!("{status} {}: {}", c.name, c.detail);
        }
    }
    if !report.all_passed() {
        bail!("backend failed conformance");
    }
    Ok(0)
}
