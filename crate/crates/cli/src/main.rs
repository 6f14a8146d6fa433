//! `argus` — answer a question against a corpus by defeasible reasoning,
//! compare arguments by specificity, check norms in standard deontic logic,
//! and train/apply the case-based re-ranker.
//!
//! Exit codes: 0 success (even with zero answers), 1 usage error, 2
//! input-format error, 3 resource-bound error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use argus_core::cbr::{
    self, feature_usage, interaction_curve, rank, synthetic, train_bagged_trees, CaseBase,
    CasePair, CbrError, Label, TrainConfig,
};
use argus_core::deontic::{norm_status, parse_modal, DeonticError, ModalFormula};
use argus_core::derivation::DeriveError;
use argus_core::kb::{KbError, KnowledgeBase, Literal};
use argus_core::pipeline::{
    self, evaluate, load_corpus, load_dataset, PipelineConfig, PipelineError,
};
use argus_core::specificity::{warranted, SpecificityConfig, SpecificityError};
use argus_core::{FeatureVector, Ranker, Score};

#[derive(Parser)]
#[command(
    name = "argus",
    version,
    about = "Rational answer validation: defeasible argumentation, deontic norms, case-based ranking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Candidate passage limit.
    #[arg(long, global = true, default_value_t = 200)]
    limit: usize,
    /// Number of answers to return.
    #[arg(long, global = true, default_value_t = 5)]
    top: usize,
    /// RNG seed for everything seeded.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Show derivation trees.
    #[arg(long, global = true)]
    explain: bool,
    /// Emit JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a question against a JSONL corpus using the knowledge base.
    Answer {
        /// Knowledge base (.dkb).
        #[arg(long)]
        kb: PathBuf,
        /// Corpus file (JSONL, one passage per line).
        #[arg(long)]
        corpus: PathBuf,
        /// Ground query literal, e.g. 'flies(tom)'.
        #[arg(long)]
        query: String,
        /// Question text for retrieval; defaults to the query's tokens.
        #[arg(long)]
        question: Option<String>,
        /// Trained ranker model (JSON); a transparent heuristic otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Case base (JSON array of labeled cases) for the CBR features.
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// Evaluate a dataset of questions and emit an MRR/top-1 report.
    Eval {
        /// Dataset file (JSON array of records).
        #[arg(long)]
        dataset: PathBuf,
        /// Background knowledge base applied to every question.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// Derive arguments for a literal and order them by specificity.
    SpecCompare {
        /// Knowledge base (.dkb).
        kb_file: PathBuf,
        /// Ground query literal.
        literal: String,
    },
    /// Standard deontic logic (K + seriality).
    Deontic {
        #[command(subcommand)]
        command: DeonticCommand,
    },
    /// Case-based reasoning over labeled cases.
    Cbr {
        #[command(subcommand)]
        command: CbrCommand,
    },
    /// Train or apply the bagged-tree re-ranker.
    Rank {
        #[command(subcommand)]
        command: RankCommand,
    },
}

#[derive(Subcommand)]
enum DeonticCommand {
    /// Evaluate norms against facts and report per-norm status.
    Check {
        /// Norm formulas, one per line ('%' comments).
        #[arg(long)]
        norms: PathBuf,
        /// Actual-world facts: one `atom` or `~atom` per line.
        #[arg(long)]
        facts: PathBuf,
        /// Non-modal background formulas, one per line.
        #[arg(long)]
        background: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CbrCommand {
    /// k-NN classification of an unlabeled (question, candidate) pair.
    Classify {
        /// Case base: JSON array of labeled cases.
        #[arg(long)]
        base: PathBuf,
        /// Query: JSON object {question, candidate}.
        #[arg(long)]
        query: PathBuf,
        #[arg(short, long, default_value_t = 3)]
        k: usize,
    },
    /// User-interaction simulation on a seeded separable synthetic stream.
    Curve {
        /// Checkpoint case counts.
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 50, 100, 200])]
        checkpoints: Vec<usize>,
        /// Stream length.
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(short, long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum RankCommand {
    /// Train the ensemble on labeled feature vectors.
    Train {
        /// Samples: JSON array of {features: {...}, label: "correct"|"incorrect"}.
        #[arg(long)]
        samples: PathBuf,
        /// Where to write the model (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Ensemble size.
        #[arg(long, default_value_t = 10)]
        trees: usize,
    },
    /// Score and order candidate feature vectors with a trained model.
    Apply {
        #[arg(long)]
        model: PathBuf,
        /// Candidates: JSON array of feature objects.
        #[arg(long)]
        candidates: PathBuf,
    },
}

// -------------------------------------------------------------------------
// Error-to-exit-code mapping.
// -------------------------------------------------------------------------

enum CliError {
    Usage(String),
    Input(String),
    Resource(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Resource(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Resource(m) => m,
        }
    }
}

impl From<KbError> for CliError {
    fn from(e: KbError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<DeonticError> for CliError {
    fn from(e: DeonticError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<CbrError> for CliError {
    fn from(e: CbrError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<DeriveError> for CliError {
    fn from(e: DeriveError) -> CliError {
        match e {
            DeriveError::NonGroundInput { .. } => CliError::Input(e.to_string()),
            _ => CliError::Resource(e.to_string()),
        }
    }
}

impl From<SpecificityError> for CliError {
    fn from(e: SpecificityError) -> CliError {
        match e {
            SpecificityError::UniverseTooLarge { .. } => CliError::Resource(e.to_string()),
            SpecificityError::Derive(inner) => inner.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> CliError {
        match e {
            PipelineError::InvalidConfig { .. } => CliError::Usage(e.to_string()),
            PipelineError::Specificity(inner) => inner.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = PipelineConfig {
        candidate_limit: cli.limit,
        top_k: cli.top,
        seed: cli.seed,
        ..PipelineConfig::default()
    };
    match cli.command {
        Command::Answer {
            kb,
            corpus,
            query,
            question,
            model,
            base,
        } => cmd_answer(
            &kb,
            &corpus,
            &query,
            question.as_deref(),
            model,
            base,
            &config,
            cli.explain,
            cli.json,
        ),
        Command::Eval {
            dataset,
            kb,
            model,
            base,
        } => cmd_eval(&dataset, kb, model, base, &config, cli.json),
        Command::SpecCompare { kb_file, literal } => {
            cmd_spec_compare(&kb_file, &literal, cli.explain, cli.json)
        }
        Command::Deontic { command } => match command {
            DeonticCommand::Check {
                norms,
                facts,
                background,
            } => cmd_deontic_check(&norms, &facts, background.as_deref(), cli.json),
        },
        Command::Cbr { command } => match command {
            CbrCommand::Classify { base, query, k } => cmd_cbr_classify(&base, &query, k, cli.json),
            CbrCommand::Curve {
                checkpoints,
                cases,
                k,
            } => cmd_cbr_curve(&checkpoints, cases, k, cli.seed, cli.json),
        },
        Command::Rank { command } => match command {
            RankCommand::Train {
                samples,
                out,
                trees,
            } => cmd_rank_train(&samples, &out, trees, cli.seed),
            RankCommand::Apply { model, candidates } => {
                cmd_rank_apply(&model, &candidates, cli.json)
            }
        },
    }
}

fn load_kb(path: &Path) -> Result<KnowledgeBase, CliError> {
    let text = read_file(path)?;
    let (kb, warnings) = KnowledgeBase::parse_with_warnings(&text)?;
    for warning in warnings {
        eprintln!("{}: warning: {warning}", path.display());
    }
    Ok(kb)
}

fn load_case_base(path: &Path) -> Result<CaseBase, CliError> {
    let text = read_file(path)?;
    let base: CaseBase = parse_json(path, &text)?;
    for case in base.iter() {
        case.question.validate()?;
        case.candidate.validate()?;
    }
    Ok(base)
}

fn load_ranker(path: &Path) -> Result<Ranker, CliError> {
    let text = read_file(path)?;
    parse_json(path, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_answer(
    kb_path: &Path,
    corpus_path: &Path,
    query: &str,
    question: Option<&str>,
    model: Option<PathBuf>,
    base: Option<PathBuf>,
    config: &PipelineConfig,
    explain: bool,
    json: bool,
) -> Result<(), CliError> {
    let kb = load_kb(kb_path)?;
    let corpus = load_corpus(&read_file(corpus_path)?)?;
    let query = Literal::parse(query)?;
    let question = question.map(str::to_string).unwrap_or_else(|| {
        let mut text = query.predicate.clone();
        for term in &query.args {
            let _ = write!(text, " {}", term.name());
        }
        text
    });
    let case_base = base.map(|p| load_case_base(&p)).transpose()?;
    let ranker = model.map(|p| load_ranker(&p)).transpose()?;

    let output = pipeline::answer::<Score>(
        &query,
        &question,
        &corpus,
        &kb,
        case_base.as_ref(),
        ranker.as_ref(),
        config,
    )?;

    if json {
        let value = json!({
            "query": query.to_string(),
            "question": question,
            "answers": output.answers,
            "dropped": output.dropped,
        });
        println!("{}", serde_json::to_string_pretty(&value).unwrap());
        return Ok(());
    }
    if output.answers.is_empty() {
        println!("no answers (no passage matched the question)");
    }
    for (i, item) in output.answers.iter().enumerate() {
        println!(
            "#{} [{}] {} (score {:.3})",
            i + 1,
            item.passage_id,
            item.answer,
            item.score
        );
        if explain {
            for node in &item.explanation {
                print!("{}", render_tree(node, 2));
            }
        }
    }
    for dropped in &output.dropped {
        eprintln!("dropped {}: {}", dropped.passage_id, dropped.reason);
    }
    Ok(())
}

fn render_tree(node: &argus_core::derivation::TreeNode, indent: usize) -> String {
    let mut out = format!(
        "{:indent$}{}  [{}]\n",
        "",
        node.literal,
        node.rule_kind,
        indent = indent
    );
    for child in &node.children {
        out.push_str(&render_tree(child, indent + 2));
    }
    out
}

fn cmd_eval(
    dataset_path: &Path,
    kb: Option<PathBuf>,
    model: Option<PathBuf>,
    base: Option<PathBuf>,
    config: &PipelineConfig,
    json: bool,
) -> Result<(), CliError> {
    let dataset = load_dataset(&read_file(dataset_path)?)?;
    let dataset_dir = dataset_path.parent().unwrap_or(Path::new("."));
    let mut corpora = BTreeMap::new();
    for record in &dataset {
        if !corpora.contains_key(&record.corpus_ref) {
            let corpus_path = dataset_dir.join(&record.corpus_ref);
            corpora.insert(
                record.corpus_ref.clone(),
                load_corpus(&read_file(&corpus_path)?)?,
            );
        }
    }
    let kb = kb.map(|p| load_kb(&p)).transpose()?.unwrap_or_default();
    let case_base = base.map(|p| load_case_base(&p)).transpose()?;
    let ranker = model.map(|p| load_ranker(&p)).transpose()?;

    let (report, timings) = evaluate::<Score>(
        &dataset,
        &corpora,
        &kb,
        case_base.as_ref(),
        ranker.as_ref(),
        config,
    )?;

    if json {
        // stdout carries exactly the report, which is byte-deterministic
        println!("{}", serde_json::to_string(&report).unwrap());
        eprintln!(
            "timings: retrieval {:.1} ms, reasoning {:.1} ms, ranking {:.1} ms",
            timings.retrieval_ms, timings.reasoning_ms, timings.ranking_ms
        );
        return Ok(());
    }
    println!("questions: {}", report.questions);
    println!("mrr: {:.4}", report.mrr);
    println!("top-1 accuracy: {:.4}", report.top1_accuracy);
    println!("stage order: {}", report.stage_order.join(" -> "));
    println!(
        "timings: retrieval {:.1} ms, reasoning {:.1} ms, ranking {:.1} ms",
        timings.retrieval_ms, timings.reasoning_ms, timings.ranking_ms
    );
    println!("{:<40} {:>6} TOP ANSWER", "QUESTION", "RANK");
    for query in &report.per_query {
        let rank = query
            .first_correct_rank
            .map(|r| r.to_string())
            .unwrap_or_else(|| "-".to_string());
        let top = query
            .answers
            .first()
            .map(|a| format!("{} ({})", a.passage_id, a.verdict))
            .unwrap_or_else(|| "-".to_string());
        println!("{:<40} {:>6} {}", truncate(&query.question, 40), rank, top);
    }
    Ok(())
}

fn truncate(text: &str, width: usize) -> String {
    if text.chars().count() <= width {
        text.to_string()
    } else {
        let cut: String = text.chars().take(width - 1).collect();
        format!("{cut}…")
    }
}

fn cmd_spec_compare(
    kb_path: &Path,
    literal: &str,
    explain: bool,
    json: bool,
) -> Result<(), CliError> {
    let kb = load_kb(kb_path)?;
    let query = Literal::parse(literal)?;
    let outcome = warranted(&kb, &query, &SpecificityConfig::default())?;

    let labels: Vec<String> = (0..outcome.pro.len())
        .map(|i| format!("pro{}", i + 1))
        .chain((0..outcome.con.len()).map(|i| format!("con{}", i + 1)))
        .collect();
    let args: Vec<&argus_core::derivation::Argument> =
        outcome.pro.iter().chain(outcome.con.iter()).collect();

    if json {
        let matrix: Vec<Vec<String>> = (0..args.len())
            .map(|i| {
                (0..args.len())
                    .map(|j| format!("{:?}", outcome.matrix.at(i, j)))
                    .collect()
            })
            .collect();
        let value = json!({
            "query": query.to_string(),
            "verdict": outcome.verdict,
            "arguments": args
                .iter()
                .zip(&labels)
                .map(|(arg, label)| json!({
                    "label": label,
                    "conclusion": arg.conclusion().to_string(),
                    "uses_defeasible": arg.uses_defeasible(),
                    "tree": arg.tree().to_json_node(),
                }))
                .collect::<Vec<_>>(),
            "matrix": matrix,
        });
        println!("{}", serde_json::to_string_pretty(&value).unwrap());
        return Ok(());
    }

    println!("verdict: {}", outcome.verdict);
    for (arg, label) in args.iter().zip(&labels) {
        let kind = if arg.uses_defeasible() {
            "defeasible"
        } else {
            "strict"
        };
        println!("{label}: {} ({kind})", arg.conclusion());
        if explain {
            print!("{}", indent_lines(&arg.tree().render_indented(), 2));
        }
    }
    if !args.is_empty() {
        let width = labels.iter().map(String::len).max().unwrap().max(4);
        print!("{:width$}", "", width = width + 1);
        for label in &labels {
            print!(" {label:>14}");
        }
        println!();
        for (i, row_label) in labels.iter().enumerate() {
            print!("{row_label:<width$} ", width = width + 1);
            for j in 0..labels.len() {
                print!(" {:>14}", format!("{:?}", outcome.matrix.at(i, j)));
            }
            println!();
        }
    }
    Ok(())
}

fn indent_lines(text: &str, indent: usize) -> String {
    text.lines()
        .map(|line| format!("{:indent$}{line}\n", "", indent = indent))
        .collect()
}

fn parse_formula_file(path: &Path) -> Result<Vec<ModalFormula>, CliError> {
    let text = read_file(path)?;
    let mut formulas = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let formula = parse_modal(line)
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        formulas.push(formula);
    }
    Ok(formulas)
}

fn parse_facts_file(path: &Path) -> Result<BTreeMap<String, bool>, CliError> {
    let text = read_file(path)?;
    let mut facts = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let position =
            |e: DeonticError| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1));
        match parse_modal(line).map_err(position)? {
            ModalFormula::Atom(atom) => facts.insert(atom, true),
            ModalFormula::Not(inner) => match *inner {
                ModalFormula::Atom(atom) => facts.insert(atom, false),
                other => {
                    return Err(CliError::Input(format!(
                        "{}:{}: expected an atom or a negated atom, found ~({other})",
                        path.display(),
                        i + 1
                    )))
                }
            },
            other => {
                return Err(CliError::Input(format!(
                    "{}:{}: expected an atom or a negated atom, found {other}",
                    path.display(),
                    i + 1
                )))
            }
        };
    }
    Ok(facts)
}

fn cmd_deontic_check(
    norms_path: &Path,
    facts_path: &Path,
    background_path: Option<&Path>,
    json: bool,
) -> Result<(), CliError> {
    let norms = parse_formula_file(norms_path)?;
    let facts = parse_facts_file(facts_path)?;
    let background = background_path
        .map(parse_formula_file)
        .transpose()?
        .unwrap_or_default();
    let report = norm_status(&norms, &background, &facts)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        print!("{}", report.to_table());
        println!("{}", serde_json::to_string(&report).unwrap());
    }
    Ok(())
}

fn cmd_cbr_classify(
    base_path: &Path,
    query_path: &Path,
    k: usize,
    json: bool,
) -> Result<(), CliError> {
    let base = load_case_base(base_path)?;
    let text = read_file(query_path)?;
    let query: CasePair = parse_json(query_path, &text)?;
    query.question.validate()?;
    query.candidate.validate()?;
    let (label, confidence) = cbr::classify::<Score>(&base, &query.question, &query.candidate, k)?;
    if json {
        println!(
            "{}",
            json!({ "label": label, "confidence": confidence, "k": k, "cases": base.len() })
        );
    } else {
        let label = match label {
            Label::Correct => "correct",
            Label::Incorrect => "incorrect",
        };
        println!(
            "{label} (confidence {confidence:.3}, k = {k}, cases = {})",
            base.len()
        );
    }
    Ok(())
}

fn cmd_cbr_curve(
    checkpoints: &[usize],
    cases: usize,
    k: usize,
    seed: u64,
    json: bool,
) -> Result<(), CliError> {
    let stream = synthetic::separable_case_stream(cases, seed);
    let points = interaction_curve::<Score>(&stream, checkpoints, k)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&points).unwrap());
        return Ok(());
    }
    println!(
        "{:>8} {:>10} {:>12} {:>12}",
        "CASES", "OVERALL", "ON-CORRECT", "ON-INCORRECT"
    );
    for point in &points {
        let fmt = |v: Option<Score>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>8} {:>10.3} {:>12} {:>12}",
            point.cases,
            point.overall,
            fmt(point.on_correct),
            fmt(point.on_incorrect)
        );
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct RankSample {
    features: FeatureVector,
    label: Label,
}

fn cmd_rank_train(
    samples_path: &Path,
    out_path: &Path,
    trees: usize,
    seed: u64,
) -> Result<(), CliError> {
    let text = read_file(samples_path)?;
    let raw: Vec<RankSample> = parse_json(samples_path, &text)?;
    let samples: Vec<(FeatureVector, Label)> =
        raw.into_iter().map(|s| (s.features, s.label)).collect();
    let trained = train_bagged_trees(
        &samples,
        &TrainConfig {
            n_trees: trees,
            seed,
            ..TrainConfig::default()
        },
    )?;
    for warning in &trained.warnings {
        eprintln!("warning: {warning}");
    }
    write_file(
        out_path,
        &serde_json::to_string_pretty(&trained.ranker).unwrap(),
    )?;
    let usage = feature_usage(&trained.ranker);
    println!(
        "trained {} trees on {} samples over features [{}]",
        trained.ranker.n_trees(),
        samples.len(),
        trained.ranker.feature_names().join(", ")
    );
    for (feature, share) in usage {
        println!("  split share {feature}: {share:.3}");
    }
    println!("model written to {}", out_path.display());
    Ok(())
}

fn cmd_rank_apply(model_path: &Path, candidates_path: &Path, json: bool) -> Result<(), CliError> {
    let ranker = load_ranker(model_path)?;
    let text = read_file(candidates_path)?;
    let candidates: Vec<FeatureVector> = parse_json(candidates_path, &text)?;
    let ranked = rank(&ranker, &candidates)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&ranked).unwrap());
        return Ok(());
    }
    println!("{:>6} {:>10} {:>8}", "RANK", "CANDIDATE", "SCORE");
    for (position, entry) in ranked.iter().enumerate() {
        println!(
            "{:>6} {:>10} {:>8.4}",
            position + 1,
            entry.index,
            entry.score
        );
    }
    Ok(())
}
