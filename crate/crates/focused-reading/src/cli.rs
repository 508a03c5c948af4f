//! Command-line pipeline: `focusread` wires corpus synthesis, indexing,
//! pair splitting, training, search, and the evaluation suite into one
//! binary with shared seed threading.
//!
//! Every subcommand that writes a file also writes a `*.manifest.json`
//! sidecar recording the tool version, resolved flags, input digests, and
//! master seed; a run that writes no files prints its manifest to stderr
//! instead. Exit codes: 0 success, 1 usage error, 2 data or validation
//! error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{
    generate_corpus, load_corpus, save_corpus, Corpus, CorpusProfile, DocId, EntityPair,
    ParticipantId,
};
use crate::engine::{IterationRecord, QueryStrategy, SearchResult, DEFAULT_MAX_ITERATIONS};
use crate::error::Error;
use crate::eval::{
    ablate, bootstrap_test, evaluate, failure_breakdown, load_pairs, render_ablation,
    render_bootstrap, render_comparison, render_failures, run_episodes, save_ablation, save_pairs,
    split_pairs, standard_ablation_variants, BootstrapSummary, EvalConfig, EvalReport,
    FailureCause,
};
use crate::extraction::NoiseModel;
use crate::index::{build_index, MentionIndex};
use crate::manifest::RunManifest;
use crate::policy::{train, FeatureGroup, Hyperparams, PolicyModel};
use crate::seeds;

/// Environment variable naming the directory where default artifact paths
/// live. Only paths may be defaulted this way — never seeds or
/// hyperparameters.
pub const DATA_DIR_ENV: &str = "FOCUSREAD_DATA_DIR";

fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve(path: &Option<PathBuf>, default_name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| data_dir().join(default_name))
}

fn flag(name: &str, value: impl Display) -> String {
    format!("--{name}={value}")
}

/// Usage problems exit 1; data problems exit 2.
enum RunError {
    Usage(String),
    Data(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Data(e)
    }
}

type RunResult<T> = Result<T, RunError>;

#[derive(Parser)]
#[command(
    name = "focusread",
    version,
    about = "Focused reading: targeted retrieval over a synthetic literature corpus",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a corpus with a known ground-truth interaction graph.
    Generate(GenerateArgs),
    /// Build the boolean mention index for a corpus.
    Index(IndexArgs),
    /// Sample disjoint train/eval query pairs from the reachable pairs.
    SplitPairs(SplitPairsArgs),
    /// Train the explore/exploit query policy.
    Train(TrainArgs),
    /// Run one focused-reading episode and print the result.
    Search(SearchArgs),
    /// Evaluate a strategy over a pair list and write a report.
    Evaluate(EvaluateArgs),
    /// Evaluate baseline and policy on the same pairs, then bootstrap.
    Compare(CompareArgs),
    /// Retrain with each feature group dropped and evaluate every variant.
    Ablate(AblateArgs),
    /// Run episodes under a lossy reader and classify every failure.
    Failures(FailuresArgs),
    /// Record one episode's full per-iteration trace as JSON.
    Trace(TraceArgs),
}

/// Parse and run, returning the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(RunError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(RunError::Data(err)) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn run(command: Command) -> RunResult<()> {
    match command {
        Command::Generate(args) => run_generate(args),
        Command::Index(args) => run_index(args),
        Command::SplitPairs(args) => run_split_pairs(args),
        Command::Train(args) => run_train(args),
        Command::Search(args) => run_search(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Compare(args) => run_compare(args),
        Command::Ablate(args) => run_ablate(args),
        Command::Failures(args) => run_failures(args),
        Command::Trace(args) => run_trace(args),
    }
}

// ---------------------------------------------------------------------------
// Shared argument blocks

#[derive(Args, Clone)]
struct CorpusIndexArgs {
    /// Corpus file [default: corpus.jsonl under the data directory].
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Mention index file; built in memory from the corpus when omitted.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Cap each query's result list at the first N doc ids, like the
    /// result pages of a production retrieval system [default: unlimited].
    #[arg(long)]
    retrieval_limit: Option<usize>,
}

impl CorpusIndexArgs {
    fn load(&self, manifest: &mut RunManifest) -> RunResult<(Corpus, MentionIndex)> {
        let corpus_path = resolve(&self.corpus, "corpus.jsonl");
        manifest.add_input(&corpus_path)?;
        let corpus = load_corpus(&corpus_path)?;
        let index = match &self.index {
            Some(path) => {
                manifest.add_input(path)?;
                MentionIndex::load(path)?
            }
            None => build_index(&corpus),
        };
        Ok((corpus, index.with_retrieval_limit(self.retrieval_limit)))
    }

    fn flags(&self) -> Vec<String> {
        let mut flags = vec![flag("corpus", resolve(&self.corpus, "corpus.jsonl").display())];
        if let Some(index) = &self.index {
            flags.push(flag("index", index.display()));
        }
        if let Some(limit) = self.retrieval_limit {
            flags.push(flag("retrieval-limit", limit));
        }
        flags
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyName {
    /// Conjunctive first, relax to disjunctive on empty results.
    Baseline,
    /// Greedy choice from a trained policy file.
    Policy,
    /// Always disjunctive.
    Explore,
    /// Always conjunctive.
    Exploit,
}

impl StrategyName {
    fn label(self) -> &'static str {
        match self {
            StrategyName::Baseline => "baseline",
            StrategyName::Policy => "policy",
            StrategyName::Explore => "explore",
            StrategyName::Exploit => "exploit",
        }
    }
}

#[derive(Args, Clone)]
struct StrategyArgs {
    /// Query strategy.
    #[arg(long, value_enum, default_value_t = StrategyName::Baseline)]
    strategy: StrategyName,
    /// Trained policy file (required with --strategy policy).
    #[arg(long)]
    policy: Option<PathBuf>,
}

impl StrategyArgs {
    /// Flag-consistency check; runs before any file is touched so that
    /// incoherent invocations exit as usage errors.
    fn validate(&self) -> RunResult<()> {
        if self.strategy == StrategyName::Policy && self.policy.is_none() {
            return Err(RunError::Usage(
                "--policy is required when --strategy is 'policy'".into(),
            ));
        }
        Ok(())
    }

    fn build(&self, manifest: &mut RunManifest) -> RunResult<QueryStrategy> {
        match self.strategy {
            StrategyName::Baseline => Ok(QueryStrategy::BaselineGreedy),
            StrategyName::Explore => Ok(QueryStrategy::AlwaysExplore),
            StrategyName::Exploit => Ok(QueryStrategy::AlwaysExploit),
            StrategyName::Policy => {
                let Some(path) = &self.policy else {
                    return Err(RunError::Usage(
                        "--policy is required when --strategy is 'policy'".into(),
                    ));
                };
                manifest.add_input(path)?;
                Ok(QueryStrategy::Policy(PolicyModel::load(path)?))
            }
        }
    }

    fn flags(&self) -> Vec<String> {
        let mut flags = vec![flag("strategy", self.strategy.label())];
        if let Some(policy) = &self.policy {
            flags.push(flag("policy", policy.display()));
        }
        flags
    }
}

#[derive(Args, Clone)]
struct NoiseArgs {
    /// Probability an extracted endpoint is replaced by an ungrounded
    /// placeholder.
    #[arg(long, default_value_t = 0.0)]
    p_unground: f64,
    /// Probability an interaction is missed entirely.
    #[arg(long, default_value_t = 0.0)]
    p_miss: f64,
    /// Shorthand for the lossy reader profile (p-unground 0.02, p-miss 0.1).
    #[arg(long, conflicts_with_all = ["p_unground", "p_miss"])]
    lossy: bool,
}

impl NoiseArgs {
    fn model(&self) -> RunResult<NoiseModel> {
        if self.lossy {
            Ok(NoiseModel::lossy(0))
        } else {
            Ok(NoiseModel::new(self.p_unground, self.p_miss, 0)?)
        }
    }

    fn flags(&self) -> Vec<String> {
        let model = if self.lossy {
            NoiseModel::lossy(0)
        } else {
            NoiseModel::new(self.p_unground, self.p_miss, 0).unwrap_or_else(|_| NoiseModel::zero(0))
        };
        vec![
            flag("p-unground", model.p_unground()),
            flag("p-miss", model.p_miss()),
        ]
    }
}

/// Training knobs shared by `train` and `ablate`; unset flags keep the
/// built-in defaults.
#[derive(Args, Clone)]
struct HyperparamArgs {
    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    alpha: Option<f64>,
    /// Per-episode multiplicative learning-rate decay.
    #[arg(long)]
    alpha_decay: Option<f64>,
    /// Discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Exploration rate at the first episode.
    #[arg(long)]
    epsilon_start: Option<f64>,
    /// Exploration rate at the last episode.
    #[arg(long)]
    epsilon_end: Option<f64>,
    /// Search iteration budget per training episode.
    #[arg(long)]
    train_max_iter: Option<usize>,
    /// Use raw degrees instead of degree ranks for the degree features.
    /// Takes an explicit true/false so recorded manifests replay verbatim.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    raw_degree: bool,
}

impl HyperparamArgs {
    fn build(&self) -> Hyperparams {
        let mut hp = Hyperparams::default();
        if let Some(v) = self.episodes {
            hp.episodes = v;
        }
        if let Some(v) = self.alpha {
            hp.alpha = v;
        }
        if let Some(v) = self.alpha_decay {
            hp.alpha_decay = v;
        }
        if let Some(v) = self.gamma {
            hp.gamma = v;
        }
        if let Some(v) = self.epsilon_start {
            hp.epsilon_start = v;
        }
        if let Some(v) = self.epsilon_end {
            hp.epsilon_end = v;
        }
        if let Some(v) = self.train_max_iter {
            hp.max_iterations = v;
        }
        if self.raw_degree {
            hp.raw_degree = true;
        }
        hp
    }

    fn flags(&self, hp: &Hyperparams) -> Vec<String> {
        vec![
            flag("episodes", hp.episodes),
            flag("alpha", hp.alpha),
            flag("alpha-decay", hp.alpha_decay),
            flag("gamma", hp.gamma),
            flag("epsilon-start", hp.epsilon_start),
            flag("epsilon-end", hp.epsilon_end),
            flag("train-max-iter", hp.max_iterations),
            flag("raw-degree", hp.raw_degree),
        ]
    }
}

fn load_pair_file(
    path: &Option<PathBuf>,
    default_name: &str,
    manifest: &mut RunManifest,
) -> RunResult<Vec<EntityPair>> {
    let path = resolve(path, default_name);
    manifest.add_input(&path)?;
    Ok(load_pairs(&path)?)
}

// ---------------------------------------------------------------------------
// generate

#[derive(Args)]
struct GenerateArgs {
    /// Output corpus file [default: corpus.jsonl under the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; child streams derive from it by label.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    participants: usize,
    #[arg(long, default_value_t = 600)]
    edges: usize,
    #[arg(long, default_value_t = 5000)]
    docs: usize,
    #[arg(long, default_value_t = 2)]
    mentions_min: usize,
    #[arg(long, default_value_t = 8)]
    mentions_max: usize,
    /// Probability a ground-truth edge between mentioned participants is
    /// annotated in a document.
    #[arg(long, default_value_t = 0.2)]
    p_annotate: f64,
    /// Fraction of ground-truth edges guaranteed at least one annotation.
    #[arg(long, default_value_t = 1.0)]
    coverage: f64,
}

fn run_generate(args: GenerateArgs) -> RunResult<()> {
    let out = resolve(&args.out, "corpus.jsonl");
    let profile = CorpusProfile {
        participants: args.participants,
        edges: args.edges,
        num_docs: args.docs,
        mentions_min: args.mentions_min,
        mentions_max: args.mentions_max,
        p_annotate: args.p_annotate,
        coverage: args.coverage,
    };
    let flags = vec![
        flag("out", out.display()),
        flag("seed", args.seed),
        flag("participants", profile.participants),
        flag("edges", profile.edges),
        flag("docs", profile.num_docs),
        flag("mentions-min", profile.mentions_min),
        flag("mentions-max", profile.mentions_max),
        flag("p-annotate", profile.p_annotate),
        flag("coverage", profile.coverage),
    ];
    let manifest = RunManifest::new("generate", flags, Some(args.seed));
    let corpus = generate_corpus(&profile, args.seed)?;
    save_corpus(&corpus, &out)?;
    manifest.write_beside(&out)?;
    println!(
        "wrote corpus: {} participants, {} ground-truth edges, {} documents -> {}",
        corpus.ground_truth().participants().len(),
        corpus.ground_truth().edges().len(),
        corpus.documents().len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// index

#[derive(Args)]
struct IndexArgs {
    /// Corpus file [default: corpus.jsonl under the data directory].
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output index file [default: index.jsonl under the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_index(args: IndexArgs) -> RunResult<()> {
    let corpus_path = resolve(&args.corpus, "corpus.jsonl");
    let out = resolve(&args.out, "index.jsonl");
    let flags = vec![
        flag("corpus", corpus_path.display()),
        flag("out", out.display()),
    ];
    let mut manifest = RunManifest::new("index", flags, None);
    manifest.add_input(&corpus_path)?;
    let corpus = load_corpus(&corpus_path)?;
    let index = build_index(&corpus);
    index.save(&out)?;
    manifest.write_beside(&out)?;
    println!(
        "indexed {} documents over {} participants -> {}",
        index.doc_count(),
        corpus.ground_truth().participants().len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// split-pairs

#[derive(Args)]
struct SplitPairsArgs {
    /// Corpus file [default: corpus.jsonl under the data directory].
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    n_train: usize,
    #[arg(long, default_value_t = 100)]
    n_eval: usize,
    /// Master seed; the shuffle stream derives from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output training pairs [default: train-pairs.tsv under the data directory].
    #[arg(long)]
    train_out: Option<PathBuf>,
    /// Output evaluation pairs [default: eval-pairs.tsv under the data directory].
    #[arg(long)]
    eval_out: Option<PathBuf>,
}

fn run_split_pairs(args: SplitPairsArgs) -> RunResult<()> {
    let corpus_path = resolve(&args.corpus, "corpus.jsonl");
    let train_out = resolve(&args.train_out, "train-pairs.tsv");
    let eval_out = resolve(&args.eval_out, "eval-pairs.tsv");
    let flags = vec![
        flag("corpus", corpus_path.display()),
        flag("n-train", args.n_train),
        flag("n-eval", args.n_eval),
        flag("seed", args.seed),
        flag("train-out", train_out.display()),
        flag("eval-out", eval_out.display()),
    ];
    let mut manifest = RunManifest::new("split-pairs", flags, Some(args.seed));
    manifest.add_input(&corpus_path)?;
    let corpus = load_corpus(&corpus_path)?;
    let (train_pairs, eval_pairs) = split_pairs(
        corpus.ground_truth(),
        args.n_train,
        args.n_eval,
        seeds::derive_seed(args.seed, "split"),
    )?;
    save_pairs(&train_pairs, &train_out)?;
    save_pairs(&eval_pairs, &eval_out)?;
    manifest.write_beside(&train_out)?;
    manifest.write_beside(&eval_out)?;
    println!(
        "split {} reachable pairs: {} train -> {}, {} eval -> {}",
        corpus.ground_truth().connected_pairs().len(),
        train_pairs.len(),
        train_out.display(),
        eval_pairs.len(),
        eval_out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Training pairs file [default: train-pairs.tsv under the data directory].
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Output policy file [default: policy.json under the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for action, shuffle, and episode streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    hyper: HyperparamArgs,
    /// Feature groups to drop, comma-separated (e.g. f3,f4).
    #[arg(long, value_delimiter = ',')]
    drop: Vec<String>,
}

fn run_train(args: TrainArgs) -> RunResult<()> {
    let out = resolve(&args.out, "policy.json");
    let mut hp = args.hyper.build();
    for name in &args.drop {
        let group: FeatureGroup = name
            .parse()
            .map_err(|_| RunError::Usage(format!("--drop: unknown feature group '{name}'")))?;
        hp.dropped_groups.insert(group);
    }
    let mut flags = args.data.flags();
    flags.push(flag("pairs", resolve(&args.pairs, "train-pairs.tsv").display()));
    flags.push(flag("out", out.display()));
    flags.push(flag("seed", args.seed));
    flags.extend(args.hyper.flags(&hp));
    let dropped: Vec<&str> = hp.dropped_groups.iter().map(|g| g.name()).collect();
    if !dropped.is_empty() {
        flags.push(flag("drop", dropped.join(",")));
    }
    let mut manifest = RunManifest::new("train", flags, Some(args.seed));

    let (corpus, index) = args.data.load(&mut manifest)?;
    let pairs = load_pair_file(&args.pairs, "train-pairs.tsv", &mut manifest)?;
    let trained = train(&corpus, &index, &pairs, &hp, args.seed)?;
    trained.model.save(&out)?;
    manifest.write_beside(&out)?;
    println!(
        "trained {} episodes: delta ratio {:.3} ({}), success rate {:.1}% -> {}",
        hp.episodes,
        trained.log.delta_ratio(),
        if trained.log.converged() {
            "converged"
        } else {
            "not converged"
        },
        100.0 * trained.log.success_rate(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// search / trace

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Source participant (the controller end of the sought path).
    #[arg(long)]
    source: String,
    /// Destination participant.
    #[arg(long)]
    dest: String,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Iteration budget.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Master seed for the episode's reader stream.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Also write the full episode trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

/// Everything recorded about a single episode, for trace files.
#[derive(Serialize)]
struct EpisodeArtifact<'a> {
    source: &'a ParticipantId,
    dest: &'a ParticipantId,
    strategy: &'a str,
    seed: u64,
    max_iterations: usize,
    p_unground: f64,
    p_miss: f64,
    outcome: &'a str,
    iterations: usize,
    total_queries: usize,
    papers_read: &'a BTreeSet<DocId>,
    path: Option<String>,
    trace: &'a [IterationRecord],
    graph_dump: String,
}

fn episode_artifact<'a>(
    pair: &'a EntityPair,
    strategy_label: &'a str,
    args_seed: u64,
    max_iterations: usize,
    noise: &NoiseModel,
    result: &'a SearchResult,
) -> EpisodeArtifact<'a> {
    EpisodeArtifact {
        source: &pair.source,
        dest: &pair.dest,
        strategy: strategy_label,
        seed: args_seed,
        max_iterations,
        p_unground: noise.p_unground(),
        p_miss: noise.p_miss(),
        outcome: result.outcome.label(),
        iterations: result.iterations,
        total_queries: result.total_queries,
        papers_read: &result.papers_read,
        path: result.path().map(|p| p.to_string()),
        trace: &result.trace,
        graph_dump: result.graph.dump(),
    }
}

fn run_single_episode(
    data: &CorpusIndexArgs,
    strategy_args: &StrategyArgs,
    source: &str,
    dest: &str,
    max_iter: usize,
    seed: u64,
    noise: &NoiseModel,
    manifest: &mut RunManifest,
) -> RunResult<(EntityPair, SearchResult)> {
    let (corpus, index) = data.load(manifest)?;
    let strategy = strategy_args.build(manifest)?;
    let pair = EntityPair::new(ParticipantId::new(source)?, ParticipantId::new(dest)?)?;
    let cfg = EvalConfig {
        max_iterations: max_iter,
        noise: noise.clone(),
        seed,
    };
    let pairs = [pair];
    let mut results = run_episodes(&strategy, &pairs, &corpus, &index, &cfg)?;
    let [pair] = pairs;
    Ok((pair, results.remove(0)))
}

fn run_search(args: SearchArgs) -> RunResult<()> {
    args.strategy.validate()?;
    let noise = args.noise.model()?;
    let mut flags = args.data.flags();
    flags.push(flag("source", &args.source));
    flags.push(flag("dest", &args.dest));
    flags.extend(args.strategy.flags());
    flags.push(flag("max-iter", args.max_iter));
    flags.push(flag("seed", args.seed));
    flags.extend(args.noise.flags());
    if let Some(trace) = &args.trace {
        flags.push(flag("trace", trace.display()));
    }
    let mut manifest = RunManifest::new("search", flags, Some(args.seed));
    let (pair, result) = run_single_episode(
        &args.data,
        &args.strategy,
        &args.source,
        &args.dest,
        args.max_iter,
        args.seed,
        &noise,
        &mut manifest,
    )?;

    println!(
        "{} -> {}: {} after {} iterations ({} queries, {} papers read)",
        pair.source,
        pair.dest,
        result.outcome.label(),
        result.iterations,
        result.total_queries,
        result.papers_read.len()
    );
    if let Some(path) = result.path() {
        println!("path: {path}");
    }
    if let Some(trace_path) = &args.trace {
        let artifact = episode_artifact(
            &pair,
            args.strategy.strategy.label(),
            args.seed,
            args.max_iter,
            &noise,
            &result,
        );
        write_json(trace_path, &artifact)?;
        manifest.write_beside(trace_path)?;
        println!("trace -> {}", trace_path.display());
    } else {
        // No file output; record the run on stderr instead.
        eprintln!("{}", manifest.to_json());
    }
    Ok(())
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Source participant.
    #[arg(long)]
    source: String,
    /// Destination participant.
    #[arg(long)]
    dest: String,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Iteration budget.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Master seed for the episode's reader stream.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Output trace file [default: trace.json under the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_trace(args: TraceArgs) -> RunResult<()> {
    args.strategy.validate()?;
    let out = resolve(&args.out, "trace.json");
    let noise = args.noise.model()?;
    let mut flags = args.data.flags();
    flags.push(flag("source", &args.source));
    flags.push(flag("dest", &args.dest));
    flags.extend(args.strategy.flags());
    flags.push(flag("max-iter", args.max_iter));
    flags.push(flag("seed", args.seed));
    flags.extend(args.noise.flags());
    flags.push(flag("out", out.display()));
    let mut manifest = RunManifest::new("trace", flags, Some(args.seed));
    let (pair, result) = run_single_episode(
        &args.data,
        &args.strategy,
        &args.source,
        &args.dest,
        args.max_iter,
        args.seed,
        &noise,
        &mut manifest,
    )?;
    let artifact = episode_artifact(
        &pair,
        args.strategy.strategy.label(),
        args.seed,
        args.max_iter,
        &noise,
        &result,
    );
    write_json(&out, &artifact)?;
    manifest.write_beside(&out)?;
    println!(
        "{} -> {}: {} in {} iterations; trace -> {}",
        pair.source,
        pair.dest,
        result.outcome.label(),
        result.iterations,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Evaluation pairs file [default: eval-pairs.tsv under the data directory].
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Training pairs to enforce disjointness against.
    #[arg(long)]
    train_pairs: Option<PathBuf>,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Master seed for per-pair reader streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Iteration budget per episode.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Output report file [default: report-<strategy>.json under the data
    /// directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_evaluate(args: EvaluateArgs) -> RunResult<()> {
    args.strategy.validate()?;
    let out = resolve(
        &args.out,
        &format!("report-{}.json", args.strategy.strategy.label()),
    );
    let noise = args.noise.model()?;
    let mut flags = args.data.flags();
    flags.push(flag("pairs", resolve(&args.pairs, "eval-pairs.tsv").display()));
    if let Some(train_pairs) = &args.train_pairs {
        flags.push(flag("train-pairs", train_pairs.display()));
    }
    flags.extend(args.strategy.flags());
    flags.push(flag("seed", args.seed));
    flags.push(flag("max-iter", args.max_iter));
    flags.extend(args.noise.flags());
    flags.push(flag("out", out.display()));
    let mut manifest = RunManifest::new("evaluate", flags, Some(args.seed));

    let (corpus, index) = args.data.load(&mut manifest)?;
    let pairs = load_pair_file(&args.pairs, "eval-pairs.tsv", &mut manifest)?;
    let train_pairs = match &args.train_pairs {
        Some(path) => {
            manifest.add_input(path)?;
            Some(load_pairs(path)?)
        }
        None => None,
    };
    let strategy = args.strategy.build(&mut manifest)?;
    let cfg = EvalConfig {
        max_iterations: args.max_iter,
        noise,
        seed: args.seed,
    };
    let report = evaluate(&strategy, &pairs, &corpus, &index, &cfg, train_pairs.as_deref())?;
    report.save(&out)?;
    manifest.write_beside(&out)?;
    print_report_summary(&report);
    println!("report -> {}", out.display());
    Ok(())
}

fn print_report_summary(report: &EvalReport) {
    println!(
        "{}: {} pairs, {} queries, {} unique papers ({} within episodes), {} of {} paths ({:.1}%)",
        report.strategy,
        report.pair_count,
        report.ir_queries,
        report.unique_papers,
        report.unique_papers_within_episodes,
        report.paths_recovered.count,
        report.pair_count,
        100.0 * report.paths_recovered.fraction
    );
}

// ---------------------------------------------------------------------------
// compare

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Evaluation pairs file [default: eval-pairs.tsv under the data directory].
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Training pairs to enforce disjointness against.
    #[arg(long)]
    train_pairs: Option<PathBuf>,
    /// Trained policy file [default: policy.json under the data directory].
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Master seed; both strategies share per-pair reader streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Iteration budget per episode.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Bootstrap resample count.
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Output comparison file [default: comparison.json under the data
    /// directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ComparisonOutput {
    baseline: EvalReport,
    policy: EvalReport,
    bootstrap: BootstrapSummary,
}

fn run_compare(args: CompareArgs) -> RunResult<()> {
    let out = resolve(&args.out, "comparison.json");
    let policy_path = resolve(&args.policy, "policy.json");
    let noise = args.noise.model()?;
    let mut flags = args.data.flags();
    flags.push(flag("pairs", resolve(&args.pairs, "eval-pairs.tsv").display()));
    if let Some(train_pairs) = &args.train_pairs {
        flags.push(flag("train-pairs", train_pairs.display()));
    }
    flags.push(flag("policy", policy_path.display()));
    flags.push(flag("seed", args.seed));
    flags.push(flag("max-iter", args.max_iter));
    flags.push(flag("resamples", args.resamples));
    flags.extend(args.noise.flags());
    flags.push(flag("out", out.display()));
    let mut manifest = RunManifest::new("compare", flags, Some(args.seed));

    let (corpus, index) = args.data.load(&mut manifest)?;
    let pairs = load_pair_file(&args.pairs, "eval-pairs.tsv", &mut manifest)?;
    let train_pairs = match &args.train_pairs {
        Some(path) => {
            manifest.add_input(path)?;
            Some(load_pairs(path)?)
        }
        None => None,
    };
    manifest.add_input(&policy_path)?;
    let model = PolicyModel::load(&policy_path)?;
    let cfg = EvalConfig {
        max_iterations: args.max_iter,
        noise,
        seed: args.seed,
    };
    let baseline = evaluate(
        &QueryStrategy::BaselineGreedy,
        &pairs,
        &corpus,
        &index,
        &cfg,
        train_pairs.as_deref(),
    )?;
    let policy = evaluate(
        &QueryStrategy::Policy(model),
        &pairs,
        &corpus,
        &index,
        &cfg,
        train_pairs.as_deref(),
    )?;
    let bootstrap = bootstrap_test(&baseline, &policy, args.resamples, args.seed)?;
    print!("{}", render_comparison(&baseline, &policy));
    print!("{}", render_bootstrap(&bootstrap));
    let output = ComparisonOutput {
        baseline,
        policy,
        bootstrap,
    };
    write_json(&out, &output)?;
    manifest.write_beside(&out)?;
    println!("comparison -> {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Training pairs file [default: train-pairs.tsv under the data directory].
    #[arg(long)]
    train_pairs: Option<PathBuf>,
    /// Evaluation pairs file [default: eval-pairs.tsv under the data directory].
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Master training seed, shared by every variant.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Evaluation seed [default: the training seed].
    #[arg(long)]
    eval_seed: Option<u64>,
    /// Iteration budget per evaluation episode.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[command(flatten)]
    hyper: HyperparamArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Output file [default: ablation.json under the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_ablate(args: AblateArgs) -> RunResult<()> {
    let out = resolve(&args.out, "ablation.json");
    let hp = args.hyper.build();
    let eval_seed = args.eval_seed.unwrap_or(args.seed);
    let noise = args.noise.model()?;
    let mut flags = args.data.flags();
    flags.push(flag(
        "train-pairs",
        resolve(&args.train_pairs, "train-pairs.tsv").display(),
    ));
    flags.push(flag("pairs", resolve(&args.pairs, "eval-pairs.tsv").display()));
    flags.push(flag("seed", args.seed));
    flags.push(flag("eval-seed", eval_seed));
    flags.push(flag("max-iter", args.max_iter));
    flags.extend(args.hyper.flags(&hp));
    flags.extend(args.noise.flags());
    flags.push(flag("out", out.display()));
    let mut manifest = RunManifest::new("ablate", flags, Some(args.seed));

    let (corpus, index) = args.data.load(&mut manifest)?;
    let train_pairs = load_pair_file(&args.train_pairs, "train-pairs.tsv", &mut manifest)?;
    let eval_pairs = load_pair_file(&args.pairs, "eval-pairs.tsv", &mut manifest)?;
    let cfg = EvalConfig {
        max_iterations: args.max_iter,
        noise,
        seed: eval_seed,
    };
    let variants = standard_ablation_variants();
    let (runs, _logs) = ablate(
        &variants,
        &corpus,
        &index,
        &train_pairs,
        &eval_pairs,
        &hp,
        args.seed,
        &cfg,
    )?;
    print!("{}", render_ablation(&runs));
    save_ablation(&runs, &out)?;
    manifest.write_beside(&out)?;
    println!("ablation -> {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// failures

#[derive(Args)]
struct FailuresArgs {
    #[command(flatten)]
    data: CorpusIndexArgs,
    /// Evaluation pairs file [default: eval-pairs.tsv under the data directory].
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Master seed for per-pair reader streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Iteration budget per episode.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Probability an extracted endpoint ungrounds (lossy default).
    #[arg(long, default_value_t = 0.02)]
    p_unground: f64,
    /// Probability an interaction is missed (lossy default).
    #[arg(long, default_value_t = 0.1)]
    p_miss: f64,
    /// Output file [default: failures.json under the data directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FailureOutput {
    strategy: String,
    seed: u64,
    episodes: usize,
    failures: usize,
    counts: std::collections::BTreeMap<FailureCause, usize>,
}

fn run_failures(args: FailuresArgs) -> RunResult<()> {
    args.strategy.validate()?;
    let out = resolve(&args.out, "failures.json");
    let noise = NoiseModel::new(args.p_unground, args.p_miss, 0)?;
    let mut flags = args.data.flags();
    flags.push(flag("pairs", resolve(&args.pairs, "eval-pairs.tsv").display()));
    flags.extend(args.strategy.flags());
    flags.push(flag("seed", args.seed));
    flags.push(flag("max-iter", args.max_iter));
    flags.push(flag("p-unground", args.p_unground));
    flags.push(flag("p-miss", args.p_miss));
    flags.push(flag("out", out.display()));
    let mut manifest = RunManifest::new("failures", flags, Some(args.seed));

    let (corpus, index) = args.data.load(&mut manifest)?;
    let pairs = load_pair_file(&args.pairs, "eval-pairs.tsv", &mut manifest)?;
    let strategy = args.strategy.build(&mut manifest)?;
    let cfg = EvalConfig {
        max_iterations: args.max_iter,
        noise,
        seed: args.seed,
    };
    let results = run_episodes(&strategy, &pairs, &corpus, &index, &cfg)?;
    let counts = failure_breakdown(&results)?;
    print!("{}", render_failures(&counts, results.len()));
    let output = FailureOutput {
        strategy: strategy.label().to_string(),
        seed: args.seed,
        episodes: results.len(),
        failures: counts.values().sum(),
        counts,
    };
    write_json(&out, &output)?;
    manifest.write_beside(&out)?;
    println!("failures -> {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> RunResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    crate::manifest::write_atomic(path, text.as_bytes())?;
    Ok(())
}
