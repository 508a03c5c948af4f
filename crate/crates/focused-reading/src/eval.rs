//! Evaluation harness: batched episodes, reports, and significance tests.
//!
//! Episodes are independent given the shared corpus and index, and every
//! per-pair noise stream is derived from the evaluation seed plus the pair
//! itself, so running them on a thread pool (the default `parallel`
//! feature) or sequentially produces byte-identical reports. The same
//! holds for bootstrap resamples, whose rngs derive from the resample
//! index.
//!
//! Strategy comparisons use common random numbers: for a given evaluation
//! seed the reader degrades document reads identically regardless of
//! which strategy asked, which sharpens paired comparisons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocId, EntityPair, GroundTruthGraph, ParticipantId};
use crate::engine::{
    focused_read, EndpointStrategy, QueryStrategy, SearchConfig, SearchResult,
    DEFAULT_MAX_ITERATIONS,
};
use crate::error::{Error, Result};
use crate::extraction::NoiseModel;
use crate::index::MentionIndex;
use crate::manifest::write_atomic;
use crate::policy::{train, FeatureGroup, Hyperparams, TrainingLog};
use crate::seeds;

/// Shared settings for one evaluation run.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub max_iterations: usize,
    /// Noise profile; its own seed is ignored in favor of per-pair seeds
    /// derived from `seed`.
    pub noise: NoiseModel,
    pub seed: u64,
}

impl EvalConfig {
    pub fn noiseless(seed: u64) -> Self {
        EvalConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            noise: NoiseModel::zero(0),
            seed,
        }
    }

    pub fn with_noise(noise: NoiseModel, seed: u64) -> Self {
        EvalConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            noise,
            seed,
        }
    }

    fn episode_noise(&self, pair: &EntityPair) -> NoiseModel {
        let payload = format!("{}\x00{}", pair.source, pair.dest);
        self.noise.with_seed(seeds::derive_seed_bytes(
            self.seed,
            "episode",
            payload.as_bytes(),
        ))
    }
}

fn run_one(
    strategy: &QueryStrategy,
    pair: &EntityPair,
    corpus: &Corpus,
    index: &MentionIndex,
    cfg: &EvalConfig,
) -> Result<SearchResult> {
    let config = SearchConfig {
        max_iterations: cfg.max_iterations,
        endpoint_strategy: EndpointStrategy::DegreeFrontier,
        query_strategy: strategy.clone(),
    };
    focused_read(
        &pair.source,
        &pair.dest,
        corpus,
        index,
        &config,
        &cfg.episode_noise(pair),
    )
}

/// Run one episode per pair, in pair order.
pub fn run_episodes_sequential(
    strategy: &QueryStrategy,
    pairs: &[EntityPair],
    corpus: &Corpus,
    index: &MentionIndex,
    cfg: &EvalConfig,
) -> Result<Vec<SearchResult>> {
    pairs
        .iter()
        .map(|p| run_one(strategy, p, corpus, index, cfg))
        .collect()
}

/// Run one episode per pair; parallel when the `parallel` feature is on.
/// Results are in pair order either way.
pub fn run_episodes(
    strategy: &QueryStrategy,
    pairs: &[EntityPair],
    corpus: &Corpus,
    index: &MentionIndex,
    cfg: &EvalConfig,
) -> Result<Vec<SearchResult>> {
    #[cfg(feature = "parallel")]
    {
        pairs
            .par_iter()
            .map(|p| run_one(strategy, p, corpus, index, cfg))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_episodes_sequential(strategy, pairs, corpus, index, cfg)
    }
}

/// Per-pair outcome row in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub source: ParticipantId,
    pub dest: ParticipantId,
    pub outcome: String,
    pub iterations: usize,
    pub queries: usize,
    pub papers: usize,
    /// The distinct documents this episode read, so resampling can
    /// recompute cross-episode unions.
    pub docs: Vec<DocId>,
}

/// Successful-episode tally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathsRecovered {
    pub count: usize,
    pub fraction: f64,
}

/// Aggregated evaluation of one strategy over a pair list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: String,
    pub seed: u64,
    pub pair_count: usize,
    /// Total retrieval executions across episodes.
    pub ir_queries: usize,
    /// Distinct documents read across the whole run.
    pub unique_papers: usize,
    /// Per-episode distinct documents, summed (an episode never re-reads).
    pub unique_papers_within_episodes: usize,
    pub paths_recovered: PathsRecovered,
    pub pairs: Vec<PairRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

fn aggregate(
    strategy: &QueryStrategy,
    pairs: &[EntityPair],
    results: &[SearchResult],
    cfg: &EvalConfig,
) -> EvalReport {
    let mut all_papers = BTreeSet::new();
    let mut rows = Vec::with_capacity(results.len());
    let mut ir_queries = 0;
    let mut within = 0;
    let mut successes = 0;
    for (pair, r) in pairs.iter().zip(results) {
        ir_queries += r.total_queries;
        within += r.papers_read.len();
        all_papers.extend(r.papers_read.iter().cloned());
        if r.success() {
            successes += 1;
        }
        rows.push(PairRow {
            source: pair.source.clone(),
            dest: pair.dest.clone(),
            outcome: r.outcome.label().to_string(),
            iterations: r.iterations,
            queries: r.total_queries,
            papers: r.papers_read.len(),
            docs: r.papers_read.iter().cloned().collect(),
        });
    }
    EvalReport {
        strategy: strategy.label().to_string(),
        seed: cfg.seed,
        pair_count: pairs.len(),
        ir_queries,
        unique_papers: all_papers.len(),
        unique_papers_within_episodes: within,
        paths_recovered: PathsRecovered {
            count: successes,
            fraction: successes as f64 / pairs.len() as f64,
        },
        pairs: rows,
    }
}

/// Count pairs occurring in both lists.
pub fn overlap_count(a: &[EntityPair], b: &[EntityPair]) -> usize {
    let set: BTreeSet<&EntityPair> = a.iter().collect();
    b.iter().filter(|p| set.contains(p)).count()
}

fn check_eval_inputs(pairs: &[EntityPair], train_pairs: Option<&[EntityPair]>) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    if let Some(train_pairs) = train_pairs {
        let overlap = overlap_count(train_pairs, pairs);
        if overlap > 0 {
            return Err(Error::OverlappingPairs(overlap));
        }
    }
    Ok(())
}

/// Evaluate a strategy over `pairs`, refusing lists that overlap the
/// training pairs when those are supplied.
pub fn evaluate(
    strategy: &QueryStrategy,
    pairs: &[EntityPair],
    corpus: &Corpus,
    index: &MentionIndex,
    cfg: &EvalConfig,
    train_pairs: Option<&[EntityPair]>,
) -> Result<EvalReport> {
    check_eval_inputs(pairs, train_pairs)?;
    let results = run_episodes(strategy, pairs, corpus, index, cfg)?;
    Ok(aggregate(strategy, pairs, &results, cfg))
}

/// Sequential twin of [`evaluate`]; exists so the two code paths can be
/// compared for equality and benchmarked against each other.
pub fn evaluate_sequential(
    strategy: &QueryStrategy,
    pairs: &[EntityPair],
    corpus: &Corpus,
    index: &MentionIndex,
    cfg: &EvalConfig,
    train_pairs: Option<&[EntityPair]>,
) -> Result<EvalReport> {
    check_eval_inputs(pairs, train_pairs)?;
    let results = run_episodes_sequential(strategy, pairs, corpus, index, cfg)?;
    Ok(aggregate(strategy, pairs, &results, cfg))
}

/// Side-by-side rendering of two reports over the same pair list.
pub fn render_comparison(a: &EvalReport, b: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<34}{:>14}{:>14}\n",
        "metric", a.strategy, b.strategy
    ));
    let mut num =
        |name: &str, x: usize, y: usize| out.push_str(&format!("{name:<34}{x:>14}{y:>14}\n"));
    num("pairs evaluated", a.pair_count, b.pair_count);
    num("ir queries", a.ir_queries, b.ir_queries);
    num("unique papers read", a.unique_papers, b.unique_papers);
    num(
        "papers read (within episodes)",
        a.unique_papers_within_episodes,
        b.unique_papers_within_episodes,
    );
    let paths = |r: &EvalReport| {
        format!(
            "{} ({:.1}%)",
            r.paths_recovered.count,
            100.0 * r.paths_recovered.fraction
        )
    };
    out.push_str(&format!(
        "{:<34}{:>14}{:>14}\n",
        "paths recovered",
        paths(a),
        paths(b)
    ));
    out
}

/// Paired-bootstrap comparison of two reports over identical pair lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    pub seed: u64,
    /// Fraction of resamples where the second report's distinct-document
    /// union was NOT strictly smaller (ties count against). The union is
    /// recomputed over each resample's episodes, matching the headline
    /// "unique papers read" metric.
    pub p_fewer_papers: f64,
    /// Same, for total retrieval queries (strictly fewer).
    pub p_fewer_queries: f64,
    /// Same, for recovered paths (strictly more).
    pub p_more_paths: f64,
}

impl BootstrapSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

fn check_bootstrap_inputs(a: &EvalReport, b: &EvalReport, resamples: usize) -> Result<()> {
    if resamples == 0 {
        return Err(Error::NoResamples);
    }
    let aligned = a.pairs.len() == b.pairs.len()
        && a.pairs
            .iter()
            .zip(&b.pairs)
            .all(|(x, y)| x.source == y.source && x.dest == y.dest);
    if !aligned {
        return Err(Error::MismatchedReports);
    }
    Ok(())
}

/// Report columns flattened for fast resampling: queries and success per
/// pair, plus per-pair doc lists interned to dense ints so each resample
/// can recount the cross-episode union with a boolean scratch table.
struct BootstrapData {
    n: usize,
    vocab: usize,
    queries_a: Vec<u64>,
    queries_b: Vec<u64>,
    found_a: Vec<bool>,
    found_b: Vec<bool>,
    docs_a: Vec<Vec<u32>>,
    docs_b: Vec<Vec<u32>>,
}

fn intern_rows(table: &mut BTreeMap<DocId, u32>, rows: &[PairRow]) -> Vec<Vec<u32>> {
    rows.iter()
        .map(|row| {
            row.docs
                .iter()
                .map(|d| {
                    let next = table.len() as u32;
                    *table.entry(d.clone()).or_insert(next)
                })
                .collect()
        })
        .collect()
}

fn prepare_bootstrap(a: &EvalReport, b: &EvalReport) -> BootstrapData {
    let mut table = BTreeMap::new();
    let docs_a = intern_rows(&mut table, &a.pairs);
    let docs_b = intern_rows(&mut table, &b.pairs);
    let column = |rows: &[PairRow]| -> (Vec<u64>, Vec<bool>) {
        (
            rows.iter().map(|r| r.queries as u64).collect(),
            rows.iter().map(|r| r.outcome == "path_found").collect(),
        )
    };
    let (queries_a, found_a) = column(&a.pairs);
    let (queries_b, found_b) = column(&b.pairs);
    BootstrapData {
        n: a.pairs.len(),
        vocab: table.len(),
        queries_a,
        queries_b,
        found_a,
        found_b,
        docs_a,
        docs_b,
    }
}

/// One resample: draw pair indices with replacement, then compare query
/// totals, path counts, and the distinct-document unions over the drawn
/// episodes. Returns per-hypothesis violation flags (tie or wrong
/// direction).
fn resample_violations(d: &BootstrapData, seed: u64, i: u64) -> (bool, bool, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive_seed_indexed(seed, "resample", i));
    let mut qa = 0u64;
    let mut qb = 0u64;
    let mut fa = 0u64;
    let mut fb = 0u64;
    let mut ua = 0u64;
    let mut ub = 0u64;
    let mut seen_a = vec![false; d.vocab];
    let mut seen_b = vec![false; d.vocab];
    for _ in 0..d.n {
        let k = rng.gen_range(0..d.n);
        qa += d.queries_a[k];
        qb += d.queries_b[k];
        fa += d.found_a[k] as u64;
        fb += d.found_b[k] as u64;
        for &doc in &d.docs_a[k] {
            if !seen_a[doc as usize] {
                seen_a[doc as usize] = true;
                ua += 1;
            }
        }
        for &doc in &d.docs_b[k] {
            if !seen_b[doc as usize] {
                seen_b[doc as usize] = true;
                ub += 1;
            }
        }
    }
    (ub >= ua, qb >= qa, fb <= fa)
}

/// Paired bootstrap over pairs, testing whether report `b` reads fewer
/// papers, issues fewer queries, and recovers more paths than report `a`.
/// Each p-value is the fraction of resamples violating its hypothesis.
pub fn bootstrap_test(
    a: &EvalReport,
    b: &EvalReport,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    check_bootstrap_inputs(a, b, resamples)?;
    let data = prepare_bootstrap(a, b);
    #[cfg(feature = "parallel")]
    let counts = (0..resamples as u64)
        .into_par_iter()
        .map(|i| resample_violations(&data, seed, i))
        .map(|(x, y, z)| (x as u64, y as u64, z as u64))
        .reduce(|| (0, 0, 0), |l, r| (l.0 + r.0, l.1 + r.1, l.2 + r.2));
    #[cfg(not(feature = "parallel"))]
    let counts = (0..resamples as u64)
        .map(|i| resample_violations(&data, seed, i))
        .map(|(x, y, z)| (x as u64, y as u64, z as u64))
        .fold((0, 0, 0), |l: (u64, u64, u64), r| {
            (l.0 + r.0, l.1 + r.1, l.2 + r.2)
        });
    Ok(summarize_bootstrap(counts, resamples, seed))
}

/// Sequential twin of [`bootstrap_test`], for benchmarks and equivalence
/// checks; identical output.
pub fn bootstrap_test_sequential(
    a: &EvalReport,
    b: &EvalReport,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    check_bootstrap_inputs(a, b, resamples)?;
    let data = prepare_bootstrap(a, b);
    let mut counts = (0u64, 0u64, 0u64);
    for i in 0..resamples as u64 {
        let (x, y, z) = resample_violations(&data, seed, i);
        counts.0 += x as u64;
        counts.1 += y as u64;
        counts.2 += z as u64;
    }
    Ok(summarize_bootstrap(counts, resamples, seed))
}

fn summarize_bootstrap(counts: (u64, u64, u64), resamples: usize, seed: u64) -> BootstrapSummary {
    let denom = resamples as f64;
    BootstrapSummary {
        resamples,
        seed,
        p_fewer_papers: counts.0 as f64 / denom,
        p_fewer_queries: counts.1 as f64 / denom,
        p_more_paths: counts.2 as f64 / denom,
    }
}

/// Render a bootstrap summary under its comparison table.
pub fn render_bootstrap(s: &BootstrapSummary) -> String {
    format!(
        "paired bootstrap ({} resamples, seed {})\n\
         {:<34}{:>10.4}\n{:<34}{:>10.4}\n{:<34}{:>10.4}\n",
        s.resamples,
        s.seed,
        "p (fewer papers)",
        s.p_fewer_papers,
        "p (fewer queries)",
        s.p_fewer_queries,
        "p (more paths)",
        s.p_more_paths,
    )
}

/// Why a failed episode failed, most specific cause first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// A queried endpoint was an ungrounded placeholder (its queries can
    /// never return documents).
    UngroundedParticipant,
    /// The final query retrieved no documents.
    EmptyQueryResults,
    /// Documents were retrieved but reading added nothing new.
    LowIeYield,
    /// Budget ran out while the graph was still growing.
    IterationCap,
    /// Every endpoint pair was tried.
    EndpointExhausted,
}

impl FailureCause {
    pub fn label(self) -> &'static str {
        match self {
            FailureCause::UngroundedParticipant => "ungrounded_participant",
            FailureCause::EmptyQueryResults => "empty_query_results",
            FailureCause::LowIeYield => "low_ie_yield",
            FailureCause::IterationCap => "iteration_cap",
            FailureCause::EndpointExhausted => "endpoint_exhausted",
        }
    }
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classify a failed episode by its root cause.
///
/// A trace can exhibit several causes; precedence picks the one earliest
/// in the causal chain. Querying an ungrounded placeholder dominates,
/// because a dead endpoint is what makes retrieval come back empty; an
/// empty retrieval anywhere comes next, because reading nothing is what
/// makes an iteration fruitless; then a retrieval whose reading added
/// nothing to the graph. A trace exhibiting none of these failed purely
/// for budget reasons, and the engine's stop reason stands.
pub fn classify_failure(result: &SearchResult) -> Result<FailureCause> {
    if result.success() {
        return Err(Error::NotAFailure);
    }
    let trace = &result.trace;
    if trace
        .iter()
        .any(|r| r.endpoint_a.is_ungrounded() || r.endpoint_b.is_ungrounded())
    {
        return Ok(FailureCause::UngroundedParticipant);
    }
    if trace.iter().any(|r| r.docs.is_empty()) {
        return Ok(FailureCause::EmptyQueryResults);
    }
    if trace.iter().any(|r| !r.docs.is_empty() && !r.changed) {
        return Ok(FailureCause::LowIeYield);
    }
    Ok(match result.outcome {
        crate::engine::SearchOutcome::IterationCap => FailureCause::IterationCap,
        _ => FailureCause::EndpointExhausted,
    })
}

/// Classified counts over the failed episodes of a batch.
pub fn failure_breakdown(results: &[SearchResult]) -> Result<BTreeMap<FailureCause, usize>> {
    let mut counts = BTreeMap::new();
    for r in results {
        if r.success() {
            continue;
        }
        *counts.entry(classify_failure(r)?).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Render a failure breakdown as a share table.
pub fn render_failures(counts: &BTreeMap<FailureCause, usize>, episodes: usize) -> String {
    let failures: usize = counts.values().sum();
    let mut out = format!(
        "episodes: {episodes}, failures: {failures}\n{:<26}{:>10}{:>10}\n",
        "failure cause", "episodes", "share"
    );
    let mut ordered: Vec<(&FailureCause, &usize)> = counts.iter().collect();
    // Largest first; ties resolve by enum order (most specific first).
    ordered.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    for (cause, n) in ordered {
        let share = if failures > 0 {
            100.0 * *n as f64 / failures as f64
        } else {
            0.0
        };
        out.push_str(&format!("{:<26}{:>10}{:>9.1}%\n", cause.label(), n, share));
    }
    out
}

/// One ablation variant: which groups were dropped and how it evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub dropped: BTreeSet<FeatureGroup>,
    pub label: String,
    pub delta_ratio: f64,
    pub converged: bool,
    pub report: EvalReport,
}

fn variant_label(dropped: &BTreeSet<FeatureGroup>) -> String {
    if dropped.is_empty() {
        "full".to_string()
    } else {
        let names: Vec<&str> = dropped.iter().map(|g| g.name()).collect();
        format!("drop {}", names.join("+"))
    }
}

/// The usual grid: all features, then each group dropped singly.
pub fn standard_ablation_variants() -> Vec<BTreeSet<FeatureGroup>> {
    let mut variants = vec![BTreeSet::new()];
    for g in FeatureGroup::ALL {
        variants.push([g].into_iter().collect());
    }
    variants
}

/// Retrain and evaluate once per variant, holding seeds and every other
/// hyperparameter fixed so the dropped groups are the only difference.
/// Returns runs in variant order along with each training log.
pub fn ablate(
    variants: &[BTreeSet<FeatureGroup>],
    corpus: &Corpus,
    index: &MentionIndex,
    train_pairs: &[EntityPair],
    eval_pairs: &[EntityPair],
    base: &Hyperparams,
    train_seed: u64,
    eval_cfg: &EvalConfig,
) -> Result<(Vec<AblationRun>, Vec<TrainingLog>)> {
    let mut runs = Vec::with_capacity(variants.len());
    let mut logs = Vec::with_capacity(variants.len());
    for dropped in variants {
        let mut hp = base.clone();
        hp.dropped_groups = dropped.clone();
        let trained = train(corpus, index, train_pairs, &hp, train_seed)?;
        let report = evaluate(
            &QueryStrategy::Policy(trained.model),
            eval_pairs,
            corpus,
            index,
            eval_cfg,
            Some(train_pairs),
        )?;
        runs.push(AblationRun {
            dropped: dropped.clone(),
            label: variant_label(dropped),
            delta_ratio: trained.log.delta_ratio(),
            converged: trained.log.converged(),
            report,
        });
        logs.push(trained.log);
    }
    Ok((runs, logs))
}

/// Render ablation runs as a grid.
pub fn render_ablation(runs: &[AblationRun]) -> String {
    let mut out = format!(
        "{:<14}{:>8}{:>10}{:>10}{:>10}{:>12}{:>12}\n",
        "variant", "paths", "fraction", "queries", "papers", "delta ratio", "converged"
    );
    for run in runs {
        out.push_str(&format!(
            "{:<14}{:>8}{:>10.3}{:>10}{:>10}{:>12.3}{:>12}\n",
            run.label,
            run.report.paths_recovered.count,
            run.report.paths_recovered.fraction,
            run.report.ir_queries,
            run.report.unique_papers,
            run.delta_ratio,
            run.converged,
        ));
    }
    out
}

/// Serialize ablation runs as a JSON array.
pub fn save_ablation(runs: &[AblationRun], path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(runs).expect("runs serialize");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Disjoint train/eval pairs sampled from the reachable pairs of the
/// ground truth. Both halves come back sorted.
pub fn split_pairs(
    graph: &GroundTruthGraph,
    n_train: usize,
    n_eval: usize,
    seed: u64,
) -> Result<(Vec<EntityPair>, Vec<EntityPair>)> {
    if n_train == 0 || n_eval == 0 {
        return Err(Error::EmptyPairs);
    }
    let mut all = graph.connected_pairs();
    if n_train + n_eval > all.len() {
        return Err(Error::NotEnoughPairs {
            wanted: n_train + n_eval,
            available: all.len(),
        });
    }
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    let mut train: Vec<EntityPair> = all[..n_train].to_vec();
    let mut eval: Vec<EntityPair> = all[n_train..n_train + n_eval].to_vec();
    train.sort();
    eval.sort();
    Ok((train, eval))
}

/// Write pairs as tab-separated `source<TAB>dest` lines.
pub fn save_pairs(pairs: &[EntityPair], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&format!("{}\t{}\n", p.source, p.dest));
    }
    write_atomic(path, out.as_bytes())
}

/// Load pairs written by [`save_pairs`].
pub fn load_pairs(path: &Path) -> Result<Vec<EntityPair>> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut pairs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(source), Some(dest), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Parse {
                path: display.clone(),
                line: idx + 1,
                message: "expected exactly two tab-separated fields".into(),
            });
        };
        let source = source.parse().map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            message: format!("{e}"),
        })?;
        let dest = dest.parse().map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            message: format!("{e}"),
        })?;
        pairs.push(EntityPair::new(source, dest)?);
    }
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_ground_truth, synthesize_corpus, DocId, SynthesisConfig};
    use crate::engine::{IterationRecord, SearchOutcome};
    use crate::graph::SearchGraph;
    use crate::index::{build_index, QueryMode};
    use crate::policy::QueryAction;

    fn pid(s: &str) -> ParticipantId {
        ParticipantId::new(s).unwrap()
    }

    fn world(seed: u64) -> (Corpus, MentionIndex) {
        let g = generate_ground_truth(40, 110, seeds::derive_seed(seed, "ground-truth")).unwrap();
        let corpus =
            synthesize_corpus(&g, &SynthesisConfig::new(350, 2, 6, seeds::derive_seed(seed, "documents")))
                .unwrap();
        let index = build_index(&corpus);
        (corpus, index)
    }

    #[test]
    fn parallel_and_sequential_evaluation_agree() {
        let (corpus, index) = world(3);
        let pairs: Vec<EntityPair> = corpus.ground_truth().connected_pairs()
            [..40]
            .to_vec();
        let cfg = EvalConfig::with_noise(NoiseModel::lossy(0), 11);
        let a = evaluate(&QueryStrategy::BaselineGreedy, &pairs, &corpus, &index, &cfg, None)
            .unwrap();
        let b = evaluate_sequential(
            &QueryStrategy::BaselineGreedy,
            &pairs,
            &corpus,
            &index,
            &cfg,
            None,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn evaluation_is_deterministic_across_runs() {
        let (corpus, index) = world(4);
        let pairs: Vec<EntityPair> = corpus.ground_truth().connected_pairs()[..25].to_vec();
        let cfg = EvalConfig::with_noise(NoiseModel::lossy(0), 5);
        let a = evaluate(&QueryStrategy::BaselineGreedy, &pairs, &corpus, &index, &cfg, None)
            .unwrap();
        let b = evaluate(&QueryStrategy::BaselineGreedy, &pairs, &corpus, &index, &cfg, None)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_rejects_overlapping_and_empty_pairs() {
        let (corpus, index) = world(5);
        let pairs: Vec<EntityPair> = corpus.ground_truth().connected_pairs()[..10].to_vec();
        let cfg = EvalConfig::noiseless(1);
        assert!(matches!(
            evaluate(&QueryStrategy::BaselineGreedy, &[], &corpus, &index, &cfg, None),
            Err(Error::EmptyPairs)
        ));
        let overlapping = pairs[..3].to_vec();
        assert!(matches!(
            evaluate(
                &QueryStrategy::BaselineGreedy,
                &pairs,
                &corpus,
                &index,
                &cfg,
                Some(&overlapping)
            ),
            Err(Error::OverlappingPairs(3))
        ));
    }

    /// Build a report whose rows carry the given (queries, papers, success)
    /// stats, with per-row doc lists disjoint across rows and reports so
    /// document unions equal sums.
    fn report_from_rows(strategy: &str, rows: Vec<(usize, usize, bool)>) -> EvalReport {
        let docs_for = |i: usize, papers: usize| -> Vec<DocId> {
            (0..papers)
                .map(|j| DocId::new(format!("{strategy}:{i}:{j}")).unwrap())
                .collect()
        };
        report_from_pair_rows(
            strategy,
            rows.iter()
                .enumerate()
                .map(|(i, (queries, papers, success))| (*queries, docs_for(i, *papers), *success))
                .collect(),
        )
    }

    /// Build a report from explicit per-row doc lists (so tests can overlap
    /// documents across episodes).
    fn report_from_pair_rows(strategy: &str, rows: Vec<(usize, Vec<DocId>, bool)>) -> EvalReport {
        let pairs: Vec<PairRow> = rows
            .iter()
            .enumerate()
            .map(|(i, (queries, docs, success))| PairRow {
                source: pid(&format!("A{i}")),
                dest: pid(&format!("B{i}")),
                outcome: if *success { "path_found" } else { "no_change" }.to_string(),
                iterations: 1,
                queries: *queries,
                papers: docs.len(),
                docs: docs.clone(),
            })
            .collect();
        let successes = rows.iter().filter(|r| r.2).count();
        let union: BTreeSet<&DocId> = rows.iter().flat_map(|r| r.1.iter()).collect();
        EvalReport {
            strategy: strategy.to_string(),
            seed: 0,
            pair_count: rows.len(),
            ir_queries: rows.iter().map(|r| r.0).sum(),
            unique_papers: union.len(),
            unique_papers_within_episodes: rows.iter().map(|r| r.1.len()).sum(),
            paths_recovered: PathsRecovered {
                count: successes,
                fraction: successes as f64 / rows.len() as f64,
            },
            pairs,
        }
    }

    #[test]
    fn bootstrap_on_identical_reports_gives_p_one() {
        let a = report_from_rows("x", vec![(4, 10, true), (2, 5, false), (6, 9, true)]);
        let p = bootstrap_test(&a, &a, 500, 9).unwrap();
        // Ties count against the hypothesis in every resample.
        assert_eq!(p.p_fewer_papers, 1.0);
        assert_eq!(p.p_fewer_queries, 1.0);
        assert_eq!(p.p_more_paths, 1.0);
    }

    #[test]
    fn bootstrap_on_strict_dominance_gives_p_zero() {
        // Every row must lose on every metric, else a resample repeating
        // a lone exception row could tie.
        let a = report_from_rows(
            "worse",
            vec![(10, 30, false), (12, 28, false), (9, 25, false), (11, 27, false)],
        );
        let b = report_from_rows(
            "better",
            vec![(5, 10, true), (6, 9, true), (4, 8, true), (5, 11, true)],
        );
        let p = bootstrap_test(&a, &b, 500, 9).unwrap();
        assert_eq!(p.p_fewer_papers, 0.0);
        assert_eq!(p.p_fewer_queries, 0.0);
        assert_eq!(p.p_more_paths, 0.0);
    }

    #[test]
    fn bootstrap_unions_shared_docs_instead_of_summing() {
        let doc = |s: &str| DocId::new(s).unwrap();
        // Report `a`: seven fresh docs per episode (disjoint), so any
        // resample's union is 7 x (distinct indices drawn).
        let a = report_from_pair_rows(
            "spread",
            (0..4)
                .map(|i| {
                    let docs = (0..7).map(|j| doc(&format!("a{i}-{j}"))).collect();
                    (10, docs, false)
                })
                .collect(),
        );
        // Report `b`: the same eight docs every episode. Summing per-episode
        // counts says b reads more (8 > 7 per row, so every resample would
        // violate "fewer papers"); the union says b reads fewer whenever a
        // resample draws at least two distinct episodes.
        let shared: Vec<DocId> = (0..8).map(|j| doc(&format!("b-{j}"))).collect();
        let b = report_from_pair_rows(
            "shared",
            (0..4).map(|_| (2, shared.clone(), true)).collect(),
        );
        let p = bootstrap_test(&a, &b, 2_000, 5).unwrap();
        // Only one-distinct-index resamples (prob 1/64) can violate.
        assert!(p.p_fewer_papers < 0.1, "p = {}", p.p_fewer_papers);
        assert_eq!(p.p_fewer_queries, 0.0);
        assert_eq!(p.p_more_paths, 0.0);
    }

    #[test]
    fn bootstrap_parallel_matches_sequential() {
        let a = report_from_rows("x", vec![(4, 10, true), (7, 5, false), (6, 9, true), (2, 2, false)]);
        let b = report_from_rows("y", vec![(3, 11, true), (6, 4, true), (7, 8, false), (2, 3, true)]);
        let p = bootstrap_test(&a, &b, 2_000, 123).unwrap();
        let q = bootstrap_test_sequential(&a, &b, 2_000, 123).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn bootstrap_rejects_bad_inputs() {
        let a = report_from_rows("x", vec![(1, 1, true)]);
        let b = report_from_rows("y", vec![(1, 1, true), (2, 2, false)]);
        assert!(matches!(
            bootstrap_test(&a, &b, 10, 0),
            Err(Error::MismatchedReports)
        ));
        assert!(matches!(
            bootstrap_test(&a, &a, 0, 0),
            Err(Error::NoResamples)
        ));
    }

    #[test]
    fn split_is_disjoint_deterministic_and_sized() {
        let g = generate_ground_truth(40, 110, 8).unwrap();
        let (train, eval) = split_pairs(&g, 50, 20, 77).unwrap();
        assert_eq!(train.len(), 50);
        assert_eq!(eval.len(), 20);
        assert_eq!(overlap_count(&train, &eval), 0);
        let (train2, eval2) = split_pairs(&g, 50, 20, 77).unwrap();
        assert_eq!(train, train2);
        assert_eq!(eval, eval2);
        let (train3, _) = split_pairs(&g, 50, 20, 78).unwrap();
        assert_ne!(train, train3);

        let total = g.connected_pairs().len();
        assert!(matches!(
            split_pairs(&g, total, 1, 0),
            Err(Error::NotEnoughPairs { .. })
        ));
    }

    #[test]
    fn pairs_file_round_trips_and_validates() {
        let g = generate_ground_truth(30, 70, 2).unwrap();
        let (train, _) = split_pairs(&g, 20, 5, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.tsv");
        save_pairs(&train, &path).unwrap();
        assert_eq!(load_pairs(&path).unwrap(), train);

        std::fs::write(&path, "A\tB\tC\n").unwrap();
        assert!(matches!(load_pairs(&path), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&path, "A\tA\n").unwrap();
        assert!(matches!(load_pairs(&path), Err(Error::IdenticalEndpoints)));
        std::fs::write(&path, "\n").unwrap();
        assert!(matches!(load_pairs(&path), Err(Error::EmptyPairs)));
    }

    fn failed_result(
        outcome: SearchOutcome,
        endpoint_a: &str,
        docs: usize,
        changed: bool,
    ) -> SearchResult {
        let record = IterationRecord {
            iteration: 0,
            endpoint_a: pid(endpoint_a),
            endpoint_b: pid("D"),
            action: QueryAction::Exploit,
            executions: vec![],
            docs: (0..docs)
                .map(|i| DocId::new(format!("d{i}")).unwrap())
                .collect(),
            new_vertices: 0,
            new_edges: 0,
            changed,
        };
        SearchResult {
            outcome,
            iterations: 1,
            total_queries: 1,
            papers_read: record.docs.iter().cloned().collect(),
            graph: SearchGraph::new(pid("S"), pid("D")).unwrap(),
            trace: vec![record],
        }
    }

    #[test]
    fn failure_classification_follows_precedence() {
        // Ungrounded endpoint wins even when results were empty.
        let r = failed_result(SearchOutcome::NoChange, "ungrounded:ff:0", 0, false);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::UngroundedParticipant);

        let r = failed_result(SearchOutcome::NoChange, "S", 0, false);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::EmptyQueryResults);

        let r = failed_result(SearchOutcome::NoChange, "S", 3, false);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::LowIeYield);

        let r = failed_result(SearchOutcome::IterationCap, "S", 3, true);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::IterationCap);

        let r = failed_result(SearchOutcome::EndpointExhausted, "S", 3, true);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::EndpointExhausted);
    }

    #[test]
    fn failure_causes_are_trace_wide_attributes() {
        // A mid-trace empty retrieval marks the whole failed episode, even
        // when later iterations retrieved documents and kept growing the
        // graph until the budget ran out.
        let mut r = failed_result(SearchOutcome::IterationCap, "S", 3, true);
        let mut empty_step = r.trace[0].clone();
        empty_step.docs.clear();
        r.trace.insert(0, empty_step);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::EmptyQueryResults);

        // A fruitless nonempty read anywhere outranks the budget stop...
        let mut r = failed_result(SearchOutcome::IterationCap, "S", 3, true);
        let mut fruitless = r.trace[0].clone();
        fruitless.changed = false;
        r.trace.insert(0, fruitless);
        assert_eq!(classify_failure(&r).unwrap(), FailureCause::LowIeYield);

        // ...and an ungrounded endpoint anywhere outranks both.
        let mut r = failed_result(SearchOutcome::IterationCap, "S", 3, true);
        let mut grounded_empty = r.trace[0].clone();
        grounded_empty.docs.clear();
        r.trace.insert(0, grounded_empty);
        let ungrounded = failed_result(SearchOutcome::NoChange, "ungrounded:aa:1", 0, false);
        r.trace.insert(0, ungrounded.trace[0].clone());
        assert_eq!(
            classify_failure(&r).unwrap(),
            FailureCause::UngroundedParticipant
        );
    }

    #[test]
    fn successful_results_cannot_be_classified() {
        let (corpus, index) = world(6);
        let pairs: Vec<EntityPair> = corpus.ground_truth().connected_pairs()[..12].to_vec();
        let cfg = EvalConfig::noiseless(2);
        let results =
            run_episodes(&QueryStrategy::BaselineGreedy, &pairs, &corpus, &index, &cfg).unwrap();
        if let Some(success) = results.iter().find(|r| r.success()) {
            assert!(matches!(classify_failure(success), Err(Error::NotAFailure)));
        }
        // Breakdown skips successes without erroring.
        let counts = failure_breakdown(&results).unwrap();
        let failures = results.iter().filter(|r| !r.success()).count();
        assert_eq!(counts.values().sum::<usize>(), failures);
    }

    #[test]
    fn comparison_table_mentions_both_strategies() {
        let a = report_from_rows("baseline", vec![(4, 10, true), (2, 5, false)]);
        let b = report_from_rows("policy", vec![(3, 8, true), (2, 4, true)]);
        let table = render_comparison(&a, &b);
        assert!(table.contains("baseline"));
        assert!(table.contains("policy"));
        assert!(table.contains("paths recovered"));
        assert!(table.contains("50.0%"));
        assert!(table.contains("100.0%"));
    }

    #[test]
    fn report_files_round_trip() {
        let a = report_from_rows("baseline", vec![(4, 10, true), (2, 5, false)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        a.save(&path).unwrap();
        assert_eq!(EvalReport::load(&path).unwrap(), a);
    }

    #[test]
    fn standard_variants_cover_all_groups_singly() {
        let variants = standard_ablation_variants();
        assert_eq!(variants.len(), 6);
        assert!(variants[0].is_empty());
        for (i, g) in FeatureGroup::ALL.into_iter().enumerate() {
            assert_eq!(variants[i + 1], [g].into_iter().collect());
        }
        assert_eq!(variant_label(&variants[0]), "full");
        assert_eq!(variant_label(&variants[3]), "drop f3");
    }

    #[test]
    fn mode_is_serializable_in_records() {
        // QueryExecution appears in serialized traces.
        let e = crate::engine::QueryExecution {
            mode: QueryMode::Conjunctive,
            results: 3,
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            "{\"mode\":\"conjunctive\",\"results\":3}"
        );
    }
}
