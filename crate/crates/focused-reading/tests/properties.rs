//! Randomized structural invariants over generated worlds.
//!
//! The unit tests and the acceptance gate check these invariants at pinned
//! configurations; the properties here check that none of them depend on a
//! particular corpus shape, seed, query strategy, or iteration budget.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use focused_reading::corpus::{generate_corpus, CorpusProfile, DocId, EntityPair};
use focused_reading::engine::{
    focused_read, EndpointStrategy, QueryStrategy, SearchConfig, SearchOutcome,
};
use focused_reading::eval::{
    bootstrap_test, bootstrap_test_sequential, evaluate, evaluate_sequential, EvalConfig,
};
use focused_reading::extraction::NoiseModel;
use focused_reading::index::{build_index, Query, QueryMode};
use focused_reading::policy::{Hyperparams, PolicyModel, TrainingMetadata};

/// Worlds small enough that one case runs in milliseconds but large enough
/// to exercise teleporting walks, annotation draws, and retrieval caps.
/// Every combination in these ranges is a valid profile: the synthesis walk
/// clamps mention targets to the participant count, and the edge budget
/// stays within the `participants * (participants - 1)` bound.
fn small_profile() -> impl Strategy<Value = CorpusProfile> {
    (
        4usize..=20,   // participants
        1usize..=3,    // edges per participant
        30usize..=120, // documents
        2usize..=3,    // mentions_min
        0usize..=3,    // mentions_max - mentions_min
        0.2f64..=1.0,  // p_annotate
        0.5f64..=1.0,  // coverage
    )
        .prop_map(
            |(participants, per, num_docs, mentions_min, spread, p_annotate, coverage)| {
                CorpusProfile {
                    participants,
                    edges: (participants * per).min(participants * (participants - 1)),
                    num_docs,
                    mentions_min,
                    mentions_max: mentions_min + spread,
                    p_annotate,
                    coverage,
                }
            },
        )
}

fn strategy_under_test(choice: usize) -> QueryStrategy {
    match choice {
        0 => QueryStrategy::BaselineGreedy,
        1 => QueryStrategy::AlwaysExplore,
        2 => QueryStrategy::AlwaysExploit,
        // An untrained model still exercises the policy code path: greedy
        // argmax over all-zero weights with deterministic tie-breaking.
        _ => QueryStrategy::Policy(PolicyModel::zeroed(
            Hyperparams::default(),
            TrainingMetadata::untrained(),
        )),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Boolean query algebra on arbitrary worlds: conjunctive results are
    /// a subset of disjunctive ones, cardinalities respect the posting
    /// bounds, results are strictly sorted (so unique), reruns are
    /// identical, and a retrieval cap keeps the lowest doc ids.
    #[test]
    fn query_algebra_holds_on_random_worlds(
        profile in small_profile(),
        seed in 0u64..1_000_000,
        limit in 1usize..=8,
    ) {
        let corpus = generate_corpus(&profile, seed).expect("profile is valid");
        let uncapped = build_index(&corpus);
        let capped = build_index(&corpus).with_retrieval_limit(Some(limit));
        let participants: Vec<_> = corpus.ground_truth().participants().iter().collect();

        for (i, a) in participants.iter().enumerate() {
            for b in participants.iter().skip(i + 1) {
                let conj_q = Query::new((*a).clone(), (*b).clone(), QueryMode::Conjunctive)
                    .expect("distinct endpoints");
                let disj_q = Query::new((*a).clone(), (*b).clone(), QueryMode::Disjunctive)
                    .expect("distinct endpoints");
                let conj = uncapped.run_query(&conj_q);
                let disj = uncapped.run_query(&disj_q);
                let pa = uncapped.posting(a);
                let pb = uncapped.posting(b);

                let disj_set: BTreeSet<&DocId> = disj.iter().collect();
                prop_assert!(
                    conj.iter().all(|d| disj_set.contains(d)),
                    "conjunctive not a subset of disjunctive for ({a}, {b})"
                );
                prop_assert!(conj.len() <= pa.len().min(pb.len()));
                prop_assert!(disj.len() >= pa.len().max(pb.len()));
                prop_assert!(disj.len() <= pa.len() + pb.len());
                prop_assert!(conj.windows(2).all(|w| w[0] < w[1]), "conjunctive not sorted");
                prop_assert!(disj.windows(2).all(|w| w[0] < w[1]), "disjunctive not sorted");
                prop_assert_eq!(&uncapped.run_query(&conj_q), &conj, "conjunctive rerun differs");
                prop_assert_eq!(&uncapped.run_query(&disj_q), &disj, "disjunctive rerun differs");

                // The cap truncates in ascending doc-id order, so a capped
                // result is always a prefix of the uncapped one.
                for (full, q) in [(&conj, &conj_q), (&disj, &disj_q)] {
                    let cut = capped.run_query(q);
                    prop_assert!(cut.len() <= limit);
                    prop_assert_eq!(&cut[..], &full[..cut.len().min(full.len())]);
                    prop_assert_eq!(cut.len(), full.len().min(limit));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Engine bookkeeping invariants for every strategy, budget, and noise
    /// level: budget respected, one trace record per iteration, no endpoint
    /// pair reused, query and document accounting exact, graph growth
    /// monotone, and outcome labels consistent with the trace.
    #[test]
    fn engine_invariants_hold_on_random_episodes(
        profile in small_profile(),
        seed in 0u64..1_000_000,
        budget in 1usize..=8,
        choice in 0usize..4,
        noisy in proptest::bool::ANY,
    ) {
        let corpus = generate_corpus(&profile, seed).expect("profile is valid");
        let index = build_index(&corpus).with_retrieval_limit(Some(10));
        let participants: Vec<_> = corpus.ground_truth().participants().iter().collect();
        let config = SearchConfig {
            max_iterations: budget,
            endpoint_strategy: EndpointStrategy::DegreeFrontier,
            query_strategy: strategy_under_test(choice),
        };
        let noise = if noisy {
            NoiseModel::lossy(seed)
        } else {
            NoiseModel::zero(seed)
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        for _ in 0..5 {
            let source = participants[rng.gen_range(0..participants.len())];
            let mut dest = participants[rng.gen_range(0..participants.len())];
            if dest == source {
                let at = participants.iter().position(|p| p == &dest).unwrap();
                dest = participants[(at + 1) % participants.len()];
            }
            let result = focused_read(source, dest, &corpus, &index, &config, &noise)
                .expect("episode runs");

            prop_assert!(result.iterations >= 1 && result.iterations <= budget);
            prop_assert_eq!(result.trace.len(), result.iterations);

            let mut used = BTreeSet::new();
            let mut queries = 0usize;
            let mut docs = BTreeSet::new();
            for (at, record) in result.trace.iter().enumerate() {
                prop_assert_eq!(record.iteration, at, "iterations numbered from 0 in trace order");
                prop_assert_ne!(&record.endpoint_a, &record.endpoint_b);
                let key = if record.endpoint_a <= record.endpoint_b {
                    (record.endpoint_a.clone(), record.endpoint_b.clone())
                } else {
                    (record.endpoint_b.clone(), record.endpoint_a.clone())
                };
                prop_assert!(used.insert(key), "endpoint pair reused");
                prop_assert!(!record.executions.is_empty());
                prop_assert!(record.executions.len() <= 2, "at most one relax per iteration");
                queries += record.executions.len();
                docs.extend(record.docs.iter().cloned());
            }
            prop_assert_eq!(queries, result.total_queries);
            prop_assert_eq!(&docs, &result.papers_read);

            let added_vertices: usize = result.trace.iter().map(|r| r.new_vertices).sum();
            let added_edges: usize = result.trace.iter().map(|r| r.new_edges).sum();
            prop_assert_eq!(result.graph.vertex_count(), 2 + added_vertices);
            prop_assert_eq!(result.graph.edge_count(), added_edges);

            match &result.outcome {
                SearchOutcome::PathFound(path) => {
                    prop_assert!(result.success());
                    prop_assert_eq!(path.vertices.first(), Some(source));
                    prop_assert_eq!(path.vertices.last(), Some(dest));
                }
                SearchOutcome::NoChange => {
                    prop_assert!(!result.trace.last().unwrap().changed);
                }
                SearchOutcome::IterationCap => {
                    prop_assert_eq!(result.iterations, budget);
                }
                SearchOutcome::EndpointExhausted => {}
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The rayon and sequential code paths are interchangeable: episode
    /// evaluation and the paired bootstrap produce identical reports and
    /// p-values for the same inputs, regardless of seed or strategy.
    #[test]
    fn parallel_and_sequential_paths_agree(
        seed in 0u64..1_000_000,
        noisy in proptest::bool::ANY,
    ) {
        let profile = CorpusProfile {
            participants: 30,
            edges: 80,
            num_docs: 300,
            mentions_min: 2,
            mentions_max: 5,
            p_annotate: 0.6,
            coverage: 1.0,
        };
        let corpus = generate_corpus(&profile, seed).expect("profile is valid");
        let index = build_index(&corpus).with_retrieval_limit(Some(10));
        let participants: Vec<_> = corpus.ground_truth().participants().iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::new();
        let mut seen = BTreeSet::new();
        while pairs.len() < 12 {
            let s = participants[rng.gen_range(0..participants.len())].clone();
            let d = participants[rng.gen_range(0..participants.len())].clone();
            if s != d && seen.insert((s.clone(), d.clone())) {
                pairs.push(EntityPair { source: s, dest: d });
            }
        }
        let noise = if noisy {
            NoiseModel::lossy(0)
        } else {
            NoiseModel::zero(0)
        };
        let cfg = EvalConfig::with_noise(noise, seed);

        let reports: Vec<_> = [QueryStrategy::BaselineGreedy, QueryStrategy::AlwaysExplore]
            .into_iter()
            .map(|strategy| {
                let par = evaluate(&strategy, &pairs, &corpus, &index, &cfg, None)
                    .expect("parallel evaluation runs");
                let seq = evaluate_sequential(&strategy, &pairs, &corpus, &index, &cfg, None)
                    .expect("sequential evaluation runs");
                prop_assert_eq!(&par, &seq, "evaluation differs between code paths");
                Ok(par)
            })
            .collect::<Result<_, TestCaseError>>()?;

        let par = bootstrap_test(&reports[0], &reports[1], 500, seed).expect("bootstrap runs");
        let seq = bootstrap_test_sequential(&reports[0], &reports[1], 500, seed)
            .expect("sequential bootstrap runs");
        prop_assert_eq!(par, seq, "bootstrap differs between code paths");
    }
}
