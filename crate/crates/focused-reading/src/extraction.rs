//! Black-box reading: recover interactions from retrieved documents.
//!
//! Reading a document yields the interactions it annotates, degraded by a
//! two-parameter noise model: each interaction is dropped outright with
//! probability `p_miss`, and each surviving endpoint is replaced with a
//! fresh placeholder id with probability `p_unground` (a grounding
//! failure - the reader saw an entity it could not map to the curated
//! namespace). Placeholder ids live under a reserved prefix that is never
//! indexed, so querying one later retrieves nothing.
//!
//! Noise is deterministic per call: the rng is seeded from the model seed
//! plus the sorted document ids being read, so the same read in any two
//! runs (or threads) degrades identically.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocId, ParticipantId, Polarity, UNGROUNDED_PREFIX};
use crate::error::{Error, Result};
use crate::seeds;

/// One recovered interaction, tagged with the document it came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub controller: ParticipantId,
    pub controlled: ParticipantId,
    pub polarity: Polarity,
    pub source_doc: DocId,
}

/// Reader degradation parameters plus the seed its rng streams derive from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    p_unground: f64,
    p_miss: f64,
    rng_seed: u64,
}

impl NoiseModel {
    pub fn new(p_unground: f64, p_miss: f64, rng_seed: u64) -> Result<Self> {
        for (name, value) in [("p_unground", p_unground), ("p_miss", p_miss)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        Ok(NoiseModel {
            p_unground,
            p_miss,
            rng_seed,
        })
    }

    /// Perfect reader: every annotated interaction comes back intact.
    pub fn zero(rng_seed: u64) -> Self {
        NoiseModel {
            p_unground: 0.0,
            p_miss: 0.0,
            rng_seed,
        }
    }

    /// Mildly degraded reader: 2% grounding failures, 10% missed
    /// interactions — roughly what a decent machine reader achieves.
    pub fn lossy(rng_seed: u64) -> Self {
        NoiseModel {
            p_unground: 0.02,
            p_miss: 0.1,
            rng_seed,
        }
    }

    /// Same degradation rates under a different seed.
    pub fn with_seed(&self, rng_seed: u64) -> Self {
        NoiseModel { rng_seed, ..*self }
    }

    pub fn p_unground(&self) -> f64 {
        self.p_unground
    }

    pub fn p_miss(&self) -> f64 {
        self.p_miss
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_unground == 0.0 && self.p_miss == 0.0
    }
}

/// Read a batch of documents and return every recovered interaction.
///
/// `docs` must be sorted and duplicate-free (retrieval output already is).
/// With zero noise this returns exactly the documents' annotations, keyed
/// by source document.
pub fn read_documents(
    corpus: &Corpus,
    docs: &[DocId],
    noise: &NoiseModel,
) -> Result<BTreeSet<Interaction>> {
    // One rng per call, seeded from the document set, so noise does not
    // depend on what was read earlier in the episode.
    let mut payload = Vec::new();
    for id in docs {
        payload.extend_from_slice(id.as_str().as_bytes());
        payload.push(b'\n');
    }
    let call_seed = seeds::derive_seed_bytes(noise.rng_seed, "read-documents", &payload);
    let mut rng = ChaCha8Rng::seed_from_u64(call_seed);
    let call_tag = (call_seed >> 32) as u32;
    let mut minted = 0u32;

    let mut found = BTreeSet::new();
    for doc_id in docs {
        let doc = corpus.doc(doc_id)?;
        for edge in doc.interactions() {
            if noise.p_miss > 0.0 && rng.gen_bool(noise.p_miss) {
                continue;
            }
            let mut endpoints = [edge.controller.clone(), edge.controlled.clone()];
            for endpoint in &mut endpoints {
                if noise.p_unground > 0.0 && rng.gen_bool(noise.p_unground) {
                    *endpoint = mint_placeholder(call_tag, &mut minted);
                }
            }
            let [controller, controlled] = endpoints;
            found.insert(Interaction {
                controller,
                controlled,
                polarity: edge.polarity,
                source_doc: doc_id.clone(),
            });
        }
    }
    Ok(found)
}

/// Fresh placeholder id for an entity the reader failed to ground.
fn mint_placeholder(call_tag: u32, minted: &mut u32) -> ParticipantId {
    let id = format!("{UNGROUNDED_PREFIX}{call_tag:08x}:{minted}");
    *minted += 1;
    ParticipantId::new(id).expect("placeholder ids are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_ground_truth, synthesize_corpus, SynthesisConfig, SignedEdge};

    fn world(seed: u64) -> Corpus {
        let g = generate_ground_truth(30, 80, seed).unwrap();
        synthesize_corpus(&g, &SynthesisConfig::new(200, 2, 5, seed + 1)).unwrap()
    }

    fn all_doc_ids(corpus: &Corpus) -> Vec<DocId> {
        corpus.documents().iter().map(|d| d.id().clone()).collect()
    }

    #[test]
    fn noiseless_reading_recovers_annotations_exactly() {
        let corpus = world(5);
        let docs = all_doc_ids(&corpus);
        let found = read_documents(&corpus, &docs, &NoiseModel::zero(0)).unwrap();

        let mut expected = BTreeSet::new();
        for doc in corpus.documents() {
            for e in doc.interactions() {
                expected.insert(Interaction {
                    controller: e.controller.clone(),
                    controlled: e.controlled.clone(),
                    polarity: e.polarity,
                    source_doc: doc.id().clone(),
                });
            }
        }
        assert_eq!(found, expected);
    }

    #[test]
    fn same_call_same_noise() {
        let corpus = world(6);
        let docs = all_doc_ids(&corpus);
        let noise = NoiseModel::new(0.1, 0.2, 99).unwrap();
        let a = read_documents(&corpus, &docs, &noise).unwrap();
        let b = read_documents(&corpus, &docs, &noise).unwrap();
        assert_eq!(a, b);
        let c = read_documents(&corpus, &docs, &noise.with_seed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn miss_rate_thins_output_proportionally() {
        let corpus = world(7);
        let docs = all_doc_ids(&corpus);
        let total = read_documents(&corpus, &docs, &NoiseModel::zero(0))
            .unwrap()
            .len() as f64;
        let kept = read_documents(&corpus, &docs, &NoiseModel::new(0.0, 0.5, 3).unwrap())
            .unwrap()
            .len() as f64;
        let rate = kept / total;
        assert!(
            (0.35..=0.65).contains(&rate),
            "expected ~half survive, got {rate}"
        );
    }

    #[test]
    fn p_miss_one_drops_everything() {
        let corpus = world(8);
        let docs = all_doc_ids(&corpus);
        let found =
            read_documents(&corpus, &docs, &NoiseModel::new(0.0, 1.0, 0).unwrap()).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn ungrounded_endpoints_use_reserved_prefix_and_are_fresh() {
        let corpus = world(9);
        let docs = all_doc_ids(&corpus);
        let found =
            read_documents(&corpus, &docs, &NoiseModel::new(0.5, 0.0, 17).unwrap()).unwrap();

        let placeholders: Vec<&ParticipantId> = found
            .iter()
            .flat_map(|i| [&i.controller, &i.controlled])
            .filter(|p| p.is_ungrounded())
            .collect();
        assert!(!placeholders.is_empty(), "p_unground=0.5 minted nothing");
        for p in &placeholders {
            assert!(p.as_str().starts_with(UNGROUNDED_PREFIX));
        }
        // Freshness: no placeholder id repeats across interactions.
        let unique: BTreeSet<_> = placeholders.iter().collect();
        assert_eq!(unique.len(), placeholders.len());
    }

    #[test]
    fn unknown_doc_id_is_an_error() {
        let corpus = world(10);
        let ghost = vec![DocId::new("nope").unwrap()];
        assert!(matches!(
            read_documents(&corpus, &ghost, &NoiseModel::zero(0)),
            Err(Error::UnknownDocument(_))
        ));
    }

    #[test]
    fn noise_model_validates_probabilities() {
        assert!(NoiseModel::new(1.5, 0.0, 0).is_err());
        assert!(NoiseModel::new(0.0, -0.1, 0).is_err());
        assert!(NoiseModel::new(f64::NAN, 0.0, 0).is_err());
        assert!(NoiseModel::new(1.0, 1.0, 0).is_ok());
    }

    #[test]
    fn interaction_ordering_is_stable_for_reports() {
        // Interactions sort by controller, then controlled, then polarity,
        // then source doc — the order expansion relies on.
        let corpus = world(11);
        let docs = all_doc_ids(&corpus);
        let found = read_documents(&corpus, &docs, &NoiseModel::zero(0)).unwrap();
        let v: Vec<&Interaction> = found.iter().collect();
        for w in v.windows(2) {
            assert!(w[0] < w[1]);
        }
        let _ = SignedEdge::new(
            v[0].controller.clone(),
            v[0].controlled.clone(),
            v[0].polarity,
        );
    }
}
