//! Synthetic world: ground-truth interaction graph plus document corpus.
//!
//! The ground truth is a signed directed graph over named participants,
//! grown by preferential attachment so a few hub participants accumulate
//! most of the edges. Documents are synthesized from short random walks on
//! the undirected projection of that graph: each document mentions the
//! walked participants and annotates, with probability `p_annotate`, the
//! ground-truth edges that lie entirely inside its mention set. Because
//! walks follow edges, participants that interact also tend to be mentioned
//! together, which is the regularity retrieval later exploits.
//!
//! A coverage pass then guarantees (by default) that every ground-truth
//! edge is annotated in at least one document, so failures to recover a
//! path are attributable to search behavior and reader noise, never to the
//! corpus silently lacking the evidence.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::write_atomic;
use crate::seeds;

/// Prefix reserved for placeholder entities produced by the noisy reader.
///
/// Corpora must never contain ids in this namespace; a query against one is
/// guaranteed to retrieve nothing, which is exactly how grounding failures
/// manifest downstream.
pub const UNGROUNDED_PREFIX: &str = "ungrounded:";

/// Corpus file format version written and accepted by this crate.
pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Name of a participant (gene, protein, ...) in the closed world.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(String);

impl ParticipantId {
    /// Validate and wrap an id. Ids must be non-empty and whitespace-free.
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidParticipantId(id));
        }
        Ok(ParticipantId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for placeholder ids minted by the noisy reader.
    pub fn is_ungrounded(&self) -> bool {
        self.0.starts_with(UNGROUNDED_PREFIX)
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ParticipantId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ParticipantId::new(s)
    }
}

/// Identifier of a document in the corpus.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidDocId(id));
        }
        Ok(DocId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sign of a regulatory interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Positive => f.write_str("positive"),
            Polarity::Negative => f.write_str("negative"),
        }
    }
}

/// A signed directed interaction: `controller` regulates `controlled`.
///
/// The same struct serves as a ground-truth edge and as a document
/// annotation, since both carry exactly these fields.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignedEdge {
    pub controller: ParticipantId,
    pub controlled: ParticipantId,
    pub polarity: Polarity,
}

impl SignedEdge {
    pub fn new(controller: ParticipantId, controlled: ParticipantId, polarity: Polarity) -> Self {
        SignedEdge {
            controller,
            controlled,
            polarity,
        }
    }
}

impl fmt::Display for SignedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            self.controller, self.polarity, self.controlled
        )
    }
}

/// An ordered (source, destination) query pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityPair {
    pub source: ParticipantId,
    pub dest: ParticipantId,
}

impl EntityPair {
    pub fn new(source: ParticipantId, dest: ParticipantId) -> Result<Self> {
        if source == dest {
            return Err(Error::IdenticalEndpoints);
        }
        Ok(EntityPair { source, dest })
    }
}

impl fmt::Display for EntityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.source, self.dest)
    }
}

/// The closed-world interaction graph documents are synthesized from.
///
/// At most one edge exists per ordered participant pair; its polarity is a
/// label, not part of the pair's identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthGraph {
    participants: BTreeSet<ParticipantId>,
    edges: BTreeSet<SignedEdge>,
}

impl GroundTruthGraph {
    pub fn new(participants: BTreeSet<ParticipantId>, edges: BTreeSet<SignedEdge>) -> Result<Self> {
        if participants.len() < 2 {
            return Err(Error::TooFewParticipants(participants.len()));
        }
        if edges.is_empty() {
            return Err(Error::NoEdgesRequested);
        }
        for p in &participants {
            if p.is_ungrounded() {
                return Err(Error::ReservedParticipantId(p.as_str().to_string()));
            }
        }
        let mut seen_pairs = BTreeSet::new();
        for e in &edges {
            if e.controller == e.controlled {
                return Err(Error::IdenticalEndpoints);
            }
            for endpoint in [&e.controller, &e.controlled] {
                if !participants.contains(endpoint) {
                    return Err(Error::UnknownParticipant(endpoint.as_str().to_string()));
                }
            }
            if !seen_pairs.insert((e.controller.clone(), e.controlled.clone())) {
                // Two polarities on one ordered pair would make polarity
                // lookups ambiguous throughout synthesis.
                return Err(Error::EdgeBoundExceeded {
                    requested: edges.len(),
                    bound: seen_pairs.len(),
                    participants: participants.len(),
                });
            }
        }
        Ok(GroundTruthGraph {
            participants,
            edges,
        })
    }

    pub fn participants(&self) -> &BTreeSet<ParticipantId> {
        &self.participants
    }

    pub fn edges(&self) -> &BTreeSet<SignedEdge> {
        &self.edges
    }

    /// Polarity of the edge on the ordered pair (controller, controlled).
    pub fn edge_polarity(&self, controller: &ParticipantId, controlled: &ParticipantId) -> Option<Polarity> {
        self.edges
            .iter()
            .find(|e| &e.controller == controller && &e.controlled == controlled)
            .map(|e| e.polarity)
    }

    /// Neighbor sets ignoring direction; isolated participants map to empty sets.
    pub fn undirected_adjacency(&self) -> BTreeMap<ParticipantId, BTreeSet<ParticipantId>> {
        let mut adj: BTreeMap<ParticipantId, BTreeSet<ParticipantId>> = self
            .participants
            .iter()
            .map(|p| (p.clone(), BTreeSet::new()))
            .collect();
        for e in &self.edges {
            adj.get_mut(&e.controller)
                .expect("edge endpoints validated")
                .insert(e.controlled.clone());
            adj.get_mut(&e.controlled)
                .expect("edge endpoints validated")
                .insert(e.controller.clone());
        }
        adj
    }

    /// Distinct-neighbor degree of each participant, ignoring direction.
    pub fn undirected_degrees(&self) -> BTreeMap<ParticipantId, usize> {
        self.undirected_adjacency()
            .into_iter()
            .map(|(p, ns)| (p, ns.len()))
            .collect()
    }

    /// All ordered pairs (s, t) with a directed path from s to t, sorted.
    pub fn connected_pairs(&self) -> Vec<EntityPair> {
        let mut out_adj: BTreeMap<&ParticipantId, Vec<&ParticipantId>> = BTreeMap::new();
        for e in &self.edges {
            out_adj.entry(&e.controller).or_default().push(&e.controlled);
        }
        let mut pairs = Vec::new();
        for source in &self.participants {
            let mut seen: BTreeSet<&ParticipantId> = BTreeSet::new();
            let mut queue: std::collections::VecDeque<&ParticipantId> =
                std::collections::VecDeque::new();
            seen.insert(source);
            queue.push_back(source);
            while let Some(v) = queue.pop_front() {
                if let Some(ns) = out_adj.get(v) {
                    for n in ns {
                        if seen.insert(n) {
                            queue.push_back(n);
                        }
                    }
                }
            }
            for dest in seen {
                if dest != source {
                    pairs.push(EntityPair {
                        source: source.clone(),
                        dest: dest.clone(),
                    });
                }
            }
        }
        pairs.sort();
        pairs
    }
}

fn id_width(count: usize) -> usize {
    count.saturating_sub(1).to_string().len().max(3)
}

/// Grow a signed digraph by preferential attachment.
///
/// Each endpoint of each new edge is drawn with probability proportional to
/// its current undirected degree plus one (implemented as a uniform draw
/// over "one slot per vertex plus one slot per prior edge endpoint").
/// Self-loops and duplicate ordered pairs are rejected; near the density
/// bound, where rejection could stall, an absent pair is drawn directly
/// from the enumerated complement.
pub fn generate_ground_truth(
    num_participants: usize,
    num_edges: usize,
    seed: u64,
) -> Result<GroundTruthGraph> {
    if num_participants < 2 {
        return Err(Error::TooFewParticipants(num_participants));
    }
    if num_edges == 0 {
        return Err(Error::NoEdgesRequested);
    }
    let bound = num_participants * (num_participants - 1);
    if num_edges > bound {
        return Err(Error::EdgeBoundExceeded {
            requested: num_edges,
            bound,
            participants: num_participants,
        });
    }

    let width = id_width(num_participants);
    let ids: Vec<ParticipantId> = (0..num_participants)
        .map(|i| ParticipantId(format!("P{i:0width$}")))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = Vec::with_capacity(2 * num_edges);
    let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(num_edges);
    let mut edges: BTreeSet<SignedEdge> = BTreeSet::new();

    const MAX_REJECTS: usize = 10_000;
    for _ in 0..num_edges {
        let mut chosen: Option<(usize, usize)> = None;
        for _ in 0..MAX_REJECTS {
            let controller = draw_endpoint(&mut rng, num_participants, &slots);
            let controlled = draw_endpoint(&mut rng, num_participants, &slots);
            if controller == controlled || present.contains(&(controller, controlled)) {
                continue;
            }
            chosen = Some((controller, controlled));
            break;
        }
        let (controller, controlled) = match chosen {
            Some(pair) => pair,
            None => {
                // Dense regime: enumerate absent ordered pairs and pick one.
                let absent: Vec<(usize, usize)> = (0..num_participants)
                    .flat_map(|i| (0..num_participants).map(move |j| (i, j)))
                    .filter(|&(i, j)| i != j && !present.contains(&(i, j)))
                    .collect();
                absent[rng.gen_range(0..absent.len())]
            }
        };
        present.insert((controller, controlled));
        slots.push(controller);
        slots.push(controlled);
        let polarity = if rng.gen_bool(0.5) {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        edges.insert(SignedEdge {
            controller: ids[controller].clone(),
            controlled: ids[controlled].clone(),
            polarity,
        });
    }

    GroundTruthGraph::new(ids.into_iter().collect(), edges)
}

fn draw_endpoint(rng: &mut ChaCha8Rng, num_vertices: usize, slots: &[usize]) -> usize {
    let r = rng.gen_range(0..num_vertices + slots.len());
    if r < num_vertices {
        r
    } else {
        slots[r - num_vertices]
    }
}

/// One synthesized or loaded document: a mention set plus the interactions
/// it reports. Reported interactions always lie inside the mention set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    doc_id: DocId,
    mentions: BTreeSet<ParticipantId>,
    interactions: Vec<SignedEdge>,
}

impl Document {
    pub fn new(
        doc_id: DocId,
        mentions: BTreeSet<ParticipantId>,
        mut interactions: Vec<SignedEdge>,
    ) -> Result<Self> {
        if mentions.is_empty() {
            return Err(Error::MentionRangeTooSmall(0));
        }
        for e in &interactions {
            for endpoint in [&e.controller, &e.controlled] {
                if !mentions.contains(endpoint) {
                    return Err(Error::InteractionOutsideMentions {
                        doc_id: doc_id.as_str().to_string(),
                        participant: endpoint.as_str().to_string(),
                    });
                }
            }
        }
        interactions.sort();
        interactions.dedup();
        Ok(Document {
            doc_id,
            mentions,
            interactions,
        })
    }

    pub fn id(&self) -> &DocId {
        &self.doc_id
    }

    pub fn mentions(&self) -> &BTreeSet<ParticipantId> {
        &self.mentions
    }

    pub fn interactions(&self) -> &[SignedEdge] {
        &self.interactions
    }
}

/// A non-empty document collection tied to the ground truth it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    ground_truth: GroundTruthGraph,
    documents: Vec<Document>,
    seed: u64,
    by_id: BTreeMap<DocId, usize>,
}

impl Corpus {
    pub fn new(ground_truth: GroundTruthGraph, documents: Vec<Document>, seed: u64) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut by_id = BTreeMap::new();
        for (i, doc) in documents.iter().enumerate() {
            for mention in &doc.mentions {
                if mention.is_ungrounded() {
                    return Err(Error::ReservedParticipantId(mention.as_str().to_string()));
                }
                if !ground_truth.participants.contains(mention) {
                    return Err(Error::UnknownParticipant(mention.as_str().to_string()));
                }
            }
            for e in &doc.interactions {
                if !ground_truth.edges.contains(e) {
                    return Err(Error::InteractionNotInGroundTruth {
                        doc_id: doc.doc_id.as_str().to_string(),
                    });
                }
            }
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(doc.doc_id.as_str().to_string()));
            }
        }
        Ok(Corpus {
            ground_truth,
            documents,
            seed,
            by_id,
        })
    }

    pub fn ground_truth(&self) -> &GroundTruthGraph {
        &self.ground_truth
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn doc(&self, id: &DocId) -> Result<&Document> {
        self.by_id
            .get(id)
            .map(|&i| &self.documents[i])
            .ok_or_else(|| Error::UnknownDocument(id.as_str().to_string()))
    }

    /// Serialize to the line-oriented interchange format.
    pub fn to_jsonl(&self) -> String {
        let header = CorpusHeader {
            version: CORPUS_FORMAT_VERSION,
            seed: self.seed,
            participants: self.ground_truth.participants.iter().cloned().collect(),
            ground_truth_edges: self.ground_truth.edges.iter().cloned().collect(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for doc in &self.documents {
            let record = DocRecord {
                doc_id: doc.doc_id.clone(),
                mentions: doc.mentions.iter().cloned().collect(),
                interactions: doc.interactions.clone(),
            };
            out.push_str(&serde_json::to_string(&record).expect("doc serializes"));
            out.push('\n');
        }
        out
    }

    /// Content digest of the serialized corpus; identifies the corpus a
    /// policy was trained against.
    pub fn digest(&self) -> String {
        seeds::sha256_hex(self.to_jsonl().as_bytes())
    }
}

#[derive(Serialize, Deserialize)]
struct CorpusHeader {
    version: u32,
    seed: u64,
    participants: Vec<ParticipantId>,
    ground_truth_edges: Vec<SignedEdge>,
}

#[derive(Serialize, Deserialize)]
struct DocRecord {
    doc_id: DocId,
    mentions: Vec<ParticipantId>,
    interactions: Vec<SignedEdge>,
}

/// Write a corpus as one JSON header line plus one JSON line per document.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    write_atomic(path, corpus.to_jsonl().as_bytes())
}

/// Load a corpus written by [`save_corpus`], re-validating every invariant.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header_line) = lines.next().ok_or_else(|| Error::Parse {
        path: display.clone(),
        line: 1,
        message: "missing header line".into(),
    })?;
    let header_line = header_line.map_err(|e| Error::file(path, e))?;
    let header: CorpusHeader =
        serde_json::from_str(&header_line).map_err(|e| Error::Parse {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?;
    if header.version != CORPUS_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: display,
            what: "corpus",
            found: header.version,
            expected: CORPUS_FORMAT_VERSION,
        });
    }

    let ground_truth = GroundTruthGraph::new(
        header.participants.into_iter().collect(),
        header.ground_truth_edges.into_iter().collect(),
    )?;

    let mut documents = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        documents.push(Document::new(
            record.doc_id,
            record.mentions.into_iter().collect(),
            record.interactions,
        )?);
    }
    Corpus::new(ground_truth, documents, header.seed)
}

/// Knobs for document synthesis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub num_docs: usize,
    pub mentions_min: usize,
    pub mentions_max: usize,
    /// Probability that a ground-truth edge inside a document's mention set
    /// is annotated in that document.
    pub p_annotate: f64,
    /// Fraction of ground-truth edges that must be annotated somewhere;
    /// 1.0 (the default) repairs the corpus until no edge is unattested.
    pub coverage: f64,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn new(num_docs: usize, mentions_min: usize, mentions_max: usize, seed: u64) -> Self {
        SynthesisConfig {
            num_docs,
            mentions_min,
            mentions_max,
            p_annotate: 0.8,
            coverage: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_docs == 0 {
            return Err(Error::NoDocsRequested);
        }
        if self.mentions_min < 2 {
            return Err(Error::MentionRangeTooSmall(self.mentions_min));
        }
        if self.mentions_min > self.mentions_max {
            return Err(Error::MentionRangeInverted {
                min: self.mentions_min,
                max: self.mentions_max,
            });
        }
        for (name, value) in [("p_annotate", self.p_annotate), ("coverage", self.coverage)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Synthesize a corpus over `ground_truth` by random walks plus annotation.
///
/// Mention sets come from walks on the undirected projection (teleporting
/// to an unvisited participant when stuck), so co-mentions concentrate on
/// graph neighborhoods. The coverage pass may extend some documents past
/// `mentions_max`; the 2-mention lower bound always holds.
pub fn synthesize_corpus(ground_truth: &GroundTruthGraph, config: &SynthesisConfig) -> Result<Corpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let vertices: Vec<&ParticipantId> = ground_truth.participants.iter().collect();
    let n = vertices.len();
    let adjacency = ground_truth.undirected_adjacency();
    let neighbors: BTreeMap<&ParticipantId, Vec<&ParticipantId>> = adjacency
        .iter()
        .map(|(p, ns)| {
            let p_ref = ground_truth
                .participants
                .get(p)
                .expect("adjacency keys are participants");
            (p_ref, ns.iter().map(|q| {
                ground_truth
                    .participants
                    .get(q)
                    .expect("adjacency values are participants")
            }).collect())
        })
        .collect();
    let polarity_of: HashMap<(&ParticipantId, &ParticipantId), Polarity> = ground_truth
        .edges
        .iter()
        .map(|e| ((&e.controller, &e.controlled), e.polarity))
        .collect();

    struct DocBuilder {
        mentions: BTreeSet<ParticipantId>,
        interactions: BTreeSet<SignedEdge>,
    }

    let mut builders: Vec<DocBuilder> = Vec::with_capacity(config.num_docs);
    for _ in 0..config.num_docs {
        let target = rng
            .gen_range(config.mentions_min..=config.mentions_max)
            .min(n);
        let mut mentions: BTreeSet<&ParticipantId> = BTreeSet::new();
        let mut current = vertices[rng.gen_range(0..n)];
        mentions.insert(current);

        let mut steps = 0usize;
        let step_budget = 40 * target;
        while mentions.len() < target {
            let ns = &neighbors[current];
            if ns.is_empty() || steps >= step_budget {
                // Stuck (isolated vertex or a walk that keeps revisiting):
                // teleport to a uniform not-yet-mentioned participant.
                let outside: Vec<&ParticipantId> = vertices
                    .iter()
                    .filter(|v| !mentions.contains(*v))
                    .copied()
                    .collect();
                if outside.is_empty() {
                    break;
                }
                current = outside[rng.gen_range(0..outside.len())];
                mentions.insert(current);
                steps = 0;
                continue;
            }
            current = ns[rng.gen_range(0..ns.len())];
            mentions.insert(current);
            steps += 1;
        }

        // Annotate each internal ground-truth edge with probability p_annotate;
        // pairs are visited in sorted order so the draw sequence is pinned.
        let mut interactions = BTreeSet::new();
        for u in &mentions {
            for v in &mentions {
                if u == v {
                    continue;
                }
                if let Some(&polarity) = polarity_of.get(&(*u, *v)) {
                    if rng.gen_bool(config.p_annotate) {
                        interactions.insert(SignedEdge {
                            controller: (*u).clone(),
                            controlled: (*v).clone(),
                            polarity,
                        });
                    }
                }
            }
        }

        builders.push(DocBuilder {
            mentions: mentions.into_iter().cloned().collect(),
            interactions,
        });
    }

    // Coverage pass: make sure enough distinct ground-truth edges are
    // annotated somewhere, preferring documents that need the least change.
    let mut covered: BTreeSet<&SignedEdge> = BTreeSet::new();
    for b in &builders {
        for e in &b.interactions {
            if let Some(gt_edge) = ground_truth.edges.get(e) {
                covered.insert(gt_edge);
            }
        }
    }
    let required = if config.coverage >= 1.0 {
        ground_truth.edges.len()
    } else {
        (config.coverage * ground_truth.edges.len() as f64).ceil() as usize
    };
    let mut round_robin = 0usize;
    if covered.len() < required {
        let uncovered: Vec<&SignedEdge> = ground_truth
            .edges
            .iter()
            .filter(|e| !covered.contains(*e))
            .collect();
        let mut still_needed = required - covered.len();
        for edge in uncovered {
            if still_needed == 0 {
                break;
            }
            let both = builders.iter().position(|b| {
                b.mentions.contains(&edge.controller) && b.mentions.contains(&edge.controlled)
            });
            let victim = both.or_else(|| {
                builders.iter().position(|b| {
                    b.mentions.contains(&edge.controller) || b.mentions.contains(&edge.controlled)
                })
            });
            let victim = match victim {
                Some(i) => i,
                None => {
                    let i = round_robin % builders.len();
                    round_robin += 1;
                    i
                }
            };
            let b = &mut builders[victim];
            b.mentions.insert(edge.controller.clone());
            b.mentions.insert(edge.controlled.clone());
            b.interactions.insert(edge.clone());
            still_needed -= 1;
        }
    }

    let width = id_width(config.num_docs);
    let documents: Vec<Document> = builders
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            Document::new(
                DocId(format!("d{i:0width$}")),
                b.mentions,
                b.interactions.into_iter().collect(),
            )
        })
        .collect::<Result<_>>()?;

    Corpus::new(ground_truth.clone(), documents, config.seed)
}

/// Size knobs for a full world build (graph plus corpus).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusProfile {
    pub participants: usize,
    pub edges: usize,
    pub num_docs: usize,
    pub mentions_min: usize,
    pub mentions_max: usize,
    pub p_annotate: f64,
    pub coverage: f64,
}

impl Default for CorpusProfile {
    /// Desk-scale default: large enough that a handful of broad queries
    /// cannot read the whole corpus, small enough for minutes-scale runs.
    ///
    /// `p_annotate` is the calibration knob: 0.2 puts the baseline search
    /// strategy's success rate on sampled connected pairs in the 60-75%
    /// band (measured 64% at seed 42), so the corpus is hard enough that
    /// strategy differences show but easy enough that most searches can
    /// succeed. The raw [`SynthesisConfig`] default (0.8) is denser and
    /// suits unit-scale corpora.
    fn default() -> Self {
        CorpusProfile {
            participants: 200,
            edges: 600,
            num_docs: 5_000,
            mentions_min: 2,
            mentions_max: 8,
            p_annotate: 0.2,
            coverage: 1.0,
        }
    }
}

/// Build ground truth and corpus from one master seed.
///
/// Graph and document synthesis get independent derived seeds, so changing
/// one stage's internals never perturbs the other's random stream.
pub fn generate_corpus(profile: &CorpusProfile, master_seed: u64) -> Result<Corpus> {
    let graph = generate_ground_truth(
        profile.participants,
        profile.edges,
        seeds::derive_seed(master_seed, "ground-truth"),
    )?;
    let config = SynthesisConfig {
        num_docs: profile.num_docs,
        mentions_min: profile.mentions_min,
        mentions_max: profile.mentions_max,
        p_annotate: profile.p_annotate,
        coverage: profile.coverage,
        seed: seeds::derive_seed(master_seed, "documents"),
    };
    synthesize_corpus(&graph, &config)
}
