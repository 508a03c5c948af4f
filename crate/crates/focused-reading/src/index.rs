//! Boolean mention index over a corpus.
//!
//! Retrieval is deliberately primitive: a query names two participants and
//! is either conjunctive (documents mentioning both) or disjunctive
//! (documents mentioning either). There is no ranking; result sets are
//! exact unless an explicit retrieval cap is configured, in which case the
//! lowest document ids are kept. Querying an id with no postings — for
//! example a placeholder minted by the noisy reader — legitimately returns
//! the empty set.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocId, ParticipantId};
use crate::error::{Error, Result};
use crate::manifest::write_atomic;

/// Index file format version written and accepted by this crate.
pub const INDEX_FORMAT_VERSION: u32 = 1;

/// How the two query terms combine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// Documents mentioning both participants.
    Conjunctive,
    /// Documents mentioning at least one participant.
    Disjunctive,
}

impl std::fmt::Display for QueryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryMode::Conjunctive => f.write_str("conjunctive"),
            QueryMode::Disjunctive => f.write_str("disjunctive"),
        }
    }
}

/// A two-term boolean query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub a: ParticipantId,
    pub b: ParticipantId,
    pub mode: QueryMode,
}

impl Query {
    pub fn new(a: ParticipantId, b: ParticipantId, mode: QueryMode) -> Result<Self> {
        if a == b {
            return Err(Error::IdenticalEndpoints);
        }
        Ok(Query { a, b, mode })
    }
}

/// Inverted mention index: participant id -> sorted document ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MentionIndex {
    postings: BTreeMap<ParticipantId, Vec<DocId>>,
    doc_count: usize,
    retrieval_limit: Option<usize>,
}

/// Index every mention of every document.
pub fn build_index(corpus: &Corpus) -> MentionIndex {
    let mut postings: BTreeMap<ParticipantId, Vec<DocId>> = BTreeMap::new();
    for doc in corpus.documents() {
        for mention in doc.mentions() {
            postings
                .entry(mention.clone())
                .or_default()
                .push(doc.id().clone());
        }
    }
    for list in postings.values_mut() {
        list.sort();
        list.dedup();
    }
    MentionIndex {
        postings,
        doc_count: corpus.documents().len(),
        retrieval_limit: None,
    }
}

impl MentionIndex {
    /// Cap result sets at `limit` documents (lowest ids win); `None` means exact.
    pub fn with_retrieval_limit(mut self, limit: Option<usize>) -> Self {
        self.retrieval_limit = limit;
        self
    }

    pub fn retrieval_limit(&self) -> Option<usize> {
        self.retrieval_limit
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    /// Sorted postings for one participant; empty slice when unindexed.
    pub fn posting(&self, participant: &ParticipantId) -> &[DocId] {
        self.postings
            .get(participant)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Execute a boolean query; the result is sorted and duplicate-free by
    /// construction. When a retrieval limit is set and the full result
    /// overflows it, the lowest document ids are kept, so truncation is
    /// deterministic and independent of evaluation order.
    pub fn run_query(&self, query: &Query) -> Vec<DocId> {
        let pa = self.posting(&query.a);
        let pb = self.posting(&query.b);
        let mut merged = match query.mode {
            QueryMode::Conjunctive => intersect_sorted(pa, pb),
            QueryMode::Disjunctive => union_sorted(pa, pb),
        };
        if let Some(limit) = self.retrieval_limit {
            merged.truncate(limit);
        }
        merged
    }

    fn to_jsonl(&self) -> String {
        let header = IndexHeader {
            version: INDEX_FORMAT_VERSION,
            doc_count: self.doc_count,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (id, doc_ids) in &self.postings {
            let record = PostingRecord {
                id: id.clone(),
                doc_ids: doc_ids.clone(),
            };
            out.push_str(&serde_json::to_string(&record).expect("posting serializes"));
            out.push('\n');
        }
        out
    }

    /// Write the index as one JSON header line plus one line per posting list.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }

    /// Load an index written by [`save`](Self::save). The retrieval limit is
    /// a runtime setting and is not persisted.
    pub fn load(path: &Path) -> Result<Self> {
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
        let header: IndexHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::Parse {
                path: display.clone(),
                line: 1,
                message: e.to_string(),
            })?;
        if header.version != INDEX_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                path: display,
                what: "index",
                found: header.version,
                expected: INDEX_FORMAT_VERSION,
            });
        }

        let mut postings = BTreeMap::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::file(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: PostingRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    path: display.clone(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            let mut doc_ids = record.doc_ids;
            doc_ids.sort();
            doc_ids.dedup();
            postings.insert(record.id, doc_ids);
        }
        Ok(MentionIndex {
            postings,
            doc_count: header.doc_count,
            retrieval_limit: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    version: u32,
    doc_count: usize,
}

#[derive(Serialize, Deserialize)]
struct PostingRecord {
    id: ParticipantId,
    doc_ids: Vec<DocId>,
}

fn intersect_sorted(a: &[DocId], b: &[DocId]) -> Vec<DocId> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn union_sorted(a: &[DocId], b: &[DocId]) -> Vec<DocId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i].clone());
            i += 1;
        } else if i >= a.len() || b[j] < a[i] {
            out.push(b[j].clone());
            j += 1;
        } else {
            out.push(a[i].clone());
            i += 1;
            j += 1;
        }
    }
    out
}
