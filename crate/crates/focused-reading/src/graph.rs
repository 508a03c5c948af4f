//! The incremental graph assembled during one search episode.
//!
//! Starts containing just the source and destination vertices and grows as
//! extraction output is folded in. Each vertex remembers the iteration
//! that introduced it and how many queries have used it as an endpoint;
//! an incremental union-find tracks undirected components (the learned
//! policy's "are my endpoints already in the same blob?" signal), while
//! success is a *directed* path from source to destination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::corpus::{ParticipantId, Polarity};
use crate::error::{Error, Result};
use crate::extraction::Interaction;

/// What one expansion changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExpandStats {
    pub new_vertices: usize,
    pub new_edges: usize,
}

impl ExpandStats {
    pub fn changed(&self) -> bool {
        self.new_vertices > 0 || self.new_edges > 0
    }
}

/// A directed path through the search graph, with edge polarities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphPath {
    pub vertices: Vec<ParticipantId>,
    pub polarities: Vec<Polarity>,
}

impl GraphPath {
    pub fn edge_count(&self) -> usize {
        self.polarities.len()
    }
}

impl fmt::Display for GraphPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, " -{}-> ", self.polarities[i - 1])?;
            }
            f.write_str(v.as_str())?;
        }
        Ok(())
    }
}

/// Graph grown from extraction output during one episode.
#[derive(Clone, Debug)]
pub struct SearchGraph {
    source: ParticipantId,
    dest: ParticipantId,
    ids: Vec<ParticipantId>,
    index_of: BTreeMap<ParticipantId, u32>,
    out_edges: Vec<BTreeMap<u32, BTreeSet<Polarity>>>,
    in_edges: Vec<BTreeMap<u32, BTreeSet<Polarity>>>,
    introduced_at: Vec<usize>,
    query_count: Vec<usize>,
    // Union-find over vertex indices; components ignore edge direction.
    parent: Vec<u32>,
    size: Vec<u32>,
    min_member: Vec<u32>,
    edge_count: usize,
    iteration: usize,
    last_expand_changed: bool,
}

impl SearchGraph {
    /// Fresh episode graph holding only the two endpoints, at iteration 0.
    pub fn new(source: ParticipantId, dest: ParticipantId) -> Result<Self> {
        if source == dest {
            return Err(Error::IdenticalEndpoints);
        }
        let mut g = SearchGraph {
            source: source.clone(),
            dest: dest.clone(),
            ids: Vec::new(),
            index_of: BTreeMap::new(),
            out_edges: Vec::new(),
            in_edges: Vec::new(),
            introduced_at: Vec::new(),
            query_count: Vec::new(),
            parent: Vec::new(),
            size: Vec::new(),
            min_member: Vec::new(),
            edge_count: 0,
            iteration: 0,
            last_expand_changed: false,
        };
        g.intern(&source);
        g.intern(&dest);
        Ok(g)
    }

    fn intern(&mut self, id: &ParticipantId) -> u32 {
        if let Some(&i) = self.index_of.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.clone());
        self.index_of.insert(id.clone(), i);
        self.out_edges.push(BTreeMap::new());
        self.in_edges.push(BTreeMap::new());
        self.introduced_at.push(self.iteration);
        self.query_count.push(0);
        self.parent.push(i);
        self.size.push(1);
        self.min_member.push(i);
        i
    }

    fn find(&self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            v = self.parent[v as usize];
        }
        v
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        let keep = {
            let a = self.min_member[big as usize] as usize;
            let b = self.min_member[small as usize] as usize;
            if self.ids[a] <= self.ids[b] {
                a as u32
            } else {
                b as u32
            }
        };
        self.min_member[big as usize] = keep;
    }

    fn idx(&self, id: &ParticipantId) -> Result<u32> {
        self.index_of
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.as_str().to_string()))
    }

    pub fn source(&self) -> &ParticipantId {
        &self.source
    }

    pub fn dest(&self) -> &ParticipantId {
        &self.dest
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Bump the iteration counter; vertices added afterwards record the new
    /// value as their introduction time.
    pub fn advance_iteration(&mut self) {
        self.iteration += 1;
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    /// Count of distinct (controller, controlled, polarity) edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, id: &ParticipantId) -> bool {
        self.index_of.contains_key(id)
    }

    /// Vertices in insertion order (endpoints first, then by discovery).
    pub fn vertices(&self) -> impl Iterator<Item = &ParticipantId> {
        self.ids.iter()
    }

    /// Distinct out-neighbors plus distinct in-neighbors.
    pub fn degree(&self, id: &ParticipantId) -> Result<usize> {
        let i = self.idx(id)? as usize;
        Ok(self.out_edges[i].len() + self.in_edges[i].len())
    }

    pub fn query_count(&self, id: &ParticipantId) -> Result<usize> {
        Ok(self.query_count[self.idx(id)? as usize])
    }

    /// Iteration at which the vertex first appeared (0 for the endpoints).
    pub fn introduced_at(&self, id: &ParticipantId) -> Result<usize> {
        Ok(self.introduced_at[self.idx(id)? as usize])
    }

    /// Note that a query used this vertex as an endpoint.
    pub fn record_query_use(&mut self, id: &ParticipantId) -> Result<()> {
        let i = self.idx(id)? as usize;
        self.query_count[i] += 1;
        Ok(())
    }

    /// Do two vertices sit in the same undirected component?
    pub fn same_component(&self, a: &ParticipantId, b: &ParticipantId) -> Result<bool> {
        Ok(self.find(self.idx(a)?) == self.find(self.idx(b)?))
    }

    /// Canonical component label: the smallest member id.
    pub fn component_id(&self, v: &ParticipantId) -> Result<&ParticipantId> {
        let root = self.find(self.idx(v)?);
        Ok(&self.ids[self.min_member[root as usize] as usize])
    }

    /// Whether the last call to [`expand`](Self::expand) changed anything.
    pub fn last_expand_changed(&self) -> bool {
        self.last_expand_changed
    }

    /// Fold extraction output into the graph.
    ///
    /// New endpoints become vertices stamped with the current iteration;
    /// new (controller, controlled, polarity) triples become edges and
    /// merge undirected components. Re-adding known facts changes nothing.
    pub fn expand(&mut self, interactions: &BTreeSet<Interaction>) -> ExpandStats {
        let mut stats = ExpandStats::default();
        for interaction in interactions {
            let before = self.ids.len();
            let u = self.intern(&interaction.controller);
            let v = self.intern(&interaction.controlled);
            stats.new_vertices += self.ids.len() - before;
            let inserted = self.out_edges[u as usize]
                .entry(v)
                .or_default()
                .insert(interaction.polarity);
            if inserted {
                self.in_edges[v as usize]
                    .entry(u)
                    .or_default()
                    .insert(interaction.polarity);
                self.edge_count += 1;
                stats.new_edges += 1;
                self.union(u, v);
            }
        }
        self.last_expand_changed = stats.changed();
        stats
    }

    /// Is there a directed path from source to destination?
    pub fn is_connected(&self) -> bool {
        let s = self.index_of[&self.source];
        let d = self.index_of[&self.dest];
        let mut seen = vec![false; self.ids.len()];
        let mut queue = VecDeque::new();
        seen[s as usize] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            if v == d {
                return true;
            }
            for &n in self.out_edges[v as usize].keys() {
                if !seen[n as usize] {
                    seen[n as usize] = true;
                    queue.push_back(n);
                }
            }
        }
        false
    }

    /// Shortest directed source-to-destination path, if one exists.
    ///
    /// Among equally short paths the lexicographically smallest vertex
    /// sequence is returned, and parallel polarities resolve to the smaller
    /// label, so the result is deterministic.
    pub fn find_path(&self) -> Option<GraphPath> {
        let s = self.index_of[&self.source];
        let d = self.index_of[&self.dest];
        let dist_s = self.bfs_distances(s, false);
        let total = dist_s[d as usize]?;
        let dist_d = self.bfs_distances(d, true);

        let mut vertices = vec![self.source.clone()];
        let mut polarities = Vec::new();
        let mut cur = s;
        for step in 1..=total {
            let remaining = total - step;
            let next = self.out_edges[cur as usize]
                .keys()
                .filter(|&&n| dist_d[n as usize] == Some(remaining))
                .min_by_key(|&&n| &self.ids[n as usize])
                .copied()
                .expect("a shortest path must continue");
            let polarity = *self.out_edges[cur as usize][&next]
                .iter()
                .next()
                .expect("edge has at least one polarity");
            vertices.push(self.ids[next as usize].clone());
            polarities.push(polarity);
            cur = next;
        }
        Some(GraphPath {
            vertices,
            polarities,
        })
    }

    fn bfs_distances(&self, start: u32, reverse: bool) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.ids.len()];
        let mut queue = VecDeque::new();
        dist[start as usize] = Some(0);
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let base = dist[v as usize].unwrap();
            let edges = if reverse {
                &self.in_edges[v as usize]
            } else {
                &self.out_edges[v as usize]
            };
            for &n in edges.keys() {
                if dist[n as usize].is_none() {
                    dist[n as usize] = Some(base + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Human-readable snapshot: sorted edge lines, then per-vertex metadata.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# search graph: {} -> {}\n# iteration: {}\n# vertices: {}\n# edges: {}\n",
            self.source,
            self.dest,
            self.iteration,
            self.vertex_count(),
            self.edge_count
        ));
        let mut lines = Vec::new();
        for (u, outs) in self.out_edges.iter().enumerate() {
            for (&v, pols) in outs {
                for p in pols {
                    lines.push(format!("{}\t{}\t{}", self.ids[u], p, self.ids[v as usize]));
                }
            }
        }
        lines.sort();
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("# vertex\tintroduced_at\tquery_count\tdegree\tcomponent\n");
        let mut order: Vec<u32> = (0..self.ids.len() as u32).collect();
        order.sort_by_key(|&i| &self.ids[i as usize]);
        for i in order {
            let id = &self.ids[i as usize];
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                id,
                self.introduced_at[i as usize],
                self.query_count[i as usize],
                self.out_edges[i as usize].len() + self.in_edges[i as usize].len(),
                self.component_id(id).expect("vertex exists"),
            ));
        }
        out
    }
}
