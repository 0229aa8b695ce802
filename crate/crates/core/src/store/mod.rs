//! Immutable indexed knowledge graph.
//!
//! Concepts are held in ascending CUI order and edges in ascending
//! `(head, label, tail)` order. Adjacency is kept in CSR form in both
//! directions; each node's list is ordered by `(label, other cui)`.

pub(crate) mod codec;
mod file;
mod neo4j;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::build::{BuildStats, ConceptRecord, LabelProvenance, RelationEdge};

pub use file::{load_snapshot, save_snapshot, SnapshotReceipt, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use neo4j::{export_neo4j, sanitize_label, ExportManifest, NODES_FILE, NODES_HEADER, RELATIONSHIPS_FILE, RELATIONSHIPS_HEADER};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown CUI `{0}`")]
    UnknownCui(String),
    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),
    #[error("edge {head} -[{label}]-> {tail} references a missing concept")]
    DanglingEdge { head: String, label: String, tail: String },
    #[error("self-relation on `{0}`")]
    SelfRelation(String),
    #[error("empty relation label on {head} -> {tail}")]
    EmptyLabel { head: String, tail: String },
    #[error("snapshot format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("label `{0}` is empty after sanitization")]
    UnsanitizableLabel(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Out,
    In,
    Both,
}

/// Interned edge: indices into the concept, label and source tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct StoredEdge {
    pub head: u32,
    pub label: u32,
    pub tail: u32,
    pub provenance: LabelProvenance,
    pub source: u32,
}

/// Borrowed view of one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef<'a> {
    pub id: u32,
    pub head_cui: &'a str,
    pub tail_cui: &'a str,
    pub label: &'a str,
    pub label_provenance: LabelProvenance,
    pub source: &'a str,
}

impl EdgeRef<'_> {
    pub fn to_owned(&self) -> RelationEdge {
        RelationEdge {
            head_cui: self.head_cui.to_string(),
            tail_cui: self.tail_cui.to_string(),
            label: self.label.to_string(),
            label_provenance: self.label_provenance,
            source: self.source.to_string(),
        }
    }
}

/// One adjacency entry: the relation label and the node at the other end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub label: String,
    pub other_cui: String,
}

#[derive(Debug, Clone, Default)]
struct Csr {
    offsets: Vec<u32>,
    edge_ids: Vec<u32>,
}

impl Csr {
    fn build(n_nodes: usize, edges: &[StoredEdge], key: impl Fn(&StoredEdge) -> u32, order: impl Fn(&StoredEdge) -> (u32, u32)) -> Self {
        let mut counts = vec![0u32; n_nodes + 1];
        for e in edges {
            counts[key(e) as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut edge_ids = vec![0u32; edges.len()];
        for (id, e) in edges.iter().enumerate() {
            let slot = &mut cursor[key(e) as usize];
            edge_ids[*slot as usize] = id as u32;
            *slot += 1;
        }
        for node in 0..n_nodes {
            let (lo, hi) = (offsets[node] as usize, offsets[node + 1] as usize);
            edge_ids[lo..hi].sort_by_key(|&id| order(&edges[id as usize]));
        }
        Csr { offsets, edge_ids }
    }

    fn of(&self, node: u32) -> &[u32] {
        let n = node as usize;
        &self.edge_ids[self.offsets[n] as usize..self.offsets[n + 1] as usize]
    }
}

#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    concepts: Vec<ConceptRecord>,
    lookup: HashMap<String, u32>,
    labels: Vec<String>,
    sources: Vec<String>,
    edges: Vec<StoredEdge>,
    out_adj: Csr,
    in_adj: Csr,
    stats: BuildStats,
}

impl PartialEq for GraphSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.concepts == other.concepts
            && self.labels == other.labels
            && self.sources == other.sources
            && self.edges == other.edges
            && self.stats == other.stats
    }
}

impl GraphSnapshot {
    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), BuildStats::default()).expect("empty graph is valid")
    }

    /// Indexes concepts and edges. Duplicate `(head, label, tail)` triples keep
    /// the first occurrence.
    pub fn from_parts(
        mut concepts: Vec<ConceptRecord>,
        edges: Vec<RelationEdge>,
        stats: BuildStats,
    ) -> Result<Self, StoreError> {
        concepts.sort_by(|a, b| a.cui.cmp(&b.cui));
        let mut lookup = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if lookup.insert(c.cui.clone(), i as u32).is_some() {
                return Err(StoreError::DuplicateConcept(c.cui.clone()));
            }
        }

        let mut labels: Vec<String> = edges.iter().map(|e| e.label.clone()).collect();
        labels.sort();
        labels.dedup();
        let mut sources: Vec<String> = edges.iter().map(|e| e.source.clone()).collect();
        sources.sort();
        sources.dedup();
        let label_idx: HashMap<&str, u32> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
        let source_idx: HashMap<&str, u32> = sources.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();

        let mut stored = Vec::with_capacity(edges.len());
        for e in &edges {
            if e.label.is_empty() {
                return Err(StoreError::EmptyLabel {
                    head: e.head_cui.clone(),
                    tail: e.tail_cui.clone(),
                });
            }
            if e.head_cui == e.tail_cui {
                return Err(StoreError::SelfRelation(e.head_cui.clone()));
            }
            let (Some(&head), Some(&tail)) = (lookup.get(&e.head_cui), lookup.get(&e.tail_cui)) else {
                return Err(StoreError::DanglingEdge {
                    head: e.head_cui.clone(),
                    label: e.label.clone(),
                    tail: e.tail_cui.clone(),
                });
            };
            stored.push(StoredEdge {
                head,
                label: label_idx[e.label.as_str()],
                tail,
                provenance: e.label_provenance,
                source: source_idx[e.source.as_str()],
            });
        }
        stored.sort_by_key(|e| (e.head, e.label, e.tail));
        stored.dedup_by_key(|e| (e.head, e.label, e.tail));

        Ok(Self::index(concepts, lookup, labels, sources, stored, stats))
    }

    fn index(
        concepts: Vec<ConceptRecord>,
        lookup: HashMap<String, u32>,
        labels: Vec<String>,
        sources: Vec<String>,
        edges: Vec<StoredEdge>,
        stats: BuildStats,
    ) -> Self {
        let n = concepts.len();
        let out_adj = Csr::build(n, &edges, |e| e.head, |e| (e.label, e.tail));
        let in_adj = Csr::build(n, &edges, |e| e.tail, |e| (e.label, e.head));
        GraphSnapshot {
            concepts,
            lookup,
            labels,
            sources,
            edges,
            out_adj,
            in_adj,
            stats,
        }
    }

    pub fn concepts(&self) -> &[ConceptRecord] {
        &self.concepts
    }

    pub fn concept(&self, cui: &str) -> Option<&ConceptRecord> {
        self.lookup.get(cui).map(|&i| &self.concepts[i as usize])
    }

    pub fn contains(&self, cui: &str) -> bool {
        self.lookup.contains_key(cui)
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// Distinct edge labels in ascending order.
    pub fn label_catalog(&self) -> &[String] {
        &self.labels
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn edge(&self, id: u32) -> EdgeRef<'_> {
        let e = &self.edges[id as usize];
        EdgeRef {
            id,
            head_cui: &self.concepts[e.head as usize].cui,
            tail_cui: &self.concepts[e.tail as usize].cui,
            label: &self.labels[e.label as usize],
            label_provenance: e.provenance,
            source: &self.sources[e.source as usize],
        }
    }

    /// All edges in `(head, label, tail)` order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = EdgeRef<'_>> + '_ {
        (0..self.edges.len() as u32).map(move |id| self.edge(id))
    }

    fn node(&self, cui: &str) -> Result<u32, StoreError> {
        self.lookup
            .get(cui)
            .copied()
            .ok_or_else(|| StoreError::UnknownCui(cui.to_string()))
    }

    /// Edges touching `cui`, each list ordered by `(label, other cui)`; `Both`
    /// yields the outgoing list followed by the incoming one.
    pub fn adjacent_edges(&self, cui: &str, direction: Direction) -> Result<Vec<EdgeRef<'_>>, StoreError> {
        let node = self.node(cui)?;
        let ids: Vec<u32> = match direction {
            Direction::Out => self.out_adj.of(node).to_vec(),
            Direction::In => self.in_adj.of(node).to_vec(),
            Direction::Both => self.out_adj.of(node).iter().chain(self.in_adj.of(node)).copied().collect(),
        };
        Ok(ids.into_iter().map(|id| self.edge(id)).collect())
    }

    pub fn neighbors(&self, cui: &str, direction: Direction) -> Result<Vec<Neighbor>, StoreError> {
        Ok(self
            .adjacent_edges(cui, direction)?
            .into_iter()
            .map(|e| Neighbor {
                label: e.label.to_string(),
                other_cui: if e.head_cui == cui { e.tail_cui } else { e.head_cui }.to_string(),
            })
            .collect())
    }

    /// Checks the out/in mirror property by full scan.
    pub fn adjacency_is_consistent(&self) -> bool {
        let mut seen_in = vec![false; self.edges.len()];
        for node in 0..self.concepts.len() as u32 {
            for &id in self.out_adj.of(node) {
                if self.edges[id as usize].head != node {
                    return false;
                }
            }
            for &id in self.in_adj.of(node) {
                if self.edges[id as usize].tail != node || seen_in[id as usize] {
                    return false;
                }
                seen_in[id as usize] = true;
            }
        }
        seen_in.into_iter().all(|b| b) && self.out_adj.edge_ids.len() == self.edges.len()
    }
}
