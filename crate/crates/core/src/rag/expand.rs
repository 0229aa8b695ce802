//! Seed retrieval and capped breadth-first subgraph expansion.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{RagError, RetrievalConfig};
use crate::build::RelationEdge;
use crate::embed::{EmbeddingModel, ScoredCui, VectorIndex};
use crate::store::{Direction, GraphSnapshot};
use crate::textualize::{render_edge_ref, TripleFragment};

/// Where a context fragment came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentPath {
    /// 1 for edges incident to a seed, 2 for the next ring, and so on.
    pub hop: u32,
    pub seed: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubgraphContext {
    pub seeds: Vec<ScoredCui>,
    /// Edges in discovery order; `fragments[i]` and `paths[i]` describe `edges[i]`.
    pub edges: Vec<RelationEdge>,
    pub fragments: Vec<TripleFragment>,
    pub paths: Vec<FragmentPath>,
}

impl SubgraphContext {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

pub(super) fn check_compatible(index: &VectorIndex, model: &EmbeddingModel) -> Result<(), RagError> {
    if index.dimension() != model.dimension() {
        return Err(RagError::Embed(crate::embed::EmbedError::DimensionMismatch {
            expected: index.dimension(),
            found: model.dimension(),
        }));
    }
    if index.model_fingerprint() != model.fingerprint() {
        return Err(RagError::ModelMismatch {
            index: index.model_fingerprint().to_string(),
            model: model.fingerprint(),
        });
    }
    Ok(())
}

/// Top `seed_k` concepts for the question. Empty when `seed_k` is zero or the
/// question has no tokens.
pub fn retrieve_seeds(
    question: &str,
    index: &VectorIndex,
    model: &EmbeddingModel,
    config: &RetrievalConfig,
) -> Result<Vec<ScoredCui>, RagError> {
    check_compatible(index, model)?;
    if config.seed_k == 0 {
        return Ok(Vec::new());
    }
    let query = model.embed_text(question);
    if query.is_zero() {
        return Ok(Vec::new());
    }
    Ok(index.top_k(&query, config.seed_k)?)
}

/// Expands all seeds at once, breadth first, over edges in both directions.
///
/// Nodes are expanded ring by ring in discovery order, seeds first in rank
/// order. For each node the adjacency list (outgoing then incoming, each by
/// label then neighbour CUI) is scanned; edges already taken are skipped and
/// do not count against `per_node_fanout_cap`. Collection stops globally at
/// `max_edges`. A newly reached node inherits the hop and seed of the node
/// that reached it.
pub fn expand_subgraph(
    seeds: &[ScoredCui],
    snapshot: &GraphSnapshot,
    config: &RetrievalConfig,
) -> Result<SubgraphContext, RagError> {
    let mut known: Vec<&ScoredCui> = Vec::new();
    let mut seen_seed = HashSet::new();
    for s in seeds {
        if !snapshot.contains(&s.cui) {
            tracing::warn!(cui = %s.cui, "seed not in snapshot, skipping");
            continue;
        }
        if seen_seed.insert(s.cui.as_str()) {
            known.push(s);
        }
    }
    if known.is_empty() {
        if let Some(first) = seeds.first() {
            return Err(RagError::UnknownCui(first.cui.clone()));
        }
    }

    let mut ctx = SubgraphContext {
        seeds: known.iter().map(|s| (*s).clone()).collect(),
        ..SubgraphContext::default()
    };
    // node -> originating seed
    let mut visited: HashMap<&str, &str> = HashMap::new();
    let mut frontier: Vec<&str> = Vec::new();
    for s in &known {
        visited.insert(s.cui.as_str(), s.cui.as_str());
        frontier.push(s.cui.as_str());
    }
    let mut taken: HashSet<u32> = HashSet::new();

    'rings: for hop in 1..=config.max_hops {
        let mut next = Vec::new();
        for &node in &frontier {
            let origin = visited[node];
            let mut used = 0usize;
            for e in snapshot.adjacent_edges(node, Direction::Both)? {
                if ctx.edges.len() >= config.max_edges {
                    break 'rings;
                }
                if used >= config.per_node_fanout_cap {
                    break;
                }
                if !taken.insert(e.id) {
                    continue;
                }
                used += 1;
                ctx.fragments.push(render_edge_ref(&e, snapshot, config.fragment_order));
                ctx.edges.push(e.to_owned());
                ctx.paths.push(FragmentPath {
                    hop,
                    seed: origin.to_string(),
                });
                let other = if e.head_cui == node { e.tail_cui } else { e.head_cui };
                if !visited.contains_key(other) {
                    visited.insert(other, origin);
                    next.push(other);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(ctx)
}
