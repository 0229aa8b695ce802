//! Reference implementations used as test oracles.
//!
//! Everything here is written from the documented rules, without calling the
//! library code it checks: plain string splitting for RRF, a hand-rolled BFS
//! over an edge list, a full scan for nearest neighbours.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::path::Path;

/// Counts a single pass over the four tables should produce.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recount {
    pub concepts_kept: u64,
    pub edges_kept: u64,
    pub self_relations_dropped: u64,
    pub non_english_endpoint_dropped: u64,
    pub fallback_labels_used: u64,
    pub multi_definition_concepts: u64,
    pub malformed_lines: u64,
}

/// Splits one RRF line; `None` when it is not valid UTF-8 or has fewer than
/// `min` fields.
fn fields(raw: &[u8], min: usize) -> Option<Vec<String>> {
    let line = std::str::from_utf8(raw).ok()?;
    let line = line.strip_suffix('\r').unwrap_or(line);
    let line = line.strip_suffix('|').unwrap_or(line);
    let parts: Vec<String> = line.split('|').map(str::to_string).collect();
    if parts.len() < min {
        return None;
    }
    Some(parts)
}

fn lines(path: &Path) -> Vec<Vec<u8>> {
    let bytes = std::fs::read(path).unwrap();
    let mut out: Vec<Vec<u8>> = bytes.split(|&b| b == b'\n').map(<[u8]>::to_vec).collect();
    if out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out
}

/// Brute-force recount over `MRCONSO.RRF`, `MRDEF.RRF`, `MRREL.RRF` in `dir`
/// with the standard column layout and no suppression filtering.
pub fn recount(dir: &Path) -> Recount {
    let mut r = Recount::default();

    let mut english: HashSet<String> = HashSet::new();
    for raw in lines(&dir.join("MRCONSO.RRF")) {
        let Some(f) = fields(&raw, 18) else {
            r.malformed_lines += 1;
            continue;
        };
        if f[0].trim().is_empty() || f[14].trim().is_empty() {
            r.malformed_lines += 1;
            continue;
        }
        if f[1] == "ENG" {
            english.insert(f[0].clone());
        }
    }
    r.concepts_kept = english.len() as u64;

    let mut defs: HashMap<String, HashSet<String>> = HashMap::new();
    for raw in lines(&dir.join("MRDEF.RRF")) {
        let Some(f) = fields(&raw, 8) else {
            r.malformed_lines += 1;
            continue;
        };
        if f[0].trim().is_empty() || f[5].trim().is_empty() {
            r.malformed_lines += 1;
            continue;
        }
        if english.contains(&f[0]) {
            defs.entry(f[0].clone()).or_default().insert(f[5].trim().to_string());
        }
    }
    r.multi_definition_concepts = defs.values().filter(|d| d.len() > 1).count() as u64;

    let mut kept: BTreeMap<(String, String, String), bool> = BTreeMap::new();
    for raw in lines(&dir.join("MRREL.RRF")) {
        let Some(f) = fields(&raw, 16) else {
            r.malformed_lines += 1;
            continue;
        };
        if f[0].trim().is_empty() || f[3].trim().is_empty() || f[4].trim().is_empty() {
            r.malformed_lines += 1;
            continue;
        }
        let (a, rel, b, rela) = (&f[0], &f[3], &f[4], &f[7]);
        if a == b {
            r.self_relations_dropped += 1;
        } else if !english.contains(a) || !english.contains(b) {
            r.non_english_endpoint_dropped += 1;
        } else {
            let fallback = rela.is_empty();
            let label = if fallback { rel.clone() } else { rela.clone() };
            kept.entry((a.clone(), label, b.clone())).or_insert(fallback);
        }
    }
    r.edges_kept = kept.len() as u64;
    r.fallback_labels_used = kept.values().filter(|&&f| f).count() as u64;
    r
}

/// `(head, label, tail)`.
pub type Triple = (String, String, String);

/// One collected edge with its annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsEdge {
    pub triple: Triple,
    pub hop: u32,
    pub seed: String,
}

/// Capped BFS over a plain edge list.
///
/// Seeds expand together, ring by ring. A node scans its outgoing edges
/// sorted by (label, tail), then its incoming edges sorted by (label, head).
/// Edges already collected are passed over without using the node's
/// allowance of `fanout` new edges. Collection stops at `max_edges`.
pub fn capped_bfs(
    edges: &[Triple],
    seeds: &[String],
    max_hops: u32,
    fanout: usize,
    max_edges: usize,
) -> Vec<BfsEdge> {
    let mut out_of: HashMap<&str, Vec<&Triple>> = HashMap::new();
    let mut in_of: HashMap<&str, Vec<&Triple>> = HashMap::new();
    for t in edges {
        out_of.entry(t.0.as_str()).or_default().push(t);
        in_of.entry(t.2.as_str()).or_default().push(t);
    }
    for v in out_of.values_mut() {
        v.sort_by(|x, y| (&x.1, &x.2).cmp(&(&y.1, &y.2)));
    }
    for v in in_of.values_mut() {
        v.sort_by(|x, y| (&x.1, &x.0).cmp(&(&y.1, &y.0)));
    }

    let mut result = Vec::new();
    let mut collected: BTreeSet<&Triple> = BTreeSet::new();
    let mut origin: HashMap<&str, &str> = HashMap::new();
    let mut ring: VecDeque<&str> = VecDeque::new();
    for s in seeds {
        if !origin.contains_key(s.as_str()) {
            origin.insert(s, s);
            ring.push_back(s);
        }
    }
    for hop in 1..=max_hops {
        let mut next = VecDeque::new();
        while let Some(node) = ring.pop_front() {
            let seed = origin[node];
            let mut budget = fanout;
            let outs = out_of.get(node).into_iter().flatten();
            let ins = in_of.get(node).into_iter().flatten();
            for t in outs.chain(ins) {
                if result.len() == max_edges {
                    return result;
                }
                if budget == 0 {
                    break;
                }
                if collected.contains(*t) {
                    continue;
                }
                collected.insert(t);
                budget -= 1;
                result.push(BfsEdge {
                    triple: (*t).clone(),
                    hop,
                    seed: seed.to_string(),
                });
                let other = if t.0 == node { t.2.as_str() } else { t.0.as_str() };
                if !origin.contains_key(other) {
                    origin.insert(other, seed);
                    next.push_back(other);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        ring = next;
    }
    result
}

/// Full scan: cosine of every row against `q`, highest first, ties by id.
pub fn exhaustive_top_k(rows: &[(String, Vec<f32>)], q: &[f32], k: usize) -> Vec<(String, f64)> {
    let qq: f64 = q.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
    if qq == 0.0 {
        return Vec::new();
    }
    let mut all: Vec<(String, f64)> = rows
        .iter()
        .map(|(id, v)| {
            let vv: f64 = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
            let d: f64 = v.iter().zip(q).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum();
            (id.clone(), if vv == 0.0 { 0.0 } else { d / (qq * vv) })
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Greedy truncation: while over budget, remove the fragment with the
/// highest hop, latest first. Returns kept positions.
pub fn greedy_truncate(words_and_hops: &[(usize, u32)], budget: usize) -> Vec<usize> {
    let mut kept: Vec<usize> = (0..words_and_hops.len()).collect();
    loop {
        let total: usize = kept.iter().map(|&i| words_and_hops[i].0).sum();
        if total <= budget || kept.is_empty() {
            return kept;
        }
        let max_hop = kept.iter().map(|&i| words_and_hops[i].1).max().unwrap();
        let pos = kept.iter().rposition(|&i| words_and_hops[i].1 == max_hop).unwrap();
        kept.remove(pos);
    }
}
