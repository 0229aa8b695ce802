//! `KGF1` snapshot files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    "KGF1"
//! version  u32
//! sections u32
//! repeated: tag u32 | length u64 | payload | sha256(payload) [32 bytes]
//! ```
//!
//! Sections, in order: 1 concepts, 2 labels, 3 sources, 4 edges, 5 stats.
//! Strings are a u32 byte length followed by UTF-8 bytes. Adjacency is not
//! stored; it is rebuilt on load from the sorted edge table.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::codec::{sha256, sha256_hex, ByteReader, ByteWriter};
use super::{GraphSnapshot, StoreError, StoredEdge};
use crate::build::{BuildStats, ConceptRecord, LabelProvenance};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"KGF1";
pub const SNAPSHOT_VERSION: u32 = 1;

const TAG_CONCEPTS: u32 = 1;
const TAG_LABELS: u32 = 2;
const TAG_SOURCES: u32 = 3;
const TAG_EDGES: u32 = 4;
const TAG_STATS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotReceipt {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
    pub concept_count: u64,
    pub edge_count: u64,
}

fn encode(s: &GraphSnapshot) -> Vec<u8> {
    let mut sections: Vec<(u32, Vec<u8>)> = Vec::with_capacity(5);

    let mut w = ByteWriter::default();
    w.u64(s.concepts.len() as u64);
    for c in &s.concepts {
        w.str(&c.cui);
        w.str(&c.preferred_name);
        w.strs(&c.synonyms);
        w.strs(&c.semantic_types);
        w.str(&c.definitions);
        w.u32(c.definition_count);
    }
    sections.push((TAG_CONCEPTS, w.buf));

    let mut w = ByteWriter::default();
    w.strs(&s.labels);
    sections.push((TAG_LABELS, w.buf));

    let mut w = ByteWriter::default();
    w.strs(&s.sources);
    sections.push((TAG_SOURCES, w.buf));

    let mut w = ByteWriter::default();
    w.u64(s.edges.len() as u64);
    for e in &s.edges {
        w.u32(e.head);
        w.u32(e.label);
        w.u32(e.tail);
        w.u8(match e.provenance {
            LabelProvenance::SpecificRela => 0,
            LabelProvenance::FallbackRel => 1,
        });
        w.u32(e.source);
    }
    sections.push((TAG_EDGES, w.buf));

    let mut w = ByteWriter::default();
    let entries = s.stats.entries();
    w.u32(entries.len() as u32);
    for (k, v) in entries {
        w.str(k);
        w.u64(v);
    }
    sections.push((TAG_STATS, w.buf));

    let total: usize = sections.iter().map(|(_, p)| p.len() + 44).sum();
    let mut out = Vec::with_capacity(12 + total);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sections.len() as u32).to_le_bytes());
    for (tag, payload) in sections {
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&sha256(&payload));
    }
    out
}

pub fn save_snapshot(snapshot: &GraphSnapshot, path: impl AsRef<Path>) -> Result<SnapshotReceipt, StoreError> {
    let path = path.as_ref();
    let bytes = encode(snapshot);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, &bytes)?;
    Ok(SnapshotReceipt {
        path: path.to_path_buf(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
        concept_count: snapshot.concepts.len() as u64,
        edge_count: snapshot.edges.len() as u64,
    })
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<GraphSnapshot, StoreError> {
    let bytes = fs::read(path.as_ref())?;
    decode(&bytes)
}

fn corrupt(msg: impl Into<String>) -> StoreError {
    StoreError::CorruptSnapshot(msg.into())
}

pub(super) fn decode(bytes: &[u8]) -> Result<GraphSnapshot, StoreError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.bytes(4).map_err(corrupt)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = r.u32().map_err(corrupt)?;
    if version != SNAPSHOT_VERSION {
        return Err(StoreError::VersionMismatch {
            found: version,
            expected: SNAPSHOT_VERSION,
        });
    }
    let n_sections = r.u32().map_err(corrupt)?;
    let mut sections: HashMap<u32, &[u8]> = HashMap::new();
    for _ in 0..n_sections {
        let tag = r.u32().map_err(corrupt)?;
        let len = r.u64().map_err(corrupt)? as usize;
        let payload = r.bytes(len).map_err(corrupt)?;
        let digest = r.bytes(32).map_err(corrupt)?;
        if sha256(payload) != digest {
            return Err(corrupt(format!("checksum mismatch in section {tag}")));
        }
        sections.insert(tag, payload);
    }
    if r.remaining() != 0 {
        return Err(corrupt("trailing bytes after last section"));
    }
    let section = |tag: u32| {
        sections
            .get(&tag)
            .copied()
            .ok_or_else(|| corrupt(format!("missing section {tag}")))
    };

    let mut r = ByteReader::new(section(TAG_CONCEPTS)?);
    let n = r.u64().map_err(corrupt)? as usize;
    let mut concepts = Vec::with_capacity(n.min(r.remaining()));
    for _ in 0..n {
        concepts.push(ConceptRecord {
            cui: r.str().map_err(corrupt)?,
            preferred_name: r.str().map_err(corrupt)?,
            synonyms: r.strs().map_err(corrupt)?,
            semantic_types: r.strs().map_err(corrupt)?,
            definitions: r.str().map_err(corrupt)?,
            definition_count: r.u32().map_err(corrupt)?,
        });
    }

    let labels = ByteReader::new(section(TAG_LABELS)?).strs().map_err(corrupt)?;
    let sources = ByteReader::new(section(TAG_SOURCES)?).strs().map_err(corrupt)?;

    let mut r = ByteReader::new(section(TAG_EDGES)?);
    let n = r.u64().map_err(corrupt)? as usize;
    let mut edges = Vec::with_capacity(n.min(r.remaining() / 17));
    for _ in 0..n {
        let e = StoredEdge {
            head: r.u32().map_err(corrupt)?,
            label: r.u32().map_err(corrupt)?,
            tail: r.u32().map_err(corrupt)?,
            provenance: match r.u8().map_err(corrupt)? {
                0 => LabelProvenance::SpecificRela,
                1 => LabelProvenance::FallbackRel,
                other => return Err(corrupt(format!("bad provenance byte {other}"))),
            },
            source: r.u32().map_err(corrupt)?,
        };
        if e.head as usize >= concepts.len()
            || e.tail as usize >= concepts.len()
            || e.label as usize >= labels.len()
            || e.source as usize >= sources.len()
        {
            return Err(corrupt("edge index out of range"));
        }
        edges.push(e);
    }
    if edges.windows(2).any(|w| (w[0].head, w[0].label, w[0].tail) >= (w[1].head, w[1].label, w[1].tail)) {
        return Err(corrupt("edge table is not strictly sorted"));
    }

    let mut r = ByteReader::new(section(TAG_STATS)?);
    let n = r.u32().map_err(corrupt)?;
    let mut entries = Vec::new();
    for _ in 0..n {
        entries.push((r.str().map_err(corrupt)?, r.u64().map_err(corrupt)?));
    }
    let stats = BuildStats::from_entries(entries.iter().map(|(k, v)| (k.as_str(), *v)));

    let mut lookup = HashMap::with_capacity(concepts.len());
    for (i, c) in concepts.iter().enumerate() {
        if i > 0 && concepts[i - 1].cui >= c.cui {
            return Err(corrupt("concept table is not strictly sorted"));
        }
        lookup.insert(c.cui.clone(), i as u32);
    }
    Ok(GraphSnapshot::index(concepts, lookup, labels, sources, edges, stats))
}
