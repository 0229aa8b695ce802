//! Static token-embedding model and exact cosine top-k index.
//!
//! A model is either a loaded token → vector table (`EMB1` file) or a seeded
//! hashed fallback that derives each token's vector from a 64-bit hash. Text
//! embeddings are the L2-normalized mean of the token vectors.
//!
//! `EMB1` layout (little-endian):
//!
//! ```text
//! magic "EMB1" | dimension u32 | token_count u64
//! repeated: token_len u32 | token UTF-8 | dimension x f32
//! ```
//!
//! Persisted indexes use `KVI1`:
//!
//! ```text
//! magic "KVI1" | version u32 | dimension u32 | source u8 | model fingerprint (str)
//! | entry_count u64 | repeated: cui (str) | dimension x f32
//! | sha256 of all preceding bytes [32]
//! ```

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::codec::{sha256, sha256_hex, ByteReader, ByteWriter};
use crate::store::GraphSnapshot;
use crate::textualize::{render_concept_block, FragmentOrder};

pub const MODEL_MAGIC: &[u8; 4] = b"EMB1";
pub const INDEX_MAGIC: &[u8; 4] = b"KVI1";
pub const INDEX_VERSION: u32 = 1;
pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid embedding model: {0}")]
    InvalidModel(String),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("duplicate index entry `{0}`")]
    DuplicateEntry(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Text that stands for a concept in the index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    /// The full rendered concept block.
    #[default]
    ConceptBlocks,
    /// Preferred name and synonyms only.
    NamesOnly,
}

#[derive(Debug, Clone, PartialEq)]
enum Vocabulary {
    Table(HashMap<String, Vec<f32>>),
    Hashed { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dimension: usize,
    vocab: Vocabulary,
}

/// Unit-length embedding, or all zeros for text without tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(pub Vec<f32>);

impl EmbeddingVector {
    pub fn zero(dimension: usize) -> Self {
        EmbeddingVector(vec![0.0; dimension])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity in f64; zero vectors score 0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(&a.0, &b.0) / (na * nb)
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EmbeddingModel {
    pub fn hashed(seed: u64, dimension: usize) -> Result<Self, EmbedError> {
        if dimension == 0 {
            return Err(EmbedError::InvalidModel("dimension must be positive".into()));
        }
        Ok(EmbeddingModel {
            dimension,
            vocab: Vocabulary::Hashed { seed },
        })
    }

    pub fn from_table(dimension: usize, table: HashMap<String, Vec<f32>>) -> Result<Self, EmbedError> {
        if dimension == 0 {
            return Err(EmbedError::InvalidModel("dimension must be positive".into()));
        }
        if let Some((tok, v)) = table.iter().find(|(_, v)| v.len() != dimension) {
            return Err(EmbedError::InvalidModel(format!(
                "token `{tok}` has {} values, expected {dimension}",
                v.len()
            )));
        }
        Ok(EmbeddingModel {
            dimension,
            vocab: Vocabulary::Table(table),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Stable identity of the model, recorded in indexes and eval reports.
    pub fn fingerprint(&self) -> String {
        match &self.vocab {
            Vocabulary::Hashed { seed } => format!("hashed:seed={seed}:dim={}", self.dimension),
            Vocabulary::Table(_) => format!("table:sha256={}", sha256_hex(&self.encode_table())),
        }
    }

    fn hashed_vector(seed: u64, dimension: usize, token: &str, acc: &mut [f64]) {
        let mut state = fnv1a64(token.as_bytes()) ^ seed;
        for slot in acc.iter_mut().take(dimension) {
            let bits = splitmix64(&mut state) >> 11;
            *slot += (bits as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
        }
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dimension];
        let mut n = 0usize;
        for tok in tokenize(text) {
            match &self.vocab {
                Vocabulary::Hashed { seed } => {
                    Self::hashed_vector(*seed, self.dimension, &tok, &mut acc);
                    n += 1;
                }
                Vocabulary::Table(t) => {
                    if let Some(v) = t.get(&tok) {
                        for (a, &x) in acc.iter_mut().zip(v) {
                            *a += f64::from(x);
                        }
                        n += 1;
                    }
                }
            }
        }
        if n == 0 {
            return EmbeddingVector::zero(self.dimension);
        }
        for a in acc.iter_mut() {
            *a /= n as f64;
        }
        let len = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len == 0.0 {
            return EmbeddingVector::zero(self.dimension);
        }
        EmbeddingVector(acc.into_iter().map(|v| (v / len) as f32).collect())
    }

    fn encode_table(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.buf.extend_from_slice(MODEL_MAGIC);
        w.u32(self.dimension as u32);
        if let Vocabulary::Table(t) = &self.vocab {
            let mut tokens: Vec<&String> = t.keys().collect();
            tokens.sort();
            w.u64(tokens.len() as u64);
            for tok in tokens {
                w.str(tok);
                for &x in &t[tok] {
                    w.f32(x);
                }
            }
        } else {
            w.u64(0);
        }
        w.buf
    }

    /// Writes a table model as an `EMB1` file. Hashed models have no table.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        if let Vocabulary::Hashed { .. } = self.vocab {
            return Err(EmbedError::InvalidModel("hashed models are not persisted".into()));
        }
        fs::write(path, self.encode_table())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let bytes = fs::read(path)?;
        let bad = EmbedError::InvalidModel;
        let mut r = ByteReader::new(&bytes);
        if r.bytes(4).map_err(bad)? != MODEL_MAGIC {
            return Err(EmbedError::InvalidModel("bad magic bytes".into()));
        }
        let dimension = r.u32().map_err(bad)? as usize;
        let count = r.u64().map_err(bad)?;
        let mut table = HashMap::new();
        for _ in 0..count {
            let tok = r.str().map_err(bad)?;
            let v = (0..dimension).map(|_| r.f32()).collect::<Result<Vec<_>, _>>().map_err(bad)?;
            table.insert(tok, v);
        }
        if r.remaining() != 0 {
            return Err(EmbedError::InvalidModel("trailing bytes".into()));
        }
        Self::from_table(dimension, table)
    }
}

pub fn embed_text(text: &str, model: &EmbeddingModel) -> EmbeddingVector {
    model.embed_text(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCui {
    pub cui: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    source: IndexSource,
    model_fingerprint: String,
    cuis: Vec<String>,
    // row-major, one row of `dimension` values per entry
    values: Vec<f32>,
    norms: Vec<f64>,
}

/// Text embedded for a concept under `source`.
pub fn index_text(snapshot: &GraphSnapshot, cui: &str, source: IndexSource) -> Option<String> {
    let c = snapshot.concept(cui)?;
    Some(match source {
        IndexSource::ConceptBlocks => render_concept_block(cui, snapshot, FragmentOrder::TailFirst).ok()?.text(),
        IndexSource::NamesOnly => {
            let mut parts = vec![c.preferred_name.clone()];
            parts.extend(c.synonyms.iter().cloned());
            parts.join("\n")
        }
    })
}

impl VectorIndex {
    pub fn new(dimension: usize, source: IndexSource, model_fingerprint: impl Into<String>) -> Self {
        VectorIndex {
            dimension,
            source,
            model_fingerprint: model_fingerprint.into(),
            cuis: Vec::new(),
            values: Vec::new(),
            norms: Vec::new(),
        }
    }

    /// Builds from `(cui, vector)` pairs, preserving their order.
    pub fn from_entries(
        dimension: usize,
        source: IndexSource,
        model_fingerprint: impl Into<String>,
        entries: impl IntoIterator<Item = (String, EmbeddingVector)>,
    ) -> Result<Self, EmbedError> {
        let mut idx = Self::new(dimension, source, model_fingerprint);
        let mut seen = std::collections::HashSet::new();
        for (cui, v) in entries {
            if v.dimension() != dimension {
                return Err(EmbedError::DimensionMismatch {
                    expected: dimension,
                    found: v.dimension(),
                });
            }
            if !seen.insert(cui.clone()) {
                return Err(EmbedError::DuplicateEntry(cui));
            }
            idx.norms.push(v.norm());
            idx.values.extend_from_slice(&v.0);
            idx.cuis.push(cui);
        }
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.cuis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuis.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source(&self) -> IndexSource {
        self.source
    }

    pub fn model_fingerprint(&self) -> &str {
        &self.model_fingerprint
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f32])> + '_ {
        self.cuis
            .iter()
            .zip(self.values.chunks_exact(self.dimension.max(1)))
            .map(|(c, v)| (c.as_str(), v))
    }

    pub fn vector(&self, cui: &str) -> Option<EmbeddingVector> {
        let i = self.cuis.iter().position(|c| c == cui)?;
        Some(EmbeddingVector(self.row(i).to_vec()))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Exact top-k by cosine, ties broken by ascending CUI.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredCui>, EmbedError> {
        if k == 0 {
            return Err(EmbedError::ZeroK);
        }
        if query.dimension() != self.dimension {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dimension,
                found: query.dimension(),
            });
        }
        let qn = query.norm();
        if qn == 0.0 {
            return Ok(Vec::new());
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .map(|i| {
                let n = self.norms[i];
                let s = if n == 0.0 { 0.0 } else { dot(&query.0, self.row(i)) / (qn * n) };
                (s, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.cuis[a.1].cmp(&self.cuis[b.1]))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(score, i)| ScoredCui {
                cui: self.cuis[i].clone(),
                score,
            })
            .collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.buf.extend_from_slice(INDEX_MAGIC);
        w.u32(INDEX_VERSION);
        w.u32(self.dimension as u32);
        w.u8(match self.source {
            IndexSource::ConceptBlocks => 0,
            IndexSource::NamesOnly => 1,
        });
        w.str(&self.model_fingerprint);
        w.u64(self.len() as u64);
        for (cui, row) in self.entries() {
            w.str(cui);
            for &x in row {
                w.f32(x);
            }
        }
        let digest = sha256(&w.buf);
        w.buf.extend_from_slice(&digest);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbedError> {
        let bad = EmbedError::CorruptIndex;
        if bytes.len() < 32 {
            return Err(bad("file too short".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if sha256(body) != digest {
            return Err(bad("checksum mismatch".into()));
        }
        let mut r = ByteReader::new(body);
        if r.bytes(4).map_err(bad)? != INDEX_MAGIC {
            return Err(bad("bad magic bytes".into()));
        }
        let version = r.u32().map_err(bad)?;
        if version != INDEX_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dimension = r.u32().map_err(bad)? as usize;
        let source = match r.u8().map_err(bad)? {
            0 => IndexSource::ConceptBlocks,
            1 => IndexSource::NamesOnly,
            other => return Err(bad(format!("bad source byte {other}"))),
        };
        let fingerprint = r.str().map_err(bad)?;
        let n = r.u64().map_err(bad)?;
        let mut entries = Vec::new();
        for _ in 0..n {
            let cui = r.str().map_err(bad)?;
            let v = (0..dimension).map(|_| r.f32()).collect::<Result<Vec<_>, _>>().map_err(bad)?;
            entries.push((cui, EmbeddingVector(v)));
        }
        if r.remaining() != 0 {
            return Err(bad("trailing bytes".into()));
        }
        Self::from_entries(dimension, source, fingerprint, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<String, EmbedError> {
        let bytes = self.to_bytes();
        fs::write(path, &bytes)?;
        Ok(sha256_hex(&bytes))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// One entry per concept in ascending CUI order.
pub fn build_index(snapshot: &GraphSnapshot, model: &EmbeddingModel, source: IndexSource) -> Result<VectorIndex, EmbedError> {
    let entries: Vec<(String, EmbeddingVector)> = snapshot
        .concepts()
        .par_iter()
        .map(|c| {
            let text = index_text(snapshot, &c.cui, source).unwrap_or_default();
            (c.cui.clone(), model.embed_text(&text))
        })
        .collect();
    VectorIndex::from_entries(model.dimension(), source, model.fingerprint(), entries)
}

pub fn top_k(index: &VectorIndex, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredCui>, EmbedError> {
    index.top_k(query, k)
}
