//! Graph-to-text rendering: triple fragments, concept blocks and the sharded
//! pretraining corpus.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::build::{ConceptRecord, RelationEdge};
use crate::store::{Direction, EdgeRef, GraphSnapshot, StoreError};

pub const DEFAULT_SHARD_WORDS: u64 = 10_000_000;
pub const CORPUS_STATS_FILE: &str = "corpus-stats.txt";

#[derive(Debug, Error)]
pub enum TextError {
    #[error("unknown CUI `{0}`")]
    UnknownCui(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<StoreError> for TextError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownCui(c) => TextError::UnknownCui(c),
            StoreError::Io(io) => TextError::Io(io),
            other => TextError::Io(std::io::Error::other(other.to_string())),
        }
    }
}

/// Which endpoint opens a fragment sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentOrder {
    /// `<tail> <label> <head>.`
    #[default]
    TailFirst,
    /// `<head> <label> <tail>.`
    HeadFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripleFragment {
    pub text: String,
    pub head_cui: String,
    pub tail_cui: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptBlock {
    pub cui: String,
    pub lines: Vec<String>,
}

impl ConceptBlock {
    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub blocks_written: u64,
    pub fragments_written: u64,
    pub word_count: u64,
    pub bytes_written: u64,
    pub shards: Vec<PathBuf>,
}

impl CorpusStats {
    pub fn to_kv(&self) -> String {
        format!(
            "blocks_written={}\nfragments_written={}\nword_count={}\nbytes_written={}\nshard_count={}\n",
            self.blocks_written,
            self.fragments_written,
            self.word_count,
            self.bytes_written,
            self.shards.len()
        )
    }
}

/// `CAUSE_OF` → `cause of`.
pub fn verbalize_label(label: &str) -> String {
    label
        .to_lowercase()
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

fn fragment_text(head_name: &str, label: &str, tail_name: &str, order: FragmentOrder) -> String {
    let verb = verbalize_label(label);
    match order {
        FragmentOrder::TailFirst => format!("{tail_name} {verb} {head_name}."),
        FragmentOrder::HeadFirst => format!("{head_name} {verb} {tail_name}."),
    }
}

fn name_of<'a>(snapshot: &'a GraphSnapshot, cui: &str) -> Result<&'a str, TextError> {
    snapshot
        .concept(cui)
        .map(|c| c.preferred_name.as_str())
        .ok_or_else(|| TextError::UnknownCui(cui.to_string()))
}

pub fn render_triple(edge: &RelationEdge, snapshot: &GraphSnapshot, order: FragmentOrder) -> Result<TripleFragment, TextError> {
    let head = name_of(snapshot, &edge.head_cui)?;
    let tail = name_of(snapshot, &edge.tail_cui)?;
    Ok(TripleFragment {
        text: fragment_text(head, &edge.label, tail, order),
        head_cui: edge.head_cui.clone(),
        tail_cui: edge.tail_cui.clone(),
        label: edge.label.clone(),
    })
}

pub(crate) fn render_edge_ref(edge: &EdgeRef<'_>, snapshot: &GraphSnapshot, order: FragmentOrder) -> TripleFragment {
    // endpoints of a stored edge always resolve
    let head = &snapshot.concept(edge.head_cui).expect("stored edge head").preferred_name;
    let tail = &snapshot.concept(edge.tail_cui).expect("stored edge tail").preferred_name;
    TripleFragment {
        text: fragment_text(head, edge.label, tail, order),
        head_cui: edge.head_cui.to_string(),
        tail_cui: edge.tail_cui.to_string(),
        label: edge.label.to_string(),
    }
}

fn name_line(c: &ConceptRecord) -> String {
    if c.synonyms.is_empty() {
        format!("{}.", c.preferred_name)
    } else {
        format!("{}, also known as {}.", c.preferred_name, c.synonyms.join(", "))
    }
}

/// Renders the block for one concept: name/synonyms line, semantic-types line,
/// definitions line, then one line per distinct out/in relation fragment.
pub fn render_concept_block(cui: &str, snapshot: &GraphSnapshot, order: FragmentOrder) -> Result<ConceptBlock, TextError> {
    let c = snapshot
        .concept(cui)
        .ok_or_else(|| TextError::UnknownCui(cui.to_string()))?;
    let mut lines = vec![name_line(c)];
    if !c.semantic_types.is_empty() {
        lines.push(format!("{} is a {}.", c.preferred_name, c.semantic_types.join("; ")));
    }
    if !c.definitions.is_empty() {
        lines.push(c.definitions.clone());
    }
    let mut seen = HashSet::new();
    for e in snapshot.adjacent_edges(cui, Direction::Both)? {
        let frag = render_edge_ref(&e, snapshot, order);
        if seen.insert(frag.text.clone()) {
            lines.push(frag.text);
        }
    }
    Ok(ConceptBlock { cui: c.cui.clone(), lines })
}

/// Number of relation-fragment lines in a rendered block.
pub fn fragment_line_count(block: &ConceptBlock, concept: &ConceptRecord) -> usize {
    let header = 1 + usize::from(!concept.semantic_types.is_empty()) + usize::from(!concept.definitions.is_empty());
    block.lines.len() - header
}

fn shard_path(out_dir: &Path, n: usize) -> PathBuf {
    out_dir.join(format!("corpus-{n}.txt"))
}

struct ShardWriter {
    out_dir: PathBuf,
    shard_words: u64,
    current: Option<BufWriter<File>>,
    current_words: u64,
    stats: CorpusStats,
}

impl ShardWriter {
    fn push_block(&mut self, text: &str, words: u64) -> std::io::Result<()> {
        let needs_new = match self.current {
            None => true,
            Some(_) => self.current_words > 0 && self.current_words + words > self.shard_words,
        };
        if needs_new {
            self.finish_shard()?;
            let path = shard_path(&self.out_dir, self.stats.shards.len());
            self.current = Some(BufWriter::new(File::create(&path)?));
            self.stats.shards.push(path);
            self.current_words = 0;
        }
        let w = self.current.as_mut().expect("shard open");
        if self.current_words > 0 {
            w.write_all(b"\n")?;
            self.stats.bytes_written += 1;
        }
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        self.stats.bytes_written += text.len() as u64 + 1;
        self.current_words += words;
        Ok(())
    }

    fn finish_shard(&mut self) -> std::io::Result<()> {
        if let Some(mut w) = self.current.take() {
            w.flush()?;
        }
        Ok(())
    }
}

/// Writes every concept block in ascending CUI order into `corpus-<n>.txt`
/// shards of at most `shard_words` words. A single block larger than the
/// limit gets a shard of its own. An empty graph writes no shards.
pub fn write_corpus(
    snapshot: &GraphSnapshot,
    out_dir: impl AsRef<Path>,
    shard_words: u64,
    order: FragmentOrder,
) -> Result<CorpusStats, TextError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut w = ShardWriter {
        out_dir: out_dir.to_path_buf(),
        shard_words: shard_words.max(1),
        current: None,
        current_words: 0,
        stats: CorpusStats::default(),
    };
    // concepts() is already in ascending CUI order
    for c in snapshot.concepts() {
        let block = render_concept_block(&c.cui, snapshot, order)?;
        let text = block.text();
        let words = word_count(&text);
        w.stats.fragments_written += fragment_line_count(&block, c) as u64;
        w.stats.blocks_written += 1;
        w.stats.word_count += words;
        w.push_block(&text, words)?;
    }
    w.finish_shard()?;
    let stats = w.stats;
    fs::write(out_dir.join(CORPUS_STATS_FILE), stats.to_kv())?;
    Ok(stats)
}
