//! Knowledge-graph construction from decoded RRF rows.
//!
//! The pipeline runs in two phases. English names are reduced first because
//! they define the concept set; definitions, semantic types and relations are
//! then reduced against that set (concurrently when driven by
//! [`build_from_tables`]) and merged by [`assemble_graph`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rrf::{
    self, ConsoRow, DefRow, IngestReport, RelRow, RrfError, RrfRecord, StyRow, TableKind, TableSchema,
};
use crate::store::{GraphSnapshot, StoreError};

/// Joins definition segments inside [`ConceptRecord::definitions`].
pub const DEFINITION_SEPARATOR: &str = " | ";

const SUPPRESSED_FLAGS: [&str; 3] = ["O", "E", "Y"];

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Rrf(#[from] RrfError),
    #[error("edge {head} -[{label}]-> {tail} references a concept outside the graph")]
    DanglingEdge { head: String, label: String, tail: String },
    #[error("graph assembly failed: {0}")]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub cui: String,
    pub preferred_name: String,
    /// Distinct names other than the preferred one, in first-seen order.
    pub synonyms: Vec<String>,
    pub semantic_types: Vec<String>,
    /// Definition segments joined with [`DEFINITION_SEPARATOR`].
    pub definitions: String,
    pub definition_count: u32,
}

impl ConceptRecord {
    pub fn definition_segments(&self) -> Vec<&str> {
        if self.definitions.is_empty() {
            Vec::new()
        } else {
            self.definitions.split(DEFINITION_SEPARATOR).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelProvenance {
    SpecificRela,
    FallbackRel,
}

impl LabelProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelProvenance::SpecificRela => "specific_rela",
            LabelProvenance::FallbackRel => "fallback_rel",
        }
    }
}

impl fmt::Display for LabelProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Directed edge stored exactly as CUI1 → CUI2 from the source row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationEdge {
    pub head_cui: String,
    pub tail_cui: String,
    pub label: String,
    pub label_provenance: LabelProvenance,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub concepts_kept: u64,
    pub definitions_merged: u64,
    pub multi_definition_concepts: u64,
    pub edges_kept: u64,
    pub self_relations_dropped: u64,
    pub non_english_endpoint_dropped: u64,
    pub fallback_labels_used: u64,
    pub distinct_labels: u64,
    /// REL rows offered to [`build_edges`].
    pub rel_rows_seen: u64,
    /// Edges that survived filtering, before collapsing duplicate triples.
    pub edges_before_dedupe: u64,
    /// CONSO and DEF rows excluded by the suppress policy.
    pub suppressed_rows_dropped: u64,
}

impl BuildStats {
    /// Field names and values in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("concepts_kept", self.concepts_kept),
            ("definitions_merged", self.definitions_merged),
            ("multi_definition_concepts", self.multi_definition_concepts),
            ("edges_kept", self.edges_kept),
            ("self_relations_dropped", self.self_relations_dropped),
            ("non_english_endpoint_dropped", self.non_english_endpoint_dropped),
            ("fallback_labels_used", self.fallback_labels_used),
            ("distinct_labels", self.distinct_labels),
            ("rel_rows_seen", self.rel_rows_seen),
            ("edges_before_dedupe", self.edges_before_dedupe),
            ("suppressed_rows_dropped", self.suppressed_rows_dropped),
        ]
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, u64)>) -> Self {
        let mut s = BuildStats::default();
        for (k, v) in entries {
            match k {
                "concepts_kept" => s.concepts_kept = v,
                "definitions_merged" => s.definitions_merged = v,
                "multi_definition_concepts" => s.multi_definition_concepts = v,
                "edges_kept" => s.edges_kept = v,
                "self_relations_dropped" => s.self_relations_dropped = v,
                "non_english_endpoint_dropped" => s.non_english_endpoint_dropped = v,
                "fallback_labels_used" => s.fallback_labels_used = v,
                "distinct_labels" => s.distinct_labels = v,
                "rel_rows_seen" => s.rel_rows_seen = v,
                "edges_before_dedupe" => s.edges_before_dedupe = v,
                "suppressed_rows_dropped" => s.suppressed_rows_dropped = v,
                _ => {}
            }
        }
        s
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Aligned two-column table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::from("build statistics\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "  {k:<30} {v:>12}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Exclude CONSO/DEF rows whose SUPPRESS flag is O, E or Y.
    pub drop_suppressed: bool,
}

impl BuildOptions {
    fn suppressed(&self, flag: &str) -> bool {
        self.drop_suppressed && SUPPRESSED_FLAGS.contains(&flag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptNames {
    pub preferred_name: String,
    pub synonyms: Vec<String>,
}

#[derive(Debug, Default)]
struct NameAcc {
    names: IndexSet<String>,
    preferred: Option<usize>,
}

/// Result of [`filter_english`].
#[derive(Debug, Default)]
pub struct EnglishNames {
    pub concepts: BTreeMap<String, ConceptNames>,
    pub suppressed_rows_dropped: u64,
}

impl EnglishNames {
    pub fn cui_set(&self) -> HashSet<String> {
        self.concepts.keys().cloned().collect()
    }
}

/// Keeps `LAT = ENG` names and picks one preferred name per CUI.
///
/// The preferred name is the first row with `TS = P` and `ISPREF = Y`, falling
/// back to the first English row. Every other distinct trimmed name becomes a
/// synonym.
pub fn filter_english<I>(rows: I, opts: &BuildOptions) -> EnglishNames
where
    I: IntoIterator<Item = ConsoRow>,
{
    let mut acc: HashMap<String, NameAcc> = HashMap::new();
    let mut suppressed = 0u64;
    for row in rows {
        if row.lat != "ENG" {
            continue;
        }
        if opts.suppressed(&row.suppress) {
            suppressed += 1;
            continue;
        }
        let name = row.name.trim();
        if name.is_empty() {
            continue;
        }
        let entry = acc.entry(row.cui).or_default();
        let (idx, _) = entry.names.insert_full(name.to_string());
        if entry.preferred.is_none() && row.term_status == "P" && row.is_pref == "Y" {
            entry.preferred = Some(idx);
        }
    }
    let concepts = acc
        .into_iter()
        .map(|(cui, a)| {
            let pref = a.preferred.unwrap_or(0);
            let mut preferred_name = String::new();
            let mut synonyms = Vec::with_capacity(a.names.len().saturating_sub(1));
            for (i, n) in a.names.into_iter().enumerate() {
                if i == pref {
                    preferred_name = n;
                } else {
                    synonyms.push(n);
                }
            }
            (cui, ConceptNames { preferred_name, synonyms })
        })
        .collect();
    EnglishNames {
        concepts,
        suppressed_rows_dropped: suppressed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definitions {
    pub joined: String,
    pub count: u32,
}

#[derive(Debug, Default)]
pub struct AggregatedDefinitions {
    pub by_cui: BTreeMap<String, Definitions>,
    pub suppressed_rows_dropped: u64,
}

/// Concatenates each English concept's distinct definitions in first-seen order.
pub fn aggregate_definitions<I>(rows: I, english: &HashSet<String>, opts: &BuildOptions) -> AggregatedDefinitions
where
    I: IntoIterator<Item = DefRow>,
{
    let mut acc: HashMap<String, IndexSet<String>> = HashMap::new();
    let mut suppressed = 0u64;
    for row in rows {
        if !english.contains(&row.cui) {
            continue;
        }
        if opts.suppressed(&row.suppress) {
            suppressed += 1;
            continue;
        }
        let text = row.definition.trim();
        if text.is_empty() {
            continue;
        }
        acc.entry(row.cui).or_default().insert(text.to_string());
    }
    let by_cui = acc
        .into_iter()
        .map(|(cui, defs)| {
            let count = defs.len() as u32;
            let joined = defs.into_iter().collect::<Vec<_>>().join(DEFINITION_SEPARATOR);
            (cui, Definitions { joined, count })
        })
        .collect();
    AggregatedDefinitions {
        by_cui,
        suppressed_rows_dropped: suppressed,
    }
}

/// Semantic type names per English concept, first-seen order, deduplicated.
pub fn attach_semantic_types<I>(rows: I, english: &HashSet<String>) -> BTreeMap<String, Vec<String>>
where
    I: IntoIterator<Item = StyRow>,
{
    let mut acc: HashMap<String, IndexSet<String>> = HashMap::new();
    for row in rows {
        if !english.contains(&row.cui) {
            continue;
        }
        acc.entry(row.cui).or_default().insert(row.type_name);
    }
    acc.into_iter()
        .map(|(cui, types)| (cui, types.into_iter().collect()))
        .collect()
}

/// Edges plus the edge-related counters of [`BuildStats`].
#[derive(Debug, Default)]
pub struct EdgeSet {
    /// Deduplicated edges in first-seen order.
    pub edges: Vec<RelationEdge>,
    pub rel_rows_seen: u64,
    pub self_relations_dropped: u64,
    pub non_english_endpoint_dropped: u64,
    pub edges_before_dedupe: u64,
}

/// Filters REL rows into labeled edges.
///
/// Self-relations are checked before the language filter, so a row that is
/// both counts only as a self-relation. Duplicate `(head, tail, label)` triples
/// keep the first row's provenance and source.
pub fn build_edges<I>(rows: I, english: &HashSet<String>) -> EdgeSet
where
    I: IntoIterator<Item = RelRow>,
{
    let mut out = EdgeSet::default();
    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    for row in rows {
        out.rel_rows_seen += 1;
        if row.cui1 == row.cui2 {
            out.self_relations_dropped += 1;
            continue;
        }
        if !english.contains(&row.cui1) || !english.contains(&row.cui2) {
            out.non_english_endpoint_dropped += 1;
            continue;
        }
        out.edges_before_dedupe += 1;
        let (label, label_provenance) = match row.rela {
            Some(rela) => (rela, LabelProvenance::SpecificRela),
            None => (row.rel, LabelProvenance::FallbackRel),
        };
        let key = (row.cui1, row.cui2, label);
        if seen.contains(&key) {
            continue;
        }
        out.edges.push(RelationEdge {
            head_cui: key.0.clone(),
            tail_cui: key.1.clone(),
            label: key.2.clone(),
            label_provenance,
            source: row.source,
        });
        seen.insert(key);
    }
    out
}

/// Joins the four reductions into an immutable snapshot.
pub fn assemble_graph(
    names: EnglishNames,
    mut definitions: AggregatedDefinitions,
    mut types: BTreeMap<String, Vec<String>>,
    edges: EdgeSet,
) -> Result<GraphSnapshot, BuildError> {
    let mut stats = BuildStats {
        suppressed_rows_dropped: names.suppressed_rows_dropped + definitions.suppressed_rows_dropped,
        rel_rows_seen: edges.rel_rows_seen,
        self_relations_dropped: edges.self_relations_dropped,
        non_english_endpoint_dropped: edges.non_english_endpoint_dropped,
        edges_before_dedupe: edges.edges_before_dedupe,
        ..BuildStats::default()
    };

    let mut concepts = Vec::with_capacity(names.concepts.len());
    for (cui, n) in names.concepts {
        let defs = definitions.by_cui.remove(&cui);
        let (definitions, definition_count) = match defs {
            Some(d) => (d.joined, d.count),
            None => (String::new(), 0),
        };
        stats.definitions_merged += u64::from(definition_count);
        if definition_count > 1 {
            stats.multi_definition_concepts += 1;
        }
        concepts.push(ConceptRecord {
            semantic_types: types.remove(&cui).unwrap_or_default(),
            cui,
            preferred_name: n.preferred_name,
            synonyms: n.synonyms,
            definitions,
            definition_count,
        });
    }
    stats.concepts_kept = concepts.len() as u64;

    {
        let known: HashSet<&str> = concepts.iter().map(|c| c.cui.as_str()).collect();
        if let Some(e) = edges
            .edges
            .iter()
            .find(|e| !known.contains(e.head_cui.as_str()) || !known.contains(e.tail_cui.as_str()))
        {
            return Err(BuildError::DanglingEdge {
                head: e.head_cui.clone(),
                label: e.label.clone(),
                tail: e.tail_cui.clone(),
            });
        }
    }

    stats.edges_kept = edges.edges.len() as u64;
    stats.fallback_labels_used = edges
        .edges
        .iter()
        .filter(|e| e.label_provenance == LabelProvenance::FallbackRel)
        .count() as u64;
    stats.distinct_labels = edges.edges.iter().map(|e| e.label.as_str()).collect::<HashSet<_>>().len() as u64;

    Ok(GraphSnapshot::from_parts(concepts, edges.edges, stats)?)
}

/// Locations of the four RRF tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrfPaths {
    pub conso: PathBuf,
    pub def: PathBuf,
    pub sty: PathBuf,
    pub rel: PathBuf,
}

impl RrfPaths {
    /// Standard file names inside one release directory.
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        RrfPaths {
            conso: dir.join(TableKind::Conso.file_name()),
            def: dir.join(TableKind::Def.file_name()),
            sty: dir.join(TableKind::Sty.file_name()),
            rel: dir.join(TableKind::Rel.file_name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchemas {
    pub conso: TableSchema,
    pub def: TableSchema,
    pub sty: TableSchema,
    pub rel: TableSchema,
}

impl Default for TableSchemas {
    fn default() -> Self {
        TableSchemas {
            conso: TableSchema::default_for(TableKind::Conso),
            def: TableSchema::default_for(TableKind::Def),
            sty: TableSchema::default_for(TableKind::Sty),
            rel: TableSchema::default_for(TableKind::Rel),
        }
    }
}

#[derive(Debug)]
pub struct BuildOutput {
    pub snapshot: GraphSnapshot,
    pub conso_report: IngestReport,
    pub def_report: IngestReport,
    pub sty_report: IngestReport,
    pub rel_report: IngestReport,
}

/// Drains a reader, stopping at the first I/O error.
fn drain<T: RrfRecord, F, O>(mut reader: rrf::TableReader<T>, reduce: F) -> Result<(O, IngestReport), RrfError>
where
    F: FnOnce(&mut dyn Iterator<Item = T>) -> O,
{
    let mut failure = None;
    let out = {
        let mut rows = reader.by_ref().map_while(|r| match r {
            Ok(row) => Some(row),
            Err(e) => {
                failure = Some(e);
                None
            }
        });
        reduce(&mut rows)
    };
    match failure {
        Some(e) => Err(e),
        None => Ok((out, reader.into_report())),
    }
}

/// Streams all four tables and assembles the graph.
pub fn build_from_tables(
    paths: &RrfPaths,
    schemas: &TableSchemas,
    opts: &BuildOptions,
) -> Result<BuildOutput, BuildError> {
    // open everything up front so a missing file fails before any work
    let conso = rrf::stream_table::<ConsoRow>(&paths.conso, schemas.conso.clone())?;
    let def = rrf::stream_table::<DefRow>(&paths.def, schemas.def.clone())?;
    let sty = rrf::stream_table::<StyRow>(&paths.sty, schemas.sty.clone())?;
    let rel = rrf::stream_table::<RelRow>(&paths.rel, schemas.rel.clone())?;

    let (names, conso_report) = drain(conso, |rows| filter_english(rows, opts))?;
    let english = names.cui_set();

    let (defs, types, edges) = std::thread::scope(|s| {
        let english = &english;
        let d = s.spawn(move || drain(def, |rows| aggregate_definitions(rows, english, opts)));
        let t = s.spawn(move || drain(sty, |rows| attach_semantic_types(rows, english)));
        let e = s.spawn(move || drain(rel, |rows| build_edges(rows, english)));
        (
            d.join().expect("definition reducer panicked"),
            t.join().expect("semantic type reducer panicked"),
            e.join().expect("relation reducer panicked"),
        )
    });
    let (defs, def_report) = defs?;
    let (types, sty_report) = types?;
    let (edges, rel_report) = edges?;
    drop(english);

    let snapshot = assemble_graph(names, defs, types, edges)?;
    Ok(BuildOutput {
        snapshot,
        conso_report,
        def_report,
        sty_report,
        rel_report,
    })
}
