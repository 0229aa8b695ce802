//! Neo4j `neo4j-admin database import` CSV export.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::codec::sha256_hex;
use super::{GraphSnapshot, StoreError};

pub const NODES_FILE: &str = "nodes.csv";
pub const RELATIONSHIPS_FILE: &str = "relationships.csv";
pub const MANIFEST_FILE: &str = "export-manifest.txt";
pub const NODES_HEADER: &str = "cui:ID,name,synonyms,semantic_types,definitions,:LABEL";
pub const RELATIONSHIPS_HEADER: &str = ":START_ID,:END_ID,:TYPE,provenance";
pub const NODE_LABEL: &str = "Concept";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub nodes_file: PathBuf,
    pub relationships_file: PathBuf,
    pub node_count: u64,
    pub relationship_count: u64,
    pub nodes_sha256: String,
    pub relationships_sha256: String,
}

impl ExportManifest {
    pub fn to_kv(&self) -> String {
        format!(
            "nodes_file={}\nrelationships_file={}\nnode_count={}\nrelationship_count={}\nnodes_sha256={}\nrelationships_sha256={}\n",
            self.nodes_file.display(),
            self.relationships_file.display(),
            self.node_count,
            self.relationship_count,
            self.nodes_sha256,
            self.relationships_sha256,
        )
    }
}

/// Uppercases and maps every character outside `[A-Z0-9_]` to `_`.
pub fn sanitize_label(label: &str) -> Result<String, StoreError> {
    let out: String = label
        .chars()
        .map(|c| {
            let u = c.to_ascii_uppercase();
            if u.is_ascii_uppercase() || u.is_ascii_digit() || u == '_' {
                u
            } else {
                '_'
            }
        })
        .collect();
    if out.is_empty() {
        return Err(StoreError::UnsanitizableLabel(label.to_string()));
    }
    Ok(out)
}

fn writer(path: &Path, header: &str) -> Result<csv::Writer<BufWriter<File>>, StoreError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(header.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(out))
}

/// Writes `nodes.csv`, `relationships.csv` and a key-value manifest into `out_dir`.
pub fn export_neo4j(snapshot: &GraphSnapshot, out_dir: impl AsRef<Path>) -> Result<ExportManifest, StoreError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let nodes_path = out_dir.join(NODES_FILE);
    let rels_path = out_dir.join(RELATIONSHIPS_FILE);

    let mut w = writer(&nodes_path, NODES_HEADER)?;
    for c in snapshot.concepts() {
        w.write_record([
            c.cui.as_str(),
            c.preferred_name.as_str(),
            c.synonyms.join(";").as_str(),
            c.semantic_types.join(";").as_str(),
            c.definitions.as_str(),
            NODE_LABEL,
        ])?;
    }
    w.flush()?;
    drop(w);

    let mut w = writer(&rels_path, RELATIONSHIPS_HEADER)?;
    for e in snapshot.edges() {
        let ty = sanitize_label(e.label)?;
        w.write_record([e.head_cui, e.tail_cui, ty.as_str(), e.label_provenance.as_str()])?;
    }
    w.flush()?;
    drop(w);

    let manifest = ExportManifest {
        nodes_file: nodes_path.clone(),
        relationships_file: rels_path.clone(),
        node_count: snapshot.concept_count() as u64,
        relationship_count: snapshot.edge_count() as u64,
        nodes_sha256: sha256_hex(&fs::read(&nodes_path)?),
        relationships_sha256: sha256_hex(&fs::read(&rels_path)?),
    };
    fs::write(out_dir.join(MANIFEST_FILE), manifest.to_kv())?;
    Ok(manifest)
}
