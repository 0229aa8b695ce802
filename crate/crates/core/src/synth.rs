//! Seeded synthetic RRF releases for tests and benchmarks.
//!
//! The generated tables exercise the awkward parts of real releases:
//! concepts with only non-English names, preferred names that are not on the
//! first row, repeated definitions, relations without a RELA, self-loops,
//! relations to concepts that have no names at all, duplicate relation rows
//! and truncated lines.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::build::RrfPaths;
use crate::rrf::{ConsoRow, DefRow, RelRow, RrfRecord, StyRow, TableKind, TableSchema};

const ADJECTIVES: &[&str] = &[
    "acute", "chronic", "benign", "malignant", "congenital", "autoimmune", "viral", "bacterial", "idiopathic",
    "primary", "secondary", "familial", "renal", "hepatic", "cardiac", "neural",
];
const NOUNS: &[&str] = &[
    "syndrome", "disorder", "carcinoma", "inhibitor", "receptor", "antigen", "protein", "infection", "lesion",
    "agent", "enzyme", "neoplasm", "deficiency", "procedure", "pathway", "gene",
];
const SEMANTIC_TYPES: &[(&str, &str)] = &[
    ("T047", "Disease or Syndrome"),
    ("T121", "Pharmacologic Substance"),
    ("T116", "Amino Acid, Peptide, or Protein"),
    ("T191", "Neoplastic Process"),
    ("T061", "Therapeutic or Preventive Procedure"),
    ("T023", "Body Part, Organ, or Organ Component"),
    ("T028", "Gene or Genome"),
    ("T170", "Intellectual Product"),
];
const RELS: &[&str] = &["RO", "RB", "RN", "PAR", "CHD", "SY", "RQ"];
const RELAS: &[&str] = &[
    "may_treat",
    "may_be_treated_by",
    "cause_of",
    "has_cause",
    "isa",
    "inverse_isa",
    "has_finding_site",
    "subset_includes_concept",
    "concept_in_subset",
    "associated_with",
];
const OTHER_LANGUAGES: &[&str] = &["FRE", "SPA", "GER", "JPN", "POR"];
const SOURCES: &[&str] = &["MSH", "NCI", "SNOMEDCT_US", "MTH", "RXNORM"];

/// Shape of a synthetic release. Fractions are probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub concepts: usize,
    pub relations: usize,
    /// Concepts whose names are all non-English.
    pub non_english_fraction: f64,
    /// Relation rows whose endpoints are concepts absent from MRCONSO.
    pub unknown_endpoint_fraction: f64,
    pub missing_rela_fraction: f64,
    pub self_loop_fraction: f64,
    /// Relation rows that repeat an earlier triple.
    pub duplicate_relation_fraction: f64,
    /// Concepts that get the same definition text twice.
    pub duplicate_definition_fraction: f64,
    /// Rows in every table that are cut short.
    pub truncated_fraction: f64,
    /// Name and definition rows flagged as suppressed.
    pub suppressed_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            concepts: 1_000,
            relations: 10_000,
            non_english_fraction: 0.1,
            unknown_endpoint_fraction: 0.02,
            missing_rela_fraction: 0.3,
            self_loop_fraction: 0.02,
            duplicate_relation_fraction: 0.03,
            duplicate_definition_fraction: 0.1,
            truncated_fraction: 0.002,
            suppressed_fraction: 0.03,
        }
    }
}

/// Line counts written per table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthSummary {
    pub conso_lines: u64,
    pub def_lines: u64,
    pub sty_lines: u64,
    pub rel_lines: u64,
    pub truncated_lines: u64,
}

pub fn synth_cui(i: usize) -> String {
    format!("C{:07}", i + 1)
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

struct Emitter<'a> {
    out: BufWriter<File>,
    schema: TableSchema,
    rng: &'a mut ChaCha8Rng,
    truncated_fraction: f64,
    lines: u64,
    truncated: u64,
}

impl<'a> Emitter<'a> {
    fn create(path: &Path, kind: TableKind, rng: &'a mut ChaCha8Rng, truncated_fraction: f64) -> io::Result<Self> {
        Ok(Emitter {
            out: BufWriter::new(File::create(path)?),
            schema: TableSchema::default_for(kind),
            rng,
            truncated_fraction,
            lines: 0,
            truncated: 0,
        })
    }

    fn emit(&mut self, row: &impl RrfRecord) -> io::Result<()> {
        let line = row.to_rrf_line(&self.schema);
        self.lines += 1;
        if self.truncated_fraction > 0.0 && self.rng.random_bool(self.truncated_fraction) {
            // keep only the first three fields
            let cut: Vec<&str> = line.splitn(4, '|').take(3).collect();
            self.truncated += 1;
            writeln!(self.out, "{}", cut.join("|"))
        } else {
            writeln!(self.out, "{line}")
        }
    }

    fn finish(mut self) -> io::Result<(u64, u64)> {
        self.out.flush()?;
        Ok((self.lines, self.truncated))
    }
}

/// Writes MRCONSO, MRDEF, MRSTY and MRREL into `dir`. Same config, same bytes.
pub fn write_release(dir: impl AsRef<Path>, cfg: &SynthConfig) -> io::Result<(RrfPaths, SynthSummary)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let paths = RrfPaths::in_dir(dir);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut summary = SynthSummary::default();

    let english: Vec<bool> = (0..cfg.concepts).map(|_| !rng.random_bool(cfg.non_english_fraction)).collect();

    // names
    let mut names = Vec::with_capacity(cfg.concepts);
    {
        let mut rows = Vec::new();
        for (i, &is_english) in english.iter().enumerate() {
            let cui = synth_cui(i);
            let base = format!("{} {} {}", pick(&mut rng, ADJECTIVES), pick(&mut rng, NOUNS), i);
            names.push(base.clone());
            let n_rows = rng.random_range(1..=3);
            let pref_row = rng.random_range(0..n_rows);
            for r in 0..n_rows {
                let lat = if is_english { "ENG" } else { pick(&mut rng, OTHER_LANGUAGES) };
                let name = if r == 0 { base.clone() } else { format!("{base} variant {r}") };
                // padded copies exercise trimming and synonym dedupe
                let name = if rng.random_bool(0.05) { format!(" {name} ") } else { name };
                let suppress = if rng.random_bool(cfg.suppressed_fraction) { "O" } else { "N" };
                rows.push(ConsoRow {
                    cui: cui.clone(),
                    lat: lat.into(),
                    term_status: if r == pref_row { "P" } else { "S" }.into(),
                    is_pref: if r == pref_row { "Y" } else { "N" }.into(),
                    source: pick(&mut rng, SOURCES).into(),
                    term_type: "PT".into(),
                    name,
                    suppress: suppress.into(),
                    line_number: 0,
                });
            }
            if is_english && rng.random_bool(0.2) {
                rows.push(ConsoRow {
                    cui: cui.clone(),
                    lat: pick(&mut rng, OTHER_LANGUAGES).into(),
                    term_status: "P".into(),
                    is_pref: "Y".into(),
                    source: "MSH".into(),
                    term_type: "PT".into(),
                    name: format!("{base} traduction"),
                    suppress: "N".into(),
                    line_number: 0,
                });
            }
        }
        let mut e = Emitter::create(&paths.conso, TableKind::Conso, &mut rng, cfg.truncated_fraction)?;
        for row in &rows {
            e.emit(row)?;
        }
        let (l, t) = e.finish()?;
        summary.conso_lines = l;
        summary.truncated_lines += t;
    }

    // definitions
    {
        let mut rows = Vec::new();
        for (i, name) in names.iter().enumerate() {
            let n = rng.random_range(0..=3);
            let mut texts: Vec<String> = (0..n).map(|d| format!("Definition {d} of {name}.")).collect();
            if !texts.is_empty() && rng.random_bool(cfg.duplicate_definition_fraction) {
                let dup = texts[0].clone();
                texts.push(dup);
            }
            for text in texts {
                let suppress = if rng.random_bool(cfg.suppressed_fraction) { "O" } else { "N" };
                rows.push(DefRow {
                    cui: synth_cui(i),
                    source: pick(&mut rng, SOURCES).into(),
                    definition: text,
                    suppress: suppress.into(),
                    line_number: 0,
                });
            }
        }
        let mut e = Emitter::create(&paths.def, TableKind::Def, &mut rng, cfg.truncated_fraction)?;
        for row in &rows {
            e.emit(row)?;
        }
        let (l, t) = e.finish()?;
        summary.def_lines = l;
        summary.truncated_lines += t;
    }

    // semantic types
    {
        let mut rows = Vec::new();
        for i in 0..cfg.concepts {
            let n = rng.random_range(1..=3);
            for _ in 0..n {
                let (id, name) = SEMANTIC_TYPES[rng.random_range(0..SEMANTIC_TYPES.len())];
                rows.push(StyRow {
                    cui: synth_cui(i),
                    type_id: id.into(),
                    type_name: name.into(),
                    line_number: 0,
                });
            }
        }
        let mut e = Emitter::create(&paths.sty, TableKind::Sty, &mut rng, cfg.truncated_fraction)?;
        for row in &rows {
            e.emit(row)?;
        }
        let (l, t) = e.finish()?;
        summary.sty_lines = l;
        summary.truncated_lines += t;
    }

    // relations
    {
        let mut rows: Vec<RelRow> = Vec::with_capacity(cfg.relations);
        let n = cfg.concepts.max(1);
        while rows.len() < cfg.relations {
            if !rows.is_empty() && rng.random_bool(cfg.duplicate_relation_fraction) {
                let prev = rows[rng.random_range(0..rows.len())].clone();
                rows.push(prev);
                continue;
            }
            let a = rng.random_range(0..n);
            let b = if rng.random_bool(cfg.self_loop_fraction) { a } else { rng.random_range(0..n) };
            let mut cui1 = synth_cui(a);
            let mut cui2 = synth_cui(b);
            if rng.random_bool(cfg.unknown_endpoint_fraction) {
                let ghost = synth_cui(n + rng.random_range(0..n));
                if rng.random_bool(0.5) {
                    cui1 = ghost;
                } else {
                    cui2 = ghost;
                }
            }
            let rela = if rng.random_bool(cfg.missing_rela_fraction) {
                None
            } else {
                Some(pick(&mut rng, RELAS).to_string())
            };
            rows.push(RelRow {
                cui1,
                rel: pick(&mut rng, RELS).into(),
                cui2,
                rela,
                source: pick(&mut rng, SOURCES).into(),
                line_number: 0,
            });
        }
        let mut e = Emitter::create(&paths.rel, TableKind::Rel, &mut rng, cfg.truncated_fraction)?;
        for row in &rows {
            e.emit(row)?;
        }
        let (l, t) = e.finish()?;
        summary.rel_lines = l;
        summary.truncated_lines += t;
    }

    Ok((paths, summary))
}

/// Streams `lines` MRREL rows over `concepts` CUIs to `path` without holding
/// them in memory.
pub fn write_rel_lines(path: impl AsRef<Path>, lines: u64, concepts: usize, seed: u64) -> io::Result<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = TableSchema::default_for(TableKind::Rel);
    let mut out = BufWriter::with_capacity(1 << 20, File::create(path.as_ref())?);
    let n = concepts.max(1);
    for _ in 0..lines {
        let rela = if rng.random_bool(0.3) { None } else { Some(pick(&mut rng, RELAS).to_string()) };
        let row = RelRow {
            cui1: synth_cui(rng.random_range(0..n)),
            rel: pick(&mut rng, RELS).into(),
            cui2: synth_cui(rng.random_range(0..n)),
            rela,
            source: pick(&mut rng, SOURCES).into(),
            line_number: 0,
        };
        writeln!(out, "{}", row.to_rrf_line(&schema))?;
    }
    out.flush()?;
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = SynthConfig { concepts: 50, relations: 300, ..Default::default() };
        let (pa, sa) = write_release(a.path(), &cfg).unwrap();
        let (pb, sb) = write_release(b.path(), &cfg).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(std::fs::read(&pa.rel).unwrap(), std::fs::read(&pb.rel).unwrap());
        assert_eq!(std::fs::read(&pa.conso).unwrap(), std::fs::read(&pb.conso).unwrap());
        assert_eq!(sa.rel_lines, 300);
    }

    #[test]
    fn rel_lines_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("MRREL.RRF");
        write_rel_lines(&path, 100, 10, 1).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 100);
        assert!(text.lines().all(|l| l.split('|').count() == 17));
    }
}
