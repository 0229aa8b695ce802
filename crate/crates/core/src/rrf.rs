//! Streaming decoder for UMLS Metathesaurus RRF tables.
//!
//! RRF files are pipe-delimited UTF-8 text with one record per line and an
//! optional trailing `|`. The four tables consumed here are:
//!
//! - `MRCONSO.RRF`: concept names and their language / source
//! - `MRDEF.RRF`: definitions
//! - `MRSTY.RRF`: semantic types
//! - `MRREL.RRF`: relations between concepts
//!
//! Readers hold a single reusable line buffer, so memory use does not depend
//! on file length. Malformed lines are skipped, counted and sampled into an
//! [`IngestReport`] rather than aborting the stream.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How many malformed lines are kept verbatim in a report.
pub const MALFORMED_SAMPLE_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum RrfError {
    #[error("RRF file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("I/O error reading {path} near line {line}: {source}")]
    Io {
        path: PathBuf,
        line: u64,
        #[source]
        source: io::Error,
    },
    #[error("invalid {kind} schema: {reason}")]
    InvalidSchema { kind: TableKind, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TableKind {
    Conso,
    Def,
    Sty,
    Rel,
}

impl TableKind {
    pub fn required_fields(self) -> &'static [&'static str] {
        match self {
            TableKind::Conso => &[
                "cui",
                "lat",
                "term_status",
                "is_pref",
                "source",
                "term_type",
                "name",
                "suppress",
            ],
            TableKind::Def => &["cui", "source", "definition", "suppress"],
            TableKind::Sty => &["cui", "type_id", "type_name"],
            TableKind::Rel => &["cui1", "rel", "cui2", "rela", "source"],
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            TableKind::Conso => "MRCONSO.RRF",
            TableKind::Def => "MRDEF.RRF",
            TableKind::Sty => "MRSTY.RRF",
            TableKind::Rel => "MRREL.RRF",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TableKind::Conso => "CONSO",
            TableKind::Def => "DEF",
            TableKind::Sty => "STY",
            TableKind::Rel => "REL",
        };
        f.write_str(s)
    }
}

/// Column layout of one RRF table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub table_kind: TableKind,
    pub column_indices: BTreeMap<String, usize>,
    pub min_columns: usize,
}

impl TableSchema {
    /// Default layouts follow the UMLS 2024AA column documentation. `min_columns`
    /// is the full documented column count of each table.
    pub fn default_for(kind: TableKind) -> Self {
        let (cols, min_columns): (&[(&str, usize)], usize) = match kind {
            TableKind::Conso => (
                &[
                    ("cui", 0),
                    ("lat", 1),
                    ("term_status", 2),
                    ("is_pref", 6),
                    ("source", 11),
                    ("term_type", 12),
                    ("name", 14),
                    ("suppress", 16),
                ],
                18,
            ),
            TableKind::Def => (
                &[("cui", 0), ("source", 4), ("definition", 5), ("suppress", 6)],
                8,
            ),
            TableKind::Sty => (&[("cui", 0), ("type_id", 1), ("type_name", 3)], 6),
            TableKind::Rel => (
                &[("cui1", 0), ("rel", 3), ("cui2", 4), ("rela", 7), ("source", 10)],
                16,
            ),
        };
        TableSchema {
            table_kind: kind,
            column_indices: cols.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            min_columns,
        }
    }

    /// Applies per-field index overrides and an optional column minimum, then
    /// validates the result.
    pub fn with_overrides(
        mut self,
        columns: &BTreeMap<String, usize>,
        min_columns: Option<usize>,
    ) -> Result<Self, RrfError> {
        for (field, idx) in columns {
            if !self.table_kind.required_fields().contains(&field.as_str()) {
                return Err(RrfError::InvalidSchema {
                    kind: self.table_kind,
                    reason: format!("unknown field `{field}`"),
                });
            }
            self.column_indices.insert(field.clone(), *idx);
        }
        let max_idx = self.column_indices.values().copied().max().unwrap_or(0);
        self.min_columns = match min_columns {
            Some(m) => m,
            None => self.min_columns.max(max_idx + 1),
        };
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), RrfError> {
        for field in self.table_kind.required_fields() {
            if !self.column_indices.contains_key(*field) {
                return Err(RrfError::InvalidSchema {
                    kind: self.table_kind,
                    reason: format!("missing column index for `{field}`"),
                });
            }
        }
        let max_idx = self.column_indices.values().copied().max().unwrap_or(0);
        if self.min_columns < max_idx + 1 {
            return Err(RrfError::InvalidSchema {
                kind: self.table_kind,
                reason: format!(
                    "min_columns {} is below highest mapped index {} + 1",
                    self.min_columns, max_idx
                ),
            });
        }
        Ok(())
    }

    fn col(&self, field: &str) -> usize {
        // validate() guarantees presence for required fields
        self.column_indices[field]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MalformedReason {
    TooFewFields,
    InvalidEncoding,
    MissingRequiredField,
}

impl fmt::Display for MalformedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MalformedReason::TooFewFields => "too_few_fields",
            MalformedReason::InvalidEncoding => "invalid_encoding",
            MalformedReason::MissingRequiredField => "missing_required_field",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub reason: MalformedReason,
    pub detail: String,
}

/// Splits one physical line into fields.
///
/// The empty field produced by a trailing `|` is dropped, so `a|b|` and `a|b`
/// both yield two fields.
pub fn parse_line<'a>(line: &'a [u8], schema: &TableSchema) -> Result<Vec<&'a str>, MalformedLine> {
    let text = std::str::from_utf8(line).map_err(|e| MalformedLine {
        reason: MalformedReason::InvalidEncoding,
        detail: e.to_string(),
    })?;
    let body = text.strip_suffix('|').unwrap_or(text);
    let fields: Vec<&str> = body.split('|').collect();
    if fields.len() < schema.min_columns {
        return Err(MalformedLine {
            reason: MalformedReason::TooFewFields,
            detail: format!("{} fields, need {}", fields.len(), schema.min_columns),
        });
    }
    Ok(fields)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConsoRow {
    pub cui: String,
    pub lat: String,
    pub term_status: String,
    pub is_pref: String,
    pub source: String,
    pub term_type: String,
    pub name: String,
    pub suppress: String,
    pub line_number: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefRow {
    pub cui: String,
    pub source: String,
    pub definition: String,
    pub suppress: String,
    pub line_number: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StyRow {
    pub cui: String,
    pub type_id: String,
    pub type_name: String,
    pub line_number: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelRow {
    pub cui1: String,
    pub rel: String,
    pub cui2: String,
    /// `None` when the RELA column is empty; never `Some("")`.
    pub rela: Option<String>,
    pub source: String,
    pub line_number: u64,
}

/// A row of any of the four tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Row {
    Conso(ConsoRow),
    Def(DefRow),
    Sty(StyRow),
    Rel(RelRow),
}

/// Decoding of a typed row from split fields, and the inverse rendering.
pub trait RrfRecord: Sized {
    const KIND: TableKind;

    fn decode(fields: &[&str], schema: &TableSchema, line_number: u64) -> Result<Self, MalformedLine>;

    /// Renders the row as an RRF line (with trailing `|`) under `schema`.
    /// Unmapped columns are left empty.
    fn to_rrf_line(&self, schema: &TableSchema) -> String;
}

fn required<'a>(fields: &[&'a str], schema: &TableSchema, field: &str) -> Result<&'a str, MalformedLine> {
    let v = fields[schema.col(field)];
    if v.trim().is_empty() {
        return Err(MalformedLine {
            reason: MalformedReason::MissingRequiredField,
            detail: format!("empty `{field}`"),
        });
    }
    Ok(v)
}

fn optional<'a>(fields: &[&'a str], schema: &TableSchema, field: &str) -> &'a str {
    fields[schema.col(field)]
}

fn render(schema: &TableSchema, values: &[(&str, &str)]) -> String {
    let mut cols = vec![""; schema.min_columns];
    for (field, value) in values {
        cols[schema.col(field)] = value;
    }
    let mut line = cols.join("|");
    line.push('|');
    line
}

impl RrfRecord for ConsoRow {
    const KIND: TableKind = TableKind::Conso;

    fn decode(fields: &[&str], schema: &TableSchema, line_number: u64) -> Result<Self, MalformedLine> {
        Ok(ConsoRow {
            cui: required(fields, schema, "cui")?.to_string(),
            lat: optional(fields, schema, "lat").to_string(),
            term_status: optional(fields, schema, "term_status").to_string(),
            is_pref: optional(fields, schema, "is_pref").to_string(),
            source: optional(fields, schema, "source").to_string(),
            term_type: optional(fields, schema, "term_type").to_string(),
            name: required(fields, schema, "name")?.to_string(),
            suppress: optional(fields, schema, "suppress").to_string(),
            line_number,
        })
    }

    fn to_rrf_line(&self, schema: &TableSchema) -> String {
        render(
            schema,
            &[
                ("cui", &self.cui),
                ("lat", &self.lat),
                ("term_status", &self.term_status),
                ("is_pref", &self.is_pref),
                ("source", &self.source),
                ("term_type", &self.term_type),
                ("name", &self.name),
                ("suppress", &self.suppress),
            ],
        )
    }
}

impl RrfRecord for DefRow {
    const KIND: TableKind = TableKind::Def;

    fn decode(fields: &[&str], schema: &TableSchema, line_number: u64) -> Result<Self, MalformedLine> {
        Ok(DefRow {
            cui: required(fields, schema, "cui")?.to_string(),
            source: optional(fields, schema, "source").to_string(),
            definition: required(fields, schema, "definition")?.to_string(),
            suppress: optional(fields, schema, "suppress").to_string(),
            line_number,
        })
    }

    fn to_rrf_line(&self, schema: &TableSchema) -> String {
        render(
            schema,
            &[
                ("cui", &self.cui),
                ("source", &self.source),
                ("definition", &self.definition),
                ("suppress", &self.suppress),
            ],
        )
    }
}

impl RrfRecord for StyRow {
    const KIND: TableKind = TableKind::Sty;

    fn decode(fields: &[&str], schema: &TableSchema, line_number: u64) -> Result<Self, MalformedLine> {
        Ok(StyRow {
            cui: required(fields, schema, "cui")?.to_string(),
            type_id: optional(fields, schema, "type_id").to_string(),
            type_name: required(fields, schema, "type_name")?.to_string(),
            line_number,
        })
    }

    fn to_rrf_line(&self, schema: &TableSchema) -> String {
        render(
            schema,
            &[
                ("cui", &self.cui),
                ("type_id", &self.type_id),
                ("type_name", &self.type_name),
            ],
        )
    }
}

impl RrfRecord for RelRow {
    const KIND: TableKind = TableKind::Rel;

    fn decode(fields: &[&str], schema: &TableSchema, line_number: u64) -> Result<Self, MalformedLine> {
        let rela = optional(fields, schema, "rela");
        Ok(RelRow {
            cui1: required(fields, schema, "cui1")?.to_string(),
            rel: required(fields, schema, "rel")?.to_string(),
            cui2: required(fields, schema, "cui2")?.to_string(),
            rela: if rela.is_empty() { None } else { Some(rela.to_string()) },
            source: optional(fields, schema, "source").to_string(),
            line_number,
        })
    }

    fn to_rrf_line(&self, schema: &TableSchema) -> String {
        render(
            schema,
            &[
                ("cui1", &self.cui1),
                ("rel", &self.rel),
                ("cui2", &self.cui2),
                ("rela", self.rela.as_deref().unwrap_or("")),
                ("source", &self.source),
            ],
        )
    }
}

/// Decodes already-split fields according to the schema's table kind.
pub fn decode_row(fields: &[&str], schema: &TableSchema, line_number: u64) -> Result<Row, MalformedLine> {
    if fields.len() < schema.min_columns {
        return Err(MalformedLine {
            reason: MalformedReason::TooFewFields,
            detail: format!("{} fields, need {}", fields.len(), schema.min_columns),
        });
    }
    Ok(match schema.table_kind {
        TableKind::Conso => Row::Conso(ConsoRow::decode(fields, schema, line_number)?),
        TableKind::Def => Row::Def(DefRow::decode(fields, schema, line_number)?),
        TableKind::Sty => Row::Sty(StyRow::decode(fields, schema, line_number)?),
        TableKind::Rel => Row::Rel(RelRow::decode(fields, schema, line_number)?),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_decoded: u64,
    pub rows_malformed: u64,
    pub first_malformed_lines: Vec<(u64, String)>,
}

impl IngestReport {
    fn record_malformed(&mut self, line_number: u64, bad: &MalformedLine) {
        self.rows_malformed += 1;
        if self.first_malformed_lines.len() < MALFORMED_SAMPLE_CAP {
            self.first_malformed_lines
                .push((line_number, format!("{}: {}", bad.reason, bad.detail)));
        }
    }
}

/// Lazily decodes one RRF table into rows of type `T`.
///
/// Yields `Ok(row)` for each decodable line in file order. An I/O failure is
/// yielded once as `Err` and ends the stream; [`TableReader::report`] still
/// describes everything read up to that point.
pub struct TableReader<T, R = BufReader<File>> {
    reader: R,
    schema: TableSchema,
    path: PathBuf,
    buf: Vec<u8>,
    report: IngestReport,
    done: bool,
    _row: PhantomData<fn() -> T>,
}

impl<T: RrfRecord> TableReader<T> {
    pub fn open(path: impl AsRef<Path>, schema: TableSchema) -> Result<Self, RrfError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => RrfError::FileNotFound(path.to_path_buf()),
            _ => RrfError::Io {
                path: path.to_path_buf(),
                line: 0,
                source: e,
            },
        })?;
        Self::from_reader(BufReader::with_capacity(1 << 16, file), schema, path)
    }
}

impl<T: RrfRecord, R: BufRead> TableReader<T, R> {
    pub fn from_reader(reader: R, schema: TableSchema, label: impl Into<PathBuf>) -> Result<Self, RrfError> {
        if schema.table_kind != T::KIND {
            return Err(RrfError::InvalidSchema {
                kind: schema.table_kind,
                reason: format!("schema is for {} but rows are {}", schema.table_kind, T::KIND),
            });
        }
        schema.validate()?;
        Ok(TableReader {
            reader,
            schema,
            path: label.into(),
            buf: Vec::with_capacity(1024),
            report: IngestReport::default(),
            done: false,
            _row: PhantomData,
        })
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }
}

impl<T: RrfRecord, R: BufRead> Iterator for TableReader<T, R> {
    type Item = Result<T, RrfError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(RrfError::Io {
                        path: self.path.clone(),
                        line: self.report.rows_read + 1,
                        source: e,
                    }));
                }
            }
            let mut line: &[u8] = &self.buf;
            if let Some(rest) = line.strip_suffix(b"\n") {
                line = rest;
            }
            if let Some(rest) = line.strip_suffix(b"\r") {
                line = rest;
            }
            self.report.rows_read += 1;
            let line_number = self.report.rows_read;
            let decoded = parse_line(line, &self.schema)
                .and_then(|fields| T::decode(&fields, &self.schema, line_number));
            match decoded {
                Ok(row) => {
                    self.report.rows_decoded += 1;
                    return Some(Ok(row));
                }
                Err(bad) => self.report.record_malformed(line_number, &bad),
            }
        }
        None
    }
}

/// Opens a typed stream over `path`.
pub fn stream_table<T: RrfRecord>(path: impl AsRef<Path>, schema: TableSchema) -> Result<TableReader<T>, RrfError> {
    TableReader::open(path, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn conso_line(cui: &str, lat: &str, name: &str) -> String {
        ConsoRow {
            cui: cui.into(),
            lat: lat.into(),
            term_status: "P".into(),
            is_pref: "Y".into(),
            source: "MSH".into(),
            term_type: "MH".into(),
            name: name.into(),
            suppress: "N".into(),
            line_number: 0,
        }
        .to_rrf_line(&TableSchema::default_for(TableKind::Conso))
    }

    #[test]
    fn parses_conso_line() {
        let line = "C0018798|ENG|P|L0018798|PF|S0046955|Y|A0066108||M0009795|D006330|MSH|MH|D006330|Congenital Heart Defects|0|N|256|";
        let schema = TableSchema::default_for(TableKind::Conso);
        let fields = parse_line(line.as_bytes(), &schema).unwrap();
        assert_eq!(fields.len(), 18);
        let row = ConsoRow::decode(&fields, &schema, 1).unwrap();
        assert_eq!(row.cui, "C0018798");
        assert_eq!(row.lat, "ENG");
        assert_eq!(row.name, "Congenital Heart Defects");
        assert_eq!(row.source, "MSH");
        assert_eq!(row.suppress, "N");
    }

    #[test]
    fn empty_and_short_lines_are_too_few_fields() {
        let schema = TableSchema::default_for(TableKind::Conso);
        let err = parse_line(b"", &schema).unwrap_err();
        assert_eq!(err.reason, MalformedReason::TooFewFields);

        let mut eight = TableSchema::default_for(TableKind::Def);
        eight.min_columns = 8;
        let err = parse_line(b"a|b", &eight).unwrap_err();
        assert_eq!(err.reason, MalformedReason::TooFewFields);
    }

    #[test]
    fn invalid_utf8_is_malformed() {
        let schema = TableSchema::default_for(TableKind::Sty);
        let err = parse_line(b"C1|T1|x|\xff\xfe|y|z|", &schema).unwrap_err();
        assert_eq!(err.reason, MalformedReason::InvalidEncoding);
    }

    #[test]
    fn trailing_pipe_is_optional() {
        let schema = TableSchema::default_for(TableKind::Sty);
        let a = parse_line(b"C1|T019|A1.2|Congenital Abnormality|AT1|256|", &schema).unwrap();
        let b = parse_line(b"C1|T019|A1.2|Congenital Abnormality|AT1|256", &schema).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rel_empty_rela_is_absent() {
        let schema = TableSchema::default_for(TableKind::Rel);
        let line = "C1|A1|SCUI|RO|C2|A2|SCUI||R1||MSH|MSH|||N||";
        let fields = parse_line(line.as_bytes(), &schema).unwrap();
        let row = RelRow::decode(&fields, &schema, 1).unwrap();
        assert_eq!(row.rela, None);
        assert_eq!(row.rel, "RO");
    }

    #[test]
    fn rel_with_rela() {
        let schema = TableSchema::default_for(TableKind::Rel);
        let line = "C1|A1|SCUI|RO|C2|A2|SCUI|has_finding_site|R1||SNOMEDCT_US|SNOMEDCT_US|0|Y|N||";
        let fields = parse_line(line.as_bytes(), &schema).unwrap();
        match decode_row(&fields, &schema, 7).unwrap() {
            Row::Rel(r) => {
                assert_eq!(r.cui1, "C1");
                assert_eq!(r.rel, "RO");
                assert_eq!(r.cui2, "C2");
                assert_eq!(r.rela.as_deref(), Some("has_finding_site"));
                assert_eq!(r.source, "SNOMEDCT_US");
                assert_eq!(r.line_number, 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sty_row_decodes() {
        let schema = TableSchema::default_for(TableKind::Sty);
        let fields = parse_line(b"C0018798|T019|A1.2.2.1|Congenital Abnormality|AT17575112|256|", &schema).unwrap();
        let row = StyRow::decode(&fields, &schema, 1).unwrap();
        assert_eq!(row.cui, "C0018798");
        assert_eq!(row.type_id, "T019");
        assert_eq!(row.type_name, "Congenital Abnormality");
    }

    #[test]
    fn missing_cui_is_rejected() {
        let schema = TableSchema::default_for(TableKind::Rel);
        let fields = parse_line(b"|A1|SCUI|RO|C2|A2|SCUI||R1||MSH|MSH|||N||", &schema).unwrap();
        let err = RelRow::decode(&fields, &schema, 1).unwrap_err();
        assert_eq!(err.reason, MalformedReason::MissingRequiredField);
    }

    #[test]
    fn schema_override_validation() {
        let base = TableSchema::default_for(TableKind::Def);
        let mut cols = BTreeMap::new();
        cols.insert("definition".to_string(), 9);
        let s = base.clone().with_overrides(&cols, None).unwrap();
        assert_eq!(s.min_columns, 10);
        assert!(base.clone().with_overrides(&cols, Some(5)).is_err());
        let mut bogus = BTreeMap::new();
        bogus.insert("nope".to_string(), 1);
        assert!(base.with_overrides(&bogus, None).is_err());
    }

    #[test]
    fn stream_skips_and_counts_malformed() {
        let schema = TableSchema::default_for(TableKind::Conso);
        let mut text = String::new();
        for i in 0..10 {
            if i == 3 || i == 7 {
                text.push_str("C9|ENG|P\n");
            } else {
                text.push_str(&conso_line(&format!("C{i}"), "ENG", "name"));
                text.push('\n');
            }
        }
        let mut reader: TableReader<ConsoRow, _> =
            TableReader::from_reader(Cursor::new(text.into_bytes()), schema, "mem").unwrap();
        let rows: Vec<ConsoRow> = reader.by_ref().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 8);
        let report = reader.report();
        assert_eq!(report.rows_read, 10);
        assert_eq!(report.rows_malformed, 2);
        assert_eq!(report.first_malformed_lines[0].0, 4);
        assert_eq!(report.first_malformed_lines[1].0, 8);
        assert_eq!(rows[3].line_number, 5);
    }

    #[test]
    fn crlf_line_endings() {
        let schema = TableSchema::default_for(TableKind::Conso);
        let text = format!("{}\r\n", conso_line("C1", "ENG", "Aspirin"));
        let mut reader: TableReader<ConsoRow, _> =
            TableReader::from_reader(Cursor::new(text.into_bytes()), schema, "mem").unwrap();
        let row = reader.next().unwrap().unwrap();
        assert_eq!(row.name, "Aspirin");
        assert!(reader.next().is_none());
    }

    #[test]
    fn wrong_schema_kind_is_rejected() {
        let res: Result<TableReader<ConsoRow, _>, _> =
            TableReader::from_reader(Cursor::new(Vec::new()), TableSchema::default_for(TableKind::Rel), "mem");
        assert!(matches!(res, Err(RrfError::InvalidSchema { .. })));
    }

    #[test]
    fn missing_file() {
        let err = stream_table::<ConsoRow>("/nonexistent/MRCONSO.RRF", TableSchema::default_for(TableKind::Conso))
            .err()
            .unwrap();
        assert!(matches!(err, RrfError::FileNotFound(_)));
    }
}
