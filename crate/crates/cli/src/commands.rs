//! Subcommand bodies. Each one composes library operations and returns its
//! result; printing is left to the caller.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use umlskg::build::{build_from_tables, BuildOptions, BuildStats};
use umlskg::embed::{build_index, EmbeddingModel, VectorIndex};
use umlskg::eval::{
    compare_reports, load_dataset, run_eval, run_repeated, DatasetFormat, EvalMode, EvalReport, ReportDelta,
    RunSummary,
};
use umlskg::rag::{AnswerTask, GraphResources, GroundedAnswer, LlmClient, PromptTemplate, RagPipeline};
use umlskg::rrf::IngestReport;
use umlskg::store::{export_neo4j, load_snapshot, save_snapshot, ExportManifest, GraphSnapshot, SnapshotReceipt};
use umlskg::textualize::{write_corpus, CorpusStats, FragmentOrder};

use crate::config::AppConfig;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct BuildSummary {
    pub receipt: SnapshotReceipt,
    pub stats: BuildStats,
    pub ingest: Vec<(&'static str, IngestReport)>,
}

impl BuildSummary {
    pub fn render(&self) -> String {
        let mut out = self.stats.to_table();
        out.push_str("ingest\n");
        for (name, r) in &self.ingest {
            let _ = writeln!(
                out,
                "  {name:<8} read {:>10}  decoded {:>10}  malformed {:>6}",
                r.rows_read, r.rows_decoded, r.rows_malformed
            );
            for (line, reason) in r.first_malformed_lines.iter().take(5) {
                let _ = writeln!(out, "           line {line}: {reason}");
            }
        }
        let _ = writeln!(
            out,
            "snapshot {} ({} bytes, sha256 {})",
            self.receipt.path.display(),
            self.receipt.bytes,
            self.receipt.sha256
        );
        out
    }
}

pub fn cmd_build(cfg: &AppConfig) -> Result<BuildSummary, CliError> {
    let paths = cfg.rrf_paths()?;
    let schemas = cfg.schemas()?;
    let opts = BuildOptions {
        drop_suppressed: cfg.build.drop_suppressed,
    };
    let out = build_from_tables(&paths, &schemas, &opts).map_err(CliError::data)?;
    let target = cfg.snapshot_path();
    ensure_parent(&target)?;
    let receipt = save_snapshot(&out.snapshot, &target)
        .with_context(|| format!("writing {}", target.display()))
        .map_err(CliError::Data)?;
    Ok(BuildSummary {
        receipt,
        stats: out.snapshot.stats().clone(),
        ingest: vec![
            ("MRCONSO", out.conso_report),
            ("MRDEF", out.def_report),
            ("MRSTY", out.sty_report),
            ("MRREL", out.rel_report),
        ],
    })
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(CliError::Data)?;
    }
    Ok(())
}

pub fn load_graph_snapshot(cfg: &AppConfig) -> Result<GraphSnapshot, CliError> {
    let path = cfg.snapshot_path();
    load_snapshot(&path)
        .with_context(|| format!("loading snapshot {}", path.display()))
        .map_err(CliError::Data)
}

pub fn fragment_order(cfg: &AppConfig) -> FragmentOrder {
    if cfg.textualize.head_first {
        FragmentOrder::HeadFirst
    } else {
        FragmentOrder::TailFirst
    }
}

pub fn cmd_textualize(cfg: &AppConfig) -> Result<CorpusStats, CliError> {
    let snapshot = load_graph_snapshot(cfg)?;
    let out_dir = cfg.resolve(&cfg.textualize.out_dir);
    write_corpus(&snapshot, &out_dir, cfg.textualize.shard_words, fragment_order(cfg))
        .with_context(|| format!("writing corpus to {}", out_dir.display()))
        .map_err(CliError::Data)
}

pub fn cmd_export_neo4j(cfg: &AppConfig) -> Result<ExportManifest, CliError> {
    let snapshot = load_graph_snapshot(cfg)?;
    let out_dir = cfg.resolve(&cfg.export.out_dir);
    export_neo4j(&snapshot, &out_dir)
        .with_context(|| format!("exporting to {}", out_dir.display()))
        .map_err(CliError::Data)
}

pub fn load_model(cfg: &AppConfig) -> Result<EmbeddingModel, CliError> {
    match &cfg.embedding.model {
        Some(p) => {
            let path = cfg.resolve(p);
            EmbeddingModel::load(&path)
                .with_context(|| format!("loading embedding model {}", path.display()))
                .map_err(CliError::Data)
        }
        None => EmbeddingModel::hashed(cfg.embedding.seed, cfg.embedding.dimension).map_err(|e| CliError::Usage(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSummary {
    pub path: PathBuf,
    pub sha256: String,
    pub entries: usize,
    pub dimension: usize,
    pub model_fingerprint: String,
}

impl IndexSummary {
    pub fn render(&self) -> String {
        format!(
            "index {}\n  entries   {}\n  dimension {}\n  model     {}\n  sha256    {}\n",
            self.path.display(),
            self.entries,
            self.dimension,
            self.model_fingerprint,
            self.sha256
        )
    }
}

pub fn cmd_index(cfg: &AppConfig) -> Result<IndexSummary, CliError> {
    let snapshot = load_graph_snapshot(cfg)?;
    let model = load_model(cfg)?;
    let index = build_index(&snapshot, &model, cfg.embedding.source).map_err(CliError::data)?;
    let path = cfg.index_path();
    ensure_parent(&path)?;
    let sha256 = index
        .save(&path)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Data)?;
    Ok(IndexSummary {
        path,
        sha256,
        entries: index.len(),
        dimension: index.dimension(),
        model_fingerprint: index.model_fingerprint().to_string(),
    })
}

pub fn load_template(cfg: &AppConfig) -> Result<PromptTemplate, CliError> {
    match &cfg.prompt.template {
        Some(p) => PromptTemplate::load(cfg.resolve(p)).map_err(|e| CliError::Data(anyhow::anyhow!(e))),
        None => Ok(PromptTemplate::default()),
    }
}

pub fn load_graph(cfg: &AppConfig) -> Result<GraphResources, CliError> {
    let snapshot = load_graph_snapshot(cfg)?;
    let path = cfg.index_path();
    let index = VectorIndex::load(&path)
        .with_context(|| format!("loading index {}", path.display()))
        .map_err(CliError::Data)?;
    let model = load_model(cfg)?;
    Ok(GraphResources::new(snapshot, index, model)?)
}

/// Pipeline for `ask`, `eval` and `serve`. Graph files are only read when
/// `with_graph` is set.
pub fn load_pipeline(cfg: &AppConfig, with_graph: bool) -> Result<RagPipeline, CliError> {
    let graph = if with_graph { Some(load_graph(cfg)?) } else { None };
    let client = LlmClient::new(cfg.llm.clone())?;
    Ok(RagPipeline::new(graph, cfg.retrieval.clone(), load_template(cfg)?, client)?)
}

pub async fn cmd_ask(cfg: &AppConfig, question: &str, no_graph: bool) -> Result<GroundedAnswer, CliError> {
    if question.trim().is_empty() {
        return Err(CliError::Usage("question is empty".into()));
    }
    let pipeline = load_pipeline(cfg, !no_graph)?;
    Ok(pipeline.answer(question, &[], AnswerTask::YesNoMaybe).await?)
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    pub format: DatasetFormat,
    pub modes: Vec<EvalMode>,
    pub runs: usize,
    pub name: Option<String>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub reports: Vec<EvalReport>,
    pub summaries: Vec<(EvalMode, RunSummary)>,
    pub delta: Option<ReportDelta>,
    pub files: Vec<PathBuf>,
}

impl EvalOutcome {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&r.to_table());
            out.push('\n');
        }
        for (mode, s) in &self.summaries {
            let _ = writeln!(out, "{mode}: {} runs, mean {:.2}%, stddev {:.2}", s.runs, s.mean, s.stddev);
        }
        if let Some(d) = &self.delta {
            out.push_str(&d.to_table());
        }
        for f in &self.files {
            let _ = writeln!(out, "wrote {}", f.display());
        }
        out
    }
}

fn write_file(path: PathBuf, body: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, body)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Data)?;
    files.push(path);
    Ok(())
}

pub async fn cmd_eval(cfg: &AppConfig, args: &EvalArgs) -> Result<EvalOutcome, CliError> {
    if args.modes.is_empty() {
        return Err(CliError::Usage("no evaluation mode given".into()));
    }
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let items = load_dataset(&args.dataset, args.format)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let needs_graph = args.modes.contains(&EvalMode::Graphrag);
    let pipeline = load_pipeline(cfg, needs_graph)?;
    let task = args.format.task();
    let out_dir = args.out_dir.clone().unwrap_or_else(|| cfg.resolve(&cfg.eval.out_dir));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(CliError::Data)?;

    let mut reports = Vec::new();
    let mut summaries = Vec::new();
    let mut files = Vec::new();
    for &mode in &args.modes {
        if args.runs == 1 {
            let report = run_eval(&name, &items, mode, &pipeline, task).await?;
            write_file(out_dir.join(format!("{name}-{mode}.json")), &report.to_json(), &mut files)?;
            write_file(out_dir.join(format!("{name}-{mode}.txt")), &report.to_table(), &mut files)?;
            reports.push(report);
        } else {
            let (runs, summary) = run_repeated(&name, &items, mode, &pipeline, task, args.runs).await?;
            for (i, r) in runs.iter().enumerate() {
                write_file(out_dir.join(format!("{name}-{mode}-run{}.json", i + 1)), &r.to_json(), &mut files)?;
            }
            let body = serde_json::to_string_pretty(&summary).expect("summary serializes");
            write_file(out_dir.join(format!("{name}-{mode}-summary.json")), &body, &mut files)?;
            reports.push(runs.into_iter().next().expect("at least one run"));
            summaries.push((mode, summary));
        }
    }

    let delta = match (
        reports.iter().find(|r| r.mode == EvalMode::Baseline),
        reports.iter().find(|r| r.mode == EvalMode::Graphrag),
    ) {
        (Some(a), Some(b)) => {
            let d = compare_reports(a, b)?;
            let body = serde_json::to_string_pretty(&d).expect("delta serializes");
            write_file(out_dir.join(format!("{name}-compare.json")), &body, &mut files)?;
            Some(d)
        }
        _ => None,
    };
    Ok(EvalOutcome {
        reports,
        summaries,
        delta,
        files,
    })
}
