//! Yes/no/maybe QA evaluation: dataset loaders, accuracy reports and
//! baseline-vs-graph comparisons.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::rag::{AnswerLabel, AnswerTask, PromptTemplate, RagError, RagPipeline, RetrievalConfig};
use crate::store::codec::sha256_hex;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{position}: {message}")]
    Parse {
        path: PathBuf,
        position: String,
        message: String,
    },
    #[error("item `{id}`: label `{label}` is not allowed for this dataset")]
    UnknownLabel { id: String, label: String },
    #[error("dataset has no items")]
    Empty,
    #[error("every request failed; endpoint unavailable: {0}")]
    EndpointUnavailable(String),
    #[error("reports are not comparable: {0}")]
    DatasetMismatch(String),
    #[error(transparent)]
    Rag(#[from] RagError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passages: Option<Vec<String>>,
    pub gold: AnswerLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// One `{"id", "question", "passages"?, "gold"}` object per line.
    GenericJsonl,
    /// Object keyed by PMID with `QUESTION`, `CONTEXTS` and `final_decision`.
    PubmedqaJson,
    /// `{"questions": [...]}`; only `type == "yesno"` entries are used.
    BioasqJson,
}

impl DatasetFormat {
    pub fn task(self) -> AnswerTask {
        match self {
            DatasetFormat::BioasqJson => AnswerTask::YesNo,
            DatasetFormat::GenericJsonl | DatasetFormat::PubmedqaJson => AnswerTask::YesNoMaybe,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "generic_jsonl" | "jsonl" => Ok(DatasetFormat::GenericJsonl),
            "pubmedqa_json" | "pubmedqa" => Ok(DatasetFormat::PubmedqaJson),
            "bioasq_json" | "bioasq" => Ok(DatasetFormat::BioasqJson),
            other => Err(format!("unknown dataset format `{other}`")),
        }
    }
}

fn parse_err(path: &Path, e: &serde_json::Error, line_offset: Option<usize>) -> EvalError {
    let position = match line_offset {
        Some(line) => format!("{line}"),
        None => format!("{}:{}", e.line(), e.column()),
    };
    EvalError::Parse {
        path: path.to_path_buf(),
        position,
        message: e.to_string(),
    }
}

fn gold_label(id: &str, raw: &str, task: AnswerTask) -> Result<AnswerLabel, EvalError> {
    let unknown = || EvalError::UnknownLabel {
        id: id.to_string(),
        label: raw.to_string(),
    };
    let label: AnswerLabel = raw.parse().map_err(|_| unknown())?;
    if task.allows(label) {
        Ok(label)
    } else {
        Err(unknown())
    }
}

fn text_list(v: Option<&Value>) -> Option<Vec<String>> {
    let arr = v?.as_array()?;
    Some(arr.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
}

/// Loads items in file order. Gold labels outside the format's label set are
/// rejected.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Vec<QAItem>, EvalError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let task = format.task();
    let shape = |position: String, message: &str| EvalError::Parse {
        path: path.to_path_buf(),
        position,
        message: message.to_string(),
    };
    let mut items = Vec::new();
    match format {
        DatasetFormat::GenericJsonl => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Record {
                id: String,
                question: String,
                #[serde(default)]
                passages: Option<Vec<String>>,
                gold: String,
            }
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let r: Record = serde_json::from_str(line).map_err(|e| parse_err(path, &e, Some(i + 1)))?;
                let gold = gold_label(&r.id, &r.gold, task)?;
                items.push(QAItem {
                    id: r.id,
                    question: r.question,
                    passages: r.passages,
                    gold,
                });
            }
        }
        DatasetFormat::PubmedqaJson => {
            let root: Value = serde_json::from_str(&text).map_err(|e| parse_err(path, &e, None))?;
            let obj = root.as_object().ok_or_else(|| shape("1:1".into(), "expected an object keyed by PMID"))?;
            for (pmid, rec) in obj {
                let question = rec
                    .get("QUESTION")
                    .and_then(Value::as_str)
                    .ok_or_else(|| shape(pmid.clone(), "missing QUESTION"))?;
                let decision = rec
                    .get("final_decision")
                    .and_then(Value::as_str)
                    .ok_or_else(|| shape(pmid.clone(), "missing final_decision"))?;
                items.push(QAItem {
                    id: pmid.clone(),
                    question: question.to_string(),
                    passages: text_list(rec.get("CONTEXTS")),
                    gold: gold_label(pmid, decision, task)?,
                });
            }
        }
        DatasetFormat::BioasqJson => {
            let root: Value = serde_json::from_str(&text).map_err(|e| parse_err(path, &e, None))?;
            let questions = root
                .get("questions")
                .and_then(Value::as_array)
                .ok_or_else(|| shape("1:1".into(), "expected {\"questions\": [...]}"))?;
            for (i, q) in questions.iter().enumerate() {
                if q.get("type").and_then(Value::as_str) != Some("yesno") {
                    continue;
                }
                let at = format!("questions[{i}]");
                let id = q
                    .get("id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| shape(at.clone(), "missing id"))?;
                let body = q
                    .get("body")
                    .and_then(Value::as_str)
                    .ok_or_else(|| shape(at.clone(), "missing body"))?;
                let answer = match q.get("exact_answer") {
                    Some(Value::String(s)) => s.as_str(),
                    Some(Value::Array(a)) if a.len() == 1 && a[0].is_string() => a[0].as_str().unwrap_or_default(),
                    _ => return Err(shape(at, "missing exact_answer")),
                };
                let snippets = q.get("snippets").and_then(Value::as_array).map(|s| {
                    s.iter()
                        .filter_map(|x| x.get("text").and_then(Value::as_str).map(str::to_string))
                        .collect::<Vec<_>>()
                });
                items.push(QAItem {
                    id: id.to_string(),
                    question: body.to_string(),
                    passages: snippets,
                    gold: gold_label(id, answer, task)?,
                });
            }
        }
    }
    Ok(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Baseline,
    Graphrag,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Baseline => "baseline",
            EvalMode::Graphrag => "graphrag",
        })
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(EvalMode::Baseline),
            "graphrag" => Ok(EvalMode::Graphrag),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemResult {
    pub id: String,
    pub predicted: AnswerLabel,
    pub gold: AnswerLabel,
    pub correct: bool,
    /// Fact lines that made it into the prompt.
    pub context_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_name: String,
    pub mode: EvalMode,
    pub n_items: usize,
    pub n_correct: usize,
    /// Percentage.
    pub accuracy: f64,
    pub config_fingerprint: String,
    pub template_hash: String,
    pub model_name: String,
    pub include_question_passages: bool,
    pub per_item: Vec<ItemResult>,
}

pub fn accuracy(n_correct: usize, n_items: usize) -> f64 {
    if n_items == 0 {
        0.0
    } else {
        100.0 * n_correct as f64 / n_items as f64
    }
}

/// Hash of everything that shapes a prompt and its answer.
pub fn config_fingerprint(retrieval: &RetrievalConfig, template: &PromptTemplate, model_name: &str) -> String {
    let retrieval = serde_json::to_string(retrieval).expect("retrieval config serializes");
    sha256_hex(format!("{retrieval}\n{}\n{model_name}", template.hash()).as_bytes())
}

impl EvalReport {
    /// Builds a report from per-item results, deriving the counts.
    pub fn from_items(
        dataset_name: impl Into<String>,
        mode: EvalMode,
        retrieval: &RetrievalConfig,
        template: &PromptTemplate,
        model_name: &str,
        per_item: Vec<ItemResult>,
    ) -> Self {
        let n_correct = per_item.iter().filter(|r| r.correct).count();
        EvalReport {
            dataset_name: dataset_name.into(),
            mode,
            n_items: per_item.len(),
            n_correct,
            accuracy: accuracy(n_correct, per_item.len()),
            config_fingerprint: config_fingerprint(retrieval, template, model_name),
            template_hash: template.hash(),
            model_name: model_name.to_string(),
            include_question_passages: retrieval.include_question_passages,
            per_item,
        }
    }

    /// Counts and accuracy agree with `per_item`.
    pub fn is_consistent(&self) -> bool {
        let n = self.per_item.iter().filter(|r| r.correct).count();
        self.n_items == self.per_item.len()
            && self.n_correct == n
            && self.accuracy == accuracy(n, self.n_items)
            && self.per_item.iter().all(|r| r.correct == (r.predicted == r.gold))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_table(&self) -> String {
        let errors = self.per_item.iter().filter(|r| r.error.is_some()).count();
        let unparseable = self.per_item.iter().filter(|r| r.predicted == AnswerLabel::Unparseable).count();
        let rows = [
            ("dataset", self.dataset_name.clone()),
            ("mode", self.mode.to_string()),
            ("model", self.model_name.clone()),
            ("items", self.n_items.to_string()),
            ("correct", self.n_correct.to_string()),
            ("accuracy", format!("{:.2}%", self.accuracy)),
            ("unparseable", unparseable.to_string()),
            ("errors", errors.to_string()),
            ("question passages", self.include_question_passages.to_string()),
            ("config fingerprint", self.config_fingerprint.clone()),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}

/// Answers every item and scores it. Unparseable replies and per-item errors
/// count as wrong; the run fails only if every item errored.
pub async fn run_eval(
    dataset_name: &str,
    items: &[QAItem],
    mode: EvalMode,
    pipeline: &RagPipeline,
    task: AnswerTask,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::Empty);
    }
    let pipeline = match mode {
        EvalMode::Baseline => pipeline.without_graph(),
        EvalMode::Graphrag => pipeline.clone(),
    };
    let concurrency = pipeline.client().endpoint().max_concurrent_requests.max(1);
    let pipeline_ref = &pipeline;
    let results: Vec<(ItemResult, Option<RagError>)> = stream::iter(items)
        .map(|item| async move {
            let passages = item.passages.as_deref().unwrap_or(&[]);
            match pipeline_ref.answer(&item.question, passages, task).await {
                Ok(ans) => (
                    ItemResult {
                        id: item.id.clone(),
                        predicted: ans.label,
                        gold: item.gold,
                        correct: ans.label == item.gold,
                        context_size: ans.prompt.retained.len(),
                        error: None,
                    },
                    None,
                ),
                Err(e) => {
                    tracing::warn!(item = %item.id, error = %e, "item failed");
                    (
                        ItemResult {
                            id: item.id.clone(),
                            predicted: AnswerLabel::Unparseable,
                            gold: item.gold,
                            correct: false,
                            context_size: 0,
                            error: Some(e.to_string()),
                        },
                        Some(e),
                    )
                }
            }
        })
        .buffered(concurrency)
        .collect()
        .await;

    if results.iter().all(|(_, e)| e.is_some()) {
        let first = results.into_iter().find_map(|(_, e)| e).expect("non-empty");
        return Err(match first {
            RagError::Llm(e) => EvalError::EndpointUnavailable(e.to_string()),
            other => EvalError::Rag(other),
        });
    }
    Ok(EvalReport::from_items(
        dataset_name,
        mode,
        pipeline.retrieval(),
        pipeline.template(),
        &pipeline.client().endpoint().model_name,
        results.into_iter().map(|(r, _)| r).collect(),
    ))
}

/// `100 * (b - a) / a`.
pub fn relative_gain(a: f64, b: f64) -> f64 {
    100.0 * (b - a) / a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub dataset_name: String,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    /// Percentage points.
    pub absolute_delta: f64,
    /// Percent of `accuracy_a`; `None` when `accuracy_a` is zero.
    pub relative_delta: Option<f64>,
    /// Wrong in `a`, right in `b`.
    pub gained: Vec<String>,
    /// Right in `a`, wrong in `b`.
    pub lost: Vec<String>,
}

impl ReportDelta {
    pub fn to_table(&self) -> String {
        let rel = self.relative_delta.map_or("n/a".to_string(), |r| format!("{r:+.2}%"));
        format!(
            "dataset         {}\naccuracy a      {:.2}%\naccuracy b      {:.2}%\nabsolute delta  {:+.2}\nrelative delta  {rel}\ngained          {}\nlost            {}\n",
            self.dataset_name,
            self.accuracy_a,
            self.accuracy_b,
            self.absolute_delta,
            self.gained.len(),
            self.lost.len()
        )
    }
}

pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<ReportDelta, EvalError> {
    if a.dataset_name != b.dataset_name {
        return Err(EvalError::DatasetMismatch(format!(
            "dataset `{}` vs `{}`",
            a.dataset_name, b.dataset_name
        )));
    }
    if a.n_items != b.n_items {
        return Err(EvalError::DatasetMismatch(format!("{} items vs {}", a.n_items, b.n_items)));
    }
    let by_id: std::collections::HashMap<&str, bool> = a.per_item.iter().map(|r| (r.id.as_str(), r.correct)).collect();
    let mut gained = Vec::new();
    let mut lost = Vec::new();
    for r in &b.per_item {
        let Some(&was) = by_id.get(r.id.as_str()) else {
            return Err(EvalError::DatasetMismatch(format!("item `{}` missing from first report", r.id)));
        };
        match (was, r.correct) {
            (false, true) => gained.push(r.id.clone()),
            (true, false) => lost.push(r.id.clone()),
            _ => {}
        }
    }
    Ok(ReportDelta {
        dataset_name: a.dataset_name.clone(),
        accuracy_a: a.accuracy,
        accuracy_b: b.accuracy,
        absolute_delta: b.accuracy - a.accuracy,
        relative_delta: (a.accuracy != 0.0).then(|| relative_gain(a.accuracy, b.accuracy)),
        gained,
        lost,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub stddev: f64,
}

pub fn summarize_runs(reports: &[EvalReport]) -> RunSummary {
    let accuracies: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let n = accuracies.len();
    let mean = if n == 0 { 0.0 } else { accuracies.iter().sum::<f64>() / n as f64 };
    let stddev = if n < 2 {
        0.0
    } else {
        (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    RunSummary { runs: n, accuracies, mean, stddev }
}

/// Runs the same evaluation `runs` times and summarizes the accuracies.
pub async fn run_repeated(
    dataset_name: &str,
    items: &[QAItem],
    mode: EvalMode,
    pipeline: &RagPipeline,
    task: AnswerTask,
    runs: usize,
) -> Result<(Vec<EvalReport>, RunSummary), EvalError> {
    let mut reports = Vec::with_capacity(runs);
    for _ in 0..runs {
        reports.push(run_eval(dataset_name, items, mode, pipeline, task).await?);
    }
    let summary = summarize_runs(&reports);
    Ok((reports, summary))
}
