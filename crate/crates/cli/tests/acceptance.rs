//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion with
//! its runtime and pinned tolerance, and exits non-zero if any criterion
//! fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umlskg::build::{build_from_tables, BuildOptions, BuildStats, ConceptRecord, LabelProvenance, RelationEdge, RrfPaths, TableSchemas};
use umlskg::embed::{build_index, EmbeddingModel, EmbeddingVector, IndexSource, ScoredCui, VectorIndex};
use umlskg::eval::{compare_reports, load_dataset, run_eval, DatasetFormat, EvalMode, EvalReport, ItemResult};
use umlskg::rag::mock::{MockRules, MockServer};
use umlskg::rag::{
    expand_subgraph, AnswerLabel, AnswerTask, LlmClient, LlmEndpointConfig, PromptTemplate, RagPipeline,
    RetrievalConfig,
};
use umlskg::rrf::{stream_table, RelRow, TableKind, TableSchema};
use umlskg::store::{export_neo4j, load_snapshot, sanitize_label, save_snapshot, GraphSnapshot};
use umlskg::synth::{write_rel_lines, write_release, SynthConfig};
use umlskg::textualize::{render_triple, write_corpus, FragmentOrder};
use umlskg_cli::commands::{cmd_ask, cmd_build, cmd_index};
use umlskg_cli::config::AppConfig;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn tempdir() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

fn build(paths: &RrfPaths) -> Result<GraphSnapshot, String> {
    build_from_tables(paths, &TableSchemas::default(), &BuildOptions::default())
        .map(|o| o.snapshot)
        .map_err(|e| e.to_string())
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().expect("runtime")
}

fn golden_text() -> Outcome {
    let g = build(&RrfPaths::in_dir(fixtures().join("toy")))?;
    let edge = g
        .edges()
        .find(|e| e.label == "cause_of")
        .ok_or("toy graph has no cause_of edge")?
        .to_owned();
    let f = render_triple(&edge, &g, FragmentOrder::TailFirst).map_err(|e| e.to_string())?;
    let want = "Autoimmune diseases cause of Autoimmune opsoclonus myoclonus.";
    ensure!(f.text.as_bytes() == want.as_bytes(), "got {:?}", f.text);
    Ok("byte-equal".into())
}

fn pipeline_counts() -> Outcome {
    let dir = tempdir()?;
    let cfg = SynthConfig::default();
    let (paths, summary) = write_release(dir.path(), &cfg).map_err(|e| e.to_string())?;
    let s = build(&paths)?.stats().clone();
    let r = support::recount(dir.path());
    let pairs = [
        ("concepts_kept", s.concepts_kept, r.concepts_kept),
        ("edges_kept", s.edges_kept, r.edges_kept),
        ("self_relations_dropped", s.self_relations_dropped, r.self_relations_dropped),
        ("non_english_endpoint_dropped", s.non_english_endpoint_dropped, r.non_english_endpoint_dropped),
        ("fallback_labels_used", s.fallback_labels_used, r.fallback_labels_used),
        ("multi_definition_concepts", s.multi_definition_concepts, r.multi_definition_concepts),
    ];
    for (name, got, want) in pairs {
        ensure!(got == want, "{name}: build {got}, recount {want}");
        ensure!(want > 0, "{name} is zero, fixture does not exercise it");
    }
    Ok(format!(
        "{} concepts, {} relation lines, 6 counters exact",
        cfg.concepts, summary.rel_lines
    ))
}

fn retrieval_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let dim = 48;
    let n = 800;
    let rand_vec = |rng: &mut ChaCha8Rng| -> Vec<f32> { (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect() };
    let rows: Vec<(String, Vec<f32>)> = (0..n).map(|i| (format!("C{i:07}"), rand_vec(&mut rng))).collect();
    let index = VectorIndex::from_entries(
        dim,
        IndexSource::ConceptBlocks,
        "acceptance",
        rows.iter().map(|(c, v)| (c.clone(), EmbeddingVector(v.clone()))),
    )
    .map_err(|e| e.to_string())?;
    let queries = 80;
    for q in 0..queries {
        let v = rand_vec(&mut rng);
        let k = rng.random_range(1..=50);
        let got = index.top_k(&EmbeddingVector(v.clone()), k).map_err(|e| e.to_string())?;
        let want = support::exhaustive_top_k(&rows, &v, k);
        ensure!(got.len() == want.len(), "query {q}: {} results, want {}", got.len(), want.len());
        for (g, (id, score)) in got.iter().zip(&want) {
            ensure!(&g.cui == id, "query {q}: id {} vs {id}", g.cui);
            ensure!((g.score - score).abs() < 1e-9, "query {q}: score {} vs {score}", g.score);
        }
    }
    Ok(format!("{queries} queries over {n} entries, score tol 1e-9"))
}

fn expansion_oracle() -> Outcome {
    const LABELS: &[&str] = &["isa", "may_treat", "RO", "cause_of", "part_of"];
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let graphs = 25;
    for round in 0..graphs {
        let nodes = rng.random_range(2..=200);
        let cuis: Vec<String> = (0..nodes).map(|i| format!("C{i:04}")).collect();
        let mut triples = BTreeSet::new();
        for _ in 0..rng.random_range(0..nodes * 4) {
            let (a, b) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
            if a != b {
                let l = LABELS[rng.random_range(0..LABELS.len())];
                triples.insert((cuis[a].clone(), l.to_string(), cuis[b].clone()));
            }
        }
        let triples: Vec<support::Triple> = triples.into_iter().collect();
        let concepts = cuis
            .iter()
            .map(|c| ConceptRecord {
                cui: c.clone(),
                preferred_name: format!("Name {c}"),
                synonyms: vec![],
                semantic_types: vec![],
                definitions: String::new(),
                definition_count: 0,
            })
            .collect();
        let edges = triples
            .iter()
            .map(|(h, l, t)| RelationEdge {
                head_cui: h.clone(),
                tail_cui: t.clone(),
                label: l.clone(),
                label_provenance: LabelProvenance::SpecificRela,
                source: "SRC".into(),
            })
            .collect();
        let g = GraphSnapshot::from_parts(concepts, edges, BuildStats::default()).map_err(|e| e.to_string())?;
        let cfg = RetrievalConfig {
            max_hops: rng.random_range(1..=4),
            per_node_fanout_cap: rng.random_range(1..=8),
            max_edges: rng.random_range(1..=150),
            ..Default::default()
        };
        let seeds: Vec<String> = (0..rng.random_range(1..=4)).map(|_| cuis[rng.random_range(0..nodes)].clone()).collect();
        let scored: Vec<ScoredCui> = seeds.iter().map(|c| ScoredCui { cui: c.clone(), score: 1.0 }).collect();
        let ctx = expand_subgraph(&scored, &g, &cfg).map_err(|e| e.to_string())?;
        let got: Vec<support::BfsEdge> = ctx
            .edges
            .iter()
            .zip(&ctx.paths)
            .map(|(e, p)| support::BfsEdge {
                triple: (e.head_cui.clone(), e.label.clone(), e.tail_cui.clone()),
                hop: p.hop,
                seed: p.seed.clone(),
            })
            .collect();
        let want = support::capped_bfs(&triples, &seeds, cfg.max_hops, cfg.per_node_fanout_cap, cfg.max_edges);
        ensure!(got == want, "graph {round} ({nodes} nodes): expansion differs from oracle");
    }
    Ok(format!("{graphs} graphs, <=200 nodes, edges, order, hops and seeds equal"))
}

const QUESTION: &str = "Is ibudilast effective for multiple sclerosis?";

fn graph_flip() -> Outcome {
    let rt = runtime();
    let rules = MockRules::load(fixtures().join("ibudilast/mock-rules.txt"))?;
    let server = rt.block_on(MockServer::spawn_local(rules)).map_err(|e| e.to_string())?;
    let dir = tempdir()?;
    let mut cfg = AppConfig::default();
    cfg.rrf.dir = Some(fixtures().join("ibudilast"));
    cfg.build.snapshot = dir.path().join("graph.kgf");
    cfg.embedding.index = dir.path().join("index.kvi");
    cfg.llm.base_url = server.base_url();
    cmd_build(&cfg).map_err(|e| e.to_string())?;
    cmd_index(&cfg).map_err(|e| e.to_string())?;
    let graph = rt.block_on(cmd_ask(&cfg, QUESTION, false)).map_err(|e| e.to_string())?;
    let plain = rt.block_on(cmd_ask(&cfg, QUESTION, true)).map_err(|e| e.to_string())?;
    rt.block_on(server.shutdown());
    ensure!(graph.label == AnswerLabel::Yes, "graph answer {:?} ({:?})", graph.label, graph.raw_text);
    ensure!(plain.label == AnswerLabel::No, "no-graph answer {:?} ({:?})", plain.label, plain.raw_text);
    Ok(format!("no-graph {} -> graph {}", plain.label, graph.label))
}

fn synthetic_report(mode: EvalMode, n: usize, correct: usize) -> EvalReport {
    let per_item = (0..n)
        .map(|i| ItemResult {
            id: format!("q{i:03}"),
            predicted: if i < correct { AnswerLabel::Yes } else { AnswerLabel::No },
            gold: AnswerLabel::Yes,
            correct: i < correct,
            context_size: 0,
            error: None,
        })
        .collect();
    EvalReport::from_items("synthetic", mode, &RetrievalConfig::default(), &PromptTemplate::default(), "m", per_item)
}

fn eval_arithmetic() -> Outcome {
    let rt = runtime();
    let items = load_dataset(fixtures().join("eval/items-50.jsonl"), DatasetFormat::GenericJsonl).map_err(|e| e.to_string())?;
    ensure!(items.len() == 50, "{} items", items.len());
    let rules = MockRules::load(fixtures().join("eval/mock-rules.txt"))?;
    let server = rt.block_on(MockServer::spawn_local(rules)).map_err(|e| e.to_string())?;
    let endpoint = LlmEndpointConfig {
        base_url: server.base_url(),
        ..Default::default()
    };
    let pipeline = RagPipeline::new(
        None,
        RetrievalConfig::default(),
        PromptTemplate::default(),
        LlmClient::new(endpoint).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let report = rt
        .block_on(run_eval("scripted", &items, EvalMode::Baseline, &pipeline, AnswerTask::YesNoMaybe))
        .map_err(|e| e.to_string())?;
    rt.block_on(server.shutdown());
    // Hand count from the fixture's rule file: 36 of 50 answers match gold.
    ensure!(report.n_correct == 36 && report.accuracy == 72.0, "scripted accuracy {}", report.accuracy);

    let mut gains = Vec::new();
    for (n, a, b, want) in [(125, 64, 68, 6.25), (20, 15, 16, 6.67)] {
        let ra = synthetic_report(EvalMode::Baseline, n, a);
        let rb = synthetic_report(EvalMode::Graphrag, n, b);
        let d = compare_reports(&ra, &rb).map_err(|e| e.to_string())?;
        let rel = d.relative_delta.ok_or("no relative delta")?;
        ensure!((rel - want).abs() <= 0.01, "{} -> {}: relative {rel}, want {want}", d.accuracy_a, d.accuracy_b);
        gains.push(format!("{:.1}->{:.1}: {rel:.2}%", d.accuracy_a, d.accuracy_b));
    }
    Ok(format!("scripted 72.0% exact; {} (tol 0.01)", gains.join(", ")))
}

fn check_export(g: &GraphSnapshot, out: &Path) -> Result<(), String> {
    let m = export_neo4j(g, out).map_err(|e| e.to_string())?;
    for (file, header) in [(&m.nodes_file, "nodes.header.csv"), (&m.relationships_file, "relationships.header.csv")] {
        let body = fs::read(file).map_err(|e| e.to_string())?;
        let want = fs::read(fixtures().join("neo4j").join(header)).map_err(|e| e.to_string())?;
        ensure!(body.starts_with(&want), "{header} does not match");
    }
    let mut r = csv::Reader::from_path(&m.nodes_file).map_err(|e| e.to_string())?;
    let mut cuis = BTreeSet::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let c = g.concept(&rec[0]).ok_or_else(|| format!("unknown node {}", &rec[0]))?;
        ensure!(&rec[1] == c.preferred_name, "name of {}", &rec[0]);
        cuis.insert(rec[0].to_string());
    }
    let want: BTreeSet<String> = g.concepts().iter().map(|c| c.cui.clone()).collect();
    ensure!(cuis == want, "node sets differ");
    let mut r = csv::Reader::from_path(&m.relationships_file).map_err(|e| e.to_string())?;
    let mut got = BTreeSet::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        got.insert((rec[0].to_string(), rec[1].to_string(), rec[2].to_string()));
    }
    let mut want = BTreeSet::new();
    for e in g.edges() {
        want.insert((e.head_cui.to_string(), e.tail_cui.to_string(), sanitize_label(e.label).map_err(|e| e.to_string())?));
    }
    ensure!(got.len() == g.edge_count() && got == want, "relationship sets differ");
    Ok(())
}

fn export_fidelity() -> Outcome {
    let dir = tempdir()?;
    let toy = build(&RrfPaths::in_dir(fixtures().join("toy")))?;
    check_export(&toy, &dir.path().join("toy"))?;
    let (paths, _) = write_release(dir.path().join("rrf"), &SynthConfig::default()).map_err(|e| e.to_string())?;
    let big = build(&paths)?;
    check_export(&big, &dir.path().join("big"))?;
    Ok(format!("toy {} edges, synthetic {} edges reparsed", toy.edge_count(), big.edge_count()))
}

fn full_run(root: &Path) -> Result<(), String> {
    let (paths, _) = write_release(root.join("rrf"), &SynthConfig::default()).map_err(|e| e.to_string())?;
    let g = build(&paths)?;
    save_snapshot(&g, root.join("graph.kgf")).map_err(|e| e.to_string())?;
    write_corpus(&g, root.join("corpus"), 50_000, FragmentOrder::TailFirst).map_err(|e| e.to_string())?;
    let model = EmbeddingModel::hashed(1, 64).map_err(|e| e.to_string())?;
    let index = build_index(&g, &model, IndexSource::ConceptBlocks).map_err(|e| e.to_string())?;
    index.save(root.join("index.kvi")).map_err(|e| e.to_string())?;
    Ok(())
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn round_trips() -> Outcome {
    let dir = tempdir()?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    full_run(&a)?;
    full_run(&b)?;

    let g = load_snapshot(a.join("graph.kgf")).map_err(|e| e.to_string())?;
    let again = dir.path().join("again.kgf");
    save_snapshot(&g, &again).map_err(|e| e.to_string())?;
    ensure!(
        fs::read(&again).map_err(|e| e.to_string())? == fs::read(a.join("graph.kgf")).map_err(|e| e.to_string())?,
        "snapshot save/load/save changed bytes"
    );
    let original = build(&RrfPaths::in_dir(a.join("rrf")))?;
    ensure!(g.concepts() == original.concepts(), "concepts differ after load");
    ensure!(g.edges().eq(original.edges()), "edges differ after load");
    ensure!(g.stats() == original.stats(), "stats differ after load");

    let (ta, tb) = (tree(&a), tree(&b));
    ensure!(ta.len() == tb.len(), "file lists differ");
    for ((pa, ba), (pb, bb)) in ta.iter().zip(&tb) {
        ensure!(pa == pb, "file lists differ at {}", pa.display());
        ensure!(ba == bb, "{} differs between runs", pa.display());
    }
    Ok(format!("{} files byte-identical across two runs", ta.len()))
}

fn peak_rss_bytes() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn throughput() -> Outcome {
    const LINES: u64 = 1_000_000;
    let dir = tempdir()?;
    let path = dir.path().join("MRREL.RRF");
    write_rel_lines(&path, LINES, 50_000, 3).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let mut reader = stream_table::<RelRow>(&path, TableSchema::default_for(TableKind::Rel)).map_err(|e| e.to_string())?;
    let mut rows = 0u64;
    for row in reader.by_ref() {
        row.map_err(|e| e.to_string())?;
        rows += 1;
    }
    let elapsed = started.elapsed();
    let report = reader.into_report();
    ensure!(report.rows_read == LINES, "read {} lines", report.rows_read);
    ensure!(rows + report.rows_malformed == LINES, "decoded {rows} + malformed {}", report.rows_malformed);
    ensure!(elapsed < Duration::from_secs(60), "parse took {elapsed:?}");
    let peak = peak_rss_bytes().ok_or("VmHWM unavailable")?;
    ensure!(peak < 1 << 30, "peak RSS {peak} bytes");
    Ok(format!(
        "{LINES} lines parsed in {:.2} s, peak RSS {} MiB (limits 60 s, 1024 MiB)",
        elapsed.as_secs_f64(),
        peak >> 20
    ))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "golden textualization", limit: Some(Duration::from_secs(1)), run: golden_text },
        Criterion { name: "pipeline-count oracle", limit: Some(Duration::from_secs(30)), run: pipeline_counts },
        Criterion { name: "retrieval exactness", limit: Some(Duration::from_secs(30)), run: retrieval_exactness },
        Criterion { name: "subgraph-expansion oracle", limit: Some(Duration::from_secs(60)), run: expansion_oracle },
        Criterion { name: "graph context flips no to yes", limit: None, run: graph_flip },
        Criterion { name: "eval arithmetic", limit: None, run: eval_arithmetic },
        Criterion { name: "export fidelity", limit: None, run: export_fidelity },
        Criterion { name: "round-trips and determinism", limit: None, run: round_trips },
        Criterion { name: "throughput floor", limit: None, run: throughput },
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:?}, limit {limit:?}")),
            (r, _) => r,
        };
        let limit = c.limit.map(|l| format!(", limit {} s", l.as_secs())).unwrap_or_default();
        match result {
            Ok(detail) => println!("[PASS] {} ({:.3} s{limit}): {detail}", c.name, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {} ({:.3} s{limit}): {why}", c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
