use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;
use umlskg::eval::{DatasetFormat, EvalMode};
use umlskg::rag::mock::{MockRules, MockServer};
use umlskg::synth::{write_release, SynthConfig};
use umlskg_cli::commands::{self, EvalArgs};
use umlskg_cli::config::AppConfig;
use umlskg_cli::error::CliError;
use umlskg_cli::format::render_answer;
use umlskg_cli::service;

#[derive(Debug, Parser)]
#[command(name = "umlskg", version, about = "Build a UMLS knowledge graph and answer questions over it")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = LogFormat::Text)]
    log_format: LogFormat,
    /// Increase log verbosity (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Baseline,
    Graphrag,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the RRF tables and write a graph snapshot.
    Build {
        #[arg(long)]
        rrf_dir: Option<PathBuf>,
        /// Snapshot output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        drop_suppressed: bool,
    },
    /// Write the concept-block text corpus.
    Textualize {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        shard_words: Option<u64>,
        #[arg(long)]
        head_first: bool,
    },
    /// Write Neo4j bulk-import CSV files.
    ExportNeo4j {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed every concept and write the vector index.
    Index {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer one question.
    Ask {
        /// Ask without graph context.
        #[arg(long)]
        no_graph: bool,
        /// Print the full answer record as JSON.
        #[arg(long)]
        json: bool,
        question: String,
    },
    /// Score a QA dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "generic_jsonl")]
        format: DatasetFormat,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Name used in reports; defaults to the dataset file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run a rule-driven stand-in for an OpenAI-compatible endpoint.
    MockLlm {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 8000)]
        port: u16,
    },
    /// Write a synthetic RRF release.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000)]
        concepts: usize,
        #[arg(long, default_value_t = 10_000)]
        relations: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn init_logging(format: LogFormat, verbose: u8) {
    let default = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let builder = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr);
    match format {
        LogFormat::Text => builder.init(),
        LogFormat::Json => builder.json().init(),
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<AppConfig, CliError> {
    match path {
        Some(p) => Ok(AppConfig::load(p)?),
        None => Ok(AppConfig::default()),
    }
}

async fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(cli.config.as_ref())?;
    match cli.command {
        Command::Build {
            rrf_dir,
            out,
            drop_suppressed,
        } => {
            if let Some(d) = rrf_dir {
                cfg.rrf.dir = Some(d);
            }
            if let Some(o) = out {
                cfg.build.snapshot = o;
            }
            cfg.build.drop_suppressed |= drop_suppressed;
            print!("{}", commands::cmd_build(&cfg)?.render());
        }
        Command::Textualize {
            out,
            shard_words,
            head_first,
        } => {
            if let Some(o) = out {
                cfg.textualize.out_dir = o;
            }
            if let Some(w) = shard_words {
                cfg.textualize.shard_words = w;
            }
            cfg.textualize.head_first |= head_first;
            cfg.validate()?;
            let stats = commands::cmd_textualize(&cfg)?;
            println!(
                "corpus: {} blocks, {} fragments, {} words, {} bytes",
                stats.blocks_written, stats.fragments_written, stats.word_count, stats.bytes_written
            );
            for s in &stats.shards {
                println!("  {}", s.display());
            }
        }
        Command::ExportNeo4j { out } => {
            if let Some(o) = out {
                cfg.export.out_dir = o;
            }
            let m = commands::cmd_export_neo4j(&cfg)?;
            println!("nodes         {} ({} rows, sha256 {})", m.nodes_file.display(), m.node_count, m.nodes_sha256);
            println!(
                "relationships {} ({} rows, sha256 {})",
                m.relationships_file.display(),
                m.relationship_count,
                m.relationships_sha256
            );
        }
        Command::Index { out } => {
            if let Some(o) = out {
                cfg.embedding.index = o;
            }
            print!("{}", commands::cmd_index(&cfg)?.render());
        }
        Command::Ask {
            no_graph,
            json,
            question,
        } => {
            let answer = commands::cmd_ask(&cfg, &question, no_graph).await?;
            if json {
                println!("{}", serde_json::to_string_pretty(&answer).expect("answer serializes"));
            } else {
                print!("{}", render_answer(&answer));
            }
        }
        Command::Eval {
            dataset,
            format,
            mode,
            runs,
            name,
            out,
        } => {
            let modes = match mode {
                ModeArg::Baseline => vec![EvalMode::Baseline],
                ModeArg::Graphrag => vec![EvalMode::Graphrag],
                ModeArg::Both => vec![EvalMode::Baseline, EvalMode::Graphrag],
            };
            let args = EvalArgs {
                dataset,
                format,
                modes,
                runs,
                name,
                out_dir: out,
            };
            print!("{}", commands::cmd_eval(&cfg, &args).await?.render());
        }
        Command::Serve { bind, port } => {
            let bind = bind.unwrap_or_else(|| cfg.service.bind.clone());
            let port = port.unwrap_or(cfg.service.port);
            let pipeline = commands::load_pipeline(&cfg, true)?;
            let listener = tokio::net::TcpListener::bind((bind.as_str(), port))
                .await
                .with_context(|| format!("binding {bind}:{port}"))
                .map_err(|e| CliError::Usage(format!("{e:#}")))?;
            service::serve(listener, pipeline, service::termination_signal())
                .await
                .map_err(CliError::data)?;
        }
        Command::MockLlm { rules, bind, port } => {
            let rules = MockRules::load(&rules).map_err(CliError::Usage)?;
            let addr: SocketAddr = format!("{bind}:{port}")
                .parse()
                .map_err(|e| CliError::Usage(format!("bad address {bind}:{port}: {e}")))?;
            let server = MockServer::spawn(rules, addr).await.map_err(CliError::data)?;
            println!("mock LLM listening at {}", server.base_url());
            service::termination_signal().await;
            let served = server.request_count();
            server.shutdown().await;
            tracing::info!(requests = served, "mock LLM stopped");
        }
        Command::Synth {
            out,
            concepts,
            relations,
            seed,
        } => {
            let cfg = SynthConfig {
                seed,
                concepts,
                relations,
                ..SynthConfig::default()
            };
            let (paths, summary) = write_release(&out, &cfg)
                .with_context(|| format!("writing synthetic release to {}", out.display()))
                .map_err(CliError::Data)?;
            println!("{} {} lines", paths.conso.display(), summary.conso_lines);
            println!("{} {} lines", paths.def.display(), summary.def_lines);
            println!("{} {} lines", paths.sty.display(), summary.sty_lines);
            println!("{} {} lines", paths.rel.display(), summary.rel_lines);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.log_format, cli.verbose);
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(2);
        }
    };
    match rt.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
