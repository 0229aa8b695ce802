//! TOML run configuration.
//!
//! Every section is optional. Relative paths are resolved against the
//! directory of the config file. Secrets never live here: the LLM bearer
//! token is read from the environment variable named by `llm.api_key_ref`.
//!
//! ```toml
//! [rrf]
//! dir = "data/2024AA/META"
//!
//! [rrf.schema.rel]
//! columns = { rela = 7 }
//!
//! [build]
//! snapshot = "out/graph.kgf"
//! drop_suppressed = false
//!
//! [retrieval]
//! seed_k = 5
//! max_hops = 2
//!
//! [llm]
//! base_url = "http://127.0.0.1:8000/v1"
//! model_name = "llama-3.1-8b-instruct"
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use umlskg::build::{RrfPaths, TableSchemas};
use umlskg::embed::{IndexSource, DEFAULT_DIMENSION, DEFAULT_SEED};
use umlskg::rag::{LlmEndpointConfig, RetrievalConfig};
use umlskg::rrf::{TableKind, TableSchema};
use umlskg::textualize::DEFAULT_SHARD_WORDS;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub rrf: RrfSection,
    pub build: BuildSection,
    pub textualize: TextualizeSection,
    pub export: ExportSection,
    pub embedding: EmbeddingSection,
    pub retrieval: RetrievalConfig,
    pub llm: LlmEndpointConfig,
    pub prompt: PromptSection,
    pub service: ServiceSection,
    pub eval: EvalSection,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrfSection {
    /// Directory holding MRCONSO.RRF, MRDEF.RRF, MRSTY.RRF and MRREL.RRF.
    pub dir: Option<PathBuf>,
    pub conso: Option<PathBuf>,
    pub def: Option<PathBuf>,
    pub sty: Option<PathBuf>,
    pub rel: Option<PathBuf>,
    pub schema: SchemaSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaSection {
    pub conso: Option<SchemaOverride>,
    pub def: Option<SchemaOverride>,
    pub sty: Option<SchemaOverride>,
    pub rel: Option<SchemaOverride>,
}

/// Column positions that differ from the 2024AA layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaOverride {
    pub columns: BTreeMap<String, usize>,
    pub min_columns: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub snapshot: PathBuf,
    pub drop_suppressed: bool,
}

impl Default for BuildSection {
    fn default() -> Self {
        BuildSection {
            snapshot: PathBuf::from("out/graph.kgf"),
            drop_suppressed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextualizeSection {
    pub out_dir: PathBuf,
    pub shard_words: u64,
    pub head_first: bool,
}

impl Default for TextualizeSection {
    fn default() -> Self {
        TextualizeSection {
            out_dir: PathBuf::from("out/corpus"),
            shard_words: DEFAULT_SHARD_WORDS,
            head_first: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    pub out_dir: PathBuf,
}

impl Default for ExportSection {
    fn default() -> Self {
        ExportSection {
            out_dir: PathBuf::from("out/neo4j"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    /// Saved embedding table; when absent the hashed model below is used.
    pub model: Option<PathBuf>,
    pub seed: u64,
    pub dimension: usize,
    pub source: IndexSource,
    pub index: PathBuf,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            model: None,
            seed: DEFAULT_SEED,
            dimension: DEFAULT_DIMENSION,
            source: IndexSource::ConceptBlocks,
            index: PathBuf::from("out/index.kvi"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    /// Template file; the bundled template is used when absent.
    pub template: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: String,
    pub port: u16,
}

impl Default for ServiceSection {
    fn default() -> Self {
        ServiceSection {
            bind: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub out_dir: PathBuf,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            out_dir: PathBuf::from("out/eval"),
        }
    }
}

impl AppConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text, path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.retrieval.validate().map_err(ConfigError::Invalid)?;
        self.llm.validate().map_err(ConfigError::Invalid)?;
        if self.textualize.shard_words == 0 {
            return Err(ConfigError::Invalid("textualize.shard_words must be positive".into()));
        }
        if self.embedding.dimension == 0 {
            return Err(ConfigError::Invalid("embedding.dimension must be positive".into()));
        }
        self.schemas()?;
        Ok(())
    }

    /// Resolves `p` against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn rrf_paths(&self) -> Result<RrfPaths, ConfigError> {
        let defaults = self.rrf.dir.as_ref().map(|d| RrfPaths::in_dir(self.resolve(d)));
        let pick = |explicit: &Option<PathBuf>, from_dir: Option<&PathBuf>, name: &str| {
            match (explicit, from_dir) {
                (Some(p), _) => Ok(self.resolve(p)),
                (None, Some(p)) => Ok(p.clone()),
                (None, None) => Err(ConfigError::Invalid(format!("no path for {name}: set rrf.dir or rrf.{name}"))),
            }
        };
        Ok(RrfPaths {
            conso: pick(&self.rrf.conso, defaults.as_ref().map(|d| &d.conso), "conso")?,
            def: pick(&self.rrf.def, defaults.as_ref().map(|d| &d.def), "def")?,
            sty: pick(&self.rrf.sty, defaults.as_ref().map(|d| &d.sty), "sty")?,
            rel: pick(&self.rrf.rel, defaults.as_ref().map(|d| &d.rel), "rel")?,
        })
    }

    pub fn schemas(&self) -> Result<TableSchemas, ConfigError> {
        let one = |kind: TableKind, o: &Option<SchemaOverride>| -> Result<TableSchema, ConfigError> {
            let base = TableSchema::default_for(kind);
            match o {
                None => Ok(base),
                Some(o) => base
                    .with_overrides(&o.columns, o.min_columns)
                    .map_err(|e| ConfigError::Invalid(e.to_string())),
            }
        };
        Ok(TableSchemas {
            conso: one(TableKind::Conso, &self.rrf.schema.conso)?,
            def: one(TableKind::Def, &self.rrf.schema.def)?,
            sty: one(TableKind::Sty, &self.rrf.schema.sty)?,
            rel: one(TableKind::Rel, &self.rrf.schema.rel)?,
        })
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.resolve(&self.build.snapshot)
    }

    pub fn index_path(&self) -> PathBuf {
        self.resolve(&self.embedding.index)
    }
}
