//! TOML configuration. Every section is optional; missing keys take defaults.
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qaret::encoder::TrainConfig;
use qaret::eval::DEFAULT_MAP_DEPTH;
use qaret::pipeline::{Method, PipelineConfig};
use qaret::sparse::{Bm25Params, LmParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Source of every random choice: model init and pair shuffling.
    pub seed: u64,
    pub paths: Paths,
    pub preprocessing: Preprocessing,
    pub condenser: Condenser,
    pub retrieval: Retrieval,
    pub bm25: Bm25Params,
    pub lm: LmParams,
    pub train: Train,
    pub eval: Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Where artifacts go unless overridden below.
    pub work_dir: PathBuf,
    pub index: Option<PathBuf>,
    pub model: Option<PathBuf>,
    /// Directory for the dense and two-stage embedding stores.
    pub stores: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            train: "train.jsonl".into(),
            dev: None,
            test: None,
            work_dir: "work".into(),
            index: None,
            model: None,
            stores: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocessing {
    /// Number of lowest-IDF training terms dropped as stop-words.
    pub stopwords: usize,
    pub tokenizer: String,
    /// Remove stop-words before the encoder as well, not only for the
    /// sparse scorers.
    pub dense_stopwords: bool,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            stopwords: 100,
            tokenizer: "whitespace".into(),
            dense_stopwords: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Condenser {
    pub k: usize,
    /// Re-condense every passage against each incoming question.
    pub per_query: bool,
}

impl Default for Condenser {
    fn default() -> Self {
        Self {
            k: 5,
            per_query: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Retrieval {
    pub method: Method,
    pub top_k: usize,
    /// Encoder input length, for training and for encoding.
    pub max_tokens: usize,
    pub max_unknown_rate: f64,
}

impl Default for Retrieval {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            method: p.method,
            top_k: p.top_k,
            max_tokens: p.max_tokens,
            max_unknown_rate: p.max_unknown_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Train {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dim: usize,
    pub scale: f64,
}

impl Default for Train {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            dim: t.dim,
            scale: t.scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Eval {
    pub split: Split,
    pub ks: Vec<usize>,
    pub map_depth: usize,
}

impl Default for Eval {
    fn default() -> Self {
        Self {
            split: Split::Test,
            ks: vec![1, 5, 10, 20],
            map_depth: DEFAULT_MAP_DEPTH,
        }
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: AppConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.preprocessing.tokenizer != "whitespace" {
            return Err(CliError::Usage(format!(
                "unknown tokenizer {:?}; only \"whitespace\" is available",
                self.preprocessing.tokenizer
            )));
        }
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(CliError::Usage(
                "eval.ks must be a non-empty list of values >= 1".into(),
            ));
        }
        if self.eval.map_depth == 0 {
            return Err(CliError::Usage("eval.map_depth must be >= 1".into()));
        }
        self.pipeline_config().validate()?;
        self.train_config().validate()?;
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            condenser_k: self.condenser.k,
            method: self.retrieval.method,
            top_k: self.retrieval.top_k,
            bm25: self.bm25,
            lm: self.lm,
            max_tokens: self.retrieval.max_tokens,
            max_unknown_rate: self.retrieval.max_unknown_rate,
            condense_per_query: self.condenser.per_query,
        }
    }

    /// Both training seeds derive from the single config seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            max_tokens: self.retrieval.max_tokens,
            dim: self.train.dim,
            scale: self.train.scale,
            init_seed: self.seed,
            shuffle_seed: self.seed.wrapping_add(1),
        }
    }
}

/// Artifact locations after resolving relative paths.
#[derive(Debug, Clone)]
pub struct Layout {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub stopwords: PathBuf,
    pub condensed: PathBuf,
    pub index: PathBuf,
    pub model: PathBuf,
    pub loss: PathBuf,
    pub stores: PathBuf,
    pub reports: PathBuf,
}

impl Layout {
    pub fn new(paths: &Paths, base: &Path) -> Self {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let work_dir = resolve(&paths.work_dir);
        let under = |name: &str| work_dir.join(name);
        Self {
            train: resolve(&paths.train),
            dev: paths.dev.as_deref().map(resolve),
            test: paths.test.as_deref().map(resolve),
            stopwords: under("stopwords.txt"),
            condensed: under("condensed.jsonl"),
            index: paths
                .index
                .as_deref()
                .map(resolve)
                .unwrap_or_else(|| under("corpus.index")),
            model: paths
                .model
                .as_deref()
                .map(resolve)
                .unwrap_or_else(|| under("model.bin")),
            loss: under("loss.csv"),
            stores: paths
                .stores
                .as_deref()
                .map(resolve)
                .unwrap_or_else(|| under("stores")),
            reports: under("reports"),
        }
    }

    pub fn store(&self, method: Method) -> PathBuf {
        self.stores.join(format!("{method}.store"))
    }

    pub fn split(&self, split: Split) -> Option<&Path> {
        match split {
            Split::Train => Some(&self.train),
            Split::Dev => self.dev.as_deref(),
            Split::Test => self.test.as_deref(),
        }
    }
}
