use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::eval::{EmbeddingSpec, EvalConfig, ExperimentConfig, GridKind};
use crate::fsutil::read_to_string;
use crate::models::{Architecture, ModelConfig, TrainConfig};
use crate::seqdata::{load_dataset, Dataset, DatasetFormat};

/// Overrides the output directory.
pub const OUT_ENV: &str = "ACPCLASS_OUT";
/// Overrides every seed (run seed base and the per-component seeds).
pub const SEED_ENV: &str = "ACPCLASS_SEED";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatChoice {
    /// Guess from the file extension.
    #[default]
    Auto,
    Csv,
    Fasta,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    pub format: FormatChoice,
}

/// Which cell (or grid) to run. The embedding spec fixes the embedding mode, the
/// subword bounds and the token length, overriding those keys of `[embedding]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub embedding: EmbeddingSpec,
    pub architecture: Architecture,
    pub grid: Option<GridKind>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            embedding: EmbeddingSpec::Ft(3),
            architecture: Architecture::BiLstm,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Complete configuration of one command. Every key has a default and unknown keys
/// are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub experiment: ExperimentSection,
    pub embedding: EmbeddingConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub eval: EvalConfig,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_to_string(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies one global seed everywhere a seed appears.
    pub fn set_seed(&mut self, seed: u64) {
        self.eval.seed_base = seed;
        self.embedding.seed = seed;
        self.model.seed = seed;
        self.training.seed = seed;
    }

    /// Reads the output-directory and seed overrides from the environment.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Some(dir) = std::env::var_os(OUT_ENV) {
            self.output.dir = PathBuf::from(dir);
        }
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
            self.set_seed(seed);
        }
        Ok(())
    }

    /// The embedding, model, training and evaluation sections for the configured cell.
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            embedding: self.experiment.embedding.apply(&self.embedding),
            model: ModelConfig {
                architecture: self.experiment.architecture,
                ..self.model.clone()
            },
            training: self.training.clone(),
            eval: self.eval.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment().validate()
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset given (use --dataset or [dataset] path)".into()))
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let path = self.dataset_path()?;
        let format = match self.dataset.format {
            FormatChoice::Auto => DatasetFormat::from_path(path),
            FormatChoice::Csv => DatasetFormat::Csv,
            FormatChoice::Fasta => DatasetFormat::Fasta,
        };
        load_dataset(path, format)
    }
}
