use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics, roc_auc, RocCurve};
use super::report::{fingerprint, EvalReport, RunMetrics};
use crate::embed::{train_embedding, EmbeddingConfig, EmbeddingMode};
use crate::error::{Error, Result};
use crate::models::{build_model, predict, train, Architecture, LabeledData, ModelConfig, TrainConfig, TrainHistory};
use crate::seqdata::{split_holdout, tokenize_lenient, Dataset};

/// Decision threshold on the positive-class probability.
pub const THRESHOLD: f64 = 0.5;

/// Word2Vec skip-gram (WS) or CBOW (WC) over single residues, or FastText over
/// overlapping n-mers with character n-grams of length 2..=n (FT(n)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EmbeddingSpec {
    Ws,
    Wc,
    Ft(usize),
}

impl EmbeddingSpec {
    pub const WORD2VEC: [EmbeddingSpec; 2] = [EmbeddingSpec::Ws, EmbeddingSpec::Wc];
    pub const FASTTEXT: [EmbeddingSpec; 3] = [EmbeddingSpec::Ft(2), EmbeddingSpec::Ft(3), EmbeddingSpec::Ft(4)];

    /// Token length used to cut sequences.
    pub fn k(self) -> usize {
        match self {
            EmbeddingSpec::Ws | EmbeddingSpec::Wc => 1,
            EmbeddingSpec::Ft(n) => n,
        }
    }

    /// `base` with the mode and subword bounds this spec implies.
    pub fn apply(self, base: &EmbeddingConfig) -> EmbeddingConfig {
        let mut cfg = base.clone();
        match self {
            EmbeddingSpec::Ws => cfg.mode = EmbeddingMode::SkipGram,
            EmbeddingSpec::Wc => cfg.mode = EmbeddingMode::Cbow,
            EmbeddingSpec::Ft(n) => {
                cfg.mode = EmbeddingMode::FastText;
                cfg.minn = 2.min(n);
                cfg.maxn = n;
            }
        }
        cfg
    }
}

impl fmt::Display for EmbeddingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingSpec::Ws => f.write_str("WS"),
            EmbeddingSpec::Wc => f.write_str("WC"),
            EmbeddingSpec::Ft(n) => write!(f, "FT({n})"),
        }
    }
}

impl FromStr for EmbeddingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        match up.as_str() {
            "WS" => return Ok(EmbeddingSpec::Ws),
            "WC" => return Ok(EmbeddingSpec::Wc),
            _ => {}
        }
        let n = up
            .strip_prefix("FT(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| up.strip_prefix("FT"))
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&n| n >= 1);
        n.map(EmbeddingSpec::Ft)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown embedding {s:?} (expected WS, WC or FT(n))")))
    }
}

impl TryFrom<String> for EmbeddingSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EmbeddingSpec> for String {
    fn from(s: EmbeddingSpec) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_runs: usize,
    pub seed_base: u64,
    pub test_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_runs: 10,
            seed_base: 0,
            test_fraction: 0.2,
        }
    }
}

/// Everything one cell of the protocol needs. Per run, the seeds inside the
/// embedding, model and training sections are replaced by the run seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub embedding: EmbeddingConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval.n_runs == 0 {
            return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
        }
        if !(self.eval.test_fraction > 0.0 && self.eval.test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test_fraction {} not in (0, 1)",
                self.eval.test_fraction
            )));
        }
        self.embedding.validate()?;
        self.model.validate()?;
        self.training.validate()
    }
}

/// Trace of one completed run, kept for the plot sidecars.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: usize,
    pub seed: u64,
    pub roc: RocCurve,
    pub history: TrainHistory,
    pub test_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub traces: Vec<RunTrace>,
}

fn single_run(
    dataset: &Dataset,
    spec: EmbeddingSpec,
    arch: Architecture,
    cfg: &ExperimentConfig,
    run: usize,
) -> Result<(RunMetrics, RunTrace)> {
    let seed = cfg.eval.seed_base + run as u64;
    let (train_set, test_set) = split_holdout(dataset, cfg.eval.test_fraction, seed)?;
    let k = spec.k();
    let tok = |d: &Dataset| -> Vec<Vec<String>> { d.sequences().iter().map(|s| tokenize_lenient(s, k)).collect() };
    let train_tokens = tok(&train_set);
    let test_tokens = tok(&test_set);

    let emb_cfg = EmbeddingConfig {
        seed,
        ..spec.apply(&cfg.embedding)
    };
    let embedding = train_embedding(&train_tokens, &emb_cfg)?;

    let model_cfg = ModelConfig {
        architecture: arch,
        seed,
        ..cfg.model.clone()
    };
    let longest = train_tokens.iter().map(Vec::len).max().unwrap_or(1);
    let mut model = build_model(&model_cfg, &embedding, model_cfg.resolve_max_len(longest))?;
    let fit = LabeledData::from_tokens(&model, &train_tokens, train_set.labels())?;
    let history = train(
        &mut model,
        &fit,
        &TrainConfig {
            seed,
            ..cfg.training.clone()
        },
    )?;

    let test = LabeledData::from_tokens(&model, &test_tokens, test_set.labels())?;
    let scores = predict(&mut model, &test.indices)?;
    let m = metrics(&confusion(&scores, &test.labels, THRESHOLD)?)?;
    let roc = roc_auc(&scores, &test.labels)?;
    let row = RunMetrics {
        run,
        seed,
        acc: 100.0 * m.acc,
        sen: 100.0 * m.sen,
        spe: 100.0 * m.spe,
        mcc: 100.0 * m.mcc,
        auc: 100.0 * roc.auc,
        degenerate: m.degenerate,
        stopped_epoch: history.stopped_epoch,
    };
    Ok((
        row,
        RunTrace {
            run,
            seed,
            roc,
            history,
            test_scores: scores,
        },
    ))
}

/// Repeated stratified holdout: run `r` splits with `seed_base + r`, trains the
/// embedding on its training side only, fits the classifier and scores the test side.
/// Runs execute in parallel and are merged in run order. A failed run is recorded
/// and excluded from the aggregates.
pub fn run_experiment(
    dataset: &Dataset,
    spec: EmbeddingSpec,
    arch: Architecture,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let results: Vec<Result<(RunMetrics, RunTrace)>> = (0..cfg.eval.n_runs)
        .into_par_iter()
        .map(|r| single_run(dataset, spec, arch, cfg, r))
        .collect();

    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut failed = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok((row, trace)) => {
                runs.push(row);
                traces.push(trace);
            }
            Err(e) => failed.push(super::report::RunFailure {
                run: r,
                seed: cfg.eval.seed_base + r as u64,
                error: e.to_string(),
            }),
        }
    }
    let report = EvalReport::new(
        fingerprint(dataset, spec, arch, cfg),
        dataset.name.clone(),
        spec,
        arch,
        runs,
        failed,
    );
    Ok(ExperimentOutcome { report, traces })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub embedding: EmbeddingSpec,
    pub architecture: Architecture,
}

impl GridCell {
    pub fn label(&self) -> String {
        format!("{}+{}", self.embedding, self.architecture.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Word2Vec,
    FastText,
    All,
}

impl GridKind {
    /// Cells in table order: architecture-major, embedding-minor.
    pub fn cells(self) -> Vec<GridCell> {
        let specs: Vec<EmbeddingSpec> = match self {
            GridKind::Word2Vec => EmbeddingSpec::WORD2VEC.to_vec(),
            GridKind::FastText => EmbeddingSpec::FASTTEXT.to_vec(),
            GridKind::All => EmbeddingSpec::WORD2VEC
                .iter()
                .chain(EmbeddingSpec::FASTTEXT.iter())
                .copied()
                .collect(),
        };
        Architecture::ALL
            .iter()
            .flat_map(|&architecture| specs.iter().map(move |&embedding| GridCell { embedding, architecture }))
            .collect()
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "word2vec" | "w2v" => Ok(GridKind::Word2Vec),
            "fasttext" | "ft" => Ok(GridKind::FastText),
            "all" => Ok(GridKind::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown grid {other:?} (expected word2vec, fasttext or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCellOutcome {
    pub cell: GridCell,
    pub outcome: std::result::Result<ExperimentOutcome, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub dataset: String,
    pub cells: Vec<GridCellOutcome>,
}

impl GridOutcome {
    /// Cells with at least one completed run.
    pub fn succeeded(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.outcome.as_ref().is_ok_and(|o| !o.report.runs.is_empty()))
            .count()
    }

    pub fn report(&self, cell: GridCell) -> Option<&EvalReport> {
        self.cells
            .iter()
            .find(|c| c.cell == cell)
            .and_then(|c| c.outcome.as_ref().ok())
            .map(|o| &o.report)
    }
}

/// Runs every cell; a failing cell is recorded without stopping the others.
pub fn experiment_grid(dataset: &Dataset, cells: &[GridCell], cfg: &ExperimentConfig) -> Result<GridOutcome> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("experiment grid is empty".into()));
    }
    cfg.validate()?;
    let cells = cells
        .par_iter()
        .map(|&cell| GridCellOutcome {
            cell,
            outcome: run_experiment(dataset, cell.embedding, cell.architecture, cfg).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(GridOutcome {
        dataset: dataset.name.clone(),
        cells,
    })
}
