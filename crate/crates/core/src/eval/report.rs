use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{EmbeddingSpec, ExperimentConfig, ExperimentOutcome, GridOutcome};
use super::metrics::RocCurve;
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::models::{Architecture, TrainHistory};
use crate::seqdata::Dataset;

/// Metrics of one holdout run, as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub seed: u64,
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub mcc: f64,
    pub auc: f64,
    pub degenerate: bool,
    pub stopped_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub mcc: f64,
    pub auc: f64,
}

impl Summary {
    fn from_fn(runs: &[RunMetrics], f: impl Fn(&[f64]) -> f64) -> Self {
        let col = |g: fn(&RunMetrics) -> f64| f(&runs.iter().map(g).collect::<Vec<_>>());
        Summary {
            acc: col(|r| r.acc),
            sen: col(|r| r.sen),
            spe: col(|r| r.spe),
            mcc: col(|r| r.mcc),
            auc: col(|r| r.auc),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for a single value.
fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Per-run and aggregate metrics of one embedding × architecture cell. Aggregates
/// cover completed runs only and are `None` when every run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_fingerprint: String,
    pub dataset: String,
    pub embedding: EmbeddingSpec,
    pub architecture: Architecture,
    pub runs: Vec<RunMetrics>,
    pub mean: Option<Summary>,
    pub std: Option<Summary>,
    pub min: Option<Summary>,
    pub max: Option<Summary>,
    pub failures: usize,
    pub failed_runs: Vec<RunFailure>,
}

impl EvalReport {
    pub fn new(
        config_fingerprint: String,
        dataset: String,
        embedding: EmbeddingSpec,
        architecture: Architecture,
        runs: Vec<RunMetrics>,
        failed_runs: Vec<RunFailure>,
    ) -> Self {
        let agg = |f: fn(&[f64]) -> f64| (!runs.is_empty()).then(|| Summary::from_fn(&runs, f));
        Self {
            config_fingerprint,
            dataset,
            embedding,
            architecture,
            mean: agg(mean),
            std: agg(sample_std),
            min: agg(|v| v.iter().copied().fold(f64::INFINITY, f64::min)),
            max: agg(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            failures: failed_runs.len(),
            failed_runs,
            runs,
        }
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.embedding, self.architecture.label())
    }
}

fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable hash of the dataset contents, the cell and the full configuration.
pub fn fingerprint(dataset: &Dataset, spec: EmbeddingSpec, arch: Architecture, cfg: &ExperimentConfig) -> String {
    let mut text = serde_json::to_string(cfg).expect("config serializes");
    text.push_str(&format!("|{spec}|{}|", arch.as_str()));
    for r in dataset.records() {
        text.push_str(&format!("{}:{}:{};", r.id, r.sequence, r.label.as_u8()));
    }
    format!("{:016x}", fnv1a_64(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn report_to_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// One header row plus one row per completed run.
pub fn report_to_csv(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run", "seed", "acc", "sen", "spe", "mcc", "auc", "degenerate", "stopped_epoch"])
        .expect("in-memory write");
    for r in &report.runs {
        w.serialize((r.run, r.seed, r.acc, r.sen, r.spe, r.mcc, r.auc, r.degenerate, r.stopped_epoch))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn export_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report_to_json(report),
        ReportFormat::Csv => report_to_csv(report),
    };
    write_atomic(path, text.as_bytes())
}

pub fn read_report_json(path: &Path) -> Result<EvalReport> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))
}

/// Columns `threshold,fpr,tpr`; the first row has threshold `inf`.
pub fn roc_to_csv(curve: &RocCurve) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["threshold", "fpr", "tpr"]).expect("in-memory write");
    for p in &curve.points {
        w.serialize((p.threshold, p.fpr, p.tpr)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Columns `epoch,train_loss,val_loss`, one row per completed epoch.
pub fn loss_to_csv(history: &TrainHistory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "train_loss", "val_loss"]).expect("in-memory write");
    for (i, (t, v)) in history.train_loss.iter().zip(&history.val_loss).enumerate() {
        w.serialize((i + 1, t, v)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Writes `<stem>.json`, `<stem>.csv` and per-run `<stem>.run<r>.roc.csv` and
/// `<stem>.run<r>.loss.csv` into `dir`, returning the paths in that order.
pub fn export_outcome(outcome: &ExperimentOutcome, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = dir.join(format!("{stem}.json"));
    export_report(&outcome.report, &json, ReportFormat::Json)?;
    written.push(json);
    let csv = dir.join(format!("{stem}.csv"));
    export_report(&outcome.report, &csv, ReportFormat::Csv)?;
    written.push(csv);
    for t in &outcome.traces {
        let roc = dir.join(format!("{stem}.run{}.roc.csv", t.run));
        write_atomic(&roc, roc_to_csv(&t.roc).as_bytes())?;
        written.push(roc);
        let loss = dir.join(format!("{stem}.run{}.loss.csv", t.run));
        write_atomic(&loss, loss_to_csv(&t.history).as_bytes())?;
        written.push(loss);
    }
    Ok(written)
}

#[derive(Serialize)]
struct GridCellJson<'a> {
    label: String,
    report: Option<&'a EvalReport>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct GridJson<'a> {
    dataset: &'a str,
    cells: Vec<GridCellJson<'a>>,
}

pub fn grid_to_json(grid: &GridOutcome) -> String {
    let doc = GridJson {
        dataset: &grid.dataset,
        cells: grid
            .cells
            .iter()
            .map(|c| GridCellJson {
                label: c.cell.label(),
                report: c.outcome.as_ref().ok().map(|o| &o.report),
                error: c.outcome.as_ref().err().map(String::as_str),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("grid serializes")
}

/// Mean metrics per cell in the familiar results-table layout.
pub fn render_table(title: &str, reports: &[(String, Option<&EvalReport>, Option<&str>)]) -> String {
    let mut out = format!("{title}\n");
    out.push_str(&format!(
        "{:<14} {:>7} {:>7} {:>7} {:>7} {:>7}   {:>8} {:>4}\n",
        "Model", "ACC", "SEN", "SPE", "MCC", "AUC", "ACC sd", "runs"
    ));
    for (label, report, error) in reports {
        match (report, report.and_then(|r| r.mean.as_ref())) {
            (Some(r), Some(m)) => {
                let sd = r.std.as_ref().map_or(0.0, |s| s.acc);
                let failed = if r.failures > 0 {
                    format!("  ({} failed)", r.failures)
                } else {
                    String::new()
                };
                out.push_str(&format!(
                    "{label:<14} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2}   {sd:>8.2} {:>4}{failed}\n",
                    m.acc,
                    m.sen,
                    m.spe,
                    m.mcc,
                    m.auc,
                    r.runs.len()
                ));
            }
            (Some(r), None) => out.push_str(&format!("{label:<14} all {} runs failed\n", r.failures)),
            (None, _) => out.push_str(&format!("{label:<14} error: {}\n", error.unwrap_or("unknown"))),
        }
    }
    out
}

pub fn render_grid(grid: &GridOutcome) -> String {
    let rows: Vec<(String, Option<&EvalReport>, Option<&str>)> = grid
        .cells
        .iter()
        .map(|c| {
            (
                c.cell.label(),
                c.outcome.as_ref().ok().map(|o| &o.report),
                c.outcome.as_ref().err().map(String::as_str),
            )
        })
        .collect();
    render_table(&format!("dataset: {}", grid.dataset), &rows)
}
