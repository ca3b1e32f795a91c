use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::RunConfig;
use super::preset::{Preset, PresetJob};
use super::{CommonArgs, Command, EXIT_OK, EXIT_RUNTIME, EXIT_SELFCHECK};
use crate::embed::io::{load_embedding, save_embedding};
use crate::embed::{train_embedding, TrainedEmbedding};
use crate::error::{Error, Result};
use crate::eval::{
    confusion, experiment_grid, export_outcome, grid_to_json, metrics, render_grid, render_table, run_experiment,
    ExperimentConfig, ExperimentOutcome, GridCell, GridKind, THRESHOLD,
};
use crate::fsutil::{read_to_string, write_atomic};
use crate::models::{build_model, predict, predict_tokens, train, Classifier, LabeledData};
use crate::seqdata::{
    is_valid_residue, split_holdout, tokenize, tokenize_lenient, Dataset, DatasetFormat, MAX_SEQUENCE_LEN,
};
use crate::selfcheck::{run_suite, SuiteOptions};

pub(super) fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Embed { common } => embed(&resolve(&common)?, out),
        Command::Train { common, embedding } => train_cmd(&resolve(&common)?, embedding.as_deref(), out, err),
        Command::Evaluate { common, grid, runs } => {
            let mut cfg = resolve(&common)?;
            if let Some(r) = runs {
                cfg.eval.n_runs = r;
            }
            if grid.is_some() {
                cfg.experiment.grid = grid;
            }
            evaluate(&cfg, out)
        }
        Command::Predict { model, input } => predict_cmd(&model, &input, out),
        Command::Reproduce {
            preset,
            dataset,
            runs,
            seed,
            out: dir,
        } => reproduce(preset, dataset, runs, seed, dir, out),
        Command::Gradcheck {
            seed,
            instances,
            inject_fault,
        } => {
            let report = run_suite(&SuiteOptions {
                seed,
                instances,
                fault: inject_fault,
                ..SuiteOptions::default()
            });
            wr(out, &report.render())?;
            if report.passed() {
                Ok(EXIT_OK)
            } else {
                wr(err, &format!("gradient check failed: {}\n", report.failures().join(", ")))?;
                Ok(EXIT_SELFCHECK)
            }
        }
    }
}

fn wr(w: &mut dyn Write, s: &str) -> Result<()> {
    w.write_all(s.as_bytes()).map_err(|e| Error::io("<output>", e))
}

/// Defaults, then the config file, then the environment, then flags.
fn resolve(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(p) = &common.dataset {
        cfg.dataset.path = Some(p.clone());
    }
    if let Some(s) = common.seed {
        cfg.set_seed(s);
    }
    if let Some(d) = &common.out {
        cfg.output.dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn tokens_of(d: &Dataset, k: usize) -> Vec<Vec<String>> {
    d.sequences().iter().map(|s| tokenize_lenient(s, k)).collect()
}

fn embed(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let dataset = cfg.load_dataset()?;
    let exp = cfg.experiment();
    let start = Instant::now();
    let emb = train_embedding(&tokens_of(&dataset, cfg.experiment.embedding.k()), &exp.embedding)?;
    let path = cfg.output.dir.join("embedding.txt");
    save_embedding(&path, &emb)?;
    wr(
        out,
        &format!(
            "{} embedding: vocab {} dim {} epochs {} wall {:.2}s -> {}\n",
            cfg.experiment.embedding,
            emb.matrix.len(),
            emb.matrix.dim(),
            exp.embedding.epochs,
            start.elapsed().as_secs_f64(),
            path.display()
        ),
    )?;
    Ok(EXIT_OK)
}

fn train_cmd(cfg: &RunConfig, embedding: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let dataset = cfg.load_dataset()?;
    let exp = cfg.experiment();
    let (train_set, test_set) = split_holdout(&dataset, exp.eval.test_fraction, exp.eval.seed_base)?;
    let start = Instant::now();
    let emb: TrainedEmbedding = match embedding {
        Some(p) => load_embedding(p)?,
        None => train_embedding(&tokens_of(&train_set, cfg.experiment.embedding.k()), &exp.embedding)?,
    };
    let k = emb.matrix.vocab.k();
    let train_tokens = tokens_of(&train_set, k);
    let longest = train_tokens.iter().map(Vec::len).max().unwrap_or(1);
    let mut model = build_model(&exp.model, &emb, exp.model.resolve_max_len(longest))?;
    let fit = LabeledData::from_tokens(&model, &train_tokens, train_set.labels())?;
    let dir = &cfg.output.dir;
    let history = match train(&mut model, &fit, &exp.training) {
        Ok(h) => h,
        Err(Error::Diverged {
            epoch,
            last_finite_epoch,
            history,
        }) => {
            write_atomic(&dir.join("loss.csv"), crate::eval::loss_to_csv(&history).as_bytes())?;
            wr(err, &format!("training diverged at epoch {epoch}; partial loss curve in loss.csv\n"))?;
            return Err(Error::Diverged {
                epoch,
                last_finite_epoch,
                history,
            });
        }
        Err(e) => return Err(e),
    };
    let model_path = dir.join("model.acpm");
    model.save(&model_path)?;
    write_atomic(&dir.join("loss.csv"), crate::eval::loss_to_csv(&history).as_bytes())?;

    let test = LabeledData::from_tokens(&model, &tokens_of(&test_set, k), test_set.labels())?;
    let scores = predict(&mut model, &test.indices)?;
    let m = metrics(&confusion(&scores, &test.labels, THRESHOLD)?)?;
    wr(
        out,
        &format!(
            "{}: {} train / {} test, stopped at epoch {} (best {}), test ACC {:.2}% MCC {:.2}, wall {:.2}s -> {}\n",
            model.architecture().label(),
            train_set.len(),
            test_set.len(),
            history.stopped_epoch,
            history.best_epoch,
            100.0 * m.acc,
            100.0 * m.mcc,
            start.elapsed().as_secs_f64(),
            model_path.display()
        ),
    )?;
    Ok(EXIT_OK)
}

/// File-name form of a cell label: `FT(3)+BiLSTM` becomes `ft3-bilstm`.
fn slug(label: &str) -> String {
    label
        .to_ascii_lowercase()
        .replace('+', "-")
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '-')
        .collect()
}

fn write_grid(dataset: &Dataset, grid: GridKind, exp: &ExperimentConfig, dir: &Path) -> Result<(String, usize)> {
    let outcome = experiment_grid(dataset, &grid.cells(), exp)?;
    for c in &outcome.cells {
        if let Ok(o) = &c.outcome {
            export_outcome(o, &dir.join(slug(&c.cell.label())), "report")?;
        }
    }
    write_atomic(&dir.join("grid.json"), grid_to_json(&outcome).as_bytes())?;
    let table = render_grid(&outcome);
    write_atomic(&dir.join("table.txt"), table.as_bytes())?;
    Ok((table, outcome.succeeded()))
}

fn write_cell(dataset: &Dataset, cell: GridCell, exp: &ExperimentConfig, dir: &Path) -> Result<(String, ExperimentOutcome)> {
    let outcome = run_experiment(dataset, cell.embedding, cell.architecture, exp)?;
    export_outcome(&outcome, dir, "report")?;
    let table = render_table(&dataset.name, &[(cell.label(), Some(&outcome.report), None)]);
    write_atomic(&dir.join("table.txt"), table.as_bytes())?;
    Ok((table, outcome))
}

fn evaluate(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let dataset = cfg.load_dataset()?;
    let exp = cfg.experiment();
    let dir = &cfg.output.dir;
    let ok = match cfg.experiment.grid {
        Some(grid) => {
            let (table, succeeded) = write_grid(&dataset, grid, &exp, dir)?;
            wr(out, &table)?;
            succeeded > 0
        }
        None => {
            let cell = GridCell {
                embedding: cfg.experiment.embedding,
                architecture: cfg.experiment.architecture,
            };
            let (table, outcome) = write_cell(&dataset, cell, &exp, dir)?;
            wr(out, &table)?;
            !outcome.report.runs.is_empty()
        }
    };
    Ok(if ok { EXIT_OK } else { EXIT_RUNTIME })
}

/// One sequence to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictInput {
    pub id: String,
    pub sequence: String,
}

/// Reads FASTA (`>id` headers, anything after `|` or whitespace dropped),
/// `id,sequence` lines (an `id,sequence` header row is skipped), or one bare
/// sequence per line (ids are 1-based line numbers).
pub fn parse_predict_input(text: &str) -> Vec<PredictInput> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut out = Vec::new();
    if lines.first().is_some_and(|(_, l)| l.starts_with('>')) {
        for (_, l) in lines {
            if let Some(h) = l.strip_prefix('>') {
                let id = h.split(|c: char| c == '|' || c.is_whitespace()).next().unwrap_or("");
                out.push(PredictInput {
                    id: id.to_string(),
                    sequence: String::new(),
                });
            } else if let Some(last) = out.last_mut() {
                last.sequence.push_str(l);
            }
        }
        return out;
    }
    for (n, l) in lines {
        match l.split_once(',') {
            Some((id, seq)) => {
                if seq.trim().eq_ignore_ascii_case("sequence") {
                    continue;
                }
                out.push(PredictInput {
                    id: id.trim().to_string(),
                    sequence: seq.trim().to_string(),
                });
            }
            None => out.push(PredictInput {
                id: n.to_string(),
                sequence: l.to_string(),
            }),
        }
    }
    out
}

fn check_input(model: &Classifier, r: &PredictInput) -> std::result::Result<(), String> {
    let s = &r.sequence;
    if let Some(ch) = s.chars().find(|c| !is_valid_residue(*c)) {
        return Err(format!("record {}: invalid residue '{ch}'", r.id));
    }
    if s.is_empty() || s.len() > MAX_SEQUENCE_LEN {
        return Err(format!("record {}: sequence length {} outside 1..={MAX_SEQUENCE_LEN}", r.id, s.len()));
    }
    tokenize(s, model.vocab.k(), 1).map_err(|e| format!("record {}: {e}", r.id))?;
    Ok(())
}

fn predict_cmd(model_path: &Path, input: &Path, out: &mut dyn Write) -> Result<i32> {
    let mut model = Classifier::load(model_path)?;
    let records = parse_predict_input(&read_to_string(input)?);
    if records.is_empty() {
        return Err(Error::EmptyDataset(input.display().to_string()));
    }
    let checks: Vec<std::result::Result<(), String>> = records.iter().map(|r| check_input(&model, r)).collect();
    let valid: Vec<&str> = records
        .iter()
        .zip(&checks)
        .filter(|(_, c)| c.is_ok())
        .map(|(r, _)| r.sequence.as_str())
        .collect();
    let mut scores = predict_tokens(&mut model, &valid)?.into_iter();

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Corrupt(e.to_string());
    w.write_record(["id", "sequence", "probability", "label@0.5"]).map_err(csv_err)?;
    let mut failures = 0;
    for (r, c) in records.iter().zip(checks) {
        match c {
            Ok(()) => {
                let p = scores.next().expect("one score per valid record");
                let label = if p >= THRESHOLD { "1" } else { "0" };
                w.write_record([r.id.as_str(), &r.sequence, &format!("{p:.6}"), label])
                    .map_err(csv_err)?;
            }
            Err(e) => {
                failures += 1;
                w.write_record([r.id.as_str(), &r.sequence, "", &format!("error: {e}")])
                    .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Corrupt(e.to_string()))?;
    out.write_all(&bytes).map_err(|e| Error::io("<output>", e))?;
    if failures == records.len() {
        return Err(Error::InvalidArgument(format!("none of the {failures} input records could be scored")));
    }
    Ok(EXIT_OK)
}

/// Locked configuration of a preset: defaults plus the optional run count and seed.
pub(super) fn preset_config(runs: Option<usize>, seed: Option<u64>) -> RunConfig {
    let mut cfg = RunConfig::default();
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    if let Some(r) = runs {
        cfg.eval.n_runs = r;
    }
    cfg
}

fn load_preset_dataset(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "dataset not found: {} (set {} or pass --dataset)",
            path.display(),
            crate::seqdata::DATA_DIR_ENV
        )));
    }
    crate::seqdata::load_dataset(path, DatasetFormat::from_path(path))
}

fn reproduce(
    preset: Preset,
    dataset: Option<PathBuf>,
    runs: Option<usize>,
    seed: Option<u64>,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<i32> {
    let cfg = preset_config(runs, seed);
    cfg.validate()?;
    let exp = cfg.experiment();
    let root = dir.unwrap_or_else(|| PathBuf::from("out").join("reproduce").join(preset.name()));
    let mut any_ok = false;
    for job in preset.jobs(dataset) {
        match job {
            PresetJob::Cell {
                dataset,
                cell,
                target_acc,
            } => {
                let data = load_preset_dataset(&dataset)?;
                let dir = root.join(&data.name);
                let (table, outcome) = write_cell(&data, cell, &exp, &dir)?;
                let r = &outcome.report;
                let line = match &r.mean {
                    Some(m) => format!(
                        "{} on {}: achieved ACC {:.2}% vs target {:.2}% (difference {:+.2}, {} of {} runs completed)\n",
                        cell.label(),
                        data.name,
                        m.acc,
                        target_acc,
                        m.acc - target_acc,
                        r.runs.len(),
                        exp.eval.n_runs
                    ),
                    None => format!(
                        "{} on {}: no run completed vs target {:.2}%\n",
                        cell.label(),
                        data.name,
                        target_acc
                    ),
                };
                write_atomic(&dir.join("comparison.txt"), line.as_bytes())?;
                wr(out, &table)?;
                wr(out, &line)?;
                any_ok |= r.mean.is_some();
            }
            PresetJob::Grid { dataset, grid } => {
                let data = load_preset_dataset(&dataset)?;
                let (table, succeeded) = write_grid(&data, grid, &exp, &root.join(&data.name))?;
                wr(out, &table)?;
                any_ok |= succeeded > 0;
            }
        }
    }
    Ok(if any_ok { EXIT_OK } else { EXIT_RUNTIME })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_input_formats() {
        let fasta = parse_predict_input(">a|1\nKLAK\nLAK\n>b desc\nDEED\n");
        assert_eq!(fasta.len(), 2);
        assert_eq!((fasta[0].id.as_str(), fasta[0].sequence.as_str()), ("a", "KLAKLAK"));
        assert_eq!(fasta[1].id, "b");

        let csv = parse_predict_input("id,sequence\np1,KLAK\np2,DEED\n");
        assert_eq!(csv.len(), 2);
        assert_eq!(csv[1].sequence, "DEED");

        let plain = parse_predict_input("KLAK\n\nDEED\n");
        assert_eq!(plain.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["1", "3"]);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("FT(3)+BiLSTM"), "ft3-bilstm");
        assert_eq!(slug("WS+CNN"), "ws-cnn");
    }
}
