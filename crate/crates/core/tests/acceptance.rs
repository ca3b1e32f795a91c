//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 3 to 5 need the ACPs250 and Independent datasets (see `ACP_DATA_DIR`).
//! When a file is missing the line reads FAIL with the reason and the test does not
//! abort; set `ACP_REQUIRE_DATA=1` to turn that into a hard failure. Every other
//! failure fails the test.

use std::path::Path;
use std::time::Instant;

use acpclass::cli;
use acpclass::embed::{cosine, train_embedding, EmbeddingConfig, EmbeddingMode};
use acpclass::eval::{
    confusion, experiment_grid, metrics, roc_auc, run_experiment, EmbeddingSpec, ExperimentConfig, GridKind,
};
use acpclass::models::{batch_loss, build_model, predict, Architecture, LabeledData, ModelConfig};
use acpclass::selfcheck::{run_suite, SuiteOptions};
use acpclass::seqdata::{
    dataset_to_csv, load_dataset, standard_dataset_path, tokenize_lenient, Dataset, DatasetFormat, Label,
    ACPS250_FILE, INDEPENDENT_FILE,
};
use acpclass::synth::{cooccurrence_corpus, peptide_dataset, SynthConfig};
use acpclass::tensornet::{AdamConfig, AdamState, HasParameters, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRADCHECK_BUDGET_SECS: f64 = 120.0;
const ORACLE_SETS: usize = 1000;
const ORACLE_TOLERANCE: f64 = 1e-10;
const ORACLE_BUDGET_SECS: f64 = 30.0;
const ACPS250_COUNTS: (usize, usize) = (250, 250);
const INDEPENDENT_COUNTS: (usize, usize) = (150, 150);
const ACPS250_MIN_ACC: f64 = 85.0;
const INDEPENDENT_MIN_ACC: f64 = 90.0;
const MEMORIZE_RECORDS: usize = 16;
const MEMORIZE_MAX_EPOCHS: usize = 200;
const MEMORIZE_BUDGET_SECS: f64 = 60.0;
const EMBEDDING_SEEDS: u64 = 20;
const EMBEDDING_MIN_RATE: f64 = 0.95;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Inputs are unavailable, so the criterion could not be evaluated.
    Missing(String),
}

struct Ledger {
    lines: Vec<(usize, &'static str, Outcome)>,
}

impl Ledger {
    fn record(&mut self, n: usize, name: &'static str, outcome: Outcome) {
        let (tag, detail) = match &outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Missing(d) => ("FAIL", d),
        };
        println!("criterion {n} [{tag}] {name}: {detail}");
        self.lines.push((n, name, outcome));
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn gradients() -> Outcome {
    let report = run_suite(&SuiteOptions::default());
    let worst = report
        .results
        .iter()
        .map(|r| format!("{} {:.1e}/{:.0e}", r.component, r.max_rel_error, r.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    let ok = report.passed() && report.elapsed_secs < GRADCHECK_BUDGET_SECS;
    verdict(
        ok,
        format!(
            "{} components, failures {:?}, {:.1}s (budget {GRADCHECK_BUDGET_SECS}s); {worst}",
            report.results.len(),
            report.failures(),
            report.elapsed_secs
        ),
    )
}

/// Loop recount of accuracy, sensitivity, specificity and MCC.
fn oracle_metrics(scores: &[f64], labels: &[Label]) -> [f64; 4] {
    let (mut tp, mut tn, mut fp, mut fn_) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..scores.len() {
        let pred = scores[i] >= 0.5;
        match (pred, labels[i].is_positive()) {
            (true, true) => tp += 1.0,
            (false, false) => tn += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
        }
    }
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    [
        (tp + tn) / scores.len() as f64,
        ratio(tp, tp + fn_),
        ratio(tn, tn + fp),
        ratio(tp * tn - fp * fn_, den),
    ]
}

/// Probability that a positive outscores a negative, ties counted half.
fn mann_whitney(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        if !labels[i].is_positive() {
            continue;
        }
        for j in 0..scores.len() {
            if labels[j].is_positive() {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for set in 0..ORACLE_SETS {
        let n = rng.gen_range(50..=300);
        // Every third set uses coarse scores so ties and exact 0.5 scores occur.
        let coarse = set % 3 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = rng.gen();
                if coarse {
                    (s * 10.0).round() / 10.0
                } else {
                    s
                }
            })
            .collect();
        let mut labels: Vec<Label> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { Label::Positive } else { Label::Negative })
            .collect();
        labels[0] = Label::Positive;
        labels[1] = Label::Negative;

        let m = match confusion(&scores, &labels, 0.5).and_then(|c| metrics(&c)) {
            Ok(m) => m,
            Err(e) => return Outcome::Fail(format!("set {set}: {e}")),
        };
        let auc = match roc_auc(&scores, &labels) {
            Ok(r) => r.auc,
            Err(e) => return Outcome::Fail(format!("set {set}: {e}")),
        };
        let o = oracle_metrics(&scores, &labels);
        for (got, want) in [m.acc, m.sen, m.spe, m.mcc].iter().zip(o) {
            worst = worst.max((got - want).abs());
        }
        worst = worst.max((auc - mann_whitney(&scores, &labels)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= ORACLE_TOLERANCE && secs < ORACLE_BUDGET_SECS,
        format!(
            "{ORACLE_SETS} sets, max abs deviation {worst:.2e} (tolerance {ORACLE_TOLERANCE:.0e}), {secs:.2}s (budget {ORACLE_BUDGET_SECS}s)"
        ),
    )
}

fn load_standard(file: &str) -> Result<Dataset, String> {
    let path = standard_dataset_path(file);
    if !path.exists() {
        return Err(format!("dataset not found: {}", path.display()));
    }
    load_dataset(&path, DatasetFormat::from_path(&path)).map_err(|e| e.to_string())
}

fn dataset_fidelity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (file, (pos, neg)) in [(ACPS250_FILE, ACPS250_COUNTS), (INDEPENDENT_FILE, INDEPENDENT_COUNTS)] {
        match load_standard(file) {
            Ok(d) => {
                let good = d.positive_count() == pos && d.negative_count() == neg;
                ok &= good;
                notes.push(format!(
                    "{file}: {} records ({}/{}), expected {} ({pos}/{neg})",
                    d.len(),
                    d.positive_count(),
                    d.negative_count(),
                    pos + neg
                ));
            }
            Err(e) => return Outcome::Missing(e),
        }
    }
    verdict(ok, notes.join("; "))
}

fn headline() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (file, spec, floor, target) in [
        (ACPS250_FILE, EmbeddingSpec::Ft(3), ACPS250_MIN_ACC, 92.50),
        (INDEPENDENT_FILE, EmbeddingSpec::Ft(2), INDEPENDENT_MIN_ACC, 96.15),
    ] {
        let data = match load_standard(file) {
            Ok(d) => d,
            Err(e) => return Outcome::Missing(e),
        };
        let start = Instant::now();
        let outcome = match run_experiment(&data, spec, Architecture::BiLstm, &ExperimentConfig::default()) {
            Ok(o) => o,
            Err(e) => return Outcome::Fail(format!("{file}: {e}")),
        };
        let acc = outcome.report.mean.as_ref().map_or(f64::NAN, |m| m.acc);
        ok &= acc >= floor;
        notes.push(format!(
            "{file} {spec}+BiLSTM achieved {acc:.2}% vs target {target:.2}% (floor {floor}%), {:.0}s",
            start.elapsed().as_secs_f64()
        ));
    }
    verdict(ok, notes.join("; "))
}

fn orderings() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for file in [ACPS250_FILE, INDEPENDENT_FILE] {
        let data = match load_standard(file) {
            Ok(d) => d,
            Err(e) => return Outcome::Missing(e),
        };
        let grid = match experiment_grid(&data, &GridKind::All.cells(), &ExperimentConfig::default()) {
            Ok(g) => g,
            Err(e) => return Outcome::Fail(format!("{file}: {e}")),
        };
        let acc = |spec: EmbeddingSpec, arch: Architecture| {
            grid.report(acpclass::eval::GridCell {
                embedding: spec,
                architecture: arch,
            })
            .and_then(|r| r.mean.as_ref())
            .map_or(f64::NAN, |m| m.acc)
        };
        for arch in Architecture::ALL {
            let ft4 = acc(EmbeddingSpec::Ft(4), arch);
            let good = ft4 < acc(EmbeddingSpec::Ft(2), arch) && ft4 < acc(EmbeddingSpec::Ft(3), arch);
            ok &= good;
            if !good {
                notes.push(format!("{file}: FT(4)+{} not below FT(2)/FT(3)", arch.label()));
            }
        }
        let specs = [
            EmbeddingSpec::Ws,
            EmbeddingSpec::Wc,
            EmbeddingSpec::Ft(2),
            EmbeddingSpec::Ft(3),
            EmbeddingSpec::Ft(4),
        ];
        let best_spec = specs
            .iter()
            .copied()
            .max_by(|a, b| {
                let best = |s: EmbeddingSpec| Architecture::ALL.iter().map(|&x| acc(s, x)).fold(f64::MIN, f64::max);
                best(*a).total_cmp(&best(*b))
            })
            .expect("non-empty");
        let winner = Architecture::ALL
            .iter()
            .copied()
            .max_by(|a, b| acc(best_spec, *a).total_cmp(&acc(best_spec, *b)))
            .expect("non-empty");
        ok &= winner == Architecture::BiLstm;
        notes.push(format!("{file}: best embedding {best_spec}, best architecture {}", winner.label()));
    }
    verdict(ok, notes.join("; "))
}

/// Full-size default models trained on all records, no validation split.
fn memorization() -> Outcome {
    let start = Instant::now();
    let data = peptide_dataset(&SynthConfig {
        per_class: MEMORIZE_RECORDS / 2,
        seed: 7,
        ..SynthConfig::default()
    });
    let spec = EmbeddingSpec::Ft(3);
    let tokens: Vec<Vec<String>> = data.sequences().iter().map(|s| tokenize_lenient(s, spec.k())).collect();
    let emb = match train_embedding(&tokens, &spec.apply(&EmbeddingConfig::default())) {
        Ok(e) => e,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let longest = tokens.iter().map(Vec::len).max().unwrap_or(1);
    let mut notes = Vec::new();
    let mut ok = true;
    for arch in Architecture::ALL {
        let cfg = ModelConfig {
            architecture: arch,
            ..ModelConfig::default()
        };
        let run = || -> acpclass::Result<Option<usize>> {
            let mut model = build_model(&cfg, &emb, longest)?;
            let fit = LabeledData::from_tokens(&model, &tokens, data.labels())?;
            let kind = model.head.default_loss();
            let mut adam = AdamState::new(AdamConfig::default());
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for epoch in 1..=MEMORIZE_MAX_EPOCHS {
                batch_loss(&mut model, &fit.indices, &fit.labels, kind, Mode::Train, true, &mut rng)?;
                adam.step(&mut model.parameters_mut())?;
                let probs = predict(&mut model, &fit.indices)?;
                let correct = probs
                    .iter()
                    .zip(&fit.labels)
                    .filter(|(p, l)| (**p >= 0.5) == l.is_positive())
                    .count();
                if correct == fit.len() {
                    return Ok(Some(epoch));
                }
            }
            Ok(None)
        };
        match run() {
            Ok(Some(epoch)) => notes.push(format!("{} at epoch {epoch}", arch.label())),
            Ok(None) => {
                ok = false;
                notes.push(format!("{} not within {MEMORIZE_MAX_EPOCHS}", arch.label()));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{}: {e}", arch.label()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok && secs < MEMORIZE_BUDGET_SECS,
        format!(
            "{MEMORIZE_RECORDS} records: {}; {secs:.1}s (budget {MEMORIZE_BUDGET_SECS}s)",
            notes.join(", ")
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["acpclass"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, out)
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable") {
            let p = entry.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("prefix").display().to_string();
                out.push((rel, std::fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let data = peptide_dataset(&SynthConfig {
        per_class: 30,
        seed: 3,
        ..SynthConfig::default()
    });
    let csv = root.join("data.csv");
    std::fs::write(&csv, dataset_to_csv(&data)).expect("write dataset");
    let config = root.join("run.toml");
    std::fs::write(&config, "[embedding]\ndim = 16\nepochs = 5\n[training]\nmax_epochs = 8\n").expect("write config");
    let input = root.join("input.txt");
    std::fs::write(&input, "KLAKLAKWF\nDEEDSNQG\nKL\n").expect("write input");

    let mut trees = Vec::new();
    let mut predictions = Vec::new();
    for attempt in 0..2 {
        let out = root.join(format!("out{attempt}"));
        let o = out.to_str().expect("utf-8 path").to_string();
        let grid_out = format!("{o}/grid");
        let data_arg = csv.to_str().expect("utf-8 path");
        let config_arg = config.to_str().expect("utf-8 path");
        let commands: [(&[&str], &str); 4] = [
            (&["embed"], &o),
            (&["train"], &o),
            (&["evaluate", "--runs", "2"], &o),
            (&["evaluate", "--runs", "1", "--grid", "word2vec"], &grid_out),
        ];
        for (cmd, dir) in commands {
            let mut args = cmd.to_vec();
            args.extend_from_slice(&["--dataset", data_arg, "--config", config_arg, "--seed", "11", "--out", dir]);
            let (code, _) = run_cli(&args);
            if code != 0 {
                return Outcome::Fail(format!("{args:?} exited {code}"));
            }
        }
        let (code, stdout) = run_cli(&["predict", "--model", &format!("{o}/model.acpm"), "--input", input.to_str().unwrap()]);
        if code != 0 {
            return Outcome::Fail(format!("predict exited {code}"));
        }
        predictions.push(stdout);
        trees.push(files_under(&out));
    }
    let names: Vec<&str> = trees[0].iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = trees[0]
        .iter()
        .zip(&trees[1])
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let ok = trees[0].len() == trees[1].len() && differing.is_empty() && predictions[0] == predictions[1];
    verdict(
        ok,
        format!(
            "{} files compared across reruns (embed, train, evaluate, grid, predict), {} differ{}",
            names.len(),
            differing.len(),
            if predictions[0] == predictions[1] { "" } else { "; predict output differs" }
        ),
    )
}

fn embedding_sanity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for mode in [EmbeddingMode::SkipGram, EmbeddingMode::Cbow, EmbeddingMode::FastText] {
        let (mut wins, mut trials) = (0usize, 0usize);
        for seed in 0..EMBEDDING_SEEDS {
            let corpus = cooccurrence_corpus(8, 200, seed);
            let cfg = EmbeddingConfig {
                mode,
                dim: 20,
                window: 2,
                epochs: 20,
                minn: 2,
                maxn: 3,
                seed,
                ..EmbeddingConfig::default()
            };
            let emb = match train_embedding(&corpus.sentences, &cfg) {
                Ok(e) => e,
                Err(e) => return Outcome::Fail(format!("{mode:?} seed {seed}: {e}")),
            };
            for (a, same, other) in corpus.triples() {
                let va = emb.vector(&a);
                let near = cosine(va.as_slice().unwrap(), emb.vector(&same).as_slice().unwrap());
                let far = cosine(va.as_slice().unwrap(), emb.vector(&other).as_slice().unwrap());
                trials += 1;
                wins += usize::from(near > far);
            }
        }
        let rate = wins as f64 / trials as f64;
        ok &= rate >= EMBEDDING_MIN_RATE;
        notes.push(format!("{} {:.1}% of {trials}", mode.as_str(), 100.0 * rate));
    }
    verdict(
        ok,
        format!("{} (threshold {:.0}%)", notes.join(", "), 100.0 * EMBEDDING_MIN_RATE),
    )
}

#[test]
fn acceptance() {
    let mut ledger = Ledger { lines: Vec::new() };
    ledger.record(1, "gradient correctness", gradients());
    ledger.record(2, "metric oracles", metric_oracles());
    ledger.record(3, "dataset fidelity", dataset_fidelity());
    ledger.record(4, "headline reproduction", headline());
    ledger.record(5, "qualitative orderings", orderings());
    ledger.record(6, "memorization capacity", memorization());
    ledger.record(7, "determinism", determinism());
    ledger.record(8, "embedding sanity", embedding_sanity());

    let require_data = std::env::var("ACP_REQUIRE_DATA").is_ok_and(|v| v == "1");
    let hard: Vec<String> = ledger
        .lines
        .iter()
        .filter(|(_, _, o)| matches!(o, Outcome::Fail(_)) || (require_data && matches!(o, Outcome::Missing(_))))
        .map(|(n, name, _)| format!("{n} ({name})"))
        .collect();
    let missing = ledger.lines.iter().filter(|(_, _, o)| matches!(o, Outcome::Missing(_))).count();
    println!(
        "summary: {} of {} criteria passed; {missing} not evaluated for lack of data",
        ledger.lines.iter().filter(|(_, _, o)| matches!(o, Outcome::Pass(_))).count(),
        ledger.lines.len()
    );
    assert!(hard.is_empty(), "failed criteria: {}", hard.join(", "));
}
