//! Repeated holdout over the Word2Vec grid (WS/WC x CNN/LSTM/BiLSTM) on synthetic
//! peptides, rendered as a results table.

use acpclass::eval::{experiment_grid, render_grid, ExperimentConfig, GridKind};
use acpclass::synth::{peptide_dataset, SynthConfig};

fn main() -> acpclass::Result<()> {
    let data = peptide_dataset(&SynthConfig {
        signal: 0.35,
        ..SynthConfig::default()
    });
    let mut cfg = ExperimentConfig::default();
    cfg.eval.n_runs = 3;
    cfg.embedding.dim = 24;
    cfg.embedding.epochs = 10;
    let grid = experiment_grid(&data, &GridKind::Word2Vec.cells(), &cfg)?;
    print!("{}", render_grid(&grid));
    Ok(())
}
