use std::path::PathBuf;

use clap::ValueEnum;

use crate::eval::{EmbeddingSpec, GridCell, GridKind};
use crate::models::Architecture;
use crate::seqdata::{standard_dataset_path, ACPS250_FILE, INDEPENDENT_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "acps250-ft3-bilstm")]
    Acps250Ft3Bilstm,
    #[value(name = "independent-ft2-bilstm")]
    IndependentFt2Bilstm,
    #[value(name = "word2vec-grids")]
    Word2vecGrids,
    #[value(name = "fasttext-grids")]
    FasttextGrids,
}

/// One dataset's share of a preset.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetJob {
    Cell {
        dataset: PathBuf,
        cell: GridCell,
        /// Reference mean test accuracy in percent.
        target_acc: f64,
    },
    Grid {
        dataset: PathBuf,
        grid: GridKind,
    },
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Acps250Ft3Bilstm => "acps250-ft3-bilstm",
            Preset::IndependentFt2Bilstm => "independent-ft2-bilstm",
            Preset::Word2vecGrids => "word2vec-grids",
            Preset::FasttextGrids => "fasttext-grids",
        }
    }

    /// Jobs with the standard dataset locations; `dataset` replaces the path of a
    /// single-dataset preset.
    pub fn jobs(self, dataset: Option<PathBuf>) -> Vec<PresetJob> {
        let acps = || standard_dataset_path(ACPS250_FILE);
        let indep = || standard_dataset_path(INDEPENDENT_FILE);
        let cell = |embedding, architecture| GridCell {
            embedding,
            architecture,
        };
        match self {
            Preset::Acps250Ft3Bilstm => vec![PresetJob::Cell {
                dataset: dataset.unwrap_or_else(acps),
                cell: cell(EmbeddingSpec::Ft(3), Architecture::BiLstm),
                target_acc: 92.50,
            }],
            Preset::IndependentFt2Bilstm => vec![PresetJob::Cell {
                dataset: dataset.unwrap_or_else(indep),
                cell: cell(EmbeddingSpec::Ft(2), Architecture::BiLstm),
                target_acc: 96.15,
            }],
            Preset::Word2vecGrids | Preset::FasttextGrids => {
                let grid = if self == Preset::Word2vecGrids {
                    GridKind::Word2Vec
                } else {
                    GridKind::FastText
                };
                vec![
                    PresetJob::Grid { dataset: acps(), grid },
                    PresetJob::Grid { dataset: indep(), grid },
                ]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_targets() {
        let t = |p: Preset| match &p.jobs(None)[0] {
            PresetJob::Cell { target_acc, cell, .. } => (*target_acc, cell.label()),
            PresetJob::Grid { .. } => unreachable!(),
        };
        assert_eq!(t(Preset::Acps250Ft3Bilstm), (92.50, "FT(3)+BiLSTM".to_string()));
        assert_eq!(t(Preset::IndependentFt2Bilstm), (96.15, "FT(2)+BiLSTM".to_string()));
        assert_eq!(Preset::FasttextGrids.jobs(None).len(), 2);
        assert_eq!(Preset::Word2vecGrids.name(), "word2vec-grids");
    }
}
