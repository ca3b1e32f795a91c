use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dataset, Label, PeptideRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Fasta,
}

impl DatasetFormat {
    /// Guess from the file extension; anything that is not FASTA-like is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("fasta" | "fa" | "faa" | "fas") => DatasetFormat::Fasta,
            _ => DatasetFormat::Csv,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DatasetFormat::Csv),
            "fasta" => Ok(DatasetFormat::Fasta),
            other => Err(Error::Config(format!("unknown dataset format '{other}'"))),
        }
    }
}

/// Environment variable naming the directory that holds the benchmark datasets.
pub const DATA_DIR_ENV: &str = "ACP_DATA_DIR";
pub const ACPS250_FILE: &str = "ACPs250.csv";
pub const INDEPENDENT_FILE: &str = "Independent.csv";

/// `$ACP_DATA_DIR/<file>` when the variable is set, otherwise `data/<file>`.
pub fn standard_dataset_path(file: &str) -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
        .join(file)
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    match format {
        DatasetFormat::Csv => parse_csv(&name, &text),
        DatasetFormat::Fasta => parse_fasta(&name, &text),
    }
}

/// Parses the `sample,content,label` layout. Row numbers in errors count data rows from 1.
/// `sample,content,label` text readable by [`parse_csv`].
pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let mut out = String::from("sample,content,label\n");
    for r in dataset.records() {
        out.push_str(&format!("{},{},{}\n", r.id, r.sequence, r.label.as_u8()));
    }
    out
}

pub fn parse_csv(name: &str, text: &str) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    let mut row = 0usize;
    for result in reader.records() {
        let fields = result.map_err(|e| Error::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row == 0 && is_header(&fields) {
            row += 1;
            continue;
        }
        if row == 0 {
            // no header line: first line is data row 1
            row = 1;
        }
        if fields.len() != 3 {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let id = fields[0].parse::<usize>().map_err(|_| Error::MalformedRow {
            row,
            message: format!("sample id '{}' is not a positive integer", &fields[0]),
        })?;
        if id == 0 {
            return Err(Error::MalformedRow {
                row,
                message: "sample id must be positive".into(),
            });
        }
        let label = parse_label(&fields[2]).ok_or_else(|| Error::MalformedRow {
            row,
            message: format!("label '{}' is not 0 or 1", &fields[2]),
        })?;
        records.push(PeptideRecord::new(id, &fields[1], label)?);
        row += 1;
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    Ok(Dataset::new(name, records))
}

fn is_header(fields: &csv::StringRecord) -> bool {
    fields.len() == 3
        && fields[0].eq_ignore_ascii_case("sample")
        && fields[1].eq_ignore_ascii_case("content")
        && fields[2].eq_ignore_ascii_case("label")
}

fn parse_label(s: &str) -> Option<Label> {
    s.parse::<u8>().ok().and_then(Label::from_u8)
}

/// Parses `>id|label` headers followed by one or more sequence lines.
pub fn parse_fasta(name: &str, text: &str) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut current: Option<(usize, Label, String)> = None;
    let mut row = 0usize;

    let mut flush = |entry: Option<(usize, Label, String)>, row: usize| -> Result<()> {
        if let Some((id, label, seq)) = entry {
            if seq.is_empty() {
                return Err(Error::MalformedRow {
                    row,
                    message: format!("record {id} has no sequence"),
                });
            }
            records.push(PeptideRecord::new(id, seq, label)?);
        }
        Ok(())
    };

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            flush(current.take(), row)?;
            row += 1;
            let mut parts = header.split('|');
            let id = parts
                .next()
                .and_then(|s| s.trim().parse::<usize>().ok())
                .filter(|&id| id > 0)
                .ok_or_else(|| Error::MalformedRow {
                    row,
                    message: format!("header '{header}' must start with a positive integer id"),
                })?;
            let label = parts
                .next()
                .and_then(|s| parse_label(s.trim()))
                .ok_or_else(|| Error::MalformedRow {
                    row,
                    message: format!("header '{header}' must carry a 0/1 label after '|'"),
                })?;
            current = Some((id, label, String::new()));
        } else {
            match current.as_mut() {
                Some((_, _, seq)) => seq.push_str(line),
                None => {
                    return Err(Error::MalformedRow {
                        row: row.max(1),
                        message: "sequence line before any '>' header".into(),
                    })
                }
            }
        }
    }
    flush(current.take(), row)?;
    if records.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    Ok(Dataset::new(name, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_csv() {
        let ds = parse_csv("one", "1,KWK,1\n").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.positive_count(), 1);
        assert_eq!(ds.negative_count(), 0);
    }

    #[test]
    fn header_is_skipped_and_order_kept() {
        let ds = parse_csv(
            "t",
            "sample,content,label\n1,KWKLFFKKIEKVGQNIRDGIIKAGPAVA,0\n2,FLPAIVGAAAKFLPKIFCAISKKC,0\n3,GALRGCWTKSYPPKPKCK,1\n",
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.records()[0].sequence, "KWKLFFKKIEKVGQNIRDGIIKAGPAVA");
        assert_eq!(ds.records()[2].id, 3);
        assert_eq!(ds.positive_count() + ds.negative_count(), ds.len());
    }

    #[test]
    fn malformed_row_is_named() {
        let err = parse_csv("t", "sample,content,label\n1,KWK,1\n2,KWK\n").unwrap_err();
        match err {
            Error::MalformedRow { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_csv("t", "sample,content,label\n1,KWK,2\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 1, .. }));
    }

    #[test]
    fn invalid_residue_names_record_and_char() {
        let err = parse_csv("t", "sample,content,label\n7,KW1K,1\n").unwrap_err();
        match err {
            Error::InvalidResidue { id, ch } => {
                assert_eq!(id, 7);
                assert_eq!(ch, '1');
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rare_letters_are_accepted() {
        let ds = parse_csv("t", "5,KXBZUOJ,0\n").unwrap();
        assert_eq!(ds.records()[0].sequence, "KXBZUOJ");
    }

    #[test]
    fn empty_inputs_error() {
        assert!(matches!(parse_csv("e", ""), Err(Error::EmptyDataset(_))));
        assert!(matches!(
            parse_csv("e", "sample,content,label\n"),
            Err(Error::EmptyDataset(_))
        ));
        assert!(matches!(parse_fasta("e", "\n"), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn fasta_multiline() {
        let ds = parse_fasta("f", ">1|1\nKWKL\nFFKK\n>2|0\nGALR\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records()[0].sequence, "KWKLFFKK");
        assert_eq!(ds.records()[1].label, Label::Negative);
        assert!(parse_fasta("f", ">x|1\nKW\n").is_err());
        assert!(parse_fasta("f", "KW\n").is_err());
    }

    #[test]
    fn too_long_sequence_rejected() {
        let long = "A".repeat(201);
        let err = parse_csv("t", &format!("1,{long},1\n")).unwrap_err();
        assert!(matches!(err, Error::InvalidLength { id: 1, len: 201 }));
    }
}
