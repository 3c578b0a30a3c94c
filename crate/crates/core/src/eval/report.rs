use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifyReport, PairRank, PrPoint, RankReport};
use crate::config::TrainConfig;
use crate::data::Vocabs;
use crate::error::{Error, Result};
use crate::model::ScoreMode;

/// Contents of `typing_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypingFile {
    pub mode: ScoreMode,
    pub lambda: f64,
    pub filtered: bool,
    pub metrics: RankReport,
    pub checkpoint_manifest_sha256: String,
    pub config: TrainConfig,
}

/// Contents of `classify_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyFile {
    pub mode: ScoreMode,
    pub lambda: f64,
    pub valid_pairs: usize,
    pub test_pairs: usize,
    pub classification: ClassifyReport,
    pub checkpoint_manifest_sha256: String,
    pub config: TrainConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Evaluation(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `entity<TAB>true_type<TAB>rank`, one line per evaluated pair.
pub fn write_ranks_tsv(path: &Path, ranks: &[PairRank], vocabs: &Vocabs) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for r in ranks {
            let e = vocabs.entities.name(r.entity).unwrap_or("?");
            let t = vocabs.types.name(r.ty).unwrap_or("?");
            writeln!(out, "{e}\t{t}\t{}", r.rank)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

pub fn read_ranks_tsv(path: &Path) -> Result<Vec<(String, String, u32)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            message,
        };
        let mut f = line.split('\t');
        match (f.next(), f.next(), f.next(), f.next()) {
            (Some(e), Some(t), Some(r), None) => {
                let rank = r.parse().map_err(|_| parse_err(format!("bad rank `{r}`")))?;
                rows.push((e.to_owned(), t.to_owned(), rank));
            }
            _ => return Err(parse_err("expected 3 tab-separated fields".into())),
        }
    }
    Ok(rows)
}

/// `threshold<TAB>precision<TAB>recall` with a header line.
pub fn write_pr_curve(path: &Path, points: &[PrPoint]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "threshold\tprecision\trecall")?;
        for p in points {
            writeln!(out, "{}\t{}\t{}", p.threshold, p.precision, p.recall)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
