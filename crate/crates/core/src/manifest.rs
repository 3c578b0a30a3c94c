//! Run provenance: content hashes, loss history and timing for one training run.
//!
//! The checkpoint's own `manifest.json` is a pure function of the inputs, so its
//! digest identifies a model; reports carry that digest. Wall-clock data lives
//! only in `run_manifest.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::TrainConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{DatasetRef, MANIFEST_FILE};
use crate::train::EpochLoss;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const LOSS_HISTORY_FILE: &str = "loss_history.csv";

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digest of a checkpoint's `manifest.json`.
pub fn checkpoint_digest(checkpoint_dir: &Path) -> Result<String> {
    sha256_file(&checkpoint_dir.join(MANIFEST_FILE))
}

/// Hashes every file of a prepared directory.
pub fn dataset_ref(dir: &Path) -> Result<DatasetRef> {
    let mut sha256 = BTreeMap::new();
    for path in Dataset::files(dir) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        sha256.insert(name, sha256_file(&path)?);
    }
    Ok(DatasetRef {
        dir: dir.display().to_string(),
        sha256,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: TrainConfig,
    pub seed: u64,
    pub parallel: bool,
    pub dataset: DatasetRef,
    pub checkpoint_manifest_sha256: String,
    pub started_unix_secs: u64,
    pub wall_clock_secs: f64,
    pub loss_history: Vec<EpochLoss>,
}

impl RunManifest {
    pub fn write(&self, checkpoint_dir: &Path) -> Result<()> {
        let path = checkpoint_dir.join(RUN_MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("run manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn write_loss_history(path: &Path, history: &[EpochLoss]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "epoch,j1,j2,j3")?;
        for l in history {
            writeln!(out, "{},{},{},{}", l.epoch, l.j1, l.j2, l.j3)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
