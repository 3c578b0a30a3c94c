//! Checkpoint directory layout:
//!
//! ```text
//! manifest.json                  dims, vocab sizes, config, format version
//! vocab_{entity,relation,type}.tsv
//! {entity,type,relation_entity,relation_type,projection}.bin
//! ```
//!
//! Matrix files carry a 24-byte header (`CONEMAT1`, rows and cols as u64 LE)
//! followed by row-major f32 LE values. Parameters are trained in f64 and rounded
//! to f32 on save.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ModelParams, ParamGroup};
use crate::config::TrainConfig;
use crate::data::{KbSizes, Vocabs};
use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 8] = b"CONEMAT1";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

/// Where the training data came from, with SHA-256 digests of its files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub dir: String,
    pub sha256: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub kappa: usize,
    pub ell: usize,
    pub entities: usize,
    pub relations: usize,
    pub types: usize,
    pub config: TrainConfig,
    pub matrices: Vec<MatrixEntry>,
    #[serde(default)]
    pub dataset: Option<DatasetRef>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub config: TrainConfig,
    pub vocabs: Vocabs,
    pub manifest: CheckpointManifest,
}

fn file_name(g: ParamGroup) -> String {
    format!("{}.bin", g.name())
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * m.len());
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for &x in m.iter() {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::checkpoint(path, "truncated header"));
    }
    if &bytes[..8] != MATRIX_MAGIC {
        return Err(Error::checkpoint(path, "bad magic bytes"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let (rows, cols) = (word(8) as usize, word(16) as usize);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::checkpoint(path, "header dimensions overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(Error::checkpoint(
            path,
            format!(
                "truncated or oversized body: {rows}x{cols} needs {expected} bytes, found {}",
                body.len()
            ),
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("shape checked"))
}

pub fn save_checkpoint(
    dir: &Path,
    params: &ModelParams,
    config: &TrainConfig,
    vocabs: &Vocabs,
    dataset: Option<DatasetRef>,
) -> Result<CheckpointManifest> {
    let dims = params.dims();
    if vocabs.sizes()
        != (KbSizes {
            entities: dims.entities,
            relations: dims.relations,
            types: dims.types,
        })
    {
        return Err(Error::Config(
            "vocabulary sizes do not match parameter shapes".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut matrices = Vec::new();
    for g in ParamGroup::ALL {
        let m = params.group(g);
        let file = file_name(g);
        write_matrix(&dir.join(&file), m)?;
        matrices.push(MatrixEntry {
            name: g.name().to_owned(),
            file,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    vocabs.write_dir(dir)?;
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        kappa: dims.kappa,
        ell: dims.ell,
        entities: dims.entities,
        relations: dims.relations,
        types: dims.types,
        config: config.clone(),
        matrices,
        dataset,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)
        .map_err(|e| Error::checkpoint(&path, format!("bad manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::checkpoint(
            &path,
            format!(
                "format version {} not supported (expected {FORMAT_VERSION})",
                manifest.format_version
            ),
        ));
    }

    let expected_shape = |g: ParamGroup| match g {
        ParamGroup::Entity => (manifest.entities, manifest.kappa),
        ParamGroup::Type => (manifest.types, manifest.ell),
        ParamGroup::RelEntity => (manifest.relations, manifest.kappa),
        ParamGroup::RelType => (manifest.relations, manifest.ell),
        ParamGroup::Projection => (manifest.ell, manifest.kappa),
    };
    let mut groups = Vec::with_capacity(5);
    for g in ParamGroup::ALL {
        let entry = manifest
            .matrices
            .iter()
            .find(|m| m.name == g.name())
            .ok_or_else(|| Error::checkpoint(&path, format!("manifest lacks matrix `{}`", g.name())))?;
        let (rows, cols) = (entry.rows, entry.cols);
        if (rows, cols) != expected_shape(g) {
            let (er, ec) = expected_shape(g);
            return Err(Error::DimensionMismatch {
                matrix: g.name().to_owned(),
                rows: er,
                cols: ec,
                found_rows: rows,
                found_cols: cols,
            });
        }
        let m = read_matrix(&dir.join(&entry.file))?;
        if m.dim() != (rows, cols) {
            return Err(Error::DimensionMismatch {
                matrix: g.name().to_owned(),
                rows,
                cols,
                found_rows: m.nrows(),
                found_cols: m.ncols(),
            });
        }
        groups.push(m);
    }
    let mut it = groups.into_iter();
    let mut next = || it.next().expect("five groups");
    let params = ModelParams {
        entities: next(),
        types: next(),
        rel_entity: next(),
        rel_type: next(),
        projection: next(),
    };

    let vocabs = Vocabs::read_dir(dir)?;
    let sizes = vocabs.sizes();
    if (sizes.entities, sizes.relations, sizes.types)
        != (manifest.entities, manifest.relations, manifest.types)
    {
        return Err(Error::checkpoint(
            dir,
            format!(
                "vocabulary sizes {}/{}/{} disagree with manifest {}/{}/{}",
                sizes.entities,
                sizes.relations,
                sizes.types,
                manifest.entities,
                manifest.relations,
                manifest.types
            ),
        ));
    }

    Ok(Checkpoint {
        params,
        config: manifest.config.clone(),
        vocabs,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Vocab;
    use crate::model::{InitBound, ModelDims};

    fn fixture() -> (ModelParams, TrainConfig, Vocabs) {
        let d = ModelDims {
            kappa: 6,
            ell: 3,
            entities: 5,
            relations: 2,
            types: 4,
        };
        let params = ModelParams::init(d, 17, InitBound::Glorot).unwrap();
        let vocabs = Vocabs {
            entities: Vocab::from_names((0..5).map(|i| format!("e{i}"))).unwrap(),
            relations: Vocab::from_names(["r0", "r1"]).unwrap(),
            types: Vocab::from_names((0..4).map(|i| format!("/t/{i}"))).unwrap(),
        };
        let config = TrainConfig { kappa: 6, ell: 3, ..TrainConfig::default() };
        (params, config, vocabs)
    }

    fn to_f32_bits(m: &Array2<f64>) -> Vec<u32> {
        m.iter().map(|&x| (x as f32).to_bits()).collect()
    }

    #[test]
    fn round_trip_is_bitwise_at_f32() {
        let (params, config, vocabs) = fixture();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params, &config, &vocabs, None).unwrap();
        let ck = load_checkpoint(dir.path()).unwrap();
        for g in ParamGroup::ALL {
            assert_eq!(to_f32_bits(ck.params.group(g)), to_f32_bits(params.group(g)));
        }
        assert_eq!(ck.config, config);
        assert_eq!(ck.vocabs, vocabs);

        // loaded values are exactly representable, so a second trip is the identity
        let dir2 = tempfile::tempdir().unwrap();
        save_checkpoint(dir2.path(), &ck.params, &ck.config, &ck.vocabs, None).unwrap();
        assert_eq!(load_checkpoint(dir2.path()).unwrap().params, ck.params);
    }

    #[test]
    fn corrupted_magic_fails() {
        let (params, config, vocabs) = fixture();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params, &config, &vocabs, None).unwrap();
        let p = dir.path().join("type.bin");
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] = b'X';
        fs::write(&p, bytes).unwrap();
        match load_checkpoint(dir.path()) {
            Err(Error::Checkpoint { message, path }) => {
                assert!(message.contains("magic"));
                assert!(path.ends_with("type.bin"));
            }
            other => panic!("expected checkpoint error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_matrix_fails() {
        let (params, config, vocabs) = fixture();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params, &config, &vocabs, None).unwrap();
        let p = dir.path().join("entity.bin");
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::Checkpoint { .. })));
    }

    #[test]
    fn edited_manifest_dims_name_the_matrix() {
        let (params, config, vocabs) = fixture();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params, &config, &vocabs, None).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let mut m: CheckpointManifest =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let entry = m.matrices.iter_mut().find(|e| e.name == "projection").unwrap();
        entry.cols = 7;
        m.kappa = 7;
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        match load_checkpoint(dir.path()) {
            Err(Error::DimensionMismatch { matrix, .. }) => assert_eq!(matrix, "entity"),
            other => panic!("expected dimension error, got {other:?}"),
        }

        // only the projection entry disagrees with its file
        let mut m: CheckpointManifest =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        m.kappa = 6;
        m.matrices.iter_mut().find(|e| e.name == "projection").unwrap().cols = 6;
        m.matrices.iter_mut().find(|e| e.name == "relation_type").unwrap().rows = 3;
        m.relations = 3;
        m.matrices.iter_mut().find(|e| e.name == "relation_entity").unwrap().rows = 3;
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        match load_checkpoint(dir.path()) {
            Err(Error::DimensionMismatch { matrix, found_rows, .. }) => {
                assert_eq!(matrix, "relation_entity");
                assert_eq!(found_rows, 2);
            }
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_fails() {
        let (params, config, vocabs) = fixture();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params, &config, &vocabs, None).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
        fs::write(&path, text).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::Checkpoint { .. })));
    }

    #[test]
    fn header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        write_matrix(&p, &m).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 24 + 6 * 4);
        assert_eq!(&bytes[..8], b"CONEMAT1");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[44..48].try_into().unwrap()), 6.5);
        assert_eq!(read_matrix(&p).unwrap(), m);
    }
}
