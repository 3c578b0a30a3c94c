//! Parameter groups, initialization and the four energy functions.
//!
//! All energies are squared L2 distances; lower means more plausible.

mod checkpoint;
mod scoring;

use ndarray::{Array2, ArrayView1};
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

pub use checkpoint::{
    load_checkpoint, read_matrix, save_checkpoint, write_matrix, Checkpoint, CheckpointManifest,
    DatasetRef, MatrixEntry, FORMAT_VERSION, MANIFEST_FILE, MATRIX_MAGIC,
};
pub use scoring::{score_composite, EntityScorer, ScoreMode};

/// Embedding dimensions and vocabulary sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub kappa: usize,
    pub ell: usize,
    pub entities: usize,
    pub relations: usize,
    pub types: usize,
}

/// Half-width of the uniform initialization interval for an `n`-row table of `m`-dim vectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitBound {
    /// `sqrt(6) / sqrt(m + n)`
    #[default]
    Glorot,
    /// `sqrt(6) / (m + n)`
    Literal,
}

impl InitBound {
    pub fn bound(self, m: usize, n: usize) -> f64 {
        let s = (m + n) as f64;
        match self {
            InitBound::Glorot => 6f64.sqrt() / s.sqrt(),
            InitBound::Literal => 6f64.sqrt() / s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    Entity,
    Type,
    RelEntity,
    RelType,
    Projection,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 5] = [
        ParamGroup::Entity,
        ParamGroup::Type,
        ParamGroup::RelEntity,
        ParamGroup::RelType,
        ParamGroup::Projection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Entity => "entity",
            ParamGroup::Type => "type",
            ParamGroup::RelEntity => "relation_entity",
            ParamGroup::RelType => "relation_type",
            ParamGroup::Projection => "projection",
        }
    }
}

/// Entity embeddings `E` (n_ent × κ), type embeddings `T` (n_type × ℓ), relation
/// translations in entity space (n_rel × κ) and type space (n_rel × ℓ), and the
/// ℓ × κ projection `M` from entity space into type space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub entities: Array2<f64>,
    pub types: Array2<f64>,
    pub rel_entity: Array2<f64>,
    pub rel_type: Array2<f64>,
    pub projection: Array2<f64>,
}

fn uniform_matrix<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Array2<f64> {
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite positive bound");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl ModelParams {
    /// Uniform initialization; each table uses its own dimension and row count.
    /// The projection uses m=ℓ, n=κ.
    pub fn init(dims: ModelDims, seed: u64, scheme: InitBound) -> Result<Self> {
        if dims.entities == 0 || dims.relations == 0 || dims.types == 0 {
            return Err(Error::Config(format!(
                "empty vocabulary: {} entities, {} relations, {} types",
                dims.entities, dims.relations, dims.types
            )));
        }
        if dims.ell == 0 || dims.ell >= dims.kappa {
            return Err(Error::Config(format!(
                "need 0 < ell < kappa, got ell={} kappa={}",
                dims.ell, dims.kappa
            )));
        }
        let mut rng = stream_rng(seed, Stream::Init);
        let (k, l) = (dims.kappa, dims.ell);
        let entities = uniform_matrix(dims.entities, k, scheme.bound(k, dims.entities), &mut rng);
        let types = uniform_matrix(dims.types, l, scheme.bound(l, dims.types), &mut rng);
        let rel_entity = uniform_matrix(dims.relations, k, scheme.bound(k, dims.relations), &mut rng);
        let rel_type = uniform_matrix(dims.relations, l, scheme.bound(l, dims.relations), &mut rng);
        let projection = uniform_matrix(l, k, scheme.bound(l, k), &mut rng);
        Ok(Self {
            entities,
            types,
            rel_entity,
            rel_type,
            projection,
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            kappa: self.entities.ncols(),
            ell: self.types.ncols(),
            entities: self.entities.nrows(),
            relations: self.rel_entity.nrows(),
            types: self.types.nrows(),
        }
    }

    pub fn group(&self, g: ParamGroup) -> &Array2<f64> {
        match g {
            ParamGroup::Entity => &self.entities,
            ParamGroup::Type => &self.types,
            ParamGroup::RelEntity => &self.rel_entity,
            ParamGroup::RelType => &self.rel_type,
            ParamGroup::Projection => &self.projection,
        }
    }

    pub fn group_mut(&mut self, g: ParamGroup) -> &mut Array2<f64> {
        match g {
            ParamGroup::Entity => &mut self.entities,
            ParamGroup::Type => &mut self.types,
            ParamGroup::RelEntity => &mut self.rel_entity,
            ParamGroup::RelType => &mut self.rel_type,
            ParamGroup::Projection => &mut self.projection,
        }
    }

    pub fn all_finite(&self) -> bool {
        ParamGroup::ALL
            .iter()
            .all(|&g| self.group(g).iter().all(|x| x.is_finite()))
    }

    /// `M · E[e]`
    pub fn project(&self, e: u32) -> Vec<f64> {
        let ent = self.entities.row(e as usize);
        self.projection
            .rows()
            .into_iter()
            .map(|m_row| dot(m_row, ent))
            .collect()
    }

    /// `‖E[e] + R⋆[r] − E[ẽ]‖²`
    pub fn score_transe(&self, head: u32, rel: u32, tail: u32) -> f64 {
        let h = self.entities.row(head as usize);
        let r = self.rel_entity.row(rel as usize);
        let t = self.entities.row(tail as usize);
        translation_sq(h, r, t)
    }

    /// `‖M·E[e] − T[t]‖²`
    pub fn score_e2t(&self, entity: u32, ty: u32) -> f64 {
        let p = self.project(entity);
        sq_dist(&p, self.types.row(ty as usize))
    }

    /// `‖T[t_h] + R∘[r] − T[t_t]‖²`
    pub fn score_trt(&self, head_type: u32, rel: u32, tail_type: u32) -> f64 {
        let h = self.types.row(head_type as usize);
        let r = self.rel_type.row(rel as usize);
        let t = self.types.row(tail_type as usize);
        translation_sq(h, r, t)
    }

    /// Rescales each entity row to unit L2 norm. An all-zero row is redrawn from
    /// `U(−reinit_bound, reinit_bound)` first. Returns how many rows were redrawn.
    pub fn normalize_entities<R: Rng>(&mut self, rng: &mut R, reinit_bound: f64) -> usize {
        let mut redrawn = 0;
        for (i, mut row) in self.entities.rows_mut().into_iter().enumerate() {
            let mut norm = row.dot(&row).sqrt();
            while norm == 0.0 {
                log::warn!("entity row {i} collapsed to zero; reinitializing");
                let dist = Uniform::new_inclusive(-reinit_bound, reinit_bound)
                    .expect("finite positive bound");
                row.mapv_inplace(|_| dist.sample(rng));
                norm = row.dot(&row).sqrt();
                redrawn += 1;
            }
            row.mapv_inplace(|x| x / norm);
        }
        redrawn
    }
}

pub(crate) fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn translation_sq(h: ArrayView1<f64>, r: ArrayView1<f64>, t: ArrayView1<f64>) -> f64 {
    h.iter()
        .zip(r.iter())
        .zip(t.iter())
        .map(|((h, r), t)| {
            let d = h + r - t;
            d * d
        })
        .sum()
}
