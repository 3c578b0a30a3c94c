use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::data::{EntityId, KnowledgeBase, TypeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Projection distance only.
    E2t,
    /// λ-blend of the projection distance with neighborhood type-triple energies.
    Composite,
}

impl std::str::FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e2t" => Ok(ScoreMode::E2t),
            "composite" => Ok(ScoreMode::Composite),
            _ => Err(format!("unknown mode `{s}` (expected e2t or composite)")),
        }
    }
}

/// Mean of `‖x + c_i‖²` over a fixed multiset of offsets `c_i`, evaluated in O(ℓ)
/// per query through `‖x‖² + 2·x·mean(c) + mean(‖c‖²)`.
#[derive(Debug, Clone)]
struct OffsetMean {
    mean: Vec<f64>,
    mean_sq: f64,
}

impl OffsetMean {
    fn from_offsets(ell: usize, offsets: impl Iterator<Item = Vec<f64>>) -> Option<Self> {
        let mut sum = vec![0.0; ell];
        let mut sum_sq = 0.0;
        let mut n = 0usize;
        for c in offsets {
            for (s, x) in sum.iter_mut().zip(&c) {
                *s += x;
            }
            sum_sq += c.iter().map(|x| x * x).sum::<f64>();
            n += 1;
        }
        (n > 0).then(|| {
            let n = n as f64;
            Self {
                mean: sum.into_iter().map(|s| s / n).collect(),
                mean_sq: sum_sq / n,
            }
        })
    }

    fn eval(&self, x: ArrayView1<f64>) -> f64 {
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let xc: f64 = x.iter().zip(&self.mean).map(|(a, b)| a * b).sum();
        (xx + 2.0 * xc + self.mean_sq).max(0.0)
    }
}

/// Scores every candidate type for one entity, sharing the per-entity work
/// (projection and neighborhood aggregates) across candidates.
///
/// The neighborhood of `e` is taken per triple: each out-edge `(r, ẽ)` with each
/// training type `t̃` of `ẽ` contributes `S_trt(t, r, t̃)`, each in-edge `(r, ē)` with
/// each type `t̄` of `ē` contributes `S_trt(t̄, r, t)`, and the two sides are averaged
/// separately. An empty side contributes 0; if both are empty the score is the
/// unweighted projection distance.
#[derive(Debug, Clone)]
pub struct EntityScorer<'a> {
    params: &'a ModelParams,
    projected: Vec<f64>,
    lambda: f64,
    as_head: Option<OffsetMean>,
    as_tail: Option<OffsetMean>,
}

impl<'a> EntityScorer<'a> {
    pub fn new(
        params: &'a ModelParams,
        kb: &KnowledgeBase,
        entity: EntityId,
        lambda: f64,
        mode: ScoreMode,
    ) -> Self {
        let projected = params.project(entity);
        let (as_head, as_tail) = match mode {
            ScoreMode::E2t => (None, None),
            ScoreMode::Composite => {
                let ell = params.types.ncols();
                let rel = |r: u32| params.rel_type.row(r as usize);
                let ty = |t: u32| params.types.row(t as usize);
                // S_trt(t, r, t̃) = ‖T[t] + (R∘[r] − T[t̃])‖²
                let heads = kb.out_edges(entity).iter().flat_map(|&(r, tail)| {
                    kb.types_of(tail).iter().map(move |&tt| {
                        rel(r).iter().zip(ty(tt).iter()).map(|(a, b)| a - b).collect()
                    })
                });
                // S_trt(t̄, r, t) = ‖T[t] − (T[t̄] + R∘[r])‖²
                let tails = kb.in_edges(entity).iter().flat_map(|&(r, head)| {
                    kb.types_of(head).iter().map(move |&ht| {
                        rel(r).iter().zip(ty(ht).iter()).map(|(a, b)| -(a + b)).collect()
                    })
                });
                (
                    OffsetMean::from_offsets(ell, heads),
                    OffsetMean::from_offsets(ell, tails),
                )
            }
        };
        Self {
            params,
            projected,
            lambda,
            as_head,
            as_tail,
        }
    }

    /// Whether any type-triple term is active for this entity.
    pub fn has_neighborhood(&self) -> bool {
        self.as_head.is_some() || self.as_tail.is_some()
    }

    pub fn e2t(&self, ty: TypeId) -> f64 {
        let t = self.params.types.row(ty as usize);
        self.projected
            .iter()
            .zip(t.iter())
            .map(|(p, t)| (p - t) * (p - t))
            .sum()
    }

    pub fn score(&self, ty: TypeId) -> f64 {
        let e2t = self.e2t(ty);
        if !self.has_neighborhood() {
            return e2t;
        }
        let x = self.params.types.row(ty as usize);
        let trt = self.as_head.as_ref().map_or(0.0, |m| m.eval(x))
            + self.as_tail.as_ref().map_or(0.0, |m| m.eval(x));
        self.lambda * e2t + (1.0 - self.lambda) * trt
    }

    /// Scores for all types, indexed by type id.
    pub fn score_all(&self) -> Vec<f64> {
        (0..self.params.types.nrows() as u32)
            .map(|t| self.score(t))
            .collect()
    }
}

/// `λ·S_e2t(e,t) + (1−λ)·(mean_P S_trt + mean_Q S_trt)`; see [`EntityScorer`].
pub fn score_composite(
    params: &ModelParams,
    kb: &KnowledgeBase,
    entity: EntityId,
    ty: TypeId,
    lambda: f64,
) -> f64 {
    EntityScorer::new(params, kb, entity, lambda, ScoreMode::Composite).score(ty)
}
