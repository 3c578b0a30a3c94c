//! Pairwise margin objectives and their analytic gradients.
//!
//! For an active pair (hinge > 0) the gradient of `margin + S(pos) − S(neg)` is
//! collected per touched row and applied with one Adagrad step per row. Each
//! objective only ever produces gradients for the groups it is allowed to move:
//!
//! | objective | energy                | updated groups       |
//! |-----------|-----------------------|----------------------|
//! | J1        | `‖e + r⋆ − ẽ‖²`       | entity, rel (entity) |
//! | J2        | `‖M e − t‖²`          | type, projection     |
//! | J3        | `‖t_h + r∘ − t_t‖²`   | rel (type)           |

use ndarray::Array2;
use rayon::prelude::*;

use super::adagrad::{adagrad_update, AdagradState};
use super::sampling::Batch;
use crate::data::{Triple, TypeAssertion, TypeTriple};
use crate::model::{ModelParams, ParamGroup};

pub fn hinge(margin: f64, s_pos: f64, s_neg: f64) -> f64 {
    (margin + s_pos - s_neg).max(0.0)
}

/// Gradient of one pair's loss, restricted to the rows it touches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairGradient {
    pub rows: Vec<(ParamGroup, usize, Vec<f64>)>,
    /// Dense gradient for the projection matrix, when touched.
    pub projection: Option<Array2<f64>>,
}

impl PairGradient {
    fn add_row(&mut self, group: ParamGroup, row: u32, scale: f64, v: &[f64]) {
        let row = row as usize;
        let slot = match self.rows.iter().position(|(g, r, _)| *g == group && *r == row) {
            Some(i) => &mut self.rows[i].2,
            None => {
                self.rows.push((group, row, vec![0.0; v.len()]));
                &mut self.rows.last_mut().unwrap().2
            }
        };
        for (s, x) in slot.iter_mut().zip(v) {
            *s += scale * x;
        }
    }

    /// `projection += scale · d · xᵀ`
    fn add_outer(&mut self, scale: f64, d: &[f64], x: &[f64]) {
        let m = self
            .projection
            .get_or_insert_with(|| Array2::zeros((d.len(), x.len())));
        for (i, di) in d.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                m[[i, j]] += scale * di * xj;
            }
        }
    }

    pub fn apply(&self, params: &mut ModelParams, ada: &mut AdagradState, alpha: f64) {
        let eps = ada.epsilon;
        for (group, row, grad) in &self.rows {
            let mut p = params.group_mut(*group).row_mut(*row);
            let mut a = ada.group_mut(*group).row_mut(*row);
            adagrad_update(
                p.as_slice_mut().expect("row-major"),
                a.as_slice_mut().expect("row-major"),
                grad,
                alpha,
                eps,
            );
        }
        if let Some(g) = &self.projection {
            adagrad_update(
                params.projection.as_slice_mut().expect("row-major"),
                ada.projection.as_slice_mut().expect("row-major"),
                g.as_slice().expect("row-major"),
                alpha,
                eps,
            );
        }
    }
}

fn residual(a: &[f64], b: &[f64], c: &[f64], sign_b: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((a, b), c)| a + sign_b * b - c)
        .collect()
}

fn row(m: &Array2<f64>, i: u32) -> &[f64] {
    m.row(i as usize).to_slice().expect("row-major")
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// A margin objective over one record type.
pub trait Objective: Sync {
    type Record: Copy + Send + Sync;
    const NAME: &'static str;

    fn energy(&self, params: &ModelParams, r: &Self::Record) -> f64;

    /// Hinge loss and, when active, its gradient.
    fn pair(
        &self,
        params: &ModelParams,
        pos: &Self::Record,
        neg: &Self::Record,
    ) -> (f64, Option<PairGradient>);
}

/// TransE on triple facts.
#[derive(Debug, Clone, Copy)]
pub struct TripleObjective {
    pub margin: f64,
}

impl Objective for TripleObjective {
    type Record = Triple;
    const NAME: &'static str = "J1";

    fn energy(&self, p: &ModelParams, t: &Triple) -> f64 {
        p.score_transe(t.head, t.rel, t.tail)
    }

    fn pair(&self, p: &ModelParams, pos: &Triple, neg: &Triple) -> (f64, Option<PairGradient>) {
        let d_pos = residual(
            row(&p.entities, pos.head),
            row(&p.rel_entity, pos.rel),
            row(&p.entities, pos.tail),
            1.0,
        );
        let d_neg = residual(
            row(&p.entities, neg.head),
            row(&p.rel_entity, neg.rel),
            row(&p.entities, neg.tail),
            1.0,
        );
        let loss = hinge(self.margin, sq(&d_pos), sq(&d_neg));
        if loss <= 0.0 {
            return (loss, None);
        }
        let mut g = PairGradient::default();
        for (d, s, t) in [(&d_pos, 2.0, pos), (&d_neg, -2.0, neg)] {
            g.add_row(ParamGroup::Entity, t.head, s, d);
            g.add_row(ParamGroup::RelEntity, t.rel, s, d);
            g.add_row(ParamGroup::Entity, t.tail, -s, d);
        }
        (loss, Some(g))
    }
}

/// Projection distance on type assertions; entity rows stay frozen.
#[derive(Debug, Clone, Copy)]
pub struct AssertionObjective {
    pub margin: f64,
}

impl Objective for AssertionObjective {
    type Record = TypeAssertion;
    const NAME: &'static str = "J2";

    fn energy(&self, p: &ModelParams, a: &TypeAssertion) -> f64 {
        p.score_e2t(a.entity, a.ty)
    }

    fn pair(
        &self,
        p: &ModelParams,
        pos: &TypeAssertion,
        neg: &TypeAssertion,
    ) -> (f64, Option<PairGradient>) {
        let zero = vec![0.0; p.types.ncols()];
        let d_pos = residual(&p.project(pos.entity), &zero, row(&p.types, pos.ty), 1.0);
        let d_neg = residual(&p.project(neg.entity), &zero, row(&p.types, neg.ty), 1.0);
        let loss = hinge(self.margin, sq(&d_pos), sq(&d_neg));
        if loss <= 0.0 {
            return (loss, None);
        }
        let mut g = PairGradient::default();
        for (d, s, a) in [(&d_pos, 2.0, pos), (&d_neg, -2.0, neg)] {
            g.add_row(ParamGroup::Type, a.ty, -s, d);
            g.add_outer(s, d, row(&p.entities, a.entity));
        }
        (loss, Some(g))
    }
}

/// Translation on type triples; only the type-space relation rows move.
#[derive(Debug, Clone, Copy)]
pub struct TypeTripleObjective {
    pub margin: f64,
}

impl Objective for TypeTripleObjective {
    type Record = TypeTriple;
    const NAME: &'static str = "J3";

    fn energy(&self, p: &ModelParams, z: &TypeTriple) -> f64 {
        p.score_trt(z.head_type, z.rel, z.tail_type)
    }

    fn pair(
        &self,
        p: &ModelParams,
        pos: &TypeTriple,
        neg: &TypeTriple,
    ) -> (f64, Option<PairGradient>) {
        let d = |z: &TypeTriple| {
            residual(
                row(&p.types, z.head_type),
                row(&p.rel_type, z.rel),
                row(&p.types, z.tail_type),
                1.0,
            )
        };
        let (d_pos, d_neg) = (d(pos), d(neg));
        let loss = hinge(self.margin, sq(&d_pos), sq(&d_neg));
        if loss <= 0.0 {
            return (loss, None);
        }
        let mut g = PairGradient::default();
        g.add_row(ParamGroup::RelType, pos.rel, 2.0, &d_pos);
        g.add_row(ParamGroup::RelType, neg.rel, -2.0, &d_neg);
        (loss, Some(g))
    }
}

/// Runs one batch pair by pair, updating after each active pair. Returns the summed loss.
pub fn step<O: Objective>(
    objective: &O,
    params: &mut ModelParams,
    ada: &mut AdagradState,
    batch: &Batch<O::Record>,
    alpha: f64,
) -> f64 {
    let mut total = 0.0;
    for (pos, neg) in batch.pairs() {
        let (loss, grad) = objective.pair(params, pos, neg);
        total += loss;
        if let Some(g) = grad {
            g.apply(params, ada, alpha);
        }
    }
    total
}

/// Computes every pair's gradient against the batch-start parameters in parallel,
/// then applies them in batch order.
pub fn step_parallel<O: Objective>(
    objective: &O,
    params: &mut ModelParams,
    ada: &mut AdagradState,
    batch: &Batch<O::Record>,
    alpha: f64,
) -> f64 {
    let snapshot: &ModelParams = params;
    let results: Vec<(f64, Option<PairGradient>)> = batch
        .positives
        .par_iter()
        .zip(batch.negatives.par_iter())
        .map(|(pos, neg)| objective.pair(snapshot, pos, neg))
        .collect();
    let mut total = 0.0;
    for (loss, grad) in results {
        total += loss;
        if let Some(g) = grad {
            g.apply(params, ada, alpha);
        }
    }
    total
}

pub fn step_j1(p: &mut ModelParams, ada: &mut AdagradState, b: &Batch<Triple>, margin: f64, alpha: f64) -> f64 {
    step(&TripleObjective { margin }, p, ada, b, alpha)
}

pub fn step_j2(p: &mut ModelParams, ada: &mut AdagradState, b: &Batch<TypeAssertion>, margin: f64, alpha: f64) -> f64 {
    step(&AssertionObjective { margin }, p, ada, b, alpha)
}

pub fn step_j3(p: &mut ModelParams, ada: &mut AdagradState, b: &Batch<TypeTriple>, margin: f64, alpha: f64) -> f64 {
    step(&TypeTripleObjective { margin }, p, ada, b, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitBound, ModelDims};
    use crate::train::adagrad::DEFAULT_EPSILON;

    fn params(seed: u64) -> ModelParams {
        let d = ModelDims { kappa: 4, ell: 2, entities: 5, relations: 2, types: 3 };
        ModelParams::init(d, seed, InitBound::Glorot).unwrap()
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge(2.0, 1.0, 5.0), 0.0);
        assert_eq!(hinge(2.0, 3.0, 1.0), 4.0);
        assert_eq!(hinge(2.0, 1.0, 3.0), 0.0);
    }

    #[test]
    fn inactive_batches_leave_parameters_bit_identical() {
        let p0 = params(1);
        let mut ada = AdagradState::new(p0.dims(), DEFAULT_EPSILON);
        let ada0 = ada.clone();
        // a pair scored against itself has loss = margin > 0, so use a tiny margin
        // with a negative that is far away instead
        let mut p = p0.clone();
        p.entities.row_mut(4).fill(50.0);
        let p_far = p.clone();
        let batch = Batch {
            positives: vec![Triple { head: 0, rel: 0, tail: 1 }],
            negatives: vec![Triple { head: 0, rel: 0, tail: 4 }],
        };
        assert_eq!(step_j1(&mut p, &mut ada, &batch, 1e-3, 0.1), 0.0);
        assert_eq!(p, p_far);
        assert_eq!(ada, ada0);

        let batch = Batch {
            positives: vec![TypeAssertion { entity: 0, ty: 0 }],
            negatives: vec![TypeAssertion { entity: 4, ty: 0 }],
        };
        assert_eq!(step_j2(&mut p, &mut ada, &batch, 1e-3, 0.1), 0.0);
        assert_eq!(p, p_far);

        let mut q = p0.clone();
        q.types.row_mut(2).fill(50.0);
        let q0 = q.clone();
        let batch = Batch {
            positives: vec![TypeTriple { head_type: 0, rel: 0, tail_type: 1 }],
            negatives: vec![TypeTriple { head_type: 0, rel: 0, tail_type: 2 }],
        };
        assert_eq!(step_j3(&mut q, &mut ada, &batch, 1e-3, 0.1), 0.0);
        assert_eq!(q, q0);
        assert_eq!(ada, ada0);
    }

    #[test]
    fn j2_never_touches_entities_even_for_a_corrupted_entity() {
        let mut p = params(2);
        let mut ada = AdagradState::new(p.dims(), DEFAULT_EPSILON);
        let before = p.entities.clone();
        let batch = Batch {
            positives: vec![TypeAssertion { entity: 0, ty: 0 }; 4],
            negatives: vec![TypeAssertion { entity: 3, ty: 0 }; 4],
        };
        step_j2(&mut p, &mut ada, &batch, 5.0, 0.1);
        assert_eq!(p.entities, before);
        assert!(ada.entities.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn parallel_step_agrees_on_a_single_pair() {
        let p0 = params(3);
        let batch = Batch {
            positives: vec![Triple { head: 0, rel: 1, tail: 2 }],
            negatives: vec![Triple { head: 3, rel: 1, tail: 2 }],
        };
        let (mut a, mut b) = (p0.clone(), p0.clone());
        let mut ada_a = AdagradState::new(p0.dims(), DEFAULT_EPSILON);
        let mut ada_b = ada_a.clone();
        let la = step_j1(&mut a, &mut ada_a, &batch, 5.0, 0.1);
        let lb = step_parallel(&TripleObjective { margin: 5.0 }, &mut b, &mut ada_b, &batch, 0.1);
        assert_eq!(la, lb);
        assert_eq!(a, b);
    }

    #[test]
    fn repeated_rows_merge_into_one_update() {
        // positive and negative share relation and head: one row entry each
        let p = params(4);
        let (_, g) = TripleObjective { margin: 10.0 }.pair(
            &p,
            &Triple { head: 0, rel: 0, tail: 1 },
            &Triple { head: 0, rel: 0, tail: 2 },
        );
        let g = g.unwrap();
        let mut keys: Vec<_> = g.rows.iter().map(|(gr, r, _)| (*gr, *r)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), g.rows.len());
        assert_eq!(g.rows.len(), 4);
    }

    /// Central differences of the pair loss on every coordinate the gradient touches.
    fn check_fd<O: Objective>(o: &O, p: &ModelParams, pos: &O::Record, neg: &O::Record) -> usize {
        let (loss, g) = o.pair(p, pos, neg);
        assert!(loss > 0.0);
        let g = g.unwrap();
        let h = 1e-5;
        let mut coords = Vec::new();
        for (group, r, v) in &g.rows {
            for (j, &a) in v.iter().enumerate() {
                coords.push((*group, *r, j, a));
            }
        }
        if let Some(m) = &g.projection {
            for ((i, j), &a) in m.indexed_iter() {
                coords.push((ParamGroup::Projection, i, j, a));
            }
        }
        for &(group, r, j, analytic) in &coords {
            let mut plus = p.clone();
            plus.group_mut(group)[[r, j]] += h;
            let mut minus = p.clone();
            minus.group_mut(group)[[r, j]] -= h;
            let numeric = (o.pair(&plus, pos, neg).0 - o.pair(&minus, pos, neg).0) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "{group:?}[{r},{j}]: {analytic} vs {numeric}");
        }
        coords.len()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let margin = 50.0;
        for seed in 0..10 {
            let p = params(seed);
            let j1 = TripleObjective { margin };
            let n = check_fd(&j1, &p, &Triple { head: 0, rel: 1, tail: 2 }, &Triple { head: 0, rel: 1, tail: 3 });
            assert_eq!(n, 4 * 4);
            // the corrupted head coincides with the positive tail
            check_fd(&j1, &p, &Triple { head: 1, rel: 0, tail: 2 }, &Triple { head: 2, rel: 0, tail: 2 });
            let j2 = AssertionObjective { margin };
            let n = check_fd(&j2, &p, &TypeAssertion { entity: 1, ty: 0 }, &TypeAssertion { entity: 4, ty: 0 });
            assert_eq!(n, 2 + 2 * 4);
            check_fd(&j2, &p, &TypeAssertion { entity: 1, ty: 0 }, &TypeAssertion { entity: 1, ty: 2 });
            let j3 = TypeTripleObjective { margin };
            check_fd(&j3, &p, &TypeTriple { head_type: 0, rel: 1, tail_type: 1 }, &TypeTriple { head_type: 2, rel: 1, tail_type: 1 });
        }
    }

    #[test]
    fn j3_only_moves_type_relations() {
        let mut p = params(7);
        let before = p.clone();
        let mut ada = AdagradState::new(p.dims(), DEFAULT_EPSILON);
        let batch = Batch {
            positives: vec![TypeTriple { head_type: 0, rel: 0, tail_type: 1 }; 3],
            negatives: vec![TypeTriple { head_type: 0, rel: 0, tail_type: 2 }; 3],
        };
        assert!(step_j3(&mut p, &mut ada, &batch, 10.0, 0.1) > 0.0);
        assert_eq!(p.types, before.types);
        assert_eq!(p.entities, before.entities);
        assert_eq!(p.rel_entity, before.rel_entity);
        assert_eq!(p.projection, before.projection);
        assert_ne!(p.rel_type, before.rel_type);
    }
}
