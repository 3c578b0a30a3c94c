use ndarray::Array2;

use crate::model::{ModelDims, ParamGroup};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Per-coordinate running sums of squared gradients, one table per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub entities: Array2<f64>,
    pub types: Array2<f64>,
    pub rel_entity: Array2<f64>,
    pub rel_type: Array2<f64>,
    pub projection: Array2<f64>,
    pub epsilon: f64,
}

impl AdagradState {
    pub fn new(dims: ModelDims, epsilon: f64) -> Self {
        Self {
            entities: Array2::zeros((dims.entities, dims.kappa)),
            types: Array2::zeros((dims.types, dims.ell)),
            rel_entity: Array2::zeros((dims.relations, dims.kappa)),
            rel_type: Array2::zeros((dims.relations, dims.ell)),
            projection: Array2::zeros((dims.ell, dims.kappa)),
            epsilon,
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
}

/// `accum += g²; param -= alpha * g / (sqrt(accum) + epsilon)`, elementwise.
pub fn adagrad_update(param: &mut [f64], accum: &mut [f64], grad: &[f64], alpha: f64, epsilon: f64) {
    assert_eq!(param.len(), grad.len());
    assert_eq!(accum.len(), grad.len());
    for ((p, a), &g) in param.iter_mut().zip(accum.iter_mut()).zip(grad) {
        *a += g * g;
        *p -= alpha * g / (a.sqrt() + epsilon);
    }
}
