//! Staged training: each epoch runs J1 over the triples, J2 over the type
//! assertions, J3 over the type triples, then renormalizes entity rows.

pub mod adagrad;
pub mod objectives;
pub mod sampling;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::data::KnowledgeBase;
use crate::error::{Error, Result};
use crate::model::{ModelDims, ModelParams};
use crate::rng::{stream_rng, Stream};

pub use adagrad::{adagrad_update, AdagradState, DEFAULT_EPSILON};
pub use objectives::{
    hinge, step, step_j1, step_j2, step_j3, step_parallel, AssertionObjective, Objective,
    PairGradient, TripleObjective, TypeTripleObjective,
};
pub use sampling::{corrupt_assertion, corrupt_triple, corrupt_type_triple, make_batch, Batch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Triples,
    Assertions,
    TypeTriples,
    Normalize,
}

/// Summed hinge losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Compute pair gradients concurrently against the batch-start parameters.
    /// Not bitwise reproducible against the serial path.
    pub parallel: bool,
}

/// Hooks around each stage; all default to no-ops.
pub trait TrainObserver {
    fn before_stage(&mut self, _epoch: usize, _stage: Stage, _params: &ModelParams) {}
    fn after_stage(&mut self, _epoch: usize, _stage: Stage, _params: &ModelParams) {}
    fn after_epoch(&mut self, _loss: &EpochLoss, _params: &ModelParams) {}
}

impl TrainObserver for () {}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochLoss>,
}

pub fn train(kb: &KnowledgeBase, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(kb, cfg, TrainOptions::default(), &mut ())
}

pub fn train_with(
    kb: &KnowledgeBase,
    cfg: &TrainConfig,
    opts: TrainOptions,
    observer: &mut impl TrainObserver,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let sizes = kb.sizes;
    if sizes.entities < 2 || sizes.types < 2 {
        return Err(Error::Config(format!(
            "need at least 2 entities and 2 types to sample negatives, got {} and {}",
            sizes.entities, sizes.types
        )));
    }
    let dims = ModelDims {
        kappa: cfg.kappa,
        ell: cfg.ell,
        entities: sizes.entities,
        relations: sizes.relations,
        types: sizes.types,
    };
    let mut params = ModelParams::init(dims, cfg.seed, cfg.init)?;
    let mut ada = AdagradState::new(dims, DEFAULT_EPSILON);
    let mut rng_d = stream_rng(cfg.seed, Stream::Triples);
    let mut rng_h = stream_rng(cfg.seed, Stream::Assertions);
    let mut rng_z = stream_rng(cfg.seed, Stream::TypeTriples);
    let mut rng_n = stream_rng(cfg.seed, Stream::Normalize);
    let reinit = cfg.init.bound(cfg.kappa, sizes.entities);
    let (n_ent, n_type) = (sizes.entities, sizes.types);

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        observer.before_stage(epoch, Stage::Triples, &params);
        let j1 = run_stage(
            &TripleObjective { margin: cfg.gamma1 },
            &kb.triples,
            |t, g| corrupt_triple(t, g, n_ent),
            &mut rng_d,
            (&mut params, &mut ada),
            cfg,
            opts,
            epoch,
        )?;
        observer.after_stage(epoch, Stage::Triples, &params);

        observer.before_stage(epoch, Stage::Assertions, &params);
        let j2 = run_stage(
            &AssertionObjective { margin: cfg.gamma2 },
            &kb.assertions,
            |a, g| corrupt_assertion(a, g, n_ent, n_type),
            &mut rng_h,
            (&mut params, &mut ada),
            cfg,
            opts,
            epoch,
        )?;
        observer.after_stage(epoch, Stage::Assertions, &params);

        observer.before_stage(epoch, Stage::TypeTriples, &params);
        let j3 = run_stage(
            &TypeTripleObjective { margin: cfg.gamma3 },
            &kb.type_triples,
            |z, g| corrupt_type_triple(z, g, n_type),
            &mut rng_z,
            (&mut params, &mut ada),
            cfg,
            opts,
            epoch,
        )?;
        observer.after_stage(epoch, Stage::TypeTriples, &params);

        observer.before_stage(epoch, Stage::Normalize, &params);
        params.normalize_entities(&mut rng_n, reinit);
        observer.after_stage(epoch, Stage::Normalize, &params);

        let loss = EpochLoss { epoch, j1, j2, j3 };
        log::debug!("epoch {epoch}: J1={j1:.4} J2={j2:.4} J3={j3:.4}");
        observer.after_epoch(&loss, &params);
        history.push(loss);
    }
    Ok(TrainOutcome { params, history })
}

#[allow(clippy::too_many_arguments)]
fn run_stage<O, G>(
    objective: &O,
    records: &[O::Record],
    corrupt: impl Fn(&O::Record, &mut G) -> O::Record + Copy,
    rng: &mut G,
    (params, ada): (&mut ModelParams, &mut AdagradState),
    cfg: &TrainConfig,
    opts: TrainOptions,
    epoch: usize,
) -> Result<f64>
where
    O: Objective,
    G: Rng,
{
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
        let batch = make_batch(
            chunk.iter().map(|&i| records[i]),
            cfg.neg_per_pos,
            rng,
            corrupt,
        );
        let loss = if opts.parallel {
            step_parallel(objective, params, ada, &batch, cfg.alpha)
        } else {
            step(objective, params, ada, &batch, cfg.alpha)
        };
        if !loss.is_finite() || !params.all_finite() {
            return Err(Error::NonFinite {
                objective: O::NAME,
                epoch,
                batch: b,
            });
        }
        total += loss;
    }
    Ok(total)
}
