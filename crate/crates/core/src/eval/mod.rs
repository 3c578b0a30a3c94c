//! Type ranking (MRR, HITS@k), top-k prediction and classification.

mod classify;
mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{EntityId, KnowledgeBase, TypeAssertion, TypeId};
use crate::error::{Error, Result};
use crate::model::{EntityScorer, ModelParams, ScoreMode};

pub use classify::{
    classify, classify_scores, make_classification_split, pair_scores, ClassifyReport,
    LabeledPair, PrPoint,
};
pub use report::{
    read_ranks_tsv, write_json, write_pr_curve, write_ranks_tsv, ClassifyFile, TypingFile,
};

pub const HITS_AT: [u32; 3] = [1, 3, 10];

/// Fair rank of `scores[target]`: candidates strictly below it, plus half of the
/// tie group (itself included), rounded up. Candidates for which `skip` holds are
/// ignored; `target` itself is never skipped.
pub fn rank_from_scores(scores: &[f64], target: usize, skip: impl Fn(usize) -> bool) -> u32 {
    let s = scores[target];
    let (mut below, mut ties) = (0u32, 0u32);
    for (i, &c) in scores.iter().enumerate() {
        if i == target || skip(i) {
            continue;
        }
        if c < s {
            below += 1;
        } else if c == s {
            ties += 1;
        }
    }
    below + (ties + 2) / 2
}

/// Rank of `true_t` among all types for entity `e`. `None` when either id is
/// outside the model.
pub fn rank_type(
    params: &ModelParams,
    kb: &KnowledgeBase,
    e: EntityId,
    true_t: TypeId,
    lambda: f64,
    mode: ScoreMode,
    filtered: bool,
) -> Option<u32> {
    if e as usize >= params.entities.nrows() || true_t as usize >= params.types.nrows() {
        return None;
    }
    let scores = EntityScorer::new(params, kb, e, lambda, mode).score_all();
    Some(rank_with_filter(&scores, kb, e, true_t, filtered))
}

fn rank_with_filter(scores: &[f64], kb: &KnowledgeBase, e: EntityId, t: TypeId, filtered: bool) -> u32 {
    if filtered {
        rank_from_scores(scores, t as usize, |i| kb.is_true_type(e, i as TypeId))
    } else {
        rank_from_scores(scores, t as usize, |_| false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRank {
    pub entity: EntityId,
    pub ty: TypeId,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub mrr: f64,
    /// Percentages keyed by cutoff.
    pub hits_at: BTreeMap<u32, f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl RankReport {
    pub fn from_ranks(ranks: &[u32], skipped: usize) -> Self {
        let n = ranks.len() as f64;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        let hits_at = HITS_AT
            .iter()
            .map(|&k| {
                let hit = ranks.iter().filter(|&&r| r <= k).count();
                (k, 100.0 * hit as f64 / n)
            })
            .collect();
        Self {
            mrr,
            hits_at,
            evaluated: ranks.len(),
            skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypingResult {
    pub report: RankReport,
    /// In the order of the input pairs, skipped ones left out.
    pub ranks: Vec<PairRank>,
}

/// Ranks every test pair; pairs with ids outside the model are skip-counted.
pub fn evaluate_typing(
    params: &ModelParams,
    kb: &KnowledgeBase,
    test: &[TypeAssertion],
    lambda: f64,
    mode: ScoreMode,
    filtered: bool,
) -> Result<TypingResult> {
    if test.is_empty() {
        return Err(Error::Evaluation("test set is empty".into()));
    }
    let ranked: Vec<Option<PairRank>> = test
        .par_iter()
        .map(|a| {
            rank_type(params, kb, a.entity, a.ty, lambda, mode, filtered).map(|rank| PairRank {
                entity: a.entity,
                ty: a.ty,
                rank,
            })
        })
        .collect();
    let skipped = ranked.iter().filter(|r| r.is_none()).count();
    let ranks: Vec<PairRank> = ranked.into_iter().flatten().collect();
    if ranks.is_empty() {
        return Err(Error::Evaluation("no test pair could be evaluated".into()));
    }
    let plain: Vec<u32> = ranks.iter().map(|r| r.rank).collect();
    Ok(TypingResult {
        report: RankReport::from_ranks(&plain, skipped),
        ranks,
    })
}

/// The `k` lowest-scoring types, ascending, ties broken by type id.
pub fn predict_topk(
    params: &ModelParams,
    kb: &KnowledgeBase,
    e: EntityId,
    k: usize,
    lambda: f64,
    mode: ScoreMode,
) -> Vec<(TypeId, f64)> {
    let scores = EntityScorer::new(params, kb, e, lambda, mode).score_all();
    let mut order: Vec<(TypeId, f64)> = scores
        .into_iter()
        .enumerate()
        .map(|(t, s)| (t as TypeId, s))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    order.truncate(k);
    order
}
