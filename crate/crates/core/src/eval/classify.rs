use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{EntityId, KnowledgeBase, TypeAssertion, TypeId};
use crate::error::{Error, Result};
use crate::model::{EntityScorer, ModelParams, ScoreMode};

const REJECTION_TRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub entity: EntityId,
    pub ty: TypeId,
    pub positive: bool,
}

/// One positive and one negative per assertion. The negative keeps the entity and
/// draws a type uniformly among those not known true for it anywhere in the KB.
pub fn make_classification_split<R: Rng + ?Sized>(
    assertions: &[TypeAssertion],
    kb: &KnowledgeBase,
    rng: &mut R,
) -> Result<Vec<LabeledPair>> {
    let n_types = kb.sizes.types;
    if assertions.is_empty() {
        return Err(Error::Sampling("no assertions to classify".into()));
    }
    if n_types < 2 {
        return Err(Error::Sampling("need at least two types".into()));
    }
    let mut out = Vec::with_capacity(2 * assertions.len());
    for a in assertions {
        let neg = draw_negative_type(kb, a.entity, n_types, rng).ok_or_else(|| {
            Error::Sampling(format!("entity {} carries every type; no negative exists", a.entity))
        })?;
        out.push(LabeledPair { entity: a.entity, ty: a.ty, positive: true });
        out.push(LabeledPair { entity: a.entity, ty: neg, positive: false });
    }
    out.shuffle(rng);
    Ok(out)
}

fn draw_negative_type<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    e: EntityId,
    n_types: usize,
    rng: &mut R,
) -> Option<TypeId> {
    for _ in 0..REJECTION_TRIES {
        let t = rng.random_range(0..n_types as TypeId);
        if !kb.is_true_type(e, t) {
            return Some(t);
        }
    }
    // densely typed entity: pick directly among the eligible types
    let eligible: Vec<TypeId> = (0..n_types as TypeId)
        .filter(|&t| !kb.is_true_type(e, t))
        .collect();
    if eligible.is_empty() {
        None
    } else {
        Some(eligible[rng.random_range(0..eligible.len())])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    #[serde(with = "threshold_repr")]
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

impl PrPoint {
    pub fn f1(&self) -> f64 {
        let s = self.precision + self.recall;
        if s == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / s
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    /// Selected on validation; a pair is predicted positive when its score is `≤` this.
    #[serde(with = "threshold_repr")]
    pub threshold: f64,
    pub valid_accuracy: f64,
    /// Test accuracy at `threshold`.
    pub accuracy: f64,
    /// Test precision/recall at each candidate threshold, ascending.
    pub pr_points: Vec<PrPoint>,
    pub f1_best: f64,
    pub f1_best_precision: f64,
    pub f1_best_recall: f64,
}

/// Scores sorted ascending with prefix positive counts, for O(log n) threshold queries.
struct Sweep {
    scores: Vec<f64>,
    pos_prefix: Vec<usize>,
    positives: usize,
}

impl Sweep {
    fn new(pairs: &[(f64, bool)]) -> Self {
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pos_prefix = Vec::with_capacity(sorted.len() + 1);
        pos_prefix.push(0);
        for &(_, p) in &sorted {
            pos_prefix.push(pos_prefix.last().unwrap() + usize::from(p));
        }
        Self {
            positives: *pos_prefix.last().unwrap(),
            scores: sorted.into_iter().map(|(s, _)| s).collect(),
            pos_prefix,
        }
    }

    /// (true positives, predicted positives) at threshold `eta`.
    fn at(&self, eta: f64) -> (usize, usize) {
        let k = self.scores.partition_point(|&s| s <= eta);
        (self.pos_prefix[k], k)
    }

    fn accuracy(&self, eta: f64) -> f64 {
        let (tp, pred) = self.at(eta);
        let n = self.scores.len();
        let tn = (n - self.positives) - (pred - tp);
        (tp + tn) as f64 / n as f64
    }
}

fn check_two_classes(pairs: &[(f64, bool)], split: &str) -> Result<()> {
    let pos = pairs.iter().filter(|p| p.1).count();
    if pos == 0 || pos == pairs.len() {
        return Err(Error::Evaluation(format!(
            "{split} split has a single class ({pos} positive of {})",
            pairs.len()
        )));
    }
    if pairs.iter().any(|p| p.0.is_nan()) {
        return Err(Error::Evaluation(format!("{split} split contains NaN scores")));
    }
    Ok(())
}

/// Threshold selection on `valid`, accuracy and precision/recall on `test`.
pub fn classify_scores(valid: &[(f64, bool)], test: &[(f64, bool)]) -> Result<ClassifyReport> {
    check_two_classes(valid, "validation")?;
    check_two_classes(test, "test")?;
    let v = Sweep::new(valid);
    let mut candidates = vec![f64::NEG_INFINITY];
    let mut distinct = v.scores.clone();
    distinct.dedup();
    candidates.extend(distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    candidates.push(f64::INFINITY);

    let (mut threshold, mut valid_accuracy) = (candidates[0], v.accuracy(candidates[0]));
    for &eta in &candidates[1..] {
        let acc = v.accuracy(eta);
        if acc > valid_accuracy {
            threshold = eta;
            valid_accuracy = acc;
        }
    }

    let t = Sweep::new(test);
    let pr_points: Vec<PrPoint> = candidates
        .iter()
        .map(|&eta| {
            let (tp, pred) = t.at(eta);
            PrPoint {
                threshold: eta,
                precision: if pred == 0 { 1.0 } else { tp as f64 / pred as f64 },
                recall: tp as f64 / t.positives as f64,
            }
        })
        .collect();
    let best = pr_points
        .iter()
        .copied()
        .fold(None::<PrPoint>, |acc, p| match acc {
            Some(b) if b.f1() >= p.f1() => Some(b),
            _ => Some(p),
        })
        .expect("at least two candidates");
    Ok(ClassifyReport {
        threshold,
        valid_accuracy,
        accuracy: t.accuracy(threshold),
        f1_best: best.f1(),
        f1_best_precision: best.precision,
        f1_best_recall: best.recall,
        pr_points,
    })
}

/// Model score of each labeled pair, in input order.
pub fn pair_scores(
    params: &ModelParams,
    kb: &KnowledgeBase,
    pairs: &[LabeledPair],
    lambda: f64,
    mode: ScoreMode,
) -> Vec<(f64, bool)> {
    pairs
        .par_iter()
        .map(|p| {
            let s = EntityScorer::new(params, kb, p.entity, lambda, mode).score(p.ty);
            (s, p.positive)
        })
        .collect()
}

pub fn classify(
    params: &ModelParams,
    kb: &KnowledgeBase,
    valid: &[LabeledPair],
    test: &[LabeledPair],
    lambda: f64,
    mode: ScoreMode,
) -> Result<ClassifyReport> {
    classify_scores(
        &pair_scores(params, kb, valid, lambda, mode),
        &pair_scores(params, kb, test, lambda, mode),
    )
}

/// Infinite thresholds are written as the strings `"-inf"` / `"inf"`.
mod threshold_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_kb, KbSizes};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn typed_kb(n_ent: u32, n_types: u32) -> KnowledgeBase {
        // entity e carries types e % n and (e + 1) % n
        let assertions = (0..n_ent)
            .flat_map(|e| [TypeAssertion { entity: e, ty: e % n_types }, TypeAssertion { entity: e, ty: (e + 1) % n_types }])
            .collect();
        let sizes = KbSizes { entities: n_ent as usize, relations: 1, types: n_types as usize };
        build_kb(sizes, vec![], assertions, &[], &[], vec![]).unwrap()
    }

    #[test]
    fn split_is_balanced_and_avoids_true_types() {
        let kb = typed_kb(100, 6);
        let positives: Vec<TypeAssertion> = (0..100).map(|e| TypeAssertion { entity: e, ty: e % 6 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut violations = 0;
        for _ in 0..50 {
            let pairs = make_classification_split(&positives, &kb, &mut rng).unwrap();
            assert_eq!(pairs.len(), 200);
            assert_eq!(pairs.iter().filter(|p| p.positive).count(), 100);
            violations += pairs.iter().filter(|p| !p.positive && kb.is_true_type(p.entity, p.ty)).count();
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn negative_types_are_uniform_over_eligible() {
        // entity 0 has types {0, 1}; eligible are 2..8
        let kb = typed_kb(1, 8);
        let one = [TypeAssertion { entity: 0, ty: 0 }];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0f64; 8];
        let draws = 100_000;
        for _ in 0..draws {
            let pairs = make_classification_split(&one, &kb, &mut rng).unwrap();
            counts[pairs.iter().find(|p| !p.positive).unwrap().ty as usize] += 1.0;
        }
        assert_eq!(counts[0] + counts[1], 0.0);
        let expected = draws as f64 / 6.0;
        let chi2: f64 = counts[2..].iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 5 degrees of freedom, p = 0.01 critical value
        assert!(chi2 < 15.086, "chi2 {chi2}");
    }

    #[test]
    fn fully_typed_entity_is_a_sampling_error() {
        let assertions = vec![TypeAssertion { entity: 0, ty: 0 }, TypeAssertion { entity: 0, ty: 1 }];
        let sizes = KbSizes { entities: 1, relations: 1, types: 2 };
        let kb = build_kb(sizes, vec![], assertions.clone(), &[], &[], vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(make_classification_split(&assertions, &kb, &mut rng), Err(Error::Sampling(_))));
    }

    #[test]
    fn separable_scores_classify_perfectly() {
        let valid: Vec<(f64, bool)> = (0..50).map(|i| (i as f64, i < 25)).collect();
        let test: Vec<(f64, bool)> = (0..40).map(|i| if i < 20 { (i as f64 + 0.3, true) } else { (i as f64 + 10.0, false) }).collect();
        let r = classify_scores(&valid, &test).unwrap();
        assert_eq!(r.threshold, 24.5);
        assert_eq!(r.valid_accuracy, 1.0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.f1_best, 1.0);
    }

    #[test]
    fn equal_scores_give_chance_accuracy() {
        let valid: Vec<(f64, bool)> = (0..20).map(|i| (3.0, i % 2 == 0)).collect();
        let r = classify_scores(&valid, &valid).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.threshold, f64::NEG_INFINITY);
        assert_eq!(r.pr_points.len(), 2);
    }

    #[test]
    fn single_class_is_rejected() {
        let one: Vec<(f64, bool)> = (0..5).map(|i| (i as f64, true)).collect();
        let two = [(0.0, true), (1.0, false)];
        assert!(classify_scores(&one, &two).is_err());
        assert!(classify_scores(&two, &one).is_err());
    }

    #[test]
    fn recall_is_monotone_in_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs: Vec<(f64, bool)> = (0..500).map(|_| (rng.random::<f64>(), rng.random_bool(0.5))).collect();
        let r = classify_scores(&pairs, &pairs).unwrap();
        for w in r.pr_points.windows(2) {
            assert!(w[0].threshold < w[1].threshold);
            assert!(w[0].recall <= w[1].recall);
        }
        for p in &r.pr_points {
            assert!((0.0..=1.0).contains(&p.precision) && (0.0..=1.0).contains(&p.recall));
        }
    }

    /// Brute-force accuracy over the same candidate set.
    #[test]
    fn threshold_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let valid: Vec<(f64, bool)> = (0..60).map(|_| ((rng.random_range(0..15)) as f64, rng.random_bool(0.5))).collect();
            let r = classify_scores(&valid, &valid).unwrap();
            let acc = |eta: f64| valid.iter().filter(|(s, p)| (*s <= eta) == *p).count() as f64 / 60.0;
            assert_eq!(acc(r.threshold), r.valid_accuracy);
            for p in &r.pr_points {
                assert!(acc(p.threshold) <= r.valid_accuracy);
                if acc(p.threshold) == r.valid_accuracy {
                    assert!(p.threshold >= r.threshold);
                }
            }
        }
    }

    #[test]
    fn infinite_thresholds_round_trip_through_json() {
        let p = PrPoint { threshold: f64::NEG_INFINITY, precision: 1.0, recall: 0.0 };
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"-inf\""));
        assert_eq!(serde_json::from_str::<PrPoint>(&text).unwrap(), p);
    }
}
