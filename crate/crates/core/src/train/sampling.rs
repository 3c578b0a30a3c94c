use rand::Rng;

use crate::data::{Triple, TypeAssertion, TypeTriple};

/// Positives with their corrupted counterparts, index-aligned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch<R> {
    pub positives: Vec<R>,
    pub negatives: Vec<R>,
}

impl<R> Batch<R> {
    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&R, &R)> {
        self.positives.iter().zip(&self.negatives)
    }
}

/// Uniform id in `0..n` other than `current`.
fn other_id<G: Rng + ?Sized>(rng: &mut G, n: usize, current: u32) -> u32 {
    debug_assert!(n >= 2, "need two symbols to corrupt");
    let draw = rng.random_range(0..(n - 1) as u32);
    if draw >= current {
        draw + 1
    } else {
        draw
    }
}

/// Replaces head or tail (probability 1/2 each) by a different entity.
pub fn corrupt_triple<G: Rng + ?Sized>(t: &Triple, rng: &mut G, n_entities: usize) -> Triple {
    let mut c = *t;
    if rng.random_bool(0.5) {
        c.head = other_id(rng, n_entities, t.head);
    } else {
        c.tail = other_id(rng, n_entities, t.tail);
    }
    c
}

/// Replaces the entity or the type (probability 1/2 each).
pub fn corrupt_assertion<G: Rng + ?Sized>(
    a: &TypeAssertion,
    rng: &mut G,
    n_entities: usize,
    n_types: usize,
) -> TypeAssertion {
    let mut c = *a;
    if rng.random_bool(0.5) {
        c.entity = other_id(rng, n_entities, a.entity);
    } else {
        c.ty = other_id(rng, n_types, a.ty);
    }
    c
}

/// Replaces the head type or the tail type (probability 1/2 each).
pub fn corrupt_type_triple<G: Rng + ?Sized>(
    z: &TypeTriple,
    rng: &mut G,
    n_types: usize,
) -> TypeTriple {
    let mut c = *z;
    if rng.random_bool(0.5) {
        c.head_type = other_id(rng, n_types, z.head_type);
    } else {
        c.tail_type = other_id(rng, n_types, z.tail_type);
    }
    c
}

/// Pairs each record in `chunk` with `neg_per_pos` corruptions.
pub fn make_batch<R: Copy, G: Rng + ?Sized>(
    chunk: impl IntoIterator<Item = R>,
    neg_per_pos: usize,
    rng: &mut G,
    mut corrupt: impl FnMut(&R, &mut G) -> R,
) -> Batch<R> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for r in chunk {
        for _ in 0..neg_per_pos {
            negatives.push(corrupt(&r, rng));
            positives.push(r);
        }
    }
    Batch {
        positives,
        negatives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DRAWS: usize = 100_000;

    #[test]
    fn two_entities_force_the_other_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Triple { head: 0, rel: 3, tail: 1 };
        for _ in 0..100 {
            let c = corrupt_triple(&t, &mut rng, 2);
            assert!(c == Triple { head: 1, rel: 3, tail: 1 } || c == Triple { head: 0, rel: 3, tail: 0 });
        }
    }

    #[test]
    fn triple_corruption_frequency_and_no_fixpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Triple { head: 4, rel: 1, tail: 7 };
        let (mut heads, mut violations) = (0usize, 0usize);
        for _ in 0..DRAWS {
            let c = corrupt_triple(&t, &mut rng, 10);
            assert_eq!(c.rel, t.rel);
            match (c.head != t.head, c.tail != t.tail) {
                (true, false) => heads += 1,
                (false, true) => {}
                _ => violations += 1,
            }
        }
        assert_eq!(violations, 0);
        let f = heads as f64 / DRAWS as f64;
        assert!((f - 0.5).abs() < 0.01, "head frequency {f}");
    }

    #[test]
    fn assertion_corruption_frequency_and_no_fixpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = TypeAssertion { entity: 0, ty: 2 };
        let forced = corrupt_assertion(&TypeAssertion { entity: 0, ty: 0 }, &mut rng, 2, 2);
        assert!(forced == TypeAssertion { entity: 1, ty: 0 } || forced == TypeAssertion { entity: 0, ty: 1 });
        let (mut ents, mut violations) = (0usize, 0usize);
        for _ in 0..DRAWS {
            let c = corrupt_assertion(&a, &mut rng, 5, 3);
            match (c.entity != a.entity, c.ty != a.ty) {
                (true, false) => ents += 1,
                (false, true) => {}
                _ => violations += 1,
            }
        }
        assert_eq!(violations, 0);
        assert!((ents as f64 / DRAWS as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn type_triple_corruption_frequency_and_no_fixpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = TypeTriple { head_type: 1, rel: 0, tail_type: 1 };
        let forced = corrupt_type_triple(&TypeTriple { head_type: 0, rel: 0, tail_type: 1 }, &mut rng, 2);
        assert!(forced == TypeTriple { head_type: 1, rel: 0, tail_type: 1 } || forced == TypeTriple { head_type: 0, rel: 0, tail_type: 0 });
        let (mut heads, mut violations) = (0usize, 0usize);
        for _ in 0..DRAWS {
            let c = corrupt_type_triple(&z, &mut rng, 4);
            match (c.head_type != z.head_type, c.tail_type != z.tail_type) {
                (true, false) => heads += 1,
                (false, true) => {}
                _ => violations += 1,
            }
        }
        assert_eq!(violations, 0);
        assert!((heads as f64 / DRAWS as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn replacement_is_uniform_over_other_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[other_id(&mut rng, 5, 2) as usize] += 1;
        }
        assert_eq!(counts[2], 0);
        for (i, &c) in counts.iter().enumerate().filter(|&(i, _)| i != 2) {
            assert!((c as f64 / 12_500.0 - 1.0).abs() < 0.05, "id {i}: {c}");
        }
    }

    #[test]
    fn batches_pair_each_positive_with_its_negatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let recs = [TypeTriple { head_type: 0, rel: 0, tail_type: 1 }, TypeTriple { head_type: 2, rel: 1, tail_type: 3 }];
        let b = make_batch(recs, 3, &mut rng, |z, g| corrupt_type_triple(z, g, 4));
        assert_eq!(b.len(), 6);
        assert_eq!(b.negatives.len(), 6);
        for (p, n) in b.pairs() {
            let diffs = usize::from(p.head_type != n.head_type) + usize::from(p.tail_type != n.tail_type);
            assert_eq!(diffs, 1);
            assert_eq!(p.rel, n.rel);
        }
    }
}
