#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use connecte::data::{
    build_kb, generate_type_triples, KbSizes, KnowledgeBase, Triple, TypeAssertion,
};
use connecte::model::ModelParams;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLUSTERS: u32 = 8;
/// (head cluster, tail cluster) of each relation.
pub const RELATION_PAIRS: [(u32, u32); 6] = [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)];

/// Entities split into disjoint typed clusters; every relation links exactly one
/// ordered pair of clusters. A few assertions are held out.
pub struct Planted {
    pub sizes: KbSizes,
    pub triples: Vec<Triple>,
    pub train_types: Vec<TypeAssertion>,
    pub held_out: Vec<TypeAssertion>,
    pub kb: KnowledgeBase,
}

pub fn cluster_of(e: u32) -> u32 {
    e % CLUSTERS
}

pub fn planted(seed: u64, entities: u32, held_out: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<Vec<u32>> = (0..CLUSTERS)
        .map(|c| (0..entities).filter(|&e| cluster_of(e) == c).collect())
        .collect();
    let mut set = BTreeSet::new();
    for (r, &(a, b)) in RELATION_PAIRS.iter().enumerate() {
        let (heads, tails) = (&members[a as usize], &members[b as usize]);
        for &h in heads {
            for _ in 0..2 {
                set.insert(Triple { head: h, rel: r as u32, tail: tails[rng.random_range(0..tails.len())] });
            }
        }
        for &t in tails {
            set.insert(Triple { head: heads[rng.random_range(0..heads.len())], rel: r as u32, tail: t });
        }
    }
    let triples: Vec<Triple> = set.into_iter().collect();
    let mut all: Vec<TypeAssertion> = (0..entities)
        .map(|e| TypeAssertion { entity: e, ty: cluster_of(e) })
        .collect();
    all.shuffle(&mut rng);
    let held: Vec<TypeAssertion> = all[..held_out].to_vec();
    let mut train_types: Vec<TypeAssertion> = all[held_out..].to_vec();
    train_types.sort();
    let sizes = KbSizes { entities: entities as usize, relations: RELATION_PAIRS.len(), types: CLUSTERS as usize };
    let types_of = {
        let kb = build_kb(sizes, vec![], train_types.clone(), &[], &[], vec![]).unwrap();
        kb.types_of_all().to_vec()
    };
    let type_triples = generate_type_triples(&triples, &types_of, 1).unwrap();
    let kb = build_kb(sizes, triples.clone(), train_types.clone(), &[], &held, type_triples).unwrap();
    Planted { sizes, triples, train_types, held_out: held, kb }
}

pub fn entity_name(e: u32) -> String {
    format!("e{e}")
}

pub fn relation_name(r: u32) -> String {
    format!("rel_{r}")
}

pub fn type_name(t: u32) -> String {
    format!("/cluster/c{t}")
}

/// Writes raw input files for `connecte prepare`.
pub fn write_planted_inputs(p: &Planted, dir: &Path) {
    let mut f = std::fs::File::create(dir.join("triples.tsv")).unwrap();
    for t in &p.triples {
        writeln!(f, "{}\t{}\t{}", entity_name(t.head), relation_name(t.rel), entity_name(t.tail)).unwrap();
    }
    let write_types = |name: &str, rows: &[TypeAssertion]| {
        let mut f = std::fs::File::create(dir.join(name)).unwrap();
        for a in rows {
            writeln!(f, "{}\t{}", entity_name(a.entity), type_name(a.ty)).unwrap();
        }
    };
    write_types("types_train.tsv", &p.train_types);
    let half = p.held_out.len() / 2;
    write_types("types_valid.tsv", &p.held_out[..half]);
    write_types("types_test.tsv", &p.held_out[half..]);
}

/// Uniformly random triples and assertions over the given vocabulary sizes.
pub fn random_kb(seed: u64, sizes: KbSizes, n_triples: usize, n_assertions: usize) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ne, nr, nt) = (sizes.entities as u32, sizes.relations as u32, sizes.types as u32);
    let triples: Vec<Triple> = (0..n_triples)
        .map(|_| Triple { head: rng.random_range(0..ne), rel: rng.random_range(0..nr), tail: rng.random_range(0..ne) })
        .collect();
    let assertions: Vec<TypeAssertion> = (0..n_assertions)
        .map(|_| TypeAssertion { entity: rng.random_range(0..ne), ty: rng.random_range(0..nt) })
        .collect();
    let types_of = {
        let kb = build_kb(sizes, vec![], assertions.clone(), &[], &[], vec![]).unwrap();
        kb.types_of_all().to_vec()
    };
    let type_triples = generate_type_triples(&triples, &types_of, 1).unwrap();
    build_kb(sizes, triples, assertions, &[], &[], type_triples).unwrap()
}

/// Composite score by a direct scan of the raw triples and assertions.
pub fn brute_force_score(p: &ModelParams, kb: &KnowledgeBase, e: u32, t: u32, lambda: f64, composite: bool) -> f64 {
    let e2t = p.score_e2t(e, t);
    if !composite {
        return e2t;
    }
    let (mut heads, mut tails) = (Vec::new(), Vec::new());
    for tr in &kb.triples {
        if tr.head == e {
            for a in kb.assertions.iter().filter(|a| a.entity == tr.tail) {
                heads.push(p.score_trt(t, tr.rel, a.ty));
            }
        }
        if tr.tail == e {
            for a in kb.assertions.iter().filter(|a| a.entity == tr.head) {
                tails.push(p.score_trt(a.ty, tr.rel, t));
            }
        }
    }
    if heads.is_empty() && tails.is_empty() {
        return e2t;
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    lambda * e2t + (1.0 - lambda) * (mean(&heads) + mean(&tails))
}

/// Rank by sorting: 1-based positions of the target's tie group, midpoint rounded down.
pub fn sorted_rank(scores: &[f64], target: usize, keep: impl Fn(usize) -> bool) -> u32 {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| i == target || keep(i)).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let s = scores[target];
    let first = idx.iter().position(|&i| scores[i] == s).unwrap() + 1;
    let last = idx.iter().rposition(|&i| scores[i] == s).unwrap() + 1;
    ((first + last) / 2) as u32
}
