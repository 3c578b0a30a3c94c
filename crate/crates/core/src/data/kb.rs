use std::collections::{HashMap, HashSet};

use super::records::{EntityId, RelationId, Triple, TypeAssertion, TypeId, TypeTriple};
use crate::error::{Error, Result};

/// Vocabulary sizes every id in a [`KnowledgeBase`] is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KbSizes {
    pub entities: usize,
    pub relations: usize,
    pub types: usize,
}

/// Indexed training data plus the all-splits type index used by filtered evaluation.
///
/// Immutable once built; share it freely between reader threads.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub sizes: KbSizes,
    pub triples: Vec<Triple>,
    pub assertions: Vec<TypeAssertion>,
    pub type_triples: Vec<TypeTriple>,
    types_of: Vec<Vec<TypeId>>,
    out_edges: Vec<Vec<(RelationId, EntityId)>>,
    in_edges: Vec<Vec<(RelationId, EntityId)>>,
    true_types_all: Vec<Vec<TypeId>>,
}

fn sorted_sets(n: usize, pairs: impl Iterator<Item = (EntityId, TypeId)>) -> Vec<Vec<TypeId>> {
    let mut sets = vec![Vec::new(); n];
    for (e, t) in pairs {
        sets[e as usize].push(t);
    }
    for s in &mut sets {
        s.sort_unstable();
        s.dedup();
    }
    sets
}

fn check(id: u32, bound: usize, what: &str) -> Result<()> {
    if (id as usize) < bound {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} id {id} out of range (size {bound})")))
    }
}

/// Keeps the first occurrence of each record.
fn dedup_stable<T: Copy + Eq + std::hash::Hash>(v: Vec<T>) -> Vec<T> {
    let mut seen = HashSet::with_capacity(v.len());
    v.into_iter().filter(|x| seen.insert(*x)).collect()
}

/// Indexes the training split; `valid` and `test` only feed `true_types_all`.
/// Repeated triples, assertions and type triples are dropped.
pub fn build_kb(
    sizes: KbSizes,
    triples: Vec<Triple>,
    assertions: Vec<TypeAssertion>,
    valid: &[TypeAssertion],
    test: &[TypeAssertion],
    type_triples: Vec<TypeTriple>,
) -> Result<KnowledgeBase> {
    let triples = dedup_stable(triples);
    let assertions = dedup_stable(assertions);
    let type_triples = dedup_stable(type_triples);
    for t in &triples {
        check(t.head, sizes.entities, "entity")?;
        check(t.tail, sizes.entities, "entity")?;
        check(t.rel, sizes.relations, "relation")?;
    }
    for a in assertions.iter().chain(valid).chain(test) {
        check(a.entity, sizes.entities, "entity")?;
        check(a.ty, sizes.types, "type")?;
    }
    for z in &type_triples {
        check(z.head_type, sizes.types, "type")?;
        check(z.tail_type, sizes.types, "type")?;
        check(z.rel, sizes.relations, "relation")?;
    }

    let mut out_edges = vec![Vec::new(); sizes.entities];
    let mut in_edges = vec![Vec::new(); sizes.entities];
    for t in &triples {
        out_edges[t.head as usize].push((t.rel, t.tail));
        in_edges[t.tail as usize].push((t.rel, t.head));
    }
    let types_of = sorted_sets(sizes.entities, assertions.iter().map(|a| (a.entity, a.ty)));
    let true_types_all = sorted_sets(
        sizes.entities,
        assertions
            .iter()
            .chain(valid)
            .chain(test)
            .map(|a| (a.entity, a.ty)),
    );

    Ok(KnowledgeBase {
        sizes,
        triples,
        assertions,
        type_triples,
        types_of,
        out_edges,
        in_edges,
        true_types_all,
    })
}

impl KnowledgeBase {
    /// Training types of `e`, ascending.
    pub fn types_of(&self, e: EntityId) -> &[TypeId] {
        &self.types_of[e as usize]
    }

    pub fn types_of_all(&self) -> &[Vec<TypeId>] {
        &self.types_of
    }

    /// `(relation, tail)` for every triple with `e` as head.
    pub fn out_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.out_edges[e as usize]
    }

    /// `(relation, head)` for every triple with `e` as tail.
    pub fn in_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.in_edges[e as usize]
    }

    /// Types of `e` across train, valid and test assertions, ascending.
    pub fn true_types(&self, e: EntityId) -> &[TypeId] {
        &self.true_types_all[e as usize]
    }

    pub fn is_true_type(&self, e: EntityId, t: TypeId) -> bool {
        self.true_types(e).binary_search(&t).is_ok()
    }
}

/// Output of type-triple synthesis together with its bookkeeping counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTypeTriples {
    pub type_triples: Vec<TypeTriple>,
    /// Candidates produced before deduplication.
    pub expansions: u64,
    /// Distinct candidates before the frequency cut.
    pub unique: usize,
}

/// Replaces both ends of each triple by each of their training types and keeps the
/// distinct candidates generated at least `min_count` times, sorted by id.
pub fn generate_type_triples_counted(
    triples: &[Triple],
    types_of: &[Vec<TypeId>],
    min_count: u32,
) -> Result<GeneratedTypeTriples> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be positive".into()));
    }
    let no_types: &[TypeId] = &[];
    let lookup = |e: EntityId| types_of.get(e as usize).map_or(no_types, Vec::as_slice);

    let mut counts: HashMap<TypeTriple, u32> = HashMap::new();
    let mut expansions = 0u64;
    for t in triples {
        for &head_type in lookup(t.head) {
            for &tail_type in lookup(t.tail) {
                expansions += 1;
                *counts
                    .entry(TypeTriple {
                        head_type,
                        rel: t.rel,
                        tail_type,
                    })
                    .or_insert(0) += 1;
            }
        }
    }
    let unique = counts.len();
    let mut type_triples: Vec<TypeTriple> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(z, _)| z)
        .collect();
    type_triples.sort_unstable();
    Ok(GeneratedTypeTriples {
        type_triples,
        expansions,
        unique,
    })
}

pub fn generate_type_triples(
    triples: &[Triple],
    types_of: &[Vec<TypeId>],
    min_count: u32,
) -> Result<Vec<TypeTriple>> {
    generate_type_triples_counted(triples, types_of, min_count).map(|g| g.type_triples)
}
