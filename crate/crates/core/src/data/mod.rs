//! Dataset ingestion: vocabularies, TSV records, the indexed knowledge base and
//! type-triple synthesis.
//!
//! A prepared data directory holds the training vocabularies and every split in
//! surface form, so training and evaluation never re-derive ids:
//!
//! ```text
//! vocab_entity.tsv  vocab_relation.tsv  vocab_type.tsv
//! triples_train.tsv types_train.tsv     [types_valid.tsv] [types_test.tsv]
//! type_triples.tsv  prepare_stats.json
//! ```

mod kb;
mod records;
mod vocab;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use kb::{
    build_kb, generate_type_triples, generate_type_triples_counted, GeneratedTypeTriples, KbSizes,
    KnowledgeBase,
};
pub use records::{
    load_triples, load_type_assertions, load_type_assertions_lenient, load_type_triples,
    write_triples, write_type_assertions, write_type_triples, write_vocab, AssertionSplit,
    EntityId, RelationId, Triple, TypeAssertion, TypeId, TypeTriple,
};
pub use vocab::Vocab;

use crate::error::{Error, Result};

pub const VOCAB_ENTITY: &str = "vocab_entity.tsv";
pub const VOCAB_RELATION: &str = "vocab_relation.tsv";
pub const VOCAB_TYPE: &str = "vocab_type.tsv";
pub const TRIPLES_TRAIN: &str = "triples_train.tsv";
pub const TYPES_TRAIN: &str = "types_train.tsv";
pub const TYPES_VALID: &str = "types_valid.tsv";
pub const TYPES_TEST: &str = "types_test.tsv";
pub const TYPE_TRIPLES: &str = "type_triples.tsv";
pub const PREPARE_STATS: &str = "prepare_stats.json";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabs {
    pub entities: Vocab,
    pub relations: Vocab,
    pub types: Vocab,
}

impl Vocabs {
    pub fn sizes(&self) -> KbSizes {
        KbSizes {
            entities: self.entities.len(),
            relations: self.relations.len(),
            types: self.types.len(),
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_vocab(&dir.join(VOCAB_ENTITY), &self.entities)?;
        write_vocab(&dir.join(VOCAB_RELATION), &self.relations)?;
        write_vocab(&dir.join(VOCAB_TYPE), &self.types)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        Ok(Self {
            entities: Vocab::read_tsv(&dir.join(VOCAB_ENTITY))?,
            relations: Vocab::read_tsv(&dir.join(VOCAB_RELATION))?,
            types: Vocab::read_tsv(&dir.join(VOCAB_TYPE))?,
        })
    }
}

/// Source files for [`prepare`].
#[derive(Debug, Clone)]
pub struct PrepareInputs {
    pub triples: PathBuf,
    pub types: PathBuf,
    pub valid_types: Option<PathBuf>,
    pub test_types: Option<PathBuf>,
    pub min_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepareStats {
    pub entities: usize,
    pub relations: usize,
    pub types: usize,
    pub triples: usize,
    pub assertions: usize,
    pub valid_assertions: usize,
    pub test_assertions: usize,
    pub valid_skipped: usize,
    pub test_skipped: usize,
    pub min_count: u32,
    pub expansions: u64,
    pub unique_type_triples: usize,
    pub surviving_type_triples: usize,
}

/// Everything [`prepare`] produced, held in memory until written.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocabs: Vocabs,
    pub triples: Vec<Triple>,
    pub assertions: Vec<TypeAssertion>,
    pub valid: Option<AssertionSplit>,
    pub test: Option<AssertionSplit>,
    pub generation: GeneratedTypeTriples,
}

/// Loads raw training files, builds vocabularies from the training split only and
/// synthesizes the type triples. Nothing is written.
pub fn prepare(inputs: &PrepareInputs) -> Result<Prepared> {
    let mut vocabs = Vocabs::default();
    let triples = load_triples(
        &inputs.triples,
        &mut vocabs.entities,
        &mut vocabs.relations,
        true,
    )?;
    let assertions =
        load_type_assertions(&inputs.types, &mut vocabs.entities, &mut vocabs.types, true)?;
    let lenient = |p: &Option<PathBuf>| {
        p.as_deref()
            .map(|p| load_type_assertions_lenient(p, &vocabs.entities, &vocabs.types))
            .transpose()
    };
    let valid = lenient(&inputs.valid_types)?;
    let test = lenient(&inputs.test_types)?;

    let types_of = {
        let kb = build_kb(vocabs.sizes(), Vec::new(), assertions.clone(), &[], &[], Vec::new())?;
        kb.types_of_all().to_vec()
    };
    let generation = generate_type_triples_counted(&triples, &types_of, inputs.min_count)?;
    Ok(Prepared {
        vocabs,
        triples,
        assertions,
        valid,
        test,
        generation,
    })
}

impl Prepared {
    pub fn stats(&self, min_count: u32) -> PrepareStats {
        let split = |s: &Option<AssertionSplit>| {
            s.as_ref()
                .map_or((0, 0), |s| (s.assertions.len(), s.skipped))
        };
        let (valid_assertions, valid_skipped) = split(&self.valid);
        let (test_assertions, test_skipped) = split(&self.test);
        PrepareStats {
            entities: self.vocabs.entities.len(),
            relations: self.vocabs.relations.len(),
            types: self.vocabs.types.len(),
            triples: self.triples.len(),
            assertions: self.assertions.len(),
            valid_assertions,
            test_assertions,
            valid_skipped,
            test_skipped,
            min_count,
            expansions: self.generation.expansions,
            unique_type_triples: self.generation.unique,
            surviving_type_triples: self.generation.type_triples.len(),
        }
    }

    /// Writes the prepared data directory, creating it if needed.
    pub fn write_dir(&self, dir: &Path, min_count: u32) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let v = &self.vocabs;
        v.write_dir(dir)?;
        write_triples(&dir.join(TRIPLES_TRAIN), &self.triples, &v.entities, &v.relations)?;
        write_type_assertions(&dir.join(TYPES_TRAIN), &self.assertions, &v.entities, &v.types)?;
        if let Some(s) = &self.valid {
            write_type_assertions(&dir.join(TYPES_VALID), &s.assertions, &v.entities, &v.types)?;
        }
        if let Some(s) = &self.test {
            write_type_assertions(&dir.join(TYPES_TEST), &s.assertions, &v.entities, &v.types)?;
        }
        write_type_triples(
            &dir.join(TYPE_TRIPLES),
            &self.generation.type_triples,
            &v.types,
            &v.relations,
        )?;
        let stats = serde_json::to_string_pretty(&self.stats(min_count))
            .expect("stats serialize");
        let path = dir.join(PREPARE_STATS);
        std::fs::write(&path, stats + "\n").map_err(|e| Error::io(path, e))
    }
}

/// A prepared directory loaded back with its vocabularies fixed.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub vocabs: Vocabs,
    pub kb: KnowledgeBase,
    pub valid: Vec<TypeAssertion>,
    pub test: Vec<TypeAssertion>,
    /// Valid/test lines dropped for naming symbols outside the training vocabularies.
    pub valid_skipped: usize,
    pub test_skipped: usize,
}

impl Dataset {
    /// Loads a prepared directory; vocabularies come from its dumps unless `vocabs` is given.
    pub fn load(dir: &Path, vocabs: Option<Vocabs>) -> Result<Self> {
        let mut vocabs = match vocabs {
            Some(v) => v,
            None => Vocabs::read_dir(dir)?,
        };
        let triples = load_triples(
            &dir.join(TRIPLES_TRAIN),
            &mut vocabs.entities,
            &mut vocabs.relations,
            false,
        )?;
        let assertions = load_type_assertions(
            &dir.join(TYPES_TRAIN),
            &mut vocabs.entities,
            &mut vocabs.types,
            false,
        )?;
        let type_triples = load_type_triples(
            &dir.join(TYPE_TRIPLES),
            &mut vocabs.types,
            &mut vocabs.relations,
            false,
        )?;
        let optional = |name: &str| -> Result<AssertionSplit> {
            let p = dir.join(name);
            if p.exists() {
                load_type_assertions_lenient(&p, &vocabs.entities, &vocabs.types)
            } else {
                Ok(AssertionSplit::default())
            }
        };
        let valid = optional(TYPES_VALID)?;
        let test = optional(TYPES_TEST)?;
        let kb = build_kb(
            vocabs.sizes(),
            triples,
            assertions,
            &valid.assertions,
            &test.assertions,
            type_triples,
        )?;
        Ok(Self {
            dir: dir.to_owned(),
            vocabs,
            kb,
            valid: valid.assertions,
            test: test.assertions,
            valid_skipped: valid.skipped,
            test_skipped: test.skipped,
        })
    }

    /// Files that define the dataset, for content hashing.
    pub fn files(dir: &Path) -> Vec<PathBuf> {
        [
            VOCAB_ENTITY,
            VOCAB_RELATION,
            VOCAB_TYPE,
            TRIPLES_TRAIN,
            TYPES_TRAIN,
            TYPES_VALID,
            TYPES_TEST,
            TYPE_TRIPLES,
        ]
        .iter()
        .map(|f| dir.join(f))
        .filter(|p| p.exists())
        .collect()
    }
}
