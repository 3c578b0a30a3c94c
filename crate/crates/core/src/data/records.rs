use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::Vocab;
use crate::error::{Error, Result};

pub type EntityId = u32;
pub type RelationId = u32;
pub type TypeId = u32;

/// A fact `(head, relation, tail)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub rel: RelationId,
    pub tail: EntityId,
}

/// An `(entity, type)` assertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeAssertion {
    pub entity: EntityId,
    pub ty: TypeId,
}

/// `(head_type, relation, tail_type)`, obtained by replacing both ends of a triple with a type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeTriple {
    pub head_type: TypeId,
    pub rel: RelationId,
    pub tail_type: TypeId,
}

/// Assertions read without growing the vocabularies; unresolvable lines are counted, not fatal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssertionSplit {
    pub assertions: Vec<TypeAssertion>,
    pub skipped: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Calls `f(line_no, fields)` for each non-empty line, enforcing the field count.
fn for_each_record<const N: usize>(
    path: &Path,
    mut f: impl FnMut(usize, [&str; N]) -> Result<()>,
) -> Result<()> {
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        let fields: [&str; N] = parts.as_slice().try_into().map_err(|_| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            message: format!("expected {N} tab-separated fields, found {}", parts.len()),
        })?;
        f(n + 1, fields)?;
    }
    Ok(())
}

fn resolve(
    vocab: &mut Vocab,
    grow: bool,
    symbol: &str,
    kind: &'static str,
    path: &Path,
    line: usize,
) -> Result<u32> {
    if grow {
        return Ok(vocab.get_or_insert(symbol));
    }
    vocab.get(symbol).ok_or_else(|| Error::UnknownSymbol {
        path: path.to_owned(),
        line,
        kind,
        symbol: symbol.to_owned(),
    })
}

/// Reads `head<TAB>relation<TAB>tail` lines.
pub fn load_triples(
    path: &Path,
    entities: &mut Vocab,
    relations: &mut Vocab,
    grow: bool,
) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for_each_record(path, |line, [h, r, t]| {
        let head = resolve(entities, grow, h, "entity", path, line)?;
        let rel = resolve(relations, grow, r, "relation", path, line)?;
        let tail = resolve(entities, grow, t, "entity", path, line)?;
        out.push(Triple { head, rel, tail });
        Ok(())
    })?;
    Ok(out)
}

/// Reads `entity<TAB>type` lines.
pub fn load_type_assertions(
    path: &Path,
    entities: &mut Vocab,
    types: &mut Vocab,
    grow: bool,
) -> Result<Vec<TypeAssertion>> {
    let mut out = Vec::new();
    for_each_record(path, |line, [e, t]| {
        let entity = resolve(entities, grow, e, "entity", path, line)?;
        let ty = resolve(types, grow, t, "type", path, line)?;
        out.push(TypeAssertion { entity, ty });
        Ok(())
    })?;
    Ok(out)
}

/// Like [`load_type_assertions`] with fixed vocabularies, skip-counting unknown symbols.
pub fn load_type_assertions_lenient(
    path: &Path,
    entities: &Vocab,
    types: &Vocab,
) -> Result<AssertionSplit> {
    let mut split = AssertionSplit::default();
    for_each_record(path, |_, [e, t]| {
        match (entities.get(e), types.get(t)) {
            (Some(entity), Some(ty)) => split.assertions.push(TypeAssertion { entity, ty }),
            _ => split.skipped += 1,
        }
        Ok(())
    })?;
    Ok(split)
}

/// Reads `head_type<TAB>relation<TAB>tail_type` lines.
pub fn load_type_triples(
    path: &Path,
    types: &mut Vocab,
    relations: &mut Vocab,
    grow: bool,
) -> Result<Vec<TypeTriple>> {
    let mut out = Vec::new();
    for_each_record(path, |line, [h, r, t]| {
        let head_type = resolve(types, grow, h, "type", path, line)?;
        let rel = resolve(relations, grow, r, "relation", path, line)?;
        let tail_type = resolve(types, grow, t, "type", path, line)?;
        out.push(TypeTriple {
            head_type,
            rel,
            tail_type,
        });
        Ok(())
    })?;
    Ok(out)
}

fn name(vocab: &Vocab, id: u32) -> std::io::Result<&str> {
    vocab.name(id).ok_or_else(|| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("id {id} outside vocabulary of size {}", vocab.len()),
        )
    })
}

fn write_lines(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_triples(
    path: &Path,
    triples: &[Triple],
    entities: &Vocab,
    relations: &Vocab,
) -> Result<()> {
    write_lines(path, |out| {
        for t in triples {
            writeln!(
                out,
                "{}\t{}\t{}",
                name(entities, t.head)?,
                name(relations, t.rel)?,
                name(entities, t.tail)?
            )?;
        }
        Ok(())
    })
}

pub fn write_type_assertions(
    path: &Path,
    assertions: &[TypeAssertion],
    entities: &Vocab,
    types: &Vocab,
) -> Result<()> {
    write_lines(path, |out| {
        for a in assertions {
            writeln!(out, "{}\t{}", name(entities, a.entity)?, name(types, a.ty)?)?;
        }
        Ok(())
    })
}

pub fn write_type_triples(
    path: &Path,
    type_triples: &[TypeTriple],
    types: &Vocab,
    relations: &Vocab,
) -> Result<()> {
    write_lines(path, |out| {
        for t in type_triples {
            writeln!(
                out,
                "{}\t{}\t{}",
                name(types, t.head_type)?,
                name(relations, t.rel)?,
                name(types, t.tail_type)?
            )?;
        }
        Ok(())
    })
}

pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    write_lines(path, |out| vocab.write_tsv(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_a_fact() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.tsv", "Barack_Obama\tborn_in\tHonolulu\n");
        let (mut ents, mut rels) = (Vocab::new(), Vocab::new());
        let triples = load_triples(&p, &mut ents, &mut rels, true).unwrap();
        assert_eq!(
            triples,
            vec![Triple {
                head: ents.get("Barack_Obama").unwrap(),
                rel: rels.get("born_in").unwrap(),
                tail: ents.get("Honolulu").unwrap(),
            }]
        );
    }

    #[test]
    fn parses_an_assertion() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "h.tsv", "Barack_Obama\t/people/person\n");
        let (mut ents, mut types) = (Vocab::new(), Vocab::new());
        let h = load_type_assertions(&p, &mut ents, &mut types, true).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(types.name(h[0].ty), Some("/people/person"));
        assert_eq!(ents.name(h[0].entity), Some("Barack_Obama"));
    }

    #[test]
    fn empty_files_give_empty_lists() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.tsv", "");
        let (mut a, mut b) = (Vocab::new(), Vocab::new());
        assert!(load_triples(&p, &mut a, &mut b, true).unwrap().is_empty());
        assert!(load_type_assertions(&p, &mut a, &mut b, true).unwrap().is_empty());
    }

    #[test]
    fn five_triples_round_trip() {
        let body = "a\tr1\tb\nb\tr2\tc\nc\tr1\ta\nd\tr3\te\na\tr2\te\n";
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.tsv", body);
        let (mut ents, mut rels) = (Vocab::new(), Vocab::new());
        let triples = load_triples(&p, &mut ents, &mut rels, true).unwrap();
        assert_eq!(triples.len(), 5);
        let out = dir.path().join("out.tsv");
        write_triples(&out, &triples, &ents, &rels).unwrap();
        assert_eq!(fs::read_to_string(out).unwrap(), body);
    }

    #[test]
    fn ten_assertions_round_trip() {
        let body: String = (0..10)
            .map(|i| format!("ent{}\t/type/{}\n", i % 7, i % 3))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "h.tsv", &body);
        let (mut ents, mut types) = (Vocab::new(), Vocab::new());
        let h = load_type_assertions(&p, &mut ents, &mut types, true).unwrap();
        assert_eq!(h.len(), 10);
        let out = dir.path().join("out.tsv");
        write_type_assertions(&out, &h, &ents, &types).unwrap();
        assert_eq!(fs::read_to_string(out).unwrap(), body);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.tsv", "a\tr\tb\nbroken line\n");
        let (mut a, mut b) = (Vocab::new(), Vocab::new());
        match load_triples(&p, &mut a, &mut b, true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unseen_symbol_without_grow_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.tsv", "a\tr\tb\n");
        let mut ents = Vocab::from_names(["a"]).unwrap();
        let mut rels = Vocab::from_names(["r"]).unwrap();
        match load_triples(&p, &mut ents, &mut rels, false) {
            Err(Error::UnknownSymbol { symbol, line, .. }) => {
                assert_eq!(symbol, "b");
                assert_eq!(line, 1);
            }
            other => panic!("expected vocabulary error, got {other:?}"),
        }
        assert_eq!(ents.len(), 1);
    }

    #[test]
    fn lenient_loader_counts_unknowns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "h.tsv", "a\tT\nzz\tT\na\tUnseen\n");
        let ents = Vocab::from_names(["a"]).unwrap();
        let types = Vocab::from_names(["T"]).unwrap();
        let split = load_type_assertions_lenient(&p, &ents, &types).unwrap();
        assert_eq!(split.assertions.len(), 1);
        assert_eq!(split.skipped, 2);
    }
}
