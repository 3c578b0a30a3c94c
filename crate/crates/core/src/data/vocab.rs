use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense, insertion-ordered mapping between surface strings and ids `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for name in names {
            let name = name.into();
            if vocab.index.contains_key(&name) {
                return Err(Error::Config(format!("duplicate vocabulary entry `{name}`")));
            }
            vocab.insert(name);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Returns the id of `name`, appending it if unseen.
    pub fn get_or_insert(&mut self, name: &str) -> u32 {
        match self.index.get(name) {
            Some(&id) => id,
            None => self.insert(name.to_owned()),
        }
    }

    fn insert(&mut self, name: String) -> u32 {
        let id = u32::try_from(self.names.len()).expect("vocabulary exceeds u32 ids");
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    /// Entries starting with the longest prefix of `query` that matches anything.
    pub fn prefix_matches(&self, query: &str, limit: usize) -> Vec<String> {
        let mut cut = query.len();
        loop {
            while !query.is_char_boundary(cut) {
                cut -= 1;
            }
            let prefix = &query[..cut];
            let mut hits: Vec<&String> = self
                .names
                .iter()
                .filter(|n| n.starts_with(prefix))
                .collect();
            if !hits.is_empty() || cut == 0 {
                hits.sort();
                return hits.into_iter().take(limit).cloned().collect();
            }
            cut -= 1;
        }
    }

    /// Writes `id<TAB>surface` lines.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (id, name) in self.names.iter().enumerate() {
            writeln!(out, "{id}\t{name}")?;
        }
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vocab = Self::new();
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: n + 1,
                message,
            };
            let (id, name) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `id<TAB>surface`".into()))?;
            let id: usize = id
                .parse()
                .map_err(|_| parse_err(format!("bad id `{id}`")))?;
            if id != vocab.len() {
                return Err(parse_err(format!("expected id {}, found {id}", vocab.len())));
            }
            if vocab.index.contains_key(name) {
                return Err(parse_err(format!("duplicate entry `{name}`")));
            }
            vocab.insert(name.to_owned());
        }
        Ok(vocab)
    }
}
