//! Record/replay stores standing in for the suggestion and search services.
//!
//! In [`StoreMode::Replay`] a store only answers from what was recorded and
//! never calls a [`Fetcher`]. In [`StoreMode::RecordMissing`] unknown keys are
//! fetched once, kept, and written back by the caller.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::normalize_query;
use crate::categorizer::SearchResultPage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoreMode {
    Replay,
    RecordMissing,
}

impl FromStr for StoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay" => Ok(Self::Replay),
            "record-missing" => Ok(Self::RecordMissing),
            _ => Err(Error::InvalidArgument(format!(
                "unknown store mode `{s}` (expected replay or record-missing)"
            ))),
        }
    }
}

/// Source of fresh responses for keys a store has not recorded.
pub trait Fetcher<T> {
    fn fetch(&mut self, key: &str) -> Result<T>;
}

impl<T, F: FnMut(&str) -> Result<T>> Fetcher<T> for F {
    fn fetch(&mut self, key: &str) -> Result<T> {
        self(key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureStore<T> {
    entries: BTreeMap<String, T>,
    mode: StoreMode,
    recorded: usize,
}

impl<T: Clone> FixtureStore<T> {
    pub fn new(mode: StoreMode) -> Self {
        Self::from_entries(mode, BTreeMap::new())
    }

    pub fn from_entries(mode: StoreMode, entries: BTreeMap<String, T>) -> Self {
        Self {
            entries,
            mode,
            recorded: 0,
        }
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, T> {
        &self.entries
    }

    /// Responses fetched since the store was created.
    pub fn newly_recorded(&self) -> usize {
        self.recorded
    }

    /// The recorded response, or [`Error::NotRecorded`].
    pub fn get(&self, key: &str) -> Result<&T> {
        self.entries.get(key).ok_or_else(|| Error::NotRecorded(key.to_string()))
    }

    /// Recorded response for `key`. In replay mode a miss is `None`; in
    /// record-missing mode the fetcher is asked and its answer kept.
    pub fn lookup(&mut self, key: &str, fetcher: Option<&mut (dyn Fetcher<T> + '_)>) -> Result<Option<T>> {
        if let Some(v) = self.entries.get(key) {
            return Ok(Some(v.clone()));
        }
        match self.mode {
            StoreMode::Replay => Ok(None),
            StoreMode::RecordMissing => {
                let fetcher = fetcher.ok_or_else(|| {
                    Error::Config("record-missing mode needs a fetcher for unrecorded keys".into())
                })?;
                let v = fetcher.fetch(key)?;
                self.entries.insert(key.to_string(), v.clone());
                self.recorded += 1;
                Ok(Some(v))
            }
        }
    }
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path, mut f: impl FnMut(usize, T) -> Result<()>) -> Result<()> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::parse(path.display().to_string(), i + 1, e.to_string()))?;
        f(i + 1, rec)?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("replacing {}", path.display()), e))
}

#[derive(Serialize, Deserialize)]
struct SuggestionLine {
    entity: String,
    suggestion: String,
}

/// Suggestions keyed by normalized entity name, read from
/// `{"entity", "suggestion"}` lines. Order within an entity is kept.
pub fn load_suggestion_store(path: &Path, mode: StoreMode) -> Result<FixtureStore<Vec<String>>> {
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    read_lines(path, |line, rec: SuggestionLine| {
        let entity = normalize_query(&rec.entity);
        let suggestion = normalize_query(&rec.suggestion);
        if entity.is_empty() || suggestion.is_empty() {
            return Err(Error::parse(path.display().to_string(), line, "empty suggestion field"));
        }
        entries.entry(entity).or_default().push(suggestion);
        Ok(())
    })?;
    Ok(FixtureStore::from_entries(mode, entries))
}

pub fn save_suggestion_store(store: &FixtureStore<Vec<String>>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for (entity, suggestions) in store.entries() {
        for s in suggestions {
            let line = SuggestionLine {
                entity: entity.clone(),
                suggestion: s.clone(),
            };
            serde_json::to_writer(&mut buf, &line)?;
            buf.push(b'\n');
        }
    }
    write_atomic(path, &buf)
}

/// Search result pages keyed by query, one JSON page per line.
pub fn load_search_store(path: &Path, mode: StoreMode) -> Result<FixtureStore<SearchResultPage>> {
    let mut entries = BTreeMap::new();
    read_lines(path, |line, page: SearchResultPage| {
        let page = SearchResultPage::new(normalize_query(&page.query), page.results)
            .map_err(|e| Error::parse(path.display().to_string(), line, e.to_string()))?;
        if entries.insert(page.query.clone(), page).is_some() {
            return Err(Error::parse(path.display().to_string(), line, "query recorded twice"));
        }
        Ok(())
    })?;
    Ok(FixtureStore::from_entries(mode, entries))
}

pub fn save_search_store(store: &FixtureStore<SearchResultPage>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for page in store.entries().values() {
        serde_json::to_writer(&mut buf, page)?;
        buf.write_all(b"\n").map_err(|e| Error::io("buffering search store", e))?;
    }
    write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_never_fetches() {
        let mut store = FixtureStore::from_entries(StoreMode::Replay, BTreeMap::from([("a".to_string(), 1)]));
        let mut calls = 0;
        let mut f = |_: &str| -> Result<i32> {
            calls += 1;
            Ok(9)
        };
        assert_eq!(store.lookup("a", Some(&mut f)).unwrap(), Some(1));
        assert_eq!(store.lookup("b", Some(&mut f)).unwrap(), None);
        assert!(matches!(store.get("b"), Err(Error::NotRecorded(_))));
        assert_eq!(calls, 0);
    }

    #[test]
    fn record_missing_fetches_once() {
        let mut store: FixtureStore<usize> = FixtureStore::new(StoreMode::RecordMissing);
        let mut calls = 0;
        let mut f = |k: &str| -> Result<usize> {
            calls += 1;
            Ok(k.len())
        };
        assert_eq!(store.lookup("abc", Some(&mut f)).unwrap(), Some(3));
        assert_eq!(store.lookup("abc", Some(&mut f)).unwrap(), Some(3));
        assert_eq!(calls, 1);
        assert_eq!(store.newly_recorded(), 1);
        assert!(matches!(store.lookup("zz", None), Err(Error::Config(_))));
    }

    #[test]
    fn stores_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        std::fs::write(
            &path,
            "{\"entity\":\"Sydney\",\"suggestion\":\"sydney  map\"}\n{\"entity\":\"sydney\",\"suggestion\":\"sydney weather\"}\n",
        )
        .unwrap();
        let store = load_suggestion_store(&path, StoreMode::Replay).unwrap();
        assert_eq!(store.get("sydney").unwrap(), &vec!["sydney map".to_string(), "sydney weather".into()]);
        save_suggestion_store(&store, &path).unwrap();
        assert_eq!(load_suggestion_store(&path, StoreMode::Replay).unwrap(), store);

        let spath = dir.path().join("q.jsonl");
        std::fs::write(
            &spath,
            "{\"query\":\"x y\",\"results\":[{\"rank\":1,\"url\":\"https://www.ex.com/a\"}]}\n",
        )
        .unwrap();
        let search = load_search_store(&spath, StoreMode::Replay).unwrap();
        assert_eq!(search.get("x y").unwrap().results[0].domain, "ex.com");
        save_search_store(&search, &spath).unwrap();
        assert_eq!(load_search_store(&spath, StoreMode::Replay).unwrap(), search);
    }
}
