//! Persistent append-only cache of intersection numbers.
//!
//! One record per line: `sha256hex \t canonical-query-json \t value`.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use selfmap_chow::rational::parse_rational;
use selfmap_chow::Rational;

use crate::query::strict;

pub const DEFAULT_PATH: &str = ".selfmap-chow.cache";

pub fn digest(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// How loading went; problems are reported, never fatal.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub records: usize,
    pub problems: Vec<String>,
}

pub struct Cache {
    path: PathBuf,
    entries: HashMap<String, (String, Rational)>,
    writer: Mutex<Option<BufWriter<File>>>,
    pub hits: u64,
    pub misses: u64,
}

impl Cache {
    /// Loads `path`.  A file with malformed or contradictory records is
    /// rewritten from its consistent records.
    pub fn open(path: &Path) -> (Cache, LoadReport) {
        let mut report = LoadReport::default();
        let mut entries: HashMap<String, (String, Rational)> = HashMap::new();
        let mut conflicting = Vec::new();
        match fs::read_to_string(path) {
            Ok(text) => {
                for (lineno, line) in text.lines().enumerate() {
                    match parse_record(line) {
                        Ok((key, query, value)) => match entries.get(&key) {
                            Some((_, existing)) if *existing != value => {
                                report
                                    .problems
                                    .push(format!("line {}: conflicting value for {key}", lineno + 1));
                                conflicting.push(key);
                            }
                            Some(_) => {}
                            None => {
                                entries.insert(key, (query, value));
                            }
                        },
                        Err(why) => report.problems.push(format!("line {}: {why}", lineno + 1)),
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => report.problems.push(format!("unreadable: {e}")),
        }
        for key in conflicting {
            entries.remove(&key);
        }
        let cache = Cache {
            path: path.to_path_buf(),
            entries,
            writer: Mutex::new(None),
            hits: 0,
            misses: 0,
        };
        if !report.problems.is_empty() {
            if let Err(e) = cache.rewrite() {
                report.problems.push(format!("could not rebuild: {e}"));
            }
        }
        report.records = cache.entries.len();
        (cache, report)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn lookup(&mut self, canonical: &str) -> Option<Rational> {
        let found = self
            .entries
            .get(&digest(canonical))
            .filter(|(q, _)| q == canonical)
            .map(|(_, v)| v.clone());
        match found {
            Some(_) => self.hits += 1,
            None => self.misses += 1,
        }
        found
    }

    /// Records a freshly computed value and appends it to the file.
    pub fn insert(&mut self, canonical: &str, value: &Rational) -> std::io::Result<()> {
        let key = digest(canonical);
        if self.entries.contains_key(&key) {
            return Ok(());
        }
        self.entries.insert(key.clone(), (canonical.to_string(), value.clone()));
        let mut guard = self.writer.lock().unwrap();
        if guard.is_none() {
            let file = OpenOptions::new().create(true).append(true).open(&self.path)?;
            *guard = Some(BufWriter::new(file));
        }
        let writer = guard.as_mut().unwrap();
        writeln!(writer, "{key}\t{canonical}\t{}", strict(value))?;
        writer.flush()
    }

    fn rewrite(&self) -> std::io::Result<()> {
        let tmp = self.path.with_extension("rebuild");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            let mut records: Vec<_> = self.entries.iter().collect();
            records.sort_by(|a, b| a.0.cmp(b.0));
            for (key, (query, value)) in records {
                writeln!(out, "{key}\t{query}\t{}", strict(value))?;
            }
            out.flush()?;
        }
        fs::rename(tmp, &self.path)
    }
}

fn parse_record(line: &str) -> Result<(String, String, Rational), String> {
    let mut fields = line.split('\t');
    let (Some(key), Some(query), Some(value), None) = (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err("expected three tab-separated fields".into());
    };
    if digest(query) != key {
        return Err("hash does not match query".into());
    }
    let value = parse_rational(value).map_err(|e| e.to_string())?;
    Ok((key.to_string(), query.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfmap_chow::rational::rat;

    #[test]
    fn records_survive_reopening() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        let (mut cache, report) = Cache::open(&path);
        assert!(report.problems.is_empty());
        cache.insert("{\"q\":1}", &rat(-1, 4)).unwrap();
        drop(cache);
        let (mut cache, report) = Cache::open(&path);
        assert_eq!(report.records, 1);
        assert_eq!(cache.lookup("{\"q\":1}"), Some(rat(-1, 4)));
        assert_eq!(cache.lookup("{\"q\":2}"), None);
        assert_eq!((cache.hits, cache.misses), (1, 1));
    }

    #[test]
    fn contradictory_duplicates_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        let q = "{\"q\":1}";
        let key = digest(q);
        fs::write(&path, format!("{key}\t{q}\t1/2\n{key}\t{q}\t1/3\n{key}\t{q}\t1/2\n")).unwrap();
        let (mut cache, report) = Cache::open(&path);
        assert!(!report.problems.is_empty());
        assert_eq!(cache.lookup(q), None);
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn agreeing_duplicates_are_fine() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        let q = "{\"q\":1}";
        let key = digest(q);
        fs::write(&path, format!("{key}\t{q}\t1/2\n{key}\t{q}\t1/2\n")).unwrap();
        let (_, report) = Cache::open(&path);
        assert!(report.problems.is_empty());
        assert_eq!(report.records, 1);
    }
}
