use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use provcheck_core::engine::{canonical_json, EventSink, Store, StoreError, StoreEvent};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("cannot open journal {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("journal {path} line {line}: {source}")]
    Replay {
        path: PathBuf,
        line: usize,
        #[source]
        source: StoreError,
    },
}

/// Appends one JSON line per store event, flushed before returning.
pub struct JournalSink {
    path: PathBuf,
    file: Mutex<File>,
}

impl JournalSink {
    pub fn open(path: &Path) -> Result<Self, JournalError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| JournalError::Io {
                path: path.to_owned(),
                source,
            })?;
        Ok(Self {
            path: path.to_owned(),
            file: Mutex::new(file),
        })
    }
}

impl EventSink for JournalSink {
    fn record(&self, event: &StoreEvent) {
        let mut line = canonical_json(event);
        line.push('\n');
        let mut file = self.file.lock().unwrap();
        let written = file.write_all(line.as_bytes()).and_then(|_| file.sync_data());
        if let Err(e) = written {
            tracing::error!(path = %self.path.display(), error = %e, "journal write failed");
        }
    }
}

/// Replays every event in `path` into `store`. A missing file is an empty
/// journal. A final line without its newline is a torn write; it is skipped
/// and cut from the file so later appends start on a fresh line.
pub fn replay_journal(path: &Path, store: &Store) -> Result<usize, JournalError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(source) => {
            return Err(JournalError::Io {
                path: path.to_owned(),
                source,
            })
        }
    };
    let mut reader = BufReader::new(file);
    let mut count = 0;
    let mut line_no = 0;
    let mut offset = 0u64;
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|source| JournalError::Io {
            path: path.to_owned(),
            source,
        })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if !buf.ends_with('\n') {
            tracing::warn!(path = %path.display(), line = line_no, "dropping torn final journal line");
            drop(reader);
            OpenOptions::new()
                .write(true)
                .open(path)
                .and_then(|f| f.set_len(offset))
                .map_err(|source| JournalError::Io {
                    path: path.to_owned(),
                    source,
                })?;
            break;
        }
        offset += n as u64;
        if buf.trim().is_empty() {
            continue;
        }
        let event: StoreEvent = serde_json::from_str(&buf).map_err(|e| JournalError::Corrupt {
            path: path.to_owned(),
            line: line_no,
            reason: e.to_string(),
        })?;
        store.replay(event).map_err(|source| JournalError::Replay {
            path: path.to_owned(),
            line: line_no,
            source,
        })?;
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use provcheck_core::engine::{AnalysisInput, Engine, EngineConfig};
    use provcheck_core::ingest::Article;
    use provcheck_core::llm::{MockBackend, MockScript};
    use std::sync::Arc;

    const VERDICT: &str =
        "{'1-relevant': True, '1-reason': 'a', '2-relevant': True, '2-reason': 'b', '3-assessment': 'RELEVANT'}";

    fn journalled(path: &Path) -> Engine {
        let store = Store::with_sink(Arc::new(JournalSink::open(path).unwrap()));
        replay_journal(path, &store).unwrap();
        let backend = MockBackend::new(MockScript::default().with_default(VERDICT));
        Engine::with_store(EngineConfig::default(), Arc::new(backend), store)
    }

    fn analyze(engine: &Engine) -> String {
        engine.analyze(AnalysisInput::Article(Article::new("t", "b"))).unwrap().id.clone()
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(replay_journal(&dir.path().join("none.jsonl"), &Store::new()).unwrap(), 0);
    }

    #[test]
    fn torn_tail_is_dropped_and_appends_stay_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let first = analyze(&journalled(&path));
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"analysis_st").unwrap();
        drop(f);

        let engine = journalled(&path);
        assert!(engine.store().analysis(&first).is_some());
        let second = analyze(&engine);

        let store = Store::new();
        assert_eq!(replay_journal(&path, &store).unwrap(), 2);
        assert!(store.analysis(&second).is_some());
    }

    #[test]
    fn corrupt_line_is_reported_with_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        analyze(&journalled(&path));
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"garbage\n").unwrap();
        match replay_journal(&path, &Store::new()) {
            Err(JournalError::Corrupt { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_event_is_a_replay_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        analyze(&journalled(&path));
        let line = std::fs::read_to_string(&path).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(line.as_bytes()).unwrap();
        assert!(matches!(replay_journal(&path, &Store::new()), Err(JournalError::Replay { line: 2, .. })));
    }
}
