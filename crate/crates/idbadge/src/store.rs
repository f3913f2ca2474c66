//! JSON-lines event log.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use idbadge_core::{EngineConfig, Event, Ledger, ReplayError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: malformed event: {message}")]
    MalformedEvent { line: usize, message: String },
    #[error("line {line}: {source}")]
    Replay { line: usize, source: ReplayError },
}

/// An event with the 1-based line it was read from.
#[derive(Debug, Clone)]
pub struct NumberedEvent {
    pub line: usize,
    pub event: Event,
}

/// Parses JSON-lines events; blank lines are skipped.
pub fn parse_events<R: BufRead>(reader: R, path: &Path) -> Result<Vec<NumberedEvent>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io { path: path.to_owned(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .map_err(|e| StoreError::MalformedEvent { line: i + 1, message: e.to_string() })?;
        out.push(NumberedEvent { line: i + 1, event });
    }
    Ok(out)
}

pub fn read_events(path: &Path) -> Result<Vec<NumberedEvent>, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io { path: path.to_owned(), source })?;
    parse_events(BufReader::new(file), path)
}

/// Builds a ledger from any event file. Seed files (every seq zero) are
/// applied as one batch; stored logs are restored verbatim.
pub fn load_ledger(events: Vec<NumberedEvent>, cfg: EngineConfig) -> Result<Ledger, StoreError> {
    let lines: Vec<usize> = events.iter().map(|e| e.line).collect();
    let line_of = |e: ReplayError| StoreError::Replay { line: lines.get(e.index()).copied().unwrap_or(0), source: e };
    if events.iter().all(|e| e.event.seq.0 == 0) {
        let mut ledger = Ledger::new(cfg);
        ledger
            .submit_batch(events.into_iter().map(|e| (e.event.actor, e.event.at, e.event.kind)))
            .map_err(line_of)?;
        Ok(ledger)
    } else {
        Ledger::restore(cfg, events.into_iter().map(|e| e.event).collect()).map_err(line_of)
    }
}

/// Append-only handle on a log file.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens or creates the log and returns it with the restored ledger.
    pub fn open(path: impl Into<PathBuf>, cfg: EngineConfig) -> Result<(Self, Ledger), StoreError> {
        let path = path.into();
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
        let file = OpenOptions::new().create(true).append(true).read(true).open(&path).map_err(io_err)?;
        let events = parse_events(BufReader::new(&file), &path)?;
        let ledger = Ledger::restore(cfg, events.iter().map(|e| e.event.clone()).collect()).map_err(|e| {
            StoreError::Replay { line: events.get(e.index()).map_or(0, |n| n.line), source: e }
        })?;
        Ok((EventLog { path, file }, ledger))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the events and syncs before returning.
    pub fn append(&mut self, events: &[Event]) -> Result<(), StoreError> {
        let io_err = |source| StoreError::Io { path: self.path.clone(), source };
        let mut w = BufWriter::new(&self.file);
        for ev in events {
            serde_json::to_writer(&mut w, ev).map_err(|e| io_err(e.into()))?;
            w.write_all(b"\n").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        drop(w);
        self.file.sync_data().map_err(io_err)
    }
}
