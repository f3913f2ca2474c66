//! Seed import.

use std::path::Path;

use idbadge_core::{Event, Ledger};
use serde::Serialize;

use crate::store::{read_events, StoreError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub events_loaded: usize,
    pub photos: usize,
    pub identifications: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("line {line}: validation failed: {reason}")]
    ValidationFailed { line: usize, reason: String },
}

/// Applies a seed file to `ledger` all-or-nothing and returns what it added.
/// Derived events in the file are skipped. On success the appended events
/// (including the final badge changes) are returned for persistence.
pub fn ingest_seed(ledger: &mut Ledger, path: &Path) -> Result<(IngestSummary, Vec<Event>), IngestError> {
    let events: Vec<_> = read_events(path)?.into_iter().filter(|e| !e.event.kind.is_derived()).collect();
    let lines: Vec<usize> = events.iter().map(|e| e.line).collect();
    let photos = ledger.graph().photos().count();
    let identifications = ledger.graph().identifications().count();
    let appended = ledger
        .submit_batch(events.into_iter().map(|e| (e.event.actor, e.event.at, e.event.kind)))
        .map_err(|e| IngestError::ValidationFailed { line: lines[e.index()], reason: e.to_string() })?;
    let summary = IngestSummary {
        events_loaded: lines.len(),
        photos: ledger.graph().photos().count() - photos,
        identifications: ledger.graph().identifications().count() - identifications,
    };
    Ok((summary, appended))
}
