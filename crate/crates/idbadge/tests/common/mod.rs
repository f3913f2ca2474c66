#![allow(dead_code)]

use std::path::PathBuf;

use idbadge::store::{load_ledger, read_events, NumberedEvent};
use idbadge_core::engine::IdentificationBadge;
use idbadge_core::{EngineConfig, IdentificationId, Ledger, PhotoId, QualityBadge};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_events(name: &str) -> Vec<NumberedEvent> {
    read_events(&fixture(name)).unwrap()
}

pub fn ledger_from(events: Vec<NumberedEvent>) -> Ledger {
    load_ledger(events, EngineConfig::default()).unwrap()
}

pub fn load_fixture(name: &str) -> Ledger {
    ledger_from(fixture_events(name))
}

/// The first `n` events of a fixture.
pub fn load_prefix(name: &str, n: usize) -> Ledger {
    let mut events = fixture_events(name);
    events.truncate(n);
    ledger_from(events)
}

pub fn badge<'a>(ledger: &'a Ledger, idn: &str) -> &'a IdentificationBadge {
    let id = IdentificationId::from(idn);
    let photo = &ledger.graph().identification(&id).unwrap_or_else(|| panic!("no identification {idn}")).photo_id;
    &ledger.badges()[photo].per_identification[&id]
}

pub fn photo_stage(ledger: &Ledger, photo: &str) -> QualityBadge {
    ledger.badges()[&PhotoId::from(photo)].stage
}

pub fn winning_order(ledger: &Ledger, photo: &str) -> Vec<String> {
    ledger.badges()[&PhotoId::from(photo)].winning_order.iter().map(|i| i.to_string()).collect()
}

/// Position of the first line whose JSON contains `needle`, plus one.
pub fn events_through(name: &str, needle: &str) -> usize {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    lines.iter().position(|l| l.contains(needle)).unwrap_or_else(|| panic!("{needle} not in {name}")) + 1
}
