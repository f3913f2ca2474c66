//! Storage, HTTP API, reports and command line around [`idbadge_core`].

pub mod api;
pub mod config;
pub mod face_rec;
pub mod ingest;
pub mod report;
pub mod store;
pub mod views;
