//! Provenance and quality assessment for crowdsourced identifications of
//! historical photos.
//!
//! The crate is `no_std` and only needs an allocator. It holds the source
//! taxonomy, the provenance graph, the vote folds and the badge engine; the
//! companion `idbadge` crate adds storage, the HTTP API and the CLI.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod consensus;
pub mod engine;
pub mod error;
pub mod event;
pub mod graph;
pub mod ledger;
pub mod model;
pub mod taxonomy;

pub use consensus::{
    comparison_consensus, identification_consensus, ComparisonVerdict, ConsensusConfig, ConsensusState,
    IdVoteVerdict, MatchConsensus, MatchRelation, Ratio, VoteBook, VoteSummary,
};
pub use engine::{assign_badges, photo_stage, Assessor, BadgeAssignment, BadgeMap, EngineConfig, VerificationRule};
pub use error::DomainError;
pub use event::{BadgeState, Event, EventKind};
pub use graph::{ProvenanceGraph, ProvenanceView};
pub use ledger::{recompute, Ledger, Receipt, ReplayError, VoteTarget};
pub use model::{
    minimum_tags_satisfied, FaceRecSupport, IdSourceClaim, Identification, IdentificationId, Identity, IdentityId,
    LinkId, Origin, OverlayBadge, Photo, PhotoId, QualityBadge, Seq, SourceId, TagPolicy, UserId,
};
pub use taxonomy::{classify_source, trust_rank, SourceCategory, SourceType};
