use crate::consensus::ComparisonVerdict;
use crate::model::{IdentificationId, IdentityId, LinkId, PhotoId, SourceId};

/// A mutation that does not validate against the current state.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("photo {0} already exists")]
    DuplicatePhotoId(PhotoId),
    #[error("unknown photo {0}")]
    UnknownPhoto(PhotoId),
    #[error("photo {photo} is already identified as {identity}")]
    DuplicateIdentification { photo: PhotoId, identity: IdentityId },
    #[error("identification id {0} is already in use")]
    DuplicateIdentificationId(IdentificationId),
    #[error("unknown identification {0}")]
    UnknownIdentification(IdentificationId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("link id {0} is already in use by another photo pair")]
    DuplicateLinkId(LinkId),
    #[error("cannot link photo {0} to itself")]
    SelfLink(PhotoId),
    #[error("links are created only with a match verdict, got {}", .0.label())]
    NonMatchLinkVerdict(ComparisonVerdict),
    #[error("unknown source {0}")]
    UnknownSource(SourceId),
    #[error("source id {0} is already in use")]
    DuplicateSourceId(SourceId),
    #[error("photo {0} has no identifications")]
    NoIdentifications(PhotoId),
    #[error("{0} must not be empty")]
    EmptyField(&'static str),
    #[error("BadgeChanged events are derived by the engine and cannot be submitted")]
    DerivedEvent,
}
