//! Append-only event records.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::consensus::{ComparisonVerdict, IdVoteVerdict};
use crate::model::{
    FaceRecSupport, IdSourceClaim, IdentificationId, Identity, LinkId, Overlays, PhotoId, QualityBadge, Seq,
    SourceId, UserId,
};

/// Actor recorded on engine-emitted events.
pub const ENGINE_ACTOR: &str = "engine";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Zero in seed files; assigned on append.
    #[serde(default)]
    pub seq: Seq,
    pub actor: UserId,
    /// Wall-clock time as supplied by the writer. Informational only.
    #[serde(default)]
    pub at: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadgeState {
    pub stage: QualityBadge,
    #[serde(default, skip_serializing_if = "Overlays::is_empty")]
    pub overlays: Overlays,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    PhotoAdded {
        photo_id: PhotoId,
        #[serde(default)]
        photo_source: String,
        #[serde(default)]
        image_ref: String,
        #[serde(default)]
        tags: BTreeMap<String, String>,
    },
    TagsAdded {
        photo_id: PhotoId,
        tags: BTreeMap<String, String>,
    },
    PreIdentificationProposed {
        identification_id: IdentificationId,
        photo_id: PhotoId,
        identity: Identity,
        source: IdSourceClaim,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source_id: Option<SourceId>,
    },
    PhotosLinked {
        link_id: LinkId,
        query: PhotoId,
        target: PhotoId,
        verdict: ComparisonVerdict,
    },
    FaceRecSupportSet {
        link_id: LinkId,
        value: FaceRecSupport,
    },
    ComparisonVoteCast {
        link_id: LinkId,
        verdict: ComparisonVerdict,
    },
    IdentificationVoteCast {
        identification_id: IdentificationId,
        verdict: IdVoteVerdict,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    SourceAdded {
        source_id: SourceId,
        identification_id: IdentificationId,
        source: IdSourceClaim,
    },
    SourceRemoved {
        source_id: SourceId,
    },
    /// Emitted by the engine after a recompute changes a badge.
    BadgeChanged {
        photo_id: PhotoId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        identification_id: Option<IdentificationId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<BadgeState>,
        to: BadgeState,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PhotoAdded { .. } => "PhotoAdded",
            EventKind::TagsAdded { .. } => "TagsAdded",
            EventKind::PreIdentificationProposed { .. } => "PreIdentificationProposed",
            EventKind::PhotosLinked { .. } => "PhotosLinked",
            EventKind::FaceRecSupportSet { .. } => "FaceRecSupportSet",
            EventKind::ComparisonVoteCast { .. } => "ComparisonVoteCast",
            EventKind::IdentificationVoteCast { .. } => "IdentificationVoteCast",
            EventKind::SourceAdded { .. } => "SourceAdded",
            EventKind::SourceRemoved { .. } => "SourceRemoved",
            EventKind::BadgeChanged { .. } => "BadgeChanged",
        }
    }

    /// Derived events are produced by the engine and never imported.
    pub fn is_derived(&self) -> bool {
        matches!(self, EventKind::BadgeChanged { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let ev = Event {
            seq: Seq(3),
            actor: "bob".into(),
            at: String::new(),
            kind: EventKind::ComparisonVoteCast { link_id: "l1".into(), verdict: ComparisonVerdict::FacialMatch },
        };
        let json = serde_json::to_string(&ev).unwrap();
        assert_eq!(
            json,
            r#"{"seq":3,"actor":"bob","at":"","kind":"ComparisonVoteCast","payload":{"link_id":"l1","verdict":"Facial Match"}}"#
        );
        assert_eq!(serde_json::from_str::<Event>(&json).unwrap(), ev);
    }

    #[test]
    fn seed_lines_omit_seq() {
        let line = r#"{"kind":"PreIdentificationProposed","actor":"curator","payload":{"identification_id":"i1","photo_id":"p1","identity":{"identity_id":"smith","full_name":"John Smith"},"source":{"source_type":"","details":""}}}"#;
        let ev: Event = serde_json::from_str(line).unwrap();
        assert_eq!(ev.seq, Seq(0));
        match ev.kind {
            EventKind::PreIdentificationProposed { source, .. } => {
                assert_eq!(source.source_type, crate::taxonomy::SourceType::Unspecified)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
