//! Domain value types shared by every other module.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{SourceCategory, SourceType};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.into())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(PhotoId);
string_id!(IdentityId);
string_id!(IdentificationId);
string_id!(LinkId);
string_id!(SourceId);
string_id!(
    /// Opaque user handle. The same string doubles as the display name.
    UserId
);

/// Logical timestamp: the sequence number of the event that caused a change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seq(pub u64);

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Key under which [`Photo::photo_source`] is visible to tag policies.
pub const PHOTO_SOURCE_KEY: &str = "photo_source";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Photo {
    pub photo_id: PhotoId,
    pub uploader: UserId,
    pub photo_source: String,
    pub image_ref: String,
    pub metadata_tags: BTreeMap<String, String>,
    pub uploaded_at: Seq,
}

impl Photo {
    /// Looks up a metadata tag. `photo_source` falls back to the dedicated field.
    pub fn tag(&self, key: &str) -> Option<&str> {
        match self.metadata_tags.get(key) {
            Some(v) => Some(v.as_str()),
            None if key == PHOTO_SOURCE_KEY => Some(self.photo_source.as_str()),
            None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub identity_id: IdentityId,
    pub full_name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub biography: String,
    #[serde(default)]
    pub biography_source: String,
}

/// A cited source: its type and optional free-text details (often a URL).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSourceClaim {
    pub source_type: SourceType,
    #[serde(default)]
    pub details: String,
}

impl IdSourceClaim {
    pub fn new(source_type: SourceType, details: impl Into<String>) -> Self {
        Self { source_type, details: details.into() }
    }

    pub fn category(&self) -> SourceCategory {
        self.source_type.category()
    }

    pub fn has_details(&self) -> bool {
        !self.details.trim().is_empty()
    }

    pub fn has_url(&self) -> bool {
        self.details.contains("http")
    }
}

/// How an identification came to exist. Never changes after creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Origin {
    PreIdentified { source: IdSourceClaim },
    PostIdentified { via_link: LinkId },
}

impl Origin {
    pub fn is_pre_identified(&self) -> bool {
        matches!(self, Origin::PreIdentified { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identification {
    pub identification_id: IdentificationId,
    pub photo_id: PhotoId,
    pub identity_id: IdentityId,
    pub proposer: UserId,
    pub proposed_at: Seq,
    pub origin: Origin,
}

/// Tri-state verdict from an external face-recognition system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FaceRecSupport {
    Supported,
    NotSupported,
    #[default]
    Unknown,
}

/// Tag keys a photo must carry before it can leave "Needs Tags".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagPolicy {
    pub required: BTreeSet<String>,
}

impl TagPolicy {
    pub fn new<I, S>(keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { required: keys.into_iter().map(Into::into).collect() }
    }

    pub fn empty() -> Self {
        Self { required: BTreeSet::new() }
    }

    /// Required keys the photo has no non-empty value for.
    pub fn missing<'a>(&'a self, photo: &'a Photo) -> impl Iterator<Item = &'a str> + 'a {
        self.required
            .iter()
            .map(String::as_str)
            .filter(move |k| photo.tag(k).is_none_or(|v| v.trim().is_empty()))
    }
}

impl Default for TagPolicy {
    fn default() -> Self {
        TagPolicy::new([PHOTO_SOURCE_KEY, "coat_color"])
    }
}

/// True iff every key required by `policy` has a non-empty value on `photo`.
pub fn minimum_tags_satisfied(photo: &Photo, policy: &TagPolicy) -> bool {
    policy.missing(photo).next().is_none()
}

/// The four-stage quality badge, lowest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityBadge {
    #[serde(rename = "Needs Tags")]
    NeedsTags,
    #[serde(rename = "Needs ID")]
    NeedsId,
    #[serde(rename = "Needs Verification")]
    NeedsVerification,
    #[serde(rename = "Verified ID")]
    VerifiedId,
}

impl QualityBadge {
    pub const ALL: [QualityBadge; 4] = [
        QualityBadge::NeedsTags,
        QualityBadge::NeedsId,
        QualityBadge::NeedsVerification,
        QualityBadge::VerifiedId,
    ];

    pub const fn stage_rank(self) -> u8 {
        self as u8
    }

    pub const fn label(self) -> &'static str {
        match self {
            QualityBadge::NeedsTags => "Needs Tags",
            QualityBadge::NeedsId => "Needs ID",
            QualityBadge::NeedsVerification => "Needs Verification",
            QualityBadge::VerifiedId => "Verified ID",
        }
    }

    /// Instruction shown to users for moving to the next stage.
    pub const fn next_step(self) -> &'static str {
        match self {
            QualityBadge::NeedsTags => "Add the required photo metadata and uniform tags.",
            QualityBadge::NeedsId => "Propose an identity for this photo.",
            QualityBadge::NeedsVerification => {
                "Review the sources and linked photos, then vote on this identification."
            }
            QualityBadge::VerifiedId => "Verified. Keep an eye on new votes and sources.",
        }
    }
}

impl fmt::Display for QualityBadge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown badge {0:?}")]
pub struct UnknownBadge(pub String);

impl FromStr for QualityBadge {
    type Err = UnknownBadge;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QualityBadge::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownBadge(s.into()))
    }
}

/// Community overlay shown next to the stage badge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OverlayBadge {
    #[serde(rename = "Community Consensus")]
    CommunityConsensus,
    #[serde(rename = "Community Dispute")]
    CommunityDispute,
}

impl OverlayBadge {
    pub const fn label(self) -> &'static str {
        match self {
            OverlayBadge::CommunityConsensus => "Community Consensus",
            OverlayBadge::CommunityDispute => "Community Dispute",
        }
    }
}

pub type Overlays = BTreeSet<OverlayBadge>;
