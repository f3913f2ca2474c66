//! The provenance graph: photos, identities, identifications, photo links and
//! identification sources.
//!
//! Only *direct* sources are stored. A *linked* source is derived on demand:
//! whenever two linked photos are identified as the same identity, each
//! direct source of one identification appears as a linked source on the
//! other. Removing a direct source therefore removes all of its mirrors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::consensus::{ComparisonVerdict, MatchConsensus};
use crate::error::DomainError;
use crate::model::{
    FaceRecSupport, IdSourceClaim, Identification, IdentificationId, Identity, IdentityId, LinkId,
    Origin, Photo, PhotoId, Seq, SourceId, UserId,
};
use crate::taxonomy::SourceCategory;

/// Undirected link between two photos claimed to show the same person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotoLink {
    pub link_id: LinkId,
    /// Canonical order: `photo_a < photo_b`.
    pub photo_a: PhotoId,
    pub photo_b: PhotoId,
    pub created_by: UserId,
    pub created_at: Seq,
    /// Verdict given by the creator when the link was made.
    pub declared: ComparisonVerdict,
    pub face_rec_support: FaceRecSupport,
}

impl PhotoLink {
    pub fn other(&self, photo: &PhotoId) -> &PhotoId {
        if &self.photo_a == photo {
            &self.photo_b
        } else {
            &self.photo_a
        }
    }

    pub fn touches(&self, photo: &PhotoId) -> bool {
        &self.photo_a == photo || &self.photo_b == photo
    }
}

/// A stored source attached directly to one identification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectSource {
    pub source_id: SourceId,
    pub identification_id: IdentificationId,
    pub claim: IdSourceClaim,
    pub contributed_by: UserId,
    pub added_at: Seq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SourceProvenance {
    Direct,
    Linked { via_photo: PhotoId, via_link: LinkId },
}

/// A source as seen from one identification, direct or mirrored over a link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSource {
    pub source_id: SourceId,
    pub identification_id: IdentificationId,
    pub claim: IdSourceClaim,
    pub provenance: SourceProvenance,
    pub contributed_by: UserId,
}

impl IdSource {
    pub fn is_direct(&self) -> bool {
        matches!(self.provenance, SourceProvenance::Direct)
    }
}

/// Result of [`ProvenanceGraph::link_photos`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkOutcome {
    pub link_id: LinkId,
    pub reused: bool,
    pub created_identifications: Vec<IdentificationId>,
}

/// One row of a provenance section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub source_id: SourceId,
    /// Photo the source is attached to: the identification's own photo for
    /// direct sources, the linked photo otherwise.
    pub source_photo: PhotoId,
    pub image_ref: String,
    pub claim: IdSourceClaim,
    pub identified_by: UserId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_by: Option<UserId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via_link: Option<LinkId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_summary: Option<MatchConsensus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub face_rec_support: Option<FaceRecSupport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceSection {
    pub category: SourceCategory,
    pub entries: Vec<ProvenanceEntry>,
}

/// Sources of an identification grouped by trust category, best first.
/// All three sections are always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceView {
    pub identification_id: IdentificationId,
    pub sections: Vec<ProvenanceSection>,
}

impl ProvenanceView {
    pub fn entry_count(&self) -> usize {
        self.sections.iter().map(|s| s.entries.len()).sum()
    }
}

/// Id given to the identification a link creates on the query photo.
pub fn post_identification_id(photo: &PhotoId, identity: &IdentityId) -> IdentificationId {
    IdentificationId(format!("{photo}:{identity}"))
}

/// Id given to the source attached by a pre-identification when none is supplied.
pub fn pre_identification_source_id(identification: &IdentificationId) -> SourceId {
    SourceId(format!("{identification}:source"))
}

fn canonical_pair(a: &PhotoId, b: &PhotoId) -> (PhotoId, PhotoId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

fn require_non_empty(value: &str, field: &'static str) -> Result<(), DomainError> {
    if value.trim().is_empty() {
        Err(DomainError::EmptyField(field))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvenanceGraph {
    photos: BTreeMap<PhotoId, Photo>,
    identities: BTreeMap<IdentityId, Identity>,
    identifications: BTreeMap<IdentificationId, Identification>,
    by_photo: BTreeMap<PhotoId, BTreeMap<IdentityId, IdentificationId>>,
    links: BTreeMap<LinkId, PhotoLink>,
    by_pair: BTreeMap<(PhotoId, PhotoId), LinkId>,
    links_of: BTreeMap<PhotoId, BTreeSet<LinkId>>,
    sources: BTreeMap<SourceId, DirectSource>,
    sources_of: BTreeMap<IdentificationId, BTreeSet<SourceId>>,
}

impl ProvenanceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn photo(&self, id: &PhotoId) -> Option<&Photo> {
        self.photos.get(id)
    }

    pub fn photos(&self) -> impl Iterator<Item = &Photo> {
        self.photos.values()
    }

    pub fn identity(&self, id: &IdentityId) -> Option<&Identity> {
        self.identities.get(id)
    }

    pub fn identification(&self, id: &IdentificationId) -> Option<&Identification> {
        self.identifications.get(id)
    }

    pub fn identifications(&self) -> impl Iterator<Item = &Identification> {
        self.identifications.values()
    }

    /// Identifications on a photo, ordered by identity id.
    pub fn identifications_of(&self, photo: &PhotoId) -> impl Iterator<Item = &Identification> {
        self.by_photo
            .get(photo)
            .into_iter()
            .flat_map(|m| m.values())
            .filter_map(|id| self.identifications.get(id))
    }

    pub fn identification_for(&self, photo: &PhotoId, identity: &IdentityId) -> Option<&Identification> {
        self.by_photo
            .get(photo)
            .and_then(|m| m.get(identity))
            .and_then(|id| self.identifications.get(id))
    }

    pub fn link(&self, id: &LinkId) -> Option<&PhotoLink> {
        self.links.get(id)
    }

    pub fn links(&self) -> impl Iterator<Item = &PhotoLink> {
        self.links.values()
    }

    pub fn link_between(&self, a: &PhotoId, b: &PhotoId) -> Option<&PhotoLink> {
        self.by_pair.get(&canonical_pair(a, b)).and_then(|id| self.links.get(id))
    }

    pub fn links_of(&self, photo: &PhotoId) -> impl Iterator<Item = &PhotoLink> {
        self.links_of
            .get(photo)
            .into_iter()
            .flatten()
            .filter_map(|id| self.links.get(id))
    }

    pub fn source(&self, id: &SourceId) -> Option<&DirectSource> {
        self.sources.get(id)
    }

    pub fn direct_sources(&self, identification: &IdentificationId) -> impl Iterator<Item = &DirectSource> {
        self.sources_of
            .get(identification)
            .into_iter()
            .flatten()
            .filter_map(|id| self.sources.get(id))
    }

    pub fn add_photo(&mut self, photo: Photo) -> Result<PhotoId, DomainError> {
        require_non_empty(photo.photo_id.as_str(), "photo_id")?;
        if self.photos.contains_key(&photo.photo_id) {
            return Err(DomainError::DuplicatePhotoId(photo.photo_id));
        }
        let id = photo.photo_id.clone();
        self.photos.insert(id.clone(), photo);
        Ok(id)
    }

    /// Merges tags into a photo; new values win. Blank values are ignored so
    /// adding tags can never make a satisfied tag policy unsatisfied.
    pub fn add_tags(
        &mut self,
        photo_id: &PhotoId,
        tags: impl IntoIterator<Item = (String, String)>,
    ) -> Result<&Photo, DomainError> {
        let photo = self
            .photos
            .get_mut(photo_id)
            .ok_or_else(|| DomainError::UnknownPhoto(photo_id.clone()))?;
        for (k, v) in tags {
            if !v.trim().is_empty() {
                photo.metadata_tags.insert(k, v);
            }
        }
        Ok(photo)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn propose_pre_identification(
        &mut self,
        identification_id: IdentificationId,
        photo_id: &PhotoId,
        identity: Identity,
        claim: IdSourceClaim,
        source_id: Option<SourceId>,
        proposer: &UserId,
        at: Seq,
    ) -> Result<IdentificationId, DomainError> {
        require_non_empty(identification_id.as_str(), "identification_id")?;
        require_non_empty(identity.identity_id.as_str(), "identity_id")?;
        if !self.photos.contains_key(photo_id) {
            return Err(DomainError::UnknownPhoto(photo_id.clone()));
        }
        if self.identification_for(photo_id, &identity.identity_id).is_some() {
            return Err(DomainError::DuplicateIdentification {
                photo: photo_id.clone(),
                identity: identity.identity_id,
            });
        }
        if self.identifications.contains_key(&identification_id) {
            return Err(DomainError::DuplicateIdentificationId(identification_id));
        }
        let source_id = source_id.unwrap_or_else(|| pre_identification_source_id(&identification_id));
        if self.sources.contains_key(&source_id) {
            return Err(DomainError::DuplicateSourceId(source_id));
        }

        let identity_id = identity.identity_id.clone();
        self.identities.entry(identity_id.clone()).or_insert(identity);
        self.insert_identification(Identification {
            identification_id: identification_id.clone(),
            photo_id: photo_id.clone(),
            identity_id,
            proposer: proposer.clone(),
            proposed_at: at,
            origin: Origin::PreIdentified { source: claim.clone() },
        });
        self.insert_source(DirectSource {
            source_id,
            identification_id: identification_id.clone(),
            claim,
            contributed_by: proposer.clone(),
            added_at: at,
        });
        Ok(identification_id)
    }

    /// Links `query` to `target`, creating the link or reusing the one that
    /// already joins the pair. For every identity the target is identified as
    /// and the query is not, a post-identification is created on the query.
    pub fn link_photos(
        &mut self,
        link_id: LinkId,
        query: &PhotoId,
        target: &PhotoId,
        verdict: ComparisonVerdict,
        user: &UserId,
        at: Seq,
    ) -> Result<LinkOutcome, DomainError> {
        for p in [query, target] {
            if !self.photos.contains_key(p) {
                return Err(DomainError::UnknownPhoto(p.clone()));
            }
        }
        if query == target {
            return Err(DomainError::SelfLink(query.clone()));
        }
        if !verdict.is_match() {
            return Err(DomainError::NonMatchLinkVerdict(verdict));
        }
        let pair = canonical_pair(query, target);
        let existing = self.by_pair.get(&pair).cloned();
        if existing.is_none() {
            require_non_empty(link_id.as_str(), "link_id")?;
            if self.links.contains_key(&link_id) {
                return Err(DomainError::DuplicateLinkId(link_id));
            }
        }

        let new_ids: Vec<(IdentificationId, IdentityId)> = self
            .identifications_of(target)
            .filter(|t| self.identification_for(query, &t.identity_id).is_none())
            .map(|t| (post_identification_id(query, &t.identity_id), t.identity_id.clone()))
            .collect();
        if let Some((taken, _)) = new_ids.iter().find(|(id, _)| self.identifications.contains_key(id)) {
            return Err(DomainError::DuplicateIdentificationId(taken.clone()));
        }

        let (link_id, reused) = match existing {
            Some(id) => (id, true),
            None => {
                self.by_pair.insert(pair.clone(), link_id.clone());
                self.links_of.entry(pair.0.clone()).or_default().insert(link_id.clone());
                self.links_of.entry(pair.1.clone()).or_default().insert(link_id.clone());
                self.links.insert(
                    link_id.clone(),
                    PhotoLink {
                        link_id: link_id.clone(),
                        photo_a: pair.0,
                        photo_b: pair.1,
                        created_by: user.clone(),
                        created_at: at,
                        declared: verdict,
                        face_rec_support: FaceRecSupport::Unknown,
                    },
                );
                (link_id, false)
            }
        };

        let mut created = Vec::with_capacity(new_ids.len());
        for (identification_id, identity_id) in new_ids {
            self.insert_identification(Identification {
                identification_id: identification_id.clone(),
                photo_id: query.clone(),
                identity_id,
                proposer: user.clone(),
                proposed_at: at,
                origin: Origin::PostIdentified { via_link: link_id.clone() },
            });
            created.push(identification_id);
        }
        Ok(LinkOutcome { link_id, reused, created_identifications: created })
    }

    pub fn set_face_rec_support(&mut self, link_id: &LinkId, value: FaceRecSupport) -> Result<&PhotoLink, DomainError> {
        let link = self
            .links
            .get_mut(link_id)
            .ok_or_else(|| DomainError::UnknownLink(link_id.clone()))?;
        link.face_rec_support = value;
        Ok(link)
    }

    pub fn add_source(
        &mut self,
        source_id: SourceId,
        identification_id: &IdentificationId,
        claim: IdSourceClaim,
        user: &UserId,
        at: Seq,
    ) -> Result<(), DomainError> {
        require_non_empty(source_id.as_str(), "source_id")?;
        if !self.identifications.contains_key(identification_id) {
            return Err(DomainError::UnknownIdentification(identification_id.clone()));
        }
        if self.sources.contains_key(&source_id) {
            return Err(DomainError::DuplicateSourceId(source_id));
        }
        self.insert_source(DirectSource {
            source_id,
            identification_id: identification_id.clone(),
            claim,
            contributed_by: user.clone(),
            added_at: at,
        });
        Ok(())
    }

    pub fn remove_source(&mut self, source_id: &SourceId) -> Result<DirectSource, DomainError> {
        let source = self
            .sources
            .remove(source_id)
            .ok_or_else(|| DomainError::UnknownSource(source_id.clone()))?;
        if let Some(set) = self.sources_of.get_mut(&source.identification_id) {
            set.remove(source_id);
        }
        Ok(source)
    }

    /// Every source of an identification: its direct sources followed by the
    /// direct sources of same-identity identifications on linked photos.
    pub fn sources_of(&self, identification_id: &IdentificationId) -> Result<Vec<IdSource>, DomainError> {
        let idn = self
            .identifications
            .get(identification_id)
            .ok_or_else(|| DomainError::UnknownIdentification(identification_id.clone()))?;
        let mut out: Vec<IdSource> = self
            .direct_sources(identification_id)
            .map(|s| IdSource {
                source_id: s.source_id.clone(),
                identification_id: identification_id.clone(),
                claim: s.claim.clone(),
                provenance: SourceProvenance::Direct,
                contributed_by: s.contributed_by.clone(),
            })
            .collect();
        for link in self.links_of(&idn.photo_id) {
            let other = link.other(&idn.photo_id);
            let Some(peer) = self.identification_for(other, &idn.identity_id) else {
                continue;
            };
            out.extend(self.direct_sources(&peer.identification_id).map(|s| IdSource {
                source_id: s.source_id.clone(),
                identification_id: identification_id.clone(),
                claim: s.claim.clone(),
                provenance: SourceProvenance::Linked { via_photo: other.clone(), via_link: link.link_id.clone() },
                contributed_by: s.contributed_by.clone(),
            }));
        }
        Ok(out)
    }

    /// Groups sources by trust category. `pair_summary` supplies the folded
    /// comparison votes for a link.
    pub fn provenance_view<F>(&self, identification_id: &IdentificationId, pair_summary: F) -> Result<ProvenanceView, DomainError>
    where
        F: Fn(&LinkId) -> MatchConsensus,
    {
        let idn = self
            .identifications
            .get(identification_id)
            .ok_or_else(|| DomainError::UnknownIdentification(identification_id.clone()))?;
        let mut sections: Vec<ProvenanceSection> = SourceCategory::ALL
            .iter()
            .map(|&category| ProvenanceSection { category, entries: Vec::new() })
            .collect();
        for src in self.sources_of(identification_id)? {
            let (source_photo, matched_by, via_link, pair, face) = match &src.provenance {
                SourceProvenance::Direct => (idn.photo_id.clone(), None, None, None, None),
                SourceProvenance::Linked { via_photo, via_link } => {
                    let link = &self.links[via_link];
                    (
                        via_photo.clone(),
                        Some(link.created_by.clone()),
                        Some(via_link.clone()),
                        Some(pair_summary(via_link)),
                        Some(link.face_rec_support),
                    )
                }
            };
            let image_ref = self.photos.get(&source_photo).map(|p| p.image_ref.clone()).unwrap_or_default();
            let rank = src.claim.category().trust_rank() as usize;
            sections[rank].entries.push(ProvenanceEntry {
                source_id: src.source_id,
                source_photo,
                image_ref,
                claim: src.claim,
                identified_by: src.contributed_by,
                matched_by,
                via_link,
                pair_summary: pair,
                face_rec_support: face,
            });
        }
        Ok(ProvenanceView { identification_id: identification_id.clone(), sections })
    }

    fn insert_identification(&mut self, idn: Identification) {
        self.by_photo
            .entry(idn.photo_id.clone())
            .or_default()
            .insert(idn.identity_id.clone(), idn.identification_id.clone());
        self.identifications.insert(idn.identification_id.clone(), idn);
    }

    fn insert_source(&mut self, source: DirectSource) {
        self.sources_of
            .entry(source.identification_id.clone())
            .or_default()
            .insert(source.source_id.clone());
        self.sources.insert(source.source_id.clone(), source);
    }
}
