//! JSON read models served by the API.

use std::collections::BTreeMap;

use idbadge_core::consensus::{ComparisonVerdict, IdVoteVerdict, MatchConsensus, VoteSummary};
use idbadge_core::graph::PhotoLink;
use idbadge_core::model::Overlays;
use idbadge_core::{
    ConsensusState, DomainError, Identification, IdentificationId, Identity, Ledger, LinkId, Origin, PhotoId,
    ProvenanceView, QualityBadge, Seq, UserId, VerificationRule,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Done,
    Current,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChecklistStep {
    pub badge: QualityBadge,
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhotoView {
    pub photo_id: PhotoId,
    pub uploader: UserId,
    pub photo_source: String,
    pub image_ref: String,
    pub tags: BTreeMap<String, String>,
    pub uploaded_at: Seq,
    pub stage: QualityBadge,
    pub next_step: &'static str,
    pub missing_tags: Vec<String>,
    pub checklist: Vec<ChecklistStep>,
    /// Winner first.
    pub identifications: Vec<IdentificationView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentificationView {
    pub identification_id: IdentificationId,
    pub identity: Identity,
    pub proposer: UserId,
    pub proposed_at: Seq,
    pub origin: Origin,
    pub stage: QualityBadge,
    pub overlays: Overlays,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified_via: Option<VerificationRule>,
    /// A link carrying this identity has a comparison-vote dispute.
    pub pair_dispute: bool,
    pub consensus: ConsensusState,
    pub votes: VoteSummary<IdVoteVerdict>,
    pub provenance: ProvenanceView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WinnerSummary {
    pub identification_id: IdentificationId,
    pub full_name: String,
    pub stage: QualityBadge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhotoSummary {
    pub photo_id: PhotoId,
    pub image_ref: String,
    pub stage: QualityBadge,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winner: Option<WinnerSummary>,
    /// Names of all proposed identities, winner first.
    pub identities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VotesView {
    pub identification_id: IdentificationId,
    pub consensus: ConsensusState,
    pub summary: VoteSummary<IdVoteVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkView {
    #[serde(flatten)]
    pub link: PhotoLink,
    pub consensus: MatchConsensus,
    pub summary: VoteSummary<ComparisonVerdict>,
}

pub fn checklist(stage: QualityBadge) -> Vec<ChecklistStep> {
    QualityBadge::ALL
        .iter()
        .map(|&badge| ChecklistStep {
            badge,
            status: match badge.stage_rank().cmp(&stage.stage_rank()) {
                std::cmp::Ordering::Less => StepStatus::Done,
                std::cmp::Ordering::Equal => StepStatus::Current,
                std::cmp::Ordering::Greater => StepStatus::Pending,
            },
        })
        .collect()
}

fn pair_dispute(ledger: &Ledger, idn: &Identification) -> bool {
    let graph = ledger.graph();
    graph.links_of(&idn.photo_id).any(|link| {
        graph.identification_for(link.other(&idn.photo_id), &idn.identity_id).is_some()
            && ledger.match_consensus(&link.link_id).is_ok_and(|m| m.match_dispute)
    })
}

pub fn identification_view(ledger: &Ledger, id: &IdentificationId) -> Result<IdentificationView, DomainError> {
    let idn = ledger.graph().identification(id).ok_or_else(|| DomainError::UnknownIdentification(id.clone()))?;
    let badge = ledger
        .badges()
        .get(&idn.photo_id)
        .and_then(|b| b.per_identification.get(id))
        .cloned()
        .ok_or_else(|| DomainError::UnknownIdentification(id.clone()))?;
    let identity = ledger.graph().identity(&idn.identity_id).cloned().ok_or_else(|| {
        DomainError::UnknownIdentification(id.clone())
    })?;
    Ok(IdentificationView {
        identification_id: id.clone(),
        identity,
        proposer: idn.proposer.clone(),
        proposed_at: idn.proposed_at,
        origin: idn.origin.clone(),
        stage: badge.stage,
        overlays: badge.overlays,
        verified_via: badge.verified_via,
        pair_dispute: pair_dispute(ledger, idn),
        consensus: ledger.identification_consensus(id)?,
        votes: ledger.votes().identification_summary(id),
        provenance: ledger.provenance_view(id)?,
    })
}

pub fn photo_view(ledger: &Ledger, id: &PhotoId) -> Result<PhotoView, DomainError> {
    let photo = ledger.graph().photo(id).ok_or_else(|| DomainError::UnknownPhoto(id.clone()))?;
    let assignment = ledger.badges().get(id).ok_or_else(|| DomainError::UnknownPhoto(id.clone()))?;
    let identifications = assignment
        .winning_order
        .iter()
        .map(|i| identification_view(ledger, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhotoView {
        photo_id: id.clone(),
        uploader: photo.uploader.clone(),
        photo_source: photo.photo_source.clone(),
        image_ref: photo.image_ref.clone(),
        tags: photo.metadata_tags.clone(),
        uploaded_at: photo.uploaded_at,
        stage: assignment.stage,
        next_step: assignment.stage.next_step(),
        missing_tags: ledger.config().tag_policy.missing(photo).map(String::from).collect(),
        checklist: checklist(assignment.stage),
        identifications,
    })
}

fn photo_summary(ledger: &Ledger, id: &PhotoId) -> Option<PhotoSummary> {
    let photo = ledger.graph().photo(id)?;
    let assignment = ledger.badges().get(id)?;
    let name_of = |i: &IdentificationId| {
        ledger
            .graph()
            .identification(i)
            .and_then(|idn| ledger.graph().identity(&idn.identity_id))
            .map(|p| p.full_name.clone())
            .unwrap_or_default()
    };
    let winner = assignment.winner().map(|i| WinnerSummary {
        identification_id: i.clone(),
        full_name: name_of(i),
        stage: assignment.per_identification.get(i).map_or(assignment.stage, |b| b.stage),
    });
    Some(PhotoSummary {
        photo_id: id.clone(),
        image_ref: photo.image_ref.clone(),
        stage: assignment.stage,
        winner,
        identities: assignment.winning_order.iter().map(name_of).collect(),
    })
}

/// Photos ordered by id. `badge` matches the photo stage; `name` is a
/// case-insensitive substring of any proposed identity's name.
pub fn list_photos(ledger: &Ledger, badge: Option<QualityBadge>, name: Option<&str>) -> Vec<PhotoSummary> {
    let needle = name.map(str::to_lowercase);
    ledger
        .graph()
        .photos()
        .filter_map(|p| photo_summary(ledger, &p.photo_id))
        .filter(|s| badge.is_none_or(|b| s.stage == b))
        .filter(|s| {
            needle.as_deref().is_none_or(|n| s.identities.iter().any(|i| i.to_lowercase().contains(n)))
        })
        .collect()
}

pub fn votes_view(ledger: &Ledger, id: &IdentificationId) -> Result<VotesView, DomainError> {
    Ok(VotesView {
        identification_id: id.clone(),
        consensus: ledger.identification_consensus(id)?,
        summary: ledger.votes().identification_summary(id),
    })
}

pub fn link_view(ledger: &Ledger, id: &LinkId) -> Result<LinkView, DomainError> {
    let link = ledger.graph().link(id).ok_or_else(|| DomainError::UnknownLink(id.clone()))?;
    Ok(LinkView {
        link: link.clone(),
        consensus: ledger.match_consensus(id)?,
        summary: ledger.votes().comparison_summary(id),
    })
}
