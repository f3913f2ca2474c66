//! Quality assessment engine.
//!
//! Every photo moves through four stages: Needs Tags, Needs ID, Needs
//! Verification and Verified ID. An identification on a tagged photo is
//! verified when any of these holds:
//!
//! * (a) it has a direct primary source and its confidence votes show no dispute;
//! * (b) it has a direct scholarly source and its confidence votes reach consensus;
//! * (c) it is linked as a replica (without a match dispute) to a photo whose
//!   identification for the same identity is verified;
//! * (d) it is linked by an agreed facial match to a photo whose identification
//!   for the same identity is verified, and its own votes reach consensus with
//!   no dispute.
//!
//! Rules (c) and (d) depend on other identifications, so the verified set is
//! computed as a least fixpoint seeded by (a) and (b).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::consensus::{ComparisonVerdict, ConsensusConfig, ConsensusState, MatchConsensus, MatchRelation, VoteBook};
use crate::error::DomainError;
use crate::graph::{PhotoLink, ProvenanceGraph};
use crate::model::{
    minimum_tags_satisfied, Identification, IdentificationId, LinkId, OverlayBadge, Overlays, Photo, PhotoId,
    QualityBadge, TagPolicy,
};
use crate::taxonomy::SourceCategory;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub consensus: ConsensusConfig,
    pub tag_policy: TagPolicy,
}

/// Which condition verified an identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VerificationRule {
    PrimaryNoDispute,
    ScholarlyConsensus,
    ReplicaOfVerified,
    FacialMatchOfVerified,
}

impl VerificationRule {
    pub const fn label(self) -> &'static str {
        match self {
            VerificationRule::PrimaryNoDispute => "PrimaryNoDispute",
            VerificationRule::ScholarlyConsensus => "ScholarlyConsensus",
            VerificationRule::ReplicaOfVerified => "ReplicaOfVerified",
            VerificationRule::FacialMatchOfVerified => "FacialMatchOfVerified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationBadge {
    pub stage: QualityBadge,
    pub overlays: Overlays,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified_via: Option<VerificationRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadgeAssignment {
    pub photo_id: PhotoId,
    pub stage: QualityBadge,
    pub per_identification: BTreeMap<IdentificationId, IdentificationBadge>,
    /// Identifications of the photo, winner first.
    pub winning_order: Vec<IdentificationId>,
}

impl BadgeAssignment {
    pub fn winner(&self) -> Option<&IdentificationId> {
        self.winning_order.first()
    }
}

pub type BadgeMap = BTreeMap<PhotoId, BadgeAssignment>;

/// Photo-scope stage given the stage of its winning identification, if any.
pub fn photo_stage(photo: &Photo, policy: &TagPolicy, winning: Option<QualityBadge>) -> QualityBadge {
    if !minimum_tags_satisfied(photo, policy) {
        QualityBadge::NeedsTags
    } else {
        winning.unwrap_or(QualityBadge::NeedsId)
    }
}

/// Snapshot of everything the rules read: the graph plus folded votes.
pub struct Assessor<'a> {
    graph: &'a ProvenanceGraph,
    cfg: &'a EngineConfig,
    id_consensus: BTreeMap<IdentificationId, ConsensusState>,
    link_consensus: BTreeMap<LinkId, MatchConsensus>,
}

impl<'a> Assessor<'a> {
    pub fn new(graph: &'a ProvenanceGraph, votes: &VoteBook, cfg: &'a EngineConfig) -> Self {
        let id_consensus = graph
            .identifications()
            .map(|i| (i.identification_id.clone(), votes.identification_consensus(&i.identification_id, &cfg.consensus)))
            .collect();
        let link_consensus = graph
            .links()
            .map(|l| (l.link_id.clone(), votes.match_consensus(&l.link_id, &cfg.consensus)))
            .collect();
        Assessor { graph, cfg, id_consensus, link_consensus }
    }

    pub fn consensus(&self, id: &IdentificationId) -> ConsensusState {
        self.id_consensus.get(id).copied().unwrap_or_default()
    }

    pub fn match_consensus(&self, link: &PhotoLink) -> MatchConsensus {
        self.link_consensus[&link.link_id]
    }

    /// Relation used for replica inheritance: the creator's declared verdict
    /// until someone casts a decided comparison vote, then the vote majority.
    pub fn inheritance_relation(&self, link: &PhotoLink) -> MatchRelation {
        let mc = self.match_consensus(link);
        if mc.match_voters + mc.nonmatch_voters == 0 {
            match link.declared {
                ComparisonVerdict::Replica => MatchRelation::Replica,
                ComparisonVerdict::FacialMatch => MatchRelation::FacialMatch,
                _ => MatchRelation::Undecided,
            }
        } else {
            mc.relation
        }
    }

    /// Only identifications on photos meeting the tag policy can be verified.
    pub fn is_eligible(&self, idn: &Identification) -> bool {
        self.graph
            .photo(&idn.photo_id)
            .is_some_and(|p| minimum_tags_satisfied(p, &self.cfg.tag_policy))
    }

    fn has_direct(&self, idn: &Identification, category: SourceCategory) -> bool {
        self.graph
            .direct_sources(&idn.identification_id)
            .any(|s| s.claim.category() == category)
    }

    /// First rule that verifies `idn` given the identifications already in
    /// `verified`, checked in order (a), (b), (c), (d).
    pub fn assess_identification(
        &self,
        idn: &Identification,
        verified: &BTreeSet<IdentificationId>,
    ) -> Option<VerificationRule> {
        if !self.is_eligible(idn) {
            return None;
        }
        let own = self.consensus(&idn.identification_id);
        if self.has_direct(idn, SourceCategory::Primary) && !own.dispute {
            return Some(VerificationRule::PrimaryNoDispute);
        }
        if self.has_direct(idn, SourceCategory::SecondaryScholarly) && own.consensus {
            return Some(VerificationRule::ScholarlyConsensus);
        }
        let mut facial = false;
        for link in self.graph.links_of(&idn.photo_id) {
            let Some(peer) = self.graph.identification_for(link.other(&idn.photo_id), &idn.identity_id) else {
                continue;
            };
            if !verified.contains(&peer.identification_id) {
                continue;
            }
            let mc = self.match_consensus(link);
            if self.inheritance_relation(link) == MatchRelation::Replica && !mc.match_dispute {
                return Some(VerificationRule::ReplicaOfVerified);
            }
            facial |= mc.relation == MatchRelation::FacialMatch && mc.agreed_match;
        }
        (facial && own.consensus && !own.dispute).then_some(VerificationRule::FacialMatchOfVerified)
    }

    /// Least fixpoint of the verification rules: every verified
    /// identification with the rule that first admitted it.
    pub fn propagate(&self) -> BTreeMap<IdentificationId, VerificationRule> {
        let mut verified: BTreeSet<IdentificationId> = BTreeSet::new();
        let mut via = BTreeMap::new();
        let empty = BTreeSet::new();
        for idn in self.graph.identifications() {
            if let Some(rule @ (VerificationRule::PrimaryNoDispute | VerificationRule::ScholarlyConsensus)) =
                self.assess_identification(idn, &empty)
            {
                verified.insert(idn.identification_id.clone());
                via.insert(idn.identification_id.clone(), rule);
            }
        }
        loop {
            let mut grew = false;
            for idn in self.graph.identifications() {
                if verified.contains(&idn.identification_id) {
                    continue;
                }
                if let Some(rule) = self.assess_identification(idn, &verified) {
                    verified.insert(idn.identification_id.clone());
                    via.insert(idn.identification_id.clone(), rule);
                    grew = true;
                }
            }
            if !grew {
                return via;
            }
        }
    }

    /// Orders a photo's identifications, winner first: verified before
    /// unverified, undisputed before disputed, higher net score, earlier
    /// proposal, then identification id.
    pub fn winning_identity(
        &self,
        photo: &PhotoId,
        assignments: &BTreeMap<IdentificationId, IdentificationBadge>,
    ) -> Result<Vec<IdentificationId>, DomainError> {
        let mut ids: Vec<&Identification> = self.graph.identifications_of(photo).collect();
        if ids.is_empty() {
            return Err(DomainError::NoIdentifications(photo.clone()));
        }
        ids.sort_by_key(|i| {
            let st = self.consensus(&i.identification_id);
            let verified = assignments
                .get(&i.identification_id)
                .is_some_and(|b| b.stage == QualityBadge::VerifiedId);
            (!verified, st.dispute, Reverse(st.net_score), i.proposed_at, i.identification_id.clone())
        });
        Ok(ids.into_iter().map(|i| i.identification_id.clone()).collect())
    }

    /// Badge assignment for every photo.
    pub fn assign(&self) -> BadgeMap {
        let via = self.propagate();
        let mut out = BadgeMap::new();
        for photo in self.graph.photos() {
            let tagged = minimum_tags_satisfied(photo, &self.cfg.tag_policy);
            let per_identification: BTreeMap<_, _> = self
                .graph
                .identifications_of(&photo.photo_id)
                .map(|i| {
                    let st = self.consensus(&i.identification_id);
                    let rule = via.get(&i.identification_id).copied();
                    let stage = match (tagged, rule) {
                        (false, _) => QualityBadge::NeedsTags,
                        (true, Some(_)) => QualityBadge::VerifiedId,
                        (true, None) => QualityBadge::NeedsVerification,
                    };
                    let mut overlays = Overlays::new();
                    if st.consensus {
                        overlays.insert(OverlayBadge::CommunityConsensus);
                    }
                    if st.dispute {
                        overlays.insert(OverlayBadge::CommunityDispute);
                    }
                    (i.identification_id.clone(), IdentificationBadge { stage, overlays, verified_via: rule })
                })
                .collect();
            let winning_order = self.winning_identity(&photo.photo_id, &per_identification).unwrap_or_default();
            let winner_stage = winning_order.first().map(|id| per_identification[id].stage);
            out.insert(
                photo.photo_id.clone(),
                BadgeAssignment {
                    photo_id: photo.photo_id.clone(),
                    stage: photo_stage(photo, &self.cfg.tag_policy, winner_stage),
                    per_identification,
                    winning_order,
                },
            );
        }
        out
    }
}

/// Full badge map for a graph and its votes.
pub fn assign_badges(graph: &ProvenanceGraph, votes: &VoteBook, cfg: &EngineConfig) -> BadgeMap {
    Assessor::new(graph, votes, cfg).assign()
}
