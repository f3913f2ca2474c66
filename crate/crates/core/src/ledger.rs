//! Event-sourced state: the graph, the votes and the derived badges, all
//! folded from an append-only list of events.
//!
//! Every accepted event is followed by a full recompute; each badge that
//! changes produces a `BadgeChanged` event appended right after its trigger.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::consensus::{ComparisonVerdict, ConsensusState, IdVoteVerdict, MatchConsensus, VoteBook, VoteRecord, VoteSummary};
use crate::engine::{assign_badges, BadgeMap, EngineConfig};
use crate::error::DomainError;
use crate::event::{BadgeState, Event, EventKind, ENGINE_ACTOR};
use crate::graph::{ProvenanceGraph, ProvenanceView};
use crate::model::{
    IdentificationId, LinkId, OverlayBadge, Photo, PhotoId, Seq, UserId,
};

/// What a successful submit appended and created.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Receipt {
    /// Sequence number of the submitted event.
    pub seq: Seq,
    /// The submitted event followed by any `BadgeChanged` events.
    pub events: Vec<Event>,
    pub photo_id: Option<PhotoId>,
    pub link_id: Option<LinkId>,
    pub identification_id: Option<IdentificationId>,
    pub created_identifications: Vec<IdentificationId>,
    /// Photos whose state the event touched.
    pub photos: Vec<PhotoId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event {index}: {source}")]
    Invalid { index: usize, source: DomainError },
    #[error("event {index}: seq {seq} does not follow {prev}")]
    SeqOutOfOrder { index: usize, seq: Seq, prev: Seq },
}

impl ReplayError {
    /// Zero-based position of the offending event in the input.
    pub fn index(&self) -> usize {
        match self {
            ReplayError::Invalid { index, .. } | ReplayError::SeqOutOfOrder { index, .. } => *index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityFeedEntry {
    pub photo_id: PhotoId,
    pub seq: Seq,
    pub actor: UserId,
    pub line: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NotificationKind {
    NewIdentity,
    CommunityDispute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub recipient: UserId,
    /// Sequence number of the causing event.
    pub cause: Seq,
    pub kind: NotificationKind,
    pub photo_id: PhotoId,
    pub identification_id: IdentificationId,
    pub message: String,
    pub read: bool,
}

/// Vote target for [`Ledger::vote_summary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoteTarget {
    Link(LinkId),
    Identification(IdentificationId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyVoteSummary {
    Comparison(VoteSummary<ComparisonVerdict>),
    Identification(VoteSummary<IdVoteVerdict>),
}

#[derive(Debug, Clone, Default)]
struct Effect {
    photo_id: Option<PhotoId>,
    link_id: Option<LinkId>,
    identification_id: Option<IdentificationId>,
    created: Vec<IdentificationId>,
    photos: Vec<PhotoId>,
    /// Rewritten event kind, e.g. a link to an already linked pair takes the
    /// existing link id.
    normalized: Option<EventKind>,
}

#[derive(Debug, Clone, Default)]
pub struct Ledger {
    cfg: EngineConfig,
    graph: ProvenanceGraph,
    votes: VoteBook,
    events: Vec<Event>,
    badges: BadgeMap,
    feed: BTreeMap<PhotoId, Vec<ActivityFeedEntry>>,
    notifications: BTreeMap<UserId, Vec<Notification>>,
}

impl Ledger {
    pub fn new(cfg: EngineConfig) -> Self {
        Ledger { cfg, ..Ledger::default() }
    }

    /// Rebuilds a ledger from a stored log. Events are kept verbatim,
    /// including recorded `BadgeChanged` events; badges are recomputed once.
    pub fn restore(cfg: EngineConfig, events: Vec<Event>) -> Result<Self, ReplayError> {
        let mut ledger = Ledger::new(cfg);
        let mut prev = Seq(0);
        for (index, ev) in events.into_iter().enumerate() {
            if ev.seq <= prev {
                return Err(ReplayError::SeqOutOfOrder { index, seq: ev.seq, prev });
            }
            prev = ev.seq;
            if ev.kind.is_derived() {
                ledger.record_derived(&ev);
            } else {
                let effect = ledger
                    .apply(&ev.actor, ev.seq, &ev.kind)
                    .map_err(|source| ReplayError::Invalid { index, source })?;
                ledger.record(&ev, &effect);
            }
            ledger.events.push(ev);
        }
        ledger.badges = assign_badges(&ledger.graph, &ledger.votes, &ledger.cfg);
        Ok(ledger)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &ProvenanceGraph {
        &self.graph
    }

    pub fn votes(&self) -> &VoteBook {
        &self.votes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn badges(&self) -> &BadgeMap {
        &self.badges
    }

    pub fn last_seq(&self) -> Seq {
        self.events.last().map_or(Seq(0), |e| e.seq)
    }

    fn next_seq(&self) -> Seq {
        Seq(self.last_seq().0 + 1)
    }

    /// Validates and appends one event, then recomputes badges.
    /// On error the ledger is unchanged.
    pub fn submit(&mut self, actor: UserId, at: String, kind: EventKind) -> Result<Receipt, DomainError> {
        if kind.is_derived() {
            return Err(DomainError::DerivedEvent);
        }
        let seq = self.next_seq();
        let effect = self.apply(&actor, seq, &kind)?;
        let ev = Event { seq, actor, at: at.clone(), kind: effect.normalized.clone().unwrap_or(kind) };
        self.record(&ev, &effect);
        self.events.push(ev.clone());
        let mut events = Vec::from([ev]);
        events.extend(self.refresh(&at));
        Ok(Receipt {
            seq,
            events,
            photo_id: effect.photo_id,
            link_id: effect.link_id,
            identification_id: effect.identification_id,
            created_identifications: effect.created,
            photos: effect.photos,
        })
    }

    /// Applies a batch all-or-nothing with a single recompute at the end.
    /// Derived events in the input are skipped. Returns the appended events.
    pub fn submit_batch<I>(&mut self, batch: I) -> Result<Vec<Event>, ReplayError>
    where
        I: IntoIterator<Item = (UserId, String, EventKind)>,
    {
        let mut next = self.clone();
        let start = next.events.len();
        let mut last_at = String::new();
        for (index, (actor, at, kind)) in batch.into_iter().enumerate() {
            if kind.is_derived() {
                continue;
            }
            let seq = next.next_seq();
            let effect = next
                .apply(&actor, seq, &kind)
                .map_err(|source| ReplayError::Invalid { index, source })?;
            let ev = Event { seq, actor, at: at.clone(), kind: effect.normalized.clone().unwrap_or(kind) };
            next.record(&ev, &effect);
            next.events.push(ev);
            last_at = at;
        }
        next.refresh(&last_at);
        let appended = next.events[start..].to_vec();
        *self = next;
        Ok(appended)
    }

    pub fn cast_comparison_vote(
        &mut self,
        link_id: &LinkId,
        voter: UserId,
        verdict: ComparisonVerdict,
    ) -> Result<MatchConsensus, DomainError> {
        self.submit(voter, String::new(), EventKind::ComparisonVoteCast { link_id: link_id.clone(), verdict })?;
        Ok(self.votes.match_consensus(link_id, &self.cfg.consensus))
    }

    pub fn cast_identification_vote(
        &mut self,
        identification_id: &IdentificationId,
        voter: UserId,
        verdict: IdVoteVerdict,
        note: Option<String>,
    ) -> Result<ConsensusState, DomainError> {
        self.submit(
            voter,
            String::new(),
            EventKind::IdentificationVoteCast { identification_id: identification_id.clone(), verdict, note },
        )?;
        Ok(self.votes.identification_consensus(identification_id, &self.cfg.consensus))
    }

    pub fn match_consensus(&self, link_id: &LinkId) -> Result<MatchConsensus, DomainError> {
        self.graph.link(link_id).ok_or_else(|| DomainError::UnknownLink(link_id.clone()))?;
        Ok(self.votes.match_consensus(link_id, &self.cfg.consensus))
    }

    pub fn identification_consensus(&self, id: &IdentificationId) -> Result<ConsensusState, DomainError> {
        self.graph
            .identification(id)
            .ok_or_else(|| DomainError::UnknownIdentification(id.clone()))?;
        Ok(self.votes.identification_consensus(id, &self.cfg.consensus))
    }

    pub fn vote_summary(&self, target: &VoteTarget) -> Result<AnyVoteSummary, DomainError> {
        match target {
            VoteTarget::Link(id) => {
                self.graph.link(id).ok_or_else(|| DomainError::UnknownLink(id.clone()))?;
                Ok(AnyVoteSummary::Comparison(self.votes.comparison_summary(id)))
            }
            VoteTarget::Identification(id) => {
                self.graph
                    .identification(id)
                    .ok_or_else(|| DomainError::UnknownIdentification(id.clone()))?;
                Ok(AnyVoteSummary::Identification(self.votes.identification_summary(id)))
            }
        }
    }

    pub fn provenance_view(&self, id: &IdentificationId) -> Result<ProvenanceView, DomainError> {
        self.graph
            .provenance_view(id, |link| self.votes.match_consensus(link, &self.cfg.consensus))
    }

    /// Seq-ordered activity on a photo.
    pub fn activity_feed(&self, photo: &PhotoId) -> Result<&[ActivityFeedEntry], DomainError> {
        self.graph.photo(photo).ok_or_else(|| DomainError::UnknownPhoto(photo.clone()))?;
        Ok(self.feed.get(photo).map_or(&[], Vec::as_slice))
    }

    pub fn notifications(&self, user: &UserId) -> &[Notification] {
        self.notifications.get(user).map_or(&[], Vec::as_slice)
    }

    fn apply(&mut self, actor: &UserId, seq: Seq, kind: &EventKind) -> Result<Effect, DomainError> {
        let mut fx = Effect::default();
        match kind {
            EventKind::PhotoAdded { photo_id, photo_source, image_ref, tags } => {
                let photo = Photo {
                    photo_id: photo_id.clone(),
                    uploader: actor.clone(),
                    photo_source: photo_source.clone(),
                    image_ref: image_ref.clone(),
                    metadata_tags: tags.iter().filter(|(_, v)| !v.trim().is_empty()).map(|(k, v)| (k.clone(), v.clone())).collect(),
                    uploaded_at: seq,
                };
                self.graph.add_photo(photo)?;
                fx.photo_id = Some(photo_id.clone());
                fx.photos.push(photo_id.clone());
            }
            EventKind::TagsAdded { photo_id, tags } => {
                self.graph.add_tags(photo_id, tags.iter().map(|(k, v)| (k.clone(), v.clone())))?;
                fx.photo_id = Some(photo_id.clone());
                fx.photos.push(photo_id.clone());
            }
            EventKind::PreIdentificationProposed { identification_id, photo_id, identity, source, source_id } => {
                self.graph.propose_pre_identification(
                    identification_id.clone(),
                    photo_id,
                    identity.clone(),
                    source.clone(),
                    source_id.clone(),
                    actor,
                    seq,
                )?;
                fx.photo_id = Some(photo_id.clone());
                fx.identification_id = Some(identification_id.clone());
                fx.created.push(identification_id.clone());
                fx.photos.push(photo_id.clone());
            }
            EventKind::PhotosLinked { link_id, query, target, verdict } => {
                let out = self.graph.link_photos(link_id.clone(), query, target, *verdict, actor, seq)?;
                self.votes.cast_comparison(
                    &out.link_id,
                    VoteRecord { voter: actor.clone(), verdict: *verdict, note: None, voted_at: seq },
                );
                if &out.link_id != link_id {
                    fx.normalized = Some(EventKind::PhotosLinked {
                        link_id: out.link_id.clone(),
                        query: query.clone(),
                        target: target.clone(),
                        verdict: *verdict,
                    });
                }
                fx.link_id = Some(out.link_id);
                fx.created = out.created_identifications;
                fx.photos.extend([query.clone(), target.clone()]);
            }
            EventKind::FaceRecSupportSet { link_id, value } => {
                let link = self.graph.set_face_rec_support(link_id, *value)?;
                fx.photos.extend([link.photo_a.clone(), link.photo_b.clone()]);
                fx.link_id = Some(link_id.clone());
            }
            EventKind::ComparisonVoteCast { link_id, verdict } => {
                let link = self.graph.link(link_id).ok_or_else(|| DomainError::UnknownLink(link_id.clone()))?;
                fx.photos.extend([link.photo_a.clone(), link.photo_b.clone()]);
                self.votes.cast_comparison(
                    link_id,
                    VoteRecord { voter: actor.clone(), verdict: *verdict, note: None, voted_at: seq },
                );
                fx.link_id = Some(link_id.clone());
            }
            EventKind::IdentificationVoteCast { identification_id, verdict, note } => {
                let idn = self
                    .graph
                    .identification(identification_id)
                    .ok_or_else(|| DomainError::UnknownIdentification(identification_id.clone()))?;
                fx.photos.push(idn.photo_id.clone());
                self.votes.cast_identification(
                    identification_id,
                    VoteRecord { voter: actor.clone(), verdict: *verdict, note: note.clone(), voted_at: seq },
                );
                fx.identification_id = Some(identification_id.clone());
            }
            EventKind::SourceAdded { source_id, identification_id, source } => {
                self.graph.add_source(source_id.clone(), identification_id, source.clone(), actor, seq)?;
                fx.photos.extend(self.graph.identification(identification_id).map(|i| i.photo_id.clone()));
                fx.identification_id = Some(identification_id.clone());
            }
            EventKind::SourceRemoved { source_id } => {
                let removed = self.graph.remove_source(source_id)?;
                fx.photos.extend(self.graph.identification(&removed.identification_id).map(|i| i.photo_id.clone()));
                fx.identification_id = Some(removed.identification_id);
            }
            EventKind::BadgeChanged { .. } => return Err(DomainError::DerivedEvent),
        }
        Ok(fx)
    }

    /// Recomputes badges and appends a `BadgeChanged` event per change.
    fn refresh(&mut self, at: &str) -> Vec<Event> {
        let fresh = assign_badges(&self.graph, &self.votes, &self.cfg);
        let changes = diff_badges(&self.badges, &fresh);
        self.badges = fresh;
        let mut out = Vec::with_capacity(changes.len());
        for kind in changes {
            let ev = Event { seq: self.next_seq(), actor: UserId::from(ENGINE_ACTOR), at: at.into(), kind };
            self.record_derived(&ev);
            self.events.push(ev.clone());
            out.push(ev);
        }
        out
    }

    fn name_of(&self, id: &IdentificationId) -> String {
        self.graph
            .identification(id)
            .and_then(|i| self.graph.identity(&i.identity_id))
            .map_or_else(|| id.to_string(), |p| p.full_name.clone())
    }

    fn uploader_of(&self, photo: &PhotoId) -> Option<UserId> {
        self.graph.photo(photo).map(|p| p.uploader.clone())
    }

    fn push_feed(&mut self, photo: &PhotoId, ev: &Event, line: String) {
        self.feed.entry(photo.clone()).or_default().push(ActivityFeedEntry {
            photo_id: photo.clone(),
            seq: ev.seq,
            actor: ev.actor.clone(),
            line,
        });
    }

    fn notify(&mut self, photo: &PhotoId, ev: &Event, kind: NotificationKind, id: &IdentificationId) {
        let Some(uploader) = self.uploader_of(photo) else { return };
        if uploader == ev.actor {
            return;
        }
        let name = self.name_of(id);
        let message = match kind {
            NotificationKind::NewIdentity => format!("{} proposed {} for your photo {}", ev.actor, name, photo),
            NotificationKind::CommunityDispute => format!("The community disputes {} on your photo {}", name, photo),
        };
        self.notifications.entry(uploader.clone()).or_default().push(Notification {
            recipient: uploader,
            cause: ev.seq,
            kind,
            photo_id: photo.clone(),
            identification_id: id.clone(),
            message,
            read: false,
        });
    }

    /// Feed lines and notifications for an applied user event.
    fn record(&mut self, ev: &Event, fx: &Effect) {
        let actor = &ev.actor;
        let line = match &ev.kind {
            EventKind::PhotoAdded { photo_id, .. } => format!("{actor} uploaded photo {photo_id}"),
            EventKind::TagsAdded { photo_id, tags } => {
                let tags: Vec<String> = tags.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{actor} tagged photo {photo_id}: {}", tags.join(", "))
            }
            EventKind::PreIdentificationProposed { photo_id, identity, source, .. } => {
                let label = if source.source_type.label().is_empty() { "unspecified" } else { source.source_type.label() };
                format!("{actor} identified photo {photo_id} as {} (source: {label})", identity.full_name)
            }
            EventKind::PhotosLinked { query, target, verdict, .. } => {
                let mut line = format!("{actor} linked photo {query} to photo {target} as {}", verdict.label());
                if !fx.created.is_empty() {
                    let names: Vec<String> = fx.created.iter().map(|id| self.name_of(id)).collect();
                    line.push_str(&format!("; photo {query} identified as {}", names.join(", ")));
                }
                line
            }
            EventKind::FaceRecSupportSet { value, .. } => {
                format!("facial recognition on photos {}: {value:?}", fx.photos.join_ids())
            }
            EventKind::ComparisonVoteCast { verdict, .. } => {
                format!("{actor} compared photos {}: {}", fx.photos.join_ids(), verdict.label())
            }
            EventKind::IdentificationVoteCast { identification_id, verdict, note } => {
                let mut line = format!("{actor} voted \"{}\" on {}", verdict.label(), self.name_of(identification_id));
                if let Some(note) = note.as_deref().filter(|n| !n.is_empty()) {
                    line.push_str(&format!(": {note}"));
                }
                line
            }
            EventKind::SourceAdded { identification_id, source, .. } => {
                format!("{actor} added source \"{}\" to {}", source.source_type.label(), self.name_of(identification_id))
            }
            EventKind::SourceRemoved { source_id } => match &fx.identification_id {
                Some(id) => format!("{actor} removed source {source_id} from {}", self.name_of(id)),
                None => format!("{actor} removed source {source_id}"),
            },
            EventKind::BadgeChanged { .. } => return self.record_derived(ev),
        };
        let mut photos = fx.photos.clone();
        photos.dedup();
        for p in &photos {
            self.push_feed(p, ev, line.clone());
        }
        for id in &fx.created {
            if let Some(photo) = self.graph.identification(id).map(|i| i.photo_id.clone()) {
                self.notify(&photo, ev, NotificationKind::NewIdentity, id);
            }
        }
    }

    fn record_derived(&mut self, ev: &Event) {
        let EventKind::BadgeChanged { photo_id, identification_id, from, to } = &ev.kind else {
            return;
        };
        let subject = match identification_id {
            Some(id) => self.name_of(id),
            None => format!("photo {photo_id}"),
        };
        let line = format!("{subject}: {} -> {}", describe(from.as_ref()), describe(Some(to)));
        self.push_feed(photo_id, ev, line);
        let had = from.as_ref().is_some_and(|b| b.overlays.contains(&OverlayBadge::CommunityDispute));
        if let Some(id) = identification_id {
            if !had && to.overlays.contains(&OverlayBadge::CommunityDispute) {
                self.notify(photo_id, ev, NotificationKind::CommunityDispute, id);
            }
        }
    }
}

trait JoinIds {
    fn join_ids(&self) -> String;
}

impl JoinIds for Vec<PhotoId> {
    fn join_ids(&self) -> String {
        let ids: Vec<&str> = self.iter().map(PhotoId::as_str).collect();
        ids.join(" and ")
    }
}

fn describe(state: Option<&BadgeState>) -> String {
    let Some(state) = state else { return "none".into() };
    let mut out = String::from(state.stage.label());
    for o in &state.overlays {
        out.push_str(" + ");
        out.push_str(o.label());
    }
    out
}

/// `BadgeChanged` payloads turning `old` into `new`, in photo then
/// identification order.
pub fn diff_badges(old: &BadgeMap, new: &BadgeMap) -> Vec<EventKind> {
    let mut out = Vec::new();
    for (photo_id, after) in new {
        let before = old.get(photo_id);
        if before.map(|b| b.stage) != Some(after.stage) {
            out.push(EventKind::BadgeChanged {
                photo_id: photo_id.clone(),
                identification_id: None,
                from: before.map(|b| BadgeState { stage: b.stage, overlays: Default::default() }),
                to: BadgeState { stage: after.stage, overlays: Default::default() },
            });
        }
        for (id, badge) in &after.per_identification {
            let prev = before.and_then(|b| b.per_identification.get(id));
            let to = BadgeState { stage: badge.stage, overlays: badge.overlays.clone() };
            let from = prev.map(|p| BadgeState { stage: p.stage, overlays: p.overlays.clone() });
            if from.as_ref() != Some(&to) {
                out.push(EventKind::BadgeChanged {
                    photo_id: photo_id.clone(),
                    identification_id: Some(id.clone()),
                    from,
                    to,
                });
            }
        }
    }
    out
}

/// Folds the non-derived events of a log and returns the resulting badges.
pub fn recompute(events: &[Event], cfg: &EngineConfig) -> Result<BadgeMap, ReplayError> {
    let mut ledger = Ledger::new(cfg.clone());
    ledger.submit_batch(events.iter().map(|e| (e.actor.clone(), e.at.clone(), e.kind.clone())))?;
    Ok(ledger.badges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IdSourceClaim, Identity, QualityBadge};
    use crate::taxonomy::SourceType;

    fn tagged() -> BTreeMap<String, String> {
        [("photo_source", "collection"), ("coat_color", "dark")]
            .into_iter()
            .map(|(k, v)| (k.into(), v.into()))
            .collect()
    }

    fn add_photo(l: &mut Ledger, actor: &str, id: &str, tags: BTreeMap<String, String>) -> Receipt {
        l.submit(
            actor.into(),
            String::new(),
            EventKind::PhotoAdded { photo_id: id.into(), photo_source: String::new(), image_ref: String::new(), tags },
        )
        .unwrap()
    }

    fn pre_id(l: &mut Ledger, actor: &str, idn: &str, photo: &str, who: &str, st: SourceType) -> Receipt {
        l.submit(
            actor.into(),
            String::new(),
            EventKind::PreIdentificationProposed {
                identification_id: idn.into(),
                photo_id: photo.into(),
                identity: Identity {
                    identity_id: who.into(),
                    full_name: who.into(),
                    unit: String::new(),
                    biography: String::new(),
                    biography_source: String::new(),
                },
                source: IdSourceClaim::new(st, ""),
                source_id: None,
            },
        )
        .unwrap()
    }

    fn link(l: &mut Ledger, actor: &str, id: &str, q: &str, t: &str) -> Receipt {
        l.submit(
            actor.into(),
            String::new(),
            EventKind::PhotosLinked { link_id: id.into(), query: q.into(), target: t.into(), verdict: ComparisonVerdict::FacialMatch },
        )
        .unwrap()
    }

    fn badge_events(r: &Receipt) -> Vec<&Event> {
        r.events.iter().filter(|e| e.kind.is_derived()).collect()
    }

    #[test]
    fn upload_emits_initial_badge() {
        let mut l = Ledger::default();
        let r = add_photo(&mut l, "ann", "p1", BTreeMap::new());
        assert_eq!(r.seq, Seq(1));
        let derived = badge_events(&r);
        assert_eq!(derived.len(), 1);
        assert_eq!(derived[0].seq, Seq(2));
        assert_eq!(derived[0].actor.as_str(), ENGINE_ACTOR);
        assert!(matches!(
            &derived[0].kind,
            EventKind::BadgeChanged { from: None, to, identification_id: None, .. } if to.stage == QualityBadge::NeedsTags
        ));
        let r = add_photo(&mut l, "ann", "p2", tagged());
        assert_eq!(l.badges()[&PhotoId::from("p2")].stage, QualityBadge::NeedsId);
        assert_eq!(badge_events(&r).len(), 1);
    }

    #[test]
    fn vote_without_badge_change_appends_nothing_derived() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        pre_id(&mut l, "ann", "i1", "p1", "smith", SourceType::UsAhecMollus);
        let r = l
            .submit("bob".into(), String::new(), EventKind::IdentificationVoteCast {
                identification_id: "i1".into(),
                verdict: IdVoteVerdict::YesSlightly,
                note: None,
            })
            .unwrap();
        assert_eq!(r.events.len(), 1);
    }

    #[test]
    fn rejected_events_leave_state_untouched() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        let before = l.events().len();
        let err = l
            .submit("bob".into(), String::new(), EventKind::ComparisonVoteCast {
                link_id: "nope".into(),
                verdict: ComparisonVerdict::Replica,
            })
            .unwrap_err();
        assert!(matches!(err, DomainError::UnknownLink(_)));
        let derived = EventKind::BadgeChanged {
            photo_id: "p1".into(),
            identification_id: None,
            from: None,
            to: BadgeState { stage: QualityBadge::VerifiedId, overlays: Default::default() },
        };
        assert_eq!(l.submit("bob".into(), String::new(), derived), Err(DomainError::DerivedEvent));
        assert_eq!(l.events().len(), before);
    }

    #[test]
    fn relinking_a_pair_reuses_the_link_id() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        add_photo(&mut l, "ann", "p2", tagged());
        let first = link(&mut l, "bob", "l1", "p2", "p1");
        let second = link(&mut l, "cat", "l9", "p1", "p2");
        assert_eq!(first.link_id, Some("l1".into()));
        assert_eq!(second.link_id, Some("l1".into()));
        assert!(matches!(&second.events[0].kind, EventKind::PhotosLinked { link_id, .. } if link_id.as_str() == "l1"));
        assert_eq!(l.match_consensus(&"l1".into()).unwrap().match_voters, 2);
    }

    #[test]
    fn linked_identity_notifies_uploader() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        pre_id(&mut l, "ann", "i1", "p1", "smith", SourceType::UsAhecMollus);
        assert!(l.notifications(&"ann".into()).is_empty());
        add_photo(&mut l, "bob", "p2", tagged());
        let r = link(&mut l, "cat", "l1", "p2", "p1");
        assert_eq!(r.created_identifications, [IdentificationId::from("p2:smith")]);
        let inbox = l.notifications(&"bob".into());
        assert_eq!(inbox.len(), 1);
        assert_eq!(inbox[0].kind, NotificationKind::NewIdentity);
        assert!(!inbox[0].read);
        // Uploader acting on their own photo is not notified.
        link(&mut l, "bob", "l2", "p2", "p1");
        assert_eq!(l.notifications(&"bob".into()).len(), 1);
    }

    #[test]
    fn dispute_notifies_once() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        pre_id(&mut l, "bob", "i1", "p1", "smith", SourceType::UsAhecMollus);
        for voter in ["v1", "v2", "v3"] {
            l.cast_identification_vote(&"i1".into(), voter.into(), IdVoteVerdict::NoHighly, None).unwrap();
        }
        let disputes: Vec<_> = l
            .notifications(&"ann".into())
            .iter()
            .filter(|n| n.kind == NotificationKind::CommunityDispute)
            .collect();
        assert_eq!(disputes.len(), 1);
    }

    #[test]
    fn feed_covers_each_touching_event_once() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        add_photo(&mut l, "ann", "p2", tagged());
        link(&mut l, "bob", "l1", "p1", "p2");
        let feed = l.activity_feed(&"p1".into()).unwrap();
        let user_lines: Vec<_> = feed.iter().filter(|e| e.actor.as_str() != ENGINE_ACTOR).collect();
        assert_eq!(user_lines.len(), 2);
        assert!(feed.windows(2).all(|w| w[0].seq < w[1].seq));
        assert!(matches!(l.activity_feed(&"zz".into()), Err(DomainError::UnknownPhoto(_))));
    }

    #[test]
    fn batch_is_all_or_nothing() {
        let mut l = Ledger::default();
        let ok = EventKind::PhotoAdded {
            photo_id: "p1".into(),
            photo_source: String::new(),
            image_ref: String::new(),
            tags: tagged(),
        };
        let bad = EventKind::TagsAdded { photo_id: "zz".into(), tags: tagged() };
        let err = l
            .submit_batch([("a".into(), String::new(), ok.clone()), ("a".into(), String::new(), bad)])
            .unwrap_err();
        assert_eq!(err.index(), 1);
        assert!(l.events().is_empty());
        let appended = l.submit_batch([("a".into(), String::new(), ok)]).unwrap();
        assert_eq!(appended.len(), 2);
    }

    #[test]
    fn restore_reproduces_state() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        pre_id(&mut l, "ann", "i1", "p1", "smith", SourceType::PeriodInscriptionWithValediction);
        add_photo(&mut l, "bob", "p2", BTreeMap::new());
        let restored = Ledger::restore(EngineConfig::default(), l.events().to_vec()).unwrap();
        assert_eq!(restored.badges(), l.badges());
        assert_eq!(restored.events(), l.events());
        assert_eq!(restored.activity_feed(&"p1".into()).unwrap(), l.activity_feed(&"p1".into()).unwrap());
        assert_eq!(recompute(l.events(), &EngineConfig::default()).unwrap(), *l.badges());
    }

    #[test]
    fn restore_rejects_out_of_order_seq() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        add_photo(&mut l, "ann", "p2", tagged());
        let mut events = l.events().to_vec();
        events.swap(0, 1);
        let err = Ledger::restore(EngineConfig::default(), events).unwrap_err();
        assert!(matches!(err, ReplayError::SeqOutOfOrder { index: 1, .. }));
    }

    #[test]
    fn removing_the_primary_source_downgrades() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        pre_id(&mut l, "ann", "i1", "p1", "smith", SourceType::PeriodInscriptionWithValediction);
        assert_eq!(l.badges()[&PhotoId::from("p1")].stage, QualityBadge::VerifiedId);
        let r = l
            .submit("ann".into(), String::new(), EventKind::SourceRemoved { source_id: "i1:source".into() })
            .unwrap();
        assert_eq!(l.badges()[&PhotoId::from("p1")].stage, QualityBadge::NeedsVerification);
        assert_eq!(badge_events(&r).len(), 2);
    }

    #[test]
    fn vote_summary_targets() {
        let mut l = Ledger::default();
        add_photo(&mut l, "ann", "p1", tagged());
        pre_id(&mut l, "ann", "i1", "p1", "smith", SourceType::Unspecified);
        l.cast_identification_vote(&"i1".into(), "v".into(), IdVoteVerdict::NoSlightly, Some("wrong unit".into()))
            .unwrap();
        l.cast_identification_vote(&"i1".into(), "v".into(), IdVoteVerdict::YesHighly, None).unwrap();
        match l.vote_summary(&VoteTarget::Identification("i1".into())).unwrap() {
            AnyVoteSummary::Identification(s) => {
                assert_eq!(s.total(), 1);
                assert_eq!(s.count(IdVoteVerdict::YesHighly), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(l.vote_summary(&VoteTarget::Link("x".into())), Err(DomainError::UnknownLink(_))));
    }
}
