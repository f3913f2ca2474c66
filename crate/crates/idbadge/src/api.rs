//! HTTP/JSON API.
//!
//! Reads are served from an immutable ledger snapshot. Writes are funnelled
//! through one writer that applies the event to a copy, persists what was
//! appended and only then publishes the copy. Writers identify themselves
//! with `Authorization: Bearer <user id>`.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};
use std::time::SystemTime;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use idbadge_core::consensus::{ComparisonVerdict, IdVoteVerdict, MatchConsensus};
use idbadge_core::{
    ConsensusState, DomainError, Event, EventKind, FaceRecSupport, IdSourceClaim, IdentificationId, Identity,
    Ledger, LinkId, PhotoId, QualityBadge, Receipt, SourceId, SourceType, UserId,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::face_rec::{support, FaceRecProvider, FaceRef};
use crate::store::EventLog;
use crate::views::{self, PhotoView};

/// Actor recorded on face-recognition results.
pub const FACE_REC_ACTOR: &str = "face-rec";

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

struct Shared {
    snapshot: RwLock<Arc<Ledger>>,
    /// `None` keeps state in memory only.
    writer: Mutex<Option<EventLog>>,
    face_rec: Box<dyn FaceRecProvider>,
}

impl AppState {
    pub fn new(ledger: Ledger, log: Option<EventLog>, face_rec: Box<dyn FaceRecProvider>) -> Self {
        AppState {
            shared: Arc::new(Shared {
                snapshot: RwLock::new(Arc::new(ledger)),
                writer: Mutex::new(log),
                face_rec,
            }),
        }
    }

    pub fn snapshot(&self) -> Arc<Ledger> {
        self.shared.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Applies one user event plus any face-recognition follow-up.
    async fn write(&self, actor: UserId, kind: EventKind, path: Option<&str>) -> Result<Written, ApiError> {
        let mut writer = self.shared.writer.lock().await;
        let mut next = Ledger::clone(&self.snapshot());
        let receipt = next.submit(actor, now(), kind).map_err(|e| ApiError::domain(e, path))?;
        let mut appended = receipt.events.clone();
        if let Some(link) = receipt.link_id.as_ref().and_then(|id| next.graph().link(id)).cloned() {
            let fresh = link.created_at == receipt.seq;
            let value = fresh.then(|| {
                let image = |p: &PhotoId| next.graph().photo(p).map_or("", |p| p.image_ref.as_str()).to_owned();
                let (ia, ib) = (image(&link.photo_a), image(&link.photo_b));
                support(
                    &*self.shared.face_rec,
                    FaceRef { photo_id: &link.photo_a, image_ref: &ia },
                    FaceRef { photo_id: &link.photo_b, image_ref: &ib },
                )
            });
            if let Some(value) = value.filter(|v| *v != FaceRecSupport::Unknown) {
                let kind = EventKind::FaceRecSupportSet { link_id: link.link_id.clone(), value };
                let extra = next.submit(FACE_REC_ACTOR.into(), now(), kind).map_err(|e| ApiError::domain(e, None))?;
                appended.extend(extra.events);
            }
        }
        if let Some(log) = writer.as_mut() {
            log.append(&appended).map_err(|e| {
                tracing::error!("append failed: {e}");
                ApiError::Storage(e.to_string())
            })?;
        }
        let next = Arc::new(next);
        *self.shared.snapshot.write().unwrap_or_else(|e| e.into_inner()) = next.clone();
        Ok(Written { ledger: next, receipt })
    }
}

struct Written {
    ledger: Arc<Ledger>,
    receipt: Receipt,
}

fn now() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

#[derive(Debug)]
pub enum ApiError {
    Unauthorized,
    NotFound(String),
    BadRequest(String),
    Rejected(StatusCode, String),
    Validation(DomainError),
    Storage(String),
}

impl ApiError {
    /// Unknown-entity errors naming the path entity become 404.
    fn domain(err: DomainError, path: Option<&str>) -> Self {
        let missing = match &err {
            DomainError::UnknownPhoto(id) => Some(id.as_str()),
            DomainError::UnknownIdentification(id) => Some(id.as_str()),
            DomainError::UnknownLink(id) => Some(id.as_str()),
            DomainError::UnknownSource(id) => Some(id.as_str()),
            _ => None,
        };
        if missing.is_some() && missing == path {
            ApiError::NotFound(err.to_string())
        } else {
            ApiError::Validation(err)
        }
    }

    fn lookup(err: DomainError) -> Self {
        ApiError::NotFound(err.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, "missing bearer actor".to_owned()),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Rejected(s, m) => (s, m),
            ApiError::Validation(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
            ApiError::Storage(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(ErrorBody { error })).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::Rejected(r.status(), r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

/// Caller named by the bearer header.
pub struct Actor(pub UserId);

impl<S: Send + Sync> FromRequestParts<S> for Actor {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| Actor(v.into()))
            .ok_or(ApiError::Unauthorized)
    }
}

type Body<T> = Result<Json<T>, JsonRejection>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/photos", get(list_photos).post(add_photo))
        .route("/photos/{id}", get(get_photo))
        .route("/photos/{id}/feed", get(get_feed))
        .route("/photos/{id}/tags", post(add_tags))
        .route("/photos/{id}/identifications", post(propose))
        .route("/identifications/{id}", get(get_identification))
        .route("/identifications/{id}/provenance", get(get_provenance))
        .route("/identifications/{id}/votes", get(get_votes).post(vote_identification))
        .route("/identifications/{id}/sources", post(add_source))
        .route("/identifications/{id}/sources/{source_id}", delete(remove_source))
        .route("/links", post(link_photos))
        .route("/links/{id}", get(get_link))
        .route("/links/{id}/votes", post(vote_comparison))
        .route("/links/{id}/face-rec", post(set_face_rec))
        .route("/users/{id}/notifications", get(get_notifications))
        .with_state(state)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ListParams {
    badge: Option<String>,
    name: Option<String>,
}

async fn list_photos(
    State(state): State<AppState>,
    params: Result<Query<ListParams>, QueryRejection>,
) -> Result<Json<Vec<views::PhotoSummary>>, ApiError> {
    let Query(params) = params?;
    let badge = params
        .badge
        .as_deref()
        .map(str::parse::<QualityBadge>)
        .transpose()
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let name = params.name.as_deref().map(str::trim).filter(|n| !n.is_empty());
    Ok(Json(views::list_photos(&state.snapshot(), badge, name)))
}

async fn get_photo(State(state): State<AppState>, Path(id): Path<PhotoId>) -> Result<Json<PhotoView>, ApiError> {
    views::photo_view(&state.snapshot(), &id).map(Json).map_err(ApiError::lookup)
}

async fn get_feed(
    State(state): State<AppState>,
    Path(id): Path<PhotoId>,
) -> Result<Json<Vec<idbadge_core::ledger::ActivityFeedEntry>>, ApiError> {
    let ledger = state.snapshot();
    ledger.activity_feed(&id).map(|f| Json(f.to_vec())).map_err(ApiError::lookup)
}

async fn get_identification(
    State(state): State<AppState>,
    Path(id): Path<IdentificationId>,
) -> Result<Json<views::IdentificationView>, ApiError> {
    views::identification_view(&state.snapshot(), &id).map(Json).map_err(ApiError::lookup)
}

async fn get_provenance(
    State(state): State<AppState>,
    Path(id): Path<IdentificationId>,
) -> Result<Json<idbadge_core::ProvenanceView>, ApiError> {
    state.snapshot().provenance_view(&id).map(Json).map_err(ApiError::lookup)
}

async fn get_votes(
    State(state): State<AppState>,
    Path(id): Path<IdentificationId>,
) -> Result<Json<views::VotesView>, ApiError> {
    views::votes_view(&state.snapshot(), &id).map(Json).map_err(ApiError::lookup)
}

async fn get_link(State(state): State<AppState>, Path(id): Path<LinkId>) -> Result<Json<views::LinkView>, ApiError> {
    views::link_view(&state.snapshot(), &id).map(Json).map_err(ApiError::lookup)
}

async fn get_notifications(
    State(state): State<AppState>,
    Path(id): Path<UserId>,
) -> Json<Vec<idbadge_core::ledger::Notification>> {
    Json(state.snapshot().notifications(&id).to_vec())
}

/// Body of every successful write.
#[derive(Debug, Serialize)]
pub struct WriteResponse {
    pub seq: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photo_id: Option<PhotoId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_id: Option<LinkId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identification_id: Option<IdentificationId>,
    pub created_identifications: Vec<IdentificationId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus: Option<ConsensusState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_consensus: Option<MatchConsensus>,
    /// Engine events appended by this write.
    pub badge_changes: Vec<Event>,
    /// Current state of every photo the write touched.
    pub photos: Vec<PhotoView>,
}

fn respond(w: Written, status: StatusCode) -> WriteResult {
    let Written { ledger, receipt } = w;
    let mut photos: Vec<PhotoId> = receipt.photos.clone();
    photos.sort();
    photos.dedup();
    let photos = photos.iter().filter_map(|p| views::photo_view(&ledger, p).ok()).collect();
    let consensus = receipt.identification_id.as_ref().and_then(|i| ledger.identification_consensus(i).ok());
    let match_consensus = receipt.link_id.as_ref().and_then(|l| ledger.match_consensus(l).ok());
    Ok((
        status,
        Json(WriteResponse {
            seq: receipt.seq.0,
            photo_id: receipt.photo_id,
            link_id: receipt.link_id,
            identification_id: receipt.identification_id,
            created_identifications: receipt.created_identifications,
            consensus,
            match_consensus,
            badge_changes: receipt.events.into_iter().filter(|e| e.kind.is_derived()).collect(),
            photos,
        }),
    ))
}

type WriteResult = Result<(StatusCode, Json<WriteResponse>), ApiError>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewPhoto {
    photo_id: PhotoId,
    #[serde(default)]
    photo_source: String,
    #[serde(default)]
    image_ref: String,
    #[serde(default)]
    tags: BTreeMap<String, String>,
}

async fn add_photo(State(state): State<AppState>, Actor(actor): Actor, body: Body<NewPhoto>) -> WriteResult {
    let Json(b) = body?;
    let kind =
        EventKind::PhotoAdded { photo_id: b.photo_id, photo_source: b.photo_source, image_ref: b.image_ref, tags: b.tags };
    respond(state.write(actor, kind, None).await?, StatusCode::CREATED)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewTags {
    tags: BTreeMap<String, String>,
}

async fn add_tags(
    State(state): State<AppState>,
    Path(id): Path<PhotoId>,
    Actor(actor): Actor,
    body: Body<NewTags>,
) -> WriteResult {
    let Json(b) = body?;
    let path = id.to_string();
    let kind = EventKind::TagsAdded { photo_id: id, tags: b.tags };
    respond(state.write(actor, kind, Some(&path)).await?, StatusCode::OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewIdentification {
    #[serde(default)]
    identification_id: Option<IdentificationId>,
    identity: Identity,
    source: IdSourceClaim,
    #[serde(default)]
    source_id: Option<SourceId>,
}

async fn propose(
    State(state): State<AppState>,
    Path(id): Path<PhotoId>,
    Actor(actor): Actor,
    body: Body<NewIdentification>,
) -> WriteResult {
    let Json(b) = body?;
    let path = id.to_string();
    let identification_id = b
        .identification_id
        .unwrap_or_else(|| idbadge_core::graph::post_identification_id(&id, &b.identity.identity_id));
    let kind = EventKind::PreIdentificationProposed {
        identification_id,
        photo_id: id,
        identity: b.identity,
        source: b.source,
        source_id: b.source_id,
    };
    respond(state.write(actor, kind, Some(&path)).await?, StatusCode::CREATED)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewLink {
    #[serde(default)]
    link_id: Option<LinkId>,
    query: PhotoId,
    target: PhotoId,
    verdict: ComparisonVerdict,
}

/// Default id for the link between two photos, independent of direction.
pub fn default_link_id(a: &PhotoId, b: &PhotoId) -> LinkId {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    LinkId::new(format!("{lo}~{hi}"))
}

async fn link_photos(State(state): State<AppState>, Actor(actor): Actor, body: Body<NewLink>) -> WriteResult {
    let Json(b) = body?;
    let link_id = b.link_id.unwrap_or_else(|| default_link_id(&b.query, &b.target));
    let kind = EventKind::PhotosLinked { link_id, query: b.query, target: b.target, verdict: b.verdict };
    respond(state.write(actor, kind, None).await?, StatusCode::CREATED)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparisonBallot {
    verdict: ComparisonVerdict,
}

async fn vote_comparison(
    State(state): State<AppState>,
    Path(id): Path<LinkId>,
    Actor(actor): Actor,
    body: Body<ComparisonBallot>,
) -> WriteResult {
    let Json(b) = body?;
    let path = id.to_string();
    let kind = EventKind::ComparisonVoteCast { link_id: id, verdict: b.verdict };
    respond(state.write(actor, kind, Some(&path)).await?, StatusCode::OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceRecBody {
    value: FaceRecSupport,
}

async fn set_face_rec(
    State(state): State<AppState>,
    Path(id): Path<LinkId>,
    Actor(actor): Actor,
    body: Body<FaceRecBody>,
) -> WriteResult {
    let Json(b) = body?;
    let path = id.to_string();
    let kind = EventKind::FaceRecSupportSet { link_id: id, value: b.value };
    respond(state.write(actor, kind, Some(&path)).await?, StatusCode::OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdBallot {
    verdict: IdVoteVerdict,
    #[serde(default)]
    note: Option<String>,
}

async fn vote_identification(
    State(state): State<AppState>,
    Path(id): Path<IdentificationId>,
    Actor(actor): Actor,
    body: Body<IdBallot>,
) -> WriteResult {
    let Json(b) = body?;
    let path = id.to_string();
    let kind = EventKind::IdentificationVoteCast { identification_id: id, verdict: b.verdict, note: b.note };
    respond(state.write(actor, kind, Some(&path)).await?, StatusCode::OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSource {
    #[serde(default)]
    source_id: Option<SourceId>,
    source_type: SourceType,
    #[serde(default)]
    details: String,
}

async fn add_source(
    State(state): State<AppState>,
    Path(id): Path<IdentificationId>,
    Actor(actor): Actor,
    body: Body<NewSource>,
) -> WriteResult {
    let Json(b) = body?;
    let path = id.to_string();
    let source_id = match b.source_id {
        Some(s) => s,
        None => SourceId::new(format!("{id}:{}", state.snapshot().last_seq().0 + 1)),
    };
    let kind = EventKind::SourceAdded {
        source_id,
        identification_id: id,
        source: IdSourceClaim::new(b.source_type, b.details),
    };
    respond(state.write(actor, kind, Some(&path)).await?, StatusCode::CREATED)
}

async fn remove_source(
    State(state): State<AppState>,
    Path((id, source_id)): Path<(IdentificationId, SourceId)>,
    Actor(actor): Actor,
) -> WriteResult {
    let owner = state.snapshot().graph().source(&source_id).map(|s| s.identification_id.clone());
    if owner.as_ref() != Some(&id) {
        return Err(ApiError::NotFound(DomainError::UnknownSource(source_id).to_string()));
    }
    let path = source_id.to_string();
    respond(state.write(actor, EventKind::SourceRemoved { source_id }, Some(&path)).await?, StatusCode::OK)
}
