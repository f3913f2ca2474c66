mod common;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use common::*;
use http_body_util::BodyExt;
use idbadge::api::{router, AppState};
use idbadge::face_rec::{FixtureProvider, StubProvider};
use idbadge::store::EventLog;
use idbadge_core::{EngineConfig, FaceRecSupport, Ledger};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(ledger: Ledger) -> (AppState, Router) {
    let state = AppState::new(ledger, None, Box::new(StubProvider));
    (state.clone(), router(state))
}

async fn send(app: &Router, method: Method, uri: &str, actor: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(a) = actor {
        req = req.header("authorization", format!("Bearer {a}"));
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Method::GET, uri, None, None).await
}

async fn post(app: &Router, uri: &str, actor: &str, body: Value) -> (StatusCode, Value) {
    send(app, Method::POST, uri, Some(actor), Some(body)).await
}

fn tagged_photo(id: &str) -> Value {
    json!({ "photo_id": id, "photo_source": "attic", "image_ref": format!("images/{id}.jpg"), "tags": { "coat_color": "dark" } })
}

fn photo_in<'a>(resp: &'a Value, id: &str) -> &'a Value {
    resp["photos"].as_array().unwrap().iter().find(|p| p["photo_id"] == id).unwrap()
}

#[tokio::test]
async fn unknown_entities_are_404() {
    let (_, app) = app(Ledger::default());
    for uri in [
        "/photos/nope",
        "/photos/nope/feed",
        "/identifications/nope",
        "/identifications/nope/provenance",
        "/identifications/nope/votes",
        "/links/nope",
    ] {
        assert_eq!(get(&app, uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (status, body) =
        post(&app, "/links/nope/votes", "ann", json!({ "verdict": "Replica" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    let (status, _) = post(&app, "/photos/nope/tags", "ann", json!({ "tags": { "a": "b" } })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn writes_need_an_actor() {
    let (state, app) = app(Ledger::default());
    let (status, _) = send(&app, Method::POST, "/photos", None, Some(tagged_photo("p1"))).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, _) = send(&app, Method::POST, "/photos", Some(" "), Some(tagged_photo("p1"))).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert!(state.snapshot().events().is_empty());
}

#[tokio::test]
async fn validation_failures_are_422() {
    let (state, app) = app(Ledger::default());
    post(&app, "/photos", "ann", tagged_photo("p1")).await;
    post(&app, "/photos", "ann", tagged_photo("p2")).await;
    let before = state.snapshot().events().len();
    let (status, body) =
        post(&app, "/links", "ann", json!({ "query": "p1", "target": "p2", "verdict": "Not Sure" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    let (status, _) = post(&app, "/links", "ann", json!({ "query": "p1", "target": "p1", "verdict": "Replica" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = post(&app, "/photos", "ann", tagged_photo("p1")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = post(&app, "/links", "ann", json!({ "query": "p1", "target": "zz", "verdict": "Replica" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = post(&app, "/photos/p1/tags", "ann", json!({ "tags": 3 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(state.snapshot().events().len(), before);
}

#[tokio::test]
async fn stage_walk_through_the_api() {
    let (_, app) = app(Ledger::default());
    let (status, resp) = post(&app, "/photos", "bob", json!({ "photo_id": "p1" })).await;
    assert_eq!(status, StatusCode::CREATED);
    let photo = photo_in(&resp, "p1");
    assert_eq!(photo["stage"], "Needs Tags");
    assert_eq!(photo["missing_tags"], json!(["coat_color", "photo_source"]));
    assert_eq!(photo["checklist"][0], json!({ "badge": "Needs Tags", "status": "current" }));

    let (_, resp) =
        post(&app, "/photos/p1/tags", "bob", json!({ "tags": { "coat_color": "dark", "photo_source": "attic" } })).await;
    assert_eq!(photo_in(&resp, "p1")["stage"], "Needs ID");
    assert_eq!(resp["badge_changes"].as_array().unwrap().len(), 1);

    let body = json!({
        "identity": { "identity_id": "ann-lee", "full_name": "Ann Lee" },
        "source": { "source_type": "Find A Grave", "details": "https://www.findagrave.com/memorial/9" }
    });
    let (status, resp) = post(&app, "/photos/p1/identifications", "bob", body).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(resp["identification_id"], "p1:ann-lee");
    let photo = photo_in(&resp, "p1");
    assert_eq!(photo["stage"], "Needs Verification");
    assert_eq!(photo["next_step"], json!(idbadge_core::QualityBadge::NeedsVerification.next_step()));

    let (status, resp) = post(
        &app,
        "/identifications/p1:ann-lee/sources",
        "cal",
        json!({ "source_id": "s-inscription", "source_type": "Period Inscription with Valediction" }),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let idn = &photo_in(&resp, "p1")["identifications"][0];
    assert_eq!(idn["stage"], "Verified ID");
    assert_eq!(idn["verified_via"], "PrimaryNoDispute");

    let (status, resp) =
        send(&app, Method::DELETE, "/identifications/p1:ann-lee/sources/s-inscription", Some("cal"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(photo_in(&resp, "p1")["stage"], "Needs Verification");
    let (status, _) =
        send(&app, Method::DELETE, "/identifications/p1:ann-lee/sources/s-inscription", Some("cal"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn seventh_vote_response_shows_verified() {
    let (_, app) = app(Ledger::default());
    for id in ["q2", "q3"] {
        post(&app, "/photos", "bob", tagged_photo(id)).await;
    }
    post(
        &app,
        "/photos/q3/identifications",
        "curator",
        json!({
            "identity": { "identity_id": "bill-johnson", "full_name": "Bill Johnson" },
            "source": { "source_type": "Period Inscription without Valediction", "details": "verso" }
        }),
    )
    .await;
    let (_, resp) = post(&app, "/links", "alice", json!({ "query": "q2", "target": "q3", "verdict": "Facial Match" })).await;
    assert_eq!(resp["link_id"], "q2~q3");
    assert_eq!(resp["created_identifications"], json!(["q2:bill-johnson"]));
    for voter in ["u1", "u2", "u3", "u4"] {
        let (status, resp) = post(&app, "/links/q2~q3/votes", voter, json!({ "verdict": "Facial Match" })).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(resp["match_consensus"]["agreed_match"], voter == "u4");
    }
    let voters = ["alice", "v1", "v2", "v3", "v4", "v5", "v6"];
    let mut last = Value::Null;
    for (i, voter) in voters.iter().enumerate() {
        let (status, resp) = post(
            &app,
            "/identifications/q2:bill-johnson/votes",
            voter,
            json!({ "verdict": "Yes - Highly Confident", "note": format!("vote {i}") }),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        let stage = photo_in(&resp, "q2")["stage"].clone();
        assert_eq!(stage, if i < 4 { "Needs Verification" } else { "Verified ID" }, "after vote {}", i + 1);
        last = resp;
    }
    assert_eq!(last["consensus"]["net_score"], 14);
    let idn = &photo_in(&last, "q2")["identifications"][0];
    assert_eq!(idn["verified_via"], "FacialMatchOfVerified");
    assert_eq!(idn["overlays"], json!(["Community Consensus"]));

    // Read-your-writes.
    let (_, photo) = get(&app, "/photos/q2").await;
    assert_eq!(&photo, photo_in(&last, "q2"));

    let (_, votes) = get(&app, "/identifications/q2:bill-johnson/votes").await;
    assert_eq!(votes["summary"]["histogram"][0], json!({ "verdict": "Yes - Highly Confident", "count": 7 }));
    assert_eq!(votes["summary"]["votes"].as_array().unwrap().len(), 7);
    assert_eq!(votes["summary"]["votes"][0]["note"], "vote 0");
}

#[tokio::test]
async fn scenario_b_reads() {
    let (_, app) = app(load_fixture("scenario_b.jsonl"));
    let (status, photo) = get(&app, "/photos/p2").await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<_> =
        photo["identifications"].as_array().unwrap().iter().map(|i| i["identity"]["full_name"].clone()).collect();
    assert_eq!(names, [json!("Bill Johnson"), json!("John Smith")]);
    assert_eq!(photo["identifications"][1]["overlays"], json!(["Community Dispute"]));
    let sections: Vec<_> = photo["identifications"][0]["provenance"]["sections"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["category"].clone())
        .collect();
    assert_eq!(sections, [json!("Primary Source"), json!("Secondary Source (Scholarly)"), json!("Secondary Source (Non-Scholarly)")]);

    let (_, list) = get(&app, "/photos?badge=Verified%20ID").await;
    let ids: Vec<_> = list.as_array().unwrap().iter().map(|p| p["photo_id"].clone()).collect();
    assert_eq!(ids, [json!("p2"), json!("p3"), json!("p4")]);
    let (_, list) = get(&app, "/photos?name=smith").await;
    let ids: Vec<_> = list.as_array().unwrap().iter().map(|p| p["photo_id"].clone()).collect();
    assert_eq!(ids, [json!("p1"), json!("p2")]);
    let (_, list) = get(&app, "/photos?badge=Needs%20Verification&name=John").await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["winner"]["full_name"], "John Smith");
    let (_, all) = get(&app, "/photos").await;
    assert_eq!(all.as_array().unwrap().len(), 4);

    assert_eq!(get(&app, "/photos?badge=Gold").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/photos?colour=red").await.0, StatusCode::BAD_REQUEST);

    let (_, feed) = get(&app, "/photos/p2/feed").await;
    assert!(feed.as_array().unwrap().iter().any(|e| e["line"].as_str().unwrap().contains("Bill Johnson")));
    let (_, inbox) = get(&app, "/users/bob/notifications").await;
    assert!(inbox.as_array().unwrap().iter().all(|n| n["read"] == false));
    assert!(!inbox.as_array().unwrap().is_empty());
    let (_, link) = get(&app, "/links/p2~p3").await;
    assert_eq!(link["consensus"]["agreed_match"], true);
    assert_eq!(link["photo_a"], "p2");
    let (_, prov) = get(&app, "/identifications/p2:bill-johnson/provenance").await;
    assert_eq!(prov["sections"][1]["entries"][0]["matched_by"], "alice");
}

#[tokio::test]
async fn new_links_ask_the_face_rec_provider() {
    let provider = FixtureProvider::load(&fixture("face_rec.toml")).unwrap();
    let mut ledger = load_prefix("scenario_b.jsonl", events_through("scenario_b.jsonl", "\"identification_id\":\"p4:bill-johnson\",\"photo_id\""));
    ledger.submit("jack".into(), String::new(), idbadge_core::EventKind::PhotoAdded {
        photo_id: "p5".into(),
        photo_source: "Jack's collection".into(),
        image_ref: String::new(),
        tags: Default::default(),
    })
    .unwrap();
    let face_rec_events = |l: &Ledger| l.events().iter().filter(|e| e.actor.as_str() == "face-rec").count();
    let seeded = face_rec_events(&ledger);
    let state = AppState::new(ledger, None, Box::new(provider));
    let app = router(state.clone());
    let (status, resp) = post(&app, "/links", "kim", json!({ "query": "p5", "target": "p3", "verdict": "Facial Match" })).await;
    assert_eq!(status, StatusCode::CREATED, "{resp}");
    let snapshot = state.snapshot();
    let link = snapshot.graph().link(&"p3~p5".into()).unwrap();
    assert_eq!(link.face_rec_support, FaceRecSupport::Supported);
    assert_eq!(face_rec_events(&snapshot), seeded + 1);
    // Reusing the pair does not ask again.
    post(&app, "/links", "leo", json!({ "query": "p3", "target": "p5", "verdict": "Facial Match" })).await;
    assert_eq!(face_rec_events(&state.snapshot()), seeded + 1);
    let (_, resp) = post(&app, "/links", "kim", json!({ "query": "p5", "target": "p1", "verdict": "Facial Match" })).await;
    assert_eq!(resp["link_id"], "p1~p5");
    let (_, resp) = post(&app, "/links/p1~p5/face-rec", "kim", json!({ "value": "NotSupported" })).await;
    assert_eq!(resp["link_id"], "p1~p5");
    let (_, link) = get(&app, "/links/p1~p5").await;
    assert_eq!(link["face_rec_support"], "NotSupported");
}

#[tokio::test]
async fn writes_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let (log, ledger) = EventLog::open(&path, EngineConfig::default()).unwrap();
    let state = AppState::new(ledger, Some(log), Box::new(StubProvider));
    let app = router(state.clone());
    post(&app, "/photos", "ann", tagged_photo("p1")).await;
    post(
        &app,
        "/photos/p1/identifications",
        "ann",
        json!({
            "identity": { "identity_id": "x", "full_name": "X" },
            "source": { "source_type": "Period Inscription on Union Case", "details": "" }
        }),
    )
    .await;
    drop(app);
    let before = state.snapshot();
    drop(state);
    let (_, again) = EventLog::open(&path, EngineConfig::default()).unwrap();
    assert_eq!(again.events(), before.events());
    assert_eq!(again.badges(), before.badges());
}
