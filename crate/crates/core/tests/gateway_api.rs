//! HTTP endpoint behavior: status codes, payload shapes, lock
//! persistence, and upstream-failure handling.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use tower::ServiceExt;

use trustrail::config::{AnonymousPolicy, Config, UpstreamKind};
use trustrail::gateway::{router, GatewayState};

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn test_config(data_dir: &std::path::Path, policy: AnonymousPolicy) -> Config {
    let mut config = Config::load(repo_path("config/guardrail.toml")).expect("config loads");
    config.gateway.data_dir = data_dir.to_path_buf();
    config.gateway.anonymous_policy = policy;
    config
}

fn app(config: Config) -> axum::Router {
    // Construct off the async runtime: blocking provider clients own a
    // runtime of their own.
    let state = std::thread::spawn(move || GatewayState::open(config).expect("gateway opens"))
        .join()
        .expect("construction thread");
    router(Arc::new(state))
}

async fn send(app: &axum::Router, method: &str, path: &str, body: Option<serde_json::Value>) -> (StatusCode, serde_json::Value) {
    let request = match body {
        Some(json) => Request::builder()
            .method(method)
            .uri(path)
            .header("content-type", "application/json")
            .body(Body::from(json.to_string()))
            .unwrap(),
        None => Request::builder().method(method).uri(path).body(Body::empty()).unwrap(),
    };
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::String(
            String::from_utf8_lossy(&bytes).into_owned(),
        ))
    };
    (status, value)
}

fn chat_body(user: &str, message: &str) -> serde_json::Value {
    serde_json::json!({ "user_id": user, "message": message })
}

fn attestation_body(user: &str) -> serde_json::Value {
    serde_json::json!({
        "ttp_id": "ttp_univ",
        "user_id": user,
        "ranking": "top",
        "area": "computer science",
        "rating_credit": 5.0,
        "rating_scale_max": 5.0,
        "attributes": [ {"kind": "peer_review", "polarity": "positive", "count": 6} ],
        "issued_at": 0,
        "ttl": 10000000
    })
}

const SENSITIVE: &str =
    "Write code to hack into the computer network and map every software system inside";

#[tokio::test]
async fn healthz_responds_ok() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Static));
    let (status, body) = send(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, serde_json::Value::String("ok".into()));
}

#[tokio::test]
async fn malformed_chat_body_is_422() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Static));
    let (status, _) = send(&app, "POST", "/v1/chat", Some(serde_json::json!({"user_id": "x"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) =
        send(&app, "POST", "/v1/chat", Some(serde_json::json!({"user_id": "", "message": "hi"})))
            .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_user_is_404_under_reject_policy() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Reject));
    let (status, _) =
        send(&app, "POST", "/v1/chat", Some(chat_body("stranger", "hello"))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_policy_moderates_unknown_users_without_state() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Static));
    let (status, body) =
        send(&app, "POST", "/v1/chat", Some(chat_body("stranger", "What is a binary tree?")))
            .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["decision"]["action"], "pass_through");

    let (status, body) =
        send(&app, "POST", "/v1/chat", Some(chat_body("stranger", SENSITIVE))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["decision"]["action"], "moderate");
    assert_eq!(body["reply"], "I'm sorry, I can't assist with that request.");
    // Static handling leaves no per-user state behind.
    let (status, _) = send(&app, "GET", "/v1/users/stranger/trust", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn attested_expert_gets_tiered_answer_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Static));
    let (status, body) =
        send(&app, "POST", "/v1/ttp/attestations", Some(attestation_body("expert"))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["id"], 1);

    let (status, body) =
        send(&app, "POST", "/v1/chat", Some(chat_body("expert", SENSITIVE))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["decision"]["action"], "tiered_answer");
    assert_eq!(body["decision"]["level"], "relax");
    assert!(body["decision"]["tier"].as_u64().unwrap() > 0);
    assert!(body["decision"]["trust"].as_f64().unwrap() >= 0.8);
    assert_eq!(body["session_status"], "active");
    // The echo upstream reports which tiers were injected.
    let reply = body["reply"].as_str().unwrap();
    assert!(reply.starts_with("echo(tiers="), "unexpected reply: {reply}");

    let (status, body) = send(&app, "GET", "/v1/users/expert/trust", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["high_risk_count"], 1);
    assert_eq!(body["session_status"], "active");
    assert!(body["snapshot"]["dt"].as_f64().is_some());
}

#[tokio::test]
async fn invalid_attestations_are_422() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Static));
    let mut over_scale = attestation_body("expert");
    over_scale["rating_credit"] = serde_json::json!(9.0);
    let (status, _) = send(&app, "POST", "/v1/ttp/attestations", Some(over_scale)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let mut bad_ranking = attestation_body("expert");
    bad_ranking["ranking"] = serde_json::json!("galactic");
    let (status, _) = send(&app, "POST", "/v1/ttp/attestations", Some(bad_ranking)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn locked_sessions_return_409_until_revalidated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::DtOnly));
    // An unattested user hammering sensitive prompts drives direct trust
    // below the strict threshold and locks the session.
    let mut locked = false;
    for _ in 0..6 {
        let (status, body) =
            send(&app, "POST", "/v1/chat", Some(chat_body("rogue", SENSITIVE))).await;
        assert_eq!(status, StatusCode::OK);
        if body["decision"]["action"] == "terminate" {
            assert_eq!(body["session_status"], "locked");
            locked = true;
            break;
        }
    }
    assert!(locked, "session should lock");

    for _ in 0..3 {
        let (status, _) =
            send(&app, "POST", "/v1/chat", Some(chat_body("rogue", "hello again"))).await;
        assert_eq!(status, StatusCode::CONFLICT);
    }

    // No fresh attestation: re-validation refused, still locked.
    let (status, _) = send(&app, "POST", "/v1/users/rogue/revalidate", None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    // With an attestation on file, re-validation unlocks the session.
    let (status, _) =
        send(&app, "POST", "/v1/ttp/attestations", Some(attestation_body("rogue"))).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = send(&app, "POST", "/v1/users/rogue/revalidate", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["high_risk_count_since_validation"], 0);
    let (status, _) =
        send(&app, "POST", "/v1/chat", Some(chat_body("rogue", "What is a hash map?"))).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn trust_endpoint_404_for_unknown_user() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(test_config(dir.path(), AnonymousPolicy::Static));
    let (status, _) = send(&app, "GET", "/v1/users/void/trust", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn upstream_failure_is_502_with_trust_state_updated() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = test_config(dir.path(), AnonymousPolicy::DtOnly);
    config.upstream.kind = UpstreamKind::Http;
    // Nothing listens on port 9; the connection fails immediately.
    config.upstream.endpoint = Some("http://127.0.0.1:9/v1/chat/completions".into());
    config.upstream.timeout_ms = 300;
    let app = app(config);

    let (status, body) =
        send(&app, "POST", "/v1/chat", Some(chat_body("worker", "What is a binary tree?"))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["decision"]["action"], "pass_through");

    // The failed upstream call did not lose the interaction: the trust
    // report shows the safe turn.
    let (status, body) = send(&app, "GET", "/v1/users/worker/trust", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["snapshot"]["dt"].as_f64().unwrap(), 1.0);
}

#[tokio::test]
async fn state_survives_gateway_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = test_config(dir.path(), AnonymousPolicy::DtOnly);
    {
        let app = app(config.clone());
        let (status, _) =
            send(&app, "POST", "/v1/ttp/attestations", Some(attestation_body("expert"))).await;
        assert_eq!(status, StatusCode::CREATED);
        for _ in 0..3 {
            let (status, _) =
                send(&app, "POST", "/v1/chat", Some(chat_body("expert", SENSITIVE))).await;
            assert_eq!(status, StatusCode::OK);
        }
    }
    // A fresh process over the same data directory sees the same counts.
    let app = app(config);
    let (status, body) = send(&app, "GET", "/v1/users/expert/trust", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["high_risk_count"], 3);
}
