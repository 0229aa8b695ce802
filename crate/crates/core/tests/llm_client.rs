use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use umlskg::rag::mock::{MockRules, MockServer};
use umlskg::rag::{ask_llm, LlmClient, LlmEndpointConfig, LlmError, PromptPackage};

fn prompt() -> PromptPackage {
    PromptPackage {
        system_text: "Answer yes or no.".into(),
        user_text: "Question: Is water wet?".into(),
        context_word_count: 0,
        retained: vec![],
        template_hash: String::new(),
    }
}

fn completion(text: &str) -> Json<Value> {
    Json(json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}))
}

async fn serve(app: Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

fn endpoint(addr: SocketAddr) -> LlmEndpointConfig {
    LlmEndpointConfig {
        base_url: format!("http://{addr}/v1"),
        backoff_ms: 5,
        timeout_secs: 5.0,
        ..Default::default()
    }
}

#[tokio::test]
async fn retries_server_errors_then_succeeds() {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || {
            let h = h.clone();
            async move {
                if h.fetch_add(1, Ordering::SeqCst) < 2 {
                    StatusCode::INTERNAL_SERVER_ERROR.into_response()
                } else {
                    completion("Yes.").into_response()
                }
            }
        }),
    );
    let addr = serve(app).await;
    let cfg = LlmEndpointConfig { max_retries: 2, ..endpoint(addr) };
    assert_eq!(ask_llm(&prompt(), &cfg).await.unwrap(), "Yes.");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn gives_up_after_max_retries() {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || {
            h.fetch_add(1, Ordering::SeqCst);
            async { StatusCode::SERVICE_UNAVAILABLE }
        }),
    );
    let addr = serve(app).await;
    let cfg = LlmEndpointConfig { max_retries: 2, ..endpoint(addr) };
    match ask_llm(&prompt(), &cfg).await {
        Err(LlmError::HttpStatus { code: 503, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || {
            h.fetch_add(1, Ordering::SeqCst);
            async { (StatusCode::BAD_REQUEST, "bad model") }
        }),
    );
    let addr = serve(app).await;
    let cfg = LlmEndpointConfig { max_retries: 3, ..endpoint(addr) };
    assert!(matches!(ask_llm(&prompt(), &cfg).await, Err(LlmError::HttpStatus { code: 400, .. })));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn slow_endpoint_times_out_after_retries() {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || {
            h.fetch_add(1, Ordering::SeqCst);
            async {
                tokio::time::sleep(Duration::from_secs(3)).await;
                completion("late")
            }
        }),
    );
    let addr = serve(app).await;
    let cfg = LlmEndpointConfig {
        max_retries: 1,
        timeout_secs: 0.2,
        ..endpoint(addr)
    };
    match ask_llm(&prompt(), &cfg).await {
        Err(LlmError::Timeout { attempts: 2 }) => {}
        other => panic!("{other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn malformed_body_is_reported() {
    let app = Router::new().route("/v1/chat/completions", post(|| async { Json(json!({"choices": []})) }));
    let addr = serve(app).await;
    assert!(matches!(
        ask_llm(&prompt(), &endpoint(addr)).await,
        Err(LlmError::MalformedResponse(_))
    ));
    let app = Router::new().route("/v1/chat/completions", post(|| async { "not json" }));
    let addr = serve(app).await;
    assert!(matches!(
        ask_llm(&prompt(), &endpoint(addr)).await,
        Err(LlmError::MalformedResponse(_))
    ));
}

#[tokio::test]
async fn unreachable_endpoint_is_connect_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let cfg = LlmEndpointConfig { max_retries: 1, ..endpoint(addr) };
    let err = ask_llm(&prompt(), &cfg).await.unwrap_err();
    assert!(matches!(err, LlmError::Connect(_)), "{err:?}");
    assert!(err.is_unavailable());
}

#[tokio::test]
async fn sends_bearer_token_and_wire_format() {
    std::env::set_var("UMLSKG_TEST_TOKEN", "sekret");
    let app = Router::new().route(
        "/v1/chat/completions",
        post(|headers: HeaderMap, Json(body): Json<Value>| async move {
            let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).unwrap_or("");
            if auth != "Bearer sekret" {
                return StatusCode::UNAUTHORIZED.into_response();
            }
            let user = body["messages"][1]["content"].as_str().unwrap_or("").to_string();
            let ok = body["model"] == "m" && body["messages"][0]["role"] == "system" && body["temperature"] == 0.0;
            completion(&format!("{ok} {user}")).into_response()
        }),
    );
    let addr = serve(app).await;
    let cfg = LlmEndpointConfig {
        api_key_ref: Some("UMLSKG_TEST_TOKEN".into()),
        model_name: "m".into(),
        ..endpoint(addr)
    };
    assert_eq!(ask_llm(&prompt(), &cfg).await.unwrap(), "true Question: Is water wet?");
}

#[tokio::test]
async fn in_flight_requests_respect_ceiling() {
    let current = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (c, p) = (current.clone(), peak.clone());
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || {
            let (c, p) = (c.clone(), p.clone());
            async move {
                let now = c.fetch_add(1, Ordering::SeqCst) + 1;
                p.fetch_max(now, Ordering::SeqCst);
                tokio::time::sleep(Duration::from_millis(50)).await;
                c.fetch_sub(1, Ordering::SeqCst);
                let r: Response = completion("ok").into_response();
                r
            }
        }),
    );
    let addr = serve(app).await;
    let client = LlmClient::new(LlmEndpointConfig { max_concurrent_requests: 2, ..endpoint(addr) }).unwrap();
    let p = prompt();
    let calls = (0..8).map(|_| client.complete(&p));
    let results = futures::future::join_all(calls).await;
    assert!(results.iter().all(|r| matches!(r.as_deref(), Ok("ok"))));
    assert_eq!(peak.load(Ordering::SeqCst), 2);
    assert_eq!(client.requests_sent(), 8);
}

#[tokio::test]
async fn mock_server_passthrough() {
    let mock = MockServer::spawn_local(MockRules::parse("question: water => Yes.\n* => No.").unwrap())
        .await
        .unwrap();
    let cfg = LlmEndpointConfig { base_url: mock.base_url(), ..Default::default() };
    assert_eq!(ask_llm(&prompt(), &cfg).await.unwrap(), "Yes.");
    assert_eq!(mock.request_count(), 1);
    mock.shutdown().await;
}
