use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use provcheck_core::engine::{
    canonical_json, AnalysisError, AnalysisInput, AnalysisResult, ChatMessage, Engine, FollowupError, Stage,
    StoreError,
};
use provcheck_core::ingest::{Article, MediaItem, MediaKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::cors::{AllowOrigin, CorsLayer};

#[derive(Serialize)]
struct AnalysisEnvelope<'a> {
    id: &'a str,
    result: &'a AnalysisResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub session_id: String,
    pub messages: Vec<ChatMessage>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    session_id: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    messages: Option<&'a [ChatMessage]>,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], body).into_response()
}

fn error(status: StatusCode, message: &str, stage: Option<Stage>) -> Response {
    let body = ErrorBody {
        error: message,
        stage,
        session_id: None,
        messages: None,
    };
    json_response(status, canonical_json(&body))
}

/// Serialises a stored analysis exactly as the analyze and get endpoints do.
pub fn analysis_document(result: &AnalysisResult) -> String {
    canonical_json(&AnalysisEnvelope {
        id: &result.id,
        result,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApiMedia {
    locator: String,
    #[serde(default)]
    kind: Option<MediaKind>,
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    sidecar: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApiArticle {
    title: String,
    body: String,
    #[serde(default)]
    media: Vec<ApiMedia>,
}

/// Parses an analyze request body into an engine input.
pub fn parse_analyze_request(body: &[u8]) -> Result<AnalysisInput, String> {
    let value: Value = serde_json::from_slice(body).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("request body must be a JSON object")?;
    if let Some(extra) = obj.keys().find(|k| *k != "url" && *k != "article") {
        return Err(format!("unexpected field `{extra}`"));
    }
    match (obj.get("url"), obj.get("article")) {
        (Some(_), Some(_)) => Err("provide exactly one of `url` or `article`, not both".into()),
        (None, None) => Err("provide exactly one of `url` or `article`".into()),
        (Some(url), None) => match url.as_str() {
            Some(u) if !u.trim().is_empty() => Ok(AnalysisInput::Url(u.trim().to_owned())),
            _ => Err("`url` must be a non-empty string".into()),
        },
        (None, Some(article)) => {
            let api: ApiArticle =
                serde_json::from_value(article.clone()).map_err(|e| format!("invalid `article`: {e}"))?;
            let mut out = Article::new(api.title, api.body);
            for (i, m) in api.media.into_iter().enumerate() {
                let kind = m
                    .kind
                    .or_else(|| MediaKind::from_locator(&m.locator))
                    .ok_or_else(|| format!("media {i}: `kind` is required when the locator has no known extension"))?;
                let mut item = MediaItem::new(m.locator, kind);
                if let Some(c) = m.caption {
                    item = item.with_caption(c);
                }
                item.sidecar = m.sidecar;
                out.media.push(item);
            }
            Ok(AnalysisInput::Article(out))
        }
    }
}

fn analysis_error_response(e: &AnalysisError) -> Response {
    let status = match e.stage() {
        Stage::Ingest => StatusCode::UNPROCESSABLE_ENTITY,
        Stage::Backend | Stage::Parse => StatusCode::BAD_GATEWAY,
    };
    error(status, &e.to_string(), Some(e.stage()))
}

async fn analyze(State(engine): State<Arc<Engine>>, body: Bytes) -> Response {
    let input = match parse_analyze_request(&body) {
        Ok(i) => i,
        Err(msg) => return error(StatusCode::BAD_REQUEST, &msg, None),
    };
    let worker = engine.clone();
    match tokio::task::spawn_blocking(move || worker.analyze(input)).await {
        Ok(Ok(result)) => json_response(StatusCode::OK, analysis_document(&result)),
        Ok(Err(e)) => analysis_error_response(&e),
        Err(join) => {
            tracing::error!(error = %join, "analysis task failed");
            error(StatusCode::INTERNAL_SERVER_ERROR, "internal error", None)
        }
    }
}

async fn get_analysis(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> Response {
    match engine.store().analysis(&id) {
        Some(result) => json_response(StatusCode::OK, analysis_document(&result)),
        None => error(StatusCode::NOT_FOUND, "unknown analysis", None),
    }
}

#[derive(Deserialize)]
struct ChatRequest {
    question: String,
}

async fn chat(State(engine): State<Arc<Engine>>, Path(id): Path<String>, body: Bytes) -> Response {
    let question = match serde_json::from_slice::<ChatRequest>(&body) {
        Ok(r) => r.question,
        Err(e) => return error(StatusCode::BAD_REQUEST, &format!("invalid chat request: {e}"), None),
    };
    if question.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "question is empty", None);
    }
    let session_id = match engine.store().canonical_session(&id) {
        Ok(s) => s,
        Err(StoreError::UnknownAnalysis(_)) => return error(StatusCode::NOT_FOUND, "unknown analysis", None),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string(), None),
    };
    let worker = engine.clone();
    let sid = session_id.clone();
    let outcome = tokio::task::spawn_blocking(move || worker.ask_followup(&sid, &question)).await;
    match outcome {
        Ok(Ok(_)) => {
            let session = engine.store().session(&session_id).expect("canonical session exists");
            let body = ChatResponse {
                session_id,
                messages: session.messages,
            };
            json_response(StatusCode::OK, canonical_json(&body))
        }
        Ok(Err(FollowupError::Backend { error: e, session })) => {
            let body = ErrorBody {
                error: &e.to_string(),
                stage: Some(Stage::Backend),
                session_id: Some(&session.id),
                messages: Some(&session.messages),
            };
            json_response(StatusCode::BAD_GATEWAY, canonical_json(&body))
        }
        Ok(Err(FollowupError::EmptyQuestion)) => error(StatusCode::BAD_REQUEST, "question is empty", None),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string(), None),
        Err(join) => {
            tracing::error!(error = %join, "chat task failed");
            error(StatusCode::INTERNAL_SERVER_ERROR, "internal error", None)
        }
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    backend: &'static str,
}

async fn health(State(engine): State<Arc<Engine>>) -> Response {
    let body = Health {
        status: "ok",
        backend: engine.backend().kind().as_str(),
    };
    json_response(StatusCode::OK, canonical_json(&body))
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(origin) = origin.to_str() else {
        return false;
    };
    let Ok(url) = url_host(origin) else {
        return false;
    };
    matches!(url.as_str(), "localhost" | "127.0.0.1" | "[::1]")
}

fn url_host(origin: &str) -> Result<String, ()> {
    let rest = origin
        .strip_prefix("http://")
        .or_else(|| origin.strip_prefix("https://"))
        .ok_or(())?;
    let host = if rest.starts_with('[') {
        rest.split_inclusive(']').next().unwrap_or(rest)
    } else {
        rest.split(':').next().unwrap_or(rest)
    };
    Ok(host.to_ascii_lowercase())
}

fn cors(origins: Option<&[String]>) -> CorsLayer {
    let allow = match origins {
        None => AllowOrigin::predicate(|origin, _| is_local_origin(origin)),
        Some(list) => AllowOrigin::list(list.iter().filter_map(|o| HeaderValue::from_str(o).ok())),
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(engine: Arc<Engine>, max_body_bytes: usize, cors_origins: Option<&[String]>) -> Router {
    Router::new()
        .route("/api/analyze", post(analyze))
        .route("/api/analyses/{id}", get(get_analysis))
        .route("/api/analyses/{id}/chat", post(chat))
        .route("/api/health", get(health))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .layer(cors(cors_origins))
        .with_state(engine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_exclusivity() {
        assert!(parse_analyze_request(b"{}").is_err());
        assert!(parse_analyze_request(br#"{"url":"http://x","article":{"title":"t","body":"b"}}"#).is_err());
        assert!(parse_analyze_request(b"[1]").is_err());
        assert!(matches!(
            parse_analyze_request(br#"{"url":"http://x/a"}"#),
            Ok(AnalysisInput::Url(u)) if u == "http://x/a"
        ));
        let Ok(AnalysisInput::Article(a)) = parse_analyze_request(
            br#"{"article":{"title":"t","body":"b","media":[{"locator":"/x/a.jpg","caption":" c "}]}}"#,
        ) else {
            panic!()
        };
        assert_eq!(a.media[0].kind, MediaKind::Image);
        assert_eq!(a.media[0].caption.as_deref(), Some("c"));
        assert!(parse_analyze_request(br#"{"article":{"title":"t","body":"b","media":[{"locator":"/x/a"}]}}"#).is_err());
    }

    #[test]
    fn local_origins() {
        for ok in ["http://localhost:5173", "http://127.0.0.1", "https://[::1]:8443"] {
            assert!(is_local_origin(&HeaderValue::from_static(ok)), "{ok}");
        }
        for bad in ["http://evil.test", "http://localhost.evil.test", "null"] {
            assert!(!is_local_origin(&HeaderValue::from_static(bad)), "{bad}");
        }
    }
}
