//! HTTP front end for the power, design and boundary calculators.
//!
//! Every endpoint is a pure function of its request; bodies are compact JSON
//! with 17-significant-digit floats (see [`wire`]).

pub mod api;
pub mod error;
pub mod openapi;
pub mod params;
pub mod wire;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::RawQuery;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use error::{ApiError, FieldError};
pub use wire::to_json_bytes;

use params::Fields;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8750";

fn json_response<T: Serialize>(value: &T) -> Response {
    (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], to_json_bytes(value)).into_response()
}

fn respond<T: Serialize>(result: Result<T, ApiError>) -> Response {
    match result {
        Ok(v) => json_response(&v),
        Err(e) => e.into_response(),
    }
}

fn query_fields(raw: Option<String>) -> Result<Fields, ApiError> {
    let pairs: Vec<(String, String)> = serde_urlencoded::from_str(raw.as_deref().unwrap_or(""))
        .map_err(|e| ApiError::field("query", format!("malformed query string: {e}")))?;
    Fields::from_query(pairs)
}

/// Reads a typed request with `read`, then rejects leftovers and bad types.
fn read_with<T>(mut fields: Fields, read: impl FnOnce(&mut Fields) -> Option<T>) -> Result<T, ApiError> {
    let value = read(&mut fields);
    fields.finish()?;
    value.ok_or_else(|| ApiError::Internal("request reader returned nothing without an error".into()))
}

async fn power(body: Bytes) -> Response {
    respond(Fields::from_json(&body).and_then(|f| read_with(f, api::PowerQuery::read)).and_then(|q| api::power(&q)))
}

async fn sample_size(body: Bytes) -> Response {
    respond(
        Fields::from_json(&body)
            .and_then(|f| read_with(f, api::SampleSizeRequest::read))
            .and_then(|q| api::sample_size(&q)),
    )
}

async fn design(body: Bytes) -> Response {
    respond(Fields::from_json(&body).and_then(|f| read_with(f, api::DesignRequest::read)).and_then(|q| api::design(&q)))
}

/// With `p` in the query string, records are also placed on the power
/// surface at their reported sample sizes.
async fn catalog(RawQuery(raw): RawQuery, body: Bytes) -> Response {
    let overlay = query_fields(raw).and_then(|f| {
        read_with(f, |f| {
            let p = f.integer("p");
            let alpha = f.number("alpha").unwrap_or(api::DEFAULT_ALPHA);
            let alleles = f.integer("per_subject_alleles").unwrap_or(u64::from(api::DEFAULT_ALLELES));
            Some((p, alpha, alleles))
        })
    });
    let result = overlay.and_then(|(p, alpha, alleles)| {
        let cat = api::catalog(&body)?;
        Ok(match p {
            None => to_json_bytes(&cat),
            Some(p) => {
                let alleles = u32::try_from(alleles).unwrap_or(0);
                to_json_bytes(&api::catalog_overlay(cat, p, alpha, alleles)?)
            }
        })
    });
    match result {
        Ok(bytes) => (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn orraf(RawQuery(raw): RawQuery) -> Response {
    let q = match query_fields(raw).and_then(|f| read_with(f, api::OrrafParams::read)) {
        Ok(q) => q,
        Err(e) => return e.into_response(),
    };
    // grid evaluation is CPU-bound; keep it off the async workers
    match tokio::task::spawn_blocking(move || api::orraf(&q)).await {
        Ok(result) => respond(result),
        Err(e) => ApiError::Internal(e.to_string()).into_response(),
    }
}

async fn boundaries(RawQuery(raw): RawQuery) -> Response {
    respond(
        query_fields(raw)
            .and_then(|f| read_with(f, api::read_beta_grid))
            .and_then(|grid| api::boundaries(&grid)),
    )
}

async fn spec() -> Response {
    json_response(&openapi::document())
}

/// The `/v1` API with permissive CORS, plus `/app` static files when a
/// directory is given.
pub fn router(app_dir: Option<PathBuf>) -> Router {
    let mut app = Router::new()
        .route("/v1/power", post(power))
        .route("/v1/sample-size", post(sample_size))
        .route("/v1/design", post(design))
        .route("/v1/catalog", post(catalog))
        .route("/v1/orraf", get(orraf))
        .route("/v1/boundaries", get(boundaries))
        .route("/v1/spec", get(spec));
    if let Some(dir) = app_dir {
        app = app.nest_service("/app", ServeDir::new(dir).append_index_html_on_directories(true));
    }
    app.layer(CorsLayer::permissive())
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

/// Serves until Ctrl-C (or SIGTERM on Unix).
pub async fn serve(listener: TcpListener, app_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(app_dir))
        .with_graceful_shutdown(shutdown_signal())
        .await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        if let Err(e) = tokio::signal::ctrl_c().await {
            log::warn!("cannot listen for Ctrl-C: {e}");
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
