use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use critique_core::{Catalog, CatalogFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::session::{Edit, Event, Mode, StatsRow, Summary};
use crate::store::{CatalogInfo, DisplayView, SessionView, Store};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub catalog: String,
    pub mode: Mode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdatePreferences {
    pub edits: Vec<Edit>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub option_id: String,
}

#[derive(Debug, Deserialize)]
pub struct StatsQuery {
    pub mode: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct UploadQuery {
    pub id: String,
}

#[derive(Debug, Serialize)]
pub struct StatsBody {
    pub rows: Vec<StatsRow>,
}

/// Parse a JSON body, reporting failures in the service's error format.
fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body)
        .map_err(|e| ServiceError::validation(format!("malformed request body: {e}"), None))
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/catalogs", get(list_catalogs).post(upload_catalog))
        .route("/catalogs/{id}", get(get_catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/preferences", post(update_preferences))
        .route("/sessions/{id}/display", get(display))
        .route("/sessions/{id}/choice", post(choose))
        .route("/sessions/{id}/events", get(events))
        .route("/stats", get(stats))
        .with_state(store)
}

async fn list_catalogs(State(store): State<Arc<Store>>) -> Json<Vec<CatalogInfo>> {
    Json(store.list_catalogs())
}

async fn get_catalog(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>> {
    Ok(Json(store.catalog(&id)?.to_json()))
}

/// Accepts the JSON exchange format, or CSV when sent as `text/csv`.
async fn upload_catalog(
    State(store): State<Arc<Store>>,
    Query(query): Query<UploadQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<CatalogInfo>)> {
    let csv = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/csv"));
    let format = if csv {
        CatalogFormat::Csv
    } else {
        CatalogFormat::Json
    };
    let catalog = Catalog::load(body.as_ref(), format)?;
    Ok((StatusCode::CREATED, Json(store.add_catalog(&query.id, catalog)?)))
}

async fn create_session(
    State(store): State<Arc<Store>>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionView>)> {
    let request: CreateSession = parse(&body)?;
    let meta = store.create_session(&request.catalog, request.mode)?;
    Ok((StatusCode::CREATED, Json(store.session_view(&meta.id)?)))
}

async fn get_session(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>> {
    Ok(Json(store.session_view(&id)?))
}

async fn update_preferences(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>> {
    let request: UpdatePreferences = parse(&body)?;
    Ok(Json(store.update_preferences(&id, &request.edits)?))
}

async fn display(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> Result<Json<DisplayView>> {
    Ok(Json(store.display(&id)?))
}

async fn choose(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Summary>> {
    let request: Choice = parse(&body)?;
    Ok(Json(store.choose(&id, &request.option_id)?))
}

async fn events(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<Event>>> {
    Ok(Json(store.events(&id)?))
}

async fn stats(
    State(store): State<Arc<Store>>,
    Query(query): Query<StatsQuery>,
) -> Result<Json<StatsBody>> {
    let mode = query.mode.as_deref().map(str::parse).transpose()?;
    Ok(Json(StatsBody {
        rows: store.stats(mode),
    }))
}
