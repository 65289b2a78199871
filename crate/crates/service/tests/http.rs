use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use critique_service::{router, ServiceConfig, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(Arc::new(Store::in_memory(ServiceConfig::default())))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_raw(app, method, uri, "application/json", body.map(|b| b.to_string()).unwrap_or_default()).await
}

async fn call_raw(app: &Router, method: Method, uri: &str, content_type: &str, body: String) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", content_type)
        .body(Body::from(body))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn ids(options: &Value) -> Vec<&str> {
    options.as_array().unwrap().iter().map(|o| o["id"].as_str().unwrap()).collect()
}

#[tokio::test]
async fn full_session_over_http() {
    let app = app();
    let (status, session) = call(&app, Method::POST, "/sessions", Some(json!({"catalog": "housing", "mode": "C+S"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = session["id"].as_str().unwrap().to_string();
    assert_eq!(id, "s000001");

    let (status, err) = call(&app, Method::GET, &format!("/sessions/{id}/display"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "empty_model");

    let edits = json!({"edits": [{"op": "add", "preference": {"variant": "directional", "attr": "rent", "direction": "smaller_better", "weight": 1}}]});
    let (status, view) = call(&app, Method::POST, &format!("/sessions/{id}/preferences"), Some(edits)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["preferences"].as_array().unwrap().len(), 1);
    assert_eq!(view["cycle"], 0);

    let (status, display) = call(&app, Method::GET, &format!("/sessions/{id}/display"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(display["cycle"], 1);
    assert_eq!(ids(&display["candidates"]), ["o1", "o2", "o3"]);
    let suggestions = ids(&display["suggestions"]);
    assert_eq!(suggestions.len(), 3);
    assert!(suggestions.iter().all(|s| !["o1", "o2", "o3"].contains(s)));
    assert!(display["candidates"][0]["values"]["rent"].is_number());

    let edits = json!({"edits": [{"op": "add", "attr": "furnished", "operator": "equal", "value": "no", "weight": 3}]});
    call(&app, Method::POST, &format!("/sessions/{id}/preferences"), Some(edits)).await;
    let (_, display) = call(&app, Method::GET, &format!("/sessions/{id}/display"), None).await;
    let pick = ids(&display["candidates"])[0].to_string();

    let (status, summary) = call(&app, Method::POST, &format!("/sessions/{id}/choice"), Some(json!({"option_id": pick}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["cycles"], 2);
    assert_eq!(summary["initial_preferences"], 1);
    assert_eq!(summary["final_preferences"], 2);
    assert_eq!(summary["increment"], 1);

    let (status, err) = call(&app, Method::GET, &format!("/sessions/{id}/display"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "session_closed");

    let (_, events) = call(&app, Method::GET, &format!("/sessions/{id}/events"), None).await;
    let kinds: Vec<&str> = events.as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["prefs_added", "display_shown", "prefs_added", "display_shown", "final_choice"]);

    let (_, stats) = call(&app, Method::GET, "/stats?mode=C%2BS", None).await;
    assert_eq!(stats["rows"][0]["sessions"], 1);
    assert_eq!(stats["rows"][0]["increment"], 1.0);
    let (_, stats) = call(&app, Method::GET, "/stats?mode=C", None).await;
    assert_eq!(stats["rows"], json!([]));
}

#[tokio::test]
async fn validation_errors_name_the_field() {
    let app = app();
    let (_, session) = call(&app, Method::POST, "/sessions", Some(json!({"catalog": "housing", "mode": "C"}))).await;
    let id = session["id"].as_str().unwrap();
    let uri = format!("/sessions/{id}/preferences");

    let bad_weight = json!({"edits": [{"op": "add", "attr": "rent", "operator": "less", "value": 600, "weight": 7}]});
    let (status, err) = call(&app, Method::POST, &uri, Some(bad_weight)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "validation");
    assert_eq!(err["field"], "rent");

    let unknown = json!({"edits": [{"op": "add", "attr": "pool", "operator": "equal", "value": "yes", "weight": 1}]});
    let (_, err) = call(&app, Method::POST, &uri, Some(unknown)).await;
    assert_eq!(err["field"], "pool");

    let unordered = json!({"edits": [{"op": "add", "attr": "type", "operator": "greater", "value": "room", "weight": 1}]});
    let (_, err) = call(&app, Method::POST, &uri, Some(unordered)).await;
    assert_eq!(err["field"], "operator");

    let (status, err) = call_raw(&app, Method::POST, &uri, "application/json", "{not json".into()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "validation");

    let (status, _) = call(&app, Method::GET, "/sessions/s999999/display", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/sessions", Some(json!({"catalog": "castles", "mode": "C"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, err) = call(&app, Method::GET, "/stats?mode=X", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "mode");

    let (_, view) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(view["preferences"], json!([]));
}

#[tokio::test]
async fn catalogs_can_be_listed_and_uploaded() {
    let app = app();
    let (_, list) = call(&app, Method::GET, "/catalogs", None).await;
    let names: Vec<&str> = list.as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(names, ["housing", "listings"]);
    assert_eq!(list[1]["options"], 160);

    let csv = "id,size:numeric:10:90,view:qualitative:sea|city\na,20,sea\nb,60,city\nc,45,city\n";
    let (status, info) = call_raw(&app, Method::POST, "/catalogs?id=flats", "text/csv", csv.into()).await;
    assert_eq!(status, StatusCode::CREATED, "{info}");
    assert_eq!(info["options"], 3);
    let (status, _) = call_raw(&app, Method::POST, "/catalogs?id=flats", "text/csv", csv.into()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call_raw(&app, Method::POST, "/catalogs?id=..%2Fetc", "text/csv", csv.into()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, housing) = call(&app, Method::GET, "/catalogs/housing", None).await;
    let (status, _) = call(&app, Method::POST, "/catalogs?id=copy", Some(housing)).await;
    assert_eq!(status, StatusCode::CREATED);

    let (status, session) = call(&app, Method::POST, "/sessions", Some(json!({"catalog": "flats", "mode": "C"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = session["id"].as_str().unwrap();
    let edits = json!({"edits": [{"op": "add", "attr": "size", "operator": "greater", "value": 40, "weight": 2}]});
    call(&app, Method::POST, &format!("/sessions/{id}/preferences"), Some(edits)).await;
    let (_, display) = call(&app, Method::GET, &format!("/sessions/{id}/display"), None).await;
    assert_eq!(ids(&display["candidates"]).len(), 3);
}
