use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontocompo_core::model::{parse_application, Direction};
use ontocompo_core::selection::{DirectionSet, ExtensionScope, HelpMode, Selection, Suggestion};
use ontocompo_core::workspace::{ExtractTarget, PlacementView, WorkspaceError};
use ontocompo_core::Session;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;

use crate::error::ApiError;
use crate::storage::Storage;

type Shared = Arc<RwLock<Session>>;

/// Server state: one session per workspace id, each behind its own lock so
/// distinct workspaces never contend.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Shared>>>,
    storage: Option<Storage>,
}

impl AppState {
    /// In-memory only.
    pub fn new() -> Self {
        AppState::default()
    }

    /// Backed by `storage`, restoring whatever it already holds.
    pub async fn persistent(storage: Storage) -> std::io::Result<Self> {
        tokio::fs::create_dir_all(storage.root()).await?;
        let restored = storage.restore().await?;
        tracing::info!("restored {} workspace(s)", restored.len());
        let sessions = restored.into_iter().map(|(id, s)| (id, Arc::new(RwLock::new(s)))).collect();
        Ok(AppState { sessions: Arc::new(RwLock::new(sessions)), storage: Some(storage) })
    }

    async fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::unknown_workspace(id))
    }

    async fn persist_log(&self, id: &str, session: &Session) -> Result<(), ApiError> {
        match &self.storage {
            Some(s) => s.save_log(id, &session.workspace).await.map_err(ApiError::storage),
            None => Ok(()),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/workspaces", post(create_workspace))
        .route("/workspaces/{id}/apps", post(load_app))
        .route("/workspaces/{id}/store", get(get_store))
        .route("/workspaces/{id}/selection", get(get_selection))
        .route("/workspaces/{id}/selection/select", post(select))
        .route("/workspaces/{id}/selection/deselect", post(deselect))
        .route("/workspaces/{id}/selection/extend/layout", post(extend_layout))
        .route("/workspaces/{id}/selection/extend/{kind}", post(extend_other))
        .route("/workspaces/{id}/suggestions", get(suggestions))
        .route("/workspaces/{id}/extract", post(extract))
        .route("/workspaces/{id}/screens/{sid}/place", post(place))
        .route("/workspaces/{id}/screens/{sid}/placement", get(placement))
        .route("/workspaces/{id}/export", get(export))
        .route("/workspaces/{id}/session", get(session_log))
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    let body = if body.trim().is_empty() { "{}" } else { body };
    serde_json::from_str(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectionBody {
    pub items: Vec<String>,
}

impl From<&Selection> for SelectionBody {
    fn from(sel: &Selection) -> Self {
        SelectionBody { items: sel.items().to_vec() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentArgs {
    component: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutArgs {
    directions: Vec<String>,
    #[serde(default)]
    scope: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmptyArgs {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractArgs {
    target: String,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractResult {
    pub screen: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceArgs {
    subject: String,
    relation: String,
    anchor: String,
}

#[derive(Debug, Deserialize)]
struct SuggestQuery {
    mode: Option<String>,
}

fn bad_value(e: impl Into<WorkspaceError>) -> ApiError {
    ApiError::from(e.into())
}

async fn create_workspace(State(state): State<AppState>) -> Result<(StatusCode, Json<Created>), ApiError> {
    let id = uuid::Uuid::new_v4().simple().to_string();
    if let Some(s) = &state.storage {
        s.create(&id).await.map_err(ApiError::storage)?;
    }
    state.sessions.write().await.insert(id.clone(), Arc::new(RwLock::new(Session::default())));
    tracing::debug!("created workspace {id}");
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn load_app(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let shared = state.session(&id).await?;
    let mut session = shared.write().await;
    let app = parse_application(&body).map_err(WorkspaceError::from)?;
    let app_id = app.id.clone();
    session.workspace.load(app.clone())?;
    session.make_available(app);
    if let Some(s) = &state.storage {
        s.save_app(&id, &app_id, &body).await.map_err(ApiError::storage)?;
    }
    state.persist_log(&id, &session).await?;
    Ok((StatusCode::CREATED, Json(Created { id: app_id })))
}

async fn get_store(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let shared = state.session(&id).await?;
    let dump = shared.read().await.workspace.store().dump();
    Ok(([(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")], dump).into_response())
}

async fn get_selection(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SelectionBody>, ApiError> {
    let shared = state.session(&id).await?;
    let session = shared.read().await;
    Ok(Json(session.workspace.selection().into()))
}

/// Runs a selection-changing operation under the workspace's write lock and
/// persists the log on success.
async fn mutate_selection(
    state: &AppState,
    id: &str,
    op: impl FnOnce(&mut Session) -> Result<(), WorkspaceError>,
) -> Result<Json<SelectionBody>, ApiError> {
    let shared = state.session(id).await?;
    let mut session = shared.write().await;
    op(&mut session)?;
    state.persist_log(id, &session).await?;
    Ok(Json(session.workspace.selection().into()))
}

async fn select(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<SelectionBody>, ApiError> {
    let args: ComponentArgs = parse_body(&body)?;
    mutate_selection(&state, &id, |s| s.workspace.select(&args.component).map(drop)).await
}

async fn deselect(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<SelectionBody>, ApiError> {
    let args: ComponentArgs = parse_body(&body)?;
    mutate_selection(&state, &id, |s| s.workspace.deselect(&args.component).map(drop)).await
}

async fn extend_layout(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<SelectionBody>, ApiError> {
    let args: LayoutArgs = parse_body(&body)?;
    let mut dirs = DirectionSet::new();
    for d in &args.directions {
        let d: Direction = d.parse().map_err(|_| {
            ApiError::new(StatusCode::BAD_REQUEST, "bad_value", format!("unknown direction `{d}`"), Some(d.clone()))
        })?;
        dirs.toggle(d, true);
    }
    let scope = match &args.scope {
        Some(s) => s.parse::<ExtensionScope>().map_err(bad_value)?,
        None => ExtensionScope::Last,
    };
    mutate_selection(&state, &id, |s| s.workspace.extend_layout(&dirs, scope).map(drop)).await
}

async fn extend_other(
    State(state): State<AppState>,
    Path((id, kind)): Path<(String, String)>,
    body: String,
) -> Result<Json<SelectionBody>, ApiError> {
    let _: EmptyArgs = parse_body(&body)?;
    match kind.as_str() {
        "parent" => mutate_selection(&state, &id, |s| s.workspace.extend_parent().map(drop)).await,
        "task" => mutate_selection(&state, &id, |s| s.workspace.extend_task().map(drop)).await,
        "functionality" => mutate_selection(&state, &id, |s| s.workspace.extend_functionality().map(drop)).await,
        other => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_extension",
            format!("no extension `{other}`"),
            Some(other.to_string()),
        )),
    }
}

async fn suggestions(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SuggestQuery>,
) -> Result<Json<Vec<Suggestion>>, ApiError> {
    let mode = match q.mode.as_deref() {
        Some(m) => m.parse::<HelpMode>().map_err(bad_value)?,
        None => HelpMode::Complete,
    };
    let shared = state.session(&id).await?;
    let session = shared.read().await;
    Ok(Json(session.workspace.suggest(mode)?))
}

async fn extract(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<ExtractResult>, ApiError> {
    let args: ExtractArgs = parse_body(&body)?;
    let target = match (args.target.as_str(), args.name) {
        ("new", Some(name)) => ExtractTarget::NewScreen { name },
        ("new", None) => return Err(ApiError::bad_request("a new screen needs a `name`")),
        (screen, _) => ExtractTarget::Existing { screen: screen.to_string() },
    };
    let shared = state.session(&id).await?;
    let mut session = shared.write().await;
    let screen = session.workspace.extract(&target)?;
    state.persist_log(&id, &session).await?;
    Ok(Json(ExtractResult { screen }))
}

async fn place(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    body: String,
) -> Result<Json<PlacementView>, ApiError> {
    let args: PlaceArgs = parse_body(&body)?;
    let relation: Direction = args.relation.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_value",
            format!("unknown relation `{}`", args.relation),
            Some(args.relation.clone()),
        )
    })?;
    let shared = state.session(&id).await?;
    let mut session = shared.write().await;
    let view = session.workspace.place(&sid, &args.subject, relation, &args.anchor)?;
    state.persist_log(&id, &session).await?;
    Ok(Json(view))
}

async fn placement(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
) -> Result<Json<PlacementView>, ApiError> {
    let shared = state.session(&id).await?;
    let session = shared.read().await;
    Ok(Json(session.workspace.placement(&sid)?))
}

async fn export(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let shared = state.session(&id).await?;
    let doc = shared.read().await.workspace.export()?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc).into_response())
}

async fn session_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let shared = state.session(&id).await?;
    let log = ontocompo_core::session::save_session(&shared.read().await.workspace)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], log).into_response())
}
