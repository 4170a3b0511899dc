use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ontocompo::{router, AppState, ErrorBody, Storage};
use ontocompo_core::model::{parse_application, Direction};
use ontocompo_core::selection::{DirectionSet, ExtensionScope, HelpMode};
use ontocompo_core::workspace::ExtractTarget;
use ontocompo_core::{build_store, Workspace};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture_text(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    std::fs::read_to_string(path).unwrap()
}

struct Client {
    app: Router,
}

struct Reply {
    status: StatusCode,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }

    fn error(&self) -> ErrorBody {
        serde_json::from_str(&self.body).unwrap()
    }

    fn items(&self) -> Vec<String> {
        serde_json::from_value(self.json()["items"].clone()).unwrap()
    }
}

impl Client {
    fn new(state: AppState) -> Self {
        Client { app: router(state) }
    }

    async fn call(&self, method: &str, uri: &str, body: impl Into<String>) -> Reply {
        let req = Request::builder().method(method).uri(uri).body(Body::from(body.into())).unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        Reply { status, body: String::from_utf8(bytes.to_vec()).unwrap() }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.call("GET", uri, "").await
    }

    async fn post(&self, uri: &str, body: Value) -> Reply {
        self.call("POST", uri, body.to_string()).await
    }

    async fn workspace(&self) -> String {
        let r = self.call("POST", "/workspaces", "").await;
        assert_eq!(r.status, StatusCode::CREATED);
        r.json()["id"].as_str().unwrap().to_string()
    }

    async fn load(&self, ws: &str, fixture: &str) -> Reply {
        self.call("POST", &format!("/workspaces/{ws}/apps"), fixture_text(fixture)).await
    }
}

#[tokio::test]
async fn store_dump_matches_engine() {
    let c = Client::new(AppState::new());
    let ws = c.workspace().await;
    assert_eq!(c.load(&ws, "InsuranceC.json").await.status, StatusCode::CREATED);
    assert_eq!(c.load(&ws, "BusinessDir.json").await.status, StatusCode::CREATED);
    let r = c.get(&format!("/workspaces/{ws}/store")).await;
    assert_eq!(r.status, StatusCode::OK);
    let ins = parse_application(&fixture_text("InsuranceC.json")).unwrap();
    let bd = parse_application(&fixture_text("BusinessDir.json")).unwrap();
    let composed = Workspace::new().composed().clone();
    let expected = build_store(&[&ins, &bd, &composed]).unwrap().dump();
    assert!(!r.body.is_empty());
    assert_eq!(r.body, expected);
}

#[tokio::test]
async fn extending_an_empty_selection_conflicts() {
    let c = Client::new(AppState::new());
    let ws = c.workspace().await;
    c.load(&ws, "InsuranceC.json").await;
    for path in ["task", "parent", "functionality"] {
        let r = c.post(&format!("/workspaces/{ws}/selection/extend/{path}"), json!({})).await;
        assert_eq!(r.status, StatusCode::CONFLICT, "{path}");
        let e = r.error();
        assert_eq!(e.code, "empty_selection");
        assert_eq!(e.subject.as_deref(), Some("selection"));
    }
    let r = c.post(&format!("/workspaces/{ws}/selection/extend/layout"), json!({"directions": ["below"]})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn error_statuses() {
    let c = Client::new(AppState::new());
    let ws = c.workspace().await;
    c.load(&ws, "InsuranceC.json").await;

    let r = c.post(&format!("/workspaces/{ws}/selection/select"), json!({"component": "Nope"})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error().subject.as_deref(), Some("Nope"));

    let r = c.call("POST", &format!("/workspaces/{ws}/selection/select"), "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.error().code, "malformed_body");

    let r = c.post(&format!("/workspaces/{ws}/selection/select"), json!({"component": 3})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = c.get("/workspaces/missing/selection").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error().code, "unknown_workspace");

    let r = c.call("POST", &format!("/workspaces/{ws}/apps"), "{\"id\": 1}").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = c.load(&ws, "InsuranceC.json").await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.error().code, "duplicate_application");

    let r = c.get(&format!("/workspaces/{ws}/suggestions?mode=everything")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = c.get(&format!("/workspaces/{ws}/export")).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.error().code, "empty_composition");

    c.post(&format!("/workspaces/{ws}/selection/select"), json!({"component": "InsuranceCNameLbl"})).await;
    let r = c.post(&format!("/workspaces/{ws}/extract"), json!({"target": "screen9"})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = c.post(&format!("/workspaces/{ws}/extract"), json!({"target": "new"})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    // neither failure touched the selection
    let r = c.get(&format!("/workspaces/{ws}/selection")).await;
    assert_eq!(r.items(), ["InsuranceCNameLbl"]);
}

#[tokio::test]
async fn refused_placement_leaves_state_unchanged() {
    let c = Client::new(AppState::new());
    let ws = c.workspace().await;
    c.load(&ws, "BusinessDir.json").await;
    for id in ["BusinessDirTitleLbl", "BusinessDirSearchBtn", "BusinessDirResultsList"] {
        c.post(&format!("/workspaces/{ws}/selection/select"), json!({"component": id})).await;
    }
    let r = c.post(&format!("/workspaces/{ws}/extract"), json!({"target": "new", "name": "Search"})).await;
    assert_eq!(r.status, StatusCode::OK);
    let sid = r.json()["screen"].as_str().unwrap().to_string();
    let place = format!("/workspaces/{ws}/screens/{sid}/place");
    let (a, b, d) = ("BusinessDir.BusinessDirTitleLbl", "BusinessDir.BusinessDirSearchBtn", "BusinessDir.BusinessDirResultsList");

    let r = c.post(&place, json!({"subject": b, "relation": "onTheRightOf", "anchor": a})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let r = c.post(&place, json!({"subject": d, "relation": "onTheRightOf", "anchor": b})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let before = c.get(&format!("/workspaces/{ws}/export")).await.body;
    let log_before = c.get(&format!("/workspaces/{ws}/session")).await.body;

    let r = c.post(&place, json!({"subject": a, "relation": "onTheRightOf", "anchor": d})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.error().code, "inconsistent_constraints");
    assert_eq!(c.get(&format!("/workspaces/{ws}/export")).await.body, before);
    assert_eq!(c.get(&format!("/workspaces/{ws}/session")).await.body, log_before);

    let r = c.post(&place, json!({"subject": a, "relation": "sideways", "anchor": d})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

/// Drives the same interaction through the engine and through HTTP and
/// compares every result.
#[tokio::test]
async fn endpoints_are_thin_adapters() {
    let c = Client::new(AppState::new());
    let id = c.workspace().await;
    let mut ws = Workspace::new();
    for f in ["InsuranceC.json", "BusinessDir.json"] {
        c.load(&id, f).await;
        ws.load(parse_application(&fixture_text(f)).unwrap()).unwrap();
    }
    let url = |p: &str| format!("/workspaces/{id}/{p}");
    let items = |ws: &Workspace| ws.selection().items().to_vec();

    let r = c.post(&url("selection/select"), json!({"component": "InsuranceCNameLbl"})).await;
    ws.select("InsuranceCNameLbl").unwrap();
    assert_eq!(r.items(), items(&ws));

    let r = c.post(&url("selection/extend/layout"), json!({"directions": ["onTheRightOf", "below"], "scope": "all"})).await;
    let dirs = DirectionSet::new().with(Direction::Right).with(Direction::Below);
    ws.extend_layout(&dirs, ExtensionScope::All).unwrap();
    assert_eq!(r.items(), items(&ws));

    let r = c.post(&url("selection/extend/parent"), json!({})).await;
    ws.extend_parent().unwrap();
    assert_eq!(r.items(), items(&ws));

    let r = c.post(&url("selection/deselect"), json!({"component": "InsuranceCAccountInfoFC"})).await;
    ws.deselect("InsuranceCAccountInfoFC").unwrap();
    assert_eq!(r.items(), items(&ws));

    for mode in [HelpMode::Tasks, HelpMode::Functionalities, HelpMode::Layout, HelpMode::Complete] {
        let r = c.get(&url(&format!("suggestions?mode={mode}"))).await;
        assert_eq!(r.json(), serde_json::to_value(ws.suggest(mode).unwrap()).unwrap());
    }

    let r = c.post(&url("selection/extend/functionality"), json!({})).await;
    ws.extend_functionality().unwrap();
    assert_eq!(r.items(), items(&ws));

    let r = c.post(&url("selection/extend/task"), json!({})).await;
    ws.extend_task().unwrap();
    assert_eq!(r.items(), items(&ws));

    let r = c.post(&url("extract"), json!({"target": "new", "name": "Mix"})).await;
    let screen = ws.extract(&ExtractTarget::NewScreen { name: "Mix".into() }).unwrap();
    assert_eq!(r.json()["screen"], screen.as_str());

    c.post(&url("selection/select"), json!({"component": "BusinessDirSearchBtn"})).await;
    ws.select("BusinessDirSearchBtn").unwrap();
    let r = c.post(&url("extract"), json!({"target": screen})).await;
    ws.extract(&ExtractTarget::Existing { screen: screen.clone() }).unwrap();
    assert_eq!(r.json()["screen"], screen.as_str());

    let (s, a) = ("BusinessDir.BusinessDirSearchBtn", "InsuranceC.InsuranceCNameLbl");
    let r = c.post(&url(&format!("screens/{screen}/place")), json!({"subject": s, "relation": "aboveLeft", "anchor": a})).await;
    let view = ws.place(&screen, s, Direction::AboveLeft, a).unwrap();
    assert_eq!(r.json(), serde_json::to_value(&view).unwrap());
    let r = c.get(&url(&format!("screens/{screen}/placement"))).await;
    assert_eq!(r.json(), serde_json::to_value(ws.placement(&screen).unwrap()).unwrap());

    assert_eq!(c.get(&url("store")).await.body, ws.store().dump());
    assert_eq!(c.get(&url("export")).await.body, ws.export().unwrap());
    assert_eq!(
        c.get(&url("session")).await.body,
        ontocompo_core::session::save_session(&ws).unwrap()
    );
}

#[tokio::test]
async fn sessions_are_isolated() {
    let c = std::sync::Arc::new(Client::new(AppState::new()));
    let a = c.workspace().await;
    let b = c.workspace().await;
    c.load(&a, "InsuranceC.json").await;
    c.load(&b, "InsuranceC.json").await;
    const A_IDS: [&str; 3] = ["InsuranceCNameLbl", "InsuranceCNameTF", "InsuranceCBirthDLbl"];
    const B_IDS: [&str; 2] = ["InsuranceCContractsList", "InsuranceCNewContractBtn"];

    let run = |ws: String, ids: &'static [&'static str]| {
        let c = c.clone();
        tokio::spawn(async move {
            for _ in 0..20 {
                for id in ids {
                    let r = c.post(&format!("/workspaces/{ws}/selection/select"), json!({"component": id})).await;
                    assert_eq!(r.status, StatusCode::OK);
                }
                for id in ids {
                    c.post(&format!("/workspaces/{ws}/selection/deselect"), json!({"component": id})).await;
                }
            }
            for id in ids {
                c.post(&format!("/workspaces/{ws}/selection/select"), json!({"component": id})).await;
            }
        })
    };
    let (x, y) = tokio::join!(run(a.clone(), &A_IDS), run(b.clone(), &B_IDS));
    x.unwrap();
    y.unwrap();
    assert_eq!(c.get(&format!("/workspaces/{a}/selection")).await.items(), A_IDS);
    assert_eq!(c.get(&format!("/workspaces/{b}/selection")).await.items(), B_IDS);
}

#[tokio::test]
async fn workspaces_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (id, export, selection) = {
        let c = Client::new(AppState::persistent(Storage::new(dir.path())).await.unwrap());
        let id = c.workspace().await;
        c.load(&id, "InsuranceC.json").await;
        c.post(&format!("/workspaces/{id}/selection/select"), json!({"component": "InsuranceCBirthDFC"})).await;
        c.post(&format!("/workspaces/{id}/selection/extend/task"), json!({})).await;
        c.post(&format!("/workspaces/{id}/extract"), json!({"target": "new", "name": "AccountScreen"})).await;
        c.post(&format!("/workspaces/{id}/selection/select"), json!({"component": "InsuranceCNewContractBtn"})).await;
        let export = c.get(&format!("/workspaces/{id}/export")).await.body;
        let selection = c.get(&format!("/workspaces/{id}/selection")).await.items();
        (id, export, selection)
    };
    assert!(dir.path().join(&id).join("apps/InsuranceC.json").exists());
    assert!(dir.path().join(&id).join("session.log").exists());

    let c = Client::new(AppState::persistent(Storage::new(dir.path())).await.unwrap());
    assert_eq!(c.get(&format!("/workspaces/{id}/export")).await.body, export);
    assert_eq!(c.get(&format!("/workspaces/{id}/selection")).await.items(), selection);
    // and it keeps working
    let r = c.post(&format!("/workspaces/{id}/selection/extend/task"), json!({})).await;
    assert_eq!(r.status, StatusCode::OK);
}
