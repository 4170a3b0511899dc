//! On-disk layout: `<data>/<workspace>/apps/<app>.json` holds every loaded
//! source as received, `<data>/<workspace>/session.log` the command log.
//! State is rebuilt on start by replaying the log.

use std::io;
use std::path::{Path, PathBuf};

use ontocompo_core::model::{parse_application, Application};
use ontocompo_core::session::{replay_session, save_session};
use ontocompo_core::{Session, Workspace};

#[derive(Debug, Clone)]
pub struct Storage {
    root: PathBuf,
}

const LOG: &str = "session.log";
const APPS: &str = "apps";

impl Storage {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Storage { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, workspace: &str) -> PathBuf {
        self.root.join(workspace)
    }

    pub async fn create(&self, workspace: &str) -> io::Result<()> {
        tokio::fs::create_dir_all(self.dir(workspace).join(APPS)).await
    }

    pub async fn save_app(&self, workspace: &str, app_id: &str, text: &str) -> io::Result<()> {
        let path = self.dir(workspace).join(APPS).join(format!("{app_id}.json"));
        tokio::fs::write(path, text).await
    }

    pub async fn save_log(&self, workspace: &str, ws: &Workspace) -> io::Result<()> {
        let log = save_session(ws).unwrap_or_default();
        let path = self.dir(workspace).join(LOG);
        let tmp = path.with_extension("log.tmp");
        tokio::fs::write(&tmp, log).await?;
        tokio::fs::rename(tmp, path).await
    }

    /// Every stored workspace, replayed. Workspaces that fail to replay are
    /// skipped with a warning.
    pub async fn restore(&self) -> io::Result<Vec<(String, Session)>> {
        let mut out = Vec::new();
        let mut entries = match tokio::fs::read_dir(&self.root).await {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e),
        };
        while let Some(entry) = entries.next_entry().await? {
            if !entry.file_type().await?.is_dir() {
                continue;
            }
            let id = entry.file_name().to_string_lossy().into_owned();
            match self.restore_one(&entry.path()).await {
                Ok(session) => out.push((id, session)),
                Err(e) => tracing::warn!("skipping workspace {id}: {e}"),
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    async fn restore_one(&self, dir: &Path) -> Result<Session, String> {
        let mut apps: Vec<Application> = Vec::new();
        if let Ok(mut entries) = tokio::fs::read_dir(dir.join(APPS)).await {
            while let Some(entry) = entries.next_entry().await.map_err(|e| e.to_string())? {
                let path = entry.path();
                if path.extension().is_some_and(|x| x == "json") {
                    let text = tokio::fs::read_to_string(&path).await.map_err(|e| e.to_string())?;
                    apps.push(parse_application(&text).map_err(|e| format!("{}: {e}", path.display()))?);
                }
            }
        }
        let log = match tokio::fs::read_to_string(dir.join(LOG)).await {
            Ok(log) => log,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.to_string()),
        };
        replay_session(&log, apps).map_err(|e| e.to_string())
    }
}
