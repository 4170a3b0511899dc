//! Session commands and the line-oriented script grammar.
//!
//! One command per line: `verb key=value ...`. Values containing whitespace,
//! quotes, `#` or `=` are written in double quotes with backslash escapes.
//! `#` starts a comment; blank lines are ignored. Saved session logs use the
//! same grammar, so a log is also a runnable script.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Application, Direction};
use crate::selection::{DirectionSet, ExtensionScope, HelpMode, Suggestion};
use crate::workspace::{ExtractTarget, PlacementView, Workspace, WorkspaceError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Load { app: String },
    Select { component: String },
    Deselect { component: String },
    ExtendLayout { directions: Vec<Direction>, scope: ExtensionScope },
    ExtendParent,
    ExtendTask,
    ExtendFunctionality,
    Suggest { mode: HelpMode },
    Extract { target: ExtractTarget },
    Place { screen: String, subject: String, relation: Direction, anchor: String },
    Export,
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Load { .. } => "load",
            Command::Select { .. } => "select",
            Command::Deselect { .. } => "deselect",
            Command::ExtendLayout { .. } => "extendLayout",
            Command::ExtendParent => "extendParent",
            Command::ExtendTask => "extendTask",
            Command::ExtendFunctionality => "extendFunctionality",
            Command::Suggest { .. } => "suggest",
            Command::Extract { .. } => "extract",
            Command::Place { .. } => "place",
            Command::Export => "export",
        }
    }

    fn args(&self) -> Vec<(&'static str, String)> {
        match self {
            Command::Load { app } => vec![("app", app.clone())],
            Command::Select { component } | Command::Deselect { component } => {
                vec![("component", component.clone())]
            }
            Command::ExtendLayout { directions, scope } => vec![
                ("directions", directions.iter().map(|d| d.name()).collect::<Vec<_>>().join(",")),
                ("scope", scope.to_string()),
            ],
            Command::Suggest { mode } => vec![("mode", mode.to_string())],
            Command::Extract { target: ExtractTarget::NewScreen { name } } => {
                vec![("target", "new".into()), ("name", name.clone())]
            }
            Command::Extract { target: ExtractTarget::Existing { screen } } => vec![("target", screen.clone())],
            Command::Place { screen, subject, relation, anchor } => vec![
                ("screen", screen.clone()),
                ("subject", subject.clone()),
                ("relation", relation.name().to_string()),
                ("anchor", anchor.clone()),
            ],
            Command::ExtendParent | Command::ExtendTask | Command::ExtendFunctionality | Command::Export => vec![],
        }
    }
}

fn quote(value: &str) -> String {
    let plain = !value.is_empty()
        && !value.chars().any(|c| c.is_whitespace() || matches!(c, '"' | '\\' | '#' | '='));
    if plain {
        return value.to_string();
    }
    let mut out = String::from("\"");
    for c in value.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb())?;
        for (k, v) in self.args() {
            write!(f, " {k}={}", quote(&v))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ParseError(pub String);

/// Splits a line into tokens, honoring double quotes and stopping at an
/// unquoted `#`.
fn tokenize(line: &str) -> Result<Vec<String>, ParseError> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut in_token = false;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '#' => break,
            '"' => {
                in_token = true;
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('n') => cur.push('\n'),
                            Some(e) => cur.push(e),
                            None => return Err(ParseError("dangling escape".into())),
                        },
                        Some(ch) => cur.push(ch),
                        None => return Err(ParseError("unterminated quote".into())),
                    }
                }
            }
            c if c.is_whitespace() => {
                if in_token {
                    tokens.push(std::mem::take(&mut cur));
                    in_token = false;
                }
            }
            c => {
                in_token = true;
                cur.push(c);
            }
        }
    }
    if in_token {
        tokens.push(cur);
    }
    Ok(tokens)
}

/// Parses one line; `Ok(None)` for blank and comment-only lines.
pub fn parse_line(line: &str) -> Result<Option<Command>, ParseError> {
    let tokens = tokenize(line)?;
    let Some((verb, rest)) = tokens.split_first() else {
        return Ok(None);
    };
    let mut args: BTreeMap<String, String> = BTreeMap::new();
    for tok in rest {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| ParseError(format!("expected key=value, found `{tok}`")))?;
        if args.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ParseError(format!("argument `{k}` given twice")));
        }
    }
    let mut take = |key: &str| -> Result<String, ParseError> {
        args.remove(key).ok_or_else(|| ParseError(format!("`{verb}` needs `{key}=`")))
    };
    let parse_err = |e: &dyn fmt::Display| ParseError(e.to_string());
    let cmd = match verb.as_str() {
        "load" => Command::Load { app: take("app")? },
        "select" => Command::Select { component: take("component")? },
        "deselect" => Command::Deselect { component: take("component")? },
        "extendLayout" => {
            let directions = take("directions")?
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<Direction>().map_err(|e| parse_err(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            let scope = match args.remove("scope") {
                Some(s) => s.parse().map_err(|e| parse_err(&e))?,
                None => ExtensionScope::Last,
            };
            Command::ExtendLayout { directions, scope }
        }
        "extendParent" => Command::ExtendParent,
        "extendTask" => Command::ExtendTask,
        "extendFunctionality" => Command::ExtendFunctionality,
        "suggest" => Command::Suggest { mode: take("mode")?.parse().map_err(|e| parse_err(&e))? },
        "extract" => {
            let target = take("target")?;
            if target == "new" {
                Command::Extract { target: ExtractTarget::NewScreen { name: take("name")? } }
            } else {
                Command::Extract { target: ExtractTarget::Existing { screen: target } }
            }
        }
        "place" => Command::Place {
            screen: take("screen")?,
            subject: take("subject")?,
            relation: take("relation")?.parse().map_err(|e| parse_err(&e))?,
            anchor: take("anchor")?,
        },
        "export" => Command::Export,
        other => return Err(ParseError(format!("unknown verb `{other}`"))),
    };
    if let Some(extra) = args.keys().next() {
        return Err(ParseError(format!("unexpected argument `{extra}` for `{verb}`")));
    }
    Ok(Some(cmd))
}

impl FromStr for Command {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_line(s)?.ok_or_else(|| ParseError("empty command".into()))
    }
}

/// Parses a whole script into `(line number, command)` pairs.
pub fn parse_script(text: &str) -> Result<Vec<(usize, Command)>, ScriptError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(cmd)) => out.push((i + 1, cmd)),
            Ok(None) => {}
            Err(e) => return Err(ScriptError::Syntax { line: i + 1, message: e.0 }),
        }
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{command}` failed: {source}")]
    Failed {
        line: usize,
        command: String,
        #[source]
        source: WorkspaceError,
    },
}

impl ScriptError {
    pub fn line(&self) -> usize {
        match self {
            ScriptError::Syntax { line, .. } | ScriptError::Failed { line, .. } => *line,
        }
    }
}

/// What a command produced, beyond its effect on the workspace.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done,
    Screen(String),
    Placement(PlacementView),
    Suggestions(Vec<Suggestion>),
    Export(String),
}

/// A workspace plus the application documents that `load` may refer to.
#[derive(Debug, Clone, Default)]
pub struct Session {
    pub workspace: Workspace,
    catalog: BTreeMap<String, Application>,
}

impl Session {
    pub fn new(available: impl IntoIterator<Item = Application>) -> Self {
        Session {
            workspace: Workspace::new(),
            catalog: available.into_iter().map(|a| (a.id.clone(), a)).collect(),
        }
    }

    pub fn with_workspace(workspace: Workspace, available: impl IntoIterator<Item = Application>) -> Self {
        Session { workspace, catalog: available.into_iter().map(|a| (a.id.clone(), a)).collect() }
    }

    pub fn make_available(&mut self, app: Application) {
        self.catalog.insert(app.id.clone(), app);
    }

    pub fn execute(&mut self, cmd: &Command) -> Result<Outcome, WorkspaceError> {
        let ws = &mut self.workspace;
        match cmd {
            Command::Load { app } => {
                let doc = self
                    .catalog
                    .get(app)
                    .cloned()
                    .ok_or_else(|| WorkspaceError::UnknownApplication(app.clone()))?;
                ws.load(doc)?;
            }
            Command::Select { component } => {
                ws.select(component)?;
            }
            Command::Deselect { component } => {
                ws.deselect(component)?;
            }
            Command::ExtendLayout { directions, scope } => {
                let dirs: DirectionSet = directions.iter().copied().collect();
                ws.extend_layout(&dirs, *scope)?;
            }
            Command::ExtendParent => {
                ws.extend_parent()?;
            }
            Command::ExtendTask => {
                ws.extend_task()?;
            }
            Command::ExtendFunctionality => {
                ws.extend_functionality()?;
            }
            Command::Suggest { mode } => return Ok(Outcome::Suggestions(ws.suggest(*mode)?)),
            Command::Extract { target } => return Ok(Outcome::Screen(ws.extract(target)?)),
            Command::Place { screen, subject, relation, anchor } => {
                return Ok(Outcome::Placement(ws.place(screen, subject, *relation, anchor)?))
            }
            Command::Export => return Ok(Outcome::Export(ws.export()?)),
        }
        Ok(Outcome::Done)
    }
}

/// Result of a successful script run.
#[derive(Debug)]
pub struct ScriptRun {
    pub session: Session,
    /// The document produced by the last `export`, if any ran.
    pub export: Option<String>,
}

/// Loads every application (in order) into a fresh workspace, then runs the
/// script, stopping at the first failing line.
pub fn run_script(apps: Vec<Application>, script: &str) -> Result<ScriptRun, ScriptError> {
    let commands = parse_script(script)?;
    let order: Vec<String> = apps.iter().map(|a| a.id.clone()).collect();
    let mut session = Session::new(apps);
    for id in order {
        let cmd = Command::Load { app: id };
        session
            .execute(&cmd)
            .map_err(|source| ScriptError::Failed { line: 0, command: cmd.to_string(), source })?;
    }
    let mut export = None;
    for (line, cmd) in commands {
        match session.execute(&cmd) {
            Ok(Outcome::Export(doc)) => export = Some(doc),
            Ok(_) => {}
            Err(source) => return Err(ScriptError::Failed { line, command: cmd.to_string(), source }),
        }
    }
    Ok(ScriptRun { session, export })
}

/// The session log in script form.
pub fn save_session(ws: &Workspace) -> Result<String, WorkspaceError> {
    if ws.log().is_empty() {
        return Err(WorkspaceError::EmptySession);
    }
    Ok(ws.log().iter().map(|c| format!("{c}\n")).collect())
}

/// Re-executes a saved log against the given documents.
pub fn replay_session(log: &str, apps: Vec<Application>) -> Result<Session, ScriptError> {
    let commands = parse_script(log)?;
    let mut session = Session::new(apps);
    for (line, cmd) in commands {
        session
            .execute(&cmd)
            .map_err(|source| ScriptError::Failed { line, command: cmd.to_string(), source })?;
    }
    Ok(session)
}
