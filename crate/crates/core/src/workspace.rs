//! Workspaces: loaded sources, the composed application under construction,
//! the derived store, the current selection and the session log.
//!
//! Every mutation either fully succeeds (and is appended to the log) or
//! leaves the workspace untouched.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::layout::{self, LayoutError, Placement};
use crate::model::{
    self, Application, Direction, LayoutSpec, Link, ModelError, RelativeConstraint, Screen, TaskNode, UiComponent,
};
use crate::selection::{self, DirectionSet, ExtensionScope, HelpMode, Selection, SelectionError, Suggestion};
use crate::session::Command;
use crate::store::{build_store, Store, StoreError};

pub const DEFAULT_COMPOSED_ID: &str = "composed";
pub const DEFAULT_COMPOSED_NAME: &str = "Composed application";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractTarget {
    NewScreen { name: String },
    Existing { screen: String },
}

/// Broad error classes, used to pick HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Precondition,
    NotFound,
    Invalid,
}

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("application `{0}` is already loaded")]
    DuplicateApplication(String),
    #[error("no application document with id `{0}` is available")]
    UnknownApplication(String),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("unknown screen `{0}` in the composed application")]
    UnknownScreen(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("`{0}` already belongs to the composed application")]
    AlreadyComposed(String),
    #[error("`{subject}` and `{anchor}` are not siblings")]
    NotSiblings { subject: String, anchor: String },
    #[error("container `{0}` uses a fixed layout")]
    FixedLayout(String),
    #[error("the composed application is empty")]
    EmptyComposition,
    #[error("the session log is empty")]
    EmptySession,
    #[error("composed application became invalid: {0}")]
    Internal(String),
}

impl WorkspaceError {
    pub fn class(&self) -> ErrorClass {
        use WorkspaceError::*;
        match self {
            Model(_) => ErrorClass::Invalid,
            Selection(SelectionError::UnknownComponent(_)) => ErrorClass::NotFound,
            Selection(SelectionError::BadValue { .. }) => ErrorClass::Invalid,
            Layout(LayoutError::UnknownComponent(_)) => ErrorClass::NotFound,
            Store(StoreError::UnknownEntity(_)) => ErrorClass::NotFound,
            UnknownApplication(_) | UnknownScreen(_) | UnknownComponent(_) => ErrorClass::NotFound,
            _ => ErrorClass::Precondition,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use WorkspaceError::*;
        match self {
            Model(ModelError::Syntax { .. }) => "syntax",
            Model(ModelError::Reference { .. }) => "dangling_reference",
            Model(ModelError::Invariant(_)) => "invalid_application",
            Model(ModelError::UnknownId(_)) => "unknown_component",
            DuplicateApplication(_) => "duplicate_application",
            UnknownApplication(_) => "unknown_application",
            Selection(SelectionError::UnknownComponent(_)) => "unknown_component",
            Selection(SelectionError::EmptySelection) => "empty_selection",
            Selection(SelectionError::NoDirections) => "no_directions",
            Selection(SelectionError::BadValue { .. }) => "bad_value",
            Layout(LayoutError::SelfAnchor(_)) => "self_anchor",
            Layout(LayoutError::Inconsistent(_)) => "inconsistent_constraints",
            Layout(LayoutError::UnknownComponent(_)) => "unknown_component",
            Store(_) => "store",
            UnknownScreen(_) => "unknown_screen",
            UnknownComponent(_) => "unknown_component",
            AlreadyComposed(_) => "already_composed",
            NotSiblings { .. } => "not_siblings",
            FixedLayout(_) => "fixed_layout",
            EmptyComposition => "empty_composition",
            EmptySession => "empty_session",
            Internal(_) => "internal",
        }
    }

    /// The id the error is about, when there is one.
    pub fn subject(&self) -> Option<String> {
        use WorkspaceError::*;
        match self {
            Model(ModelError::Reference { id, .. }) | Model(ModelError::UnknownId(id)) => Some(id.clone()),
            DuplicateApplication(id) | UnknownApplication(id) | UnknownScreen(id) | UnknownComponent(id)
            | AlreadyComposed(id) | FixedLayout(id) => Some(id.clone()),
            Selection(SelectionError::UnknownComponent(id)) => Some(id.clone()),
            Selection(SelectionError::EmptySelection) => Some("selection".into()),
            Selection(SelectionError::NoDirections) => Some("directions".into()),
            Selection(SelectionError::BadValue { value, .. }) => Some(value.clone()),
            Layout(LayoutError::SelfAnchor(id)) | Layout(LayoutError::UnknownComponent(id)) => Some(id.clone()),
            Store(StoreError::UnknownEntity(id)) => Some(id.clone()),
            NotSiblings { subject, .. } => Some(subject.clone()),
            EmptyComposition => Some("composed".into()),
            _ => None,
        }
    }
}

/// Constraints and solved grid of one composed container.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PlacementView {
    pub container: String,
    pub constraints: Vec<RelativeConstraint>,
    pub placement: Placement,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    sources: Vec<Application>,
    composed: Application,
    store: Store,
    selection: Selection,
    log: Vec<Command>,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl Workspace {
    pub fn new() -> Self {
        Self::with_composed(DEFAULT_COMPOSED_ID, DEFAULT_COMPOSED_NAME)
    }

    pub fn with_composed(id: impl Into<String>, name: impl Into<String>) -> Self {
        let composed = Application::new(id, name);
        let store = build_store(&[&composed]).expect("single application");
        Workspace { sources: Vec::new(), composed, store, selection: Selection::new(), log: Vec::new() }
    }

    pub fn sources(&self) -> &[Application] {
        &self.sources
    }

    pub fn composed(&self) -> &Application {
        &self.composed
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn selection(&self) -> &Selection {
        &self.selection
    }

    pub fn log(&self) -> &[Command] {
        &self.log
    }

    fn rebuild(sources: &[Application], composed: &Application) -> Result<Store, WorkspaceError> {
        let apps: Vec<&Application> = sources.iter().chain(std::iter::once(composed)).collect();
        Ok(build_store(&apps)?)
    }

    /// Adds a source application.
    pub fn load(&mut self, app: Application) -> Result<(), WorkspaceError> {
        let violations = model::validate(&app);
        if !violations.is_empty() {
            return Err(ModelError::Invariant(violations).into());
        }
        if app.id == self.composed.id || self.sources.iter().any(|s| s.id == app.id) {
            return Err(WorkspaceError::DuplicateApplication(app.id));
        }
        let id = app.id.clone();
        let mut sources = self.sources.clone();
        sources.push(app);
        self.store = Self::rebuild(&sources, &self.composed)?;
        self.sources = sources;
        self.log.push(Command::Load { app: id });
        Ok(())
    }

    fn commit_selection(&mut self, sel: Selection, cmd: Command) {
        self.selection = sel;
        self.log.push(cmd);
    }

    pub fn select(&mut self, component: &str) -> Result<&Selection, WorkspaceError> {
        let sel = selection::select(&self.store, &self.selection, component)?;
        self.commit_selection(sel, Command::Select { component: component.to_string() });
        Ok(&self.selection)
    }

    pub fn deselect(&mut self, component: &str) -> Result<&Selection, WorkspaceError> {
        let sel = selection::deselect(&self.store, &self.selection, component)?;
        self.commit_selection(sel, Command::Deselect { component: component.to_string() });
        Ok(&self.selection)
    }

    pub fn extend_layout(
        &mut self,
        directions: &DirectionSet,
        scope: ExtensionScope,
    ) -> Result<&Selection, WorkspaceError> {
        let sel = selection::extend_layout(&self.store, &self.selection, directions, scope)?;
        self.commit_selection(sel, Command::ExtendLayout { directions: directions.iter().collect(), scope });
        Ok(&self.selection)
    }

    pub fn extend_parent(&mut self) -> Result<&Selection, WorkspaceError> {
        let sel = selection::extend_parent(&self.store, &self.selection)?;
        self.commit_selection(sel, Command::ExtendParent);
        Ok(&self.selection)
    }

    pub fn extend_task(&mut self) -> Result<&Selection, WorkspaceError> {
        let sel = selection::extend_task(&self.store, &self.selection)?;
        self.commit_selection(sel, Command::ExtendTask);
        Ok(&self.selection)
    }

    pub fn extend_functionality(&mut self) -> Result<&Selection, WorkspaceError> {
        let sel = selection::extend_functionality(&self.store, &self.selection)?;
        self.commit_selection(sel, Command::ExtendFunctionality);
        Ok(&self.selection)
    }

    /// Read-only; not recorded in the log.
    pub fn suggest(&self, mode: HelpMode) -> Result<Vec<Suggestion>, WorkspaceError> {
        Ok(selection::suggest(&self.store, &self.selection, mode)?)
    }

    /// Copies the selection into a screen of the composed application,
    /// bringing along links, the linked tasks (with their ancestors) and
    /// functionalities. Returns the target screen id.
    pub fn extract(&mut self, target: &ExtractTarget) -> Result<String, WorkspaceError> {
        if self.selection.is_empty() {
            return Err(SelectionError::EmptySelection.into());
        }
        let mut composed = self.composed.clone();
        let screen_id = match target {
            ExtractTarget::Existing { screen } => {
                if composed.screen(screen).is_none() {
                    return Err(WorkspaceError::UnknownScreen(screen.clone()));
                }
                screen.clone()
            }
            ExtractTarget::NewScreen { name } => new_screen(&mut composed, name),
        };

        let mut located: Vec<Located<'_>> = Vec::new();
        for id in self.selection.items() {
            match self.locate(id) {
                Some(loc) => located.push(loc),
                None if composed.has_component(id) => return Err(WorkspaceError::AlreadyComposed(id.clone())),
                None => return Err(WorkspaceError::UnknownComponent(id.clone())),
            }
        }
        let selected: BTreeSet<(&str, &str)> =
            located.iter().map(|l| (l.app.id.as_str(), l.path.last().expect("path").id.as_str())).collect();
        let tops: Vec<&Located<'_>> = located
            .iter()
            .filter(|l| {
                l.path[..l.path.len() - 1]
                    .iter()
                    .all(|anc| !selected.contains(&(l.app.id.as_str(), anc.id.as_str())))
            })
            .collect();

        let mut existing: BTreeSet<String> = all_ids(&composed);
        let mut new_nodes: Vec<UiComponent> = Vec::new();
        let mut new_layouts: BTreeMap<String, LayoutSpec> = BTreeMap::new();
        // (app, original id) of every component copied by this extraction
        let mut copied: Vec<(&Application, String)> = Vec::new();
        let mut copied_tops: Vec<&Located<'_>> = Vec::new();
        for loc in &tops {
            let node = *loc.path.last().expect("path");
            if existing.contains(&prefixed(loc.app, &node.id)) {
                continue;
            }
            let copy = copy_subtree(loc.app, loc.screen, node, &mut existing, &mut new_layouts, &mut copied);
            new_nodes.push(copy);
            copied_tops.push(loc);
        }

        let screen = composed.screens.iter_mut().find(|s| s.id == screen_id).expect("target screen");
        let root_id = screen.root.id.clone();
        screen.root.children.extend(new_nodes);
        screen.layouts.extend(new_layouts);
        let mut constraints = match screen.layouts.get(&root_id) {
            Some(LayoutSpec::Relative { constraints }) => constraints.clone(),
            Some(_) => return Err(WorkspaceError::FixedLayout(root_id)),
            None => Vec::new(),
        };
        for c in preserved_relations(&copied_tops) {
            let constrained = constraints.iter().any(|e| {
                (e.subject == c.subject && e.anchor == c.anchor) || (e.subject == c.anchor && e.anchor == c.subject)
            });
            if constrained {
                continue;
            }
            constraints.push(c);
            if layout::check_consistency(&constraints).is_err() {
                constraints.pop();
            }
        }
        screen.layouts.insert(root_id, LayoutSpec::Relative { constraints });

        copy_links(&mut composed, &copied);

        let violations = model::validate(&composed);
        if !violations.is_empty() {
            return Err(WorkspaceError::Internal(
                violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
            ));
        }
        self.store = Self::rebuild(&self.sources, &composed)?;
        self.composed = composed;
        self.selection = Selection::new();
        self.log.push(Command::Extract { target: target.clone() });
        Ok(screen_id)
    }

    fn locate(&self, id: &str) -> Option<Located<'_>> {
        self.sources.iter().find_map(|app| {
            app.screens
                .iter()
                .find_map(|s| path_to(&s.root, id).map(|path| Located { app, screen: s, path }))
        })
    }

    /// Sets the relation between two sibling components of a composed screen.
    pub fn place(
        &mut self,
        screen: &str,
        subject: &str,
        relation: Direction,
        anchor: &str,
    ) -> Result<PlacementView, WorkspaceError> {
        let mut composed = self.composed.clone();
        let target = composed
            .screens
            .iter_mut()
            .find(|s| s.id == screen)
            .ok_or_else(|| WorkspaceError::UnknownScreen(screen.to_string()))?;
        let parent_of = |id: &str| -> Result<Option<String>, WorkspaceError> {
            target
                .root
                .walk()
                .into_iter()
                .find(|(c, _)| c.id == id)
                .map(|(_, p)| p.map(|p| p.id.clone()))
                .ok_or_else(|| WorkspaceError::UnknownComponent(id.to_string()))
        };
        let subject_parent = parent_of(subject)?;
        let anchor_parent = parent_of(anchor)?;
        if subject == anchor {
            return Err(LayoutError::SelfAnchor(subject.to_string()).into());
        }
        let container = match (subject_parent, anchor_parent) {
            (Some(a), Some(b)) if a == b => a,
            _ => {
                return Err(WorkspaceError::NotSiblings { subject: subject.to_string(), anchor: anchor.to_string() })
            }
        };
        let current = match target.layouts.get(&container) {
            Some(LayoutSpec::Relative { constraints }) => constraints.clone(),
            Some(_) => return Err(WorkspaceError::FixedLayout(container)),
            None => Vec::new(),
        };
        let updated = layout::place(&current, subject, relation, anchor)?;
        target.layouts.insert(container.clone(), LayoutSpec::Relative { constraints: updated });
        let view = placement_view(target, &container)?;
        self.store = Self::rebuild(&self.sources, &composed)?;
        self.composed = composed;
        self.log.push(Command::Place {
            screen: screen.to_string(),
            subject: subject.to_string(),
            relation,
            anchor: anchor.to_string(),
        });
        Ok(view)
    }

    /// Current constraints and solved grid of a composed screen's root.
    pub fn placement(&self, screen: &str) -> Result<PlacementView, WorkspaceError> {
        let s = self.composed.screen(screen).ok_or_else(|| WorkspaceError::UnknownScreen(screen.to_string()))?;
        placement_view(s, &s.root.id)
    }

    /// The composed application as a document, with each screen root's
    /// relative constraints solved into a table layout.
    pub fn export(&self) -> Result<String, WorkspaceError> {
        Ok(model::serialize_application(&self.exported_application()?))
    }

    pub fn exported_application(&self) -> Result<Application, WorkspaceError> {
        if self.composed.screens.is_empty() {
            return Err(WorkspaceError::EmptyComposition);
        }
        let mut app = self.composed.clone();
        for screen in &mut app.screens {
            let view = placement_view(screen, &screen.root.id)?;
            screen.layouts.insert(view.container, view.placement.to_table());
        }
        Ok(app)
    }
}

fn placement_view(screen: &Screen, container: &str) -> Result<PlacementView, WorkspaceError> {
    let node = screen.root.find(container).ok_or_else(|| WorkspaceError::UnknownComponent(container.to_string()))?;
    let constraints = match screen.layout_of(container) {
        LayoutSpec::Relative { constraints } => constraints,
        _ => return Err(WorkspaceError::FixedLayout(container.to_string())),
    };
    let ids: BTreeSet<String> = node.children.iter().map(|c| c.id.clone()).collect();
    let placement = layout::solve(&ids, &constraints)?;
    Ok(PlacementView { container: container.to_string(), constraints, placement })
}

struct Located<'a> {
    app: &'a Application,
    screen: &'a Screen,
    /// root .. component
    path: Vec<&'a UiComponent>,
}

fn path_to<'a>(node: &'a UiComponent, id: &str) -> Option<Vec<&'a UiComponent>> {
    if node.id == id {
        return Some(vec![node]);
    }
    node.children.iter().find_map(|c| {
        path_to(c, id).map(|mut p| {
            p.insert(0, node);
            p
        })
    })
}

fn prefixed(app: &Application, id: &str) -> String {
    format!("{}.{}", app.id, id)
}

fn all_ids(app: &Application) -> BTreeSet<String> {
    let mut ids: BTreeSet<String> = app.components().map(|(_, c, _)| c.id.clone()).collect();
    ids.extend(app.screens.iter().map(|s| s.id.clone()));
    ids.extend(app.tasks.iter().map(|t| t.id.clone()));
    ids.extend(app.functionalities.iter().map(|f| f.id.clone()));
    ids
}

/// Adds an empty screen whose root container has a relative layout.
fn new_screen(app: &mut Application, name: &str) -> String {
    let ids = all_ids(app);
    let mut n = app.screens.len() + 1;
    let (screen_id, root_id) = loop {
        let sid = format!("screen{n}");
        let rid = format!("{sid}-root");
        if !ids.contains(&sid) && !ids.contains(&rid) {
            break (sid, rid);
        }
        n += 1;
    };
    app.screens.push(Screen {
        id: screen_id.clone(),
        name: name.to_string(),
        root: UiComponent::container(&root_id, name, Vec::new()),
        layouts: [(root_id, LayoutSpec::empty_relative())].into_iter().collect(),
    });
    screen_id
}

/// Copies `node` and its subtree with prefixed ids, skipping subtrees whose
/// prefixed id already exists. Container layouts come along, restricted to
/// the children that were copied.
fn copy_subtree<'a>(
    app: &'a Application,
    screen: &Screen,
    node: &UiComponent,
    existing: &mut BTreeSet<String>,
    layouts: &mut BTreeMap<String, LayoutSpec>,
    copied: &mut Vec<(&'a Application, String)>,
) -> UiComponent {
    let id = prefixed(app, &node.id);
    existing.insert(id.clone());
    copied.push((app, node.id.clone()));
    let mut children = Vec::new();
    for child in &node.children {
        if existing.contains(&prefixed(app, &child.id)) {
            continue;
        }
        children.push(copy_subtree(app, screen, child, existing, layouts, copied));
    }
    if let Some(layout) = screen.layouts.get(&node.id) {
        let kept: BTreeSet<&str> = children.iter().map(|c| c.id.as_str()).collect();
        let keep = |orig: &str| kept.contains(prefixed(app, orig).as_str());
        let spec = match layout {
            LayoutSpec::Absolute { positions } => LayoutSpec::Absolute {
                positions: positions
                    .iter()
                    .filter(|(k, _)| keep(k))
                    .map(|(k, v)| (prefixed(app, k), *v))
                    .collect(),
            },
            LayoutSpec::Table { cells } => LayoutSpec::Table {
                cells: cells.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (prefixed(app, k), *v)).collect(),
            },
            LayoutSpec::Relative { constraints } => LayoutSpec::Relative {
                constraints: constraints
                    .iter()
                    .filter(|c| keep(&c.subject) && keep(&c.anchor))
                    .map(|c| RelativeConstraint::new(prefixed(app, &c.subject), c.relation, prefixed(app, &c.anchor)))
                    .collect(),
            },
        };
        layouts.insert(id.clone(), spec);
    }
    UiComponent { id, kind: node.kind, label: node.label.clone(), children }
}

/// Spatial relations that held between copied top-level components that
/// were siblings in their source, as prefixed relative constraints.
fn preserved_relations(tops: &[&Located<'_>]) -> Vec<RelativeConstraint> {
    let mut groups: BTreeMap<(&str, &str), (&Located<'_>, BTreeSet<&str>)> = BTreeMap::new();
    for loc in tops {
        if loc.path.len() < 2 {
            continue;
        }
        let parent = loc.path[loc.path.len() - 2];
        let entry = groups.entry((loc.app.id.as_str(), parent.id.as_str())).or_insert((loc, BTreeSet::new()));
        entry.1.insert(loc.path.last().expect("path").id.as_str());
    }
    let mut out = Vec::new();
    for (loc, members) in groups.values() {
        if members.len() < 2 {
            continue;
        }
        let parent = loc.path[loc.path.len() - 2];
        for rel in layout::derive_relations(&parent.children, &loc.screen.layout_of(&parent.id)) {
            if members.contains(rel.subject.as_str()) && members.contains(rel.anchor.as_str()) {
                out.push(RelativeConstraint::new(
                    prefixed(loc.app, &rel.subject),
                    rel.relation,
                    prefixed(loc.app, &rel.anchor),
                ));
            }
        }
    }
    out
}

/// Copies the links of every copied component with the tasks (plus their
/// ancestor chain) and functionalities they need, deduplicated by id.
fn copy_links(composed: &mut Application, copied: &[(&Application, String)]) {
    let mut by_app: BTreeMap<&str, (&Application, BTreeSet<&str>)> = BTreeMap::new();
    for (app, id) in copied {
        by_app.entry(app.id.as_str()).or_insert((app, BTreeSet::new())).1.insert(id.as_str());
    }
    for (app, components) in by_app.values() {
        let mut tasks: BTreeSet<&str> = BTreeSet::new();
        let mut functionalities: BTreeSet<&str> = BTreeSet::new();
        for link in app.links.iter().filter(|l| components.contains(l.ui())) {
            let copy = match link {
                Link::UiTask(l) => {
                    tasks.insert(&l.task);
                    Link::ui_task(prefixed(app, &l.ui), prefixed(app, &l.task))
                }
                Link::UiFunc(l) => {
                    functionalities.insert(&l.functionality);
                    Link::ui_func(prefixed(app, &l.ui), prefixed(app, &l.functionality))
                }
            };
            if !composed.links.contains(&copy) {
                composed.links.push(copy);
            }
        }
        let mut frontier: Vec<&str> = tasks.iter().copied().collect();
        while let Some(t) = frontier.pop() {
            if let Some(parent) = app.task(t).and_then(|n| n.parent.as_deref()) {
                if tasks.insert(parent) {
                    frontier.push(parent);
                }
            }
        }
        for t in &app.tasks {
            if tasks.contains(t.id.as_str()) {
                functionalities.extend(t.functionalities.iter().map(String::as_str));
            }
        }
        for f in &app.functionalities {
            let id = prefixed(app, &f.id);
            if functionalities.contains(f.id.as_str()) && composed.functionality(&id).is_none() {
                composed.functionalities.push(model::Functionality {
                    id,
                    name: f.name.clone(),
                    signature: f.signature.clone(),
                });
            }
        }
        for t in &app.tasks {
            let id = prefixed(app, &t.id);
            if tasks.contains(t.id.as_str()) && composed.task(&id).is_none() {
                composed.tasks.push(TaskNode {
                    id,
                    name: t.name.clone(),
                    parent: t.parent.as_deref().map(|p| prefixed(app, p)),
                    functionalities: t.functionalities.iter().map(|f| prefixed(app, f)).collect(),
                });
            }
        }
    }
}
