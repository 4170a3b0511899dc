//! Declarative application descriptions.
//!
//! An [`Application`] is the stand-in for a former application: its screens
//! (each a component tree with per-container layouts), its task forest, its
//! functionality registry and the links tying UI elements to tasks and
//! functionalities. Documents are JSON; unknown keys are rejected.

mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use validate::{validate, Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Application {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub screens: Vec<Screen>,
    #[serde(default)]
    pub tasks: Vec<TaskNode>,
    #[serde(default)]
    pub functionalities: Vec<Functionality>,
    #[serde(default)]
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Screen {
    pub id: String,
    pub name: String,
    pub root: UiComponent,
    /// Keyed by container component id. Containers without an entry use an
    /// empty relative layout.
    #[serde(default)]
    pub layouts: BTreeMap<String, LayoutSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Container,
    Button,
    Textfield,
    Label,
    List,
    Image,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiComponent {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub children: Vec<UiComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl Rect {
    pub fn right(&self) -> i64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.h
    }

    /// Interior intersection: touching edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.right()
            && other.x < self.right()
            && self.y < other.bottom()
            && other.y < self.bottom()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Cell {
    pub row: u32,
    pub col: u32,
    #[serde(default = "one")]
    pub row_span: u32,
    #[serde(default = "one")]
    pub col_span: u32,
}

fn one() -> u32 {
    1
}

impl Cell {
    pub fn at(row: u32, col: u32) -> Self {
        Cell { row, col, row_span: 1, col_span: 1 }
    }

    /// The cell as a rectangle on the unit grid (x = column, y = row).
    pub fn as_rect(&self) -> Rect {
        Rect {
            x: self.col as i64,
            y: self.row as i64,
            w: self.col_span as i64,
            h: self.row_span as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayoutSpec {
    Absolute { positions: BTreeMap<String, Rect> },
    Table { cells: BTreeMap<String, Cell> },
    Relative { constraints: Vec<RelativeConstraint> },
}

impl LayoutSpec {
    pub fn empty_relative() -> Self {
        LayoutSpec::Relative { constraints: Vec::new() }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            LayoutSpec::Absolute { .. } => "absolute",
            LayoutSpec::Table { .. } => "table",
            LayoutSpec::Relative { .. } => "relative",
        }
    }
}

/// One of the eight spatial relations of the direction rose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "onTheLeftOf")]
    Left,
    #[serde(rename = "onTheRightOf")]
    Right,
    #[serde(rename = "above")]
    Above,
    #[serde(rename = "below")]
    Below,
    #[serde(rename = "aboveLeft")]
    AboveLeft,
    #[serde(rename = "aboveRight")]
    AboveRight,
    #[serde(rename = "belowLeft")]
    BelowLeft,
    #[serde(rename = "belowRight")]
    BelowRight,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::Left,
        Direction::Right,
        Direction::Above,
        Direction::Below,
        Direction::AboveLeft,
        Direction::AboveRight,
        Direction::BelowLeft,
        Direction::BelowRight,
    ];

    pub fn inverse(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Above => Direction::Below,
            Direction::Below => Direction::Above,
            Direction::AboveLeft => Direction::BelowRight,
            Direction::BelowRight => Direction::AboveLeft,
            Direction::AboveRight => Direction::BelowLeft,
            Direction::BelowLeft => Direction::AboveRight,
        }
    }

    /// Sign of `subject - anchor` on the horizontal axis (-1, 0, 1).
    pub fn dx(self) -> i32 {
        match self {
            Direction::Left | Direction::AboveLeft | Direction::BelowLeft => -1,
            Direction::Right | Direction::AboveRight | Direction::BelowRight => 1,
            Direction::Above | Direction::Below => 0,
        }
    }

    /// Sign of `subject - anchor` on the vertical axis; rows grow downwards.
    pub fn dy(self) -> i32 {
        match self {
            Direction::Above | Direction::AboveLeft | Direction::AboveRight => -1,
            Direction::Below | Direction::BelowLeft | Direction::BelowRight => 1,
            Direction::Left | Direction::Right => 0,
        }
    }

    pub fn from_signs(dx: i32, dy: i32) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.dx() == dx && d.dy() == dy)
    }

    /// One member of each inverse pair: right, below, belowRight, belowLeft.
    pub fn is_canonical(self) -> bool {
        matches!(
            self,
            Direction::Right | Direction::Below | Direction::BelowRight | Direction::BelowLeft
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Left => "onTheLeftOf",
            Direction::Right => "onTheRightOf",
            Direction::Above => "above",
            Direction::Below => "below",
            Direction::AboveLeft => "aboveLeft",
            Direction::AboveRight => "aboveRight",
            Direction::BelowLeft => "belowLeft",
            Direction::BelowRight => "belowRight",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown direction `{0}`")]
pub struct UnknownDirection(pub String);

impl FromStr for Direction {
    type Err = UnknownDirection;

    /// Accepts the predicate names plus the short forms `left` and `right`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => return Ok(Direction::Left),
            "right" => return Ok(Direction::Right),
            _ => {}
        }
        Direction::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownDirection(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeConstraint {
    pub subject: String,
    pub relation: Direction,
    pub anchor: String,
}

impl RelativeConstraint {
    pub fn new(subject: impl Into<String>, relation: Direction, anchor: impl Into<String>) -> Self {
        RelativeConstraint { subject: subject.into(), relation, anchor: anchor.into() }
    }
}

impl fmt::Display for RelativeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.subject, self.relation, self.anchor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskNode {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub functionalities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Functionality {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Link {
    UiTask(UiTaskLink),
    UiFunc(UiFuncLink),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiTaskLink {
    pub ui: String,
    pub task: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiFuncLink {
    pub ui: String,
    pub functionality: String,
}

impl Link {
    pub fn ui_task(ui: impl Into<String>, task: impl Into<String>) -> Self {
        Link::UiTask(UiTaskLink { ui: ui.into(), task: task.into() })
    }

    pub fn ui_func(ui: impl Into<String>, functionality: impl Into<String>) -> Self {
        Link::UiFunc(UiFuncLink { ui: ui.into(), functionality: functionality.into() })
    }

    pub fn ui(&self) -> &str {
        match self {
            Link::UiTask(l) => &l.ui,
            Link::UiFunc(l) => &l.ui,
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("dangling reference to `{id}` ({context})")]
    Reference { id: String, context: String },
    #[error("invalid application: {}", format_violations(.0))]
    Invariant(Vec<Violation>),
    #[error("unknown component `{0}`")]
    UnknownId(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Parses and validates an application document.
pub fn parse_application(text: &str) -> Result<Application, ModelError> {
    let app: Application = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = validate(&app);
    if let Some(dangling) = violations.iter().find_map(|v| match &v.kind {
        ViolationKind::DanglingReference { id, context } => Some((id, context)),
        _ => None,
    }) {
        return Err(ModelError::Reference { id: dangling.0.clone(), context: dangling.1.clone() });
    }
    if !violations.is_empty() {
        return Err(ModelError::Invariant(violations));
    }
    Ok(app)
}

/// Pretty-printed JSON with a trailing newline. Maps are ordered, so output is
/// byte-stable for equal values.
pub fn serialize_application(app: &Application) -> String {
    let mut text = serde_json::to_string_pretty(app).expect("application serializes");
    text.push('\n');
    text
}

impl UiComponent {
    pub fn new(id: impl Into<String>, kind: ComponentKind, label: impl Into<String>) -> Self {
        UiComponent { id: id.into(), kind, label: label.into(), children: Vec::new() }
    }

    pub fn container(id: impl Into<String>, label: impl Into<String>, children: Vec<UiComponent>) -> Self {
        UiComponent { id: id.into(), kind: ComponentKind::Container, label: label.into(), children }
    }

    pub fn is_container(&self) -> bool {
        self.kind == ComponentKind::Container
    }

    /// Pre-order walk yielding `(component, parent)`.
    pub fn walk(&self) -> Vec<(&UiComponent, Option<&UiComponent>)> {
        let mut out = Vec::new();
        let mut stack: Vec<(&UiComponent, Option<&UiComponent>)> = vec![(self, None)];
        while let Some((node, parent)) = stack.pop() {
            out.push((node, parent));
            for child in node.children.iter().rev() {
                stack.push((child, Some(node)));
            }
        }
        out
    }

    pub fn find(&self, id: &str) -> Option<&UiComponent> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut UiComponent> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    /// Ids of every strict descendant, pre-order.
    pub fn descendant_ids(&self) -> Vec<&str> {
        self.walk().into_iter().skip(1).map(|(c, _)| c.id.as_str()).collect()
    }
}

impl Screen {
    /// The layout governing `container`'s children.
    pub fn layout_of(&self, container: &str) -> LayoutSpec {
        self.layouts.get(container).cloned().unwrap_or_else(LayoutSpec::empty_relative)
    }
}

impl Application {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Application {
            id: id.into(),
            name: name.into(),
            screens: Vec::new(),
            tasks: Vec::new(),
            functionalities: Vec::new(),
            links: Vec::new(),
        }
    }

    /// Every component of every screen with its screen and parent.
    pub fn components(&self) -> impl Iterator<Item = (&Screen, &UiComponent, Option<&UiComponent>)> {
        self.screens
            .iter()
            .flat_map(|s| s.root.walk().into_iter().map(move |(c, p)| (s, c, p)))
    }

    pub fn component(&self, id: &str) -> Option<(&Screen, &UiComponent)> {
        self.screens.iter().find_map(|s| s.root.find(id).map(|c| (s, c)))
    }

    pub fn has_component(&self, id: &str) -> bool {
        self.component(id).is_some()
    }

    pub fn screen(&self, id: &str) -> Option<&Screen> {
        self.screens.iter().find(|s| s.id == id)
    }

    pub fn task(&self, id: &str) -> Option<&TaskNode> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn functionality(&self, id: &str) -> Option<&Functionality> {
        self.functionalities.iter().find(|f| f.id == id)
    }

    /// The containing component of `component`, or `None` for a screen root.
    pub fn parent_of(&self, component: &str) -> Result<Option<&str>, ModelError> {
        self.components()
            .find(|(_, c, _)| c.id == component)
            .map(|(_, _, parent)| parent.map(|p| p.id.as_str()))
            .ok_or_else(|| ModelError::UnknownId(component.to_string()))
    }

    pub fn links_of<'a>(&'a self, component: &'a str) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.iter().filter(move |l| l.ui() == component)
    }
}

/// Free-function form of [`Application::parent_of`].
pub fn parent_of<'a>(app: &'a Application, component: &str) -> Result<Option<&'a str>, ModelError> {
    app.parent_of(component)
}
