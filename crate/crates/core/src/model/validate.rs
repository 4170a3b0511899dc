use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use super::{Application, LayoutSpec, Link, Screen, UiComponent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateId { id: String },
    DanglingReference { id: String, context: String },
    ChildrenOnNonContainer { id: String },
    LayoutOnNonContainer { id: String },
    MissingPlacement { container: String, child: String },
    NotAChild { container: String, id: String },
    InvalidRect { id: String },
    InvalidSpan { id: String },
    Overlap { first: String, second: String },
    CellOverlap { first: String, second: String },
    SelfConstraint { id: String },
    TaskCycle { members: Vec<String> },
    DuplicateLink { ui: String, target: String },
}

impl Violation {
    fn new(kind: ViolationKind) -> Self {
        Violation { kind }
    }

    /// Every id the report names.
    pub fn ids(&self) -> Vec<&str> {
        use ViolationKind::*;
        match &self.kind {
            DuplicateId { id }
            | DanglingReference { id, .. }
            | ChildrenOnNonContainer { id }
            | LayoutOnNonContainer { id }
            | InvalidRect { id }
            | InvalidSpan { id }
            | SelfConstraint { id } => vec![id],
            MissingPlacement { container, child } => vec![container, child],
            NotAChild { container, id } => vec![container, id],
            Overlap { first, second } | CellOverlap { first, second } => vec![first, second],
            TaskCycle { members } => members.iter().map(String::as_str).collect(),
            DuplicateLink { ui, target } => vec![ui, target],
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        match &self.kind {
            DuplicateId { id } => write!(f, "duplicate id `{id}`"),
            DanglingReference { id, context } => write!(f, "dangling reference `{id}` ({context})"),
            ChildrenOnNonContainer { id } => write!(f, "non-container `{id}` has children"),
            LayoutOnNonContainer { id } => write!(f, "layout declared for non-container `{id}`"),
            MissingPlacement { container, child } => {
                write!(f, "child `{child}` of `{container}` has no placement")
            }
            NotAChild { container, id } => {
                write!(f, "`{id}` is laid out in `{container}` but is not its child")
            }
            InvalidRect { id } => write!(f, "rectangle of `{id}` has non-positive size"),
            InvalidSpan { id } => write!(f, "cell of `{id}` has a span below 1"),
            Overlap { first, second } => write!(f, "rectangles of `{first}` and `{second}` overlap"),
            CellOverlap { first, second } => write!(f, "cells of `{first}` and `{second}` overlap"),
            SelfConstraint { id } => write!(f, "`{id}` is constrained relative to itself"),
            TaskCycle { members } => write!(f, "task parent cycle through {}", members.join(", ")),
            DuplicateLink { ui, target } => write!(f, "duplicate link `{ui}` -> `{target}`"),
        }
    }
}

/// Checks every structural invariant; an empty result means the application
/// is valid. Each broken invariant is reported once.
pub fn validate(app: &Application) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut components: HashSet<&str> = HashSet::new();
    for screen in &app.screens {
        *counts.entry(&screen.id).or_default() += 1;
        for (c, _) in screen.root.walk() {
            *counts.entry(&c.id).or_default() += 1;
            components.insert(&c.id);
        }
    }
    let tasks: HashMap<&str, &super::TaskNode> = app.tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let functionalities: HashSet<&str> = app.functionalities.iter().map(|f| f.id.as_str()).collect();
    for t in &app.tasks {
        *counts.entry(&t.id).or_default() += 1;
    }
    for f in &app.functionalities {
        *counts.entry(&f.id).or_default() += 1;
    }
    for (id, n) in counts {
        if n > 1 {
            out.push(Violation::new(ViolationKind::DuplicateId { id: id.to_string() }));
        }
    }

    for screen in &app.screens {
        check_screen(screen, &mut out);
    }

    check_tasks(app, &tasks, &functionalities, &mut out);

    let mut seen_links = HashSet::new();
    for link in &app.links {
        if !components.contains(link.ui()) {
            out.push(dangling(link.ui(), "link UI endpoint is not a component"));
        }
        match link {
            Link::UiTask(l) if !tasks.contains_key(l.task.as_str()) => {
                out.push(dangling(&l.task, "link target is not a task"));
            }
            Link::UiFunc(l) if !functionalities.contains(l.functionality.as_str()) => {
                out.push(dangling(&l.functionality, "link target is not a functionality"));
            }
            _ => {}
        }
        if !seen_links.insert(link) {
            let target = match link {
                Link::UiTask(l) => l.task.clone(),
                Link::UiFunc(l) => l.functionality.clone(),
            };
            out.push(Violation::new(ViolationKind::DuplicateLink { ui: link.ui().to_string(), target }));
        }
    }

    out
}

fn dangling(id: &str, context: &str) -> Violation {
    Violation::new(ViolationKind::DanglingReference { id: id.to_string(), context: context.to_string() })
}

fn check_screen(screen: &Screen, out: &mut Vec<Violation>) {
    let nodes: Vec<(&UiComponent, Option<&UiComponent>)> = screen.root.walk();
    for (c, _) in &nodes {
        if !c.is_container() && !c.children.is_empty() {
            out.push(Violation::new(ViolationKind::ChildrenOnNonContainer { id: c.id.clone() }));
        }
    }

    for (key, layout) in &screen.layouts {
        let Some(container) = screen.root.find(key) else {
            out.push(dangling(key, &format!("layout key in screen `{}`", screen.id)));
            continue;
        };
        if !container.is_container() {
            out.push(Violation::new(ViolationKind::LayoutOnNonContainer { id: key.clone() }));
            continue;
        }
        check_layout(container, layout, out);
    }
}

fn check_layout(container: &UiComponent, layout: &LayoutSpec, out: &mut Vec<Violation>) {
    let children: BTreeSet<&str> = container.children.iter().map(|c| c.id.as_str()).collect();
    let not_a_child = |id: &str| {
        Violation::new(ViolationKind::NotAChild { container: container.id.clone(), id: id.to_string() })
    };
    let missing = |child: &str| {
        Violation::new(ViolationKind::MissingPlacement {
            container: container.id.clone(),
            child: child.to_string(),
        })
    };
    match layout {
        LayoutSpec::Absolute { positions } => {
            for id in positions.keys() {
                if !children.contains(id.as_str()) {
                    out.push(not_a_child(id));
                }
            }
            for child in &children {
                if !positions.contains_key(*child) {
                    out.push(missing(child));
                }
            }
            let placed: Vec<(&String, _)> =
                positions.iter().filter(|(id, _)| children.contains(id.as_str())).collect();
            for (id, r) in &placed {
                if r.w <= 0 || r.h <= 0 {
                    out.push(Violation::new(ViolationKind::InvalidRect { id: (*id).clone() }));
                }
            }
            for (i, (a, ra)) in placed.iter().enumerate() {
                for (b, rb) in &placed[i + 1..] {
                    if ra.w > 0 && ra.h > 0 && rb.w > 0 && rb.h > 0 && ra.overlaps(rb) {
                        out.push(Violation::new(ViolationKind::Overlap {
                            first: (*a).clone(),
                            second: (*b).clone(),
                        }));
                    }
                }
            }
        }
        LayoutSpec::Table { cells } => {
            for id in cells.keys() {
                if !children.contains(id.as_str()) {
                    out.push(not_a_child(id));
                }
            }
            for child in &children {
                if !cells.contains_key(*child) {
                    out.push(missing(child));
                }
            }
            let placed: Vec<(&String, _)> =
                cells.iter().filter(|(id, _)| children.contains(id.as_str())).collect();
            for (id, c) in &placed {
                if c.row_span < 1 || c.col_span < 1 {
                    out.push(Violation::new(ViolationKind::InvalidSpan { id: (*id).clone() }));
                }
            }
            for (i, (a, ca)) in placed.iter().enumerate() {
                for (b, cb) in &placed[i + 1..] {
                    let valid = ca.row_span >= 1 && ca.col_span >= 1 && cb.row_span >= 1 && cb.col_span >= 1;
                    if valid && ca.as_rect().overlaps(&cb.as_rect()) {
                        out.push(Violation::new(ViolationKind::CellOverlap {
                            first: (*a).clone(),
                            second: (*b).clone(),
                        }));
                    }
                }
            }
        }
        LayoutSpec::Relative { constraints } => {
            let mut reported = BTreeSet::new();
            for c in constraints {
                if c.subject == c.anchor {
                    if reported.insert(("self", c.subject.clone())) {
                        out.push(Violation::new(ViolationKind::SelfConstraint { id: c.subject.clone() }));
                    }
                    continue;
                }
                for id in [&c.subject, &c.anchor] {
                    if !children.contains(id.as_str()) && reported.insert(("child", id.clone())) {
                        out.push(not_a_child(id));
                    }
                }
            }
        }
    }
}

fn check_tasks(
    app: &Application,
    tasks: &HashMap<&str, &super::TaskNode>,
    functionalities: &HashSet<&str>,
    out: &mut Vec<Violation>,
) {
    for t in &app.tasks {
        if let Some(parent) = &t.parent {
            if !tasks.contains_key(parent.as_str()) {
                out.push(dangling(parent, &format!("parent of task `{}`", t.id)));
            }
        }
        for f in &t.functionalities {
            if !functionalities.contains(f.as_str()) {
                out.push(dangling(f, &format!("functionality of task `{}`", t.id)));
            }
        }
    }

    // Each cycle is reported once, by its sorted member set.
    let mut cycles: BTreeSet<Vec<String>> = BTreeSet::new();
    for t in &app.tasks {
        let mut path: Vec<&str> = Vec::new();
        let mut cur = t.id.as_str();
        loop {
            if let Some(pos) = path.iter().position(|p| *p == cur) {
                let mut members: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
                members.sort();
                cycles.insert(members);
                break;
            }
            path.push(cur);
            match tasks.get(cur).and_then(|n| n.parent.as_deref()) {
                Some(p) if tasks.contains_key(p) => cur = p,
                _ => break,
            }
        }
    }
    for members in cycles {
        out.push(Violation::new(ViolationKind::TaskCycle { members }));
    }
}
