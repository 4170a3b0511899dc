//! Ordered selections and the extension operators that grow them by
//! following layout, containment, task and functionality annotations.
//!
//! Every operator is a pure function of `(store, selection)` and returns a
//! superset of its input with the original items in their original order.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Direction;
use crate::store::{EntityKind, Predicate, Store};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("the selection is empty")]
    EmptySelection,
    #[error("no extension direction is toggled")]
    NoDirections,
    #[error("unknown {what} `{value}`")]
    BadValue { what: &'static str, value: String },
}

/// Component ids in first-selected to last-selected order, without
/// duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    items: Vec<String>,
}

impl Selection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.iter().any(|i| i == id)
    }

    pub fn first(&self) -> Option<&str> {
        self.items.first().map(String::as_str)
    }

    pub fn last(&self) -> Option<&str> {
        self.items.last().map(String::as_str)
    }

    fn push(&mut self, id: &str) {
        if !self.contains(id) {
            self.items.push(id.to_string());
        }
    }

    fn extended<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Selection {
        let mut out = self.clone();
        for id in ids {
            out.push(id);
        }
        out
    }

    fn require_nonempty(&self) -> Result<(), SelectionError> {
        if self.is_empty() {
            Err(SelectionError::EmptySelection)
        } else {
            Ok(())
        }
    }
}

impl<S: Into<String>> FromIterator<S> for Selection {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        let mut sel = Selection::new();
        for id in iter {
            sel.push(&id.into());
        }
        sel
    }
}

/// The eight direction toggles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DirectionSet([bool; 8]);

impl DirectionSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(d: Direction) -> usize {
        Direction::ALL.iter().position(|x| *x == d).expect("direction")
    }

    pub fn toggle(&mut self, d: Direction, on: bool) {
        self.0[Self::slot(d)] = on;
    }

    pub fn with(mut self, d: Direction) -> Self {
        self.toggle(d, true);
        self
    }

    pub fn contains(&self, d: Direction) -> bool {
        self.0[Self::slot(d)]
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|b| *b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Direction> + '_ {
        Direction::ALL.into_iter().filter(|d| self.contains(*d))
    }
}

impl FromIterator<Direction> for DirectionSet {
    fn from_iter<T: IntoIterator<Item = Direction>>(iter: T) -> Self {
        iter.into_iter().fold(DirectionSet::new(), DirectionSet::with)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionScope {
    First,
    Last,
    All,
}

impl FromStr for ExtensionScope {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "first" => Ok(ExtensionScope::First),
            "last" => Ok(ExtensionScope::Last),
            "all" => Ok(ExtensionScope::All),
            _ => Err(SelectionError::BadValue { what: "scope", value: s.to_string() }),
        }
    }
}

impl fmt::Display for ExtensionScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtensionScope::First => "first",
            ExtensionScope::Last => "last",
            ExtensionScope::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HelpMode {
    Tasks,
    Functionalities,
    Layout,
    Complete,
}

impl FromStr for HelpMode {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tasks" => Ok(HelpMode::Tasks),
            "functionalities" => Ok(HelpMode::Functionalities),
            "layout" => Ok(HelpMode::Layout),
            "complete" => Ok(HelpMode::Complete),
            _ => Err(SelectionError::BadValue { what: "help mode", value: s.to_string() }),
        }
    }
}

impl fmt::Display for HelpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HelpMode::Tasks => "tasks",
            HelpMode::Functionalities => "functionalities",
            HelpMode::Layout => "layout",
            HelpMode::Complete => "complete",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionSource {
    Task,
    Functionality,
    Layout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub question: String,
    /// Components not yet selected, in id order.
    pub candidates: Vec<String>,
    pub source: SuggestionSource,
    /// The task id, functionality id or direction name the suggestion follows.
    pub about: String,
}

fn require_component(store: &Store, id: &str) -> Result<(), SelectionError> {
    if store.is_kind(id, EntityKind::Component) {
        Ok(())
    } else {
        Err(SelectionError::UnknownComponent(id.to_string()))
    }
}

pub fn select(store: &Store, sel: &Selection, component: &str) -> Result<Selection, SelectionError> {
    require_component(store, component)?;
    Ok(sel.extended([component]))
}

pub fn deselect(store: &Store, sel: &Selection, component: &str) -> Result<Selection, SelectionError> {
    require_component(store, component)?;
    Ok(Selection { items: sel.items.iter().filter(|i| *i != component).cloned().collect() })
}

fn seeds(sel: &Selection, scope: ExtensionScope) -> Vec<&str> {
    match scope {
        ExtensionScope::First => sel.first().into_iter().collect(),
        ExtensionScope::Last => sel.last().into_iter().collect(),
        ExtensionScope::All => sel.items.iter().map(String::as_str).collect(),
    }
}

fn layout_candidates<'a>(store: &'a Store, seed: &str, dirs: impl IntoIterator<Item = Direction>) -> BTreeSet<&'a str> {
    dirs.into_iter()
        .flat_map(|d| store.subjects(d.into(), seed).collect::<Vec<_>>())
        .collect()
}

/// Adds every component lying in a toggled direction of each seed: `c` joins
/// when `(c, direction, seed)` holds.
pub fn extend_layout(
    store: &Store,
    sel: &Selection,
    dirs: &DirectionSet,
    scope: ExtensionScope,
) -> Result<Selection, SelectionError> {
    sel.require_nonempty()?;
    if dirs.is_empty() {
        return Err(SelectionError::NoDirections);
    }
    let mut out = sel.clone();
    for seed in seeds(sel, scope) {
        for c in layout_candidates(store, seed, dirs.iter()) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Adds the container of the last selected component.
pub fn extend_parent(store: &Store, sel: &Selection) -> Result<Selection, SelectionError> {
    let last = sel.last().ok_or(SelectionError::EmptySelection)?;
    let parent = store.subjects(Predicate::Contains, last).next();
    Ok(sel.extended(parent))
}

fn task_members<'a>(store: &'a Store, task: &str) -> BTreeSet<&'a str> {
    store.subjects(Predicate::LinkedToTask, task).collect()
}

/// Adds every component sharing a task with the last selected component.
pub fn extend_task(store: &Store, sel: &Selection) -> Result<Selection, SelectionError> {
    let last = sel.last().ok_or(SelectionError::EmptySelection)?;
    let members: BTreeSet<&str> = store
        .objects(last, Predicate::LinkedToTask)
        .flat_map(|t| task_members(store, t))
        .collect();
    Ok(sel.extended(members))
}

/// Functionalities reached from `component`, directly or through its tasks.
fn functionalities_of<'a>(store: &'a Store, component: &str) -> BTreeSet<&'a str> {
    let mut out: BTreeSet<&str> = store.objects(component, Predicate::LinkedToFunctionality).collect();
    for t in store.objects(component, Predicate::LinkedToTask) {
        out.extend(store.objects(t, Predicate::TaskUsesFunctionality));
    }
    out
}

/// Components reaching `functionality`, directly or through a task.
fn functionality_members<'a>(store: &'a Store, functionality: &str) -> BTreeSet<&'a str> {
    let mut out: BTreeSet<&str> = store.subjects(Predicate::LinkedToFunctionality, functionality).collect();
    for t in store.subjects(Predicate::TaskUsesFunctionality, functionality) {
        out.extend(store.subjects(Predicate::LinkedToTask, t));
    }
    out
}

fn reachable_functionalities<'a>(store: &'a Store, sel: &Selection) -> BTreeSet<&'a str> {
    sel.items.iter().flat_map(|c| functionalities_of(store, c)).collect()
}

/// Goes up from every selected component to its functionalities (directly
/// and via tasks) and back down to every component reaching them.
pub fn extend_functionality(store: &Store, sel: &Selection) -> Result<Selection, SelectionError> {
    sel.require_nonempty()?;
    let members: BTreeSet<&str> = reachable_functionalities(store, sel)
        .into_iter()
        .flat_map(|f| functionality_members(store, f))
        .collect();
    Ok(sel.extended(members))
}

fn fresh(sel: &Selection, ids: BTreeSet<&str>) -> Vec<String> {
    ids.into_iter().filter(|c| !sel.contains(c)).map(str::to_string).collect()
}

fn task_suggestions(store: &Store, sel: &Selection, last: &str) -> Vec<Suggestion> {
    store
        .objects(last, Predicate::LinkedToTask)
        .filter_map(|t| {
            let candidates = fresh(sel, task_members(store, t));
            (!candidates.is_empty()).then(|| Suggestion {
                question: format!(
                    "Also select the {} element(s) linked to task '{}'?",
                    candidates.len(),
                    store.name_of(t)
                ),
                candidates,
                source: SuggestionSource::Task,
                about: t.to_string(),
            })
        })
        .collect()
}

fn functionality_suggestions(store: &Store, sel: &Selection) -> Vec<Suggestion> {
    reachable_functionalities(store, sel)
        .into_iter()
        .filter_map(|f| {
            let candidates = fresh(sel, functionality_members(store, f));
            (!candidates.is_empty()).then(|| Suggestion {
                question: format!(
                    "Also select the {} element(s) linked to functionality '{}'?",
                    candidates.len(),
                    store.name_of(f)
                ),
                candidates,
                source: SuggestionSource::Functionality,
                about: f.to_string(),
            })
        })
        .collect()
}

fn layout_suggestions(store: &Store, sel: &Selection, last: &str) -> Vec<Suggestion> {
    Direction::ALL
        .into_iter()
        .filter_map(|d| {
            let candidates = fresh(sel, layout_candidates(store, last, [d]));
            (!candidates.is_empty()).then(|| Suggestion {
                question: format!("Also select the {} element(s) {} '{}'?", candidates.len(), d, last),
                candidates,
                source: SuggestionSource::Layout,
                about: d.name().to_string(),
            })
        })
        .collect()
}

/// What each extension would add, without applying anything. Suggestions
/// with no candidates are omitted.
pub fn suggest(store: &Store, sel: &Selection, mode: HelpMode) -> Result<Vec<Suggestion>, SelectionError> {
    let last = sel.last().ok_or(SelectionError::EmptySelection)?;
    Ok(match mode {
        HelpMode::Tasks => task_suggestions(store, sel, last),
        HelpMode::Functionalities => functionality_suggestions(store, sel),
        HelpMode::Layout => layout_suggestions(store, sel, last),
        HelpMode::Complete => {
            let mut all = task_suggestions(store, sel, last);
            all.extend(functionality_suggestions(store, sel));
            all.extend(layout_suggestions(store, sel, last));
            all
        }
    })
}

/// Selection after accepting a suggestion.
pub fn accept(store: &Store, sel: &Selection, suggestion: &Suggestion) -> Result<Selection, SelectionError> {
    suggestion
        .candidates
        .iter()
        .try_fold(sel.clone(), |acc, c| select(store, &acc, c))
}
