//! Semantic annotations over loaded applications.
//!
//! The store holds `(subject, predicate, object)` facts over a fixed
//! vocabulary, indexed by subject, object and predicate, and answers
//! conjunctive patterns. Spatial facts are kept closed under their inverses:
//! inserting `(a onTheRightOf b)` also records `(b onTheLeftOf a)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout;
use crate::model::{Application, Direction, Link, RelativeConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Predicate {
    Contains,
    OnTheLeftOf,
    OnTheRightOf,
    Above,
    Below,
    AboveLeft,
    AboveRight,
    BelowLeft,
    BelowRight,
    LinkedToTask,
    LinkedToFunctionality,
    TaskUsesFunctionality,
    SubTaskOf,
    BelongsToScreen,
    BelongsToApp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EntityKind {
    Application,
    Screen,
    Component,
    Task,
    Functionality,
}

impl Predicate {
    pub const ALL: [Predicate; 15] = [
        Predicate::Contains,
        Predicate::OnTheLeftOf,
        Predicate::OnTheRightOf,
        Predicate::Above,
        Predicate::Below,
        Predicate::AboveLeft,
        Predicate::AboveRight,
        Predicate::BelowLeft,
        Predicate::BelowRight,
        Predicate::LinkedToTask,
        Predicate::LinkedToFunctionality,
        Predicate::TaskUsesFunctionality,
        Predicate::SubTaskOf,
        Predicate::BelongsToScreen,
        Predicate::BelongsToApp,
    ];

    pub fn direction(self) -> Option<Direction> {
        Some(match self {
            Predicate::OnTheLeftOf => Direction::Left,
            Predicate::OnTheRightOf => Direction::Right,
            Predicate::Above => Direction::Above,
            Predicate::Below => Direction::Below,
            Predicate::AboveLeft => Direction::AboveLeft,
            Predicate::AboveRight => Direction::AboveRight,
            Predicate::BelowLeft => Direction::BelowLeft,
            Predicate::BelowRight => Direction::BelowRight,
            _ => return None,
        })
    }

    pub fn is_spatial(self) -> bool {
        self.direction().is_some()
    }

    /// The inverse of a spatial predicate; `None` for the rest.
    pub fn inverse(self) -> Option<Predicate> {
        self.direction().map(|d| Predicate::from(d.inverse()))
    }

    /// Entity kinds required of (subject, object).
    pub fn signature(self) -> (EntityKind, EntityKind) {
        use EntityKind::*;
        match self {
            Predicate::LinkedToTask => (Component, Task),
            Predicate::LinkedToFunctionality => (Component, Functionality),
            Predicate::TaskUsesFunctionality => (Task, Functionality),
            Predicate::SubTaskOf => (Task, Task),
            Predicate::BelongsToScreen => (Component, Screen),
            Predicate::BelongsToApp => (Component, Application),
            _ => (Component, Component),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Contains => "contains",
            Predicate::LinkedToTask => "linkedToTask",
            Predicate::LinkedToFunctionality => "linkedToFunctionality",
            Predicate::TaskUsesFunctionality => "taskUsesFunctionality",
            Predicate::SubTaskOf => "subTaskOf",
            Predicate::BelongsToScreen => "belongsToScreen",
            Predicate::BelongsToApp => "belongsToApp",
            spatial => spatial.direction().expect("spatial").name(),
        }
    }
}

impl From<Direction> for Predicate {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Left => Predicate::OnTheLeftOf,
            Direction::Right => Predicate::OnTheRightOf,
            Direction::Above => Predicate::Above,
            Direction::Below => Predicate::Below,
            Direction::AboveLeft => Predicate::AboveLeft,
            Direction::AboveRight => Predicate::AboveRight,
            Direction::BelowLeft => Predicate::BelowLeft,
            Direction::BelowRight => Predicate::BelowRight,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predicate {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Predicate::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| StoreError::UnknownPredicate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: Predicate, object: impl Into<String>) -> Self {
        Triple { subject: subject.into(), predicate, object: object.into() }
    }

    pub fn inverse(&self) -> Option<Triple> {
        self.predicate
            .inverse()
            .map(|p| Triple::new(self.object.clone(), p, self.subject.clone()))
    }
}

impl From<RelativeConstraint> for Triple {
    fn from(c: RelativeConstraint) -> Self {
        Triple::new(c.subject, c.relation.into(), c.anchor)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("duplicate application id `{0}`")]
    DuplicateApplication(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("a pattern needs at least one clause")]
    EmptyPattern,
    #[error("malformed pattern clause `{0}`")]
    MalformedClause(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub kinds: BTreeSet<EntityKind>,
    pub name: String,
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    triples: BTreeSet<Triple>,
    by_subject: HashMap<String, BTreeSet<(Predicate, String)>>,
    by_object: HashMap<String, BTreeSet<(Predicate, String)>>,
    by_predicate: HashMap<Predicate, BTreeSet<(String, String)>>,
    entities: BTreeMap<String, Entity>,
}

impl PartialEq for Store {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples && self.entities == other.entities
    }
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares an entity. Re-registering an id merges its kinds; the first
    /// non-empty name wins.
    pub fn register(&mut self, id: impl Into<String>, kind: EntityKind, name: impl Into<String>) {
        let name = name.into();
        let entry = self
            .entities
            .entry(id.into())
            .or_insert_with(|| Entity { kinds: BTreeSet::new(), name: String::new() });
        entry.kinds.insert(kind);
        if entry.name.is_empty() {
            entry.name = name;
        }
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&str, &Entity)> {
        self.entities.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_kind(&self, id: &str, kind: EntityKind) -> bool {
        self.entities.get(id).is_some_and(|e| e.kinds.contains(&kind))
    }

    /// Display name of an entity, falling back to its id.
    pub fn name_of<'a>(&'a self, id: &'a str) -> &'a str {
        match self.entities.get(id) {
            Some(e) if !e.name.is_empty() => &e.name,
            _ => id,
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// All triples in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    /// Adds a triple (and its spatial inverse). Returns whether anything
    /// changed.
    pub fn insert(&mut self, t: Triple) -> Result<bool, StoreError> {
        self.check_known(&t)?;
        let inverse = t.inverse();
        let mut changed = self.insert_raw(t);
        if let Some(inv) = inverse {
            changed |= self.insert_raw(inv);
        }
        Ok(changed)
    }

    /// Removes a triple (and its spatial inverse). Returns whether anything
    /// changed.
    pub fn remove(&mut self, t: &Triple) -> Result<bool, StoreError> {
        self.check_known(t)?;
        let mut changed = self.remove_raw(t);
        if let Some(inv) = t.inverse() {
            changed |= self.remove_raw(&inv);
        }
        Ok(changed)
    }

    fn check_known(&self, t: &Triple) -> Result<(), StoreError> {
        for id in [&t.subject, &t.object] {
            if !self.entities.contains_key(id) {
                return Err(StoreError::UnknownEntity(id.clone()));
            }
        }
        Ok(())
    }

    fn insert_raw(&mut self, t: Triple) -> bool {
        if self.triples.contains(&t) {
            return false;
        }
        self.by_subject
            .entry(t.subject.clone())
            .or_default()
            .insert((t.predicate, t.object.clone()));
        self.by_object
            .entry(t.object.clone())
            .or_default()
            .insert((t.predicate, t.subject.clone()));
        self.by_predicate
            .entry(t.predicate)
            .or_default()
            .insert((t.subject.clone(), t.object.clone()));
        self.triples.insert(t)
    }

    fn remove_raw(&mut self, t: &Triple) -> bool {
        if !self.triples.remove(t) {
            return false;
        }
        if let Some(set) = self.by_subject.get_mut(&t.subject) {
            set.remove(&(t.predicate, t.object.clone()));
        }
        if let Some(set) = self.by_object.get_mut(&t.object) {
            set.remove(&(t.predicate, t.subject.clone()));
        }
        if let Some(set) = self.by_predicate.get_mut(&t.predicate) {
            set.remove(&(t.subject.clone(), t.object.clone()));
        }
        true
    }

    /// Subjects `s` with `(s, predicate, object)`, in id order.
    pub fn subjects<'a>(&'a self, predicate: Predicate, object: &str) -> impl Iterator<Item = &'a str> + 'a {
        self.by_object
            .get(object)
            .into_iter()
            .flat_map(move |set| set.range((predicate, String::new())..))
            .take_while(move |(p, _)| *p == predicate)
            .map(|(_, s)| s.as_str())
    }

    /// Objects `o` with `(subject, predicate, o)`, in id order.
    pub fn objects<'a>(&'a self, subject: &str, predicate: Predicate) -> impl Iterator<Item = &'a str> + 'a {
        self.by_subject
            .get(subject)
            .into_iter()
            .flat_map(move |set| set.range((predicate, String::new())..))
            .take_while(move |(p, _)| *p == predicate)
            .map(|(_, o)| o.as_str())
    }

    /// One triple per line, `subject<TAB>predicate<TAB>object`, sorted.
    pub fn dump(&self) -> String {
        let mut lines: Vec<String> = self.triples.iter().map(|t| t.to_string()).collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }

    /// Every variable assignment satisfying all clauses, sorted and
    /// duplicate-free.
    pub fn match_pattern(&self, pattern: &Pattern) -> Vec<Binding> {
        let mut results = BTreeSet::new();
        let mut binding = Binding::new();
        let mut remaining: Vec<&Clause> = pattern.clauses.iter().collect();
        self.solve(&mut remaining, &mut binding, &mut results);
        results.into_iter().collect()
    }

    fn solve(&self, remaining: &mut Vec<&Clause>, binding: &mut Binding, out: &mut BTreeSet<Binding>) {
        if remaining.is_empty() {
            out.insert(binding.clone());
            return;
        }
        // Most-bound clause first.
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.bound_count(binding)))
            .max_by_key(|&(i, n)| (n, std::cmp::Reverse(i)))
            .expect("nonempty");
        let clause = remaining.remove(idx);
        let subject = clause.subject.resolve(binding).map(str::to_string);
        let object = clause.object.resolve(binding).map(str::to_string);
        let p = clause.predicate;

        let candidates: Vec<(String, String)> = match (&subject, &object) {
            (Some(s), Some(o)) => {
                if self.contains(&Triple::new(s.clone(), p, o.clone())) {
                    vec![(s.clone(), o.clone())]
                } else {
                    vec![]
                }
            }
            (Some(s), None) => self.objects(s, p).map(|o| (s.clone(), o.to_string())).collect(),
            (None, Some(o)) => self.subjects(p, o).map(|s| (s.to_string(), o.clone())).collect(),
            (None, None) => self
                .by_predicate
                .get(&p)
                .map(|set| set.iter().cloned().collect())
                .unwrap_or_default(),
        };

        for (s, o) in candidates {
            let mut added = Vec::new();
            if bind(&clause.subject, &s, binding, &mut added) && bind(&clause.object, &o, binding, &mut added) {
                self.solve(remaining, binding, out);
            }
            for var in added {
                binding.remove(&var);
            }
        }
        remaining.insert(idx, clause);
    }
}

fn bind(term: &Term, value: &str, binding: &mut Binding, added: &mut Vec<String>) -> bool {
    match term {
        Term::Const(c) => c == value,
        Term::Var(v) => match binding.get(v) {
            Some(existing) => existing == value,
            None => {
                binding.insert(v.clone(), value.to_string());
                added.push(v.clone());
                true
            }
        },
    }
}

pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn id(id: impl Into<String>) -> Self {
        Term::Const(id.into())
    }

    fn resolve<'a>(&'a self, binding: &'a Binding) -> Option<&'a str> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(v) => binding.get(v).map(String::as_str),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    pub subject: Term,
    pub predicate: Predicate,
    pub object: Term,
}

impl Clause {
    pub fn new(subject: Term, predicate: Predicate, object: Term) -> Self {
        Clause { subject, predicate, object }
    }

    fn bound_count(&self, binding: &Binding) -> usize {
        [&self.subject, &self.object]
            .into_iter()
            .filter(|t| t.resolve(binding).is_some())
            .count()
    }
}

/// A conjunction of clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    clauses: Vec<Clause>,
}

impl Pattern {
    pub fn new(clauses: Vec<Clause>) -> Result<Self, StoreError> {
        if clauses.is_empty() {
            return Err(StoreError::EmptyPattern);
        }
        Ok(Pattern { clauses })
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.clauses
            .iter()
            .flat_map(|c| [&c.subject, &c.object])
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.as_str()),
                Term::Const(_) => None,
            })
            .collect()
    }
}

impl FromStr for Pattern {
    type Err = StoreError;

    /// `?x onTheRightOf Input ; ?x linkedToTask ?t` — clauses separated by
    /// `;`, variables prefixed with `?`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let term = |t: &str| match t.strip_prefix('?') {
            Some(v) => Term::Var(v.to_string()),
            None => Term::Const(t.to_string()),
        };
        let clauses = s
            .split(';')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(|c| {
                let parts: Vec<&str> = c.split_whitespace().collect();
                match parts.as_slice() {
                    [s, p, o] => Ok(Clause::new(term(s), p.parse()?, term(o))),
                    _ => Err(StoreError::MalformedClause(c.to_string())),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Pattern::new(clauses)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| format!("{} {} {}", c.subject, c.predicate, c.object))
            .collect();
        f.write_str(&parts.join(" ; "))
    }
}

/// Derives the full annotation set of a group of applications.
pub fn build_store(apps: &[&Application]) -> Result<Store, StoreError> {
    let mut store = Store::new();
    let mut seen = BTreeSet::new();
    for app in apps {
        if !seen.insert(app.id.as_str()) {
            return Err(StoreError::DuplicateApplication(app.id.clone()));
        }
    }
    for app in apps {
        store.register(&app.id, EntityKind::Application, &app.name);
        for screen in &app.screens {
            store.register(&screen.id, EntityKind::Screen, &screen.name);
        }
        for (_, c, _) in app.components() {
            store.register(&c.id, EntityKind::Component, &c.label);
        }
        for t in &app.tasks {
            store.register(&t.id, EntityKind::Task, &t.name);
        }
        for f in &app.functionalities {
            store.register(&f.id, EntityKind::Functionality, &f.name);
        }
    }
    for app in apps {
        for screen in &app.screens {
            for (c, parent) in screen.root.walk() {
                store.insert(Triple::new(&c.id, Predicate::BelongsToScreen, &screen.id))?;
                store.insert(Triple::new(&c.id, Predicate::BelongsToApp, &app.id))?;
                if let Some(p) = parent {
                    store.insert(Triple::new(&p.id, Predicate::Contains, &c.id))?;
                }
                if c.is_container() && !c.children.is_empty() {
                    for rel in layout::derive_relations(&c.children, &screen.layout_of(&c.id)) {
                        store.insert(rel.into())?;
                    }
                }
            }
        }
        for t in &app.tasks {
            if let Some(p) = &t.parent {
                store.insert(Triple::new(&t.id, Predicate::SubTaskOf, p))?;
            }
            for f in &t.functionalities {
                store.insert(Triple::new(&t.id, Predicate::TaskUsesFunctionality, f))?;
            }
        }
        for link in &app.links {
            let t = match link {
                Link::UiTask(l) => Triple::new(&l.ui, Predicate::LinkedToTask, &l.task),
                Link::UiFunc(l) => Triple::new(&l.ui, Predicate::LinkedToFunctionality, &l.functionality),
            };
            store.insert(t)?;
        }
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc_store() -> Store {
        let mut s = Store::new();
        for id in ["A", "B", "C"] {
            s.register(id, EntityKind::Component, id);
        }
        s
    }

    #[test]
    fn insert_adds_inverse() {
        let mut s = abc_store();
        assert!(s.insert(Triple::new("A", Predicate::OnTheRightOf, "B")).unwrap());
        assert!(s.contains(&Triple::new("B", Predicate::OnTheLeftOf, "A")));
        assert_eq!(s.len(), 2);
        assert!(!s.insert(Triple::new("A", Predicate::OnTheRightOf, "B")).unwrap());
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn remove_drops_inverse() {
        let mut s = abc_store();
        s.insert(Triple::new("A", Predicate::OnTheRightOf, "B")).unwrap();
        assert!(s.remove(&Triple::new("A", Predicate::OnTheRightOf, "B")).unwrap());
        assert!(s.is_empty());
        assert_eq!(s.subjects(Predicate::OnTheLeftOf, "A").count(), 0);
    }

    #[test]
    fn unknown_entity_rejected() {
        let mut s = abc_store();
        assert_eq!(
            s.insert(Triple::new("A", Predicate::Contains, "Z")),
            Err(StoreError::UnknownEntity("Z".into()))
        );
    }

    #[test]
    fn non_spatial_has_no_inverse() {
        let mut s = abc_store();
        s.insert(Triple::new("A", Predicate::Contains, "B")).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn empty_store_matches_nothing() {
        let s = Store::new();
        let p: Pattern = "?x onTheRightOf ?y".parse().unwrap();
        assert!(s.match_pattern(&p).is_empty());
    }

    #[test]
    fn repeated_variable_and_sorting() {
        let mut s = abc_store();
        s.insert(Triple::new("A", Predicate::Contains, "A")).unwrap();
        s.insert(Triple::new("B", Predicate::Contains, "C")).unwrap();
        s.insert(Triple::new("A", Predicate::Contains, "C")).unwrap();
        let p: Pattern = "?x contains ?x".parse().unwrap();
        let r = s.match_pattern(&p);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0]["x"], "A");

        let p: Pattern = "?x contains C".parse().unwrap();
        let xs: Vec<String> = s.match_pattern(&p).into_iter().map(|b| b["x"].clone()).collect();
        assert_eq!(xs, vec!["A", "B"]);
    }

    #[test]
    fn ground_pattern() {
        let mut s = abc_store();
        s.insert(Triple::new("A", Predicate::Contains, "B")).unwrap();
        assert_eq!(s.match_pattern(&"A contains B".parse().unwrap()), vec![Binding::new()]);
        assert!(s.match_pattern(&"B contains A".parse().unwrap()).is_empty());
    }

    #[test]
    fn pattern_parsing_errors() {
        assert_eq!("".parse::<Pattern>(), Err(StoreError::EmptyPattern));
        assert!(matches!("?x nearby ?y".parse::<Pattern>(), Err(StoreError::UnknownPredicate(_))));
        assert!(matches!("?x contains".parse::<Pattern>(), Err(StoreError::MalformedClause(_))));
    }

    #[test]
    fn dump_format() {
        let mut s = abc_store();
        s.insert(Triple::new("B", Predicate::OnTheRightOf, "A")).unwrap();
        assert_eq!(s.dump(), "A\tonTheLeftOf\tB\nB\tonTheRightOf\tA\n");
    }

    #[test]
    fn predicate_names_round_trip() {
        for p in Predicate::ALL {
            assert_eq!(p.name().parse::<Predicate>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
    }
}
