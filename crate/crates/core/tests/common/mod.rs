//! Fixtures, random generators and brute-force oracles shared by the
//! integration tests. Nothing here calls the engine code paths it is used to
//! check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use ontocompo_core::layout::{GridPos, RelativeConstraint};
use ontocompo_core::model::{
    parse_application, Application, Cell, ComponentKind, Direction, Functionality, LayoutSpec, Link, Rect,
    Screen, TaskNode, UiComponent,
};
use ontocompo_core::selection::{DirectionSet, ExtensionScope, Selection};
use ontocompo_core::store::{Binding, EntityKind, Pattern, Predicate, Store, Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture(name: &str) -> Application {
    parse_application(&fixture_text(&format!("{name}.json"))).unwrap()
}

pub fn insurance() -> Application {
    fixture("InsuranceC")
}

pub fn business_dir() -> Application {
    fixture("BusinessDir")
}

/// Component set listed in the InsuranceC manifest.
pub fn account_info_manifest() -> BTreeSet<String> {
    let v: serde_json::Value = serde_json::from_str(&fixture_text("InsuranceC.manifest.json")).unwrap();
    v["components"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_string()).collect()
}

pub fn set<'a>(items: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    items.into_iter().map(str::to_string).collect()
}

// ---------------------------------------------------------------------------
// Random valid applications
// ---------------------------------------------------------------------------

pub struct AppShape {
    pub max_components: usize,
    pub max_tasks: usize,
    pub max_functionalities: usize,
}

impl Default for AppShape {
    fn default() -> Self {
        AppShape { max_components: 30, max_tasks: 10, max_functionalities: 10 }
    }
}

const LEAF_KINDS: [ComponentKind; 6] = [
    ComponentKind::Button,
    ComponentKind::Textfield,
    ComponentKind::Label,
    ComponentKind::List,
    ComponentKind::Image,
    ComponentKind::Custom,
];

fn random_layout(rng: &mut TestRng, children: &[UiComponent]) -> Option<LayoutSpec> {
    let ids: Vec<&str> = children.iter().map(|c| c.id.as_str()).collect();
    let cols = rng.gen_range(1..=4usize);
    let mut slots: Vec<usize> = (0..ids.len() + rng.gen_range(0..3)).collect();
    slots.shuffle(rng);
    match rng.gen_range(0..4) {
        0 => {
            // one child per 100x50 cell, drawn inside the cell
            let positions = ids
                .iter()
                .zip(&slots)
                .map(|(id, slot)| {
                    let (row, col) = ((slot / cols) as i64, (slot % cols) as i64);
                    let r = Rect {
                        x: col * 100 + rng.gen_range(0..20),
                        y: row * 50 + rng.gen_range(0..10),
                        w: rng.gen_range(10..=80),
                        h: rng.gen_range(10..=40),
                    };
                    (id.to_string(), r)
                })
                .collect();
            Some(LayoutSpec::Absolute { positions })
        }
        1 => {
            let cells = ids
                .iter()
                .zip(&slots)
                .map(|(id, slot)| {
                    let (row, col) = ((slot / cols) as u32, (slot % cols) as u32 * 2);
                    (id.to_string(), Cell { row, col, row_span: 1, col_span: rng.gen_range(1..=2) })
                })
                .collect();
            Some(LayoutSpec::Table { cells })
        }
        2 => {
            let mut constraints = Vec::new();
            if ids.len() >= 2 {
                for _ in 0..rng.gen_range(0..ids.len() * 2) {
                    let s = ids[rng.gen_range(0..ids.len())];
                    let a = ids[rng.gen_range(0..ids.len())];
                    if s != a {
                        let d = Direction::ALL[rng.gen_range(0..8)];
                        constraints.push(RelativeConstraint::new(s, d, a));
                    }
                }
            }
            Some(LayoutSpec::Relative { constraints })
        }
        _ => None,
    }
}

fn attach(node: &mut UiComponent, parent: &str, child: UiComponent) -> bool {
    if node.id == parent {
        node.children.push(child);
        return true;
    }
    node.children.iter_mut().any(|c| attach(c, parent, child.clone()))
}

fn containers(node: &UiComponent, out: &mut Vec<String>) {
    if node.kind == ComponentKind::Container {
        out.push(node.id.clone());
    }
    for c in &node.children {
        containers(c, out);
    }
}

fn layouts_for(rng: &mut TestRng, node: &UiComponent, out: &mut BTreeMap<String, LayoutSpec>) {
    if node.kind == ComponentKind::Container && !node.children.is_empty() {
        if let Some(l) = random_layout(rng, &node.children) {
            out.insert(node.id.clone(), l);
        }
    }
    for c in &node.children {
        layouts_for(rng, c, out);
    }
}

/// A random application satisfying every structural invariant.
pub fn random_app(rng: &mut TestRng, id: &str, shape: &AppShape) -> Application {
    let mut app = Application::new(id, format!("Random {id}"));
    let total = rng.gen_range(1..=shape.max_components.max(1));
    let screens = rng.gen_range(1..=3usize).min(total);
    let mut made = 0;
    for s in 0..screens {
        let root_id = format!("{id}_s{s}_root");
        let mut root = UiComponent::container(&root_id, format!("screen {s}"), Vec::new());
        made += 1;
        let budget = if s + 1 == screens { total - made } else { (total - made) / (screens - s) };
        for _ in 0..budget {
            let mut parents = Vec::new();
            containers(&root, &mut parents);
            let parent = parents[rng.gen_range(0..parents.len())].clone();
            let cid = format!("{id}_c{made}");
            let child = if rng.gen_bool(0.25) {
                UiComponent::container(&cid, format!("group {made}"), Vec::new())
            } else {
                UiComponent::new(&cid, LEAF_KINDS[rng.gen_range(0..LEAF_KINDS.len())], format!("widget {made}"))
            };
            attach(&mut root, &parent, child);
            made += 1;
        }
        let mut layouts = BTreeMap::new();
        layouts_for(rng, &root, &mut layouts);
        app.screens.push(Screen { id: format!("{id}_s{s}"), name: format!("Screen {s}"), root, layouts });
    }

    let n_funcs = rng.gen_range(0..=shape.max_functionalities);
    for f in 0..n_funcs {
        app.functionalities.push(Functionality {
            id: format!("{id}_f{f}"),
            name: format!("function {f}"),
            signature: format!("f{f}()"),
        });
    }
    let n_tasks = rng.gen_range(0..=shape.max_tasks);
    for t in 0..n_tasks {
        let parent = (t > 0 && rng.gen_bool(0.6)).then(|| format!("{id}_t{}", rng.gen_range(0..t)));
        let mut funcs: BTreeSet<String> = BTreeSet::new();
        if n_funcs > 0 {
            for _ in 0..rng.gen_range(0..3) {
                funcs.insert(format!("{id}_f{}", rng.gen_range(0..n_funcs)));
            }
        }
        app.tasks.push(TaskNode {
            id: format!("{id}_t{t}"),
            name: format!("task {t}"),
            parent,
            functionalities: funcs.into_iter().collect(),
        });
    }

    let components: Vec<String> = app.components().map(|(_, c, _)| c.id.clone()).collect();
    let mut links = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=components.len() * 2) {
        let ui = components[rng.gen_range(0..components.len())].clone();
        if rng.gen_bool(0.5) && n_tasks > 0 {
            links.insert(Link::ui_task(ui, format!("{id}_t{}", rng.gen_range(0..n_tasks))));
        } else if n_funcs > 0 {
            links.insert(Link::ui_func(ui, format!("{id}_f{}", rng.gen_range(0..n_funcs))));
        }
    }
    let mut links: Vec<Link> = links.into_iter().collect();
    links.shuffle(rng);
    app.links = links;
    app
}

pub fn component_ids(app: &Application) -> Vec<String> {
    app.components().map(|(_, c, _)| c.id.clone()).collect()
}

// ---------------------------------------------------------------------------
// Random stores and patterns, with a brute-force matcher
// ---------------------------------------------------------------------------

pub fn random_store(rng: &mut TestRng) -> (Store, Vec<String>) {
    let universe: Vec<String> = (0..rng.gen_range(2..=12)).map(|i| format!("e{i}")).collect();
    let mut store = Store::new();
    for id in &universe {
        store.register(id, EntityKind::Component, id);
    }
    let target = rng.gen_range(0..=200usize);
    for _ in 0..target * 2 {
        if store.len() >= target {
            break;
        }
        let p = Predicate::ALL[rng.gen_range(0..Predicate::ALL.len())];
        if p.is_spatial() && store.len() + 2 > 200 {
            continue;
        }
        let s = &universe[rng.gen_range(0..universe.len())];
        let o = &universe[rng.gen_range(0..universe.len())];
        store.insert(Triple::new(s, p, o)).unwrap();
    }
    (store, universe)
}

pub fn random_pattern(rng: &mut TestRng, universe: &[String]) -> Pattern {
    let vars = ["a", "b", "c"];
    let n_vars = rng.gen_range(1..=3);
    let term = |rng: &mut TestRng| {
        if rng.gen_bool(0.65) {
            Term::var(vars[rng.gen_range(0..n_vars)])
        } else {
            Term::id(universe[rng.gen_range(0..universe.len())].clone())
        }
    };
    let clauses = (0..rng.gen_range(1..=3))
        .map(|_| {
            let s = term(rng);
            let o = term(rng);
            // bias towards predicates that actually occur
            let p = Predicate::ALL[rng.gen_range(0..4)];
            ontocompo_core::store::Clause::new(s, p, o)
        })
        .collect();
    Pattern::new(clauses).unwrap()
}

/// Enumerates every assignment of the pattern's variables over the universe
/// and keeps those for which each instantiated clause is a stored triple.
pub fn naive_match(store: &Store, pattern: &Pattern, universe: &[String]) -> Vec<Binding> {
    let vars: Vec<String> = pattern.variables().into_iter().map(str::to_string).collect();
    let triples: BTreeSet<(String, Predicate, String)> =
        store.iter().map(|t| (t.subject.clone(), t.predicate, t.object.clone())).collect();
    let mut out = BTreeSet::new();
    let total = universe.len().pow(vars.len() as u32);
    for mut code in 0..total {
        let mut binding = Binding::new();
        for v in &vars {
            binding.insert(v.clone(), universe[code % universe.len()].clone());
            code /= universe.len();
        }
        let value = |t: &Term| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => binding[v].clone(),
        };
        if pattern
            .clauses()
            .iter()
            .all(|c| triples.contains(&(value(&c.subject), c.predicate, value(&c.object))))
        {
            out.insert(binding.clone());
        }
    }
    out.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Brute-force selection extensions: linear scans over the triple list
// ---------------------------------------------------------------------------

fn scan<'a>(triples: &'a [Triple], p: Predicate) -> impl Iterator<Item = &'a Triple> + 'a {
    triples.iter().filter(move |t| t.predicate == p)
}

fn append_sorted(sel: &Selection, ids: BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = sel.items().to_vec();
    for id in ids {
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out
}

pub fn naive_layout(triples: &[Triple], sel: &Selection, dirs: &DirectionSet, scope: ExtensionScope) -> Vec<String> {
    let seeds: Vec<String> = match scope {
        ExtensionScope::First => sel.items().iter().take(1).cloned().collect(),
        ExtensionScope::Last => sel.items().iter().rev().take(1).cloned().collect(),
        ExtensionScope::All => sel.items().to_vec(),
    };
    let mut out: Vec<String> = sel.items().to_vec();
    for seed in seeds {
        let mut found = BTreeSet::new();
        for t in triples {
            if t.object == seed && t.predicate.direction().is_some_and(|d| dirs.contains(d)) {
                found.insert(t.subject.clone());
            }
        }
        for id in found {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}

pub fn naive_parent(triples: &[Triple], sel: &Selection) -> Vec<String> {
    let last = sel.items().last().unwrap();
    let parents: BTreeSet<String> =
        scan(triples, Predicate::Contains).filter(|t| &t.object == last).map(|t| t.subject.clone()).collect();
    append_sorted(sel, parents)
}

pub fn naive_task(triples: &[Triple], sel: &Selection) -> Vec<String> {
    let last = sel.items().last().unwrap();
    let tasks: BTreeSet<&String> =
        scan(triples, Predicate::LinkedToTask).filter(|t| &t.subject == last).map(|t| &t.object).collect();
    let members = scan(triples, Predicate::LinkedToTask)
        .filter(|t| tasks.contains(&t.object))
        .map(|t| t.subject.clone())
        .collect();
    append_sorted(sel, members)
}

pub fn naive_functionality(triples: &[Triple], sel: &Selection) -> Vec<String> {
    let selected: BTreeSet<&String> = sel.items().iter().collect();
    let mut funcs: BTreeSet<&String> = BTreeSet::new();
    for t in scan(triples, Predicate::LinkedToFunctionality) {
        if selected.contains(&t.subject) {
            funcs.insert(&t.object);
        }
    }
    for link in scan(triples, Predicate::LinkedToTask) {
        if selected.contains(&link.subject) {
            for uses in scan(triples, Predicate::TaskUsesFunctionality) {
                if uses.subject == link.object {
                    funcs.insert(&uses.object);
                }
            }
        }
    }
    let mut members = BTreeSet::new();
    for t in scan(triples, Predicate::LinkedToFunctionality) {
        if funcs.contains(&t.object) {
            members.insert(t.subject.clone());
        }
    }
    for uses in scan(triples, Predicate::TaskUsesFunctionality) {
        if funcs.contains(&uses.object) {
            for link in scan(triples, Predicate::LinkedToTask) {
                if link.object == uses.subject {
                    members.insert(link.subject.clone());
                }
            }
        }
    }
    append_sorted(sel, members)
}

// ---------------------------------------------------------------------------
// Random constraint sets
// ---------------------------------------------------------------------------

/// A constraint set that holds in a random witness placement, hence
/// consistent.
pub fn random_consistent_constraints(rng: &mut TestRng) -> (BTreeSet<String>, Vec<RelativeConstraint>) {
    let n = rng.gen_range(1..=12usize);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let side = rng.gen_range(2..=5u32);
    let mut cells: Vec<(u32, u32)> = (0..side * side).map(|i| (i / side, i % side)).collect();
    // grids smaller than n get extra rows
    while cells.len() < n {
        let r = cells.len() as u32 / side;
        cells.extend((0..side).map(|c| (r, c)));
    }
    cells.shuffle(rng);
    let witness: BTreeMap<&str, GridPos> =
        ids.iter().zip(&cells).map(|(id, &(row, col))| (id.as_str(), GridPos { row, col })).collect();
    let mut constraints = Vec::new();
    if n >= 2 {
        for _ in 0..rng.gen_range(0..=20) {
            let s = &ids[rng.gen_range(0..n)];
            let a = &ids[rng.gen_range(0..n)];
            if s == a {
                continue;
            }
            let (ps, pa) = (witness[s.as_str()], witness[a.as_str()]);
            let dx = (ps.col as i64 - pa.col as i64).signum() as i32;
            let dy = (ps.row as i64 - pa.row as i64).signum() as i32;
            let d = Direction::from_signs(dx, dy).expect("distinct cells");
            constraints.push(RelativeConstraint::new(s.clone(), d, a.clone()));
        }
    }
    (ids.into_iter().collect(), constraints)
}

/// Adds a contradiction: the reverse of an existing constraint, or, with no
/// constraint to reverse, a two-element cycle.
pub fn inject_contradiction(rng: &mut TestRng, ids: &BTreeSet<String>, constraints: &mut Vec<RelativeConstraint>) {
    if !constraints.is_empty() && rng.gen_bool(0.7) {
        let c = constraints[rng.gen_range(0..constraints.len())].clone();
        let twisted = match rng.gen_range(0..3) {
            // same relation, roles swapped
            0 => RelativeConstraint::new(c.anchor.clone(), c.relation, c.subject.clone()),
            // same pair, opposite relation on the same roles
            1 => RelativeConstraint::new(c.subject.clone(), c.relation.inverse(), c.anchor.clone()),
            // self anchor
            _ => RelativeConstraint::new(c.subject.clone(), c.relation, c.subject.clone()),
        };
        constraints.push(twisted);
    } else {
        let list: Vec<&String> = ids.iter().collect();
        let a = list[0].clone();
        let b = if list.len() > 1 { list[1].clone() } else { a.clone() };
        let d = Direction::ALL[rng.gen_range(0..8)];
        constraints.push(RelativeConstraint::new(a.clone(), d, b.clone()));
        constraints.push(RelativeConstraint::new(b, d, a));
    }
}
