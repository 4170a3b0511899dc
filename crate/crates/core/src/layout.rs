//! Spatial relations between sibling components.
//!
//! Three directions of travel live here: deriving relations from the
//! absolute, table and relative layout models; checking a set of relative
//! constraints for consistency; and solving a consistent set onto an
//! abstract `(row, col)` grid.
//!
//! Grid semantics used by the solver: `onTheRightOf` puts the subject in the
//! same row and a greater column, `below` in the same column and a greater
//! row, and the diagonals require strict order on both axes. Rows grow
//! downwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cell, Direction, LayoutSpec, Rect, UiComponent};

pub use crate::model::RelativeConstraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Conflict {
    /// A component is related to itself.
    SelfAnchor { id: String },
    /// The strict order on one axis contains a cycle through these components.
    Cycle { axis: Axis, members: Vec<String> },
    /// Two components are forced into the same row and the same column.
    CellCollision { first: String, second: String },
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conflict::SelfAnchor { id } => write!(f, "`{id}` is positioned relative to itself"),
            Conflict::Cycle { axis, members } => {
                let axis = match axis {
                    Axis::Horizontal => "horizontal",
                    Axis::Vertical => "vertical",
                };
                write!(f, "{axis} cycle through {}", members.join(", "))
            }
            Conflict::CellCollision { first, second } => {
                write!(f, "`{first}` and `{second}` are forced into the same cell")
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("`{0}` cannot be positioned relative to itself")]
    SelfAnchor(String),
    #[error("inconsistent constraints: {}", .0.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "))]
    Inconsistent(Vec<Conflict>),
    #[error("constraint endpoint `{0}` is not among the components being placed")]
    UnknownComponent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub row: u32,
    pub col: u32,
}

/// Solved grid positions, one distinct cell per component.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Placement(pub BTreeMap<String, GridPos>);

impl Placement {
    pub fn get(&self, id: &str) -> Option<GridPos> {
        self.0.get(id).copied()
    }

    /// Whether `c` holds under the grid semantics.
    pub fn satisfies(&self, c: &RelativeConstraint) -> bool {
        let (Some(s), Some(a)) = (self.get(&c.subject), self.get(&c.anchor)) else {
            return false;
        };
        let sign = |x: u32, y: u32| (x as i64 - y as i64).signum() as i32;
        sign(s.col, a.col) == c.relation.dx() && sign(s.row, a.row) == c.relation.dy()
    }

    /// Table layout with unit spans.
    pub fn to_table(&self) -> LayoutSpec {
        LayoutSpec::Table {
            cells: self.0.iter().map(|(id, p)| (id.clone(), Cell::at(p.row, p.col))).collect(),
        }
    }
}

/// Position of `b` relative to `a` and the edge distance separating them.
fn classify(a: &Rect, b: &Rect) -> Option<(Direction, i64)> {
    let v_overlap = a.y < b.bottom() && b.y < a.bottom();
    let h_overlap = a.x < b.right() && b.x < a.right();
    let dx = if b.x >= a.right() {
        Some((1, b.x - a.right()))
    } else if b.right() <= a.x {
        Some((-1, a.x - b.right()))
    } else {
        None
    };
    let dy = if b.y >= a.bottom() {
        Some((1, b.y - a.bottom()))
    } else if b.bottom() <= a.y {
        Some((-1, a.y - b.bottom()))
    } else {
        None
    };
    match (dx, dy) {
        (Some((sx, gx)), _) if v_overlap => Direction::from_signs(sx, 0).map(|d| (d, gx)),
        (_, Some((sy, gy))) if h_overlap => Direction::from_signs(0, sy).map(|d| (d, gy)),
        (Some((sx, gx)), Some((sy, gy))) => Direction::from_signs(sx, sy).map(|d| (d, gx + gy)),
        _ => None,
    }
}

/// Direct-neighbor relations among placed rectangles. With `corner_diagonals`
/// only corner-touching pairs yield diagonal relations.
fn neighbor_relations(rects: &[(&str, Rect)], corner_diagonals: bool) -> BTreeSet<RelativeConstraint> {
    let mut out = BTreeSet::new();
    for (seed, ra) in rects {
        let mut nearest: BTreeMap<Direction, (i64, Vec<&str>)> = BTreeMap::new();
        for (other, rb) in rects {
            if seed == other {
                continue;
            }
            let Some((dir, dist)) = classify(ra, rb) else { continue };
            if corner_diagonals && dir.dx() != 0 && dir.dy() != 0 && dist != 0 {
                continue;
            }
            let slot = nearest.entry(dir).or_insert((dist, Vec::new()));
            if dist < slot.0 {
                *slot = (dist, Vec::new());
            }
            if dist == slot.0 {
                slot.1.push(other);
            }
        }
        for (dir, (_, others)) in nearest {
            for other in others {
                out.insert(canonical(other, dir, seed));
            }
        }
    }
    out
}

fn canonical(subject: &str, relation: Direction, anchor: &str) -> RelativeConstraint {
    if relation.is_canonical() {
        RelativeConstraint::new(subject, relation, anchor)
    } else {
        RelativeConstraint::new(anchor, relation.inverse(), subject)
    }
}

/// Spatial relations among a container's children, inverses excluded.
///
/// Absolute and table layouts keep direct neighbors only and are reported in
/// canonical orientation (right, below, belowLeft, belowRight). Relative
/// layouts yield their declared constraints.
pub fn derive_relations(children: &[UiComponent], layout: &LayoutSpec) -> BTreeSet<RelativeConstraint> {
    let ids: BTreeSet<&str> = children.iter().map(|c| c.id.as_str()).collect();
    match layout {
        LayoutSpec::Absolute { positions } => {
            let rects: Vec<(&str, Rect)> = positions
                .iter()
                .filter(|(id, _)| ids.contains(id.as_str()))
                .map(|(id, r)| (id.as_str(), *r))
                .collect();
            neighbor_relations(&rects, false)
        }
        LayoutSpec::Table { cells } => {
            let rects: Vec<(&str, Rect)> = cells
                .iter()
                .filter(|(id, _)| ids.contains(id.as_str()))
                .map(|(id, c)| (id.as_str(), c.as_rect()))
                .collect();
            neighbor_relations(&rects, true)
        }
        LayoutSpec::Relative { constraints } => {
            let mut out = BTreeSet::new();
            for c in constraints {
                if c.subject == c.anchor || !ids.contains(c.subject.as_str()) || !ids.contains(c.anchor.as_str()) {
                    continue;
                }
                let inverse = RelativeConstraint::new(&c.anchor, c.relation.inverse(), &c.subject);
                if !out.contains(&inverse) {
                    out.insert(c.clone());
                }
            }
            out
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Equivalence classes and strict-order edges of one axis.
struct AxisGraph {
    /// class representative of each component index
    class: Vec<usize>,
    /// edges `lower -> higher` between class representatives
    edges: BTreeSet<(usize, usize)>,
}

struct Projection {
    ids: Vec<String>,
    horizontal: AxisGraph,
    vertical: AxisGraph,
}

fn project(constraints: &[RelativeConstraint]) -> Projection {
    let ids: Vec<String> = constraints
        .iter()
        .flat_map(|c| [c.subject.clone(), c.anchor.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut rows = UnionFind::new(ids.len());
    let mut cols = UnionFind::new(ids.len());
    for c in constraints {
        let (s, a) = (index[c.subject.as_str()], index[c.anchor.as_str()]);
        if c.relation.dy() == 0 {
            rows.union(s, a);
        }
        if c.relation.dx() == 0 {
            cols.union(s, a);
        }
    }
    let row_class: Vec<usize> = (0..ids.len()).map(|i| rows.find(i)).collect();
    let col_class: Vec<usize> = (0..ids.len()).map(|i| cols.find(i)).collect();
    let mut h_edges = BTreeSet::new();
    let mut v_edges = BTreeSet::new();
    for c in constraints {
        let (s, a) = (index[c.subject.as_str()], index[c.anchor.as_str()]);
        match c.relation.dx() {
            1 => {
                h_edges.insert((col_class[a], col_class[s]));
            }
            -1 => {
                h_edges.insert((col_class[s], col_class[a]));
            }
            _ => {}
        }
        match c.relation.dy() {
            1 => {
                v_edges.insert((row_class[a], row_class[s]));
            }
            -1 => {
                v_edges.insert((row_class[s], row_class[a]));
            }
            _ => {}
        }
    }
    Projection {
        ids,
        horizontal: AxisGraph { class: col_class, edges: h_edges },
        vertical: AxisGraph { class: row_class, edges: v_edges },
    }
}

impl AxisGraph {
    fn classes(&self) -> BTreeSet<usize> {
        self.class.iter().copied().collect()
    }

    fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((node, 0)..(node + 1, 0)).map(|&(_, to)| to)
    }

    fn reachable(&self, from: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.successors(from).collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.successors(n));
            }
        }
        seen
    }

    /// Strongly connected class sets that contain a cycle (self-loops
    /// included).
    fn cyclic_components(&self) -> BTreeSet<BTreeSet<usize>> {
        let classes = self.classes();
        let reach: BTreeMap<usize, BTreeSet<usize>> =
            classes.iter().map(|&c| (c, self.reachable(c))).collect();
        let mut out = BTreeSet::new();
        for &c in &classes {
            if !reach[&c].contains(&c) {
                continue;
            }
            let scc: BTreeSet<usize> = classes
                .iter()
                .copied()
                .filter(|d| reach[&c].contains(d) && reach[d].contains(&c))
                .collect();
            out.insert(scc);
        }
        out
    }

    /// Longest-path rank of every class; assumes an acyclic graph.
    fn ranks(&self) -> BTreeMap<usize, u32> {
        let classes = self.classes();
        let mut indegree: BTreeMap<usize, usize> = classes.iter().map(|&c| (c, 0)).collect();
        for &(_, to) in &self.edges {
            *indegree.get_mut(&to).expect("class") += 1;
        }
        let mut rank: BTreeMap<usize, u32> = classes.iter().map(|&c| (c, 0)).collect();
        let mut ready: Vec<usize> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&c, _)| c).collect();
        while let Some(n) = ready.pop() {
            let r = rank[&n];
            for to in self.successors(n).collect::<Vec<_>>() {
                let slot = rank.get_mut(&to).expect("class");
                *slot = (*slot).max(r + 1);
                let d = indegree.get_mut(&to).expect("class");
                *d -= 1;
                if *d == 0 {
                    ready.push(to);
                }
            }
        }
        rank
    }
}

/// Reports every contradiction in a constraint set: self anchors, cycles in
/// either axis order (after merging same-row and same-column bands), and
/// pairs forced into one cell.
pub fn check_consistency(constraints: &[RelativeConstraint]) -> Result<(), Vec<Conflict>> {
    let mut conflicts = BTreeSet::new();
    for c in constraints {
        if c.subject == c.anchor {
            conflicts.insert(Conflict::SelfAnchor { id: c.subject.clone() });
        }
    }
    let projection = project(constraints);
    for (axis, graph) in [(Axis::Horizontal, &projection.horizontal), (Axis::Vertical, &projection.vertical)] {
        for scc in graph.cyclic_components() {
            let members: Vec<String> = projection
                .ids
                .iter()
                .enumerate()
                .filter(|(i, _)| scc.contains(&graph.class[*i]))
                .map(|(_, id)| id.clone())
                .collect();
            conflicts.insert(Conflict::Cycle { axis, members });
        }
    }
    let n = projection.ids.len();
    for i in 0..n {
        for j in i + 1..n {
            if projection.vertical.class[i] == projection.vertical.class[j]
                && projection.horizontal.class[i] == projection.horizontal.class[j]
            {
                conflicts.insert(Conflict::CellCollision {
                    first: projection.ids[i].clone(),
                    second: projection.ids[j].clone(),
                });
            }
        }
    }
    if conflicts.is_empty() {
        Ok(())
    } else {
        Err(conflicts.into_iter().collect())
    }
}

/// Solves a consistent constraint set onto the grid.
///
/// Each axis is layered by longest-path rank over its band classes; classes
/// are then given distinct indices ordered by (rank, smallest member id).
/// Unconstrained components follow in id order, one fresh row each.
pub fn solve(components: &BTreeSet<String>, constraints: &[RelativeConstraint]) -> Result<Placement, LayoutError> {
    for c in constraints {
        for id in [&c.subject, &c.anchor] {
            if !components.contains(id) {
                return Err(LayoutError::UnknownComponent(id.clone()));
            }
        }
    }
    check_consistency(constraints).map_err(LayoutError::Inconsistent)?;

    let projection = project(constraints);
    let order = |graph: &AxisGraph| -> BTreeMap<usize, u32> {
        let ranks = graph.ranks();
        let mut min_id: BTreeMap<usize, &str> = BTreeMap::new();
        for (i, id) in projection.ids.iter().enumerate() {
            let slot = min_id.entry(graph.class[i]).or_insert(id);
            if id.as_str() < *slot {
                *slot = id;
            }
        }
        let mut classes: Vec<usize> = ranks.keys().copied().collect();
        classes.sort_by_key(|c| (ranks[c], min_id[c]));
        classes.into_iter().enumerate().map(|(i, c)| (c, i as u32)).collect()
    };
    let row_index = order(&projection.vertical);
    let col_index = order(&projection.horizontal);

    let mut placement = BTreeMap::new();
    for (i, id) in projection.ids.iter().enumerate() {
        let row = row_index[&projection.vertical.class[i]];
        let col = col_index[&projection.horizontal.class[i]];
        placement.insert(id.clone(), GridPos { row, col });
    }
    let mut next_row = row_index.len() as u32;
    for id in components {
        if !placement.contains_key(id) {
            placement.insert(id.clone(), GridPos { row: next_row, col: 0 });
            next_row += 1;
        }
    }
    Ok(Placement(placement))
}

/// Sets the relation between `subject` and `anchor`, replacing any earlier
/// constraint on the same pair. The update is refused when it would make the
/// set inconsistent.
pub fn place(
    constraints: &[RelativeConstraint],
    subject: &str,
    relation: Direction,
    anchor: &str,
) -> Result<Vec<RelativeConstraint>, LayoutError> {
    if subject == anchor {
        return Err(LayoutError::SelfAnchor(subject.to_string()));
    }
    let mut updated: Vec<RelativeConstraint> = constraints
        .iter()
        .filter(|c| {
            !((c.subject == subject && c.anchor == anchor) || (c.subject == anchor && c.anchor == subject))
        })
        .cloned()
        .collect();
    updated.push(RelativeConstraint::new(subject, relation, anchor));
    check_consistency(&updated).map_err(LayoutError::Inconsistent)?;
    Ok(updated)
}
