use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::{Arc, RwLock};

use serde::Serialize;

use super::SchreierGraph;
use crate::actions::ActionPoint;
use crate::error::{Error, Result};

/// Default number of visited vertices before a component search gives up.
pub const DEFAULT_CAP: usize = 10_000;
/// Escalation ceiling for [`ComponentIndex::component_label_escalating`].
pub const MAX_CAP: usize = 1_000_000;

const MEMO_LIMIT: usize = 1 << 20;

/// A finite set of vertices removed from the graph.
#[derive(Clone, Debug)]
pub struct CutSet {
    points: HashSet<ActionPoint>,
    max_size: u64,
    id: String,
}

impl CutSet {
    pub fn new(points: impl IntoIterator<Item = ActionPoint>) -> Result<Self> {
        let points: HashSet<ActionPoint> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        let names: BTreeSet<String> = points.iter().map(|p| p.to_string()).collect();
        let id = format!("{{{}}}", names.into_iter().collect::<Vec<_>>().join(","));
        let max_size = points.iter().map(|p| p.size()).max().unwrap_or(0);
        Ok(Self { points, max_size, id })
    }

    /// Membership; cheap for points much larger than every cut vertex.
    pub fn contains(&self, p: &ActionPoint) -> bool {
        p.size() <= self.max_size && self.points.contains(p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionPoint> {
        self.points.iter()
    }

    /// Sorted serialization, e.g. `{3/2^2,5/2^3}`.
    pub fn id(&self) -> &str {
        &self.id
    }
}

/// The component of `vertex` in the graph minus `cut`, named by its anchor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentLabel {
    pub vertex: String,
    pub cut: String,
    pub anchor: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelOutcome {
    Label(ComponentLabel),
    /// The search visited `visited` vertices without meeting a labeled one.
    NotResolved {
        visited: usize,
    },
}

impl LabelOutcome {
    pub fn anchor(&self) -> Option<&str> {
        match self {
            LabelOutcome::Label(l) => Some(&l.anchor),
            LabelOutcome::NotResolved { .. } => None,
        }
    }
}

/// Component labels for the complement of one cut set.
///
/// Every component of the complement contains at least one boundary vertex (a
/// vertex adjacent to the cut), so the anchor of a component is its smallest
/// boundary vertex under the serialization order. Boundary vertices are grouped
/// once at construction; any other vertex is labeled by searching outward
/// until it meets a labeled vertex.
#[derive(Debug)]
pub struct ComponentIndex {
    graph: Arc<SchreierGraph>,
    cut: CutSet,
    boundary: Vec<(ActionPoint, String)>,
    boundary_index: HashMap<ActionPoint, usize>,
    labels: RwLock<HashMap<ActionPoint, String>>,
}

impl ComponentIndex {
    pub fn new(graph: Arc<SchreierGraph>, cut: CutSet) -> Result<Self> {
        Self::with_cap(graph, cut, DEFAULT_CAP)
    }

    /// `cap` bounds each boundary grouping search; groups merged only beyond
    /// that many vertices are reported as separate components.
    pub fn with_cap(graph: Arc<SchreierGraph>, cut: CutSet, cap: usize) -> Result<Self> {
        for p in cut.iter() {
            if p.action() != graph.action() {
                return Err(Error::WrongAction {
                    point: p.to_string(),
                    action: graph.action().name(),
                });
            }
        }
        let mut boundary: Vec<ActionPoint> = Vec::new();
        let mut seen = HashSet::new();
        for p in cut.iter() {
            for w in graph.adjacent(p).iter() {
                if !cut.contains(w) && seen.insert(w.clone()) {
                    boundary.push(w.clone());
                }
            }
        }
        boundary.sort_by_cached_key(|p| p.to_string());

        let index: HashMap<ActionPoint, usize> = boundary.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let mut parent: Vec<usize> = (0..boundary.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }

        // In a tree, removing a connected set leaves one component per
        // boundary vertex, so no grouping search is needed.
        if !(graph.action().is_tree() && is_connected(&graph, &cut)) {
            let mut reached = vec![false; boundary.len()];
            for start in 0..boundary.len() {
                if reached[start] {
                    continue;
                }
                reached[start] = true;
                let mut queue = VecDeque::from([boundary[start].clone()]);
                let mut visited: HashSet<ActionPoint> = HashSet::from([boundary[start].clone()]);
                while let Some(x) = queue.pop_front() {
                    if visited.len() >= cap {
                        break;
                    }
                    for y in graph.adjacent(&x).iter() {
                        if cut.contains(y) || !visited.insert(y.clone()) {
                            continue;
                        }
                        if let Some(&j) = index.get(y) {
                            reached[j] = true;
                            let (a, b) = (find(&mut parent, start), find(&mut parent, j));
                            parent[a.max(b)] = a.min(b);
                        }
                        queue.push_back(y.clone());
                    }
                }
            }
        }

        // Unions always keep the smaller index as root and the boundary is
        // sorted, so each root is its component's anchor.
        let boundary: Vec<(ActionPoint, String)> = (0..boundary.len())
            .map(|i| (boundary[i].clone(), boundary[find(&mut parent, i)].to_string()))
            .collect();
        let labels = boundary.iter().cloned().collect();
        Ok(Self {
            graph,
            cut,
            boundary_index: index,
            boundary,
            labels: RwLock::new(labels),
        })
    }

    pub fn cut(&self) -> &CutSet {
        &self.cut
    }

    pub fn graph(&self) -> &SchreierGraph {
        &self.graph
    }

    /// Boundary vertices with their anchors, sorted by serialization.
    pub fn boundary(&self) -> &[(ActionPoint, String)] {
        &self.boundary
    }

    /// Distinct anchors, i.e. the components of the complement.
    pub fn anchors(&self) -> Vec<String> {
        let set: BTreeSet<String> = self.boundary.iter().map(|(_, a)| a.clone()).collect();
        set.into_iter().collect()
    }

    /// Anchor of a boundary vertex, without searching.
    pub fn boundary_anchor(&self, v: &ActionPoint) -> Option<&str> {
        self.boundary_index.get(v).map(|&i| self.boundary[i].1.as_str())
    }

    fn label(&self, v: &ActionPoint, anchor: String) -> ComponentLabel {
        ComponentLabel {
            vertex: v.to_string(),
            cut: self.cut.id().to_string(),
            anchor,
        }
    }

    /// Breadth-first search from `v` avoiding the cut until a labeled vertex
    /// is met; gives up after `cap` visited vertices.
    pub fn component_label(&self, v: &ActionPoint, cap: usize) -> Result<LabelOutcome> {
        if v.action() != self.graph.action() {
            return Err(Error::WrongAction {
                point: v.to_string(),
                action: self.graph.action().name(),
            });
        }
        if self.cut.contains(v) {
            return Err(Error::VertexInCut { vertex: v.to_string() });
        }
        if let Some(a) = self.labels.read().expect("label lock").get(v) {
            return Ok(LabelOutcome::Label(self.label(v, a.clone())));
        }
        let mut visited: Vec<ActionPoint> = vec![v.clone()];
        let mut seen: HashSet<ActionPoint> = HashSet::from([v.clone()]);
        let mut head = 0;
        let found = {
            let labels = self.labels.read().expect("label lock");
            let mut found = None;
            'search: while head < visited.len() {
                if visited.len() >= cap {
                    break;
                }
                let x = visited[head].clone();
                head += 1;
                for y in self.graph.adjacent(&x).iter() {
                    if self.cut.contains(y) || seen.contains(y) {
                        continue;
                    }
                    if let Some(a) = labels.get(y) {
                        found = Some(a.clone());
                        break 'search;
                    }
                    seen.insert(y.clone());
                    visited.push(y.clone());
                }
            }
            found
        };
        match found {
            Some(anchor) => {
                let mut labels = self.labels.write().expect("label lock");
                for p in visited {
                    if labels.len() >= MEMO_LIMIT {
                        break;
                    }
                    labels.entry(p).or_insert_with(|| anchor.clone());
                }
                Ok(LabelOutcome::Label(self.label(v, anchor)))
            }
            None => Ok(LabelOutcome::NotResolved { visited: visited.len() }),
        }
    }

    /// [`Self::component_label`] with the cap doubling from the default up to
    /// [`MAX_CAP`].
    pub fn component_label_escalating(&self, v: &ActionPoint) -> Result<LabelOutcome> {
        let mut cap = DEFAULT_CAP;
        loop {
            let out = self.component_label(v, cap)?;
            if matches!(out, LabelOutcome::Label(_)) || cap >= MAX_CAP {
                return Ok(out);
            }
            cap = (cap * 2).min(MAX_CAP);
        }
    }
}

fn is_connected(graph: &SchreierGraph, cut: &CutSet) -> bool {
    let Some(first) = cut.iter().next() else {
        return true;
    };
    let mut seen: HashSet<&ActionPoint> = HashSet::from([first]);
    let mut stack = vec![first.clone()];
    while let Some(x) = stack.pop() {
        for y in graph.adjacent(&x).iter() {
            if let Some(c) = cut.iter().find(|c| *c == y) {
                if seen.insert(c) {
                    stack.push(y.clone());
                }
            }
        }
    }
    seen.len() == cut.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{Action, CombVertex, PlaneVertex};

    fn t(s: &str) -> ActionPoint {
        Action::Thompson.parse_point(s).unwrap()
    }

    fn savchuk_index() -> ComponentIndex {
        let g = Arc::new(SchreierGraph::new(t("3/4")));
        ComponentIndex::new(g, CutSet::new([t("5/8"), t("3/4")]).unwrap()).unwrap()
    }

    #[test]
    fn savchuk_cut_has_five_components() {
        let idx = savchuk_index();
        assert_eq!(idx.anchors(), ["1/2^1", "13/2^4", "3/2^3", "7/2^3", "9/2^4"]);
        let label = |s: &str| idx.component_label(&t(s), DEFAULT_CAP).unwrap();
        assert_eq!(label("13/16").anchor(), Some("13/2^4"));
        assert_eq!(label("11/16").anchor(), Some("13/2^4"));
        assert_eq!(label("15/16").anchor(), Some("7/2^3"));
        assert_eq!(label("17/32").anchor(), Some("9/2^4"));
        assert_eq!(label("1/4").anchor(), Some("1/2^1"));
        assert!(matches!(
            idx.component_label(&t("5/8"), DEFAULT_CAP),
            Err(Error::VertexInCut { .. })
        ));
    }

    #[test]
    fn comb_ball_complement() {
        let o = ActionPoint::Psi(CombVertex::new(0, 0));
        let g = Arc::new(SchreierGraph::new(o.clone()));
        let ball = g.ball(&o, 2).unwrap();
        let idx = ComponentIndex::new(g, CutSet::new(ball).unwrap()).unwrap();
        // left and right rays on levels -2..=2, plus the spine above and below
        assert_eq!(idx.anchors().len(), 12);
        let far = ActionPoint::Psi(CombVertex::new(1, 40));
        assert_eq!(idx.component_label(&far, DEFAULT_CAP).unwrap().anchor(), Some("(1,2)"));
    }

    #[test]
    fn plane_comb_groups_boundary_vertices() {
        let o = ActionPoint::PsiPrime(PlaneVertex::new(0, 0, 0));
        let g = Arc::new(SchreierGraph::new(o.clone()));
        let ball = g.ball(&o, 2).unwrap();
        let idx = ComponentIndex::new(g, CutSet::new(ball).unwrap()).unwrap();
        // one plane per level -2..=2 plus the spine above and below
        assert_eq!(idx.anchors().len(), 7);
    }
}
