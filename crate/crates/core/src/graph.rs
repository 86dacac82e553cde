//! Moment graphs: labelled graphs with a partial order on the vertices.
//!
//! The order is the transitive closure of an explicit relation list. Edges
//! carry a nonzero vector of `V`; only the line it spans matters.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{int, is_proportional, LinearForm, Scalar};

pub type VertexSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub label: Vec<Scalar>,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }
}

#[derive(Clone, Debug)]
pub struct MomentGraph {
    dim: usize,
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    relations: Vec<(usize, usize)>,
    // below[a][b]: a < b in the transitive closure
    below: Vec<Vec<bool>>,
}

impl PartialEq for MomentGraph {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.below == other.below
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ZeroLabel { edge: usize },
    LabelLength { edge: usize, len: usize },
    SelfLoop { edge: usize },
    IncomparableEdge { edge: usize },
    ParallelEdges { first: usize, second: usize },
    Cycle { vertex: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ZeroLabel { edge } => write!(f, "edge {edge} has a zero label"),
            Violation::LabelLength { edge, len } => write!(f, "edge {edge} has a label of length {len}"),
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a loop"),
            Violation::IncomparableEdge { edge } => write!(f, "edge {edge} joins incomparable vertices"),
            Violation::ParallelEdges { first, second } => write!(f, "edges {first} and {second} share endpoints"),
            Violation::Cycle { vertex } => write!(f, "order relations form a cycle through `{vertex}`"),
        }
    }
}

/// Witness that a graph is not GKM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GkmFailure {
    pub vertex: usize,
    pub edges: (usize, usize),
}

impl MomentGraph {
    /// Builds a graph from vertex names, edges `(u, v, label)` and order
    /// relations `(a, b)` meaning `a < b`. Structural problems (unknown names)
    /// are errors; the moment graph axioms are checked by [`Self::validate`].
    pub fn new(
        dim: usize,
        vertices: Vec<String>,
        edges: Vec<(String, String, Vec<Scalar>)>,
        relations: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex `{v}`")));
            }
        }
        let look = |s: &String| index.get(s).copied().ok_or_else(|| Error::UnknownVertex(s.clone()));
        let edges = edges
            .iter()
            .map(|(u, v, l)| {
                Ok(Edge {
                    u: look(u)?,
                    v: look(v)?,
                    label: l.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let relations = relations
            .iter()
            .map(|(a, b)| Ok((look(a)?, look(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(dim, vertices, edges, relations))
    }

    pub fn from_parts(dim: usize, vertices: Vec<String>, edges: Vec<Edge>, relations: Vec<(usize, usize)>) -> Self {
        let index = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let below = closure(vertices.len(), &relations);
        Self {
            dim,
            vertices,
            index,
            edges,
            relations,
            below,
        }
    }

    /// Edges double as order relations, oriented `u < v`.
    pub fn from_directed_edges(dim: usize, vertices: Vec<String>, edges: Vec<Edge>) -> Self {
        let relations = edges.iter().map(|e| (e.u, e.v)).collect();
        Self::from_parts(dim, vertices, edges, relations)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn name(&self, x: usize) -> &str {
        &self.vertices[x]
    }

    pub fn vertex(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn vertex_set(&self, names: &[&str]) -> Result<VertexSet> {
        names.iter().map(|n| self.vertex(n)).collect()
    }

    pub fn all_vertices(&self) -> VertexSet {
        (0..self.vertices.len()).collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn relations(&self) -> &[(usize, usize)] {
        &self.relations
    }

    /// Label of edge `e` as a linear form; fails on a zero label.
    pub fn alpha(&self, e: usize) -> Result<LinearForm> {
        LinearForm::new(self.edges[e].label.clone())
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        self.below[a][b]
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        a == b || self.below[a][b]
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.lt(a, b) || self.lt(b, a)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for x in 0..self.vertices.len() {
            if self.below[x][x] {
                out.push(Violation::Cycle {
                    vertex: self.vertices[x].clone(),
                });
            }
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.label.len() != self.dim {
                out.push(Violation::LabelLength {
                    edge: i,
                    len: e.label.len(),
                });
            } else if e.label.iter().all(Zero::is_zero) {
                out.push(Violation::ZeroLabel { edge: i });
            }
            if e.u == e.v {
                out.push(Violation::SelfLoop { edge: i });
                continue;
            }
            if !self.comparable(e.u, e.v) {
                out.push(Violation::IncomparableEdge { edge: i });
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if let Some(first) = seen.insert(key, i) {
                out.push(Violation::ParallelEdges { first, second: i });
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        match self.validate().first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidGraph(v.to_string())),
        }
    }

    /// Edges incident to `x`, in edge order.
    pub fn edges_at(&self, x: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|e| self.edges[*e].touches(x)).collect()
    }

    /// Edges `E: y -> x` with `y < x`.
    pub fn edges_into(&self, x: usize) -> Vec<usize> {
        self.edges_at(x)
            .into_iter()
            .filter(|e| self.lt(self.edges[*e].other(x), x))
            .collect()
    }

    /// Edges with both endpoints in `set`.
    pub fn edges_within(&self, set: &VertexSet) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|e| set.contains(&self.edges[*e].u) && set.contains(&self.edges[*e].v))
            .collect()
    }

    pub fn less(&self, x: usize) -> VertexSet {
        (0..self.vertices.len()).filter(|y| self.lt(*y, x)).collect()
    }

    pub fn less_eq(&self, x: usize) -> VertexSet {
        (0..self.vertices.len()).filter(|y| self.le(*y, x)).collect()
    }

    pub fn greater_eq(&self, x: usize) -> VertexSet {
        (0..self.vertices.len()).filter(|y| self.le(x, *y)).collect()
    }

    /// Open sets are the downward closed ones.
    pub fn is_open(&self, set: &VertexSet) -> bool {
        set.iter().all(|x| self.less(*x).is_subset(set))
    }

    /// Maximal elements of `set`.
    pub fn maximal_in(&self, set: &VertexSet) -> Vec<usize> {
        set.iter()
            .copied()
            .filter(|x| !set.iter().any(|y| self.lt(*x, *y)))
            .collect()
    }

    /// All open subsets, in a deterministic order. Exponential; intended for
    /// small graphs.
    pub fn open_sets(&self) -> Vec<VertexSet> {
        let order = self.linear_extension();
        let mut out = vec![VertexSet::new()];
        // an ideal is built by adding vertices in a linear extension order;
        // enumerate by extending each ideal with vertices whose lower set is inside
        let mut frontier = vec![VertexSet::new()];
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        seen.insert(Vec::new());
        while let Some(ideal) = frontier.pop() {
            for &x in &order {
                if ideal.contains(&x) || !self.less(x).is_subset(&ideal) {
                    continue;
                }
                let mut next = ideal.clone();
                next.insert(x);
                let key: Vec<usize> = next.iter().copied().collect();
                if seen.insert(key) {
                    out.push(next.clone());
                    frontier.push(next);
                }
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
        out
    }

    /// A linear extension of the order: ties broken by vertex index.
    pub fn linear_extension(&self) -> Vec<usize> {
        self.linear_extension_by(|a, b| a.cmp(&b))
    }

    /// A linear extension with ties broken by `prefer`.
    pub fn linear_extension_by(&self, prefer: impl Fn(usize, usize) -> std::cmp::Ordering) -> Vec<usize> {
        let n = self.vertices.len();
        let mut placed = vec![false; n];
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let next = (0..n)
                .filter(|x| !placed[*x] && (0..n).all(|y| placed[y] || !self.lt(y, *x) || y == *x))
                .min_by(|a, b| prefer(*a, *b));
            let Some(x) = next else { break };
            placed[x] = true;
            out.push(x);
        }
        out
    }

    pub fn is_gkm(&self) -> std::result::Result<(), GkmFailure> {
        for x in 0..self.vertices.len() {
            let es = self.edges_at(x);
            for (i, a) in es.iter().enumerate() {
                for b in &es[i + 1..] {
                    if is_proportional(&self.edges[*a].label, &self.edges[*b].label) {
                        return Err(GkmFailure {
                            vertex: x,
                            edges: (*a, *b),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Keeps the edges whose label is proportional to `gamma`.
    pub fn gamma_reduction(&self, gamma: &[Scalar]) -> Result<MomentGraph> {
        if gamma.iter().all(Zero::is_zero) {
            return Err(Error::ZeroVector);
        }
        if gamma.len() != self.dim {
            return Err(Error::InvalidGraph(format!(
                "gamma has length {}, graph dimension {}",
                gamma.len(),
                self.dim
            )));
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| is_proportional(&e.label, gamma))
            .cloned()
            .collect();
        Ok(Self { edges, ..self.clone() })
    }

    /// Same vertices, edges and labels with the order reversed.
    pub fn tilt(&self) -> MomentGraph {
        let relations = self.relations.iter().map(|(a, b)| (*b, *a)).collect();
        Self::from_parts(self.dim, self.vertices.clone(), self.edges.clone(), relations)
    }

    /// Connected components of the underlying graph, each sorted.
    pub fn connected_components(&self) -> Vec<VertexSet> {
        let n = self.vertices.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut set = VertexSet::new();
            let mut q = VecDeque::from([s]);
            comp[s] = id;
            while let Some(x) = q.pop_front() {
                set.insert(x);
                for e in self.edges_at(x) {
                    let y = self.edges[e].other(x);
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        q.push_back(y);
                    }
                }
            }
            out.push(set);
        }
        out
    }

    /// One vertex, no edges.
    pub fn generic(dim: usize) -> MomentGraph {
        Self::from_parts(dim, vec!["x".into()], Vec::new(), Vec::new())
    }

    /// Two vertices `x < y` joined by one edge.
    pub fn subgeneric(label: Vec<Scalar>) -> MomentGraph {
        let dim = label.len();
        Self::from_directed_edges(dim, vec!["x".into(), "y".into()], vec![Edge { u: 0, v: 1, label }])
    }

    /// Vertices `u, v < w`, edges `u -- w` labelled `alpha`, `v -- w` labelled `beta`.
    pub fn diamond(alpha: Vec<Scalar>, beta: Vec<Scalar>) -> MomentGraph {
        let dim = alpha.len();
        Self::from_directed_edges(
            dim,
            vec!["u".into(), "v".into(), "w".into()],
            vec![
                Edge {
                    u: 0,
                    v: 2,
                    label: alpha,
                },
                Edge {
                    u: 1,
                    v: 2,
                    label: beta,
                },
            ],
        )
    }

    /// Restriction to a vertex subset as a graph in its own right.
    pub fn induced(&self, set: &VertexSet) -> MomentGraph {
        let keep: Vec<usize> = set.iter().copied().collect();
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, x)| (*x, i)).collect();
        let vertices = keep.iter().map(|x| self.vertices[*x].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| pos.contains_key(&e.u) && pos.contains_key(&e.v))
            .map(|e| Edge {
                u: pos[&e.u],
                v: pos[&e.v],
                label: e.label.clone(),
            })
            .collect();
        let mut relations = Vec::new();
        for a in &keep {
            for b in &keep {
                if self.lt(*a, *b) {
                    relations.push((pos[a], pos[b]));
                }
            }
        }
        Self::from_parts(self.dim, vertices, edges, relations)
    }
}

fn closure(n: usize, relations: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut succ = vec![Vec::new(); n];
    for (a, b) in relations {
        succ[*a].push(*b);
    }
    let mut below = vec![vec![false; n]; n];
    for s in 0..n {
        let mut stack: Vec<usize> = succ[s].clone();
        while let Some(x) = stack.pop() {
            if below[s][x] {
                continue;
            }
            below[s][x] = true;
            stack.extend(succ[x].iter().copied());
        }
    }
    below
}

/// Integer vector helper for tests and builders.
pub fn ivec(v: &[i64]) -> Vec<Scalar> {
    v.iter().map(|c| int(*c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders() {
        let g = MomentGraph::generic(1);
        assert_eq!((g.vertex_count(), g.edges().len()), (1, 0));
        let s = MomentGraph::subgeneric(ivec(&[1]));
        assert_eq!((s.vertex_count(), s.edges().len()), (2, 1));
        assert!(s.validate().is_empty());
        assert!(MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1])).is_gkm().is_ok());
        assert!(g.is_gkm().is_ok());
    }

    #[test]
    fn incomparable_edge_and_zero_label_are_flagged() {
        let g = MomentGraph::new(
            1,
            vec!["a".into(), "b".into()],
            vec![("a".into(), "b".into(), ivec(&[1]))],
            vec![],
        )
        .unwrap();
        assert_eq!(g.validate(), vec![Violation::IncomparableEdge { edge: 0 }]);
        let z = MomentGraph::subgeneric(ivec(&[0]));
        assert_eq!(z.validate(), vec![Violation::ZeroLabel { edge: 0 }]);
    }

    #[test]
    fn cycles_are_flagged() {
        let g = MomentGraph::new(
            1,
            vec!["a".into(), "b".into()],
            vec![],
            vec![("a".into(), "b".into()), ("b".into(), "a".into())],
        )
        .unwrap();
        assert_eq!(g.validate().len(), 2);
    }

    #[test]
    fn non_gkm_witness() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[2, 0]));
        assert_eq!(
            g.is_gkm(),
            Err(GkmFailure {
                vertex: 2,
                edges: (0, 1)
            })
        );
    }

    #[test]
    fn open_sets_of_subgeneric() {
        let g = MomentGraph::subgeneric(ivec(&[1]));
        assert!(g.is_open(&[0].into()));
        assert!(!g.is_open(&[1].into()));
        assert_eq!(g.edges_into(1), vec![0]);
        assert!(g.edges_into(0).is_empty());
        assert_eq!(g.open_sets().len(), 3);
    }

    #[test]
    fn open_sets_of_diamond() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1]));
        // {}, {u}, {v}, {u,v}, {u,v,w}
        assert_eq!(g.open_sets().len(), 5);
        for s in g.open_sets() {
            assert!(g.is_open(&s));
        }
    }

    #[test]
    fn tilt_is_an_involution() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1]));
        let t = g.tilt();
        assert!(t.lt(2, 0));
        assert_eq!(t.tilt(), g);
    }

    #[test]
    fn gamma_reduction_keeps_proportional_edges() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1]));
        let r = g.gamma_reduction(&ivec(&[2, 0])).unwrap();
        assert_eq!(r.edges().len(), 1);
        assert_eq!(r.gamma_reduction(&ivec(&[2, 0])).unwrap(), r);
        assert!(g.gamma_reduction(&ivec(&[1, 1])).unwrap().edges().is_empty());
        assert!(matches!(g.gamma_reduction(&ivec(&[0, 0])), Err(Error::ZeroVector)));
    }
}
