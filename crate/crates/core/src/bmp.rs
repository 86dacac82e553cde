//! The canonical sheaves `B(v)`, built upward from `v` by free covers of
//! the images of lower sections in the boundary edge stalks.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MomentGraph, VertexSet};
use crate::linalg::SparseVec;
use crate::module::{AmbientModule, FreenessVerdict, GradedSubmodule, PolyMap};
use crate::poly::Polynomial;
use crate::sheaf::{EdgeStalk, GSheaf, VertexStalk};

/// Graded rank of a free module: the multiplicity of each generator degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Character(pub BTreeMap<i32, u64>);

impl Character {
    pub fn from_degrees(degrees: &[i32]) -> Self {
        let mut m = BTreeMap::new();
        for d in degrees {
            *m.entry(*d).or_insert(0) += 1;
        }
        Self(m)
    }

    pub fn one() -> Self {
        Self(BTreeMap::from([(0, 1)]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Value at `t = 1`: the rank.
    pub fn rank(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.0.keys().next_back().copied()
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (d, c) in &self.0 {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let coeff = if *c == 1 && *d != 0 {
                String::new()
            } else {
                c.to_string()
            };
            match d {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{coeff}t")?,
                _ => write!(f, "{coeff}t^{d}")?,
            }
        }
        Ok(())
    }
}

/// Per-vertex record of the construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub vertex: String,
    /// Hilbert function of the boundary module, by degree.
    pub boundary_hilbert: BTreeMap<i32, usize>,
    /// Generator degrees of the boundary module, which become the stalk shifts.
    pub generator_degrees: Vec<i32>,
}

#[derive(Clone, Debug)]
pub struct BmpSheaf {
    sheaf: GSheaf,
    base: usize,
    order: Vec<usize>,
    trace: Vec<TraceStep>,
    boundaries: BTreeMap<usize, GradedSubmodule>,
    cap: i32,
}

impl BmpSheaf {
    pub fn sheaf(&self) -> &GSheaf {
        &self.sheaf
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// The linear extension the construction followed.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    /// The boundary module `B^{δx}` for each processed vertex.
    pub fn boundary(&self, x: usize) -> Option<&GradedSubmodule> {
        self.boundaries.get(&x)
    }

    pub fn cap(&self) -> i32 {
        self.cap
    }

    /// Stalk characters keyed by vertex index, over the vertices above the base.
    pub fn character(&self) -> BTreeMap<usize, Character> {
        self.order
            .iter()
            .map(|x| {
                (
                    *x,
                    Character::from_degrees(&self.sheaf.vertex_stalk(*x).ambient().shifts()),
                )
            })
            .collect()
    }

    pub fn support(&self) -> VertexSet {
        self.order
            .iter()
            .copied()
            .filter(|x| self.sheaf.vertex_stalk(*x).ambient().rank() > 0)
            .collect()
    }

    /// Downward edges at `x` into vertices above the base.
    fn lower_edges(&self, x: usize) -> Vec<usize> {
        lower_edges(self.sheaf.graph(), x)
    }

    /// Kernels of `B^x -> B^{δx}`, tested for graded freeness in the order of
    /// construction.
    pub fn verma_flag(&self) -> Result<BmpFlagReport> {
        let g = self.sheaf.graph();
        let verdicts: Vec<Result<FreenessVerdict>> = self
            .order
            .par_iter()
            .map(|x| {
                let b = self.sheaf.vertex_stalk(*x).ambient();
                let down = self.lower_edges(*x);
                let target = AmbientModule::concat(g.dim(), down.iter().map(|e| self.sheaf.edge_stalk(*e).ambient()));
                let mut entries = Vec::new();
                for e in &down {
                    entries.extend(self.sheaf.rho(*e, *x).entries().iter().cloned());
                }
                let map = PolyMap::new(b.clone(), target, entries)?;
                Ok(GradedSubmodule::full(b.clone(), self.cap)
                    .kernel(&map)?
                    .is_graded_free())
            })
            .collect();
        let mut degrees = BTreeMap::new();
        for (x, v) in self.order.iter().zip(verdicts) {
            let v = v?;
            if !v.free {
                return Ok(BmpFlagReport {
                    has_flag: false,
                    degrees: BTreeMap::new(),
                    failing_vertex: Some(g.name(*x).to_string()),
                    failing_degree: v.first_failing_degree,
                    cap: self.cap,
                });
            }
            if !v.generator_degrees.is_empty() {
                degrees.insert(g.name(*x).to_string(), v.generator_degrees);
            }
        }
        Ok(BmpFlagReport {
            has_flag: true,
            degrees,
            failing_vertex: None,
            failing_degree: None,
            cap: self.cap,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BmpFlagReport {
    pub has_flag: bool,
    pub degrees: BTreeMap<String, Vec<i32>>,
    pub failing_vertex: Option<String>,
    pub failing_degree: Option<i32>,
    pub cap: i32,
}

fn lower_edges(g: &MomentGraph, x: usize) -> Vec<usize> {
    g.edges_at(x)
        .into_iter()
        .filter(|e| g.lt(g.edges()[*e].other(x), x))
        .collect()
}

/// Builds `B(v)` following the default linear extension.
pub fn build_bmp(graph: &MomentGraph, v: usize, cap: i32) -> Result<BmpSheaf> {
    let order = graph.linear_extension();
    build_bmp_along(graph, v, cap, &order)
}

/// Builds `B(v)` processing the vertices above `v` in the order they appear
/// in `extension`, which must be a linear extension of the graph's order.
pub fn build_bmp_along(graph: &MomentGraph, v: usize, cap: i32, extension: &[usize]) -> Result<BmpSheaf> {
    graph.ensure_valid()?;
    if cap % 2 != 0 {
        return Err(Error::OddCap(cap));
    }
    if v >= graph.vertex_count() {
        return Err(Error::UnknownVertex(v.to_string()));
    }
    if let Err(f) = graph.is_gkm() {
        return Err(Error::NotGkm {
            vertex: graph.name(f.vertex).to_string(),
        });
    }
    let up = graph.greater_eq(v);
    let order: Vec<usize> = extension.iter().copied().filter(|x| up.contains(x)).collect();
    let n = graph.dim();
    let mut stalks: Vec<AmbientModule> = vec![AmbientModule::zero(n); graph.vertex_count()];
    let mut edge_ambients: Vec<AmbientModule> = vec![AmbientModule::zero(n); graph.edges().len()];
    let mut rho: Vec<[Option<PolyMap>; 2]> = vec![[None, None]; graph.edges().len()];
    let mut trace = Vec::new();
    let mut boundaries = BTreeMap::new();

    let assemble = |stalks: &[AmbientModule], edge_ambients: &[AmbientModule], rho: &[[Option<PolyMap>; 2]]| {
        let rho = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let side = |k: usize, x: usize| {
                    rho[i][k].clone().unwrap_or_else(|| {
                        let zero = vec![vec![Polynomial::zero(n); stalks[x].rank()]; edge_ambients[i].rank()];
                        PolyMap::new(stalks[x].clone(), edge_ambients[i].clone(), zero).expect("zero map")
                    })
                };
                [side(0, e.u), side(1, e.v)]
            })
            .collect();
        GSheaf::new(
            graph.clone(),
            stalks.iter().cloned().map(VertexStalk::free).collect(),
            edge_ambients.iter().cloned().map(EdgeStalk::plain).collect(),
            rho,
        )
    };

    for &x in &order {
        let down = lower_edges(graph, x);
        let (shifts, columns) = if x == v {
            (vec![0], Vec::new())
        } else {
            let partial = assemble(&stalks, &edge_ambients, &rho)?;
            let below = graph.less(x);
            let secs = partial.sections(&below, cap)?;
            let target = AmbientModule::concat(n, down.iter().map(|e| &edge_ambients[*e]));
            // sections -> ⊕ B^E through the identity of each lower stalk onto its quotient
            let mut entries = vec![vec![Polynomial::zero(n); secs.module().ambient().rank()]; target.rank()];
            let mut row = 0;
            for e in &down {
                let y = graph.edges()[*e].other(x);
                if let Some((a, _)) = secs.block(y) {
                    for k in 0..edge_ambients[*e].rank() {
                        entries[row + k][a + k] = Polynomial::one(n);
                    }
                }
                row += edge_ambients[*e].rank();
            }
            let map = PolyMap::new(secs.module().ambient().clone(), target.clone(), entries)?;
            let delta = secs.module().image(&map)?;
            let gens = delta.minimal_generators().to_vec();
            if let Some(g) = gens.iter().find(|g| g.degree >= cap - 2) {
                return Err(Error::CapTooSmall {
                    vertex: graph.name(x).to_string(),
                    degree: g.degree,
                    cap,
                });
            }
            trace.push(TraceStep {
                vertex: graph.name(x).to_string(),
                boundary_hilbert: delta.hilbert_function(),
                generator_degrees: gens.iter().map(|g| g.degree).collect(),
            });
            boundaries.insert(x, delta);
            (
                gens.iter().map(|g| g.degree).collect::<Vec<_>>(),
                gens.into_iter().map(|g| g.tuple).collect::<Vec<_>>(),
            )
        };
        if x == v {
            trace.push(TraceStep {
                vertex: graph.name(x).to_string(),
                boundary_hilbert: BTreeMap::new(),
                generator_degrees: vec![0],
            });
        }
        stalks[x] = AmbientModule::free(n, &shifts);
        // maps from B^x into each lower edge stalk: the generator components
        let mut row = 0;
        for e in &down {
            let r = edge_ambients[*e].rank();
            let entries: Vec<Vec<Polynomial>> = (0..r)
                .map(|k| columns.iter().map(|t| t[row + k].clone()).collect())
                .collect();
            let entries = if columns.is_empty() {
                vec![Vec::new(); r]
            } else {
                entries
            };
            let m = PolyMap::new(stalks[x].clone(), edge_ambients[*e].clone(), entries)?;
            rho[*e][side_of(graph, *e, x)] = Some(m);
            row += r;
        }
        // upper edges get B^x / a B^x with the identity from B^x
        for e in graph.edges_at(x) {
            let z = graph.edges()[e].other(x);
            if graph.lt(x, z) {
                let q = AmbientModule::quotient(n, &shifts, &graph.alpha(e)?);
                edge_ambients[e] = q.clone();
                let id = (0..shifts.len())
                    .map(|j| {
                        (0..shifts.len())
                            .map(|i| {
                                if i == j {
                                    Polynomial::one(n)
                                } else {
                                    Polynomial::zero(n)
                                }
                            })
                            .collect()
                    })
                    .collect();
                rho[e][side_of(graph, e, x)] = Some(PolyMap::new(stalks[x].clone(), q, id)?);
            }
        }
    }
    let sheaf = assemble(&stalks, &edge_ambients, &rho)?;
    Ok(BmpSheaf {
        sheaf,
        base: v,
        order,
        trace,
        boundaries,
        cap,
    })
}

fn side_of(g: &MomentGraph, e: usize, x: usize) -> usize {
    if g.edges()[e].u == x {
        0
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeProjectivity {
    pub edge: (String, String),
    /// The lower endpoint `y`; the test is whether `B^y / a B^y -> B^E` is bijective.
    pub lower: String,
    pub bijective: bool,
    pub failing_degree: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectivityReport {
    pub stalks_free: bool,
    pub edges: Vec<EdgeProjectivity>,
    pub edge_condition: bool,
    pub generated_by_global_sections: bool,
    pub flabby: Option<bool>,
    /// Both conditions hold and the sheaf is flabby.
    pub projective: bool,
    pub cap: i32,
}

/// Checks that stalks are free and that each edge stalk is the reduction of
/// its lower stalk, degree by degree; flabbiness is reported alongside.
pub fn projectivity_witness(sheaf: &GSheaf, cap: i32) -> Result<ProjectivityReport> {
    let g = sheaf.graph();
    let stalks_free = sheaf
        .vertex_stalks()
        .iter()
        .all(|s| s.ambient().is_free() && s.submodule_part().is_none());
    let edges: Vec<EdgeProjectivity> = g
        .edges()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let (y, _) = if g.lt(e.u, e.v) { (e.u, e.v) } else { (e.v, e.u) };
            let failing = edge_iso_failure(sheaf, i, y, cap);
            EdgeProjectivity {
                edge: (g.name(e.u).to_string(), g.name(e.v).to_string()),
                lower: g.name(y).to_string(),
                bijective: failing.is_none(),
                failing_degree: failing,
            }
        })
        .collect();
    let edge_condition = edges.iter().all(|e| e.bijective);
    let ggs = sheaf.is_generated_by_global_sections(cap)?.holds;
    let flabby = if ggs { Some(sheaf.is_flabby(cap)?.holds) } else { None };
    Ok(ProjectivityReport {
        stalks_free,
        projective: stalks_free && edge_condition && flabby == Some(true),
        edges,
        edge_condition,
        generated_by_global_sections: ggs,
        flabby,
        cap,
    })
}

fn edge_iso_failure(sheaf: &GSheaf, e: usize, y: usize, cap: i32) -> Option<i32> {
    let stalk = sheaf.vertex_stalk(y);
    let st = sheaf.edge_stalk(e);
    let m = sheaf.rho(e, y);
    let low = stalk.ambient().low_degree().min(st.ambient().low_degree());
    for d in (low..=cap).step_by(2) {
        let rel = st.rel_at(d);
        let cols = m.columns_at(d);
        let basis = stalk.slice(d).basis_vec();
        let images: Vec<SparseVec> = basis
            .iter()
            .map(|b| rel.reduce(&SparseVec::combination(b, &cols)))
            .collect();
        let mut image = rel.clone();
        for v in &images {
            image.insert(v.clone());
        }
        if image.dim() != st.sub_at(d).dim() {
            return Some(d);
        }
        // the kernel must be exactly a times the stalk one degree down
        let kernel = crate::linalg::kernel_of_columns(&images).len();
        if kernel != stalk.dim_at(d - 2) {
            return Some(d);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ivec;

    #[test]
    fn generic_and_subgeneric() {
        let g = MomentGraph::generic(2);
        let b = build_bmp(&g, 0, 6).unwrap();
        assert_eq!(b.character()[&0], Character::one());
        let s = MomentGraph::subgeneric(ivec(&[1]));
        let b = build_bmp(&s, 0, 8).unwrap();
        let ch = b.character();
        assert_eq!(ch[&0], Character::one());
        assert_eq!(ch[&1], Character::one());
        let flag = b.verma_flag().unwrap();
        assert!(flag.has_flag);
        assert_eq!(flag.degrees["x"], vec![0]);
        assert_eq!(flag.degrees["y"], vec![2]);
        let p = projectivity_witness(b.sheaf(), 8).unwrap();
        assert!(p.projective);
    }

    #[test]
    fn diamond_structure_sheaf_is_not_projective() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1]));
        let a = GSheaf::structure_sheaf(&g).unwrap();
        let p = projectivity_witness(&a, 6).unwrap();
        assert!(p.stalks_free && p.edge_condition);
        assert_eq!(p.flabby, Some(false));
        assert!(!p.projective);
    }

    #[test]
    fn character_display() {
        assert_eq!(Character::from_degrees(&[0, 2]).to_string(), "1 + t^2");
        assert_eq!(Character::from_degrees(&[0, 2, 2]).to_string(), "1 + 2t^2");
        assert_eq!(Character::default().to_string(), "0");
    }
}
