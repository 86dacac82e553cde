//! JSON formats for graphs, sheaves, coordinate modules, and polynomials.
//!
//! Scalars are strings `"p/q"`; a polynomial is a list of
//! `[exponents, coefficient]` terms; a graded element is a tuple of
//! polynomials together with its degree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MomentGraph, VertexSet};
use crate::module::{AmbientModule, Component, GradedSubmodule, PolyMap};
use crate::poly::{format_scalar, parse_scalar, Polynomial};
use crate::sheaf::{EdgeStalk, GSheaf, VertexStalk};
use crate::zmod::ZModule;

pub type PolyJson = Vec<(Vec<u32>, String)>;

pub fn poly_to_json(p: &Polynomial) -> PolyJson {
    p.terms().map(|(m, c)| (m.clone(), format_scalar(c))).collect()
}

pub fn poly_from_json(nvars: usize, p: &PolyJson) -> Result<Polynomial> {
    let terms = p
        .iter()
        .map(|(m, c)| Ok((m.clone(), parse_scalar(c)?)))
        .collect::<Result<Vec<_>>>()?;
    Polynomial::from_terms(nvars, terms)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: String,
    pub v: String,
    pub label: Vec<String>,
}

/// Edges are not order relations by themselves; every relation `a < b` is
/// listed in `relations` as `[a, b]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub dim: usize,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub relations: Vec<(String, String)>,
}

impl GraphJson {
    pub fn from_graph(g: &MomentGraph) -> Self {
        Self {
            dim: g.dim(),
            vertices: g.vertices().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeJson {
                    u: g.name(e.u).to_string(),
                    v: g.name(e.v).to_string(),
                    label: e.label.iter().map(format_scalar).collect(),
                })
                .collect(),
            relations: g
                .relations()
                .iter()
                .map(|(a, b)| (g.name(*a).to_string(), g.name(*b).to_string()))
                .collect(),
        }
    }

    /// Parses without checking the moment graph axioms; see [`MomentGraph::validate`].
    pub fn to_graph(&self) -> Result<MomentGraph> {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                if e.label.len() != self.dim {
                    return Err(Error::Parse(format!(
                        "label of {}-{} has length {}",
                        e.u,
                        e.v,
                        e.label.len()
                    )));
                }
                let label = e.label.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>>>()?;
                Ok((e.u.clone(), e.v.clone(), label))
            })
            .collect::<Result<Vec<_>>>()?;
        MomentGraph::new(self.dim, self.vertices.clone(), edges, self.relations.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementJson {
    pub degree: i32,
    pub tuple: Vec<PolyJson>,
}

impl ElementJson {
    fn from_pair(t: &[Polynomial], degree: i32) -> Self {
        Self {
            degree,
            tuple: t.iter().map(poly_to_json).collect(),
        }
    }

    fn to_pair(&self, nvars: usize) -> Result<(Vec<Polynomial>, i32)> {
        Ok((
            self.tuple
                .iter()
                .map(|p| poly_from_json(nvars, p))
                .collect::<Result<_>>()?,
            self.degree,
        ))
    }
}

fn generators_json(m: &GradedSubmodule) -> Vec<ElementJson> {
    m.minimal_generators()
        .iter()
        .map(|g| ElementJson::from_pair(&g.tuple, g.degree))
        .collect()
}

fn span_json(ambient: &AmbientModule, gens: &[ElementJson], cap: i32) -> Result<GradedSubmodule> {
    let pairs = gens
        .iter()
        .map(|g| g.to_pair(ambient.nvars()))
        .collect::<Result<Vec<_>>>()?;
    GradedSubmodule::span(ambient.clone(), &pairs, cap)
}

type MatrixJson = Vec<Vec<PolyJson>>;

fn matrix_json(m: &PolyMap) -> MatrixJson {
    m.entries()
        .iter()
        .map(|row| row.iter().map(poly_to_json).collect())
        .collect()
}

fn matrix_from_json(nvars: usize, m: &MatrixJson) -> Result<Vec<Vec<Polynomial>>> {
    m.iter()
        .map(|row| row.iter().map(|p| poly_from_json(nvars, p)).collect())
        .collect()
}

/// A vertex stalk: free with the given shifts, or the submodule spanned by
/// `submodule` inside that free module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexStalkJson {
    pub shifts: Vec<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submodule: Option<Vec<ElementJson>>,
}

/// An edge stalk: components with `shifts`, those flagged in `quotient`
/// reduced modulo the edge label, optionally cut down to `submodule`, modulo
/// the span of `relations`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStalkJson {
    pub u: String,
    pub v: String,
    pub shifts: Vec<i32>,
    pub quotient: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submodule: Option<Vec<ElementJson>>,
    #[serde(default)]
    pub relations: Vec<ElementJson>,
    /// Matrix of the map from the stalk at `u`, one row per edge component.
    pub rho_u: MatrixJson,
    pub rho_v: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheafJson {
    pub graph: GraphJson,
    /// Cap to which submodules and relation modules are materialized.
    pub cap: i32,
    pub vertices: Vec<VertexStalkJson>,
    pub edges: Vec<EdgeStalkJson>,
}

impl SheafJson {
    pub fn from_sheaf(m: &GSheaf, cap: i32) -> Self {
        let g = m.graph();
        let vertices = m
            .vertex_stalks()
            .iter()
            .map(|s| VertexStalkJson {
                shifts: s.ambient().shifts(),
                submodule: s.submodule_part().map(generators_json),
            })
            .collect();
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let st = m.edge_stalk(i);
                EdgeStalkJson {
                    u: g.name(e.u).to_string(),
                    v: g.name(e.v).to_string(),
                    shifts: st.ambient().shifts(),
                    quotient: st
                        .ambient()
                        .components()
                        .iter()
                        .map(|c| c.annihilator.is_some())
                        .collect(),
                    submodule: st.submodule_part().map(generators_json),
                    relations: st.relations().map(generators_json).unwrap_or_default(),
                    rho_u: matrix_json(m.rho(i, e.u)),
                    rho_v: matrix_json(m.rho(i, e.v)),
                }
            })
            .collect();
        Self {
            graph: GraphJson::from_graph(g),
            cap,
            vertices,
            edges,
        }
    }

    pub fn to_sheaf(&self) -> Result<GSheaf> {
        let g = self.graph.to_graph()?;
        g.ensure_valid()?;
        let n = g.dim();
        if self.vertices.len() != g.vertex_count() || self.edges.len() != g.edges().len() {
            return Err(Error::Parse("sheaf lists do not match the graph".into()));
        }
        let mut stalks = Vec::new();
        for v in &self.vertices {
            let ambient = AmbientModule::new(n, v.shifts.iter().map(|k| Component::free(*k)).collect())?;
            stalks.push(match &v.submodule {
                Some(gens) => VertexStalk::submodule(span_json(&ambient, gens, self.cap)?),
                None => VertexStalk::free(ambient),
            });
        }
        let mut edge_stalks = Vec::new();
        let mut rho = Vec::new();
        for (i, (e, ej)) in g.edges().iter().zip(&self.edges).enumerate() {
            if ej.u != g.name(e.u) || ej.v != g.name(e.v) {
                return Err(Error::Parse(format!(
                    "edge {i} should join `{}` and `{}`",
                    g.name(e.u),
                    g.name(e.v)
                )));
            }
            if ej.quotient.len() != ej.shifts.len() {
                return Err(Error::Parse(format!("edge {i}: one quotient flag per component")));
            }
            let alpha = g.alpha(i)?;
            let comps = ej
                .shifts
                .iter()
                .zip(&ej.quotient)
                .map(|(k, q)| {
                    if *q {
                        Component::quotient(*k, alpha.clone())
                    } else {
                        Component::free(*k)
                    }
                })
                .collect();
            let ambient = AmbientModule::new(n, comps)?;
            let sub = ej
                .submodule
                .as_ref()
                .map(|gens| span_json(&ambient, gens, self.cap))
                .transpose()?;
            let rel = if ej.relations.is_empty() {
                None
            } else {
                Some(span_json(&ambient, &ej.relations, self.cap)?)
            };
            let mu = PolyMap::new(
                stalks[e.u].ambient().clone(),
                ambient.clone(),
                matrix_from_json(n, &ej.rho_u)?,
            )?;
            let mv = PolyMap::new(
                stalks[e.v].ambient().clone(),
                ambient.clone(),
                matrix_from_json(n, &ej.rho_v)?,
            )?;
            edge_stalks.push(EdgeStalk::new(ambient, sub, rel)?);
            rho.push([mu, mv]);
        }
        GSheaf::new(g, stalks, edge_stalks, rho)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZModuleJson {
    pub graph: GraphJson,
    pub coords: Vec<String>,
    /// Shifts of the free coordinate module at each coordinate; rank one
    /// in degree zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<Vec<i32>>>,
    pub generators: Vec<ElementJson>,
}

impl ZModuleJson {
    pub fn from_module(m: &ZModule) -> Self {
        let g = m.graph();
        let shifts: Vec<Vec<i32>> = m.blocks().iter().map(AmbientModule::shifts).collect();
        let plain = shifts.iter().all(|s| s == &[0]);
        Self {
            graph: GraphJson::from_graph(g),
            coords: m.coords().iter().map(|x| g.name(*x).to_string()).collect(),
            shifts: if plain { None } else { Some(shifts) },
            generators: generators_json(m.module()),
        }
    }

    pub fn to_module(&self, cap: i32) -> Result<ZModule> {
        let g = self.graph.to_graph()?;
        g.ensure_valid()?;
        let n = g.dim();
        let coords: Vec<usize> = self.coords.iter().map(|c| g.vertex(c)).collect::<Result<_>>()?;
        let set: VertexSet = coords.iter().copied().collect();
        if set.len() != coords.len() {
            return Err(Error::Parse("repeated coordinate".into()));
        }
        let shifts = self.shifts.clone().unwrap_or_else(|| vec![vec![0]; coords.len()]);
        if shifts.len() != coords.len() {
            return Err(Error::Parse("one shift list per coordinate".into()));
        }
        // blocks are stored in increasing vertex order
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by_key(|i| coords[*i]);
        let blocks: Vec<AmbientModule> = order
            .iter()
            .map(|i| AmbientModule::new(n, shifts[*i].iter().map(|k| Component::free(*k)).collect()))
            .collect::<Result<_>>()?;
        let mut starts = vec![0; coords.len()];
        let mut at = 0;
        for i in &order {
            starts[*i] = at;
            at += shifts[*i].len();
        }
        let gens = self
            .generators
            .iter()
            .map(|e| {
                if e.tuple.len() != at {
                    return Err(Error::Parse(format!(
                        "generator has {} entries, expected {at}",
                        e.tuple.len()
                    )));
                }
                let (t, d) = e.to_pair(n)?;
                let mut sorted = Vec::with_capacity(at);
                for i in &order {
                    sorted.extend(t[starts[*i]..starts[*i] + shifts[*i].len()].iter().cloned());
                }
                Ok((sorted, d))
            })
            .collect::<Result<Vec<_>>>()?;
        ZModule::from_blocks(&g, &set, blocks, &gens, cap)
    }
}

/// Parses a comma separated list of vertex names.
pub fn parse_vertex_list(g: &MomentGraph, text: &str) -> Result<VertexSet> {
    let names: BTreeSet<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    names.into_iter().map(|n| g.vertex(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ivec;

    #[test]
    fn graph_round_trip() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[1, 1]));
        let j = GraphJson::from_graph(&g);
        let text = serde_json::to_string(&j).unwrap();
        let back: GraphJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_graph().unwrap(), g);
    }

    #[test]
    fn sheaf_round_trip() {
        let g = MomentGraph::subgeneric(ivec(&[1, 2]));
        let z = ZModule::structure_algebra(&g, 6).unwrap();
        let l = z.localize().unwrap();
        let j = SheafJson::from_sheaf(&l, 6);
        let back = j.to_sheaf().unwrap();
        assert_eq!(SheafJson::from_sheaf(&back, 6), j);
        let a = GSheaf::structure_sheaf(&g).unwrap();
        let j = SheafJson::from_sheaf(&a, 6);
        assert_eq!(SheafJson::from_sheaf(&j.to_sheaf().unwrap(), 6), j);
    }

    #[test]
    fn zmodule_round_trip() {
        let g = MomentGraph::subgeneric(ivec(&[1]));
        let z = ZModule::structure_algebra(&g, 8).unwrap();
        let j = ZModuleJson::from_module(&z);
        let back = j.to_module(8).unwrap();
        assert!(back.same_as(&z));
        let v = ZModule::verma(&g, 1, 2, 8).unwrap();
        let j = ZModuleJson::from_module(&v);
        assert!(j.to_module(8).unwrap().same_as(&v));
    }
}
