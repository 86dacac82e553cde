//! Sheaves on moment graphs: stalks, edge stalks, restriction maps, and
//! their spaces of sections.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MomentGraph, VertexSet};
use crate::linalg::{kernel_of_columns, SparseVec, Subspace};
use crate::module::{select_ranges, AmbientModule, GradedSubmodule, PolyMap};
use crate::poly::Polynomial;

/// A vertex stalk: a free ambient module, or a graded submodule of one.
#[derive(Clone, Debug)]
pub struct VertexStalk {
    ambient: AmbientModule,
    sub: Option<GradedSubmodule>,
}

impl VertexStalk {
    pub fn free(ambient: AmbientModule) -> Self {
        Self { ambient, sub: None }
    }

    pub fn submodule(sub: GradedSubmodule) -> Self {
        Self {
            ambient: sub.ambient().clone(),
            sub: Some(sub),
        }
    }

    pub fn ambient(&self) -> &AmbientModule {
        &self.ambient
    }

    pub fn submodule_part(&self) -> Option<&GradedSubmodule> {
        self.sub.as_ref()
    }

    pub fn slice(&self, d: i32) -> Subspace {
        match &self.sub {
            Some(m) => m.slice_or_zero(d),
            None => Subspace::full(self.ambient.slice_dim(d)),
        }
    }

    pub fn dim_at(&self, d: i32) -> usize {
        match &self.sub {
            Some(m) => m.dim_at(d),
            None => self.ambient.slice_dim(d),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.sub {
            Some(m) => m.is_zero(),
            None => self.ambient.rank() == 0,
        }
    }

    pub fn as_module(&self, cap: i32) -> GradedSubmodule {
        match &self.sub {
            Some(m) => m.truncate(cap),
            None => GradedSubmodule::full(self.ambient.clone(), cap),
        }
    }

    fn cap(&self) -> Option<i32> {
        self.sub.as_ref().map(GradedSubmodule::cap)
    }
}

/// An edge stalk presented as `sub / rel` inside an ambient module whose
/// components may be quotients `S/aS`.
#[derive(Clone, Debug)]
pub struct EdgeStalk {
    ambient: AmbientModule,
    sub: Option<GradedSubmodule>,
    rel: Option<GradedSubmodule>,
}

impl EdgeStalk {
    pub fn new(ambient: AmbientModule, sub: Option<GradedSubmodule>, rel: Option<GradedSubmodule>) -> Result<Self> {
        for m in sub.iter().chain(rel.iter()) {
            if m.ambient() != &ambient {
                return Err(Error::AmbientMismatch);
            }
        }
        Ok(Self { ambient, sub, rel })
    }

    pub fn plain(ambient: AmbientModule) -> Self {
        Self {
            ambient,
            sub: None,
            rel: None,
        }
    }

    pub fn zero(nvars: usize) -> Self {
        Self::plain(AmbientModule::zero(nvars))
    }

    pub fn ambient(&self) -> &AmbientModule {
        &self.ambient
    }

    pub fn submodule_part(&self) -> Option<&GradedSubmodule> {
        self.sub.as_ref()
    }

    pub fn relations(&self) -> Option<&GradedSubmodule> {
        self.rel.as_ref()
    }

    pub fn sub_at(&self, d: i32) -> Subspace {
        match &self.sub {
            Some(m) => m.slice_or_zero(d),
            None => Subspace::full(self.ambient.slice_dim(d)),
        }
    }

    pub fn rel_at(&self, d: i32) -> Subspace {
        match &self.rel {
            Some(m) => m.slice_or_zero(d),
            None => Subspace::zero(self.ambient.slice_dim(d)),
        }
    }

    /// Dimension of the degree `d` piece of `sub / rel`.
    pub fn dim_at(&self, d: i32) -> usize {
        self.sub_at(d).dim() - self.rel_at(d).dim()
    }

    fn cap(&self) -> Option<i32> {
        self.sub.iter().chain(self.rel.iter()).map(GradedSubmodule::cap).min()
    }
}

#[derive(Clone, Debug)]
pub struct GSheaf {
    graph: MomentGraph,
    vertex_stalks: Vec<VertexStalk>,
    edge_stalks: Vec<EdgeStalk>,
    // per edge: maps from the stalks at `u` and at `v`
    rho: Vec<[PolyMap; 2]>,
}

/// Where a diagnostic first failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    pub vertex: Option<String>,
    pub edge: Option<(String, String)>,
    pub degree: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub cap: i32,
}

impl Verdict {
    fn pass(cap: i32) -> Self {
        Self {
            holds: true,
            witness: None,
            cap,
        }
    }

    fn fail(cap: i32, w: Witness) -> Self {
        Self {
            holds: false,
            witness: Some(w),
            cap,
        }
    }
}

/// Sections over a vertex set, inside the direct sum of its stalks'
/// ambients taken in increasing vertex order.
#[derive(Clone, Debug)]
pub struct SectionSpace {
    vertices: Vec<usize>,
    // component range of each vertex in the ambient
    blocks: Vec<(usize, usize)>,
    module: GradedSubmodule,
}

impl SectionSpace {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn module(&self) -> &GradedSubmodule {
        &self.module
    }

    pub fn into_module(self) -> GradedSubmodule {
        self.module
    }

    /// Component range of vertex `x`, if present.
    pub fn block(&self, x: usize) -> Option<(usize, usize)> {
        self.vertices.iter().position(|v| *v == x).map(|i| self.blocks[i])
    }

    fn components_of(&self, set: &[usize]) -> Vec<usize> {
        set.iter()
            .filter_map(|x| self.block(*x))
            .flat_map(|(a, b)| a..b)
            .collect()
    }

    /// Projection onto the coordinates of `set`.
    pub fn project(&self, set: &VertexSet) -> GradedSubmodule {
        let set: Vec<usize> = set.iter().copied().collect();
        self.module.select_components(&self.components_of(&set))
    }
}

impl GSheaf {
    pub fn new(
        graph: MomentGraph,
        vertex_stalks: Vec<VertexStalk>,
        edge_stalks: Vec<EdgeStalk>,
        rho: Vec<[PolyMap; 2]>,
    ) -> Result<Self> {
        graph.ensure_valid()?;
        let n = graph.dim();
        if vertex_stalks.len() != graph.vertex_count()
            || edge_stalks.len() != graph.edges().len()
            || rho.len() != edge_stalks.len()
        {
            return Err(Error::InvalidGraph("sheaf data does not match the graph".into()));
        }
        for s in &vertex_stalks {
            if s.ambient.nvars() != n {
                return Err(Error::AmbientMismatch);
            }
        }
        for (edge, (st, maps)) in graph.edges().iter().zip(edge_stalks.iter().zip(&rho)) {
            if st.ambient.nvars() != n {
                return Err(Error::AmbientMismatch);
            }
            for (k, x) in [edge.u, edge.v].into_iter().enumerate() {
                if maps[k].source() != vertex_stalks[x].ambient() || maps[k].target() != st.ambient() {
                    return Err(Error::AmbientMismatch);
                }
            }
        }
        Ok(Self {
            graph,
            vertex_stalks,
            edge_stalks,
            rho,
        })
    }

    pub fn graph(&self) -> &MomentGraph {
        &self.graph
    }

    pub fn vertex_stalk(&self, x: usize) -> &VertexStalk {
        &self.vertex_stalks[x]
    }

    pub fn vertex_stalks(&self) -> &[VertexStalk] {
        &self.vertex_stalks
    }

    pub fn edge_stalk(&self, e: usize) -> &EdgeStalk {
        &self.edge_stalks[e]
    }

    pub fn edge_stalks(&self) -> &[EdgeStalk] {
        &self.edge_stalks
    }

    /// The map from the stalk at endpoint `x` of edge `e` to its edge stalk.
    pub fn rho(&self, e: usize, x: usize) -> &PolyMap {
        let edge = &self.graph.edges()[e];
        if x == edge.u {
            &self.rho[e][0]
        } else {
            assert_eq!(x, edge.v, "vertex is not an endpoint");
            &self.rho[e][1]
        }
    }

    pub fn rho_pairs(&self) -> &[[PolyMap; 2]] {
        &self.rho
    }

    pub fn structure_sheaf(graph: &MomentGraph) -> Result<Self> {
        graph.ensure_valid()?;
        let n = graph.dim();
        let s = AmbientModule::free(n, &[0]);
        let vertex_stalks = vec![VertexStalk::free(s.clone()); graph.vertex_count()];
        let mut edge_stalks = Vec::new();
        let mut rho = Vec::new();
        for e in 0..graph.edges().len() {
            let q = AmbientModule::quotient(n, &[0], &graph.alpha(e)?);
            let m = PolyMap::new(s.clone(), q.clone(), vec![vec![Polynomial::one(n)]])?;
            edge_stalks.push(EdgeStalk::plain(q));
            rho.push([m.clone(), m]);
        }
        Ok(Self {
            graph: graph.clone(),
            vertex_stalks,
            edge_stalks,
            rho,
        })
    }

    /// Rank-one free stalk with generator in degree `shift` at `x`, zero elsewhere.
    pub fn skyscraper(graph: &MomentGraph, x: usize, shift: i32) -> Result<Self> {
        if x >= graph.vertex_count() {
            return Err(Error::UnknownVertex(x.to_string()));
        }
        let n = graph.dim();
        let stalks = (0..graph.vertex_count())
            .map(|y| {
                VertexStalk::free(if y == x {
                    AmbientModule::free(n, &[shift])
                } else {
                    AmbientModule::zero(n)
                })
            })
            .collect();
        Self::with_zero_edges(graph, stalks)
    }

    fn with_zero_edges(graph: &MomentGraph, vertex_stalks: Vec<VertexStalk>) -> Result<Self> {
        let n = graph.dim();
        let rho = graph
            .edges()
            .iter()
            .map(|e| {
                [
                    zero_map(vertex_stalks[e.u].ambient(), n),
                    zero_map(vertex_stalks[e.v].ambient(), n),
                ]
            })
            .collect();
        let edge_stalks = vec![EdgeStalk::zero(n); graph.edges().len()];
        Self::new(graph.clone(), vertex_stalks, edge_stalks, rho)
    }

    pub fn zero(graph: &MomentGraph) -> Result<Self> {
        let n = graph.dim();
        Self::with_zero_edges(
            graph,
            vec![VertexStalk::free(AmbientModule::zero(n)); graph.vertex_count()],
        )
    }

    /// Stalks outside `set` and edges not inside it become zero.
    pub fn restrict(&self, set: &VertexSet) -> GSheaf {
        let n = self.graph.dim();
        let vertex_stalks: Vec<VertexStalk> = (0..self.graph.vertex_count())
            .map(|x| {
                if set.contains(&x) {
                    self.vertex_stalks[x].clone()
                } else {
                    VertexStalk::free(AmbientModule::zero(n))
                }
            })
            .collect();
        let mut edge_stalks = Vec::new();
        let mut rho = Vec::new();
        for (i, e) in self.graph.edges().iter().enumerate() {
            if set.contains(&e.u) && set.contains(&e.v) {
                edge_stalks.push(self.edge_stalks[i].clone());
                rho.push(self.rho[i].clone());
            } else {
                edge_stalks.push(EdgeStalk::zero(n));
                rho.push([
                    zero_map(vertex_stalks[e.u].ambient(), n),
                    zero_map(vertex_stalks[e.v].ambient(), n),
                ]);
            }
        }
        GSheaf {
            graph: self.graph.clone(),
            vertex_stalks,
            edge_stalks,
            rho,
        }
    }

    /// Checks that every edge stalk is killed by its label and that each map
    /// lands in the edge stalk, up to `cap`.
    pub fn check_invariants(&self, cap: i32) -> Result<()> {
        for (i, e) in self.graph.edges().iter().enumerate() {
            let st = &self.edge_stalks[i];
            let alpha = self.graph.alpha(i)?.as_polynomial();
            let low = st.ambient.low_degree();
            for d in (low..=cap - 2).step_by(2) {
                let cols = st.ambient.multiplication_columns(d, &alpha, 2);
                let rel = st.rel_at(d + 2);
                for b in st.sub_at(d).basis() {
                    if !rel.contains(&SparseVec::combination(b, &cols)) {
                        return Err(Error::InvalidGraph(format!(
                            "edge stalk of {}-{} is not annihilated by its label in degree {d}",
                            self.graph.name(e.u),
                            self.graph.name(e.v)
                        )));
                    }
                }
            }
            for (k, x) in [e.u, e.v].into_iter().enumerate() {
                let vs = &self.vertex_stalks[x];
                for d in (vs.ambient.low_degree()..=cap).step_by(2) {
                    let cols = self.rho[i][k].columns_at(d);
                    let sub = st.sub_at(d);
                    for b in vs.slice(d).basis() {
                        if !sub.contains(&SparseVec::combination(b, &cols)) {
                            return Err(Error::InvalidGraph(format!(
                                "map from `{}` leaves the edge stalk in degree {d}",
                                self.graph.name(x)
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_cap(&self, cap: i32) -> Result<()> {
        if cap % 2 != 0 {
            return Err(Error::OddCap(cap));
        }
        for s in &self.vertex_stalks {
            if let Some(k) = s.ambient.shifts().into_iter().max() {
                if k > cap {
                    return Err(Error::CapExceeded { degree: k, cap });
                }
            }
            if let Some(c) = s.cap() {
                if c < cap {
                    return Err(Error::CapExceeded { degree: cap, cap: c });
                }
            }
        }
        for s in &self.edge_stalks {
            if let Some(c) = s.cap() {
                if c < cap {
                    return Err(Error::CapExceeded { degree: cap, cap: c });
                }
            }
        }
        Ok(())
    }

    /// Sections over an arbitrary vertex set, up to degree `cap`.
    pub fn sections(&self, set: &VertexSet, cap: i32) -> Result<SectionSpace> {
        self.check_cap(cap)?;
        let vertices: Vec<usize> = set.iter().copied().collect();
        if let Some(x) = vertices.iter().find(|x| **x >= self.graph.vertex_count()) {
            return Err(Error::UnknownVertex(x.to_string()));
        }
        let n = self.graph.dim();
        let mut blocks = Vec::new();
        let mut at = 0;
        for x in &vertices {
            let r = self.vertex_stalks[*x].ambient.rank();
            blocks.push((at, at + r));
            at += r;
        }
        let ambient = AmbientModule::concat(n, vertices.iter().map(|x| &self.vertex_stalks[*x].ambient));
        let edges = self.graph.edges_within(set);
        let module = GradedSubmodule::from_slices(ambient, cap, |d| self.sections_at(&vertices, &edges, d))?;
        Ok(SectionSpace {
            vertices,
            blocks,
            module,
        })
    }

    pub fn global_sections(&self, cap: i32) -> Result<SectionSpace> {
        self.sections(&self.graph.all_vertices(), cap)
    }

    fn sections_at(&self, vertices: &[usize], edges: &[usize], d: i32) -> Subspace {
        // unknowns: coordinates of each stalk in its own basis
        let bases: Vec<Vec<SparseVec>> = vertices
            .iter()
            .map(|x| self.vertex_stalks[*x].slice(d).basis_vec())
            .collect();
        let slice_dims: Vec<usize> = vertices
            .iter()
            .map(|x| self.vertex_stalks[*x].ambient.slice_dim(d))
            .collect();
        let mut unknown_start = Vec::with_capacity(vertices.len());
        let mut total = 0;
        for b in &bases {
            unknown_start.push(total);
            total += b.len();
        }
        let mut columns = vec![SparseVec::new(); total];
        let mut row_offset = 0;
        for &e in edges {
            let edge = &self.graph.edges()[e];
            let st = &self.edge_stalks[e];
            let rel = st.rel_at(d);
            for (k, x, sign) in [(0usize, edge.u, 1i64), (1, edge.v, -1)] {
                let pos = vertices.binary_search(&x).expect("edge inside the set");
                let cols = self.rho[e][k].columns_at(d);
                for (j, b) in bases[pos].iter().enumerate() {
                    let img = rel.reduce(&SparseVec::combination(b, &cols));
                    let img = img.scale(&crate::poly::int(sign)).offset(row_offset);
                    let c = &mut columns[unknown_start[pos] + j];
                    *c = c.add(&img);
                }
            }
            row_offset += st.ambient.slice_dim(d);
        }
        let dim: usize = slice_dims.iter().sum();
        let mut out = Subspace::zero(dim);
        for combo in kernel_of_columns(&columns) {
            let mut entries = Vec::new();
            let mut offset = 0;
            for (pos, b) in bases.iter().enumerate() {
                let local = combo.window(unknown_start[pos], unknown_start[pos] + b.len());
                if !local.is_zero() {
                    entries.extend(
                        SparseVec::combination(&local, b)
                            .offset(offset)
                            .entries()
                            .iter()
                            .cloned(),
                    );
                }
                offset += slice_dims[pos];
            }
            out.insert(SparseVec::from_entries(entries));
        }
        out
    }

    fn edge_names(&self, e: usize) -> (String, String) {
        let edge = &self.graph.edges()[e];
        (self.graph.name(edge.u).to_string(), self.graph.name(edge.v).to_string())
    }

    /// Whether the sheaf is recovered from its global sections by
    /// localization: stalks are the projections of global sections and each
    /// edge stalk is the pushout of the neighbouring projections.
    pub fn is_generated_by_global_sections(&self, cap: i32) -> Result<Verdict> {
        let gamma = self.global_sections(cap)?;
        let nv = self.graph.vertex_count();
        let projections: Vec<GradedSubmodule> = (0..nv)
            .into_par_iter()
            .map(|x| gamma.project(&VertexSet::from([x])))
            .collect();
        for d in gamma.module.degree_range() {
            for x in 0..nv {
                if projections[x].dim_at(d) != self.vertex_stalks[x].dim_at(d) {
                    return Ok(Verdict::fail(
                        cap,
                        Witness {
                            kind: "stalk".into(),
                            vertex: Some(self.graph.name(x).into()),
                            edge: None,
                            degree: d,
                        },
                    ));
                }
            }
            for (e, edge) in self.graph.edges().iter().enumerate() {
                if let Some(kind) = self.pushout_defect(&gamma, &projections, e, edge.u, edge.v, d) {
                    return Ok(Verdict::fail(
                        cap,
                        Witness {
                            kind: kind.into(),
                            vertex: None,
                            edge: Some(self.edge_names(e)),
                            degree: d,
                        },
                    ));
                }
            }
        }
        Ok(Verdict::pass(cap))
    }

    // Compares (G^x + G^y) / K with the edge stalk in degree d, where G are
    // the projections of global sections and K the antidiagonal copy of the
    // edge-local module.
    fn pushout_defect(
        &self,
        gamma: &SectionSpace,
        proj: &[GradedSubmodule],
        e: usize,
        x: usize,
        y: usize,
        d: i32,
    ) -> Option<&'static str> {
        let st = &self.edge_stalks[e];
        let gx = proj[x].slice_or_zero(d).basis_vec();
        let gy = proj[y].slice_or_zero(d).basis_vec();
        let rel = st.rel_at(d);
        let cx = self.rho[e][0].columns_at(d);
        let cy = self.rho[e][1].columns_at(d);
        let images: Vec<SparseVec> = gx
            .iter()
            .map(|b| rel.reduce(&SparseVec::combination(b, &cx)))
            .chain(gy.iter().map(|b| rel.reduce(&SparseVec::combination(b, &cy))))
            .collect();
        let mut image = rel.clone();
        for v in &images {
            image.insert(v.clone());
        }
        if image.dim() != st.sub_at(d).dim() {
            return Some("edge-surjectivity");
        }
        let kernel_dim = kernel_of_columns(&images).len();
        if kernel_dim != self.edge_local_dim(gamma, proj, e, x, y, d) {
            return Some("edge-injectivity");
        }
        None
    }

    // dim of Z(E) * G^{x,y} in degree d
    fn edge_local_dim(
        &self,
        gamma: &SectionSpace,
        proj: &[GradedSubmodule],
        e: usize,
        x: usize,
        y: usize,
        d: i32,
    ) -> usize {
        let pair = gamma.project(&VertexSet::from([x, y]));
        let mut space = pair.slice_or_zero(d);
        let ax = self.vertex_stalks[x].ambient();
        let alpha = self.graph.alpha(e).expect("valid graph").as_polynomial();
        let cols = ax.multiplication_columns(d - 2, &alpha, 2);
        let first = x.min(y) == x;
        let other = self.vertex_stalks[if first { y } else { x }].ambient().slice_dim(d);
        for b in proj[x].slice_or_zero(d - 2).basis() {
            let v = SparseVec::combination(b, &cols);
            space.insert(if first { v } else { v.offset(other) });
        }
        space.dim()
    }

    /// Flabbiness through surjectivity of each stalk onto the image of the
    /// sections below it in the downward edge stalks. Requires the sheaf to
    /// be generated by global sections.
    pub fn is_flabby(&self, cap: i32) -> Result<Verdict> {
        let ggs = self.is_generated_by_global_sections(cap)?;
        if !ggs.holds {
            let w = ggs.witness.expect("failure has a witness");
            return Err(Error::NotGloballyGenerated(format!(
                "{} failure in degree {}",
                w.kind, w.degree
            )));
        }
        self.boundary_surjectivity(cap)
    }

    /// The stalk-to-boundary check without the global generation guard.
    pub fn boundary_surjectivity(&self, cap: i32) -> Result<Verdict> {
        let order = self.graph.linear_extension();
        let results: Vec<Result<Option<i32>>> = order.par_iter().map(|x| self.boundary_failure(*x, cap)).collect();
        for (x, r) in order.iter().zip(results) {
            if let Some(d) = r? {
                return Ok(Verdict::fail(
                    cap,
                    Witness {
                        kind: "boundary".into(),
                        vertex: Some(self.graph.name(*x).into()),
                        edge: None,
                        degree: d,
                    },
                ));
            }
        }
        Ok(Verdict::pass(cap))
    }

    fn boundary_failure(&self, x: usize, cap: i32) -> Result<Option<i32>> {
        let below = self.graph.less(x);
        let down: Vec<usize> = self
            .graph
            .edges_at(x)
            .into_iter()
            .filter(|e| below.contains(&self.graph.edges()[*e].other(x)))
            .collect();
        if down.is_empty() {
            return Ok(None);
        }
        let secs = self.sections(&below, cap)?;
        for d in secs.module.degree_range() {
            let mut offsets = Vec::new();
            let mut total = 0;
            for e in &down {
                offsets.push(total);
                total += self.edge_stalks[*e].ambient.slice_dim(d);
            }
            let rels: Vec<Subspace> = down.iter().map(|e| self.edge_stalks[*e].rel_at(d)).collect();
            let mut image = Subspace::zero(total);
            for b in self.vertex_stalks[x].slice(d).basis() {
                image.insert(self.boundary_vector(&down, &offsets, &rels, x, b, d));
            }
            let sl = secs.module.ambient().slice(d);
            let ranges: Vec<(usize, usize)> = secs
                .vertices
                .iter()
                .map(|y| {
                    let (a, b) = secs.block(*y).expect("vertex present");
                    sl.components_range(a, b)
                })
                .collect();
            for s in secs.module.slice_or_zero(d).basis() {
                let mut v = SparseVec::new();
                for (k, e) in down.iter().enumerate() {
                    let y = self.graph.edges()[*e].other(x);
                    let pos = secs.vertices.binary_search(&y).expect("endpoint below");
                    let sy = select_ranges(s, &[ranges[pos]]);
                    let idx = if self.graph.edges()[*e].u == y { 0 } else { 1 };
                    let img = rels[k].reduce(&SparseVec::combination(&sy, &self.rho[*e][idx].columns_at(d)));
                    v = v.add(&img.offset(offsets[k]));
                }
                if !image.contains(&v) {
                    return Ok(Some(d));
                }
            }
        }
        Ok(None)
    }

    fn boundary_vector(
        &self,
        down: &[usize],
        offsets: &[usize],
        rels: &[Subspace],
        x: usize,
        b: &SparseVec,
        d: i32,
    ) -> SparseVec {
        let mut v = SparseVec::new();
        for (k, e) in down.iter().enumerate() {
            let idx = if self.graph.edges()[*e].u == x { 0 } else { 1 };
            let img = rels[k].reduce(&SparseVec::combination(b, &self.rho[*e][idx].columns_at(d)));
            v = v.add(&img.offset(offsets[k]));
        }
        v
    }

    /// Sections over every open set are restrictions of global ones
    /// (exhaustive over open sets).
    pub fn flabby_by_open_sets(&self, cap: i32) -> Result<Verdict> {
        let gamma = self.global_sections(cap)?;
        for open in self.graph.open_sets() {
            let local = self.sections(&open, cap)?;
            let restricted = gamma.project(&open);
            if let Some(d) = first_dim_gap(&restricted, local.module()) {
                let x = self
                    .graph
                    .maximal_in(&open)
                    .first()
                    .map(|x| self.graph.name(*x).to_string());
                return Ok(Verdict::fail(
                    cap,
                    Witness {
                        kind: "open-set".into(),
                        vertex: x,
                        edge: None,
                        degree: d,
                    },
                ));
            }
        }
        Ok(Verdict::pass(cap))
    }

    /// Sections over `{<= x}` restrict onto sections over `{< x}` for all `x`.
    pub fn flabby_by_principal_sets(&self, cap: i32) -> Result<Verdict> {
        for x in self.graph.linear_extension() {
            let below = self.graph.less(x);
            let closed = self.sections(&self.graph.less_eq(x), cap)?;
            let open = self.sections(&below, cap)?;
            if let Some(d) = first_dim_gap(&closed.project(&below), open.module()) {
                return Ok(Verdict::fail(
                    cap,
                    Witness {
                        kind: "principal".into(),
                        vertex: Some(self.graph.name(x).into()),
                        edge: None,
                        degree: d,
                    },
                ));
            }
        }
        Ok(Verdict::pass(cap))
    }
}

fn zero_map(source: &AmbientModule, nvars: usize) -> PolyMap {
    PolyMap::new(source.clone(), AmbientModule::zero(nvars), Vec::new()).expect("zero map")
}

/// First degree where `a` (a submodule of `b`) has smaller dimension.
fn first_dim_gap(a: &GradedSubmodule, b: &GradedSubmodule) -> Option<i32> {
    b.degree_range().find(|d| a.dim_at(*d) != b.dim_at(*d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ivec;

    #[test]
    fn subgeneric_structure_sheaf_sections() {
        let g = MomentGraph::subgeneric(ivec(&[1]));
        let a = GSheaf::structure_sheaf(&g).unwrap();
        let gamma = a.global_sections(8).unwrap();
        assert_eq!(gamma.module().generator_degrees(), vec![0, 2]);
        let hf: Vec<usize> = gamma.module().hilbert_function().values().copied().collect();
        assert_eq!(hf, vec![1, 2, 2, 2, 2]);
        assert!(a.is_generated_by_global_sections(8).unwrap().holds);
        assert!(a.is_flabby(8).unwrap().holds);
    }

    #[test]
    fn diamond_is_not_flabby() {
        let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1]));
        let a = GSheaf::structure_sheaf(&g).unwrap();
        let v = a.is_flabby(6).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.vertex.as_deref(), Some("w"));
        assert_eq!(w.degree, 0);
        assert!(!a.flabby_by_principal_sets(6).unwrap().holds);
        assert!(!a.flabby_by_open_sets(6).unwrap().holds);
    }

    #[test]
    fn skyscraper_and_restriction() {
        let g = MomentGraph::subgeneric(ivec(&[1]));
        let x = g.vertex("x").unwrap();
        let sky = GSheaf::skyscraper(&g, x, 0).unwrap();
        let gamma = sky.global_sections(6).unwrap();
        assert_eq!(gamma.module().generator_degrees(), vec![0]);
        assert!(sky.is_flabby(6).unwrap().holds);
        let y = g.vertex("y").unwrap();
        let r = sky.restrict(&VertexSet::from([y]));
        assert!(r.global_sections(6).unwrap().module().is_zero());
    }

    #[test]
    fn cap_validation() {
        let g = MomentGraph::generic(1);
        let sky = GSheaf::skyscraper(&g, 0, 4).unwrap();
        assert!(matches!(sky.global_sections(2), Err(Error::CapExceeded { .. })));
        assert!(matches!(sky.global_sections(3), Err(Error::OddCap(3))));
    }

    #[test]
    fn a2_global_sections_generator_degrees() {
        let c = crate::coxeter::CoxeterSystem::from_type("A2").unwrap();
        let g = c.bruhat_moment_graph(&[]).unwrap();
        let gamma = GSheaf::structure_sheaf(&g).unwrap().global_sections(14).unwrap();
        assert_eq!(gamma.module().generator_degrees(), vec![0, 2, 2, 4, 4, 6]);
    }

    #[test]
    fn one_sided_edge_map_is_not_globally_generated() {
        let g = MomentGraph::subgeneric(ivec(&[1]));
        let s = AmbientModule::free(1, &[0]);
        let q = AmbientModule::quotient(1, &[0], &g.alpha(0).unwrap());
        let quot = PolyMap::new(s.clone(), q.clone(), vec![vec![Polynomial::one(1)]]).unwrap();
        let zero = PolyMap::new(s.clone(), q.clone(), vec![vec![Polynomial::zero(1)]]).unwrap();
        let m = GSheaf::new(
            g,
            vec![VertexStalk::free(s.clone()), VertexStalk::free(s)],
            vec![EdgeStalk::plain(q)],
            vec![[quot, zero]],
        )
        .unwrap();
        let v = m.is_generated_by_global_sections(6).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(
            (w.kind.as_str(), w.vertex.as_deref(), w.degree),
            ("stalk", Some("x"), 0)
        );
        assert!(matches!(m.is_flabby(6), Err(Error::NotGloballyGenerated(_))));
    }

    #[test]
    fn zero_edge_stalk_pushout_vanishes() {
        let g = MomentGraph::subgeneric(ivec(&[1]));
        let s = AmbientModule::free(1, &[0]);
        let z = AmbientModule::zero(1);
        let to_zero = PolyMap::new(s.clone(), z.clone(), Vec::new()).unwrap();
        let m = GSheaf::new(
            g,
            vec![VertexStalk::free(s.clone()), VertexStalk::free(s)],
            vec![EdgeStalk::plain(z)],
            vec![[to_zero.clone(), to_zero]],
        )
        .unwrap();
        assert!(m.is_generated_by_global_sections(6).unwrap().holds);
    }
}
