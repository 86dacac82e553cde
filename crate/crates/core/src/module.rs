//! Finitely generated graded modules over `S`, materialized degree by degree.
//!
//! Every module is a submodule of an [`AmbientModule`], a direct sum of
//! shifted copies of `S` and of `S/aS` for linear forms `a`. A component with
//! shift `k` has its generator `1` in degree `k`. Each graded piece is a
//! finite dimensional rational vector space, and all operations are carried
//! out slice by slice up to an even degree cap.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kernel_of_columns, SparseVec, Subspace};
use crate::poly::{count_monomials, monomials_of_degree, LinearForm, Monomial, Polynomial};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Component {
    pub shift: i32,
    pub annihilator: Option<LinearForm>,
}

impl Component {
    pub fn free(shift: i32) -> Self {
        Self {
            shift,
            annihilator: None,
        }
    }

    pub fn quotient(shift: i32, form: LinearForm) -> Self {
        Self {
            shift,
            annihilator: Some(form),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AmbientModule {
    nvars: usize,
    components: Vec<Component>,
}

impl AmbientModule {
    pub fn new(nvars: usize, components: Vec<Component>) -> Result<Self> {
        for c in &components {
            if c.shift % 2 != 0 {
                return Err(Error::Parse(format!("odd shift {}", c.shift)));
            }
            if let Some(a) = &c.annihilator {
                if a.dim() != nvars {
                    return Err(Error::Parse(format!(
                        "annihilator of length {} over {nvars} variables",
                        a.dim()
                    )));
                }
            }
        }
        Ok(Self { nvars, components })
    }

    pub fn free(nvars: usize, shifts: &[i32]) -> Self {
        Self::new(nvars, shifts.iter().map(|k| Component::free(*k)).collect()).expect("even shifts")
    }

    /// `⊕ (S/aS)[k_i]`
    pub fn quotient(nvars: usize, shifts: &[i32], form: &LinearForm) -> Self {
        Self::new(
            nvars,
            shifts.iter().map(|k| Component::quotient(*k, form.clone())).collect(),
        )
        .expect("even shifts")
    }

    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            components: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn is_free(&self) -> bool {
        self.components.iter().all(|c| c.annihilator.is_none())
    }

    pub fn shifts(&self) -> Vec<i32> {
        self.components.iter().map(|c| c.shift).collect()
    }

    pub fn direct_sum(&self, other: &AmbientModule) -> AmbientModule {
        assert_eq!(self.nvars, other.nvars);
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        AmbientModule {
            nvars: self.nvars,
            components,
        }
    }

    pub fn concat<'a>(nvars: usize, parts: impl IntoIterator<Item = &'a AmbientModule>) -> AmbientModule {
        let mut components = Vec::new();
        for p in parts {
            assert_eq!(p.nvars, nvars);
            components.extend(p.components.iter().cloned());
        }
        AmbientModule { nvars, components }
    }

    /// Lowest even degree that can carry a nonzero element (never above 0).
    pub fn low_degree(&self) -> i32 {
        self.components.iter().map(|c| c.shift).min().unwrap_or(0).min(0)
    }

    pub fn slice(&self, degree: i32) -> Slice {
        let mut comps = Vec::with_capacity(self.components.len());
        let mut offset = 0;
        for c in &self.components {
            let rel = degree - c.shift;
            let monos = if rel < 0 || rel % 2 != 0 {
                Vec::new()
            } else {
                monomials_of_degree(
                    self.nvars,
                    (rel / 2) as u32,
                    c.annihilator.as_ref().map(LinearForm::pivot),
                )
            };
            let index = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
            let len = monos.len();
            comps.push(CompSlice { offset, monos, index });
            offset += len;
        }
        Slice {
            degree,
            nvars: self.nvars,
            comps,
            dim: offset,
        }
    }

    pub fn slice_dim(&self, degree: i32) -> usize {
        self.components
            .iter()
            .map(|c| {
                let rel = degree - c.shift;
                if rel < 0 || rel % 2 != 0 {
                    0
                } else {
                    let n = if c.annihilator.is_some() {
                        self.nvars - 1
                    } else {
                        self.nvars
                    };
                    count_monomials(n, (rel / 2) as u32)
                }
            })
            .sum()
    }

    /// Reduces each entry modulo its component's annihilator.
    pub fn normalize(&self, tuple: &[Polynomial]) -> Vec<Polynomial> {
        tuple
            .iter()
            .zip(&self.components)
            .map(|(p, c)| match &c.annihilator {
                Some(a) => p.reduce_mod(a),
                None => p.clone(),
            })
            .collect()
    }

    /// Checks that `tuple` is homogeneous of degree `degree` after
    /// normalization; returns the normalized tuple.
    pub fn homogeneous_element(&self, tuple: &[Polynomial], degree: i32, index: usize) -> Result<Vec<Polynomial>> {
        if tuple.len() != self.components.len() || degree % 2 != 0 {
            return Err(Error::NotHomogeneous { index, degree });
        }
        let t = self.normalize(tuple);
        for (p, c) in t.iter().zip(&self.components) {
            if p.nvars() != self.nvars && !p.is_zero() {
                return Err(Error::NotHomogeneous { index, degree });
            }
            if !p.is_homogeneous_of(degree - c.shift) {
                return Err(Error::NotHomogeneous { index, degree });
            }
        }
        Ok(t)
    }

    /// Images of the coordinate basis of slice `degree` under multiplication
    /// by the homogeneous polynomial `p` of degree `e`.
    pub fn multiplication_columns(&self, degree: i32, p: &Polynomial, e: i32) -> Vec<SparseVec> {
        let src = self.slice(degree);
        let dst = self.slice(degree + e);
        let mut cols = Vec::with_capacity(src.dim);
        for (ci, comp) in src.comps.iter().enumerate() {
            let ann = self.components[ci].annihilator.as_ref();
            for m in &comp.monos {
                let mut prod = p.mul_monomial(m);
                if let Some(a) = ann {
                    prod = prod.reduce_mod(a);
                }
                cols.push(dst.component_vector(ci, &prod));
            }
        }
        cols
    }
}

#[derive(Clone, Debug)]
struct CompSlice {
    offset: usize,
    monos: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

/// Coordinates of one graded piece of an ambient module.
#[derive(Clone, Debug)]
pub struct Slice {
    degree: i32,
    nvars: usize,
    comps: Vec<CompSlice>,
    dim: usize,
}

impl Slice {
    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinate range of component `i`.
    pub fn component_range(&self, i: usize) -> (usize, usize) {
        let c = &self.comps[i];
        (c.offset, c.offset + c.monos.len())
    }

    /// Coordinate range of the components `first..last`.
    pub fn components_range(&self, first: usize, last: usize) -> (usize, usize) {
        if first >= last {
            let at = self.comps.get(first).map_or(self.dim, |c| c.offset);
            return (at, at);
        }
        (self.component_range(first).0, self.component_range(last - 1).1)
    }

    /// Coordinates of a normalized homogeneous polynomial placed in component `i`.
    pub fn component_vector(&self, i: usize, p: &Polynomial) -> SparseVec {
        let c = &self.comps[i];
        SparseVec::from_entries(
            p.terms()
                .map(|(m, a)| {
                    let k = c
                        .index
                        .get(m)
                        .unwrap_or_else(|| panic!("monomial {m:?} outside slice {}", self.degree));
                    (c.offset + k, a.clone())
                })
                .collect(),
        )
    }

    /// Coordinates of a normalized homogeneous tuple.
    pub fn vector(&self, tuple: &[Polynomial]) -> SparseVec {
        let mut entries = Vec::new();
        for (i, p) in tuple.iter().enumerate() {
            entries.extend(self.component_vector(i, p).entries().iter().cloned());
        }
        SparseVec::from_entries(entries)
    }

    pub fn tuple(&self, v: &SparseVec) -> Vec<Polynomial> {
        let mut out = vec![Polynomial::zero(self.nvars); self.comps.len()];
        let mut ci = 0;
        for (idx, c) in v.entries() {
            while ci + 1 < self.comps.len() && *idx >= self.comps[ci + 1].offset {
                ci += 1;
            }
            while *idx >= self.comps[ci].offset + self.comps[ci].monos.len() {
                ci += 1;
            }
            let comp = &self.comps[ci];
            out[ci].add_term(comp.monos[idx - comp.offset].clone(), c.clone());
        }
        out
    }
}

/// A homogeneous element together with its degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub degree: i32,
    #[serde(skip)]
    pub tuple: Vec<Polynomial>,
}

/// A degree-preserving map between ambient modules given by a matrix of
/// homogeneous polynomials; `entries[j][i]` sends source component `i` to
/// target component `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMap {
    source: AmbientModule,
    target: AmbientModule,
    entries: Vec<Vec<Polynomial>>,
}

impl PolyMap {
    pub fn new(source: AmbientModule, target: AmbientModule, entries: Vec<Vec<Polynomial>>) -> Result<Self> {
        if entries.len() != target.rank() || entries.iter().any(|r| r.len() != source.rank()) {
            return Err(Error::DegreeMismatch {
                row: entries.len(),
                col: entries.first().map_or(0, Vec::len),
                reason: format!("expected a {}x{} matrix", target.rank(), source.rank()),
            });
        }
        let n = source.nvars();
        let mut normalized = Vec::with_capacity(entries.len());
        for (j, row) in entries.iter().enumerate() {
            let tj = &target.components[j];
            let mut nrow = Vec::with_capacity(row.len());
            for (i, e) in row.iter().enumerate() {
                let si = &source.components[i];
                let e = match &tj.annihilator {
                    Some(a) => e.reduce_mod(a),
                    None => e.clone(),
                };
                if !e.is_homogeneous_of(si.shift - tj.shift) {
                    return Err(Error::DegreeMismatch {
                        row: j,
                        col: i,
                        reason: format!("entry must be homogeneous of degree {}", si.shift - tj.shift),
                    });
                }
                if let Some(a) = &si.annihilator {
                    let killed = a.as_polynomial().mul(&e);
                    let killed = match &tj.annihilator {
                        Some(b) => killed.reduce_mod(b),
                        None => killed,
                    };
                    if !killed.is_zero() {
                        return Err(Error::DegreeMismatch {
                            row: j,
                            col: i,
                            reason: "source annihilator does not kill the image".into(),
                        });
                    }
                }
                nrow.push(if e.is_zero() { Polynomial::zero(n) } else { e });
            }
            normalized.push(nrow);
        }
        Ok(Self {
            source,
            target,
            entries: normalized,
        })
    }

    pub fn identity(ambient: &AmbientModule) -> Self {
        let n = ambient.nvars();
        let r = ambient.rank();
        let entries = (0..r)
            .map(|j| {
                (0..r)
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
        Self::new(ambient.clone(), ambient.clone(), entries).expect("identity is graded")
    }

    pub fn source(&self) -> &AmbientModule {
        &self.source
    }

    pub fn target(&self) -> &AmbientModule {
        &self.target
    }

    pub fn entries(&self) -> &[Vec<Polynomial>] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> &Polynomial {
        &self.entries[row][col]
    }

    /// Columns of the induced linear map on slice `degree`.
    pub fn columns_at(&self, degree: i32) -> Vec<SparseVec> {
        let src = self.source.slice(degree);
        let dst = self.target.slice(degree);
        let mut cols = Vec::with_capacity(src.dim());
        for (i, comp) in src.comps.iter().enumerate() {
            for m in &comp.monos {
                let mut acc = SparseVec::new();
                for (j, row) in self.entries.iter().enumerate() {
                    let e = &row[i];
                    if e.is_zero() {
                        continue;
                    }
                    let mut prod = e.mul_monomial(m);
                    if let Some(a) = &self.target.components[j].annihilator {
                        prod = prod.reduce_mod(a);
                    }
                    acc = acc.add(&dst.component_vector(j, &prod));
                }
                cols.push(acc);
            }
        }
        cols
    }

    pub fn apply_vec(columns: &[SparseVec], v: &SparseVec) -> SparseVec {
        SparseVec::combination(v, columns)
    }

    pub fn apply(&self, tuple: &[Polynomial]) -> Vec<Polynomial> {
        let n = self.target.nvars();
        let out: Vec<Polynomial> = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(tuple)
                    .fold(Polynomial::zero(n), |acc, (e, p)| acc.add(&e.mul(p)))
            })
            .collect();
        self.target.normalize(&out)
    }
}

/// A graded submodule of an ambient module, materialized up to `cap`.
#[derive(Debug)]
pub struct GradedSubmodule {
    ambient: AmbientModule,
    cap: i32,
    low: i32,
    slices: Vec<Subspace>,
    generators: OnceLock<Vec<Generator>>,
}

impl Clone for GradedSubmodule {
    fn clone(&self) -> Self {
        let generators = OnceLock::new();
        if let Some(g) = self.generators.get() {
            let _ = generators.set(g.clone());
        }
        Self {
            ambient: self.ambient.clone(),
            cap: self.cap,
            low: self.low,
            slices: self.slices.clone(),
            generators,
        }
    }
}

impl PartialEq for GradedSubmodule {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.cap == other.cap && self.same_slices(other)
    }
}

/// Outcome of a graded freeness test, valid through `verified_up_to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreenessVerdict {
    pub free: bool,
    pub generator_degrees: Vec<i32>,
    pub first_failing_degree: Option<i32>,
    pub verified_up_to: i32,
}

fn check_cap(cap: i32) -> Result<()> {
    if cap % 2 != 0 {
        return Err(Error::OddCap(cap));
    }
    Ok(())
}

impl GradedSubmodule {
    fn degrees(low: i32, cap: i32) -> impl Iterator<Item = i32> + Clone {
        (low..=cap).step_by(2)
    }

    pub fn zero(ambient: AmbientModule, cap: i32) -> Self {
        let low = ambient.low_degree();
        let slices = Self::degrees(low, cap)
            .map(|d| Subspace::zero(ambient.slice_dim(d)))
            .collect();
        Self {
            ambient,
            cap,
            low,
            slices,
            generators: OnceLock::new(),
        }
    }

    pub fn full(ambient: AmbientModule, cap: i32) -> Self {
        let low = ambient.low_degree();
        let slices = Self::degrees(low, cap)
            .map(|d| Subspace::full(ambient.slice_dim(d)))
            .collect();
        Self {
            ambient,
            cap,
            low,
            slices,
            generators: OnceLock::new(),
        }
    }

    /// The `S`-span of homogeneous generators `(tuple, degree)`.
    pub fn span(ambient: AmbientModule, gens: &[(Vec<Polynomial>, i32)], cap: i32) -> Result<Self> {
        check_cap(cap)?;
        let mut by_degree: BTreeMap<i32, Vec<Vec<Polynomial>>> = BTreeMap::new();
        for (idx, (t, d)) in gens.iter().enumerate() {
            let t = ambient.homogeneous_element(t, *d, idx)?;
            if *d > cap {
                return Err(Error::CapExceeded { degree: *d, cap });
            }
            by_degree.entry(*d).or_default().push(t);
        }
        let low = ambient.low_degree().min(by_degree.keys().next().copied().unwrap_or(0));
        let n = ambient.nvars();
        let var_polys: Vec<Polynomial> = (0..n).map(|j| Polynomial::var(n, j)).collect();
        let mut slices: Vec<Subspace> = Vec::new();
        for d in Self::degrees(low, cap) {
            let sl = ambient.slice(d);
            let mut sub = Subspace::zero(sl.dim());
            if let Some(prev) = slices.last() {
                if !prev.is_zero() {
                    for x in &var_polys {
                        let cols = ambient.multiplication_columns(d - 2, x, 2);
                        for b in prev.basis() {
                            sub.insert(SparseVec::combination(b, &cols));
                        }
                    }
                }
            }
            for t in by_degree.get(&d).into_iter().flatten() {
                sub.insert(sl.vector(t));
            }
            slices.push(sub);
        }
        Ok(Self {
            ambient,
            cap,
            low,
            slices,
            generators: OnceLock::new(),
        })
    }

    /// Builds a module from slices computed elsewhere. `slice_at(d)` must
    /// return a subspace of the ambient slice of degree `d` for each even `d`
    /// from the ambient's low degree through `cap`; the caller guarantees
    /// closure under multiplication by `S`.
    pub fn from_slices(ambient: AmbientModule, cap: i32, slice_at: impl Fn(i32) -> Subspace + Sync) -> Result<Self> {
        check_cap(cap)?;
        let low = ambient.low_degree();
        let degrees: Vec<i32> = Self::degrees(low, cap).collect();
        let slices: Vec<Subspace> = degrees.par_iter().map(|d| slice_at(*d)).collect();
        for (d, s) in degrees.iter().zip(&slices) {
            debug_assert_eq!(s.ambient_dim(), ambient.slice_dim(*d));
        }
        Ok(Self {
            ambient,
            cap,
            low,
            slices,
            generators: OnceLock::new(),
        })
    }

    pub fn ambient(&self) -> &AmbientModule {
        &self.ambient
    }

    pub fn cap(&self) -> i32 {
        self.cap
    }

    pub fn low_degree(&self) -> i32 {
        self.low
    }

    pub fn degree_range(&self) -> impl Iterator<Item = i32> + Clone {
        Self::degrees(self.low, self.cap)
    }

    /// Slice of degree `d`; `None` outside the materialized range or for odd `d`.
    pub fn slice(&self, d: i32) -> Option<&Subspace> {
        if d < self.low || d > self.cap || (d - self.low) % 2 != 0 {
            return None;
        }
        self.slices.get(((d - self.low) / 2) as usize)
    }

    /// Slice of degree `d`, the zero space below the materialized range.
    pub fn slice_or_zero(&self, d: i32) -> Subspace {
        match self.slice(d) {
            Some(s) => s.clone(),
            None => Subspace::zero(self.ambient.slice_dim(d)),
        }
    }

    pub fn dim_at(&self, d: i32) -> usize {
        self.slice(d).map_or(0, Subspace::dim)
    }

    pub fn hilbert_function(&self) -> BTreeMap<i32, usize> {
        self.degree_range().map(|d| (d, self.dim_at(d))).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(Subspace::is_zero)
    }

    pub fn same_slices(&self, other: &GradedSubmodule) -> bool {
        let lo = self.low.min(other.low);
        let hi = self.cap.min(other.cap);
        (lo..=hi)
            .step_by(2)
            .all(|d| self.slice_or_zero(d) == other.slice_or_zero(d))
    }

    /// Truncates or re-materializes to a smaller cap.
    pub fn truncate(&self, cap: i32) -> GradedSubmodule {
        assert!(cap <= self.cap);
        GradedSubmodule {
            ambient: self.ambient.clone(),
            cap,
            low: self.low,
            slices: Self::degrees(self.low, cap).map(|d| self.slice_or_zero(d)).collect(),
            generators: OnceLock::new(),
        }
    }

    pub fn contains(&self, tuple: &[Polynomial], degree: i32) -> bool {
        let t = self.ambient.normalize(tuple);
        let v = self.ambient.slice(degree).vector(&t);
        match self.slice(degree) {
            Some(s) => s.contains(&v),
            None => v.is_zero(),
        }
    }

    /// Basis of slice `d` as tuples.
    pub fn basis_tuples(&self, d: i32) -> Vec<Vec<Polynomial>> {
        let sl = self.ambient.slice(d);
        self.slice(d)
            .map(|s| s.basis().map(|v| sl.tuple(v)).collect())
            .unwrap_or_default()
    }

    /// Span of `V * M_{d-2}` inside the ambient slice of degree `d`.
    fn products_from_below(&self, d: i32) -> Subspace {
        let mut w = Subspace::zero(self.ambient.slice_dim(d));
        if let Some(prev) = self.slice(d - 2) {
            if !prev.is_zero() {
                let n = self.ambient.nvars();
                for j in 0..n {
                    let cols = self.ambient.multiplication_columns(d - 2, &Polynomial::var(n, j), 2);
                    for b in prev.basis() {
                        w.insert(SparseVec::combination(b, &cols));
                    }
                }
            }
        }
        w
    }

    /// Homogeneous minimal generators up to the cap: in each degree, the
    /// first echelon basis vectors completing `V * M_{d-2}` to `M_d`.
    pub fn minimal_generators(&self) -> &[Generator] {
        self.generators.get_or_init(|| {
            let per_degree: Vec<Vec<Generator>> = self
                .degree_range()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&d| {
                    let Some(md) = self.slice(d) else { return Vec::new() };
                    if md.is_zero() {
                        return Vec::new();
                    }
                    let mut w = self.products_from_below(d);
                    let sl = self.ambient.slice(d);
                    let mut gens = Vec::new();
                    for b in md.basis() {
                        if w.insert(b.clone()) {
                            gens.push(Generator {
                                degree: d,
                                tuple: sl.tuple(b),
                            });
                        }
                    }
                    gens
                })
                .collect();
            per_degree.into_iter().flatten().collect()
        })
    }

    pub fn generator_degrees(&self) -> Vec<i32> {
        self.minimal_generators().iter().map(|g| g.degree).collect()
    }

    pub fn generator_pairs(&self) -> Vec<(Vec<Polynomial>, i32)> {
        self.minimal_generators()
            .iter()
            .map(|g| (g.tuple.clone(), g.degree))
            .collect()
    }

    pub fn is_graded_free(&self) -> FreenessVerdict {
        let degrees = self.generator_degrees();
        let n = self.ambient.nvars();
        let mut failing = None;
        for d in self.degree_range() {
            let predicted: usize = degrees
                .iter()
                .filter(|l| **l <= d)
                .map(|l| count_monomials(n, ((d - l) / 2) as u32))
                .sum();
            if predicted != self.dim_at(d) {
                failing = Some(d);
                break;
            }
        }
        FreenessVerdict {
            free: failing.is_none(),
            generator_degrees: degrees,
            first_failing_degree: failing,
            verified_up_to: self.cap,
        }
    }

    /// Image under a graded map whose source is this module's ambient.
    pub fn image(&self, f: &PolyMap) -> Result<GradedSubmodule> {
        if f.source() != &self.ambient {
            return Err(Error::AmbientMismatch);
        }
        let target = f.target().clone();
        let low = self.low.min(target.low_degree());
        let mut out = GradedSubmodule::from_slices(target.clone(), self.cap, |d| {
            let mut s = Subspace::zero(target.slice_dim(d));
            if let Some(m) = self.slice(d) {
                let cols = f.columns_at(d);
                for b in m.basis() {
                    s.insert(SparseVec::combination(b, &cols));
                }
            }
            s
        })?;
        out.extend_low(low);
        Ok(out)
    }

    /// Kernel of a graded map restricted to this module.
    pub fn kernel(&self, f: &PolyMap) -> Result<GradedSubmodule> {
        if f.source() != &self.ambient {
            return Err(Error::AmbientMismatch);
        }
        GradedSubmodule::from_slices(self.ambient.clone(), self.cap, |d| {
            let mut s = Subspace::zero(self.ambient.slice_dim(d));
            if let Some(m) = self.slice(d) {
                let cols = f.columns_at(d);
                let basis = m.basis_vec();
                let images: Vec<SparseVec> = basis.iter().map(|b| SparseVec::combination(b, &cols)).collect();
                for c in kernel_of_columns(&images) {
                    s.insert(SparseVec::combination(&c, &basis));
                }
            }
            s
        })
    }

    pub fn intersect(&self, other: &GradedSubmodule) -> Result<GradedSubmodule> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch);
        }
        let cap = self.cap.min(other.cap);
        GradedSubmodule::from_slices(self.ambient.clone(), cap, |d| {
            self.slice_or_zero(d).intersect(&other.slice_or_zero(d))
        })
    }

    pub fn sum(&self, other: &GradedSubmodule) -> Result<GradedSubmodule> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch);
        }
        let cap = self.cap.min(other.cap);
        GradedSubmodule::from_slices(self.ambient.clone(), cap, |d| {
            self.slice_or_zero(d).sum(&other.slice_or_zero(d))
        })
    }

    pub fn is_submodule_of(&self, other: &GradedSubmodule) -> bool {
        let hi = self.cap.min(other.cap);
        self.degree_range().filter(|d| *d <= hi).all(|d| match self.slice(d) {
            Some(s) => other.slice_or_zero(d).contains_subspace(s),
            None => true,
        })
    }

    /// Projection onto the components `first..last`, as a submodule of the
    /// sub-ambient formed by those components.
    pub fn project_components(&self, first: usize, last: usize) -> GradedSubmodule {
        let ambient = AmbientModule {
            nvars: self.ambient.nvars,
            components: self.ambient.components[first..last].to_vec(),
        };
        let sub_ambient = ambient.clone();
        GradedSubmodule::from_slices(ambient, self.cap, |d| {
            let sl = self.ambient.slice(d);
            let (a, b) = sl.components_range(first, last);
            let mut s = Subspace::zero(sub_ambient.slice_dim(d));
            if let Some(m) = self.slice(d) {
                for v in m.basis() {
                    s.insert(v.window(a, b));
                }
            }
            s
        })
        .expect("cap already validated")
    }

    /// Projection onto the listed components, in the listed order.
    pub fn select_components(&self, comps: &[usize]) -> GradedSubmodule {
        let ambient = AmbientModule {
            nvars: self.ambient.nvars,
            components: comps.iter().map(|i| self.ambient.components[*i].clone()).collect(),
        };
        let sub_ambient = ambient.clone();
        GradedSubmodule::from_slices(ambient, self.cap, |d| {
            let sl = self.ambient.slice(d);
            let mut s = Subspace::zero(sub_ambient.slice_dim(d));
            if let Some(m) = self.slice(d) {
                let ranges: Vec<(usize, usize)> = comps.iter().map(|i| sl.component_range(*i)).collect();
                for v in m.basis() {
                    s.insert(select_ranges(v, &ranges));
                }
            }
            s
        })
        .expect("cap already validated")
    }

    /// Materialize the slices below the ambient's low degree as zero so
    /// that `low` is at most `low`.
    fn extend_low(&mut self, low: i32) {
        while self.low > low {
            self.low -= 2;
            self.slices.insert(0, Subspace::zero(self.ambient.slice_dim(self.low)));
        }
    }
}

/// Concatenates the windows `ranges` of `v`, re-based consecutively.
pub fn select_ranges(v: &SparseVec, ranges: &[(usize, usize)]) -> SparseVec {
    let mut entries = Vec::new();
    let mut offset = 0;
    for (a, b) in ranges {
        entries.extend(v.window(*a, *b).offset(offset).entries().iter().cloned());
        offset += b - a;
    }
    SparseVec::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn p_var(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn free_rank_one_slices() {
        for n in 1..4 {
            let amb = AmbientModule::free(n, &[0]);
            let m = GradedSubmodule::span(amb, &[(vec![Polynomial::one(n)], 0)], 4).unwrap();
            let h = m.hilbert_function();
            assert_eq!(h[&0], 1);
            assert_eq!(h[&2], n);
            assert_eq!(h[&4], n * (n + 1) / 2);
        }
    }

    #[test]
    fn empty_span_is_zero() {
        let amb = AmbientModule::free(2, &[0, 2]);
        let m = GradedSubmodule::span(amb, &[], 6).unwrap();
        assert!(m.is_zero());
        assert!(m.minimal_generators().is_empty());
    }

    #[test]
    fn annihilator_kills_generator() {
        let a = LinearForm::from_ints(&[1, -1]).unwrap();
        let amb = AmbientModule::quotient(2, &[0], &a);
        let m = GradedSubmodule::span(amb, &[(vec![a.as_polynomial()], 2)], 6).unwrap();
        assert!(m.is_zero());
    }

    #[test]
    fn rejects_inhomogeneous_and_oversized_generators() {
        let amb = AmbientModule::free(1, &[0]);
        let bad = Polynomial::one(1).add(&p_var(1, 0));
        assert!(matches!(
            GradedSubmodule::span(amb.clone(), &[(vec![bad], 0)], 4),
            Err(Error::NotHomogeneous { index: 0, .. })
        ));
        assert!(matches!(
            GradedSubmodule::span(amb, &[(vec![p_var(1, 0).pow(3)], 6)], 4),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn redundant_generator_dropped() {
        let amb = AmbientModule::free(1, &[0, 0]);
        let one = Polynomial::one(1);
        let t = p_var(1, 0);
        let m = GradedSubmodule::span(amb, &[(vec![one.clone(), one], 0), (vec![t.clone(), t], 2)], 8).unwrap();
        assert_eq!(m.generator_degrees(), vec![0]);
    }

    #[test]
    fn graded_free_direct_sum() {
        let amb = AmbientModule::free(2, &[0, 2]);
        let m = GradedSubmodule::full(amb, 8);
        let v = m.is_graded_free();
        assert!(v.free);
        assert_eq!(v.generator_degrees, vec![0, 2]);
        assert_eq!(v.verified_up_to, 8);
    }

    #[test]
    fn principal_ideal_is_free() {
        let amb = AmbientModule::free(2, &[0]);
        let x = p_var(2, 0).add(&p_var(2, 1).scale(&int(3)));
        let m = GradedSubmodule::span(amb, &[(vec![x], 2)], 8).unwrap();
        let v = m.is_graded_free();
        assert!(v.free);
        assert_eq!(v.generator_degrees, vec![2]);
    }

    #[test]
    fn kernel_of_identity_is_zero() {
        let amb = AmbientModule::free(2, &[0, 2]);
        let m = GradedSubmodule::full(amb.clone(), 6);
        let k = m.kernel(&PolyMap::identity(&amb)).unwrap();
        assert!(k.is_zero());
        let im = m.image(&PolyMap::identity(&amb)).unwrap();
        assert_eq!(im, m);
    }

    #[test]
    fn quotient_map_kernel_is_principal() {
        let a = LinearForm::from_ints(&[1, 2]).unwrap();
        let src = AmbientModule::free(2, &[0]);
        let dst = AmbientModule::quotient(2, &[0], &a);
        let f = PolyMap::new(src.clone(), dst, vec![vec![Polynomial::one(2)]]).unwrap();
        let m = GradedSubmodule::full(src, 8);
        let k = m.kernel(&f).unwrap();
        assert_eq!(k.generator_degrees(), vec![2]);
        assert!(k.contains(&[a.as_polynomial()], 2));
    }

    #[test]
    fn map_rejects_wrong_degree_or_annihilator() {
        let a = LinearForm::from_ints(&[1, 0]).unwrap();
        let free = AmbientModule::free(2, &[0]);
        let quot = AmbientModule::quotient(2, &[0], &a);
        assert!(PolyMap::new(free.clone(), free.clone(), vec![vec![p_var(2, 0)]]).is_err());
        // S/a -> S is not well defined unless zero
        assert!(PolyMap::new(quot.clone(), free.clone(), vec![vec![Polynomial::one(2)]]).is_err());
        assert!(PolyMap::new(quot, free, vec![vec![Polynomial::zero(2)]]).is_ok());
    }

    #[test]
    fn tuple_vector_round_trip() {
        let a = LinearForm::from_ints(&[1, 1, 0]).unwrap();
        let amb = AmbientModule::new(3, vec![Component::free(0), Component::quotient(2, a)]).unwrap();
        let sl = amb.slice(4);
        let t = amb.normalize(&[p_var(3, 0).mul(&p_var(3, 2)), p_var(3, 0)]);
        let v = sl.vector(&t);
        assert_eq!(sl.tuple(&v), t);
    }
}
