//! Sparse exact linear algebra: reduced row echelon subspaces and nullspaces.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::poly::Scalar;

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseVec(Vec<(usize, Scalar)>);

impl SparseVec {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_entries(mut entries: Vec<(usize, Scalar)>) -> Self {
        entries.sort_by_key(|(i, _)| *i);
        let mut out: Vec<(usize, Scalar)> = Vec::with_capacity(entries.len());
        for (i, c) in entries {
            match out.last_mut() {
                Some((j, d)) if *j == i => *d += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Self(out)
    }

    pub fn unit(i: usize) -> Self {
        Self(vec![(i, Scalar::one())])
    }

    pub fn from_dense(v: &[Scalar]) -> Self {
        Self(
            v.iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i, c.clone()))
                .collect(),
        )
    }

    pub fn to_dense(&self, n: usize) -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); n];
        for (i, c) in &self.0 {
            v[*i] = c.clone();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[(usize, Scalar)] {
        &self.0
    }

    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    pub fn leading(&self) -> Option<usize> {
        self.0.first().map(|(i, _)| *i)
    }

    pub fn get(&self, i: usize) -> Scalar {
        match self.0.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => self.0[k].1.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    fn get_ref(&self, i: usize) -> Option<&Scalar> {
        self.0.binary_search_by_key(&i, |(j, _)| *j).ok().map(|k| &self.0[k].1)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::new();
        }
        Self(self.0.iter().map(|(i, a)| (*i, a * c)).collect())
    }

    /// `self + c * other`
    pub fn axpy(&self, c: &Scalar, other: &SparseVec) -> Self {
        if c.is_zero() {
            return self.clone();
        }
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i].clone());
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, c * &b[j].1));
                j += 1;
            } else {
                let s = &a[i].1 + c * &b[j].1;
                if !s.is_zero() {
                    out.push((a[i].0, s));
                }
                i += 1;
                j += 1;
            }
        }
        Self(out)
    }

    pub fn add(&self, other: &SparseVec) -> Self {
        self.axpy(&Scalar::one(), other)
    }

    pub fn sub(&self, other: &SparseVec) -> Self {
        self.axpy(&-Scalar::one(), other)
    }

    /// Shifts every index by `offset`.
    pub fn offset(&self, offset: usize) -> Self {
        Self(self.0.iter().map(|(i, c)| (i + offset, c.clone())).collect())
    }

    /// Keeps the indices in `range`, re-based at its start.
    pub fn window(&self, start: usize, end: usize) -> Self {
        Self(
            self.0
                .iter()
                .filter(|(i, _)| *i >= start && *i < end)
                .map(|(i, c)| (i - start, c.clone()))
                .collect(),
        )
    }

    /// Linear combination `sum coeffs[k] * vecs[k]` of the given vectors.
    pub fn combination(coeffs: &SparseVec, vecs: &[SparseVec]) -> Self {
        let mut acc: BTreeMap<usize, Scalar> = BTreeMap::new();
        for (k, c) in &coeffs.0 {
            for (i, a) in &vecs[*k].0 {
                *acc.entry(*i).or_insert_with(Scalar::zero) += c * a;
            }
        }
        Self(acc.into_iter().filter(|(_, c)| !c.is_zero()).collect())
    }
}

/// A subspace stored as a fully reduced row echelon basis.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subspace {
    ambient_dim: usize,
    // keyed by pivot column; every row has a one at its pivot and zeros at the other pivots
    rows: BTreeMap<usize, SparseVec>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            rows: (0..ambient_dim).map(|i| (i, SparseVec::unit(i))).collect(),
        }
    }

    pub fn spanned_by(ambient_dim: usize, vecs: impl IntoIterator<Item = SparseVec>) -> Self {
        let mut s = Self::zero(ambient_dim);
        for v in vecs {
            s.insert(v);
        }
        s
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    /// Basis rows in increasing pivot order.
    pub fn basis(&self) -> impl Iterator<Item = &SparseVec> {
        self.rows.values()
    }

    pub fn basis_vec(&self) -> Vec<SparseVec> {
        self.rows.values().cloned().collect()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    /// Residue of `v` after eliminating every pivot column.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut r = v.clone();
        for (i, c) in v.entries() {
            if let Some(row) = self.rows.get(i) {
                // the current coefficient may differ from `c` only if an earlier
                // row touched column `i`, which full reduction rules out
                debug_assert_eq!(r.get(*i), *c);
                r = r.axpy(&-c.clone(), row);
            }
        }
        r
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v`; returns whether the dimension grew.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let r = self.reduce(&v);
        let Some(p) = r.leading() else {
            return false;
        };
        let lead = r.get(p);
        let r = r.scale(&(Scalar::one() / lead));
        for row in self.rows.values_mut() {
            if let Some(c) = row.get_ref(p) {
                let c = c.clone();
                *row = row.axpy(&-c, &r);
            }
        }
        self.rows.insert(p, r);
        true
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for v in other.basis() {
            s.insert(v.clone());
        }
        s
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        // x = sum c_k b_k lies in `other` iff sum c_k reduce_other(b_k) = 0
        let basis = self.basis_vec();
        let residues: Vec<SparseVec> = basis.iter().map(|b| other.reduce(b)).collect();
        let combos = kernel_of_columns(&residues);
        Subspace::spanned_by(
            self.ambient_dim,
            combos.iter().map(|c| SparseVec::combination(c, &basis)),
        )
    }
}

/// Kernel of the linear map sending the k-th unit vector to `columns[k]`.
/// Returned vectors are indexed by column position.
pub fn kernel_of_columns(columns: &[SparseVec]) -> Vec<SparseVec> {
    // rows of the transposed system
    let mut rows: BTreeMap<usize, Vec<(usize, Scalar)>> = BTreeMap::new();
    for (k, col) in columns.iter().enumerate() {
        for (i, c) in col.entries() {
            rows.entry(*i).or_default().push((k, c.clone()));
        }
    }
    nullspace(columns.len(), rows.into_values().map(SparseVec::from_entries))
}

/// Nullspace of the system whose constraint rows are given, over `n` unknowns.
/// One basis vector per free column, in increasing column order.
pub fn nullspace(n: usize, rows: impl IntoIterator<Item = SparseVec>) -> Vec<SparseVec> {
    let ech = Subspace::spanned_by(n, rows);
    let mut out = Vec::new();
    for f in 0..n {
        if ech.rows.contains_key(&f) {
            continue;
        }
        let mut entries = vec![(f, Scalar::one())];
        for (p, row) in &ech.rows {
            if let Some(c) = row.get_ref(f) {
                entries.push((*p, -c.clone()));
            }
        }
        out.push(SparseVec::from_entries(entries));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn v(x: &[i64]) -> SparseVec {
        SparseVec::from_dense(&x.iter().map(|c| int(*c)).collect::<Vec<_>>())
    }

    #[test]
    fn rref_insert_and_membership() {
        let mut s = Subspace::zero(3);
        assert!(s.insert(v(&[1, 2, 3])));
        assert!(s.insert(v(&[0, 1, 1])));
        assert!(!s.insert(v(&[1, 3, 4])));
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&v(&[2, 5, 7])));
        assert!(!s.contains(&v(&[0, 0, 1])));
        // fully reduced rows
        let rows = s.basis_vec();
        assert_eq!(rows[0], v(&[1, 0, 1]));
        assert_eq!(rows[1], v(&[0, 1, 1]));
    }

    #[test]
    fn nullspace_rank_nullity() {
        let rows = vec![v(&[1, 1, 0, 0]), v(&[0, 0, 1, -1])];
        let ns = nullspace(4, rows.clone());
        assert_eq!(ns.len(), 2);
        for x in &ns {
            for r in &rows {
                let dot: Scalar = r.entries().iter().map(|(i, c)| c * x.get(*i)).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn intersection_of_planes() {
        let a = Subspace::spanned_by(3, [v(&[1, 0, 0]), v(&[0, 1, 0])]);
        let b = Subspace::spanned_by(3, [v(&[0, 1, 0]), v(&[0, 0, 1])]);
        let c = a.intersect(&b);
        assert_eq!(c.dim(), 1);
        assert!(c.contains(&v(&[0, 1, 0])));
    }

    #[test]
    fn kernel_of_dependent_columns() {
        let cols = vec![v(&[1, 0]), v(&[0, 1]), v(&[1, 1])];
        let k = kernel_of_columns(&cols);
        assert_eq!(k, vec![v(&[-1, -1, 1])]);
    }
}
