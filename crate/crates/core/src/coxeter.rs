//! Crystallographic Coxeter systems in their reflection representation and
//! the Bruhat moment graphs of their (parabolic) quotients.
//!
//! Vectors are written in the basis of simple roots. With Cartan matrix
//! `A_ij = <a_i^v, a_j>`, the simple reflection `s_i` sends `v` to
//! `v - (sum_j A_ij v_j) a_i`.

use std::collections::{HashMap, HashSet};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{Edge, MomentGraph};
use crate::poly::{int, Scalar};

type Vector = Vec<Scalar>;
type Matrix = Vec<Vec<Scalar>>;

/// Default bound on the size of enumerated orbits.
pub const MAX_ORBIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoxeterSystem {
    name: String,
    cartan: Vec<Vec<i64>>,
}

impl CoxeterSystem {
    pub fn from_cartan(name: impl Into<String>, cartan: Vec<Vec<i64>>) -> Result<Self> {
        let n = cartan.len();
        if n == 0 || cartan.iter().any(|r| r.len() != n) {
            return Err(Error::Coxeter("Cartan matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            if cartan[i][i] != 2 {
                return Err(Error::Coxeter(format!("diagonal entry {i} is not 2")));
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (cartan[i][j], cartan[j][i]);
                if a > 0 || (a == 0) != (b == 0) {
                    return Err(Error::Coxeter(format!("entries ({i},{j}) are not crystallographic")));
                }
                if a * b > 3 {
                    return Err(Error::Coxeter(format!(
                        "entries ({i},{j}) give an infinite dihedral subgroup"
                    )));
                }
            }
        }
        let sys = Self {
            name: name.into(),
            cartan,
        };
        sys.check_relations()?;
        Ok(sys)
    }

    /// `A_n`, `B_n`, `C_n`, `D_n`, `G_2`, or `I_2(m)` for `m` in {3, 4, 6}.
    /// Accepts spellings like `A3`, `B_2`, `I2(4)`.
    pub fn from_type(name: &str) -> Result<Self> {
        let s: String = name.chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
        let bad = || Error::Coxeter(format!("unknown type `{name}`"));
        if let Some(rest) = s.strip_prefix("I2(").and_then(|r| r.strip_suffix(')')) {
            let m: u32 = rest.parse().map_err(|_| bad())?;
            let cartan = match m {
                3 => vec![vec![2, -1], vec![-1, 2]],
                4 => vec![vec![2, -2], vec![-1, 2]],
                6 => vec![vec![2, -3], vec![-1, 2]],
                _ => return Err(Error::Coxeter(format!("I2({m}) is not crystallographic"))),
            };
            return Self::from_cartan(format!("I2({m})"), cartan);
        }
        let (kind, rank) = s.split_at(1);
        let n: usize = rank.parse().map_err(|_| bad())?;
        let mut a = vec![vec![0i64; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 2;
        }
        let chain = |a: &mut Vec<Vec<i64>>, upto: usize| {
            for i in 0..upto.saturating_sub(1) {
                a[i][i + 1] = -1;
                a[i + 1][i] = -1;
            }
        };
        match kind {
            "A" if n >= 1 => chain(&mut a, n),
            "B" if n >= 2 => {
                chain(&mut a, n);
                a[n - 2][n - 1] = -2;
            }
            "C" if n >= 2 => {
                chain(&mut a, n);
                a[n - 1][n - 2] = -2;
            }
            "D" if n >= 4 => {
                chain(&mut a, n - 1);
                a[n - 3][n - 1] = -1;
                a[n - 1][n - 3] = -1;
            }
            "G" if n == 2 => {
                a[0][1] = -3;
                a[1][0] = -1;
            }
            _ => return Err(bad()),
        }
        Self::from_cartan(format!("{kind}{n}"), a)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.cartan.len()
    }

    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.cartan
    }

    /// Order of `s_i s_j`.
    pub fn coxeter_entry(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return 1;
        }
        match self.cartan[i][j] * self.cartan[j][i] {
            0 => 2,
            1 => 3,
            2 => 4,
            _ => 6,
        }
    }

    pub fn reflect(&self, i: usize, v: &[Scalar]) -> Vector {
        let pairing: Scalar = (0..self.rank()).map(|j| int(self.cartan[i][j]) * &v[j]).sum();
        let mut out = v.to_vec();
        out[i] -= pairing;
        out
    }

    pub fn simple_matrix(&self, i: usize) -> Matrix {
        let n = self.rank();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        let id = if r == c { Scalar::one() } else { Scalar::zero() };
                        if r == i {
                            id - int(self.cartan[i][c])
                        } else {
                            id
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn check_relations(&self) -> Result<()> {
        let n = self.rank();
        let id = identity(n);
        for i in 0..n {
            let s = self.simple_matrix(i);
            if mat_mul(&s, &s) != id {
                return Err(Error::Coxeter(format!("s{} does not square to one", i + 1)));
            }
            for j in i + 1..n {
                let st = mat_mul(&s, &self.simple_matrix(j));
                let m = self.coxeter_entry(i, j);
                let mut p = id.clone();
                for k in 1..=m {
                    p = mat_mul(&p, &st);
                    if p == id && k < m {
                        return Err(Error::Coxeter(format!("(s{}s{})^{k} = 1 before {m}", i + 1, j + 1)));
                    }
                }
                if p != id {
                    return Err(Error::Coxeter(format!(
                        "braid relation of order {m} fails for s{}, s{}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Fundamental weight `w_j` in root coordinates: the solution of `A c = e_j`.
    pub fn fundamental_weight(&self, j: usize) -> Vector {
        let n = self.rank();
        let a: Matrix = self
            .cartan
            .iter()
            .map(|r| r.iter().map(|x| int(*x)).collect())
            .collect();
        let mut rhs = vec![Scalar::zero(); n];
        rhs[j] = Scalar::one();
        solve(a, rhs).expect("finite type Cartan matrices are invertible")
    }

    /// A vector whose stabilizer is the parabolic subgroup generated by
    /// `parabolic`: the sum of the fundamental weights outside it.
    pub fn parabolic_weight(&self, parabolic: &[usize]) -> Vector {
        let mut lambda = vec![Scalar::zero(); self.rank()];
        for j in (0..self.rank()).filter(|j| !parabolic.contains(j)) {
            for (l, c) in lambda.iter_mut().zip(self.fundamental_weight(j)) {
                *l += c;
            }
        }
        lambda
    }

    /// Orbit of `lambda` with shortlex-minimal words of the minimal coset
    /// representatives. Errors once more than `limit` points appear.
    pub fn orbit(&self, lambda: &[Scalar], limit: usize) -> Result<Orbit> {
        let n = self.rank();
        let mut points: Vec<Vector> = vec![lambda.to_vec()];
        let mut words: Vec<Vec<usize>> = vec![Vec::new()];
        let mut index: HashMap<Vector, usize> = HashMap::from([(lambda.to_vec(), 0)]);
        let mut level = vec![0usize];
        while !level.is_empty() {
            // best word for each newly reached point of the next length
            let mut found: HashMap<Vector, Vec<usize>> = HashMap::new();
            for &p in &level {
                for i in 0..n {
                    let q = self.reflect(i, &points[p]);
                    if index.contains_key(&q) {
                        continue;
                    }
                    let mut w = vec![i];
                    w.extend_from_slice(&words[p]);
                    match found.get_mut(&q) {
                        Some(best) if *best <= w => {}
                        Some(best) => *best = w,
                        None => {
                            found.insert(q, w);
                        }
                    }
                }
            }
            let mut fresh: Vec<(Vec<usize>, Vector)> = found.into_iter().map(|(q, w)| (w, q)).collect();
            fresh.sort();
            level = Vec::with_capacity(fresh.len());
            for (w, q) in fresh {
                index.insert(q.clone(), points.len());
                level.push(points.len());
                points.push(q);
                words.push(w);
                if points.len() > limit {
                    return Err(Error::TooLarge(limit));
                }
            }
        }
        Ok(Orbit { points, words, index })
    }

    /// All reflections, as matrices, closed under conjugation by simple ones.
    pub fn reflections(&self, limit: usize) -> Result<Vec<Matrix>> {
        let n = self.rank();
        let simple: Vec<Matrix> = (0..n).map(|i| self.simple_matrix(i)).collect();
        let mut seen: HashSet<Matrix> = HashSet::new();
        let mut out = Vec::new();
        let mut queue: Vec<Matrix> = simple.clone();
        while let Some(t) = queue.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            out.push(t.clone());
            if out.len() > limit {
                return Err(Error::TooLarge(limit));
            }
            for s in &simple {
                let c = mat_mul(&mat_mul(s, &t), s);
                if !seen.contains(&c) {
                    queue.push(c);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// The moment graph of `W / W_parabolic` with the Bruhat order.
    pub fn bruhat_moment_graph(&self, parabolic: &[usize]) -> Result<MomentGraph> {
        self.bruhat_moment_graph_limited(parabolic, MAX_ORBIT)
    }

    pub fn bruhat_moment_graph_limited(&self, parabolic: &[usize], limit: usize) -> Result<MomentGraph> {
        if let Some(bad) = parabolic.iter().find(|i| **i >= self.rank()) {
            return Err(Error::Coxeter(format!("no simple reflection s{}", bad + 1)));
        }
        let lambda = self.parabolic_weight(parabolic);
        let orbit = self.orbit(&lambda, limit)?;
        let refl = self.reflections(limit)?;
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        for (a, p) in orbit.points.iter().enumerate() {
            for t in &refl {
                let q = mat_vec(t, p);
                if &q == p {
                    continue;
                }
                let b = *orbit
                    .index
                    .get(&q)
                    .ok_or_else(|| Error::Coxeter("orbit not closed".into()))?;
                let (lo, hi) = if orbit.length(a) < orbit.length(b) {
                    (a, b)
                } else {
                    (b, a)
                };
                if orbit.length(lo) == orbit.length(hi) {
                    return Err(Error::Coxeter("reflection preserves length".into()));
                }
                if seen.insert((lo, hi)) {
                    let label = orbit.points[lo]
                        .iter()
                        .zip(&orbit.points[hi])
                        .map(|(x, y)| x - y)
                        .collect();
                    edges.push(Edge { u: lo, v: hi, label });
                }
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        let names = (0..orbit.points.len()).map(|i| orbit.name(i)).collect();
        Ok(MomentGraph::from_directed_edges(self.rank(), names, edges))
    }

    /// Parses `s2 s1 s3`, `s2s1s3` or `e` into 0-based letters.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        let t: String = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '*' && *c != '.')
            .collect();
        if t.is_empty() || t == "e" {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for part in t.split('s').skip(1) {
            let i: usize = part.parse().map_err(|_| Error::Coxeter(format!("bad word `{text}`")))?;
            if i == 0 || i > self.rank() {
                return Err(Error::Coxeter(format!("no simple reflection s{i}")));
            }
            out.push(i - 1);
        }
        if !t.starts_with('s') {
            return Err(Error::Coxeter(format!("bad word `{text}`")));
        }
        Ok(out)
    }

    /// `w(v)` for the element written by `word`.
    pub fn act(&self, word: &[usize], v: &[Scalar]) -> Vector {
        let mut out = v.to_vec();
        for i in word.iter().rev() {
            out = self.reflect(*i, &out);
        }
        out
    }
}

/// Name of an element given by a word: `e` or `s1s2...` (1-based).
pub fn word_name(word: &[usize]) -> String {
    if word.is_empty() {
        "e".to_string()
    } else {
        word.iter().map(|i| format!("s{}", i + 1)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<Vector>,
    pub words: Vec<Vec<usize>>,
    pub index: HashMap<Vector, usize>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self, i: usize) -> usize {
        self.words[i].len()
    }

    pub fn name(&self, i: usize) -> String {
        word_name(&self.words[i])
    }
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r == c { Scalar::one() } else { Scalar::zero() })
                .collect()
        })
        .collect()
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|r| {
            (0..m)
                .map(|c| (0..b.len()).map(|k| &a[r][k] * &b[k][c]).sum())
                .collect()
        })
        .collect()
}

fn mat_vec(a: &Matrix, v: &[Scalar]) -> Vector {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn solve(mut a: Matrix, mut b: Vector) -> Option<Vector> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).find(|r| !a[*r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = Scalar::one() / &a[col][col];
        for c in 0..n {
            a[col][c] = &a[col][c] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
                let t = &f * &b[col];
                b[r] -= t;
            }
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a2_full_flag_graph() {
        let c = CoxeterSystem::from_type("A2").unwrap();
        let g = c.bruhat_moment_graph(&[]).unwrap();
        assert_eq!(g.vertex_count(), 6);
        assert_eq!(g.edges().len(), 9);
        assert!(g.validate().is_empty());
        assert!(g.is_gkm().is_ok());
        let e = g.vertex("e").unwrap();
        let top = g.vertex("s1s2s1").unwrap();
        assert_eq!(g.less_eq(top).len(), 6);
        assert!(g.less(e).is_empty());
        assert!((0..6).all(|x| g.le(e, x) && g.le(x, top)));
    }

    #[test]
    fn a1_is_subgeneric() {
        let c = CoxeterSystem::from_type("A1").unwrap();
        let g = c.bruhat_moment_graph(&[]).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges().len(), 1);
        assert!(g.lt(0, 1));
    }

    #[test]
    fn a2_parabolic_projective_plane() {
        let c = CoxeterSystem::from_type("A2").unwrap();
        let g = c.bruhat_moment_graph(&[0]).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.vertices(), &["e".to_string(), "s2".into(), "s1s2".into()]);
    }

    #[test]
    fn group_orders() {
        for (t, n) in [
            ("A3", 24),
            ("B2", 8),
            ("C3", 48),
            ("D4", 192),
            ("G2", 12),
            ("I2(6)", 12),
            ("I2(3)", 6),
        ] {
            let c = CoxeterSystem::from_type(t).unwrap();
            let o = c.orbit(&c.parabolic_weight(&[]), MAX_ORBIT).unwrap();
            assert_eq!(o.len(), n, "{t}");
        }
    }

    #[test]
    fn rejects_non_crystallographic_and_affine() {
        assert!(CoxeterSystem::from_type("I2(5)").is_err());
        assert!(CoxeterSystem::from_cartan("affine", vec![vec![2, -2], vec![-2, 2]]).is_err());
        assert!(CoxeterSystem::from_cartan("bad", vec![vec![2, -1], vec![0, 2]]).is_err());
    }

    #[test]
    fn shortlex_names() {
        let c = CoxeterSystem::from_type("A3").unwrap();
        let g = c.bruhat_moment_graph(&[]).unwrap();
        assert!(g.vertex("s2s1s3s2").is_ok());
        assert!(g.vertex("s2s3s1s2").is_err());
        assert_eq!(c.parse_word("s2 s1 s3 s2").unwrap(), vec![1, 0, 2, 1]);
        assert_eq!(c.parse_word("e").unwrap(), Vec::<usize>::new());
        assert!(c.parse_word("s7").is_err());
    }
}
