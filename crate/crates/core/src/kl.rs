//! Kazhdan–Lusztig polynomials of finite Weyl groups by the classical
//! recursion, and the comparison with stalk characters of `B(w)`.
//!
//! The group is realized as the orbit of a regular vector; the Bruhat
//! interval below `w` is generated from a reduced word by the subword
//! property, independently of any moment graph.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bmp::{build_bmp, Character};
use crate::coxeter::{CoxeterSystem, Orbit, MAX_ORBIT};
use crate::error::{Error, Result};

/// Polynomial in `q` with integer coefficients, lowest degree first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KlPoly(pub Vec<i64>);

impl KlPoly {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn one() -> Self {
        Self(vec![1])
    }

    fn trim(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, k: usize) -> i64 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect()).trim()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect()).trim()
    }

    /// `c * q^k * self`
    pub fn shifted(&self, k: usize, c: i64) -> Self {
        if self.is_zero() || c == 0 {
            return Self::zero();
        }
        let mut v = vec![0; k];
        v.extend(self.0.iter().map(|a| a * c));
        Self(v).trim()
    }

    pub fn eval_one(&self) -> i64 {
        self.0.iter().sum()
    }

    /// The character obtained by `q = t^2`.
    pub fn as_character(&self) -> Character {
        Character(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0)
                .map(|(k, c)| (2 * k as i32, *c as u64))
                .collect(),
        )
    }
}

impl fmt::Display for KlPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(k, c)| match (k, c) {
                (0, c) => c.to_string(),
                (1, 1) => "q".into(),
                (1, c) => format!("{c}q"),
                (k, 1) => format!("q^{k}"),
                (k, c) => format!("{c}q^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// `P_{x,w}` for every `x <= w`.
#[derive(Clone, Debug)]
pub struct KlTable {
    pub group: String,
    pub top: String,
    /// Keyed by element name.
    pub entries: BTreeMap<String, KlPoly>,
}

impl KlTable {
    /// JSON shape `{x: [c0, c1, ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), v.0.clone()))
                .collect::<BTreeMap<_, _>>(),
        )
        .expect("plain map")
    }
}

/// The finite Weyl group as a set of named elements with left
/// multiplication by simple reflections.
struct Group {
    orbit: Orbit,
    // left[i][x] = index of s_i x
    left: Vec<Vec<usize>>,
}

impl Group {
    fn new(c: &CoxeterSystem) -> Result<Self> {
        let orbit = c.orbit(&c.parabolic_weight(&[]), MAX_ORBIT)?;
        let left = (0..c.rank())
            .map(|i| orbit.points.iter().map(|p| orbit.index[&c.reflect(i, p)]).collect())
            .collect();
        Ok(Self { orbit, left })
    }

    fn len(&self, x: usize) -> usize {
        self.orbit.length(x)
    }

    fn element(&self, word: &[usize]) -> usize {
        // words act on the left: s_{a1} s_{a2} ... applied right to left
        let mut x = 0;
        for i in word.iter().rev() {
            x = self.left[*i][x];
        }
        x
    }

    /// `{x <= w}` as a membership vector, by `[e, w] = [e, v] ∪ s[e, v]`
    /// for `w = s v` with `l(v) < l(w)`.
    fn interval(&self, w: usize) -> Vec<bool> {
        let n = self.orbit.len();
        let mut below = vec![false; n];
        below[0] = true;
        for &i in self.orbit.words[w].iter().rev() {
            let current: Vec<usize> = (0..n).filter(|x| below[*x]).collect();
            for x in current {
                below[self.left[i][x]] = true;
            }
        }
        below
    }
}

/// Computes `P_{x,w}` for all `x` in the Bruhat interval below `w`, where
/// `w` is given by any word (reduced or not).
pub fn kl_polynomials(c: &CoxeterSystem, w_word: &[usize]) -> Result<KlTable> {
    let g = Group::new(c)?;
    let w = g.element(w_word);
    let n = g.orbit.len();
    let lower = g.interval(w);
    let elements: Vec<usize> = {
        let mut v: Vec<usize> = (0..n).filter(|x| lower[*x]).collect();
        v.sort_by_key(|x| (g.len(*x), *x));
        v
    };
    let intervals: BTreeMap<usize, Vec<bool>> = elements.iter().map(|y| (*y, g.interval(*y))).collect();
    // p[(x, y)] for x <= y <= w, built in order of increasing l(y)
    let mut p: BTreeMap<(usize, usize), KlPoly> = BTreeMap::new();
    let get = |p: &BTreeMap<(usize, usize), KlPoly>, x: usize, y: usize| p.get(&(x, y)).cloned().unwrap_or_default();
    for &y in &elements {
        if y == 0 {
            p.insert((0, 0), KlPoly::one());
            continue;
        }
        let s = *g.orbit.words[y].first().expect("nontrivial element");
        let v = g.left[s][y];
        debug_assert!(g.len(v) < g.len(y));
        let ly = g.len(y);
        // z with z < v and s z < z, with mu(z, v) != 0
        let mus: Vec<(usize, i64)> = elements
            .iter()
            .copied()
            .filter(|z| intervals[&v][*z] && *z != v && g.len(g.left[s][*z]) < g.len(*z))
            .filter_map(|z| {
                let gap = g.len(v) - g.len(z);
                if gap % 2 == 0 {
                    return None;
                }
                let m = get(&p, z, v).coeff((gap - 1) / 2);
                (m != 0).then_some((z, m))
            })
            .collect();
        for &x in elements.iter().filter(|x| intervals[&y][**x]) {
            let sx = g.left[s][x];
            let c = usize::from(g.len(sx) < g.len(x));
            let mut val = get(&p, sx, v).shifted(1 - c, 1).add(&get(&p, x, v).shifted(c, 1));
            for &(z, m) in &mus {
                if intervals[&z][x] {
                    val = val.sub(&get(&p, x, z).shifted((ly - g.len(z)) / 2, m));
                }
            }
            p.insert((x, y), val);
        }
    }
    let entries = elements.iter().map(|x| (g.orbit.name(*x), get(&p, *x, w))).collect();
    Ok(KlTable {
        group: c.name().to_string(),
        top: g.orbit.name(w),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KlComparisonRow {
    pub vertex: String,
    pub stalk: String,
    pub kl: String,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KlComparison {
    /// Always `external cross-check`: the identity compared here is not
    /// part of the engine's own guarantees.
    pub label: String,
    pub group: String,
    pub top: String,
    pub cap: i32,
    pub rows: Vec<KlComparisonRow>,
    /// Every stalk character equals `P_{x,w}(t^2)`, including zero outside the interval.
    pub all_match: bool,
    /// Ranks agree at `t = 1`.
    pub ranks_match: bool,
}

/// Builds `B(w)` on the tilted Bruhat graph and compares each stalk
/// character with `P_{x,w}(t^2)`.
pub fn compare_bmp_kl(c: &CoxeterSystem, w_word: &[usize], cap: i32) -> Result<KlComparison> {
    let table = kl_polynomials(c, w_word)?;
    let graph = c.bruhat_moment_graph(&[])?.tilt();
    let w = graph
        .vertex(&table.top)
        .map_err(|_| Error::Coxeter(format!("no vertex `{}`", table.top)))?;
    let b = build_bmp(&graph, w, cap)?;
    let ch = b.character();
    let mut rows = Vec::new();
    let mut all_match = true;
    let mut ranks_match = true;
    for x in 0..graph.vertex_count() {
        let name = graph.name(x);
        let stalk = ch.get(&x).cloned().unwrap_or_default();
        let kl = table.entries.get(name).cloned().unwrap_or_default();
        let matches = stalk == kl.as_character();
        all_match &= matches;
        ranks_match &= stalk.rank() as i64 == kl.eval_one();
        if !stalk.is_zero() || !kl.is_zero() {
            rows.push(KlComparisonRow {
                vertex: name.to_string(),
                stalk: stalk.to_string(),
                kl: kl.to_string(),
                matches,
            });
        }
    }
    Ok(KlComparison {
        label: "external cross-check".into(),
        group: table.group,
        top: table.top,
        cap,
        rows,
        all_match,
        ranks_match,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dihedral_polynomials_are_trivial() {
        for t in ["I2(3)", "I2(4)", "I2(6)"] {
            let c = CoxeterSystem::from_type(t).unwrap();
            let g = Group::new(&c).unwrap();
            for w in 0..g.orbit.len() {
                let table = kl_polynomials(&c, &g.orbit.words[w]).unwrap();
                assert!(table.entries.values().all(|p| *p == KlPoly::one()), "{t}");
            }
        }
    }

    #[test]
    fn a3_singular_element() {
        let c = CoxeterSystem::from_type("A3").unwrap();
        let w = c.parse_word("s2 s1 s3 s2").unwrap();
        let t = kl_polynomials(&c, &w).unwrap();
        assert_eq!(t.entries["s2"], KlPoly(vec![1, 1]));
        assert_eq!(t.entries["s2s1s3s2"], KlPoly::one());
        assert_eq!(t.entries.len(), 14);
    }

    #[test]
    fn poly_display() {
        assert_eq!(KlPoly(vec![1, 1]).to_string(), "1 + q");
        assert_eq!(KlPoly(vec![1, 0, 2]).to_string(), "1 + 2q^2");
        assert_eq!(KlPoly(vec![1, 1]).as_character().to_string(), "1 + t^2");
    }
}
