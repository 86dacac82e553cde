//! Exact polynomial arithmetic over the rationals.
//!
//! Polynomials live in `S = Q[x_1, .., x_n]` graded so that every variable has
//! degree 2. Degrees reported by this module are those even degrees unless a
//! name says `total_degree`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            let d: BigInt = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            BigRational::new(n, d)
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            BigRational::from_integer(n)
        }
    };
    Ok(parsed)
}

/// Always `num/den`, reduced, positive denominator.
pub fn format_scalar(q: &Scalar) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Exponent vector of length `nvars`.
pub type Monomial = Vec<u32>;

pub fn monomial_degree(m: &[u32]) -> u32 {
    m.iter().sum()
}

/// All monomials of total degree `k` in `nvars` variables, skipping the
/// variable `skip` when given. Ordered lexicographically descending, so
/// `x_1^k` comes first.
pub fn monomials_of_degree(nvars: usize, k: u32, skip: Option<usize>) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, skip: Option<usize>, out: &mut Vec<Monomial>) {
        let n = cur.len();
        if i == n {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if Some(i) == skip {
            cur[i] = 0;
            rec(i + 1, left, cur, skip, out);
            return;
        }
        // the last free variable takes everything that is left
        let last_free = (i + 1..n).all(|j| Some(j) == skip);
        if last_free {
            cur[i] = left;
            rec(i + 1, 0, cur, skip, out);
            cur[i] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, skip, out);
        }
        cur[i] = 0;
    }
    if nvars == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    if skip.is_some() && nvars == 1 {
        if k == 0 {
            out.push(vec![0]);
        }
        return out;
    }
    rec(0, k, &mut cur, skip, &mut out);
    out
}

/// Number of monomials of total degree `k` in `n` variables.
pub fn count_monomials(n: usize, k: u32) -> usize {
    if n == 0 {
        return usize::from(k == 0);
    }
    // binomial(k + n - 1, n - 1)
    let mut acc: u128 = 1;
    for i in 0..(n as u128 - 1) {
        acc = acc * (k as u128 + 1 + i) / (i + 1);
    }
    acc as usize
}

/// A sparse polynomial. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Scalar>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Scalar) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Scalar::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0; nvars];
        m[i] = 1;
        Self::monomial(m, Scalar::one())
    }

    pub fn monomial(m: Monomial, c: Scalar) -> Self {
        let mut p = Self::zero(m.len());
        p.add_term(m, c);
        p
    }

    /// The linear form `sum coeffs[i] * x_i`.
    pub fn linear(coeffs: &[Scalar]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            let mut m = vec![0; n];
            m[i] = 1;
            p.add_term(m, c.clone());
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, Scalar)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            if m.len() != nvars {
                return Err(Error::Parse(format!(
                    "exponent vector of length {} in a ring with {nvars} variables",
                    m.len()
                )));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[u32]) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Grading degree (`2 * total degree`) if homogeneous, `None` for the zero
    /// polynomial or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<i32> {
        let mut degs = self.terms.keys().map(|m| monomial_degree(m));
        let first = degs.next()?;
        if degs.all(|d| d == first) {
            Some(2 * first as i32)
        } else {
            None
        }
    }

    pub fn is_homogeneous_of(&self, degree: i32) -> bool {
        self.is_zero() || self.homogeneous_degree() == Some(degree)
    }

    /// Component of grading degree `degree`.
    pub fn homogeneous_part(&self, degree: i32) -> Self {
        let mut p = Self::zero(self.nvars);
        if degree < 0 || degree % 2 != 0 {
            return p;
        }
        let k = (degree / 2) as u32;
        for (m, c) in &self.terms {
            if monomial_degree(m) == k {
                p.terms.insert(m.clone(), c.clone());
            }
        }
        p
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(m.clone(), -c.clone());
        }
        p
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Scalar::one())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.nvars.max(other.nvars));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                p.add_term(m, ca * cb);
            }
        }
        p
    }

    pub fn mul_monomial(&self, mono: &[u32]) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.iter().zip(mono).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, point: &[Scalar]) -> Scalar {
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, e) in point.iter().zip(m) {
                for _ in 0..*e {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    /// Normal form modulo the principal ideal of a nonzero linear form: the
    /// pivot variable of `form` is eliminated by substitution.
    pub fn reduce_mod(&self, form: &LinearForm) -> Self {
        let p = form.pivot();
        let mut out = Self::zero(self.nvars);
        let mut work: Vec<(Monomial, Scalar)> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        let sub = form.pivot_substitution();
        while let Some((m, c)) = work.pop() {
            if m[p] == 0 {
                out.add_term(m, c);
                continue;
            }
            let mut rest = m.clone();
            rest[p] -= 1;
            for (i, a) in &sub {
                let mut mm = rest.clone();
                mm[*i] += 1;
                work.push((mm, &c * a));
            }
        }
        out
    }

    /// Exact division by a nonzero linear form, `None` if it does not divide.
    pub fn div_linear(&self, form: &LinearForm) -> Option<Self> {
        // Divide by repeatedly cancelling the lexicographically largest term
        // against the leading term of the form.
        let f = form.as_polynomial();
        let (lead_m, lead_c) = f.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Self::zero(self.nvars);
        while let Some((m, c)) = rem.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if m.iter().zip(&lead_m).any(|(a, b)| a < b) {
                return None;
            }
            let qm: Monomial = m.iter().zip(&lead_m).map(|(a, b)| a - b).collect();
            let qc = c / &lead_c;
            let t = Self::monomial(qm, qc);
            rem = rem.sub(&t.mul(&f));
            quot = quot.add(&t);
        }
        Some(quot)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let is_const = m.iter().all(|e| *e == 0);
            if !abs.is_one() || is_const {
                write!(f, "{abs}")?;
            }
            for (i, e) in m.iter().enumerate() {
                match *e {
                    0 => {}
                    1 => write!(f, "x{}", i + 1)?,
                    e => write!(f, "x{}^{e}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

/// A nonzero vector of `V`, read as the linear form `sum c_i x_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearForm {
    coeffs: Vec<Scalar>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<Scalar>) -> Result<Self> {
        if coeffs.iter().all(Zero::is_zero) {
            return Err(Error::ZeroVector);
        }
        Ok(Self { coeffs })
    }

    pub fn from_ints(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|c| int(*c)).collect())
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// First variable with a nonzero coefficient.
    pub fn pivot(&self) -> usize {
        self.coeffs.iter().position(|c| !c.is_zero()).expect("nonzero form")
    }

    /// `x_p = sum_i a_i x_i` modulo the form, with `p` the pivot.
    fn pivot_substitution(&self) -> Vec<(usize, Scalar)> {
        let p = self.pivot();
        let lead = &self.coeffs[p];
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, c)| *i != p && !c.is_zero())
            .map(|(i, c)| (i, -(c / lead)))
            .collect()
    }

    pub fn as_polynomial(&self) -> Polynomial {
        Polynomial::linear(&self.coeffs)
    }

    /// Same line through the origin.
    pub fn is_proportional(&self, other: &LinearForm) -> bool {
        is_proportional(&self.coeffs, &other.coeffs)
    }

    /// Representative scaled so that the pivot coefficient is one.
    pub fn normalized(&self) -> LinearForm {
        let lead = self.coeffs[self.pivot()].clone();
        LinearForm {
            coeffs: self.coeffs.iter().map(|c| c / &lead).collect(),
        }
    }
}

pub fn is_proportional(a: &[Scalar], b: &[Scalar]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    // all 2x2 minors vanish
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if &a[i] * &b[j] != &a[j] * &b[i] {
                return false;
            }
        }
    }
    true
}
