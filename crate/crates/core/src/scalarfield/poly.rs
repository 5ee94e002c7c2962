//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms live in a `BTreeMap` keyed by exponent vectors under graded-lex
//! order, so two equal polynomials always have identical term maps and the
//! zero polynomial is the empty map.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::jet::Jet;
use super::ScalarError;

pub type Rational = BigRational;

/// Build a rational from a machine integer.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Build the rational `n/d`. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational image of a finite float (every finite `f64` is dyadic).
pub fn rational_from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_i64(), q.denom().to_i64()) {
        if n.unsigned_abs() < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    // keep the top 120 bits of each side and restore the binary exponent
    let sn = q.numer().bits().saturating_sub(120);
    let sd = q.denom().bits().saturating_sub(120);
    let n = (q.numer() >> sn).to_f64().unwrap_or(0.0);
    let d = (q.denom() >> sd).to_f64().unwrap_or(1.0);
    ldexp(n / d, sn as i64 - sd as i64)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Exponent vector. Ordered by total degree first, then lexicographically
/// with `x1 > x2 > ... > xn`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial in `nvars` variables over the rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, rat(c))
    }

    /// The coordinate function `x_{i+1}`. Panics when `i >= nvars`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut p = Self::zero(nvars);
        p.terms.insert(Monomial::var(nvars, i), Rational::one());
        p
    }

    pub fn monomial(nvars: usize, exponents: Vec<u32>, c: Rational) -> Self {
        assert_eq!(exponents.len(), nvars);
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial(exponents), c);
        }
        p
    }

    /// Collect terms, merging duplicates and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length mismatch");
            p.add_term(Monomial(e), c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one(self.nvars))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in descending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Rational {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// Lowest total degree among the terms; `None` for zero.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] > 0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check_compat(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.check_compat(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check_compat(other);
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one(self.nvars);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = Poly::mul(&base, &base);
            }
        }
        result
    }

    /// Formal partial derivative in variable `i`. Panics when out of range;
    /// see [`Poly::try_diff`] for the checked form.
    pub fn diff(&self, i: usize) -> Poly {
        assert!(i < self.nvars, "variable index {i} out of range");
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.0.clone();
            dm[i] -= 1;
            out.add_term(Monomial(dm), c * rat(e as i64));
        }
        out
    }

    pub fn try_diff(&self, i: usize) -> Result<Poly, ScalarError> {
        if i >= self.nvars {
            return Err(ScalarError::IndexOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        Ok(self.diff(i))
    }

    /// Exact value at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = rational_to_f64(c);
                for (x, &e) in point.iter().zip(&m.0) {
                    if e > 0 {
                        t *= x.powi(e as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Value and gradient at a real point.
    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError> {
        if point.len() != self.nvars {
            return Err(ScalarError::DimensionMismatch {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let n = self.nvars;
        let mut value = 0.0;
        let mut partials = vec![0.0; n];
        for (m, c) in &self.terms {
            let c = rational_to_f64(c);
            let mut t = c;
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= x.powi(e as i32);
                }
            }
            value += t;
            for j in 0..n {
                let e = m.0[j];
                if e == 0 {
                    continue;
                }
                let mut d = c * e as f64;
                for (i, (x, &ei)) in point.iter().zip(&m.0).enumerate() {
                    let p = if i == j { ei - 1 } else { ei };
                    if p > 0 {
                        d *= x.powi(p as i32);
                    }
                }
                partials[j] += d;
            }
        }
        Ok(Jet { value, partials })
    }

    /// Substitute `subs[i]` for variable `i`. Every substitute must share
    /// one variable count, which becomes the result's.
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        self.compose_truncated(subs, None)
    }

    /// Like [`Poly::compose`] but drops every term of degree above `max_degree`
    /// as it goes.
    pub fn compose_truncated(&self, subs: &[Poly], max_degree: Option<u32>) -> Poly {
        assert_eq!(subs.len(), self.nvars, "one substitute per variable");
        let target = subs.first().map(Poly::nvars).unwrap_or(0);
        let trunc = |p: Poly| match max_degree {
            Some(d) => p.truncate(d),
            None => p,
        };
        let mut powers: Vec<Vec<Poly>> = subs.iter().map(|s| vec![Poly::one(s.nvars)]).collect();
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = trunc(powers[i].last().unwrap().mul(&subs[i]));
                    powers[i].push(next);
                }
                t = trunc(t.mul(&powers[i][e as usize]));
            }
            out = out.add(&t);
        }
        out
    }

    pub fn truncate(&self, max_degree: u32) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= max_degree)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn homogeneous_part(&self, k: u32) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn is_homogeneous(&self, k: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == k)
    }

    /// Re-embed into `nvars` variables, placing the current ones at `offset`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Poly {
        assert!(offset + self.nvars <= nvars);
        Poly {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut e = vec![0; nvars];
                    e[offset..offset + self.nvars].copy_from_slice(&m.0);
                    (Monomial(e), c.clone())
                })
                .collect(),
        }
    }

    /// Restrict to the variables in `keep` (in that order). `None` if the
    /// polynomial depends on a dropped variable.
    pub fn restrict(&self, keep: &[usize]) -> Option<Poly> {
        let mut out = Poly::zero(keep.len());
        for (m, c) in &self.terms {
            let dropped: u32 = (0..self.nvars)
                .filter(|i| !keep.contains(i))
                .map(|i| m.0[i])
                .sum();
            if dropped > 0 {
                return None;
            }
            out.add_term(Monomial(keep.iter().map(|&i| m.0[i]).collect()), c.clone());
        }
        Some(out)
    }

    /// Greatest common monomial divisor of all terms (one for zero).
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        match it.next() {
            None => Monomial::one(self.nvars),
            Some(first) => it.fold(first.clone(), |g, m| g.gcd(m)),
        }
    }

    /// Divide every term by a monomial that divides all of them.
    pub fn div_monomial(&self, m: &Monomial) -> Option<Poly> {
        let mut out = Poly::zero(self.nvars);
        for (t, c) in &self.terms {
            out.terms.insert(t.div(m)?, c.clone());
        }
        Some(out)
    }

    /// Positive rational `c` with `self / c` having coprime integer
    /// coefficients. One for the zero polynomial.
    pub fn content(&self) -> Rational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            Rational::one()
        } else {
            Rational::new(num, den)
        }
    }

    /// Exact quotient `self / divisor` when it exists in the polynomial ring.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        self.check_compat(divisor);
        let (lm, lc) = divisor.leading_term()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut quot = Poly::zero(self.nvars);
        while let Some((rm, rc)) = rem.leading_term() {
            let qm = rm.div(&lm)?;
            let qc = rc / &lc;
            let step = Poly::monomial(self.nvars, qm.0.clone(), qc.clone());
            rem = rem.sub(&step.mul(divisor));
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Coefficients of this polynomial viewed as univariate in variable `i`,
    /// lowest degree first; the coefficients keep all `nvars` variables
    /// (with exponent of `i` zero).
    pub fn coefficients_in(&self, i: usize) -> Vec<Poly> {
        let deg = self.degree_in(i) as usize;
        let mut out = vec![Poly::zero(self.nvars); deg + 1];
        for (m, c) in &self.terms {
            let mut e = m.0.clone();
            let k = e[i] as usize;
            e[i] = 0;
            out[k].add_term(Monomial(e), c.clone());
        }
        out
    }

    fn check_compat(&self, other: &Poly) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomials over different variable counts"
        );
    }

    /// Canonical text with the given variable names: graded-lex order,
    /// explicit `*`, `^` powers.
    pub fn to_string_with(&self, vars: &[String]) -> String {
        assert!(vars.len() >= self.nvars);
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || m.is_one() {
                factors.push(abs.to_string());
            }
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(vars[i].clone()),
                    _ => factors.push(format!("{}^{}", vars[i], e)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

/// Default variable names `x1..xn`.
pub fn default_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_with(&default_vars(self.nvars)))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]({})", self.nvars, self)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $inherent:ident) => {
        impl $tr<&Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                Poly::$inherent(self, rhs)
            }
        }
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                Poly::$inherent(&self, &rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                Poly::$inherent(&self, rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                Poly::$inherent(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::neg(&self)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::neg(self)
    }
}
