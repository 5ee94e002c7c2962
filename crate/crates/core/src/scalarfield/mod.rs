//! Scalar fields: exact polynomials and rational functions, jets, and
//! opaque jet-evaluable rules.

pub mod jet;
pub mod parse;
pub mod poly;
pub mod ratfn;

use std::fmt;
use std::sync::Arc;

pub use jet::Jet;
pub use parse::{parse_poly, ParseError};
pub use poly::{default_vars, rat, ratio, rational_from_f64, rational_to_f64, Monomial, Poly, Rational};
pub use ratfn::RatFn;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("division by the zero polynomial")]
    ZeroDenominator,
    #[error("denominator vanishes at the evaluation point")]
    Singular,
    #[error("opaque field has no symbolic form")]
    NotSymbolic,
}

/// Exact scalar types that support ring arithmetic and formal derivatives.
///
/// Method names deliberately shadow `std::ops`; generic code calls these and
/// concrete code is free to use operators.
pub trait Symbolic: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn nvars(&self) -> usize;
    fn zero(nvars: usize) -> Self;
    fn constant(nvars: usize, c: Rational) -> Self;
    fn from_poly(p: Poly) -> Self;
    fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::from_integer(1.into()))
    }
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn diff(&self, i: usize) -> Self;
    fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError>;
    fn to_string_with(&self, vars: &[String]) -> String;
    /// Exact value at a rational point, `None` on a pole.
    fn eval_rational(&self, point: &[Rational]) -> Option<Rational>;
    /// Clear all denominators: a polynomial vanishing exactly where `self`
    /// vanishes off the poles.
    fn numerator(&self) -> Poly;
}

impl Symbolic for Poly {
    fn nvars(&self) -> usize {
        Poly::nvars(self)
    }
    fn zero(nvars: usize) -> Self {
        Poly::zero(nvars)
    }
    fn constant(nvars: usize, c: Rational) -> Self {
        Poly::constant(nvars, c)
    }
    fn from_poly(p: Poly) -> Self {
        p
    }
    fn add(&self, other: &Self) -> Self {
        Poly::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Poly::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Poly::mul(self, other)
    }
    fn neg(&self) -> Self {
        Poly::neg(self)
    }
    fn scale(&self, c: &Rational) -> Self {
        Poly::scale(self, c)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn diff(&self, i: usize) -> Self {
        Poly::diff(self, i)
    }
    fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError> {
        Poly::eval_jet(self, point)
    }
    fn to_string_with(&self, vars: &[String]) -> String {
        Poly::to_string_with(self, vars)
    }
    fn eval_rational(&self, point: &[Rational]) -> Option<Rational> {
        Some(self.eval(point))
    }
    fn numerator(&self) -> Poly {
        self.clone()
    }
}

impl Symbolic for RatFn {
    fn nvars(&self) -> usize {
        RatFn::nvars(self)
    }
    fn zero(nvars: usize) -> Self {
        RatFn::from_poly(Poly::zero(nvars))
    }
    fn constant(nvars: usize, c: Rational) -> Self {
        RatFn::from_poly(Poly::constant(nvars, c))
    }
    fn from_poly(p: Poly) -> Self {
        RatFn::from_poly(p)
    }
    fn add(&self, other: &Self) -> Self {
        RatFn::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        RatFn::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        RatFn::mul(self, other)
    }
    fn neg(&self) -> Self {
        RatFn::neg(self)
    }
    fn scale(&self, c: &Rational) -> Self {
        RatFn::scale(self, c)
    }
    fn is_zero(&self) -> bool {
        RatFn::is_zero(self)
    }
    fn diff(&self, i: usize) -> Self {
        RatFn::diff(self, i)
    }
    fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError> {
        RatFn::eval_jet(self, point)
    }
    fn to_string_with(&self, vars: &[String]) -> String {
        RatFn::to_string_with(self, vars)
    }
    fn eval_rational(&self, point: &[Rational]) -> Option<Rational> {
        self.eval(point)
    }
    fn numerator(&self) -> Poly {
        self.numer().clone()
    }
}

/// Jet-valued rule for fields with no symbolic form.
pub type OpaqueRule = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;

/// A scalar field on a coordinate chart.
#[derive(Clone)]
pub enum ScalarField {
    Poly(Poly),
    Rat(RatFn),
    Opaque { nvars: usize, rule: OpaqueRule },
}

impl ScalarField {
    pub fn opaque<F>(nvars: usize, rule: F) -> Self
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        ScalarField::Opaque {
            nvars,
            rule: Arc::new(rule),
        }
    }

    pub fn nvars(&self) -> usize {
        match self {
            ScalarField::Poly(p) => p.nvars(),
            ScalarField::Rat(r) => r.nvars(),
            ScalarField::Opaque { nvars, .. } => *nvars,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        !matches!(self, ScalarField::Opaque { .. })
    }

    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError> {
        match self {
            ScalarField::Poly(p) => p.eval_jet(point),
            ScalarField::Rat(r) => r.eval_jet(point),
            ScalarField::Opaque { nvars, rule } => {
                if point.len() != *nvars {
                    return Err(ScalarError::DimensionMismatch {
                        expected: *nvars,
                        found: point.len(),
                    });
                }
                Ok(rule(&Jet::seed(point)))
            }
        }
    }

    /// Evaluate on jets of an outer chart (composition by the chain rule).
    pub fn eval_on(&self, args: &[Jet]) -> Result<Jet, ScalarError> {
        match self {
            ScalarField::Opaque { nvars, rule } => {
                if args.len() != *nvars {
                    return Err(ScalarError::DimensionMismatch {
                        expected: *nvars,
                        found: args.len(),
                    });
                }
                Ok(rule(args))
            }
            _ => {
                let point: Vec<f64> = args.iter().map(|a| a.value).collect();
                let inner = self.eval_jet(&point)?;
                let m = args.first().map(Jet::nvars).unwrap_or(0);
                let mut partials = vec![0.0; m];
                for (d, a) in inner.partials.iter().zip(args) {
                    for (p, ap) in partials.iter_mut().zip(&a.partials) {
                        *p += d * ap;
                    }
                }
                Ok(Jet {
                    value: inner.value,
                    partials,
                })
            }
        }
    }

    pub fn as_sym(&self) -> Option<Sym> {
        match self {
            ScalarField::Poly(p) => Some(Sym::Poly(p.clone())),
            ScalarField::Rat(r) => Some(Sym::from_ratfn(r.clone())),
            ScalarField::Opaque { .. } => None,
        }
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match self {
            ScalarField::Poly(p) => Some(p),
            _ => None,
        }
    }
}

impl From<Poly> for ScalarField {
    fn from(p: Poly) -> Self {
        ScalarField::Poly(p)
    }
}

impl From<Sym> for ScalarField {
    fn from(s: Sym) -> Self {
        match s {
            Sym::Poly(p) => ScalarField::Poly(p),
            Sym::Rat(r) => ScalarField::Rat(r),
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Poly(p) => write!(f, "{p:?}"),
            ScalarField::Rat(r) => write!(f, "{r:?}"),
            ScalarField::Opaque { nvars, .. } => write!(f, "Opaque[{nvars}]"),
        }
    }
}

/// Symbolic scalar that stays polynomial until a genuine quotient appears.
#[derive(Clone, Debug)]
pub enum Sym {
    Poly(Poly),
    Rat(RatFn),
}

impl Sym {
    pub fn from_ratfn(r: RatFn) -> Sym {
        match r.to_poly() {
            Some(p) => Sym::Poly(p),
            None => Sym::Rat(r),
        }
    }

    fn as_ratfn(&self) -> RatFn {
        match self {
            Sym::Poly(p) => RatFn::from_poly(p.clone()),
            Sym::Rat(r) => r.clone(),
        }
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match self {
            Sym::Poly(p) => Some(p),
            Sym::Rat(_) => None,
        }
    }

    pub fn div(&self, other: &Sym) -> Result<Sym, ScalarError> {
        Ok(Sym::from_ratfn(self.as_ratfn().div(&other.as_ratfn())?))
    }

    fn lift2(
        &self,
        other: &Sym,
        fp: impl Fn(&Poly, &Poly) -> Poly,
        fr: impl Fn(&RatFn, &RatFn) -> RatFn,
    ) -> Sym {
        match (self, other) {
            (Sym::Poly(a), Sym::Poly(b)) => Sym::Poly(fp(a, b)),
            _ => Sym::from_ratfn(fr(&self.as_ratfn(), &other.as_ratfn())),
        }
    }
}

impl PartialEq for Sym {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Sym::Poly(a), Sym::Poly(b)) => a == b,
            _ => self.as_ratfn() == other.as_ratfn(),
        }
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Poly(p) => write!(f, "{p}"),
            Sym::Rat(r) => write!(f, "{r}"),
        }
    }
}

impl Symbolic for Sym {
    fn nvars(&self) -> usize {
        match self {
            Sym::Poly(p) => p.nvars(),
            Sym::Rat(r) => r.nvars(),
        }
    }
    fn zero(nvars: usize) -> Self {
        Sym::Poly(Poly::zero(nvars))
    }
    fn constant(nvars: usize, c: Rational) -> Self {
        Sym::Poly(Poly::constant(nvars, c))
    }
    fn from_poly(p: Poly) -> Self {
        Sym::Poly(p)
    }
    fn add(&self, other: &Self) -> Self {
        self.lift2(other, Poly::add, RatFn::add)
    }
    fn sub(&self, other: &Self) -> Self {
        self.lift2(other, Poly::sub, RatFn::sub)
    }
    fn mul(&self, other: &Self) -> Self {
        self.lift2(other, Poly::mul, RatFn::mul)
    }
    fn neg(&self) -> Self {
        match self {
            Sym::Poly(p) => Sym::Poly(p.neg()),
            Sym::Rat(r) => Sym::Rat(r.neg()),
        }
    }
    fn scale(&self, c: &Rational) -> Self {
        match self {
            Sym::Poly(p) => Sym::Poly(p.scale(c)),
            Sym::Rat(r) => Sym::from_ratfn(r.scale(c)),
        }
    }
    fn is_zero(&self) -> bool {
        match self {
            Sym::Poly(p) => p.is_zero(),
            Sym::Rat(r) => r.is_zero(),
        }
    }
    fn diff(&self, i: usize) -> Self {
        match self {
            Sym::Poly(p) => Sym::Poly(p.diff(i)),
            Sym::Rat(r) => Sym::from_ratfn(r.diff(i)),
        }
    }
    fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError> {
        match self {
            Sym::Poly(p) => p.eval_jet(point),
            Sym::Rat(r) => r.eval_jet(point),
        }
    }
    fn to_string_with(&self, vars: &[String]) -> String {
        match self {
            Sym::Poly(p) => p.to_string_with(vars),
            Sym::Rat(r) => r.to_string_with(vars),
        }
    }
    fn eval_rational(&self, point: &[Rational]) -> Option<Rational> {
        match self {
            Sym::Poly(p) => Some(p.eval(point)),
            Sym::Rat(r) => r.eval(point),
        }
    }
    fn numerator(&self) -> Poly {
        match self {
            Sym::Poly(p) => p.clone(),
            Sym::Rat(r) => r.numer().clone(),
        }
    }
}
