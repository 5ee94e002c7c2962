//! Quotients of polynomials.
//!
//! Reduction is deliberately light: common monomial factors, exact
//! divisibility of the numerator by the denominator, and a monic
//! denominator. Equality is decided by cross multiplication, so unreduced
//! representatives still compare correctly.

use std::fmt;

use num_traits::{One, Zero};

use super::jet::Jet;
use super::poly::{default_vars, Poly, Rational};
use super::ScalarError;

#[derive(Clone)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        assert_eq!(num.nvars(), den.nvars());
        Ok(Self::reduce(num, den))
    }

    pub fn from_poly(p: Poly) -> Self {
        let n = p.nvars();
        RatFn {
            num: p,
            den: Poly::one(n),
        }
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        let nvars = num.nvars();
        if num.is_zero() {
            return RatFn {
                num,
                den: Poly::one(nvars),
            };
        }
        if den.is_constant() {
            let c = den.constant_term();
            return RatFn {
                num: num.scale(&c.recip()),
                den: Poly::one(nvars),
            };
        }
        if let Some(q) = num.exact_div(&den) {
            return RatFn {
                num: q,
                den: Poly::one(nvars),
            };
        }
        let common = num.monomial_content().gcd(&den.monomial_content());
        let (num, den) = if common.is_one() {
            (num, den)
        } else {
            (
                num.div_monomial(&common).expect("common factor"),
                den.div_monomial(&common).expect("common factor"),
            )
        };
        if let Some(q) = den.exact_div(&num) {
            // num divides den: 1 / q
            if !q.is_constant() {
                return Self::monic(Poly::one(nvars), q);
            }
        }
        Self::monic(num, den)
    }

    fn monic(num: Poly, den: Poly) -> Self {
        let lc = den.leading_term().map(|(_, c)| c.clone()).unwrap_or_else(Rational::one);
        let inv = lc.recip();
        RatFn {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The polynomial this equals, when the denominator is constant.
    pub fn to_poly(&self) -> Option<Poly> {
        if self.den.is_constant() {
            Some(self.num.scale(&self.den.constant_term().recip()))
        } else {
            None
        }
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        if self.den == other.den {
            return Self::reduce(self.num.add(&other.num), self.den.clone());
        }
        Self::reduce(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        Self::reduce(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &RatFn) -> Result<RatFn, ScalarError> {
        if other.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        Ok(Self::reduce(self.num.mul(&other.den), self.den.mul(&other.num)))
    }

    pub fn scale(&self, c: &Rational) -> RatFn {
        Self::reduce(self.num.scale(c), self.den.clone())
    }

    pub fn diff(&self, i: usize) -> RatFn {
        let n = self.num.diff(i).mul(&self.den).sub(&self.num.mul(&self.den.diff(i)));
        Self::reduce(n, self.den.mul(&self.den))
    }

    /// Exact value; `None` where the denominator vanishes.
    pub fn eval(&self, point: &[Rational]) -> Option<Rational> {
        let d = self.den.eval(point);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(point) / d)
        }
    }

    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet, ScalarError> {
        let d = self.den.eval_jet(point)?;
        if d.value == 0.0 {
            return Err(ScalarError::Singular);
        }
        Ok(&self.num.eval_jet(point)? / &d)
    }

    pub fn to_string_with(&self, vars: &[String]) -> String {
        match self.to_poly() {
            Some(p) => p.to_string_with(vars),
            None => format!(
                "({})/({})",
                self.num.to_string_with(vars),
                self.den.to_string_with(vars)
            ),
        }
    }
}

impl PartialEq for RatFn {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_with(&default_vars(self.nvars())))
    }
}

impl fmt::Debug for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFn[{}]({})", self.nvars(), self)
    }
}
