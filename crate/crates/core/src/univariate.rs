//! Univariate polynomials in `t`, exact over the rationals and in floating
//! point. Coefficients are stored lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::scalarfield::{rat, rational_to_f64, Rational};

/// Exact polynomial with rational coefficients, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPoly(Vec<Rational>);

impl QPoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        QPoly(c)
    }

    pub fn zero() -> Self {
        QPoly(Vec::new())
    }

    pub fn one() -> Self {
        QPoly(vec![Rational::one()])
    }

    /// `t - r`.
    pub fn linear(r: Rational) -> Self {
        QPoly(vec![-r, Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn lead(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, o: &QPoly) -> QPoly {
        let n = self.0.len().max(o.0.len());
        QPoly::new(
            (0..n)
                .map(|i| self.0.get(i).cloned().unwrap_or_default() + o.0.get(i).cloned().unwrap_or_default())
                .collect(),
        )
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        self.add(&o.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rational) -> QPoly {
        QPoly::new(self.0.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * rat(i as i64))
                .collect(),
        )
    }

    /// Quotient and remainder. Panics on a zero divisor.
    pub fn divrem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut r = self.0.clone();
        let dl = d.lead();
        let dd = d.degree();
        if r.len() < d.0.len() {
            return (QPoly::zero(), self.clone());
        }
        let mut q = vec![Rational::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = &r[k + dd] / &dl;
            if !c.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    r[k + j] -= &c * dc;
                }
            }
            q[k] = c;
        }
        r.truncate(dd);
        (QPoly::new(q), QPoly::new(r))
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.lead().recip())
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended Euclid: `(g, s, t)` with `s*self + t*o = g` monic.
    pub fn ext_gcd(&self, o: &QPoly) -> (QPoly, QPoly, QPoly) {
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (QPoly::one(), QPoly::zero());
        let (mut t0, mut t1) = (QPoly::zero(), QPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            let s = s0.sub(&q.mul(&s1));
            let t = t0.sub(&q.mul(&t1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
            t0 = std::mem::replace(&mut t1, t);
        }
        let inv = r0.lead().recip();
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Squarefree decomposition (Yun): `self = c * prod_m s_m^m`, returning
    /// the nonconstant `s_m` with their `m`.
    pub fn squarefree(&self) -> Vec<(QPoly, usize)> {
        let mut out = Vec::new();
        if self.degree() == 0 {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b = f.divrem(&a0).0;
        let mut c = df.divrem(&a0).0;
        let mut d = c.sub(&b.derivative());
        let mut m = 1;
        while b.degree() > 0 {
            let a = b.gcd(&d);
            if a.degree() > 0 {
                out.push((a.clone(), m));
            }
            b = b.divrem(&a).0;
            c = d.divrem(&a).0;
            d = c.sub(&b.derivative());
            m += 1;
        }
        out
    }

    pub fn to_f64(&self) -> FPoly {
        FPoly(self.0.iter().map(rational_to_f64).collect())
    }

    /// Evaluate at a rational square matrix.
    pub fn eval_matrix_q(&self, a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
        let n = a.len();
        let mut acc = vec![vec![Rational::zero(); n]; n];
        for c in self.0.iter().rev() {
            acc = crate::matrix::mul_q(&acc, a);
            for (i, row) in acc.iter_mut().enumerate() {
                row[i] += c;
            }
        }
        acc
    }
}

/// Floating-point polynomial, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct FPoly(pub Vec<f64>);

impl FPoly {
    pub fn trim(mut self, eps: f64) -> FPoly {
        while self.0.last().is_some_and(|x| x.abs() <= eps) {
            self.0.pop();
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn mul(&self, o: &FPoly) -> FPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return FPoly(Vec::new());
        }
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        FPoly(out)
    }

    pub fn add(&self, o: &FPoly) -> FPoly {
        let n = self.0.len().max(o.0.len());
        FPoly((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + o.0.get(i).unwrap_or(&0.0)).collect())
    }

    pub fn sub(&self, o: &FPoly) -> FPoly {
        self.add(&FPoly(o.0.iter().map(|x| -x).collect()))
    }

    /// Quotient and remainder by a divisor whose leading coefficient is nonzero.
    pub fn divrem(&self, d: &FPoly) -> (FPoly, FPoly) {
        let dd = d.degree();
        let dl = *d.0.last().expect("nonzero divisor");
        if self.0.len() < d.0.len() {
            return (FPoly(Vec::new()), self.clone());
        }
        let mut r = self.0.clone();
        let mut q = vec![0.0; r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = r[k + dd] / dl;
            for (j, dc) in d.0.iter().enumerate() {
                r[k + j] -= c * dc;
            }
            q[k] = c;
        }
        r.truncate(dd);
        (FPoly(q), FPoly(r))
    }

    /// Roots as eigenvalues of the companion matrix, polished by Newton steps.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.clone().trim(0.0);
        let n = p.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = p.0[n];
        let comp = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -p.0[n - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let dp = FPoly(p.0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect());
        comp.complex_eigenvalues()
            .iter()
            .map(|&z0| {
                let mut z = z0;
                for _ in 0..3 {
                    let d = dp.eval_c(z);
                    if d.norm() == 0.0 {
                        break;
                    }
                    let step = p.eval_c(z) / d;
                    if !step.is_finite() {
                        break;
                    }
                    let next = z - step;
                    if p.eval_c(next).norm() < p.eval_c(z).norm() {
                        z = next;
                    } else {
                        break;
                    }
                }
                z
            })
            .collect()
    }

    /// Evaluate at a square matrix by Horner's rule.
    pub fn eval_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut acc = DMatrix::zeros(n, n);
        for c in self.0.iter().rev() {
            acc = &acc * a + DMatrix::identity(n, n) * *c;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(c: &[i64]) -> QPoly {
        QPoly::new(c.iter().map(|&x| rat(x)).collect())
    }

    #[test]
    fn squarefree_of_repeated_factors() {
        // (t-1)^2 (t-2)^3 t
        let f = q(&[-1, 1]).mul(&q(&[-1, 1])).mul(&q(&[-2, 1]).mul(&q(&[-2, 1])).mul(&q(&[-2, 1]))).mul(&q(&[0, 1]));
        let sf = f.squarefree();
        assert_eq!(sf, vec![(q(&[0, 1]), 1), (q(&[-1, 1]), 2), (q(&[-2, 1]), 3)]);
    }

    #[test]
    fn bezout_identity() {
        // t^2 and t - 3: a = 1/9, b = -(t+3)/9
        let (g, s, t) = q(&[0, 0, 1]).ext_gcd(&q(&[-3, 1]));
        assert_eq!(g, QPoly::one());
        assert_eq!(s, QPoly::new(vec![crate::scalarfield::ratio(1, 9)]));
        assert_eq!(t, QPoly::new(vec![crate::scalarfield::ratio(-1, 3), crate::scalarfield::ratio(-1, 9)]));
    }

    #[test]
    fn float_roots() {
        let r = FPoly(vec![5.0, -2.0, 1.0]).roots();
        let mut ims: Vec<f64> = r.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 2.0).abs() < 1e-14 && (ims[1] - 2.0).abs() < 1e-14);
        assert!(r.iter().all(|z| (z.re - 1.0).abs() < 1e-14));
    }
}
