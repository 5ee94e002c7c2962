#![allow(dead_code)]

use proptest::prelude::*;

use nijenhuis::matrix::Mat;
use nijenhuis::scalarfield::{ratio, Poly, Rational};

pub fn rational() -> impl Strategy<Value = Rational> {
    (-5i64..=5, 1i64..=3).prop_map(|(n, d)| ratio(n, d))
}

/// Sparse polynomial in `nv` variables, total degree at most `deg`.
pub fn poly(nv: usize, deg: u32, terms: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::collection::vec(0..=deg, nv), rational()), 0..=terms).prop_map(move |ts| {
        ts.into_iter().fold(Poly::zero(nv), |acc, (mut e, c)| {
            // spread the degree budget so the total stays within `deg`
            let mut left = deg;
            for x in e.iter_mut() {
                *x = (*x).min(left);
                left -= *x;
            }
            acc.add(&Poly::monomial(nv, e, c))
        })
    })
}

pub fn poly_matrix(n: usize, nv: usize, deg: u32, terms: usize) -> impl Strategy<Value = Mat<Poly>> {
    prop::collection::vec(poly(nv, deg, terms), n * n).prop_map(move |v| Mat::from_fn(n, n, |i, j| v[i * n + j].clone()))
}

pub fn point(nv: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, nv)
}
