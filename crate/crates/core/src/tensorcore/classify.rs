//! Pointwise algebraic type: Segre characteristic, gl-regularity,
//! differential non-degeneracy and scalar type.
//!
//! The matrix at the point is read exactly (every `f64` is a dyadic
//! rational), so repeated eigenvalues are found from the squarefree
//! decomposition of the exact characteristic polynomial instead of from
//! floating-point eigenvalues, which smear Jordan blocks.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

use super::kernel::{numeric_rank, sorted_svd};
use super::{OpField, TensorError};
use crate::cluster::cluster_values;
use crate::matrix::{jet_values, rank_q, Mat};
use crate::scalarfield::{rational_from_f64, rational_to_f64, Poly, Rational};
use crate::spectral::{faddeev_leverrier, sigma_jets};
use crate::univariate::QPoly;

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Jordan block sizes, largest first.
    pub blocks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointClass {
    pub clusters: Vec<Cluster>,
    pub gl_regular: bool,
    pub diff_nondegenerate: bool,
    pub scalar_type: bool,
}

impl PointClass {
    /// Segre characteristic as block-size lists per cluster.
    pub fn segre(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.blocks.clone()).collect()
    }
}

pub(crate) struct Root {
    pub(crate) value: Complex64,
    pub(crate) multiplicity: usize,
    pub(crate) exact: Option<Rational>,
}

/// Exact characteristic polynomial of a rational matrix, lowest degree first.
pub(crate) fn char_poly_q(aq: &[Vec<Rational>]) -> QPoly {
    let n = aq.len();
    let m = Mat::from_fn(n, n, |i, j| Poly::constant(0, aq[i][j].clone()));
    let (sig, _) = faddeev_leverrier(&m);
    let mut c: Vec<Rational> = sig.iter().rev().map(|s| s.constant_term()).collect();
    c.push(Rational::from_integer(1.into()));
    QPoly::new(c)
}

/// The matrix read exactly: every finite `f64` is a dyadic rational.
pub(crate) fn exact_matrix(a: &DMatrix<f64>) -> Vec<Vec<Rational>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| rational_from_f64(a[(i, j)])).collect())
        .collect()
}

/// Continued-fraction convergents with bounded denominators.
fn convergents(x: f64, max_den: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..20 {
        if !r.is_finite() || r.abs() > 1e12 {
            break;
        }
        let a = r.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1).and_then(|v| v.checked_add(h0));
        let k2 = ai.checked_mul(k1).and_then(|v| v.checked_add(k0));
        let (Some(h2), Some(k2)) = (h2, k2) else { break };
        if k2 > max_den {
            break;
        }
        out.push(BigRational::new(h2.into(), k2.into()));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

pub(crate) fn roots_of(aq: &[Vec<Rational>]) -> Vec<Root> {
    let chi = char_poly_q(aq);
    let mut out = Vec::new();
    for (s, m) in chi.squarefree() {
        if s.degree() == 1 {
            let r = -&s.coeffs()[0] / &s.coeffs()[1];
            out.push(Root {
                value: Complex64::new(rational_to_f64(&r), 0.0),
                multiplicity: m,
                exact: Some(r),
            });
            continue;
        }
        for z in s.to_f64().roots() {
            let mut exact = None;
            if m > 1 && z.im.abs() < 1e-9 * z.norm().max(1.0) {
                let mut cands = vec![rational_from_f64(z.re)];
                cands.extend(convergents(z.re, 1_000_000));
                exact = cands.into_iter().find(|q| s.eval(q).is_zero());
            }
            let value = match &exact {
                Some(q) => Complex64::new(rational_to_f64(q), 0.0),
                None => z,
            };
            out.push(Root {
                value,
                multiplicity: m,
                exact,
            });
        }
    }
    out
}

/// Jordan block sizes from ranks `r_0 = n, r_1, ..., r_m` of powers of
/// `A - lambda`: blocks of size at least `k` number `r_{k-1} - r_k`.
fn blocks_from_ranks(ranks: &[usize]) -> Vec<usize> {
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0].saturating_sub(w[1])).collect();
    let mut sizes = Vec::new();
    for k in (1..=at_least.len()).rev() {
        let exactly = at_least[k - 1].saturating_sub(at_least.get(k).copied().unwrap_or(0));
        sizes.extend(std::iter::repeat_n(k, exactly));
    }
    sizes
}

fn exact_blocks(aq: &[Vec<Rational>], r: &Rational, m: usize) -> Vec<usize> {
    let n = aq.len();
    let mut b: Vec<Vec<Rational>> = aq.to_vec();
    for (i, row) in b.iter_mut().enumerate() {
        row[i] -= r;
    }
    let mut ranks = vec![n];
    let mut pw = b.clone();
    for k in 1..=m {
        if k > 1 {
            pw = crate::matrix::mul_q(&pw, &b);
        }
        ranks.push(rank_q(&pw));
    }
    blocks_from_ranks(&ranks)
}

fn numeric_blocks(a: &DMatrix<f64>, lambda: Complex64, m: usize, thresh: f64, scale: f64) -> Vec<usize> {
    let n = a.nrows();
    let b = DMatrix::from_fn(n, n, |i, j| {
        Complex::new(a[(i, j)], 0.0) - if i == j { lambda } else { Complex::new(0.0, 0.0) }
    });
    let mut ranks = vec![n];
    let mut pw = b.clone();
    for k in 1..=m {
        if k > 1 {
            pw = &pw * &b;
        }
        let sv = pw.clone().singular_values();
        let cut = thresh * scale.powi(k as i32);
        ranks.push(sv.iter().filter(|&&s| s > cut).count());
    }
    blocks_from_ranks(&ranks)
}

/// Classify the operator at `point`; eigenvalues closer than the clustering
/// radius derived from `tol` are identified.
pub fn classify_point(l: &OpField, point: &[f64], tol: f64) -> Result<PointClass, TensorError> {
    let n = l.dim();
    let jets = l.jets_at(point)?;
    let a = jet_values(&jets);
    if a.iter().any(|x| !x.is_finite()) {
        return Err(TensorError::Scalar(crate::scalarfield::ScalarError::Singular));
    }
    let aq = exact_matrix(&a);
    let roots = roots_of(&aq);
    let radius = roots.iter().map(|r| r.value.norm()).fold(0.0, f64::max);
    let scale = radius.max(1.0);
    let items: Vec<(Complex64, usize)> = roots.iter().map(|r| (r.value, r.multiplicity)).collect();
    let groups = cluster_values(&items, tol, scale)?;
    let mut clusters = Vec::new();
    for g in groups {
        let blocks = if g.multiplicity == 1 {
            vec![1]
        } else if g.members.len() == 1 && roots[g.members[0]].exact.is_some() {
            let r = roots[g.members[0]].exact.as_ref().unwrap();
            exact_blocks(&aq, r, g.multiplicity)
        } else {
            numeric_blocks(&a, g.value, g.multiplicity, 10.0 * tol, scale)
        };
        if blocks.iter().sum::<usize>() != g.multiplicity {
            return Err(TensorError::AmbiguousClustering {
                distance: 0.0,
                lo: tol * scale,
                hi: 10.0 * tol * scale,
            });
        }
        clusters.push(Cluster {
            value: g.value,
            multiplicity: g.multiplicity,
            blocks,
        });
    }
    let gl_regular = clusters.iter().all(|c| c.blocks.len() == 1);

    let sig = sigma_jets(&jets);
    let jac = DMatrix::from_fn(n, l.nvars(), |i, j| sig[i].partials[j]);
    let (sv, _) = sorted_svd(&jac);
    let diff_nondegenerate = numeric_rank(&sv)? == n;

    let tr = a.trace() / n as f64;
    let dev = (&a - DMatrix::identity(n, n) * tr).norm();
    let scalar_type = dev < tol;

    Ok(PointClass {
        clusters,
        gl_regular,
        diff_nondegenerate,
        scalar_type,
    })
}
