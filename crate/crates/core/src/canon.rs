//! Generators for the local canonical forms of Nijenhuis operators, each
//! paired with the obligations that certify it.

use crate::matrix::Mat;
use crate::scalarfield::{default_vars, rat, Poly, Rational, Sym, Symbolic};
use crate::spectral::{char_poly, SpectralError};
use crate::tensorcore::{classify_point, is_nijenhuis, Mode, OpField, TensorError};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CanonError {
    #[error("eigenvalue of block {block} depends on variable x{var} outside its group")]
    ForeignVariable { block: usize, var: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// What a generated form must satisfy.
#[derive(Clone, Debug, PartialEq)]
pub enum Obligation {
    /// The Nijenhuis tensor vanishes identically.
    Nijenhuis,
    /// `a_x = b_y` and `a_y = -b_x` for a 2x2 block `[[a, -b], [b, a]]`.
    CauchyRiemann { a: Poly, b: Poly },
    /// The characteristic coefficients equal these, exactly.
    CharPoly(Vec<Poly>),
    /// Segre characteristic at a point, block sizes per eigenvalue cluster.
    Segre { point: Vec<f64>, blocks: Vec<Vec<usize>> },
}

#[derive(Clone, Debug)]
pub struct Canonical {
    pub kind: &'static str,
    pub op: OpField,
    pub obligations: Vec<Obligation>,
}

impl Canonical {
    fn new(kind: &'static str, m: &Mat<Poly>, obligations: Vec<Obligation>) -> Self {
        Canonical {
            kind,
            op: OpField::from_sym(default_vars(m.nvars()), m),
            obligations,
        }
    }
}

/// Named verdicts for each obligation.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub checks: Vec<(String, Verdict)>,
}

impl Certificate {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|(_, v)| v.pass)
    }
}

pub fn certify(c: &Canonical) -> Result<Certificate, CanonError> {
    let vars = c.op.vars();
    let mut checks = Vec::new();
    for ob in &c.obligations {
        match ob {
            Obligation::Nijenhuis => checks.push(("nijenhuis".into(), is_nijenhuis(&c.op, &Mode::Symbolic)?)),
            Obligation::CauchyRiemann { a, b } => checks.push(("cauchy-riemann".into(), cauchy_riemann_check(a, b)?)),
            Obligation::CharPoly(expected) => {
                let got = char_poly(&c.op)?;
                let mut v = Verdict::zero();
                for (k, (g, e)) in got.iter().zip(expected).enumerate() {
                    let d = g.sub(&Sym::Poly(e.clone()));
                    if !d.is_zero() {
                        v = Verdict::symbolic(format!("sigma{}", k + 1), d.to_string_with(vars));
                        break;
                    }
                }
                checks.push(("char-poly".into(), v));
            }
            Obligation::Segre { point, blocks } => {
                let pc = classify_point(&c.op, point, 1e-6)?;
                let got = pc.segre();
                let v = if &got == blocks {
                    Verdict::zero()
                } else {
                    Verdict::symbolic("segre", format!("{got:?}, expected {blocks:?}"))
                };
                checks.push(("segre".into(), v));
            }
        }
    }
    Ok(Certificate { checks })
}

/// Block-diagonal `diag(lambda_1 Id_{k_1}, ..., lambda_s Id_{k_s})`. The
/// polynomials live on the full chart of dimension `sum k`; block `a` may
/// only use its own consecutive group of `k_a` variables.
pub fn gen_diag_real(blocks: &[(Poly, usize)]) -> Result<Canonical, CanonError> {
    let n: usize = blocks.iter().map(|b| b.1).sum();
    if n == 0 || blocks.iter().any(|b| b.1 == 0) {
        return Err(CanonError::BadParams("every block needs multiplicity at least one".into()));
    }
    let mut diag = Vec::with_capacity(n);
    let mut offset = 0;
    for (bi, (lambda, k)) in blocks.iter().enumerate() {
        if lambda.nvars() != n {
            return Err(CanonError::BadParams(format!(
                "eigenvalue of block {} is over {} variables, chart has {n}",
                bi + 1,
                lambda.nvars()
            )));
        }
        if let Some(v) = (0..n).find(|&v| (v < offset || v >= offset + k) && lambda.depends_on(v)) {
            return Err(CanonError::ForeignVariable { block: bi + 1, var: v + 1 });
        }
        diag.extend(std::iter::repeat_n(lambda.clone(), *k));
        offset += k;
    }
    let m = Mat::from_fn(n, n, |i, j| if i == j { diag[i].clone() } else { Poly::zero(n) });
    Ok(Canonical::new("diag", &m, vec![Obligation::Nijenhuis]))
}

/// `[[a, -b], [b, a]]` over two variables.
pub fn gen_complex_block(a: &Poly, b: &Poly) -> Result<Canonical, CanonError> {
    if a.nvars() != 2 || b.nvars() != 2 {
        return Err(CanonError::BadParams("complex block needs polynomials in two variables".into()));
    }
    let m = Mat::from_rows(vec![vec![a.clone(), b.neg()], vec![b.clone(), a.clone()]]);
    Ok(Canonical::new(
        "complex",
        &m,
        vec![
            Obligation::Nijenhuis,
            Obligation::CauchyRiemann {
                a: a.clone(),
                b: b.clone(),
            },
        ],
    ))
}

/// Exact Cauchy–Riemann equations for `a + i b` in `z = x1 + i x2`.
pub fn cauchy_riemann_check(a: &Poly, b: &Poly) -> Result<Verdict, CanonError> {
    if a.nvars() != 2 || b.nvars() != 2 {
        return Err(CanonError::BadParams("Cauchy-Riemann check needs two variables".into()));
    }
    let vars = default_vars(2);
    let r1 = a.diff(0).sub(&b.diff(1));
    let r2 = a.diff(1).add(&b.diff(0));
    Ok(if !r1.is_zero() {
        Verdict::symbolic("a_x - b_y", r1.to_string_with(&vars))
    } else if !r2.is_zero() {
        Verdict::symbolic("a_y + b_x", r2.to_string_with(&vars))
    } else {
        Verdict::zero()
    })
}

fn companion_block(k: usize, nvars: usize, offset: usize) -> Mat<Poly> {
    Mat::from_fn(k, k, |i, j| {
        if j == 0 {
            Poly::var(nvars, offset + i)
        } else if j == i + 1 {
            Poly::one(nvars)
        } else {
            Poly::zero(nvars)
        }
    })
}

/// First column `x1..xn`, ones on the superdiagonal.
pub fn gen_companion(n: usize) -> Result<Canonical, CanonError> {
    if n == 0 {
        return Err(CanonError::BadParams("dimension must be at least one".into()));
    }
    let sig = (0..n).map(|i| Poly::var(n, i).neg()).collect();
    Ok(Canonical::new(
        "companion",
        &companion_block(n, n, 0),
        vec![
            Obligation::Nijenhuis,
            Obligation::CharPoly(sig),
            Obligation::Segre {
                point: vec![0.0; n],
                blocks: vec![vec![n]],
            },
        ],
    ))
}

/// Direct sum of companion blocks of the given sizes on consecutive
/// variable groups.
pub fn gen_companion_sum(sizes: &[usize]) -> Result<Canonical, CanonError> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CanonError::BadParams("block sizes must be positive".into()));
    }
    let n: usize = sizes.iter().sum();
    let mut blocks = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &k in sizes {
        blocks.push(companion_block(k, n, offset));
        offset += k;
    }
    let mut at_origin = sizes.to_vec();
    at_origin.sort_unstable_by(|a, b| b.cmp(a));
    Ok(Canonical::new(
        "companion-sum",
        &Mat::block_diag(&blocks, n),
        vec![
            Obligation::Nijenhuis,
            Obligation::Segre {
                point: vec![0.0; n],
                blocks: vec![at_origin],
            },
        ],
    ))
}

/// Constant nilpotent Jordan block, ones on the subdiagonal.
pub fn gen_nilpotent_jordan(n: usize) -> Result<Canonical, CanonError> {
    if n < 2 {
        return Err(CanonError::BadParams("nilpotent block needs dimension at least two".into()));
    }
    let m = Mat::from_fn(n, n, |i, j| if i == j + 1 { Poly::one(n) } else { Poly::zero(n) });
    Ok(Canonical::new(
        "nilpotent",
        &m,
        vec![
            Obligation::Nijenhuis,
            Obligation::CharPoly(vec![Poly::zero(n); n]),
            Obligation::Segre {
                point: vec![0.0; n],
                blocks: vec![vec![n]],
            },
        ],
    ))
}

/// Coefficients of `(t - lambda)^n` in the `sigma` convention.
fn power_sigmas(lambda: &Poly, n: usize) -> Vec<Poly> {
    let mut binom: Rational = rat(1);
    (1..=n)
        .map(|k| {
            binom = binom.clone() * rat((n - k + 1) as i64) / rat(k as i64);
            let sign = if k % 2 == 1 { rat(-1) } else { rat(1) };
            lambda.pow(k as u32).scale(&(binom.clone() * sign))
        })
        .collect()
}

/// Jordan block with non-constant eigenvalue `lambda(x1)`: `lambda` on the
/// diagonal, ones on the subdiagonal, and `-(k-2) lambda' x_k` in row `k`
/// of the first column for `k >= 3`.
pub fn gen_jordan_nonconst(n: usize, lambda: &Poly) -> Result<Canonical, CanonError> {
    if n < 2 {
        return Err(CanonError::BadParams("Jordan block needs dimension at least two".into()));
    }
    let lambda = match lambda.nvars() {
        1 => lambda.embed(n, 0),
        v if v == n => lambda.clone(),
        v => {
            return Err(CanonError::BadParams(format!(
                "eigenvalue is over {v} variables, expected 1 or {n}"
            )))
        }
    };
    if let Some(v) = (1..n).find(|&v| lambda.depends_on(v)) {
        return Err(CanonError::ForeignVariable { block: 1, var: v + 1 });
    }
    let dl = lambda.diff(0);
    let m = Mat::from_fn(n, n, |i, j| {
        if i == j {
            lambda.clone()
        } else if i == j + 1 {
            Poly::one(n)
        } else if j == 0 && i >= 2 {
            // row k = i + 1 carries -(k - 2) lambda' x_k
            dl.mul(&Poly::var(n, i)).scale(&rat(-(i as i64 - 1)))
        } else {
            Poly::zero(n)
        }
    });
    let mut point = vec![0.5; n];
    point[0] = 0.25;
    Ok(Canonical::new(
        "jordan",
        &m,
        vec![
            Obligation::Nijenhuis,
            Obligation::CharPoly(power_sigmas(&lambda, n)),
            Obligation::Segre {
                point,
                blocks: vec![vec![n]],
            },
        ],
    ))
}

/// A complex number `re + i im` with polynomial parts.
#[derive(Clone)]
struct CPoly {
    re: Poly,
    im: Poly,
}

impl CPoly {
    fn add(&self, o: &CPoly) -> CPoly {
        CPoly {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    fn mul(&self, o: &CPoly) -> CPoly {
        CPoly {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    fn scale(&self, c: &Rational) -> CPoly {
        CPoly {
            re: self.re.scale(c),
            im: self.im.scale(c),
        }
    }
}

/// Real form of the complex Jordan block with holomorphic eigenvalue
/// `lambda(z1) = sum c_k z1^k` (`c_k = (re, im)`). Complex coordinate
/// `z_k = x_{2k-1} + i x_{2k}`; each complex entry `p + i q` becomes the
/// 2x2 block `[[p, -q], [q, p]]`.
pub fn gen_complex_jordan(n: usize, lambda: &[(Rational, Rational)]) -> Result<Canonical, CanonError> {
    if n < 2 {
        return Err(CanonError::BadParams("Jordan block needs complex dimension at least two".into()));
    }
    let nv = 2 * n;
    let z = |k: usize| CPoly {
        re: Poly::var(nv, 2 * k),
        im: Poly::var(nv, 2 * k + 1),
    };
    let c = |r: &Rational, i: &Rational| CPoly {
        re: Poly::constant(nv, r.clone()),
        im: Poly::constant(nv, i.clone()),
    };
    let zero = c(&rat(0), &rat(0));
    let horner = |coeffs: &[(Rational, Rational)]| {
        coeffs
            .iter()
            .rev()
            .fold(zero.clone(), |acc, (r, i)| acc.mul(&z(0)).add(&c(r, i)))
    };
    let lam = horner(lambda);
    let dcoeffs: Vec<(Rational, Rational)> = lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, (r, i))| (r * rat(k as i64), i * rat(k as i64)))
        .collect();
    let dlam = horner(&dcoeffs);
    let one = c(&rat(1), &rat(0));
    let entry = |i: usize, j: usize| -> CPoly {
        if i == j {
            lam.clone()
        } else if i == j + 1 {
            one.clone()
        } else if j == 0 && i >= 2 {
            dlam.mul(&z(i)).scale(&rat(-(i as i64 - 1)))
        } else {
            zero.clone()
        }
    };
    let m = Mat::from_fn(nv, nv, |r, s| {
        let e = entry(r / 2, s / 2);
        match (r % 2, s % 2) {
            (0, 0) | (1, 1) => e.re,
            (0, 1) => e.im.neg(),
            _ => e.im,
        }
    });
    Ok(Canonical::new("complex-jordan", &m, vec![Obligation::Nijenhuis]))
}
