//! Left-symmetric algebras, their correspondence with linear Nijenhuis
//! operators, and formal linearisation of Nijenhuis perturbations of
//! `diag(x1, ..., xn)`.

use num_traits::Zero;

use crate::matrix::{inverse_q, nullspace_q, Mat};
use crate::scalarfield::{default_vars, rat, rational_from_f64, Poly, Rational};
use crate::tensorcore::{fn_bracket_generic, OpField, TensorError};
use crate::univariate::QPoly;
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LsaError {
    #[error("entry ({0}, {1}) is not a homogeneous linear polynomial")]
    NotLinear(usize, usize),
    #[error("perturbation is not homogeneous of degree {0}")]
    Inhomogeneous(u32),
    #[error("entry of degree {degree} exceeds the truncation degree {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
    #[error("substitution must be the identity plus terms of degree >= 2")]
    NonIdentityLinear,
    #[error("operator does not vanish at the origin")]
    NonzeroAtOrigin,
    #[error("linear part is not equivalent to diag(x1..xn) over the rationals: {0}")]
    LinearPart(String),
    #[error("degree-{k} term is not compatible with the linear part: {residual}")]
    Incompatible { k: u32, residual: Verdict },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Structure constants `l^i_{jk}` of `xi * eta = sum l^i_{jk} xi^j eta^k e_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LSACube {
    n: usize,
    l: Vec<Rational>,
}

impl LSACube {
    pub fn zero(n: usize) -> Self {
        LSACube {
            n,
            l: vec![Rational::zero(); n * n * n],
        }
    }

    /// From sparse zero-based `(i, j, k, value)` entries.
    pub fn from_entries(n: usize, entries: &[(usize, usize, usize, Rational)]) -> Self {
        let mut c = Self::zero(n);
        for (i, j, k, v) in entries {
            c.set(*i, *j, *k, v.clone());
        }
        c
    }

    /// `e_i * e_i = e_i`, all other products zero.
    pub fn diagonal(n: usize) -> Self {
        Self::from_entries(n, &(0..n).map(|i| (i, i, i, rat(1))).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.l[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Rational) {
        let n = self.n;
        self.l[(i * n + j) * n + k] = v;
    }

    /// Nonzero entries, zero-based.
    pub fn entries(&self) -> Vec<(usize, usize, usize, Rational)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    if !v.is_zero() {
                        out.push((i, j, k, v.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn product(&self, xi: &[Rational], eta: &[Rational]) -> Vec<Rational> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = Rational::zero();
                for j in 0..n {
                    if xi[j].is_zero() {
                        continue;
                    }
                    for k in 0..n {
                        acc += self.get(i, j, k) * &xi[j] * &eta[k];
                    }
                }
                acc
            })
            .collect()
    }

    fn basis(&self, i: usize) -> Vec<Rational> {
        (0..self.n).map(|j| if i == j { rat(1) } else { rat(0) }).collect()
    }
}

fn vec_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn show_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Left symmetry `(a, b, c) = (b, a, c)` of the associator
/// `(a, b, c) = a*(b*c) - (a*b)*c`, over all basis triples.
pub fn lsa_check(a: &LSACube) -> Verdict {
    let n = a.dim();
    let assoc = |x: &[Rational], y: &[Rational], z: &[Rational]| {
        vec_sub(&a.product(x, &a.product(y, z)), &a.product(&a.product(x, y), z))
    };
    for p in 0..n {
        for q in (p + 1)..n {
            for r in 0..n {
                let (ep, eq, er) = (a.basis(p), a.basis(q), a.basis(r));
                let d = vec_sub(&assoc(&ep, &eq, &er), &assoc(&eq, &ep, &er));
                if d.iter().any(|x| !x.is_zero()) {
                    return Verdict::symbolic(format!("e{},e{},e{}", p + 1, q + 1, r + 1), show_vec(&d));
                }
            }
        }
    }
    Verdict::zero()
}

/// `L^i_j(x) = sum_k l^i_{jk} x_k`.
pub fn lsa_to_linear(a: &LSACube) -> OpField {
    let n = a.dim();
    let m = Mat::from_fn(n, n, |i, j| {
        Poly::from_terms(
            n,
            (0..n).map(|k| {
                let mut e = vec![0u32; n];
                e[k] = 1;
                (e, a.get(i, j, k).clone())
            }),
        )
    });
    OpField::from_sym(default_vars(n), &m)
}

pub fn linear_to_lsa(l: &OpField) -> Result<LSACube, LsaError> {
    let n = l.dim();
    let m = l.to_poly().ok_or(TensorError::NotSymbolic)?;
    if m.nvars() != n {
        return Err(TensorError::Dimension("chart dimension differs from operator dimension".into()).into());
    }
    let mut c = LSACube::zero(n);
    for (i, j, p) in m.indexed() {
        if !p.is_zero() && !p.is_homogeneous(1) {
            return Err(LsaError::NotLinear(i, j));
        }
        for k in 0..n {
            let mut e = vec![0u32; n];
            e[k] = 1;
            c.set(i, j, k, p.coefficient(&e));
        }
    }
    Ok(c)
}

/// The associated commutator algebra and its Jacobi verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct LieData {
    /// `c^i_{jk} = l^i_{jk} - l^i_{kj}`.
    pub constants: LSACube,
    pub jacobi: Verdict,
}

impl LieData {
    pub fn is_abelian(&self) -> bool {
        self.constants.entries().is_empty()
    }
}

pub fn assoc_lie(a: &LSACube) -> LieData {
    let n = a.dim();
    let mut c = LSACube::zero(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                c.set(i, j, k, a.get(i, j, k) - a.get(i, k, j));
            }
        }
    }
    let br = |x: &[Rational], y: &[Rational]| c.product(x, y);
    let mut jacobi = Verdict::zero();
    'outer: for p in 0..n {
        for q in (p + 1)..n {
            for r in (q + 1)..n {
                let (x, y, z) = (c.basis(p), c.basis(q), c.basis(r));
                let s1 = br(&x, &br(&y, &z));
                let s2 = br(&y, &br(&z, &x));
                let s3 = br(&z, &br(&x, &y));
                let sum: Vec<Rational> = (0..n).map(|i| &s1[i] + &s2[i] + &s3[i]).collect();
                if sum.iter().any(|v| !v.is_zero()) {
                    jacobi = Verdict::symbolic(format!("e{},e{},e{}", p + 1, q + 1, r + 1), show_vec(&sum));
                    break 'outer;
                }
            }
        }
    }
    LieData { constants: c, jacobi }
}

/// Truncation degree used when none is given.
pub const DEFAULT_CAP: u32 = 6;

/// A polynomial known through degree `cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncSeries {
    cap: u32,
    poly: Poly,
}

impl TruncSeries {
    /// Rejects inputs of degree above `cap` instead of dropping terms.
    pub fn new(poly: Poly, cap: u32) -> Result<Self, LsaError> {
        match poly.degree() {
            Some(d) if d > cap => Err(LsaError::DegreeOverflow { degree: d, cap }),
            _ => Ok(TruncSeries { cap, poly }),
        }
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    /// Homogeneous components of degree `0..=cap`.
    pub fn components(&self) -> Vec<Poly> {
        (0..=self.cap).map(|k| self.poly.homogeneous_part(k)).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        TruncSeries {
            cap: self.cap.min(o.cap),
            poly: self.poly.add(&o.poly).truncate(self.cap.min(o.cap)),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let cap = self.cap.min(o.cap);
        TruncSeries {
            cap,
            poly: self.poly.truncate(cap).mul(&o.poly.truncate(cap)).truncate(cap),
        }
    }

    /// Substitution of series without constant terms.
    pub fn compose(&self, subs: &[TruncSeries]) -> Self {
        let cap = subs.iter().fold(self.cap, |c, s| c.min(s.cap));
        let s: Vec<Poly> = subs.iter().map(|s| s.poly.clone()).collect();
        TruncSeries {
            cap,
            poly: self.poly.compose_truncated(&s, Some(cap)),
        }
    }
}

fn check_cap(m: &Mat<Poly>, cap: u32) -> Result<(), LsaError> {
    for p in m.iter() {
        TruncSeries::new(p.clone(), cap)?;
    }
    Ok(())
}

fn trunc(m: &Mat<Poly>, d: u32) -> Mat<Poly> {
    m.map(|p| p.truncate(d))
}

fn mul_trunc(a: &Mat<Poly>, b: &Mat<Poly>, d: u32) -> Mat<Poly> {
    trunc(&a.mul(b), d)
}

/// `diag(x1, ..., xn)`.
pub fn l_lin(n: usize) -> Mat<Poly> {
    Mat::from_fn(n, n, |i, j| if i == j { Poly::var(n, i) } else { Poly::zero(n) })
}

/// The formal inverse `x = psi(y)` of `y = x + f(x)` through degree `d`.
pub fn formal_inverse(f: &[Poly], d: u32) -> Vec<Poly> {
    let n = f.len();
    let mut psi: Vec<Poly> = (0..n).map(|i| Poly::var(n, i)).collect();
    for _ in 0..d {
        psi = (0..n)
            .map(|i| Poly::var(n, i).sub(&f[i].compose_truncated(&psi, Some(d))))
            .collect();
    }
    psi
}

/// The operator in the coordinates `y = x + f(x)`: conjugation by the
/// Jacobian, then substitution of the formal inverse, exact through degree
/// `d`. Every component of `f` must have degree at least two.
pub fn pushforward_truncated(l: &Mat<Poly>, f: &[Poly], d: u32) -> Result<Mat<Poly>, LsaError> {
    let n = l.rows();
    if f.len() != n || l.nvars() != n {
        return Err(TensorError::Dimension("substitution and operator sizes differ".into()).into());
    }
    if f.iter().any(|p| p.min_degree().is_some_and(|k| k < 2)) {
        return Err(LsaError::NonIdentityLinear);
    }
    check_cap(l, d)?;
    let k = Mat::from_fn(n, n, |i, j| f[i].diff(j).truncate(d));
    let id = Mat::<Poly>::identity(n, n);
    let jac = id.add(&k);
    // (I + K)^-1 = sum (-K)^m; K has no constant terms
    let mut inv = id.clone();
    let mut term = id.clone();
    let negk = k.neg();
    for _ in 0..d {
        term = mul_trunc(&term, &negk, d);
        if term.is_zero() {
            break;
        }
        inv = inv.add(&term);
    }
    let conj = mul_trunc(&mul_trunc(&jac, l, d), &inv, d);
    let psi = formal_inverse(f, d);
    Ok(conj.map(|p| p.compose_truncated(&psi, Some(d))))
}

/// Both characterisations of compatibility of a homogeneous `R` with
/// `diag(x1..xn)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatVerdict {
    pub degree: u32,
    /// `R^i_j - (x_i - x_j) d_j R^i_i` for `i != j`.
    pub off_diagonal: Verdict,
    /// `[diag(x), R]_FN`.
    pub fn_bracket: Verdict,
}

impl CompatVerdict {
    pub fn pass(&self) -> bool {
        self.off_diagonal.pass && self.fn_bracket.pass
    }

    pub fn agree(&self) -> bool {
        self.off_diagonal.pass == self.fn_bracket.pass
    }
}

pub fn compat_check(r: &Mat<Poly>) -> Result<CompatVerdict, LsaError> {
    let n = r.rows();
    let vars = default_vars(n);
    if r.nvars() != n {
        return Err(TensorError::Dimension("perturbation must live on its own chart".into()).into());
    }
    let degree = r.iter().filter_map(|p| p.degree()).max().unwrap_or(2);
    if degree < 2 || r.iter().any(|p| !p.is_zero() && !p.is_homogeneous(degree)) {
        return Err(LsaError::Inhomogeneous(degree));
    }
    let mut off = Verdict::zero();
    'outer: for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let want = Poly::var(n, i).sub(&Poly::var(n, j)).mul(&r.get(i, i).diff(j));
            let d = r.get(i, j).sub(&want);
            if !d.is_zero() {
                off = Verdict::symbolic(format!("R^{}_{}", i + 1, j + 1), d.to_string_with(&vars));
                break 'outer;
            }
        }
    }
    let fnb = fn_bracket_generic(&l_lin(n), r).zero_verdict("[Llin,R]", &vars);
    Ok(CompatVerdict {
        degree,
        off_diagonal: off,
        fn_bracket: fnb,
    })
}

/// One killing step: the substitution used and the operator after it.
#[derive(Clone, Debug, PartialEq)]
pub struct KillStep {
    pub degree: u32,
    /// `y_i = x_i + f_i(x)`.
    pub f: Vec<Poly>,
    pub result: Mat<Poly>,
}

/// Removes the degree-`k` term of `l = diag(x) + R_k + O(k+1)` with
/// `y_i = x_i + R^i_i(x)`, working through degree `d`.
pub fn kill_term(l: &Mat<Poly>, k: u32, d: u32) -> Result<KillStep, LsaError> {
    let n = l.rows();
    let r = l.sub(&l_lin(n)).map(|p| p.homogeneous_part(k));
    if r.is_zero() {
        return Ok(KillStep {
            degree: k,
            f: vec![Poly::zero(n); n],
            result: l.clone(),
        });
    }
    let cv = compat_check(&r)?;
    if !cv.off_diagonal.pass {
        return Err(LsaError::Incompatible {
            k,
            residual: cv.off_diagonal,
        });
    }
    let f: Vec<Poly> = (0..n).map(|i| r.get(i, i).clone()).collect();
    let result = pushforward_truncated(l, &f, d)?;
    Ok(KillStep { degree: k, f, result })
}

/// Record of a formal linearisation.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    /// `x = P u` bringing the linear part to `diag(u)`, if one was needed.
    pub linear_change: Option<Vec<Vec<Rational>>>,
    /// Steps with a nonzero substitution.
    pub steps: Vec<KillStep>,
    /// Composed substitution `y = Phi(x)` (in the normalised chart).
    pub substitution: Vec<Poly>,
    /// Operator in the final coordinates minus `diag(y)`, through degree `cap`.
    pub residual: Mat<Poly>,
    pub cap: u32,
}

impl Transcript {
    pub fn pass(&self) -> bool {
        self.residual.is_zero()
    }
}

fn rational_roots(p: &QPoly) -> Option<Vec<Rational>> {
    let mut out = Vec::new();
    for (s, m) in p.squarefree() {
        if m > 1 {
            return None;
        }
        if s.degree() == 1 {
            out.push(-&s.coeffs()[0] / &s.coeffs()[1]);
            continue;
        }
        for z in s.to_f64().roots() {
            if z.im.abs() > 1e-9 * z.norm().max(1.0) {
                return None;
            }
            let cand = std::iter::once(rational_from_f64(z.re))
                .chain((1..=1000).map(|q| rational_from_f64((z.re * q as f64).round()) / rat(q)))
                .find(|c| s.eval(c).is_zero())?;
            out.push(cand);
        }
    }
    Some(out)
}

/// Finds `P` with `P^-1 L_lin(P u) P = diag(u)`.
fn normalise_linear(lin: &Mat<Poly>) -> Result<Vec<Vec<Rational>>, LsaError> {
    let n = lin.rows();
    let probe: Vec<Vec<Rational>> = vec![
        (0..n).map(|i| rat(1 + 2 * i as i64 * (i as i64 + 1))).collect(),
        (0..n).map(|i| rat(3_i64.pow(i as u32) + 1)).collect(),
        (0..n).map(|i| rat(7 * i as i64 + 2 - (i as i64 % 2) * 11)).collect(),
    ];
    let mut last_err = String::from("no probe point separates the eigenvalues");
    for x0 in probe {
        let a: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| lin.get(i, j).eval(&x0)).collect()).collect();
        let chi = crate::tensorcore::char_poly_q(&a);
        let Some(roots) = rational_roots(&chi) else {
            last_err = "eigenvalues at a probe point are not distinct rationals".into();
            continue;
        };
        let mut cols: Vec<Vec<Rational>> = Vec::new();
        for mu in &roots {
            let mut b = a.clone();
            for (i, row) in b.iter_mut().enumerate() {
                row[i] -= mu;
            }
            let ns = nullspace_q(&b, n);
            if ns.len() != 1 {
                return Err(LsaError::LinearPart("eigenspace is not one-dimensional".into()));
            }
            cols.push(ns.into_iter().next().unwrap());
        }
        let p0: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
        let p0inv = inverse_q(&p0).ok_or_else(|| LsaError::LinearPart("eigenvectors are dependent".into()))?;
        let mut p = p0.clone();
        for (c, v) in cols.iter().enumerate() {
            let vp: Vec<Poly> = v.iter().map(|x| Poly::constant(n, x.clone())).collect();
            let lv = lin.mul_vec(&vp);
            let r = v.iter().position(|x| !x.is_zero()).unwrap();
            let mu = lv[r].scale(&v[r].recip());
            if (0..n).any(|i| !lv[i].sub(&vp[i].mul(&mu)).is_zero()) {
                return Err(LsaError::LinearPart("eigenvectors are not constant".into()));
            }
            // mu must be s * w_c with w = P0^-1 x; then the column is scaled by 1/s
            let w = Poly::from_terms(
                n,
                (0..n).map(|k| {
                    let mut e = vec![0u32; n];
                    e[k] = 1;
                    (e, p0inv[c][k].clone())
                }),
            );
            let k = (0..n).find(|&k| !p0inv[c][k].is_zero()).unwrap();
            let mut e = vec![0u32; n];
            e[k] = 1;
            let s = mu.coefficient(&e) / &p0inv[c][k];
            if s.is_zero() || !mu.sub(&w.scale(&s)).is_zero() {
                return Err(LsaError::LinearPart("eigenvalues are not the dual coordinates".into()));
            }
            for row in p.iter_mut() {
                row[c] = &row[c] / &s;
            }
        }
        return Ok(p);
    }
    Err(LsaError::LinearPart(last_err))
}

/// `P^-1 L(P u) P`.
fn linear_conjugate(l: &Mat<Poly>, p: &[Vec<Rational>]) -> Mat<Poly> {
    let n = l.rows();
    let pinv = inverse_q(p).expect("invertible change");
    let subs: Vec<Poly> = (0..n)
        .map(|i| {
            Poly::from_terms(
                n,
                (0..n).map(|j| {
                    let mut e = vec![0u32; n];
                    e[j] = 1;
                    (e, p[i][j].clone())
                }),
            )
        })
        .collect();
    let lp = l.map(|e| e.compose(&subs));
    let pm = Mat::from_fn(n, n, |i, j| Poly::constant(n, p[i][j].clone()));
    let pim = Mat::from_fn(n, n, |i, j| Poly::constant(n, pinv[i][j].clone()));
    pim.mul(&lp).mul(&pm)
}

/// Kills the terms of degree `2..=cap` one at a time. The input must
/// vanish at the origin and have a linear part equivalent to the diagonal
/// one; an incompatible term (which means the input is not Nijenhuis
/// through degree `cap - 1`) stops the run with its residual.
pub fn formal_linearize(l: &OpField, cap: u32) -> Result<Transcript, LsaError> {
    let n = l.dim();
    let m = l.to_poly().ok_or(TensorError::NotSymbolic)?;
    if m.nvars() != n {
        return Err(TensorError::Dimension("chart dimension differs from operator dimension".into()).into());
    }
    check_cap(&m, cap)?;
    if m.iter().any(|p| !p.constant_term().is_zero()) {
        return Err(LsaError::NonzeroAtOrigin);
    }
    let lin = m.map(|p| p.homogeneous_part(1));
    let (mut cur, linear_change) = if lin == l_lin(n) {
        (m.clone(), None)
    } else {
        let p = normalise_linear(&lin)?;
        (linear_conjugate(&m, &p), Some(p))
    };
    let mut steps = Vec::new();
    let mut phi: Vec<Poly> = (0..n).map(|i| Poly::var(n, i)).collect();
    for k in 2..=cap {
        let step = kill_term(&cur, k, cap)?;
        if step.f.iter().all(Poly::is_zero) {
            continue;
        }
        // y_new = y + f(y) composed after the earlier substitutions
        phi = (0..n)
            .map(|i| phi[i].add(&step.f[i].compose_truncated(&phi, Some(cap))))
            .collect();
        cur = step.result.clone();
        steps.push(step);
    }
    let residual = trunc(&cur.sub(&l_lin(n)), cap);
    Ok(Transcript {
        linear_change,
        steps,
        substitution: phi,
        residual,
        cap,
    })
}

/// `psi(phi(x)) - x` through degree `cap`.
pub fn composition_residual(phi: &[Poly], psi: &[Poly], cap: u32) -> Vec<Poly> {
    let n = phi.len();
    (0..n)
        .map(|i| psi[i].compose_truncated(phi, Some(cap)).sub(&Poly::var(n, i)))
        .collect()
}
