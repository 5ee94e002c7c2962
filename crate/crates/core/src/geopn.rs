//! Phase-space calculus: canonical Poisson brackets, geodesic
//! compatibility `{H, F} = 2 H l`, the `g_f` family of compatible metrics,
//! and compatibility of symplectic forms with Nijenhuis operators.

use std::fmt;

use nalgebra::DMatrix;

use crate::matrix::{jet_mul, jet_partial, jet_values, Mat};
use crate::sampling::SampleSpec;
use crate::scalarfield::{default_vars, rat, Jet, Poly, Rational, ScalarField, Sym, Symbolic};
use crate::spectral::{determinant, faddeev_leverrier};
use crate::tensorcore::{is_nijenhuis, numeric_max, Mode, OpField, Tensor3, TensorError};
use crate::univariate::QPoly;
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("contravariant metric is not symmetric: {0}")]
    NotSymmetric(Verdict),
    #[error("two-form is not antisymmetric: {0}")]
    NotAntisymmetric(Verdict),
    #[error("symplectic checks need an even dimension, got {0}")]
    OddDimension(usize),
    #[error("determinant vanishes identically")]
    Degenerate,
    #[error("f(L) is not invertible: det f(L) vanishes identically")]
    NotInvertible,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Polynomial on `T*M` in the variables `x1..xn, p1..pn`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoly {
    n: usize,
    poly: Poly,
}

impl PhasePoly {
    pub fn new(n: usize, poly: Poly) -> Result<Self, GeoError> {
        if poly.nvars() != 2 * n {
            return Err(GeoError::Dimension(format!(
                "phase polynomial over {} variables for base dimension {n}",
                poly.nvars()
            )));
        }
        Ok(PhasePoly { n, poly })
    }

    /// A function of position only.
    pub fn from_base(n: usize, p: &Poly) -> Self {
        PhasePoly {
            n,
            poly: p.embed(2 * n, 0),
        }
    }

    pub fn position(n: usize, i: usize) -> Self {
        PhasePoly {
            n,
            poly: Poly::var(2 * n, i),
        }
    }

    pub fn momentum(n: usize, i: usize) -> Self {
        PhasePoly {
            n,
            poly: Poly::var(2 * n, n + i),
        }
    }

    pub fn zero(n: usize) -> Self {
        PhasePoly {
            n,
            poly: Poly::zero(2 * n),
        }
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Largest total degree in the momenta.
    pub fn momentum_degree(&self) -> Option<u32> {
        self.poly
            .terms()
            .map(|(m, _)| m.exponents()[self.n..].iter().sum())
            .max()
    }

    pub fn add(&self, o: &Self) -> Self {
        PhasePoly {
            n: self.n,
            poly: self.poly.add(&o.poly),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        PhasePoly {
            n: self.n,
            poly: self.poly.sub(&o.poly),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        PhasePoly {
            n: self.n,
            poly: self.poly.mul(&o.poly),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PhasePoly {
            n: self.n,
            poly: self.poly.scale(c),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        phase_vars(self.n)
    }
}

impl fmt::Display for PhasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.poly.to_string_with(&self.vars()))
    }
}

/// `x1..xn, p1..pn`.
pub fn phase_vars(n: usize) -> Vec<String> {
    let mut v = default_vars(n);
    v.extend((1..=n).map(|i| format!("p{i}")));
    v
}

/// `{F, G} = sum_i (dF/dp_i dG/dx_i - dF/dx_i dG/dp_i)`, so `{p_i, x_j} = delta_ij`.
pub fn poisson_bracket(f: &PhasePoly, g: &PhasePoly) -> Result<PhasePoly, GeoError> {
    if f.n != g.n {
        return Err(GeoError::Dimension(format!("base dimensions {} and {}", f.n, g.n)));
    }
    let n = f.n;
    let mut acc = Poly::zero(2 * n);
    for i in 0..n {
        acc = acc
            .add(&f.poly.diff(n + i).mul(&g.poly.diff(i)))
            .sub(&f.poly.diff(i).mul(&g.poly.diff(n + i)));
    }
    Ok(PhasePoly { n, poly: acc })
}

fn sym_mat(f: &OpField) -> Result<Mat<Sym>, GeoError> {
    Ok(f.to_sym()?)
}

fn symmetric_verdict(m: &OpField, sign: i64) -> Result<Verdict, GeoError> {
    let n = m.dim();
    if m.is_symbolic() {
        let s = sym_mat(m)?;
        for i in 0..n {
            for j in i..n {
                let d = s.get(i, j).sub(&s.get(j, i).scale(&rat(sign)));
                if !d.is_zero() {
                    return Ok(Verdict::symbolic(format!("({},{})", i + 1, j + 1), d.to_string_with(m.vars())));
                }
            }
        }
        return Ok(Verdict::zero());
    }
    Ok(numeric_max(m.nvars(), &SampleSpec::default(), |p| {
        let a = m.value_at(p)?;
        let d = &a - a.transpose() * sign as f64;
        Ok(d.amax())
    })?)
}

/// Denominators of rational entries, used as loci for samples to avoid.
fn poles(m: &OpField) -> Vec<Poly> {
    m.entries()
        .iter()
        .filter_map(|e| match e {
            ScalarField::Rat(r) => Some(r.denom().clone()),
            _ => None,
        })
        .collect()
}

/// Pseudo-Riemannian metric stored through its inverse `g^{ij}`.
#[derive(Clone, Debug)]
pub struct Metric {
    inv: OpField,
}

impl Metric {
    pub fn new(inv: OpField) -> Result<Self, GeoError> {
        let v = symmetric_verdict(&inv, 1)?;
        if !v.pass {
            return Err(GeoError::NotSymmetric(v));
        }
        if inv.is_symbolic() && determinant(&sym_mat(&inv)?).is_zero() {
            return Err(GeoError::Degenerate);
        }
        Ok(Metric { inv })
    }

    pub fn from_polys(m: &Mat<Poly>) -> Result<Self, GeoError> {
        Self::new(OpField::from_polys(m))
    }

    pub fn inverse(&self) -> &OpField {
        &self.inv
    }

    pub fn dim(&self) -> usize {
        self.inv.dim()
    }

    /// `g_{ij}` as adjugate over determinant.
    pub fn covariant(&self) -> Result<Mat<Sym>, GeoError> {
        invert(&sym_mat(&self.inv)?)
    }
}

fn invert(a: &Mat<Sym>) -> Result<Mat<Sym>, GeoError> {
    let (sig, adj) = faddeev_leverrier(a);
    let det = crate::spectral::det_from_sigmas(&sig, a.nvars());
    if det.is_zero() {
        return Err(GeoError::Degenerate);
    }
    adj.try_map(|e| e.div(&det))
        .map_err(|e| GeoError::Tensor(TensorError::Scalar(e)))
}

/// Antisymmetric matrix `omega_ij` of a two-form.
#[derive(Clone, Debug)]
pub struct TwoForm {
    form: OpField,
}

impl TwoForm {
    pub fn new(form: OpField) -> Result<Self, GeoError> {
        let v = symmetric_verdict(&form, -1)?;
        if !v.pass {
            return Err(GeoError::NotAntisymmetric(v));
        }
        Ok(TwoForm { form })
    }

    pub fn matrix(&self) -> &OpField {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }
}

/// Sub-verdicts of geodesic compatibility.
#[derive(Clone, Debug, PartialEq)]
pub struct GeoVerdict {
    /// `L g^{-1}` symmetric.
    pub self_adjoint: Verdict,
    /// `{H, F} - 2 H l`.
    pub equation: Verdict,
    pub nijenhuis: Verdict,
}

impl GeoVerdict {
    pub fn pass(&self) -> bool {
        self.self_adjoint.pass && self.equation.pass && self.nijenhuis.pass
    }
}

/// `H = g^{ij} p_i p_j / 2`, `F = L^i_k g^{kj} p_i p_j` and
/// `l = g^{ij} d_i(tr L) p_j`, the derivative of `tr L` along the geodesic
/// flow. With the index raised the equation is `{H, F - 2 H tr L} = 0`.
pub fn hamiltonians(ginv: &Mat<Poly>, l: &Mat<Poly>) -> (PhasePoly, PhasePoly, PhasePoly) {
    let n = l.rows();
    let m = l.mul(ginv);
    let p: Vec<PhasePoly> = (0..n).map(|i| PhasePoly::momentum(n, i)).collect();
    let mut h = PhasePoly::zero(n);
    let mut f = PhasePoly::zero(n);
    for i in 0..n {
        for j in 0..n {
            let pp = p[i].mul(&p[j]);
            h = h.add(&PhasePoly::from_base(n, ginv.get(i, j)).mul(&pp));
            f = f.add(&PhasePoly::from_base(n, m.get(i, j)).mul(&pp));
        }
    }
    let tr = l.trace();
    let mut ell = PhasePoly::zero(n);
    for i in 0..n {
        let dt = tr.diff(i);
        for j in 0..n {
            ell = ell.add(&PhasePoly::from_base(n, &dt.mul(ginv.get(i, j))).mul(&p[j]));
        }
    }
    (h.scale(&Rational::new(1.into(), 2.into())), f, ell)
}

/// Largest symmetrised coefficient of the cubic form `{H, F} - 2 H l` at
/// a point, relative to the size of the terms.
fn equation_at(ginv: &Mat<Jet>, l: &Mat<Jet>) -> f64 {
    let n = l.rows();
    let m = jet_mul(l, ginv);
    let g = jet_values(ginv);
    let mv = jet_values(&m);
    let dg: Vec<DMatrix<f64>> = (0..n).map(|i| jet_partial(ginv, i)).collect();
    let dm: Vec<DMatrix<f64>> = (0..n).map(|i| jet_partial(&m, i)).collect();
    let dtr: Vec<f64> = (0..n).map(|i| (0..n).map(|k| l.get(k, k).partials[i]).sum()).collect();
    let mut t = vec![0.0; n * n * n];
    let mut size: f64 = 0.0;
    for j in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    let u = g[(i, j)] * dm[i][(a, b)];
                    let v = 0.5 * dg[i][(a, b)] * (mv[(i, j)] + mv[(j, i)]);
                    size = size.max(u.abs()).max(v.abs());
                    acc += u - v;
                }
                let w = g[(a, b)] * (0..n).map(|i| g[(i, j)] * dtr[i]).sum::<f64>();
                size = size.max(w.abs());
                t[(j * n + a) * n + b] = acc - w;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for a in 0..n {
            for b in 0..n {
                let idx = |x: usize, y: usize, z: usize| t[(x * n + y) * n + z];
                let s = idx(j, a, b) + idx(j, b, a) + idx(a, j, b) + idx(a, b, j) + idx(b, j, a) + idx(b, a, j);
                worst = worst.max(s.abs() / 6.0);
            }
        }
    }
    worst / (1.0 + size)
}

/// Exact when `g^{-1}` and `L` are polynomial; otherwise the equation is
/// sampled off the poles of the entries.
pub fn geodesic_compat_check(g: &Metric, l: &OpField) -> Result<GeoVerdict, GeoError> {
    geodesic_compat_check_with(g, l, &SampleSpec::default())
}

/// As [`geodesic_compat_check`] with explicit sampling; poles of the entries
/// are added to the avoided loci.
pub fn geodesic_compat_check_with(g: &Metric, l: &OpField, spec: &SampleSpec) -> Result<GeoVerdict, GeoError> {
    let mut spec = spec.clone();
    for p in poles(g.inverse()).into_iter().chain(poles(l)) {
        spec = spec.avoiding(p);
    }
    let spec = &spec;
    let n = l.dim();
    if g.dim() != n || g.inverse().nvars() != l.nvars() {
        return Err(GeoError::Dimension("metric and operator live on different charts".into()));
    }
    let self_adjoint = if l.is_symbolic() && g.inverse().is_symbolic() {
        let m = sym_mat(l)?.mul(&sym_mat(g.inverse())?);
        symmetric_verdict(&OpField::from_sym(l.vars().to_vec(), &m), 1)?
    } else {
        numeric_max(l.nvars(), spec, |p| {
            let a = l.value_at(p)? * g.inverse().value_at(p)?;
            Ok((&a - a.transpose()).amax())
        })?
    };
    let equation = match (g.inverse().to_poly(), l.to_poly()) {
        (Some(gi), Some(lp)) => {
            let (h, f, ell) = hamiltonians(&gi, &lp);
            let r = poisson_bracket(&h, &f)?.sub(&h.mul(&ell).scale(&rat(2)));
            if r.is_zero() {
                Verdict::zero()
            } else {
                Verdict::symbolic("{H,F}-2Hl", r.to_string())
            }
        }
        _ => numeric_max(l.nvars(), spec, |p| {
            Ok(equation_at(&g.inverse().jets_at(p)?, &l.jets_at(p)?))
        })?,
    };
    let nijenhuis = if l.is_symbolic() {
        is_nijenhuis(l, &Mode::Symbolic)?
    } else {
        is_nijenhuis(l, &Mode::Numeric(spec.clone()))?
    };
    Ok(GeoVerdict {
        self_adjoint,
        equation,
        nijenhuis,
    })
}

/// `f(L)` by Horner's rule over the symbolic entries.
fn matrix_poly(l: &Mat<Sym>, f: &QPoly) -> Mat<Sym> {
    let n = l.rows();
    let nv = l.nvars();
    let id = Mat::<Sym>::identity(n, nv);
    let mut acc = Mat::<Sym>::zeros(n, n, nv);
    for c in f.coeffs().iter().rev() {
        acc = acc.mul(l).add(&id.scale(c));
    }
    acc
}

/// `g_f = g f(L)`, stored as `f(L)^{-1} g^{-1}`.
pub fn gf_construct(g: &Metric, l: &OpField, f: &QPoly) -> Result<Metric, GeoError> {
    if g.dim() != l.dim() {
        return Err(GeoError::Dimension("metric and operator sizes differ".into()));
    }
    let fl = matrix_poly(&sym_mat(l)?, f);
    let fli = invert(&fl).map_err(|e| match e {
        GeoError::Degenerate => GeoError::NotInvertible,
        e => e,
    })?;
    let inv = fli.mul(&sym_mat(g.inverse())?);
    Metric::new(OpField::from_sym(l.vars().to_vec(), &inv))
}

/// `(d tau)_{ijk} = d_i tau_jk + d_j tau_ki + d_k tau_ij`.
pub fn exterior_derivative<T: Symbolic>(tau: &Mat<T>) -> Tensor3<T> {
    Tensor3::from_fn(tau.rows(), |i, j, k| {
        tau.get(j, k)
            .diff(i)
            .add(&tau.get(k, i).diff(j))
            .add(&tau.get(i, j).diff(k))
    })
}

/// Sub-verdicts of compatibility of a symplectic form and an operator.
#[derive(Clone, Debug, PartialEq)]
pub struct PnVerdict {
    /// `omega` antisymmetric, closed and nondegenerate.
    pub omega: Verdict,
    /// `omega L` antisymmetric.
    pub skew: Verdict,
    /// `d(omega L) = 0`.
    pub closed: Verdict,
    pub nijenhuis: Verdict,
}

impl PnVerdict {
    pub fn pass(&self) -> bool {
        self.omega.pass && self.skew.pass && self.closed.pass && self.nijenhuis.pass
    }
}

/// `(omega L)_{ij} = omega_{ik} L^k_j`.
pub fn twisted_form(omega: &TwoForm, l: &OpField) -> Result<Mat<Sym>, GeoError> {
    Ok(sym_mat(omega.matrix())?.mul(&sym_mat(l)?))
}

pub fn pn_check(omega: &TwoForm, l: &OpField) -> Result<PnVerdict, GeoError> {
    let n = omega.dim();
    if n % 2 == 1 {
        return Err(GeoError::OddDimension(n));
    }
    if l.dim() != n || l.nvars() != omega.matrix().nvars() {
        return Err(GeoError::Dimension("form and operator live on different charts".into()));
    }
    let vars = l.vars().to_vec();
    let w = sym_mat(omega.matrix())?;
    let mut omega_v = symmetric_verdict(omega.matrix(), -1)?;
    if omega_v.pass {
        omega_v = exterior_derivative(&w).zero_verdict("d omega", &vars);
    }
    if omega_v.pass && determinant(&w).is_zero() {
        omega_v = Verdict::symbolic("det omega", "0");
    }
    let wl = twisted_form(omega, l)?;
    let skew = symmetric_verdict(&OpField::from_sym(vars.clone(), &wl), -1)?;
    let closed = exterior_derivative(&wl).zero_verdict("d(omega L)", &vars);
    let nijenhuis = is_nijenhuis(l, &Mode::Symbolic)?;
    Ok(PnVerdict {
        omega: omega_v,
        skew,
        closed,
        nijenhuis,
    })
}

/// The `L` with `omega_tilde = omega L`.
pub fn recursion_operator(omega: &TwoForm, omega_t: &TwoForm) -> Result<OpField, GeoError> {
    if omega.dim() != omega_t.dim() {
        return Err(GeoError::Dimension("forms of different sizes".into()));
    }
    let wi = invert(&sym_mat(omega.matrix())?)?;
    let l = wi.mul(&sym_mat(omega_t.matrix())?);
    Ok(OpField::from_sym(omega.matrix().vars().to_vec(), &l))
}

/// Companion-type operator with first column `x1..xn` and ones above the diagonal.
pub fn companion_first_column(n: usize) -> OpField {
    let m = Mat::from_fn(n, n, |i, j| {
        if j == 0 {
            Poly::var(n, i)
        } else if j == i + 1 {
            Poly::one(n)
        } else {
            Poly::zero(n)
        }
    });
    OpField::from_polys(&m)
}

/// Inverse metric with `-1` on the antidiagonal and `x_k` on the `k`-th
/// diagonal below it.
pub fn antidiagonal_metric(n: usize) -> Metric {
    let m = Mat::from_fn(n, n, |i, j| {
        let s = i + j;
        if s + 1 == n {
            Poly::from_int(n, -1)
        } else if s + 1 > n {
            Poly::var(n, s - n)
        } else {
            Poly::zero(n)
        }
    });
    Metric::from_polys(&m).expect("antidiagonal metric is symmetric and nondegenerate")
}

/// `g^{-1} = diag(1 / (eps_i prod_{j != i} (lambda_i - lambda_j)))` together
/// with `L = diag(lambda)`.
pub fn levi_civita(lambdas: &[Poly], eps: &[i64]) -> Result<(Metric, OpField), GeoError> {
    let n = lambdas.len();
    if eps.len() != n {
        return Err(GeoError::Dimension("one sign per eigenvalue".into()));
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let mut d = Poly::from_int(lambdas[i].nvars(), eps[i]);
        for j in 0..n {
            if j != i {
                d = d.mul(&lambdas[i].sub(&lambdas[j]));
            }
        }
        let e = Sym::Poly(Poly::one(d.nvars()))
            .div(&Sym::Poly(d))
            .map_err(|e| GeoError::Tensor(TensorError::Scalar(e)))?;
        diag.push(e);
    }
    let nv = lambdas.first().map(Poly::nvars).unwrap_or(0);
    let gi = Mat::from_fn(n, n, |i, j| if i == j { diag[i].clone() } else { Sym::zero(nv) });
    let l = Mat::from_fn(n, n, |i, j| if i == j { lambdas[i].clone() } else { Poly::zero(nv) });
    Ok((Metric::new(OpField::from_sym(default_vars(nv), &gi))?, OpField::from_polys(&l)))
}

/// `omega = sum dx_i ^ dp_i` in the variables `x1..xn, p1..pn`.
pub fn canonical_omega(n: usize) -> TwoForm {
    let m = Mat::from_fn(2 * n, 2 * n, |i, j| {
        if j == i + n && i < n {
            Poly::one(2 * n)
        } else if i == j + n && j < n {
            Poly::from_int(2 * n, -1)
        } else {
            Poly::zero(2 * n)
        }
    });
    TwoForm::new(OpField::from_sym(phase_vars(n), &m)).expect("canonical form is antisymmetric")
}

/// `[[A, 0], [S, A^T]]` with `A` the companion-type block in `-x` and `S`
/// antisymmetric with first row `(0, -p2, ..., -pn)`.
pub fn block_companion_operator(n: usize) -> OpField {
    let nv = 2 * n;
    let a = |i: usize, j: usize| {
        if j == 0 {
            Poly::var(nv, i).neg()
        } else if j == i + 1 {
            Poly::one(nv)
        } else {
            Poly::zero(nv)
        }
    };
    let s = |i: usize, j: usize| {
        if i == 0 && j > 0 {
            Poly::var(nv, n + j).neg()
        } else if j == 0 && i > 0 {
            Poly::var(nv, n + i)
        } else {
            Poly::zero(nv)
        }
    };
    let m = Mat::from_fn(nv, nv, |i, j| match (i < n, j < n) {
        (true, true) => a(i, j),
        (true, false) => Poly::zero(nv),
        (false, true) => s(i - n, j),
        (false, false) => a(j - n, i - n),
    });
    OpField::from_sym(phase_vars(n), &m)
}

/// `diag(x1..xn, x1..xn)` in the variables `x1..xn, p1..pn`.
pub fn doubled_diagonal(n: usize) -> OpField {
    let m = Mat::from_fn(2 * n, 2 * n, |i, j| if i == j { Poly::var(2 * n, i % n) } else { Poly::zero(2 * n) });
    OpField::from_sym(phase_vars(n), &m)
}
