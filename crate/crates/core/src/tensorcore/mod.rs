//! Operator fields, the Nijenhuis tensor and its relatives, and pointwise
//! algebraic classification.

mod classify;
mod kernel;

pub use classify::{classify_point, Cluster, PointClass};
pub use kernel::{kernel_bracket_check, kernel_frame, lie_bracket, numeric_rank, KernelVerdict};
pub(crate) use classify::{char_poly_q, exact_matrix, roots_of};
pub(crate) use kernel::sorted_svd;

use nalgebra::DMatrix;

use crate::matrix::{jet_partial, jet_values, Mat};
use crate::sampling::SampleSpec;
use crate::scalarfield::{parse_poly, Jet, ParseError, Poly, ScalarError, ScalarField, Sym, Symbolic};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("operator mixes symbolic and opaque entries")]
    MixedBackend,
    #[error("operation needs symbolic entries")]
    NotSymbolic,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("bad split sizes ({k}, {m}) for dimension {n}")]
    BadSplit { k: usize, m: usize, n: usize },
    #[error("rank is not locally constant near the point (singular values {0:?})")]
    RankNotConstant(Vec<f64>),
    #[error("eigenvalue clustering is ambiguous: distance {distance:.3e} lies between {lo:.3e} and {hi:.3e}")]
    AmbiguousClustering { distance: f64, lo: f64, hi: f64 },
}

/// An `n x n` field of endomorphisms; row index is the upper index.
#[derive(Clone, Debug)]
pub struct OpField {
    vars: Vec<String>,
    entries: Mat<ScalarField>,
}

impl OpField {
    pub fn new(vars: Vec<String>, entries: Mat<ScalarField>) -> Result<Self, TensorError> {
        if !entries.is_square() {
            return Err(TensorError::Dimension(format!(
                "operator must be square, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        for e in entries.iter() {
            if e.nvars() != vars.len() {
                return Err(TensorError::Dimension(format!(
                    "entry over {} variables, chart has {}",
                    e.nvars(),
                    vars.len()
                )));
            }
        }
        let symbolic = entries.iter().filter(|e| e.is_symbolic()).count();
        if symbolic != 0 && symbolic != entries.rows() * entries.cols() {
            return Err(TensorError::MixedBackend);
        }
        Ok(OpField { vars, entries })
    }

    pub fn from_sym<T: Symbolic + Into<ScalarField>>(vars: Vec<String>, m: &Mat<T>) -> Self {
        Self::new(vars, m.map(|e| e.clone().into())).expect("symbolic matrix is homogeneous")
    }

    /// Square polynomial matrix over the default names `x1..xn`.
    pub fn from_polys(m: &Mat<Poly>) -> Self {
        let nv = m.nvars();
        Self::from_sym(crate::scalarfield::default_vars(nv), m)
    }

    /// Parse a matrix of expression strings over `vars`.
    pub fn parse<S: AsRef<str>>(vars: Vec<String>, rows: &[Vec<S>]) -> Result<Self, ParseError> {
        let n = rows.len();
        let mut m = Vec::with_capacity(n);
        for row in rows {
            let mut r = Vec::with_capacity(row.len());
            for e in row {
                r.push(ScalarField::Poly(parse_poly(e.as_ref(), &vars)?));
            }
            m.push(r);
        }
        Ok(OpField {
            vars,
            entries: Mat::from_rows(m),
        })
    }

    /// Opaque operator from a jet-valued matrix rule.
    pub fn opaque<F>(vars: Vec<String>, dim: usize, rule: F) -> Self
    where
        F: Fn(&[Jet]) -> Mat<Jet> + Send + Sync + 'static,
    {
        let nv = vars.len();
        let rule = std::sync::Arc::new(rule);
        let entries = Mat::from_fn(dim, dim, |i, j| {
            let r = rule.clone();
            ScalarField::opaque(nv, move |x| r(x).get(i, j).clone())
        });
        OpField { vars, entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn entries(&self) -> &Mat<ScalarField> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        self.entries.get(i, j)
    }

    pub fn is_symbolic(&self) -> bool {
        self.entries.iter().all(ScalarField::is_symbolic)
    }

    pub fn to_sym(&self) -> Result<Mat<Sym>, TensorError> {
        self.entries.try_map(|e| e.as_sym().ok_or(TensorError::NotSymbolic))
    }

    /// Polynomial entries, if every entry is a polynomial.
    pub fn to_poly(&self) -> Option<Mat<Poly>> {
        self.entries.try_map(|e| e.as_poly().cloned().ok_or(())).ok()
    }

    pub fn jets_at(&self, point: &[f64]) -> Result<Mat<Jet>, TensorError> {
        Ok(self.entries.try_map(|e| e.eval_jet(point))?)
    }

    pub fn value_at(&self, point: &[f64]) -> Result<DMatrix<f64>, TensorError> {
        Ok(jet_values(&self.jets_at(point)?))
    }

    /// Entry strings in the document grammar (symbolic fields only).
    pub fn to_strings(&self) -> Result<Vec<Vec<String>>, TensorError> {
        let m = self.to_sym()?;
        Ok((0..m.rows())
            .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_string_with(&self.vars)).collect())
            .collect())
    }

    fn check_chart(&self) -> Result<(), TensorError> {
        if self.dim() != self.nvars() {
            return Err(TensorError::Dimension(format!(
                "operator dimension {} differs from chart dimension {}",
                self.dim(),
                self.nvars()
            )));
        }
        Ok(())
    }
}

/// Components `T^i_{jk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone> Tensor3<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &T {
        &self.data[(i * self.n + j) * self.n + k]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor3<U> {
        Tensor3 {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn indexed(&self) -> impl Iterator<Item = (usize, usize, usize, &T)> {
        let n = self.n;
        self.data
            .iter()
            .enumerate()
            .map(move |(p, v)| (p / (n * n), (p / n) % n, p % n, v))
    }
}

impl<T: Symbolic> Tensor3<T> {
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, c: &crate::scalarfield::Rational) -> Self {
        self.map(|a| a.scale(c))
    }

    /// Verdict for "identically zero", naming the first nonzero component.
    pub fn zero_verdict(&self, name: &str, vars: &[String]) -> Verdict {
        match self.indexed().find(|(_, _, _, v)| !v.is_zero()) {
            None => Verdict::zero(),
            Some((i, j, k, v)) => Verdict::symbolic(
                format!("{name}^{}_{}{}", i + 1, j + 1, k + 1),
                v.to_string_with(vars),
            ),
        }
    }
}

impl Tensor3<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// Nijenhuis tensor of a symbolic matrix. `chart[l]` is the variable index
/// of the `l`-th coordinate direction, which lets a block act on a subset
/// of the variables.
pub fn nijenhuis_generic<T: Symbolic>(l: &Mat<T>, chart: &[usize]) -> Tensor3<T> {
    let n = l.rows();
    assert_eq!(chart.len(), n);
    let nv = l.nvars();
    let dl: Vec<Mat<T>> = chart.iter().map(|&v| l.diff(v)).collect();
    let mut comps = vec![T::zero(nv); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in (j + 1)..n {
                let mut acc = T::zero(nv);
                for m in 0..n {
                    let terms = [
                        (l.get(m, j), dl[m].get(i, k), false),
                        (l.get(m, k), dl[m].get(i, j), true),
                        (l.get(i, m), dl[j].get(m, k), true),
                        (l.get(i, m), dl[k].get(m, j), false),
                    ];
                    for (a, b, negate) in terms {
                        if a.is_zero() || b.is_zero() {
                            continue;
                        }
                        let t = a.mul(b);
                        acc = if negate { acc.sub(&t) } else { acc.add(&t) };
                    }
                }
                comps[(i * n + k) * n + j] = acc.neg();
                comps[(i * n + j) * n + k] = acc;
            }
        }
    }
    Tensor3 { n, data: comps }
}

/// Nijenhuis tensor from values and first derivatives at a point;
/// `dl[m]` is the derivative of `l` along coordinate `m`.
pub fn nijenhuis_from_values(l: &DMatrix<f64>, dl: &[DMatrix<f64>]) -> Tensor3<f64> {
    let n = l.nrows();
    Tensor3::from_fn(n, |i, j, k| {
        let mut acc = 0.0;
        for m in 0..n {
            acc += l[(m, j)] * dl[m][(i, k)] - l[(m, k)] * dl[m][(i, j)]
                - l[(i, m)] * dl[j][(m, k)]
                + l[(i, m)] * dl[k][(m, j)];
        }
        acc
    })
}

/// Exact Nijenhuis tensor of a symbolic operator.
pub fn nijenhuis_tensor(l: &OpField) -> Result<Tensor3<Sym>, TensorError> {
    l.check_chart()?;
    if !l.is_symbolic() {
        return Err(TensorError::NotSymbolic);
    }
    let m = l.to_sym()?;
    let chart: Vec<usize> = (0..l.dim()).collect();
    Ok(nijenhuis_generic(&m, &chart))
}

/// Nijenhuis tensor evaluated at a point through jets (any backend).
pub fn nijenhuis_at(l: &OpField, point: &[f64]) -> Result<Tensor3<f64>, TensorError> {
    l.check_chart()?;
    let jets = l.jets_at(point)?;
    let dl: Vec<DMatrix<f64>> = (0..l.dim()).map(|m| jet_partial(&jets, m)).collect();
    Ok(nijenhuis_from_values(&jet_values(&jets), &dl))
}

#[derive(Clone, Debug)]
pub enum Mode {
    Symbolic,
    Numeric(SampleSpec),
}

/// Symbolic: exact zero test of every component. Numeric: largest
/// component over the samples against `spec.tol`.
pub fn is_nijenhuis(l: &OpField, mode: &Mode) -> Result<Verdict, TensorError> {
    match mode {
        Mode::Symbolic => Ok(nijenhuis_tensor(l)?.zero_verdict("N", l.vars())),
        Mode::Numeric(spec) => numeric_max(l.nvars(), spec, |p| Ok(nijenhuis_at(l, p)?.max_abs())),
    }
}

/// Largest value of `f` over the sample points of `spec`.
pub fn numeric_max(
    n: usize,
    spec: &SampleSpec,
    mut f: impl FnMut(&[f64]) -> Result<f64, TensorError>,
) -> Result<Verdict, TensorError> {
    let mut worst = 0.0;
    let mut at = None;
    for p in spec.points(n) {
        let r = f(&p)?;
        if r > worst || r.is_nan() {
            worst = if r.is_nan() { f64::INFINITY } else { r };
            at = Some(p);
        }
    }
    Ok(Verdict::numeric(worst, spec.tol, at))
}

fn check_pair(a: &OpField, b: &OpField) -> Result<(), TensorError> {
    if a.dim() != b.dim() || a.vars() != b.vars() {
        return Err(TensorError::Dimension("operators live on different charts".into()));
    }
    if a.is_symbolic() != b.is_symbolic() {
        return Err(TensorError::MixedBackend);
    }
    Ok(())
}

/// Frölicher–Nijenhuis bracket `N_{L1+L2} - N_{L1} - N_{L2}`.
pub fn fn_bracket(l1: &OpField, l2: &OpField) -> Result<Tensor3<Sym>, TensorError> {
    check_pair(l1, l2)?;
    let a = l1.to_sym()?;
    let b = l2.to_sym()?;
    Ok(fn_bracket_generic(&a, &b))
}

pub fn fn_bracket_generic<T: Symbolic>(a: &Mat<T>, b: &Mat<T>) -> Tensor3<T> {
    let chart: Vec<usize> = (0..a.rows()).collect();
    nijenhuis_generic(&a.add(b), &chart)
        .sub(&nijenhuis_generic(a, &chart))
        .sub(&nijenhuis_generic(b, &chart))
}

/// Exterior derivative of a 1-form: `(d w)_{jk} = d_j w_k - d_k w_j`.
pub fn d_one_form<T: Symbolic>(w: &[T]) -> Mat<T> {
    let n = w.len();
    Mat::from_fn(n, n, |j, k| w[k].diff(j).sub(&w[j].diff(k)))
}

/// The 2-form `N_L` assigns to the 1-form `alpha`, built from exterior
/// derivatives only: `d(L*^2 a) + da(L.,L.) - d(L* a)(L.,.) - d(L* a)(.,L.)`.
///
/// With `(da)(u, v) = u^j v^k (d_j a_k - d_k a_j)` this equals
/// `-alpha_i N^i_{jk}`, i.e. the negated [`contract_form`].
pub fn nijenhuis_on_form_generic<T: Symbolic>(l: &Mat<T>, alpha: &[T]) -> Mat<T> {
    let lt = l.transpose();
    let la = lt.mul_vec(alpha);
    let lla = lt.mul_vec(&la);
    let w = d_one_form(alpha);
    let u = d_one_form(&la);
    let v = d_one_form(&lla);
    v.add(&lt.mul(&w).mul(l)).sub(&lt.mul(&u)).sub(&u.mul(l))
}

pub fn nijenhuis_on_form(l: &OpField, alpha: &[Sym]) -> Result<Mat<Sym>, TensorError> {
    l.check_chart()?;
    if alpha.len() != l.dim() {
        return Err(TensorError::Dimension("1-form length differs from dimension".into()));
    }
    Ok(nijenhuis_on_form_generic(&l.to_sym()?, alpha))
}

/// `alpha_i T^i_{jk}` as a matrix in `(j, k)`.
pub fn contract_form<T: Symbolic>(t: &Tensor3<T>, alpha: &[T]) -> Mat<T> {
    let n = t.dim();
    let nv = alpha.first().map(T::nvars).unwrap_or(0);
    Mat::from_fn(n, n, |j, k| {
        let mut acc = T::zero(nv);
        for (i, a) in alpha.iter().enumerate() {
            acc = acc.add(&a.mul(t.get(i, j, k)));
        }
        acc
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientVerdict {
    pub block_triangular: bool,
    /// `None` when an earlier condition already failed.
    pub lower_block_x_independent: Option<bool>,
    pub lower_block_nijenhuis: Option<bool>,
}

impl QuotientVerdict {
    pub fn pass(&self) -> bool {
        self.block_triangular
            && self.lower_block_x_independent == Some(true)
            && self.lower_block_nijenhuis == Some(true)
    }
}

/// Checks that, in a chart split as `(x_1..x_k, y_1..y_m)`, the lower-left
/// block vanishes, the lower-right block does not depend on `x`, and that
/// block is Nijenhuis in `y`.
pub fn quotient_wellposed_check(l: &OpField, k: usize, m: usize) -> Result<QuotientVerdict, TensorError> {
    let n = l.dim();
    if k + m != n || k == 0 || m == 0 {
        return Err(TensorError::BadSplit { k, m, n });
    }
    l.check_chart()?;
    let s = l.to_sym()?;
    let block_triangular = (k..n).all(|i| (0..k).all(|j| s.get(i, j).is_zero()));
    if !block_triangular {
        return Ok(QuotientVerdict {
            block_triangular,
            lower_block_x_independent: None,
            lower_block_nijenhuis: None,
        });
    }
    let l2 = s.submatrix(k, k, m, m);
    let indep = (0..k).all(|a| l2.diff(a).is_zero());
    if !indep {
        return Ok(QuotientVerdict {
            block_triangular,
            lower_block_x_independent: Some(false),
            lower_block_nijenhuis: None,
        });
    }
    let chart: Vec<usize> = (k..n).collect();
    let nij = nijenhuis_generic(&l2, &chart).is_zero();
    Ok(QuotientVerdict {
        block_triangular,
        lower_block_x_independent: Some(true),
        lower_block_nijenhuis: Some(nij),
    })
}
