//! Matrix functions on a clustered spectrum, spectral projectors from
//! coprime factorisations, the canonical complex structure, and pointwise
//! integrability and splitting checks.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cluster::cluster_values;
use crate::matrix::max_abs;
use crate::sampling::SampleSpec;
use crate::scalarfield::{parse_poly, Jet, ParseError, Poly, ScalarField};
use crate::tensorcore::{
    char_poly_q, exact_matrix, lie_bracket, nijenhuis_from_values, numeric_rank, roots_of, sorted_svd, OpField,
    TensorError,
};
use crate::univariate::{FPoly, QPoly};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("cluster at {value} needs {needed} derivative values, got {got}")]
    MissingDerivatives { value: Complex64, needed: usize, got: usize },
    #[error("function data is not conjugate-symmetric at {0}")]
    NotConjugateSymmetric(Complex64),
    #[error("factors are not coprime")]
    NotCoprime,
    #[error("Bezout residual {0:.3e} exceeds 1e-10")]
    BezoutResidual(f64),
    #[error("factorisation does not match the characteristic polynomial (residual {0:.3e})")]
    FactorMismatch(f64),
    #[error("real eigenvalue {0} present")]
    RealEigenvalue(f64),
    #[error("frame rank is not locally constant (singular values {0:?})")]
    RankCollapse(Vec<f64>),
    #[error("bad factor: {0}")]
    BadFactor(String),
    #[error("at sample {point:?}: {source}")]
    AtSample { point: Vec<f64>, source: Box<SplitError> },
}

/// Eigenvalue clusters with algebraic multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumClusters {
    pub clusters: Vec<(Complex64, usize)>,
    /// Smallest distance between cluster representatives (infinite for one cluster).
    pub gap: f64,
}

impl SpectrumClusters {
    pub fn dim(&self) -> usize {
        self.clusters.iter().map(|c| c.1).sum()
    }

    /// `prod (t - z)^m` over the selected clusters, as a real polynomial.
    /// Selections must be closed under conjugation.
    pub fn factor(&self, pick: impl Fn(Complex64) -> bool) -> Result<FPoly, SplitError> {
        let mut p = vec![Complex64::new(1.0, 0.0)];
        for &(z, m) in &self.clusters {
            if !pick(z) {
                continue;
            }
            if z.im != 0.0 && !pick(z.conj()) {
                return Err(SplitError::NotConjugateSymmetric(z));
            }
            for _ in 0..m {
                let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
                for (k, c) in p.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * z;
                }
                p = next;
            }
        }
        Ok(FPoly(p.iter().map(|c| c.re).collect()))
    }
}

fn check_finite(a: &DMatrix<f64>) -> Result<(), SplitError> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SplitError::NonFinite)
    }
}

/// Groups eigenvalues closer than `tol * scale`; distinct groups are at least
/// `10 * tol * scale` apart, where `scale = max(1, spectral radius)`.
/// Multiplicities come from the squarefree decomposition of the exact
/// characteristic polynomial of the (dyadic) matrix entries.
pub fn cluster_spectrum(a: &DMatrix<f64>, tol: f64) -> Result<SpectrumClusters, SplitError> {
    check_finite(a)?;
    let roots = roots_of(&exact_matrix(a));
    let scale = roots.iter().map(|r| r.value.norm()).fold(1.0, f64::max);
    let items: Vec<(Complex64, usize)> = roots.iter().map(|r| (r.value, r.multiplicity)).collect();
    let groups = cluster_values(&items, tol, scale)?;
    let mut clusters: Vec<(Complex64, usize)> = groups.iter().map(|g| (g.value, g.multiplicity)).collect();
    // make conjugate partners exact conjugates
    for i in 0..clusters.len() {
        let z = clusters[i].0;
        if z.im > 0.0 {
            let partner = (0..clusters.len())
                .filter(|&j| clusters[j].0.im < 0.0)
                .min_by(|&p, &q| {
                    let dp = (clusters[p].0 - z.conj()).norm();
                    let dq = (clusters[q].0 - z.conj()).norm();
                    dp.partial_cmp(&dq).unwrap()
                });
            if let Some(j) = partner {
                clusters[j].0 = z.conj();
            }
        }
    }
    let mut gap = f64::INFINITY;
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            gap = gap.min((clusters[i].0 - clusters[j].0).norm());
        }
    }
    Ok(SpectrumClusters { clusters, gap })
}

/// Derivative data `f(z), f'(z), ..., f^(m-1)(z)` at a cluster value.
pub type Oracle<'a> = &'a dyn Fn(Complex64, usize) -> Vec<Complex64>;

fn complexify(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

/// `f(A)` as the Hermite interpolation polynomial of `f` on the clusters
/// evaluated at `A` (Newton form with confluent divided differences).
pub fn matrix_function(a: &DMatrix<f64>, sc: &SpectrumClusters, f: Oracle) -> Result<DMatrix<f64>, SplitError> {
    check_finite(a)?;
    let n = a.nrows();
    if sc.dim() != n {
        return Err(TensorError::Dimension(format!("clusters cover {} of {} eigenvalues", sc.dim(), n)).into());
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let data: Vec<Vec<Complex64>> = sc.clusters.iter().map(|&(z, m)| f(z, m)).collect();
    for (&(z, m), d) in sc.clusters.iter().zip(&data) {
        if d.len() < m {
            return Err(SplitError::MissingDerivatives {
                value: z,
                needed: m,
                got: d.len(),
            });
        }
    }
    for (i, &(z, m)) in sc.clusters.iter().enumerate() {
        if z.im == 0.0 {
            if data[i][..m].iter().any(|v| v.im.abs() > 1e-12 * v.norm().max(1.0)) {
                return Err(SplitError::NotConjugateSymmetric(z));
            }
            continue;
        }
        let j = sc
            .clusters
            .iter()
            .position(|&(w, mw)| w == z.conj() && mw == m)
            .ok_or(SplitError::NotConjugateSymmetric(z))?;
        for k in 0..m {
            let (u, v) = (data[i][k], data[j][k].conj());
            if (u - v).norm() > 1e-12 * u.norm().max(1.0) {
                return Err(SplitError::NotConjugateSymmetric(z));
            }
        }
    }

    let mut node = Vec::with_capacity(n);
    for (c, &(_, m)) in sc.clusters.iter().enumerate() {
        node.extend(std::iter::repeat_n(c, m));
    }
    let z = |i: usize| sc.clusters[node[i]].0;
    let mut coef: Vec<Complex64> = (0..n).map(|i| data[node[i]][0]).collect();
    let mut fact = 1.0;
    for k in 1..n {
        fact *= k as f64;
        for i in (k..n).rev() {
            coef[i] = if node[i] == node[i - k] {
                data[node[i]][k] / fact
            } else {
                (coef[i] - coef[i - 1]) / (z(i) - z(i - k))
            };
        }
    }

    let ac = complexify(a);
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut res = &id * coef[n - 1];
    for k in (0..n.saturating_sub(1)).rev() {
        res = (&ac - &id * z(k)) * res + &id * coef[k];
    }
    Ok(res.map(|c| c.re))
}

/// Derivative oracle of a real polynomial with coefficients lowest first.
pub fn poly_oracle(c: Vec<f64>) -> impl Fn(Complex64, usize) -> Vec<Complex64> {
    move |z, m| {
        let mut p = FPoly(c.clone());
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            out.push(p.eval_c(z));
            p = FPoly(p.0.iter().enumerate().skip(1).map(|(i, x)| x * i as f64).collect());
        }
        out
    }
}

/// Derivative oracle of `exp`.
pub fn exp_oracle(z: Complex64, m: usize) -> Vec<Complex64> {
    vec![z.exp(); m]
}

/// A coprime pair `chi1 * chi2` with Bezout coefficients `a chi1 + b chi2 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub chi1: FPoly,
    pub chi2: FPoly,
    pub a: FPoly,
    pub b: FPoly,
}

fn monic_f(p: FPoly) -> Result<FPoly, SplitError> {
    let p = p.trim(0.0);
    match p.0.last() {
        Some(&l) if l != 0.0 => Ok(FPoly(p.0.iter().map(|c| c / l).collect())),
        _ => Err(SplitError::BadFactor("zero polynomial".into())),
    }
}

impl Factorization {
    /// Exact factors: Bezout coefficients by the extended Euclidean algorithm.
    pub fn from_exact(chi1: &QPoly, chi2: &QPoly) -> Result<Self, SplitError> {
        if chi1.is_zero() || chi2.is_zero() {
            return Err(SplitError::BadFactor("zero polynomial".into()));
        }
        let (chi1, chi2) = (chi1.monic(), chi2.monic());
        let (g, s, t) = chi1.ext_gcd(&chi2);
        if g.degree() > 0 {
            return Err(SplitError::NotCoprime);
        }
        Ok(Factorization {
            chi1: chi1.to_f64(),
            chi2: chi2.to_f64(),
            a: s.to_f64(),
            b: t.to_f64(),
        })
    }

    /// Floating factors: Bezout coefficients from the Sylvester system,
    /// accepted when `|a chi1 + b chi2 - 1| < 1e-10`.
    pub fn new(chi1: FPoly, chi2: FPoly) -> Result<Self, SplitError> {
        let (chi1, chi2) = (monic_f(chi1)?, monic_f(chi2)?);
        let (m, k) = (chi1.degree(), chi2.degree());
        let (a, b) = if k == 0 {
            (FPoly(vec![0.0]), FPoly(vec![1.0]))
        } else if m == 0 {
            (FPoly(vec![1.0]), FPoly(vec![0.0]))
        } else {
            let size = m + k;
            let mut s = DMatrix::zeros(size, size);
            for j in 0..k {
                for (r, c) in chi1.0.iter().enumerate() {
                    s[(r + j, j)] = *c;
                }
            }
            for j in 0..m {
                for (r, c) in chi2.0.iter().enumerate() {
                    s[(r + j, k + j)] = *c;
                }
            }
            let sv = s.clone().singular_values();
            let smax = sv.max();
            if sv.min() <= 1e-12 * smax {
                return Err(SplitError::NotCoprime);
            }
            let mut rhs = nalgebra::DVector::zeros(size);
            rhs[0] = 1.0;
            let x = s.lu().solve(&rhs).ok_or(SplitError::NotCoprime)?;
            (FPoly(x.rows(0, k).iter().copied().collect()), FPoly(x.rows(k, m).iter().copied().collect()))
        };
        let f = Factorization { chi1, chi2, a, b };
        let r = f.residual();
        if !(r < 1e-10) {
            return Err(SplitError::BezoutResidual(r));
        }
        Ok(f)
    }

    /// Splits off `chi1` from the characteristic polynomial of `a`; the
    /// remainder of the division must vanish to within `tol` (relative).
    pub fn split(a: &DMatrix<f64>, chi1: FPoly, tol: f64) -> Result<Self, SplitError> {
        check_finite(a)?;
        let chi = char_poly_q(&exact_matrix(a)).to_f64();
        let chi1 = monic_f(chi1)?;
        let (q, r) = chi.divrem(&chi1);
        let size = 1.0 + chi.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let rem = r.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if rem > tol * size {
            return Err(SplitError::FactorMismatch(rem));
        }
        Self::new(chi1, q)
    }

    /// Exact variant of [`Factorization::split`] for exact factors.
    pub fn split_exact(a: &DMatrix<f64>, chi1: &QPoly) -> Result<Self, SplitError> {
        check_finite(a)?;
        let chi = char_poly_q(&exact_matrix(a));
        let (q, r) = chi.divrem(&chi1.monic());
        if !r.is_zero() {
            let rem = r.to_f64().0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            return Err(SplitError::FactorMismatch(rem));
        }
        Self::from_exact(chi1, &q)
    }

    /// Largest coefficient of `a chi1 + b chi2 - 1`.
    pub fn residual(&self) -> f64 {
        let s = self.a.mul(&self.chi1).add(&self.b.mul(&self.chi2)).sub(&FPoly(vec![1.0]));
        s.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// The complementary projectors `P1 = b(A) chi2(A)` onto `Ker chi1(A)` and
/// `P2 = a(A) chi1(A)` onto `Ker chi2(A)`. The product `chi1 chi2` must
/// match the characteristic polynomial of `A` to within `tol` (relative).
pub fn spectral_projectors(
    a: &DMatrix<f64>,
    fact: &Factorization,
    tol: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), SplitError> {
    check_finite(a)?;
    if fact.chi1.degree() + fact.chi2.degree() != a.nrows() {
        return Err(SplitError::FactorMismatch(f64::INFINITY));
    }
    let chi = char_poly_q(&exact_matrix(a)).to_f64();
    let diff = chi.sub(&fact.chi1.mul(&fact.chi2));
    let size = 1.0 + chi.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mismatch = diff.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if mismatch > tol * size {
        return Err(SplitError::FactorMismatch(mismatch));
    }
    let p1 = fact.b.eval_matrix(a) * fact.chi2.eval_matrix(a);
    let p2 = fact.a.eval_matrix(a) * fact.chi1.eval_matrix(a);
    Ok((p1, p2))
}

pub fn spectral_projector(a: &DMatrix<f64>, fact: &Factorization, tol: f64) -> Result<DMatrix<f64>, SplitError> {
    Ok(spectral_projectors(a, fact, tol)?.0)
}

/// `J = f(A)` with `f = i` on the upper and `-i` on the lower half-plane.
pub fn complex_structure(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, SplitError> {
    let sc = cluster_spectrum(a, tol)?;
    if let Some(&(z, _)) = sc.clusters.iter().find(|c| c.0.im == 0.0) {
        return Err(SplitError::RealEigenvalue(z.re));
    }
    let f = |z: Complex64, m: usize| {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        v[0] = Complex64::new(0.0, z.im.signum());
        v
    };
    matrix_function(a, &sc, &f)
}

/// Projectors onto the generalised eigenspaces, split off one group at a
/// time in ascending order of real part. Conjugate pairs form one group.
#[derive(Clone, Debug)]
pub struct BlockSplit {
    /// Cluster representatives per group, in splitting order.
    pub order: Vec<Vec<Complex64>>,
    pub projectors: Vec<DMatrix<f64>>,
}

pub fn split_blocks(a: &DMatrix<f64>, tol: f64) -> Result<BlockSplit, SplitError> {
    let sc = cluster_spectrum(a, tol)?;
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for &(z, _) in &sc.clusters {
        if z.im < 0.0 {
            continue;
        }
        groups.push(if z.im > 0.0 { vec![z, z.conj()] } else { vec![z] });
    }
    groups.sort_by(|g, h| {
        (g[0].re, g[0].im.abs())
            .partial_cmp(&(h[0].re, h[0].im.abs()))
            .unwrap()
    });
    let n = a.nrows();
    let mut rest = DMatrix::identity(n, n);
    let mut projectors = Vec::with_capacity(groups.len());
    for (gi, g) in groups.iter().enumerate() {
        if gi + 1 == groups.len() {
            projectors.push(rest.clone());
            break;
        }
        let later: Vec<Complex64> = groups[gi + 1..].iter().flatten().copied().collect();
        let chi1 = sc.factor(|z| g.contains(&z))?;
        let chi2 = sc.factor(|z| later.contains(&z))?;
        let fact = Factorization::new(chi1, chi2)?;
        let p = fact.b.eval_matrix(a) * fact.chi2.eval_matrix(a) * &rest;
        rest -= &p;
        projectors.push(p);
    }
    Ok(BlockSplit {
        order: groups,
        projectors,
    })
}

/// A vector field as its components.
pub type VectorField = Vec<ScalarField>;

/// The selected columns of `l` as vector fields.
pub fn frame_from_columns(l: &OpField, cols: &[usize]) -> Vec<VectorField> {
    cols.iter()
        .map(|&c| (0..l.dim()).map(|i| l.entry(i, c).clone()).collect())
        .collect()
}

/// A frame of `Image l` near `point`: a maximal set of columns independent
/// at the point, chosen greedily from the left.
pub fn image_frame(l: &OpField, point: &[f64]) -> Result<Vec<VectorField>, SplitError> {
    let a = l.value_at(point)?;
    let (s, _) = sorted_svd(&a);
    let r = numeric_rank(&s).map_err(|_| SplitError::RankCollapse(s.clone()))?;
    let mut cols: Vec<usize> = Vec::new();
    for c in 0..a.ncols() {
        let mut trial = cols.clone();
        trial.push(c);
        let sub = a.select_columns(trial.iter());
        let (sv, _) = sorted_svd(&sub);
        if matches!(numeric_rank(&sv), Ok(k) if k == trial.len()) {
            cols = trial;
        }
        if cols.len() == r {
            break;
        }
    }
    Ok(frame_from_columns(l, &cols))
}

/// Checks that brackets of frame fields stay in the span of the frame at
/// `point`; the residual is the largest distance of a bracket from the span.
pub fn involutivity_check(frame: &[VectorField], point: &[f64], tol: f64) -> Result<Verdict, SplitError> {
    let jets = frame
        .iter()
        .map(|v| v.iter().map(|c| c.eval_jet(point)).collect::<Result<Vec<Jet>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(TensorError::from)?;
    involutivity_check_jets(&jets, point, tol)
}

/// [`involutivity_check`] for fields given by first-order jets at `point`.
pub fn involutivity_check_jets(frame: &[Vec<Jet>], point: &[f64], tol: f64) -> Result<Verdict, SplitError> {
    if frame.is_empty() {
        return Ok(Verdict::numeric(0.0, tol, Some(point.to_vec())));
    }
    let n = frame[0].len();
    let f = DMatrix::from_fn(n, frame.len(), |i, j| frame[j][i].value);
    let (s, _) = sorted_svd(&f);
    match numeric_rank(&s) {
        Ok(r) if r == frame.len() => {}
        _ => return Err(SplitError::RankCollapse(s)),
    }
    let u = column_basis(&f, frame.len());
    let mut worst = 0.0f64;
    for p in 0..frame.len() {
        for q in (p + 1)..frame.len() {
            let b = lie_bracket(&frame[p], &frame[q]);
            let off = &b - &u * (u.transpose() * &b);
            worst = worst.max(off.norm());
        }
    }
    Ok(Verdict::numeric(worst, tol, Some(point.to_vec())))
}

/// `chi1` as a polynomial in `t` whose coefficients are fields on the chart.
#[derive(Clone, Debug)]
pub struct FactorField {
    /// Coefficients of `t^0, t^1, ...`.
    pub coeffs: Vec<ScalarField>,
}

impl FactorField {
    /// Parses an expression in `t` and the chart variables, e.g. `t^2 - x1*t`.
    pub fn parse(text: &str, vars: &[String]) -> Result<Self, SplitError> {
        if vars.iter().any(|v| v == "t") {
            return Err(SplitError::BadFactor("chart variable `t` clashes with the factor variable".into()));
        }
        let mut all = vars.to_vec();
        all.push("t".into());
        let p = parse_poly(text, &all)?;
        let keep: Vec<usize> = (0..vars.len()).collect();
        let coeffs = p
            .coefficients_in(vars.len())
            .into_iter()
            .map(|c| ScalarField::Poly(c.restrict(&keep).expect("t removed")))
            .collect();
        Ok(FactorField { coeffs })
    }

    pub fn from_polys(coeffs: Vec<Poly>) -> Self {
        FactorField {
            coeffs: coeffs.into_iter().map(ScalarField::Poly).collect(),
        }
    }

    pub fn at(&self, x: &[f64]) -> Result<FPoly, SplitError> {
        let c = self
            .coeffs
            .iter()
            .map(|c| c.eval_jet(x).map(|j| j.value))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(TensorError::from)?;
        Ok(FPoly(c))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitVerdict {
    pub idempotent: Verdict,
    pub commutes: Verdict,
    /// Finite-difference Nijenhuis residual of the projector field.
    pub projector_nijenhuis: Verdict,
    /// Off-diagonal blocks of `L` in a frame adapted to `P1`.
    pub block_diagonal: Verdict,
    pub samples: usize,
}

impl SplitVerdict {
    pub fn pass(&self) -> bool {
        self.idempotent.pass && self.commutes.pass && self.projector_nijenhuis.pass && self.block_diagonal.pass
    }
}

fn projector_field(l: &OpField, fact: &FactorField, x: &[f64], tol: f64) -> Result<DMatrix<f64>, SplitError> {
    let a = l.value_at(x)?;
    let f = Factorization::split(&a, fact.at(x)?, tol)?;
    spectral_projector(&a, &f, tol)
}

/// `r` orthonormal vectors spanning the column space of `m`, by Gram-Schmidt
/// with largest-remainder pivoting. SVD left vectors of a near-rank-one 2x2
/// can come back rotated by the size of the small entries, which is enough to
/// spoil the block test.
fn column_basis(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut rest = m.clone();
    let mut out = DMatrix::zeros(n, r);
    for c in 0..r {
        let (best, _) = (0..rest.ncols())
            .map(|j| (j, rest.column(j).norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let v = rest.column(best).normalize();
        for j in 0..rest.ncols() {
            let proj = v.dot(&rest.column(j));
            let mut col = rest.column_mut(j);
            col.axpy(-proj, &v, 1.0);
        }
        out.set_column(c, &v);
    }
    out
}

/// Largest entry of the off-diagonal blocks of `T^-1 A T`, where `T` stacks
/// bases of `Image P` and `Image (Id - P)`.
fn off_block(a: &DMatrix<f64>, p: &DMatrix<f64>, k: usize) -> f64 {
    let n = a.nrows();
    let basis = |m: &DMatrix<f64>, r: usize| column_basis(m, r);
    let q = DMatrix::identity(n, n) - p;
    let mut t = DMatrix::zeros(n, n);
    t.columns_mut(0, k).copy_from(&basis(p, k));
    t.columns_mut(k, n - k).copy_from(&basis(&q, n - k));
    let Some(ti) = t.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let b = ti * a * t;
    let upper = b.view((0, k), (k, n - k)).amax();
    let lower = b.view((k, 0), (n - k, k)).amax();
    upper.max(lower)
}

/// Checks the splitting induced by `chi1` at `point` and at the sample
/// offsets of `spec` around it. Algebraic identities use `spec.tol`; the
/// Nijenhuis residual of the projector field uses central differences with
/// step `h` against `fd_tol`.
pub fn splitting_check(
    l: &OpField,
    point: &[f64],
    fact: &FactorField,
    spec: &SampleSpec,
    h: f64,
    fd_tol: f64,
) -> Result<SplitVerdict, SplitError> {
    let n = l.dim();
    if n != l.nvars() || point.len() != n {
        return Err(TensorError::Dimension(format!(
            "splitting needs a chart of dimension {n} and a point of that length"
        ))
        .into());
    }
    let mut xs = vec![point.to_vec()];
    for off in spec.points(n) {
        xs.push(point.iter().zip(&off).map(|(p, o)| p + o).collect());
    }
    let tol = spec.tol;
    let mut worst = [(0.0f64, None::<Vec<f64>>), (0.0, None), (0.0, None), (0.0, None)];
    for x in &xs {
        let run = || -> Result<[f64; 4], SplitError> {
            let a = l.value_at(x)?;
            let p = projector_field(l, fact, x, tol)?;
            let k = fact.at(x)?.trim(0.0).degree();
            let scale = max_abs(&p).max(1.0);
            let idem = max_abs(&(&p * &p - &p)) / (scale * scale);
            let comm = max_abs(&(&p * &a - &a * &p)) / (scale * max_abs(&a).max(1.0));
            let mut dp = Vec::with_capacity(n);
            for m in 0..n {
                let mut up = x.clone();
                let mut dn = x.clone();
                up[m] += h;
                dn[m] -= h;
                let d = (projector_field(l, fact, &up, tol)? - projector_field(l, fact, &dn, tol)?) / (2.0 * h);
                dp.push(d);
            }
            let nij = nijenhuis_from_values(&p, &dp).max_abs();
            let block = off_block(&a, &p, k) / max_abs(&a).max(1.0);
            Ok([idem, comm, nij, block])
        };
        let r = run().map_err(|e| SplitError::AtSample {
            point: x.clone(),
            source: Box::new(e),
        })?;
        for (w, v) in worst.iter_mut().zip(r) {
            if !(v <= w.0) {
                *w = (v, Some(x.clone()));
            }
        }
    }
    let [idem, comm, nij, block] = worst;
    Ok(SplitVerdict {
        idempotent: Verdict::numeric(idem.0, tol, idem.1),
        commutes: Verdict::numeric(comm.0, tol, comm.1),
        projector_nijenhuis: Verdict::numeric(nij.0, fd_tol, nij.1),
        block_diagonal: Verdict::numeric(block.0, tol, block.1),
        samples: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarfield::{default_vars, rat};

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        max_abs(&(a - b)) < tol
    }

    #[test]
    fn clusters_merge_and_refuse() {
        let sc = cluster_spectrum(&m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0 + 1e-12, 0.0], &[0.0, 0.0, 5.0]]), 1e-6).unwrap();
        assert_eq!(sc.clusters.len(), 2);
        assert_eq!(sc.clusters[0].1, 2);
        assert!((sc.clusters[1].0.re - 5.0).abs() < 1e-12);
        let amb = cluster_spectrum(&m(&[&[0.0, 0.0], &[0.0, 1e-7]]), 1e-6);
        assert!(matches!(amb, Err(SplitError::Tensor(TensorError::AmbiguousClustering { .. }))));
        let rot = cluster_spectrum(&m(&[&[1.0, -2.0], &[2.0, 1.0]]), 1e-6).unwrap();
        let vals: Vec<Complex64> = rot.clusters.iter().map(|c| c.0).collect();
        assert_eq!(vals.len(), 2);
        assert!(vals.iter().all(|z| (z.re - 1.0).abs() < 1e-12 && (z.im.abs() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn hermite_functions() {
        let a = m(&[&[0.3, 1.0, -0.2], &[0.5, -1.1, 0.7], &[0.0, 0.4, 2.0]]);
        let sc = cluster_spectrum(&a, 1e-6).unwrap();
        let sq = matrix_function(&a, &sc, &poly_oracle(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(close(&sq, &(&a * &a), 1e-12));

        let d = m(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let e = matrix_function(&d, &cluster_spectrum(&d, 1e-6).unwrap(), &exp_oracle).unwrap();
        assert!(close(&e, &m(&[&[1.0, 0.0], &[0.0, std::f64::consts::E]]), 1e-12));

        let nil = m(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let sc = cluster_spectrum(&nil, 1e-6).unwrap();
        assert_eq!(sc.clusters, vec![(Complex64::new(0.0, 0.0), 2)]);
        let e = matrix_function(&nil, &sc, &exp_oracle).unwrap();
        assert!(close(&e, &m(&[&[1.0, 0.0], &[1.0, 1.0]]), 1e-15));

        let short = |_: Complex64, _: usize| vec![Complex64::new(1.0, 0.0)];
        assert!(matches!(
            matrix_function(&nil, &sc, &short),
            Err(SplitError::MissingDerivatives { needed: 2, got: 1, .. })
        ));
    }

    #[test]
    fn projector_from_exact_bezout() {
        // J2(0) + (3), chi1 = t^2, chi2 = t - 3
        let a = m(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 3.0]]);
        let chi1 = QPoly::new(vec![rat(0), rat(0), rat(1)]);
        let f = Factorization::split_exact(&a, &chi1).unwrap();
        let p = spectral_projector(&a, &f, 1e-9).unwrap();
        assert!(close(&p, &m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]), 1e-15));

        let d = m(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let f = Factorization::split(&d, FPoly(vec![-1.0, 1.0]), 1e-9).unwrap();
        assert!(close(&spectral_projector(&d, &f, 1e-9).unwrap(), &m(&[&[1.0, 0.0], &[0.0, 0.0]]), 1e-14));
        assert!(matches!(
            Factorization::split(&d, FPoly(vec![-5.0, 1.0]), 1e-9),
            Err(SplitError::FactorMismatch(_))
        ));
    }

    #[test]
    fn complex_structures() {
        let j = complex_structure(&m(&[&[1.0, -2.0], &[2.0, 1.0]]), 1e-6).unwrap();
        assert!(close(&j, &m(&[&[0.0, -1.0], &[1.0, 0.0]]), 1e-12));
        let rot = m(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!(close(&complex_structure(&rot, 1e-6).unwrap(), &rot, 1e-12));
        assert!(matches!(
            complex_structure(&m(&[&[1.0, 0.0], &[0.0, 2.0]]), 1e-6),
            Err(SplitError::RealEigenvalue(_))
        ));
    }

    #[test]
    fn block_split_orders_by_real_part() {
        let a = m(&[
            &[3.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, -2.0, 0.0],
            &[0.0, 2.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
        ]);
        let s = split_blocks(&a, 1e-6).unwrap();
        let firsts: Vec<f64> = s.order.iter().map(|g| g[0].re).collect();
        assert_eq!(firsts.len(), 3);
        assert!((firsts[0] + 1.0).abs() < 1e-12 && (firsts[2] - 3.0).abs() < 1e-12);
        let total = s.projectors.iter().fold(DMatrix::zeros(4, 4), |acc, p| acc + p);
        assert!(close(&total, &DMatrix::identity(4, 4), 1e-12));
        assert!(close(&s.projectors[1], &m(&[&[0.0; 4], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0; 4]]), 1e-12));
    }

    #[test]
    fn involutivity_of_frames() {
        let vars = default_vars(4);
        let p = |s: &str| ScalarField::Poly(parse_poly(s, &vars).unwrap());
        let kernel = vec![
            vec![p("0"), p("1"), p("0"), p("0")],
            vec![p("0"), p("0"), p("1"), p("0")],
            vec![p("1 + x3"), p("0"), p("0"), p("1")],
        ];
        let v = involutivity_check(&kernel, &[0.0; 4], 1e-9).unwrap();
        assert!(!v.pass);
        assert!((v.magnitude() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let flat = vec![vec![p("1"), p("0"), p("0"), p("0")], vec![p("0"), p("1"), p("0"), p("0")]];
        let v = involutivity_check(&flat, &[0.3; 4], 1e-9).unwrap();
        assert!(v.pass && v.magnitude() == 0.0);

        let l = OpField::parse(default_vars(2), &[vec!["x1^2", "x1*x2"], vec!["x1*x2", "x2^2"]]).unwrap();
        let frame = image_frame(&l, &[1.0, 1.0]).unwrap();
        assert_eq!(frame.len(), 1);
        assert!(involutivity_check(&frame, &[1.0, 1.0], 1e-9).unwrap().pass);
    }

    #[test]
    fn splitting_of_direct_sums() {
        let vars = default_vars(3);
        let l = OpField::parse(
            vars.clone(),
            &[vec!["x1", "1", "0"], vec!["x2", "0", "0"], vec!["0", "0", "x3 + 10"]],
        )
        .unwrap();
        let fact = FactorField::parse("t^2 - x1*t - x2", &vars).unwrap();
        let spec = SampleSpec::default().with_count(10);
        let v = splitting_check(&l, &[0.0; 3], &fact, &spec, 1e-4, 1e-5).unwrap();
        assert!(v.pass(), "{v:?}");

        let vars = default_vars(2);
        let d = OpField::parse(vars.clone(), &[vec!["x1", "0"], vec!["0", "x2"]]).unwrap();
        let fact = FactorField::parse("t - x1", &vars).unwrap();
        let v = splitting_check(&d, &[0.0, 5.0], &fact, &spec, 1e-4, 1e-5).unwrap();
        assert!(v.pass());

        let dd = OpField::parse(vars.clone(), &[vec!["x1", "0"], vec!["0", "x1"]]).unwrap();
        let err = splitting_check(&dd, &[0.0, 0.0], &fact, &spec, 1e-4, 1e-5).unwrap_err();
        assert!(matches!(err, SplitError::AtSample { source, .. } if *source == SplitError::NotCoprime));
    }
}
