//! Characteristic-polynomial machinery: the coefficients `sigma_k` of
//! `det(t - L) = t^n + sigma_1 t^(n-1) + ... + sigma_n`, the identities
//! they satisfy for Nijenhuis operators, and reconstruction of `L` from
//! functionally independent coefficients.

use crate::matrix::Mat;
use crate::sampling::SampleSpec;
use crate::scalarfield::{rat, Jet, Poly, ScalarField, Sym, Symbolic};
use crate::tensorcore::{numeric_max, Mode, OpField, TensorError};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("the Jacobian of the coefficients has identically zero determinant")]
    SingularJacobian,
    #[error("not an eigenvalue: det(lambda - L) = {0}")]
    NotEigenvalue(String),
    #[error("coefficient list is empty or blocks are malformed")]
    BadSigma,
}

/// Coefficients `sigma_1..sigma_n` and the adjugate of `a`, by the
/// Faddeev–LeVerrier recurrence (only divisions by integers).
pub fn faddeev_leverrier<T: Symbolic>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.rows();
    let nv = a.nvars();
    let id = Mat::<T>::identity(n, nv);
    let mut m = id.clone();
    let mut sigmas = Vec::with_capacity(n);
    for k in 1..=n {
        if k > 1 {
            m = a.mul(&m).add(&id.scale_by(&sigmas[k - 2]));
        }
        let s = a.mul(&m).trace().scale(&rat(-1)).scale(&rat(k as i64).recip());
        sigmas.push(s);
    }
    // adj(A) = (-1)^(n+1) M_n
    let adj = if n % 2 == 1 { m } else { m.neg() };
    (sigmas, adj)
}

/// Determinant from the coefficients: `det A = (-1)^n sigma_n`.
pub fn det_from_sigmas<T: Symbolic>(sigmas: &[T], nvars: usize) -> T {
    match sigmas.last() {
        None => T::one(nvars),
        Some(s) if sigmas.len().is_multiple_of(2) => s.clone(),
        Some(s) => s.neg(),
    }
}

pub fn determinant<T: Symbolic>(a: &Mat<T>) -> T {
    let (s, _) = faddeev_leverrier(a);
    det_from_sigmas(&s, a.nvars())
}

/// Coefficients evaluated in jet arithmetic.
pub fn sigma_jets(a: &Mat<Jet>) -> Vec<Jet> {
    let n = a.rows();
    let nv = if n > 0 { a.get(0, 0).nvars() } else { 0 };
    let id = Mat::from_fn(n, n, |i, j| Jet::constant(if i == j { 1.0 } else { 0.0 }, nv));
    let mut m = id.clone();
    let mut sigmas: Vec<Jet> = Vec::with_capacity(n);
    for k in 1..=n {
        if k > 1 {
            let am = crate::matrix::jet_mul(a, &m);
            let s = sigmas[k - 2].clone();
            m = Mat::from_fn(n, n, |i, j| am.get(i, j) + &(id.get(i, j) * &s));
        }
        let am = crate::matrix::jet_mul(a, &m);
        let mut tr = Jet::constant(0.0, nv);
        for i in 0..n {
            tr = tr + am.get(i, i);
        }
        sigmas.push(tr.scale(-1.0 / k as f64));
    }
    sigmas
}

/// Exact characteristic coefficients of a symbolic operator.
pub fn char_poly(l: &OpField) -> Result<Vec<Sym>, SpectralError> {
    Ok(faddeev_leverrier(&l.to_sym()?).0)
}

/// `S_chi` (first column `-sigma_i`, superdiagonal ones) and the Jacobian
/// `J_ij = d sigma_i / d x_j`.
pub fn companion_data<T: Symbolic>(sigmas: &[T], nvars: usize) -> (Mat<T>, Mat<T>) {
    let n = sigmas.len();
    let s = Mat::from_fn(n, n, |i, j| {
        if j == 0 {
            sigmas[i].neg()
        } else if j == i + 1 {
            T::one(nvars)
        } else {
            T::zero(nvars)
        }
    });
    let j = Mat::from_fn(n, nvars, |i, k| sigmas[i].diff(k));
    (s, j)
}

fn covector_verdict<T: Symbolic>(r: &[T], label: &str, vars: &[String]) -> Verdict {
    match r.iter().position(|x| !x.is_zero()) {
        None => Verdict::zero(),
        Some(i) => Verdict::symbolic(format!("{label}[{}]", i + 1), r[i].to_string_with(vars)),
    }
}

/// For `k = 2..=kmax`: `d tr L^k - k (L^T)^(k-1) d tr L`, identically.
pub fn verify_trace_identities(l: &OpField, kmax: u32) -> Result<Vec<(u32, Verdict)>, SpectralError> {
    let m = l.to_sym()?;
    let n = m.rows();
    let nv = l.nvars();
    let dtr = |x: &Sym| (0..nv).map(|v| x.diff(v)).collect::<Vec<Sym>>();
    let d1 = dtr(&m.trace());
    let lt = m.transpose();
    let mut lk = m.clone();
    let mut ltp = Mat::<Sym>::identity(n, nv);
    let mut out = Vec::new();
    for k in 2..=kmax {
        lk = lk.mul(&m);
        ltp = ltp.mul(&lt);
        let lhs = dtr(&lk.trace());
        let rhs = ltp.mul_vec(&d1);
        let res: Vec<Sym> = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| a.sub(&b.scale(&rat(k as i64))))
            .collect();
        out.push((k, covector_verdict(&res, &format!("k={k}"), l.vars())));
    }
    Ok(out)
}

/// `J L - S_chi J`, identically.
pub fn verify_char_flow(l: &OpField) -> Result<Verdict, SpectralError> {
    let m = l.to_sym()?;
    let (sig, _) = faddeev_leverrier(&m);
    Ok(char_flow_residual(&m, &sig, l.vars()))
}

fn char_flow_residual(m: &Mat<Sym>, sig: &[Sym], vars: &[String]) -> Verdict {
    let (s, j) = companion_data(sig, m.nvars());
    let r = j.mul(m).sub(&s.mul(&j));
    match r.first_nonzero() {
        None => Verdict::zero(),
        Some((a, b, v)) => Verdict::symbolic(format!("(JL - SJ)[{},{}]", a + 1, b + 1), v.to_string_with(vars)),
    }
}

/// Checks that a candidate `L` has the given coefficients and satisfies
/// `J L = S_chi J`, without inverting `J`.
pub fn verify_reconstruction(sigmas: &[Sym], l: &OpField) -> Result<Verdict, SpectralError> {
    let m = l.to_sym()?;
    let (own, _) = faddeev_leverrier(&m);
    for (i, (a, b)) in own.iter().zip(sigmas).enumerate() {
        let d = a.sub(b);
        if !d.is_zero() {
            return Ok(Verdict::symbolic(format!("sigma_{}", i + 1), d.to_string_with(l.vars())));
        }
    }
    Ok(char_flow_residual(&m, sigmas, l.vars()))
}

/// `L = adj(J) S_chi J / det J` with exact rational-function entries.
pub fn reconstruct(sigmas: &[Sym], vars: Vec<String>) -> Result<OpField, SpectralError> {
    let chart: Vec<usize> = (0..vars.len()).collect();
    if sigmas.len() != vars.len() {
        return Err(SpectralError::BadSigma);
    }
    let block = reconstruct_block(sigmas, &chart, vars.len())?;
    Ok(OpField::from_sym(vars, &block))
}

/// Block-diagonal reconstruction; block `b` uses the next `len(b)`
/// variables of the chart.
pub fn reconstruct_blocks(blocks: &[Vec<Sym>], vars: Vec<String>) -> Result<OpField, SpectralError> {
    let nv = vars.len();
    let total: usize = blocks.iter().map(Vec::len).sum();
    if total != nv || blocks.iter().any(Vec::is_empty) {
        return Err(SpectralError::BadSigma);
    }
    let mut offset = 0;
    let mut mats = Vec::new();
    for b in blocks {
        let chart: Vec<usize> = (offset..offset + b.len()).collect();
        mats.push(reconstruct_block(b, &chart, nv)?);
        offset += b.len();
    }
    Ok(OpField::from_sym(vars, &Mat::block_diag(&mats, nv)))
}

fn reconstruct_block(sigmas: &[Sym], chart: &[usize], nvars: usize) -> Result<Mat<Sym>, SpectralError> {
    let n = sigmas.len();
    if n == 0 {
        return Err(SpectralError::BadSigma);
    }
    let (s, _) = companion_data(sigmas, nvars);
    let j = Mat::from_fn(n, n, |i, k| sigmas[i].diff(chart[k]));
    let (jsig, adj) = faddeev_leverrier(&j);
    let det = det_from_sigmas(&jsig, nvars);
    if det.is_zero() {
        return Err(SpectralError::SingularJacobian);
    }
    let num = adj.mul(&s).mul(&j);
    num.try_map(|e| e.div(&det).map_err(|_| SpectralError::SingularJacobian))
}

/// Checks `(L^T - lambda) d lambda = 0` after confirming that `lambda` is an
/// eigenvalue.
pub fn eigen_gradient_check(l: &OpField, lambda: &ScalarField, mode: &Mode) -> Result<Verdict, SpectralError> {
    let n = l.dim();
    let nv = l.nvars();
    match mode {
        Mode::Symbolic => {
            let m = l.to_sym()?;
            let lam = lambda.as_sym().ok_or(TensorError::NotSymbolic)?;
            let (sig, _) = faddeev_leverrier(&m);
            let chi = char_value(&sig, &lam, nv);
            if !chi.is_zero() {
                return Err(SpectralError::NotEigenvalue(chi.to_string_with(l.vars())));
            }
            let dl: Vec<Sym> = (0..nv).map(|v| lam.diff(v)).collect();
            let shifted = m.transpose().sub(&Mat::<Sym>::identity(n, nv).scale_by(&lam));
            Ok(covector_verdict(&shifted.mul_vec(&dl), "(L^T - lambda) d lambda", l.vars()))
        }
        Mode::Numeric(spec) => eigen_gradient_numeric(l, lambda, spec),
    }
}

fn char_value<T: Symbolic>(sig: &[T], x: &T, nv: usize) -> T {
    let mut acc = T::one(nv);
    for s in sig {
        acc = acc.mul(x).add(s);
    }
    acc
}

fn eigen_gradient_numeric(l: &OpField, lambda: &ScalarField, spec: &SampleSpec) -> Result<Verdict, SpectralError> {
    let n = l.dim();
    let mut not_eigen: Option<f64> = None;
    let v = numeric_max(l.nvars(), spec, |p| {
        let lj = l.jets_at(p)?;
        let lam = lambda.eval_jet(p)?;
        let sig = sigma_jets(&lj);
        let mut chi = 1.0;
        for s in &sig {
            chi = chi * lam.value + s.value;
        }
        let scale = crate::matrix::max_abs(&crate::matrix::jet_values(&lj)).max(1.0);
        if chi.abs() > spec.tol.sqrt() * scale.powi(n as i32) {
            not_eigen = Some(chi);
        }
        let mut worst = 0.0f64;
        for i in 0..l.nvars().min(n) {
            let mut acc = -lam.value * lam.partials[i];
            for k in 0..n {
                acc += lj.get(k, i).value * lam.partials[k];
            }
            worst = worst.max(acc.abs());
        }
        Ok(worst)
    })?;
    if let Some(c) = not_eigen {
        return Err(SpectralError::NotEigenvalue(format!("{c:e}")));
    }
    Ok(v)
}

/// Polynomial coefficients convenience: `sigma_i = -x_i`.
pub fn companion_sigmas(n: usize) -> Vec<Sym> {
    (0..n).map(|i| Sym::Poly(Poly::var(n, i).neg())).collect()
}

/// The rational-function entries of a reconstructed operator, if any entry
/// is a genuine quotient.
pub fn has_quotients(m: &Mat<Sym>) -> bool {
    m.iter().any(|e| matches!(e, Sym::Rat(r) if r.to_poly().is_none()))
}
