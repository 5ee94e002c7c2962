//! Local kernel frames and the `L^2 [u, v] = 0` check.

use nalgebra::{DMatrix, DVector};

use super::{OpField, TensorError};
use crate::matrix::{jet_const, jet_inverse, jet_mul, jet_values, Mat};
use crate::scalarfield::Jet;

const ZERO_FLOOR: f64 = 1e-10;
const GAP: f64 = 1e6;

/// Rank from singular values: values at most `1e-10 * scale` count as zero
/// and every retained value must exceed the zero floor by the gap factor
/// `1e6`. Anything in between is reported rather than guessed.
pub fn numeric_rank(svals: &[f64]) -> Result<usize, TensorError> {
    let smax = svals.iter().fold(0.0f64, |a, &b| a.max(b));
    let scale = smax.max(1.0);
    let floor = ZERO_FLOOR * scale;
    let r = svals.iter().filter(|&&s| s > floor).count();
    if svals.iter().any(|&s| s > floor && s < floor * GAP) {
        return Err(TensorError::RankNotConstant(svals.to_vec()));
    }
    Ok(r)
}

/// Singular values (descending) and matching right singular vectors.
pub(crate) fn sorted_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.ncols();
    // pad to square so the SVD returns a full right basis
    let rows = a.nrows().max(n);
    let mut sq = DMatrix::zeros(rows, n);
    sq.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("right vectors requested");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let s = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(n, n, |r, c| vt[(idx[c], r)]);
    (s, v)
}

/// A frame of `Ker L` near `point`, as vector fields with first-order jets.
///
/// With `K0` a kernel basis and `W` a complement at the point, the frame is
/// `K = K0 + W D` with `D = -((LW)^T LW)^{-1} (LW)^T L K0`, which keeps
/// `L K = 0` wherever the rank is constant.
pub fn kernel_frame(l: &OpField, point: &[f64]) -> Result<Vec<Vec<Jet>>, TensorError> {
    let n = l.dim();
    let nv = l.nvars();
    let lj = l.jets_at(point)?;
    let a = jet_values(&lj);
    let (s, v) = sorted_svd(&a);
    let r = numeric_rank(&s)?;
    if r == n {
        return Ok(Vec::new());
    }
    let k0 = v.columns(r, n - r).into_owned();
    let frame_jets = if r == 0 {
        jet_const(&k0, nv)
    } else {
        let w = v.columns(0, r).into_owned();
        let lw = jet_mul(&lj, &jet_const(&w, nv));
        let lwt = lw.transpose();
        let gram = jet_mul(&lwt, &lw);
        let ginv = jet_inverse(&gram, 1e-14).ok_or_else(|| TensorError::RankNotConstant(s.clone()))?;
        let lk0 = jet_mul(&lj, &jet_const(&k0, nv));
        let d = jet_mul(&jet_mul(&ginv, &lwt), &lk0).map(|x| -x.clone());
        let wd = jet_mul(&jet_const(&w, nv), &d);
        let k0j = jet_const(&k0, nv);
        Mat::from_fn(n, n - r, |i, j| k0j.get(i, j) + wd.get(i, j))
    };
    // first-order constancy of the rank: L K must vanish with its derivatives
    let lk = jet_mul(&lj, &frame_jets);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let drift = lk
        .iter()
        .flat_map(|x| x.partials.iter().chain(std::iter::once(&x.value)))
        .fold(0.0f64, |acc, d| acc.max(d.abs()));
    if drift > 1e-8 * scale {
        return Err(TensorError::RankNotConstant(s));
    }
    Ok((0..n - r)
        .map(|c| (0..n).map(|i| frame_jets.get(i, c).clone()).collect())
        .collect())
}

/// Lie bracket of two vector fields given by first-order jets, at the base point.
pub fn lie_bracket(u: &[Jet], v: &[Jet]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        (0..n)
            .map(|j| u[j].value * v[i].partials[j] - v[j].value * u[i].partials[j])
            .sum()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelVerdict {
    pub kernel_dim: usize,
    /// Largest `|L [u, v]|`: nonzero means `Ker L` is not involutive.
    pub bracket_in_kernel: f64,
    /// Largest `|L^2 [u, v]|`.
    pub residual: f64,
    pub pass: bool,
}

/// Builds a local kernel frame and checks `L^2 [u, v] = 0` for all pairs.
pub fn kernel_bracket_check(l: &OpField, point: &[f64], tol: f64) -> Result<KernelVerdict, TensorError> {
    let frame = kernel_frame(l, point)?;
    let a = l.value_at(point)?;
    let a2 = &a * &a;
    let mut in_kernel = 0.0f64;
    let mut residual = 0.0f64;
    for p in 0..frame.len() {
        for q in (p + 1)..frame.len() {
            let b = lie_bracket(&frame[p], &frame[q]);
            in_kernel = in_kernel.max((&a * &b).amax());
            residual = residual.max((&a2 * &b).amax());
        }
    }
    Ok(KernelVerdict {
        kernel_dim: frame.len(),
        bracket_in_kernel: in_kernel,
        residual,
        pass: residual < tol,
    })
}
