//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any fails. Built with `harness = false`.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nijenhuis::canon::{
    certify, gen_companion, gen_companion_sum, gen_complex_block, gen_complex_jordan, gen_diag_real,
    gen_jordan_nonconst, gen_nilpotent_jordan, Canonical,
};
use nijenhuis::geopn::{
    antidiagonal_metric, block_companion_operator, canonical_omega, companion_first_column, doubled_diagonal,
    geodesic_compat_check, geodesic_compat_check_with, levi_civita, phase_vars, pn_check, recursion_operator,
    twisted_form, TwoForm,
};
use nijenhuis::lsa::{
    assoc_lie, composition_residual, formal_linearize, l_lin, lsa_check, lsa_to_linear, pushforward_truncated, LSACube,
};
use nijenhuis::matrix::Mat;
use nijenhuis::sampling::SampleSpec;
use nijenhuis::scalarfield::{default_vars, parse_poly, rat, ratio, Poly, Rational, ScalarField, Sym, Symbolic};
use nijenhuis::spectral::{
    companion_sigmas, determinant, faddeev_leverrier, reconstruct, reconstruct_blocks, verify_char_flow,
    verify_trace_identities,
};
use nijenhuis::splitfun::{
    cluster_spectrum, complex_structure, involutivity_check, spectral_projectors, splitting_check,
    FactorField, Factorization,
};
use nijenhuis::tensorcore::{is_nijenhuis, kernel_bracket_check, Mode, OpField};
use nijenhuis::verdict::{Residual, Verdict};
use nijenhuis_cli::doc::OperatorDoc;
use nijenhuis_cli::run;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn poly(s: &str, n: usize) -> Poly {
    parse_poly(s, &default_vars(n)).unwrap()
}

fn is_exact_zero(v: &Verdict) -> bool {
    v.pass && v.residual == Residual::Zero
}

/// Random polynomial with `terms` monomials of total degree `1..=max_deg`
/// and small integer coefficients.
fn rand_poly(rng: &mut ChaCha8Rng, nv: usize, min_deg: u32, max_deg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero(nv);
    for _ in 0..terms {
        let deg = rng.gen_range(min_deg..=max_deg);
        let mut e = vec![0u32; nv];
        for _ in 0..deg {
            e[rng.gen_range(0..nv)] += 1;
        }
        let c = rng.gen_range(-3i64..=3);
        p = p.add(&Poly::monomial(nv, e, rat(c)));
    }
    p
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn sym_equal(a: &OpField, b: &OpField) -> bool {
    let (a, b) = (a.to_sym().unwrap(), b.to_sym().unwrap());
    a.rows() == b.rows() && a.sub(&b).is_zero()
}

#[allow(clippy::vec_init_then_push)]
fn generators() -> Vec<Canonical> {
    let mut out = Vec::new();
    // diagonal: each block eigenvalue uses only its own variables, degree <= 3
    out.push(gen_diag_real(&[(poly("x1^3 - 2*x1", 1), 1)]).unwrap());
    out.push(gen_diag_real(&[(poly("x1^2", 2), 1), (poly("x2^3 + x2", 2), 1)]).unwrap());
    out.push(gen_diag_real(&[(poly("x1 + x2^2", 3), 2), (poly("3*x3^3", 3), 1)]).unwrap());
    out.push(gen_diag_real(&[(poly("x1*x2*x3", 5), 3), (poly("x4^2 - x5^3", 5), 2)]).unwrap());
    out.push(gen_diag_real(&[(poly("x1^3", 5), 1), (poly("x2", 5), 1), (poly("2", 5), 1), (poly("x4*x4", 5), 1), (poly("x5^3", 5), 1)]).unwrap());
    // complex: real and imaginary parts of z, z^2, z^3 with z = x1 + i x2
    for (a, b) in [("x1", "x2"), ("x1^2 - x2^2", "2*x1*x2"), ("x1^3 - 3*x1*x2^2", "3*x1^2*x2 - x2^3")] {
        out.push(gen_complex_block(&poly(a, 2), &poly(b, 2)).unwrap());
    }
    for n in 1..=5 {
        out.push(gen_companion(n).unwrap());
    }
    for sizes in [vec![1, 1], vec![2, 1], vec![2, 2], vec![3, 2], vec![1, 1, 3], vec![1, 1, 1, 1, 1]] {
        out.push(gen_companion_sum(&sizes).unwrap());
    }
    for n in 2..=5 {
        out.push(gen_nilpotent_jordan(n).unwrap());
    }
    for n in 2..=5 {
        for l in ["x1", "x1^2 + 1", "x1^3 - x1"] {
            out.push(gen_jordan_nonconst(n, &poly(l, 1)).unwrap());
        }
    }
    // complex dimension 2 is real dimension 4
    for lam in [
        vec![(rat(0), rat(0)), (rat(1), rat(0))],
        vec![(rat(1), rat(2)), (rat(0), rat(1)), (ratio(1, 2), rat(0))],
        vec![(rat(0), rat(0)), (rat(0), rat(0)), (rat(0), rat(0)), (rat(1), rat(-1))],
    ] {
        out.push(gen_complex_jordan(2, &lam).unwrap());
    }
    out
}

fn criterion_1() -> Outcome {
    let gens = generators();
    for g in &gens {
        let v = is_nijenhuis(&g.op, &Mode::Symbolic).map_err(|e| e.to_string())?;
        ensure(is_exact_zero(&v), || format!("{} dim {}: {:?}", g.kind, g.op.dim(), v.residual))?;
        let cert = certify(g).map_err(|e| e.to_string())?;
        ensure(cert.pass(), || format!("{} certificate: {:?}", g.kind, cert.checks))?;
    }
    Ok(format!("{} generators, N identically zero", gens.len()))
}

fn criterion_2() -> Outcome {
    let gens = generators();
    for g in &gens {
        let n = g.op.dim() as u32;
        for (k, v) in verify_trace_identities(&g.op, n.max(2)).map_err(|e| e.to_string())? {
            ensure(is_exact_zero(&v), || format!("{} trace k={k}: {:?}", g.kind, v.residual))?;
        }
        let v = verify_char_flow(&g.op).map_err(|e| e.to_string())?;
        ensure(is_exact_zero(&v), || format!("{} char flow: {:?}", g.kind, v.residual))?;
    }
    let planted = OpField::parse(default_vars(2), &[vec!["0", "x1"], vec!["x2", "0"]]).unwrap();
    let traces = verify_trace_identities(&planted, 2).map_err(|e| e.to_string())?;
    let flow = verify_char_flow(&planted).map_err(|e| e.to_string())?;
    let failed: Vec<&Verdict> = traces.iter().map(|t| &t.1).chain([&flow]).filter(|v| !v.pass).collect();
    ensure(!failed.is_empty(), || "planted counterexample passed".into())?;
    for v in &failed {
        match &v.residual {
            Residual::Symbolic { expr, .. } if !expr.is_empty() && expr != "0" => {}
            r => return Err(format!("planted residual not printed: {r:?}")),
        }
    }
    Ok(format!("{} generators pass, planted fails {} identities", gens.len(), failed.len()))
}

fn criterion_3() -> Outcome {
    for n in 1..=5 {
        let vars = default_vars(n);
        let got = reconstruct(&companion_sigmas(n), vars).map_err(|e| e.to_string())?;
        let want = gen_companion(n).unwrap().op;
        ensure(sym_equal(&got, &want), || format!("companion n={n} differs"))?;
        // through the computed characteristic polynomial as well
        let (sig, _) = faddeev_leverrier(&want.to_sym().unwrap());
        let again = reconstruct(&sig, default_vars(n)).map_err(|e| e.to_string())?;
        ensure(sym_equal(&again, &want), || format!("companion n={n} via char poly differs"))?;
    }
    let doc = OperatorDoc::load(&data("two_block.toml")).map_err(|e| e.to_string())?;
    let vars = doc.variables().map_err(|e| e.to_string())?;
    let blocks: Vec<Vec<Sym>> = doc
        .sigma_blocks
        .as_ref()
        .ok_or("no sigma_blocks")?
        .iter()
        .map(|b| doc.polys("sigma_blocks", b).unwrap().into_iter().map(Sym::Poly).collect())
        .collect();
    let got = reconstruct_blocks(&blocks, vars).map_err(|e| e.to_string())?;
    let want = gen_companion_sum(&[2, 1]).unwrap().op;
    ensure(sym_equal(&got, &want), || format!("two-block document gave {:?}", got.to_strings()))?;
    let out = run(["nijenhuis", "reconstruct", &data("two_block.toml")]);
    ensure(out.code == 0, || format!("reconstruct command: {}", out.stdout))?;
    Ok("n = 1..5 exact, two-block document reproduced".into())
}

/// `T diag(p(u1), q(u2)) T^-1` with `u = T^-1 x`: Nijenhuis by a linear
/// change of chart.
fn conjugated_diagonal(rng: &mut ChaCha8Rng) -> Mat<Poly> {
    let t = [[rat(1), rat(rng.gen_range(-2..=2))], [rat(rng.gen_range(-2..=2)), rat(0)]];
    let mut t = t;
    t[1][1] = rat(1) + t[0][1].clone() * t[1][0].clone();
    // det t = 1
    let ti = [[t[1][1].clone(), -t[0][1].clone()], [-t[1][0].clone(), t[0][0].clone()]];
    let u: Vec<Poly> = (0..2)
        .map(|i| Poly::var(2, 0).scale(&ti[i][0]).add(&Poly::var(2, 1).scale(&ti[i][1])))
        .collect();
    let d: Vec<Poly> = (0..2)
        .map(|i| {
            let f = rand_poly(rng, 1, 1, 3, 2).add(&Poly::var(1, 0));
            f.compose(&[u[i].clone()])
        })
        .collect();
    Mat::from_fn(2, 2, |i, j| {
        (0..2).fold(Poly::zero(2), |acc, k| acc.add(&d[k].scale(&(t[i][k].clone() * ti[k][j].clone()))))
    })
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut count, mut nij) = (0, 0);
    while count < 50 {
        let m = if count % 2 == 0 {
            conjugated_diagonal(&mut rng)
        } else {
            Mat::from_fn(2, 2, |_, _| rand_poly(&mut rng, 2, 0, 2, 2))
        };
        let l = OpField::from_polys(&m);
        let sym = l.to_sym().unwrap();
        let (sig, _) = faddeev_leverrier(&sym);
        let jac = Mat::from_fn(2, 2, |i, k| sig[i].diff(k));
        if determinant(&jac).is_zero() {
            continue;
        }
        count += 1;
        let a = verify_char_flow(&l).map_err(|e| e.to_string())?.pass;
        let b = is_nijenhuis(&l, &Mode::Symbolic).map_err(|e| e.to_string())?.pass;
        ensure(a == b, || format!("disagreement on {:?}: char flow {a}, nijenhuis {b}", l.to_strings()))?;
        nij += b as usize;
    }
    Ok(format!("50/50 agree ({nij} Nijenhuis)"))
}

fn kobayashi() -> OpField {
    let z = "0";
    OpField::parse(
        default_vars(4),
        &[vec![z, z, z, z], vec!["1", z, z, "-1 - x3"], vec![z, z, z, z], vec![z, z, z, z]],
    )
    .unwrap()
}

fn criterion_5() -> Outcome {
    let l = kobayashi();
    let n = is_nijenhuis(&l, &Mode::Symbolic).map_err(|e| e.to_string())?;
    ensure(is_exact_zero(&n), || format!("N = {:?}", n.residual))?;
    // the kernel frame e2, e3, (1 + x3) e1 + e4
    let vars = default_vars(4);
    let f = |s: &str| ScalarField::Poly(poly(s, 4));
    let frame = vec![
        vec![f("0"), f("1"), f("0"), f("0")],
        vec![f("0"), f("0"), f("1"), f("0")],
        vec![f("1 + x3"), f("0"), f("0"), f("1")],
    ];
    for v in &frame {
        let lv: Vec<Sym> = l.to_sym().unwrap().mul_vec(&v.iter().map(|c| c.as_sym().unwrap()).collect::<Vec<_>>());
        ensure(lv.iter().all(Sym::is_zero), || format!("frame field not in the kernel over {vars:?}"))?;
    }
    let inv = involutivity_check(&frame, &[0.0; 4], 1e-9).map_err(|e| e.to_string())?;
    ensure(!inv.pass && inv.magnitude() >= 0.5, || format!("kernel involutivity {:?}", inv.residual))?;
    let spec = SampleSpec::default().with_count(20).with_seed(5);
    let pts = spec.points(4);
    ensure(pts.len() == 20, || "too few samples".into())?;
    let mut worst = 0.0f64;
    for p in &pts {
        let v = kernel_bracket_check(&l, p, 1e-9).map_err(|e| e.to_string())?;
        ensure(v.pass && v.residual < 1e-9, || format!("L^2[u,v] = {} at {p:?}", v.residual))?;
        worst = worst.max(v.residual);
    }
    Ok(format!("kernel bracket off by {:.3}, L^2[u,v] max {worst:.1e}", inv.magnitude()))
}

/// Random `n x n` matrix with a real-part gap of at least 0.5 splitting its
/// spectrum, and the threshold between the two sides.
fn gapped_matrix(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, f64) {
    loop {
        let n = rng.gen_range(2..=5);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let Ok(sc) = cluster_spectrum(&a, 1e-6) else { continue };
        let mut re: Vec<f64> = sc.clusters.iter().map(|c| c.0.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let Some(w) = re.windows(2).find(|w| w[1] - w[0] >= 0.5) {
            return (a, 0.5 * (w[0] + w[1]));
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (a, cut) = gapped_matrix(&mut rng);
        let n = a.nrows();
        let sc = cluster_spectrum(&a, 1e-6).map_err(|e| e.to_string())?;
        let chi1 = sc.factor(|z| z.re < cut).map_err(|e| e.to_string())?;
        let chi2 = sc.factor(|z| z.re > cut).map_err(|e| e.to_string())?;
        let f = Factorization::new(chi1, chi2).map_err(|e| e.to_string())?;
        let (p1, p2) = spectral_projectors(&a, &f, 1e-9).map_err(|e| e.to_string())?;
        let r = [
            frob(&(&p1 * &p1 - &p1)),
            frob(&(&p2 * &p2 - &p2)),
            frob(&(&p1 + &p2 - DMatrix::identity(n, n))),
            frob(&(&p1 * &a - &a * &p1)),
        ];
        let m = r.iter().fold(0.0f64, |x, y| x.max(*y));
        ensure(m < 1e-9, || format!("projector residuals {r:?} for {a}"))?;
        worst = worst.max(m);
    }
    // fields with a polynomial factor of the characteristic polynomial
    let v2 = default_vars(2);
    let f2 = OpField::parse(
        v2.clone(),
        &[vec!["x1 - x2^2", "-2*x1*x2 + 2*x2^3 + 2*x2^2 + 4*x2"], vec!["0", "x2 + 2"]],
    )
    .unwrap();
    let t = Mat::from_rows(vec![
        vec![Poly::one(3), Poly::one(3), Poly::zero(3)],
        vec![Poly::zero(3), Poly::one(3), Poly::one(3)],
        vec![Poly::zero(3), Poly::zero(3), Poly::one(3)],
    ]);
    let ti = Mat::from_rows(vec![
        vec![Poly::one(3), Poly::from_int(3, -1), Poly::one(3)],
        vec![Poly::zero(3), Poly::one(3), Poly::from_int(3, -1)],
        vec![Poly::zero(3), Poly::zero(3), Poly::one(3)],
    ]);
    let u = ti.mul_vec(&[Poly::var(3, 0), Poly::var(3, 1), Poly::var(3, 2)]);
    let d = Mat::from_fn(3, 3, |i, j| {
        if i != j {
            Poly::zero(3)
        } else {
            u[i].pow(i as u32 + 1).add(&Poly::from_int(3, 3 * i as i64))
        }
    });
    let f3 = OpField::from_polys(&t.mul(&d).mul(&ti));
    let v3 = default_vars(3);
    let cases = [
        (f2, FactorField::parse("t - x1 + x2^2", &v2).unwrap(), vec![0.0, 0.0]),
        (f3, FactorField::parse("t - x1 + x2 - x3", &v3).unwrap(), vec![0.1, 0.2, -0.1]),
    ];
    let spec = SampleSpec::default().with_box(-0.05, 0.05).with_count(20);
    let mut fd = 0.0f64;
    for (l, fact, x) in &cases {
        ensure(is_nijenhuis(l, &Mode::Symbolic).unwrap().pass, || "test field is not Nijenhuis".into())?;
        let v = splitting_check(l, x, fact, &spec, 1e-4, 1e-5).map_err(|e| e.to_string())?;
        ensure(v.pass(), || format!("splitting {v:?}"))?;
        ensure(v.projector_nijenhuis.magnitude() < 1e-5, || format!("{:?}", v.projector_nijenhuis))?;
        fd = fd.max(v.projector_nijenhuis.magnitude());
    }
    Ok(format!("100 matrices, max {worst:.1e}; finite-difference N_P max {fd:.1e}"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let half = rng.gen_range(1..=3);
        let n = 2 * half;
        let mut b = DMatrix::zeros(n, n);
        for k in 0..half {
            let (re, im) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.3..2.0) * if rng.gen() { 1.0 } else { -1.0 });
            b[(2 * k, 2 * k)] = re;
            b[(2 * k + 1, 2 * k + 1)] = re;
            b[(2 * k, 2 * k + 1)] = -im;
            b[(2 * k + 1, 2 * k)] = im;
        }
        let s = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
        let Some(si) = s.clone().try_inverse() else { continue };
        let a = &s * b * si;
        let j = complex_structure(&a, 1e-6).map_err(|e| format!("{e} for {a}"))?;
        let r = frob(&(&j * &j + DMatrix::identity(n, n))).max(frob(&(&j * &a - &a * &j)));
        ensure(r < 1e-9, || format!("residual {r:.3e} for {a}"))?;
        worst = worst.max(r);
    }
    let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 1.0]);
    let j = complex_structure(&a, 1e-6).map_err(|e| e.to_string())?;
    let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    ensure((&j - &want).amax() < 1e-12, || format!("J = {j}"))?;
    Ok(format!("100 matrices, max {worst:.1e}; 2x2 value exact to 1e-12"))
}

fn rand_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2))
}

fn known_lsa(rng: &mut ChaCha8Rng, n: usize) -> LSACube {
    let mut a = LSACube::zero(n);
    let mut k = 0;
    while k < n {
        match rng.gen_range(0..3) {
            // e*e = e
            0 => {
                a.set(k, k, k, rat(1));
                k += 1;
            }
            // b1: e2*e1 = e1, e2*e2 = alpha e2
            1 if k + 1 < n => {
                a.set(k, k + 1, k, rat(1));
                a.set(k + 1, k + 1, k + 1, rand_rational(rng));
                k += 2;
            }
            _ => k += 1,
        }
    }
    a
}

/// The cube in the basis given by the columns of `t`.
fn transform(a: &LSACube, t: &[Vec<Rational>], ti: &[Vec<Rational>]) -> LSACube {
    let n = a.dim();
    let mut out = LSACube::zero(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = rat(0);
                for (p, q, r, v) in a.entries() {
                    s += ti[i][p].clone() * v * t[q][j].clone() * t[r][k].clone();
                }
                out.set(i, j, k, s);
            }
        }
    }
    out
}

/// A unit lower-triangular times unit upper-triangular integer matrix and its inverse.
fn unimodular(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<Rational>>, Vec<Vec<Rational>>) {
    let lo = Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Poly::one(0),
        std::cmp::Ordering::Greater => Poly::from_int(0, rng.gen_range(-2..=2)),
        _ => Poly::zero(0),
    });
    let up = Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Poly::one(0),
        std::cmp::Ordering::Less => Poly::from_int(0, rng.gen_range(-2..=2)),
        _ => Poly::zero(0),
    });
    let inv_unit = |m: &Mat<Poly>| {
        // (I + N)^-1 = I - N + N^2 - ...
        let id = Mat::<Poly>::identity(n, 0);
        let nil = m.sub(&id);
        let mut acc = id.clone();
        let mut term = id;
        for _ in 1..n {
            term = term.mul(&nil).neg();
            acc = acc.add(&term);
        }
        acc
    };
    let t = lo.mul(&up);
    let ti = inv_unit(&up).mul(&inv_unit(&lo));
    let q = |m: &Mat<Poly>| (0..n).map(|i| (0..n).map(|j| m.get(i, j).constant_term()).collect()).collect();
    (q(&t), q(&ti))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut valid = 0;
    for c in 0..200 {
        let n = rng.gen_range(1..=3);
        let a = if c % 2 == 0 {
            let (t, ti) = unimodular(&mut rng, n);
            transform(&known_lsa(&mut rng, n), &t, &ti)
        } else {
            let mut a = LSACube::zero(n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if rng.gen_bool(0.2) {
                            a.set(i, j, k, rand_rational(&mut rng));
                        }
                    }
                }
            }
            a
        };
        let ls = lsa_check(&a).pass;
        let nj = is_nijenhuis(&lsa_to_linear(&a), &Mode::Symbolic).map_err(|e| e.to_string())?.pass;
        ensure(ls == nj, || format!("cube {:?}: lsa {ls}, nijenhuis {nj}", a.entries()))?;
        if ls {
            valid += 1;
            let lie = assoc_lie(&a);
            ensure(lie.jacobi.pass, || format!("Jacobi fails for {:?}", a.entries()))?;
        }
    }
    Ok(format!("200/200 agree, {valid} left-symmetric, Jacobi holds for all of them"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cap = 6;
    for c in 0..20 {
        let n = 2 + c % 2;
        let g: Vec<Poly> = (0..n).map(|_| rand_poly(&mut rng, n, 2, 3, 2)).collect();
        let made = pushforward_truncated(&l_lin(n), &g, cap).map_err(|e| e.to_string())?;
        let t = formal_linearize(&OpField::from_polys(&made), cap).map_err(|e| format!("{e} for g = {g:?}"))?;
        ensure(t.residual.is_zero(), || format!("residual through degree {cap} for g = {g:?}"))?;
        // push the field through the recovered substitution and compare
        let shift: Vec<Poly> = t.substitution.iter().enumerate().map(|(i, p)| p.sub(&Poly::var(n, i))).collect();
        let back = pushforward_truncated(&made, &shift, cap).map_err(|e| e.to_string())?;
        ensure(back == l_lin(n), || format!("pushforward through substitution misses diag for g = {g:?}"))?;
        let gmap: Vec<Poly> = g.iter().enumerate().map(|(i, p)| p.add(&Poly::var(n, i))).collect();
        ensure(
            composition_residual(&gmap, &t.substitution, cap).iter().all(Poly::is_zero),
            || format!("substitution does not invert the manufacturing map for g = {g:?}"),
        )?;
    }
    Ok(format!("20 perturbations linearised through degree {cap}"))
}

fn criterion_10() -> Outcome {
    for n in 2..=4 {
        let v = geodesic_compat_check(&antidiagonal_metric(n), &companion_first_column(n)).map_err(|e| e.to_string())?;
        ensure(v.pass() && is_exact_zero(&v.equation), || format!("n = {n}: {v:?}"))?;
    }
    let (g, l) = levi_civita(&[Poly::var(2, 0), Poly::var(2, 1)], &[1, 1]).map_err(|e| e.to_string())?;
    let spec = SampleSpec::default().with_count(100).with_seed(10).avoiding(poly("x1 - x2", 2));
    let v = geodesic_compat_check_with(&g, &l, &spec).map_err(|e| e.to_string())?;
    ensure(v.pass(), || format!("Levi-Civita: {v:?}"))?;
    let Residual::Numeric { max, .. } = v.equation.residual else {
        return Err(format!("expected a sampled verdict, got {:?}", v.equation));
    };
    ensure(max < 1e-9, || format!("Levi-Civita residual {max:e}"))?;
    Ok(format!("n = 2, 3, 4 identically zero; Levi-Civita max {max:.1e}"))
}

fn criterion_11() -> Outcome {
    let all_zero = |v: &nijenhuis::geopn::PnVerdict| [&v.omega, &v.skew, &v.closed, &v.nijenhuis].iter().all(|x| is_exact_zero(x));
    for n in 2..=3 {
        let v = pn_check(&canonical_omega(n), &block_companion_operator(n)).map_err(|e| e.to_string())?;
        ensure(all_zero(&v), || format!("dim {}: {v:?}", 2 * n))?;
    }
    for n in 1..=3 {
        let v = pn_check(&canonical_omega(n), &doubled_diagonal(n)).map_err(|e| e.to_string())?;
        ensure(all_zero(&v), || format!("diagonal pair n = {n}: {v:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 10;
    for _ in 0..trials {
        let half = rng.gen_range(1..=2);
        let (d, nv) = (2 * half, 2 * half);
        let vars = phase_vars(half);
        // omega = M^T W M with W canonical and M unit upper triangular
        let nil = Mat::from_fn(d, d, |i, j| if i < j { rand_poly(&mut rng, nv, 0, 1, 1) } else { Poly::zero(nv) });
        let id = Mat::<Poly>::identity(d, nv);
        let m = id.add(&nil);
        let mut mi = id.clone();
        let mut term = id.clone();
        for _ in 1..d {
            term = term.mul(&nil).neg();
            mi = mi.add(&term);
        }
        let w0 = canonical_omega(half).matrix().to_poly().unwrap();
        let omega = m.transpose().mul(&w0).mul(&m);
        // L = omega^-1 A with A antisymmetric, so omega L is a two-form
        let b = Mat::from_fn(d, d, |_, _| rand_poly(&mut rng, nv, 0, 2, 2));
        let a = b.sub(&b.transpose());
        let w0i = w0.neg();
        let l = mi.mul(&w0i).mul(&mi.transpose()).mul(&a);
        let omega_f = TwoForm::new(OpField::from_sym(vars.clone(), &omega)).map_err(|e| e.to_string())?;
        let l_f = OpField::from_sym(vars.clone(), &l);
        let wl = TwoForm::new(OpField::from_sym(vars.clone(), &twisted_form(&omega_f, &l_f).map_err(|e| e.to_string())?))
            .map_err(|e| e.to_string())?;
        let back = recursion_operator(&omega_f, &wl).map_err(|e| e.to_string())?;
        ensure(sym_equal(&back, &l_f), || format!("round trip differs for omega {:?}", omega_f.matrix().to_strings()))?;
    }
    Ok(format!("dim 4 and 6 pairs, diagonal pairs n <= 3, {trials} recursion round trips"))
}

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn criterion_12() -> Outcome {
    let runs: Vec<Vec<String>> = [
        vec!["check", "example41.toml"],
        vec!["check", "planted.toml"],
        vec!["check", "example41.toml", "--mode", "numeric", "--seed", "7"],
        vec!["reconstruct", "companion_sigma.toml"],
        vec!["reconstruct", "two_block.toml"],
        vec!["split", "split.toml", "--seed", "3"],
        vec!["classify", "classify.toml"],
        vec!["lsa", "lsa_b1.toml"],
        vec!["linearize", "linearize.toml"],
        vec!["geodesic", "geodesic_companion.toml"],
        vec!["geodesic", "levi_civita.toml", "--seed", "11"],
        vec!["pn", "as_pair.toml"],
        vec!["canonical", "companion", "--dim", "3"],
    ]
    .iter()
    .map(|r| {
        r.iter()
            .map(|s| if s.ends_with(".toml") { data(s) } else { s.to_string() })
            .collect()
    })
    .collect();
    for args in &runs {
        for json in [false, true] {
            let mut full = vec!["nijenhuis".to_string()];
            if json {
                full.push("--json".into());
            }
            full.extend(args.iter().cloned());
            let a = run(full.clone());
            let b = run(full.clone());
            ensure(a == b, || format!("{full:?} is not deterministic"))?;
            ensure(a.code != 2, || format!("{full:?}: {}", a.stderr))?;
        }
    }
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let kinds: [&[&str]; 7] = [
        &["diag", "--lambda", "x1^2", "--lambda", "x2 + 1"],
        &["complex", "--lambda", "x1^2 - x2^2", "--lambda", "2*x1*x2"],
        &["companion", "--dim", "4"],
        &["companion-sum", "--sizes", "2,1"],
        &["nilpotent", "--dim", "3"],
        &["jordan", "--dim", "3", "--lambda", "x1^2"],
        &["complex-jordan", "--dim", "2", "--coef", "0:1", "--coef", "1:0"],
    ];
    for k in kinds {
        let mut full = vec!["nijenhuis", "canonical"];
        full.extend_from_slice(k);
        let out = run(full.clone());
        ensure(out.code == 0, || format!("{full:?}: {}{}", out.stdout, out.stderr))?;
        let doc = OperatorDoc::parse(&out.stdout).map_err(|e| e.to_string())?;
        ensure(doc.to_toml() == out.stdout, || format!("{k:?}: document does not round-trip"))?;
        let path = dir.join(format!("canonical_{}.toml", k[0]));
        std::fs::write(&path, &out.stdout).map_err(|e| e.to_string())?;
        let check = run(["nijenhuis", "check", path.to_str().unwrap()]);
        ensure(check.code == 0, || format!("{k:?} document fails check:\n{}", check.stdout))?;
    }
    Ok(format!("{} invocations repeat byte for byte; {} canonical documents round-trip", 2 * runs.len(), kinds.len()))
}

fn main() {
    // name, check, budget in seconds
    type Criterion = (&'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 12] = [
        ("symbolic Nijenhuis certification", criterion_1, 10),
        ("identity suite", criterion_2, 5),
        ("reconstruction round trip", criterion_3, 5),
        ("char flow agrees with Nijenhuis test", criterion_4, 30),
        ("Kobayashi kernel", criterion_5, 5),
        ("splitting and projectors", criterion_6, 20),
        ("complex structure", criterion_7, 5),
        ("left-symmetric algebras", criterion_8, 30),
        ("formal linearisation", criterion_9, 60),
        ("geodesic compatibility", criterion_10, 20),
        ("Poisson-Nijenhuis pairs", criterion_11, 20),
        ("CLI determinism", criterion_12, 10),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let r = match r {
            Ok(detail) if took > Duration::from_secs(*budget) => {
                Err(format!("{detail}; took {:.1} s, budget {budget} s", took.as_secs_f64()))
            }
            r => r,
        };
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({:.2} s)", i + 1, took.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {e} ({:.2} s)", i + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
