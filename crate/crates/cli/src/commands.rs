use std::fmt::Write as _;

use clap::{Args, Subcommand, ValueEnum};

use nijenhuis::canon::{
    certify, gen_companion, gen_companion_sum, gen_complex_block, gen_complex_jordan, gen_diag_real,
    gen_jordan_nonconst, gen_nilpotent_jordan, Canonical,
};
use nijenhuis::geopn::{geodesic_compat_check_with, pn_check, GeoError, Metric, TwoForm};
use nijenhuis::lsa::{
    assoc_lie, formal_linearize, linear_to_lsa, lsa_check, lsa_to_linear, LSACube, LsaError, DEFAULT_CAP,
};
use nijenhuis::sampling::SampleSpec;
use nijenhuis::scalarfield::{default_vars, parse_poly, Poly, Rational, Sym, Symbolic};
use nijenhuis::spectral::{reconstruct, reconstruct_blocks, verify_char_flow, verify_reconstruction, verify_trace_identities};
use nijenhuis::splitfun::{splitting_check, FactorField};
use nijenhuis::tensorcore::{classify_point, is_nijenhuis, Mode, OpField};
use nijenhuis::verdict::Verdict;

use crate::doc::{DocError, LsaEntry, OperatorDoc};
use crate::report::Report;

pub const SEED_ENV: &str = "NIJENHUIS_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error("{0}")]
    Input(String),
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Args, Clone, Debug, Default)]
pub struct SampleArgs {
    /// Number of sample points.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Tolerance for algebraic identities.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sampling seed (overrides the document and the environment).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    Symbolic,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Diag,
    Complex,
    Companion,
    CompanionSum,
    Nilpotent,
    Jordan,
    ComplexJordan,
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Nijenhuis tensor, trace identities and the characteristic flow.
    Check {
        doc: String,
        #[arg(long, value_enum, default_value = "symbolic")]
        mode: CheckMode,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Emit a canonical-form document.
    Canonical {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long)]
        dim: Option<usize>,
        /// Eigenvalue expression; repeat for several blocks.
        #[arg(long)]
        lambda: Vec<String>,
        /// Block sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Coefficient `re:im` of z^k in a holomorphic eigenvalue, lowest first.
        #[arg(long)]
        coef: Vec<String>,
    },
    /// Operator from characteristic coefficients `sigma` or `sigma_blocks`.
    Reconstruct { doc: String },
    /// Spectral splitting along the factor `chi1` around `point`.
    Split {
        doc: String,
        #[command(flatten)]
        sampling: SampleArgs,
        /// Tolerance for the finite-difference Nijenhuis residual.
        #[arg(long)]
        fd_tol: Option<f64>,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
    },
    /// Algebraic type at `point` or `points`.
    Classify {
        doc: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Left-symmetric algebra from `lsa`, or from a linear `matrix`.
    Lsa { doc: String },
    /// Formal linearisation of a perturbation of diag(x1..xn).
    Linearize {
        doc: String,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        max_degree: u32,
    },
    /// Geodesic compatibility of `matrix` with `metric_inv`.
    Geodesic {
        doc: String,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Compatibility of `matrix` with the symplectic form `omega`.
    Pn { doc: String },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Canonical { .. } => "canonical",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Split { .. } => "split",
            Command::Classify { .. } => "classify",
            Command::Lsa { .. } => "lsa",
            Command::Linearize { .. } => "linearize",
            Command::Geodesic { .. } => "geodesic",
            Command::Pn { .. } => "pn",
        }
    }

    pub fn doc_path(&self) -> Option<&str> {
        match self {
            Command::Canonical { .. } => None,
            Command::Check { doc, .. }
            | Command::Reconstruct { doc }
            | Command::Split { doc, .. }
            | Command::Classify { doc, .. }
            | Command::Lsa { doc }
            | Command::Linearize { doc, .. }
            | Command::Geodesic { doc, .. }
            | Command::Pn { doc } => Some(doc),
        }
    }
}

fn sample_spec(doc: &OperatorDoc, args: &SampleArgs, default_box: [f64; 2]) -> Result<SampleSpec, CliError> {
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Input(format!("{SEED_ENV} is not an unsigned integer: {s:?}")))?,
        ),
        Err(_) => None,
    };
    let [lo, hi] = doc.sample_box.unwrap_or(default_box);
    if !(lo < hi) {
        return Err(CliError::Input(format!("empty sample box [{lo}, {hi}]")));
    }
    let mut spec = SampleSpec::default()
        .with_seed(args.seed.or(doc.seed).or(env_seed).unwrap_or(42))
        .with_count(args.samples.or(doc.samples).unwrap_or(100))
        .with_tol(args.tol.or(doc.tol).unwrap_or(1e-9))
        .with_box(lo, hi);
    for p in doc.avoid_polys()? {
        spec = spec.avoiding(p);
    }
    Ok(spec)
}

pub fn execute(cmd: &Command) -> Result<Report, CliError> {
    if let Command::Canonical {
        kind,
        dim,
        lambda,
        sizes,
        coef,
    } = cmd
    {
        return canonical(*kind, *dim, lambda, sizes, coef);
    }
    let path = cmd.doc_path().expect("document commands");
    let doc = OperatorDoc::load(path)?;
    let mut r = Report::new(cmd.name(), Some(path));
    match cmd {
        Command::Check { mode, sampling, .. } => check(&doc, *mode, sampling, &mut r)?,
        Command::Reconstruct { .. } => reconstruct_cmd(&doc, &mut r)?,
        Command::Split {
            sampling, fd_tol, step, ..
        } => split(&doc, sampling, *fd_tol, *step, &mut r)?,
        Command::Classify { tol, .. } => classify(&doc, *tol, &mut r)?,
        Command::Lsa { .. } => lsa(&doc, &mut r)?,
        Command::Linearize { max_degree, .. } => linearize(&doc, *max_degree, &mut r)?,
        Command::Geodesic { sampling, .. } => geodesic(&doc, sampling, &mut r)?,
        Command::Pn { .. } => pn(&doc, &mut r)?,
        Command::Canonical { .. } => unreachable!(),
    }
    Ok(r)
}

fn check(doc: &OperatorDoc, mode: CheckMode, args: &SampleArgs, r: &mut Report) -> Result<(), CliError> {
    let l = doc.operator()?;
    match mode {
        CheckMode::Symbolic => {
            r.check("nijenhuis", &is_nijenhuis(&l, &Mode::Symbolic).map_err(input)?);
            for (k, v) in verify_trace_identities(&l, l.dim() as u32).map_err(input)? {
                r.check(format!("trace k={k}"), &v);
            }
            r.check("char-flow", &verify_char_flow(&l).map_err(input)?);
        }
        CheckMode::Numeric => {
            let spec = sample_spec(doc, args, [-1.0, 1.0])?;
            r.sampling = Some((&spec).into());
            r.check("nijenhuis", &is_nijenhuis(&l, &Mode::Numeric(spec)).map_err(input)?);
        }
    }
    Ok(())
}

fn matrix_text(l: &OpField) -> Result<Vec<Vec<String>>, CliError> {
    l.to_strings().map_err(input)
}

fn canonical_doc(c: &Canonical) -> Result<OperatorDoc, CliError> {
    Ok(OperatorDoc {
        kind: Some(c.kind.to_string()),
        dim: Some(c.op.dim()),
        vars: Some(c.op.vars().to_vec()),
        matrix: Some(matrix_text(&c.op)?),
        ..Default::default()
    })
}

fn parse_on(text: &str, n: usize) -> Result<Poly, CliError> {
    parse_poly(text, &default_vars(n)).map_err(|e| CliError::Input(format!("`{text}`: {e}")))
}

fn parse_rational(text: &str) -> Result<Rational, CliError> {
    let p = parse_poly(text, &[] as &[String]).map_err(|e| CliError::Input(format!("`{text}`: {e}")))?;
    Ok(p.constant_term())
}

fn canonical(kind: Kind, dim: Option<usize>, lambda: &[String], sizes: &[usize], coef: &[String]) -> Result<Report, CliError> {
    let need_dim = || dim.ok_or_else(|| CliError::Input("--dim is required for this kind".into()));
    let c = match kind {
        Kind::Diag => {
            let sizes: Vec<usize> = match (sizes.is_empty(), lambda.is_empty()) {
                (false, _) => sizes.to_vec(),
                (true, false) => vec![1; lambda.len()],
                (true, true) => vec![1; need_dim()?],
            };
            if !lambda.is_empty() && lambda.len() != sizes.len() {
                return Err(CliError::Input("one --lambda per block".into()));
            }
            let n: usize = sizes.iter().sum();
            let mut blocks = Vec::with_capacity(sizes.len());
            let mut offset = 0;
            for (b, k) in sizes.iter().enumerate() {
                let p = match lambda.get(b) {
                    Some(s) => parse_on(s, n)?,
                    None => Poly::var(n, offset),
                };
                blocks.push((p, *k));
                offset += k;
            }
            gen_diag_real(&blocks)
        }
        Kind::Complex => {
            let a = parse_on(lambda.first().map_or("x1", String::as_str), 2)?;
            let b = parse_on(lambda.get(1).map_or("x2", String::as_str), 2)?;
            gen_complex_block(&a, &b)
        }
        Kind::Companion => gen_companion(need_dim()?),
        Kind::CompanionSum => {
            if sizes.is_empty() {
                return Err(CliError::Input("--sizes is required for companion-sum".into()));
            }
            gen_companion_sum(sizes)
        }
        Kind::Nilpotent => gen_nilpotent_jordan(need_dim()?),
        Kind::Jordan => {
            let n = need_dim()?;
            gen_jordan_nonconst(n, &parse_on(lambda.first().map_or("x1", String::as_str), n)?)
        }
        Kind::ComplexJordan => {
            let n = need_dim()?;
            let coef: Vec<String> = if coef.is_empty() {
                vec!["0:0".into(), "1:0".into()]
            } else {
                coef.to_vec()
            };
            let mut cs = Vec::with_capacity(coef.len());
            for c in &coef {
                let (re, im) = c
                    .split_once(':')
                    .ok_or_else(|| CliError::Input(format!("coefficient `{c}` is not of the form re:im")))?;
                cs.push((parse_rational(re)?, parse_rational(im)?));
            }
            gen_complex_jordan(n, &cs)
        }
    }
    .map_err(input)?;
    let mut r = Report::new("canonical", None);
    for (name, v) in certify(&c).map_err(input)?.checks {
        r.check(name, &v);
    }
    r.output = Some(canonical_doc(&c)?.to_toml());
    Ok(r)
}

/// Coefficients of `prod (t^k + s_1 t^(k-1) + ... + s_k)`, as `s_1..s_n`.
fn combine_sigmas(blocks: &[Vec<Sym>], nv: usize) -> Vec<Sym> {
    let mut acc = vec![Sym::one(nv)];
    for b in blocks {
        let mut f = vec![Sym::one(nv)];
        f.extend(b.iter().cloned());
        let mut out = vec![Sym::zero(nv); acc.len() + f.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, c) in f.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(c));
            }
        }
        acc = out;
    }
    acc.into_iter().skip(1).collect()
}

fn reconstruct_cmd(doc: &OperatorDoc, r: &mut Report) -> Result<(), CliError> {
    let vars = doc.variables()?;
    let (l, sigmas) = if let Some(s) = &doc.sigma {
        let sig: Vec<Sym> = doc.polys("sigma", s)?.into_iter().map(Sym::Poly).collect();
        (reconstruct(&sig, vars.clone()).map_err(input)?, sig)
    } else if let Some(bl) = &doc.sigma_blocks {
        let mut blocks = Vec::with_capacity(bl.len());
        for (i, b) in bl.iter().enumerate() {
            let ps = doc.polys(&format!("sigma_blocks[{}]", i + 1), b)?;
            blocks.push(ps.into_iter().map(Sym::Poly).collect::<Vec<_>>());
        }
        let total = combine_sigmas(&blocks, vars.len());
        (reconstruct_blocks(&blocks, vars.clone()).map_err(input)?, total)
    } else {
        return Err(DocError::Missing("sigma").into());
    };
    r.check("reconstruction", &verify_reconstruction(&sigmas, &l).map_err(input)?);
    r.check("nijenhuis", &is_nijenhuis(&l, &Mode::Symbolic).map_err(input)?);
    let out = OperatorDoc {
        kind: Some("reconstructed".into()),
        dim: Some(l.dim()),
        vars: Some(vars),
        matrix: Some(matrix_text(&l)?),
        ..Default::default()
    };
    r.output = Some(out.to_toml());
    Ok(())
}

fn split(doc: &OperatorDoc, args: &SampleArgs, fd_tol: Option<f64>, h: f64, r: &mut Report) -> Result<(), CliError> {
    let l = doc.operator()?;
    let point = doc.point.as_ref().ok_or(DocError::Missing("point"))?;
    let chi1 = doc.chi1.as_ref().ok_or(DocError::Missing("chi1"))?;
    let fact = FactorField::parse(chi1, l.vars()).map_err(|e| CliError::Input(format!("chi1: {e}")))?;
    let spec = sample_spec(doc, args, [-0.05, 0.05])?;
    let fd_tol = fd_tol.or(doc.fd_tol).unwrap_or(1e-5);
    r.sampling = Some((&spec).into());
    let v = splitting_check(&l, point, &fact, &spec, h, fd_tol).map_err(input)?;
    r.check("idempotent", &v.idempotent);
    r.check("commutes", &v.commutes);
    r.check("projector-nijenhuis", &v.projector_nijenhuis);
    r.check("block-diagonal", &v.block_diagonal);
    Ok(())
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

fn classify(doc: &OperatorDoc, tol: Option<f64>, r: &mut Report) -> Result<(), CliError> {
    let l = doc.operator()?;
    let points: Vec<Vec<f64>> = match (&doc.points, &doc.point) {
        (Some(ps), _) => ps.clone(),
        (None, Some(p)) => vec![p.clone()],
        (None, None) => return Err(DocError::Missing("point").into()),
    };
    let tol = tol.or(doc.tol).unwrap_or(1e-9);
    let yn = |b: bool| if b { "yes" } else { "no" };
    let mut out = String::new();
    for p in &points {
        let pc = classify_point(&l, p, tol).map_err(input)?;
        let at: Vec<String> = p.iter().map(|x| fmt_num(*x)).collect();
        let _ = writeln!(out, "at ({}):", at.join(", "));
        for c in &pc.clusters {
            let v = if c.value.im == 0.0 {
                fmt_num(c.value.re)
            } else {
                format!("{}{:+}i", fmt_num(c.value.re), c.value.im)
            };
            let _ = writeln!(out, "  eigenvalue {v}: multiplicity {}, blocks {:?}", c.multiplicity, c.blocks);
        }
        let _ = writeln!(
            out,
            "  gl-regular {}, differentially non-degenerate {}, scalar type {}",
            yn(pc.gl_regular),
            yn(pc.diff_nondegenerate),
            yn(pc.scalar_type)
        );
    }
    r.output = Some(out);
    Ok(())
}

fn cube_from_entries(n: usize, entries: &[LsaEntry]) -> Result<LSACube, CliError> {
    let mut c = LSACube::zero(n);
    for (idx, e) in entries.iter().enumerate() {
        if [e.i, e.j, e.k].iter().any(|&v| v == 0 || v > n) {
            return Err(CliError::Input(format!("lsa[{}]: index out of range 1..{n}", idx + 1)));
        }
        let v = parse_rational(&e.value).map_err(|err| CliError::Input(format!("lsa[{}]: {err}", idx + 1)))?;
        c.set(e.i - 1, e.j - 1, e.k - 1, v);
    }
    Ok(c)
}

fn lsa(doc: &OperatorDoc, r: &mut Report) -> Result<(), CliError> {
    let cube = match (&doc.lsa, &doc.matrix) {
        (Some(entries), _) => {
            let n = doc.dim.ok_or(DocError::Missing("dim"))?;
            cube_from_entries(n, entries)?
        }
        (None, Some(_)) => linear_to_lsa(&doc.operator()?).map_err(input)?,
        (None, None) => return Err(DocError::Missing("lsa").into()),
    };
    let l = lsa_to_linear(&cube);
    r.check("left-symmetry", &lsa_check(&cube));
    r.check("linear-nijenhuis", &is_nijenhuis(&l, &Mode::Symbolic).map_err(input)?);
    r.check("jacobi", &assoc_lie(&cube).jacobi);
    let mut out = String::from("linear operator:\n");
    for row in matrix_text(&l)? {
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
    r.output = Some(out);
    Ok(())
}

fn linearize(doc: &OperatorDoc, cap: u32, r: &mut Report) -> Result<(), CliError> {
    let l = doc.operator()?;
    let vars = l.vars().to_vec();
    let ys: Vec<String> = (1..=vars.len()).map(|i| format!("y{i}")).collect();
    match formal_linearize(&l, cap) {
        Ok(t) => {
            let v = match t.residual.first_nonzero() {
                None => Verdict::zero(),
                Some((i, j, p)) => Verdict::symbolic(format!("residual[{}][{}]", i + 1, j + 1), p.to_string_with(&vars)),
            };
            r.check("linearisation", &v);
            let mut out = format!("max degree: {cap}\n");
            match &t.linear_change {
                None => out.push_str("linear change: none\n"),
                Some(p) => {
                    let rows: Vec<String> = p
                        .iter()
                        .map(|row| format!("[{}]", row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
                        .collect();
                    let _ = writeln!(out, "linear change: x = P u, P = [{}]", rows.join(", "));
                }
            }
            for s in &t.steps {
                let terms: Vec<String> = s
                    .f
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| !f.is_zero())
                    .map(|(i, f)| format!("{} += {}", vars[i], f.to_string_with(&vars)))
                    .collect();
                let _ = writeln!(out, "degree {}: {}", s.degree, terms.join("; "));
            }
            out.push_str("substitution:\n");
            for (i, p) in t.substitution.iter().enumerate() {
                let _ = writeln!(out, "  {} = {}", ys[i], p.to_string_with(&vars));
            }
            r.output = Some(out);
        }
        Err(LsaError::Incompatible { k, residual }) => r.check(format!("compatibility degree {k}"), &residual),
        Err(e) => return Err(input(e)),
    }
    Ok(())
}

fn geodesic(doc: &OperatorDoc, args: &SampleArgs, r: &mut Report) -> Result<(), CliError> {
    let l = doc.operator()?;
    let gi = doc.metric_inv.as_ref().ok_or(DocError::Missing("metric_inv"))?;
    let g = match Metric::new(doc.square_block("metric_inv", gi)?) {
        Ok(g) => g,
        Err(GeoError::NotSymmetric(v)) => {
            r.check("metric-symmetric", &v);
            return Ok(());
        }
        Err(e) => return Err(input(e)),
    };
    let spec = sample_spec(doc, args, [-1.0, 1.0])?;
    r.sampling = Some((&spec).into());
    let v = geodesic_compat_check_with(&g, &l, &spec).map_err(input)?;
    r.check("self-adjoint", &v.self_adjoint);
    r.check("equation", &v.equation);
    r.check("nijenhuis", &v.nijenhuis);
    Ok(())
}

fn pn(doc: &OperatorDoc, r: &mut Report) -> Result<(), CliError> {
    let l = doc.operator()?;
    let w = doc.omega.as_ref().ok_or(DocError::Missing("omega"))?;
    let omega = match TwoForm::new(doc.square_block("omega", w)?) {
        Ok(o) => o,
        Err(GeoError::NotAntisymmetric(v)) => {
            r.check("omega", &v);
            return Ok(());
        }
        Err(e) => return Err(input(e)),
    };
    let v = pn_check(&omega, &l).map_err(input)?;
    r.check("omega", &v.omega);
    r.check("skew", &v.skew);
    r.check("closed", &v.closed);
    r.check("nijenhuis", &v.nijenhuis);
    Ok(())
}
