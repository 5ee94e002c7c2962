//! Operator documents: a TOML file whose leaves are expression strings.
//!
//! ```toml
//! dim = 2
//! vars = ["x1", "x2"]              # optional, defaults to x1..x{dim}
//! matrix = [["x1", "1"], ["x2", "0"]]
//! sigma = ["-x1", "-x2"]           # reconstruct
//! sigma_blocks = [["-x1"], ["-x2"]]
//! chi1 = "t - x1"                  # split: factor in t
//! point = [0.5, -0.5]              # split, classify
//! points = [[0.0, 0.0]]            # classify
//! metric_inv = [["0", "-1"], ["-1", "x1"]]
//! omega = [[...]]
//! lsa = [{ i = 1, j = 2, k = 1, value = "1" }]   # one-based indices
//! tol = 1e-9
//! fd_tol = 1e-5
//! seed = 42
//! samples = 100
//! box = [-1.0, 1.0]
//! avoid = ["x1 - x2"]
//! ```
//!
//! Entries are polynomials; a single top-level quotient `(P)/(Q)` is also
//! accepted, which is how rational entries are printed.

use serde::{Deserialize, Serialize};

use nijenhuis::matrix::Mat;
use nijenhuis::scalarfield::{default_vars, parse_poly, ParseError, Poly, RatFn, ScalarField};
use nijenhuis::tensorcore::OpField;

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed document: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{location}: {source}")]
    Expr { location: String, source: ParseError },
    #[error("{location}: zero denominator")]
    ZeroDenominator { location: String },
    #[error("document has no `{0}` block")]
    Missing(&'static str),
    #[error("{0}")]
    Shape(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsaEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_blocks: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_inv: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lsa: Option<Vec<LsaEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avoid: Option<Vec<String>>,
}

impl OperatorDoc {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a file, or standard input for `-`.
    pub fn load(path: &str) -> Result<Self, DocError> {
        let text = if path == "-" {
            let mut s = String::new();
            std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map(|_| s)
        } else {
            std::fs::read_to_string(path)
        }
        .map_err(|source| DocError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("documents serialise")
    }

    /// Chart variables: `vars`, else `x1..x{dim}`, else inferred from the
    /// first square block present.
    pub fn variables(&self) -> Result<Vec<String>, DocError> {
        if let Some(v) = &self.vars {
            if let Some(d) = self.dim {
                if d != v.len() {
                    return Err(DocError::Shape(format!("dim = {d} but {} variables", v.len())));
                }
            }
            return Ok(v.clone());
        }
        let n = self
            .dim
            .or_else(|| self.matrix.as_ref().map(Vec::len))
            .or_else(|| self.sigma.as_ref().map(Vec::len))
            .or_else(|| self.sigma_blocks.as_ref().map(|b| b.iter().map(Vec::len).sum()))
            .ok_or(DocError::Missing("dim"))?;
        Ok(default_vars(n))
    }

    pub fn operator(&self) -> Result<OpField, DocError> {
        let rows = self.matrix.as_ref().ok_or(DocError::Missing("matrix"))?;
        self.square_block("matrix", rows)
    }

    pub fn square_block(&self, name: &str, rows: &[Vec<String>]) -> Result<OpField, DocError> {
        let vars = self.variables()?;
        let n = rows.len();
        if let Some(d) = self.dim {
            if d != n {
                return Err(DocError::Shape(format!("`{name}` has {n} rows, dim = {d}")));
            }
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(DocError::Shape(format!("`{name}` is not square")));
        }
        let mut m = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let mut r = Vec::with_capacity(n);
            for (j, e) in row.iter().enumerate() {
                r.push(parse_field(e, &vars, &format!("{name}[{}][{}]", i + 1, j + 1))?);
            }
            m.push(r);
        }
        OpField::new(vars, Mat::from_rows(m)).map_err(|e| DocError::Shape(e.to_string()))
    }

    pub fn polys(&self, name: &str, items: &[String]) -> Result<Vec<Poly>, DocError> {
        let vars = self.variables()?;
        items
            .iter()
            .enumerate()
            .map(|(i, s)| parse_at(s, &vars, &format!("{name}[{}]", i + 1)))
            .collect()
    }

    pub fn avoid_polys(&self) -> Result<Vec<Poly>, DocError> {
        match &self.avoid {
            None => Ok(Vec::new()),
            Some(a) => self.polys("avoid", a),
        }
    }
}

fn parse_at(text: &str, vars: &[String], location: &str) -> Result<Poly, DocError> {
    parse_poly(text, vars).map_err(|source| DocError::Expr {
        location: location.to_string(),
        source,
    })
}

/// A polynomial, or a top-level quotient of two polynomials.
pub fn parse_field(text: &str, vars: &[String], location: &str) -> Result<ScalarField, DocError> {
    match parse_poly(text, vars) {
        Ok(p) => Ok(ScalarField::Poly(p)),
        Err(ParseError::BadDivision { offset }) => {
            let Some(slash) = top_level_slash(text) else {
                return Err(DocError::Expr {
                    location: location.to_string(),
                    source: ParseError::BadDivision { offset },
                });
            };
            let num = parse_at(&text[..slash], vars, location)?;
            let den = parse_at(&text[slash + 1..], vars, location)?;
            let r = RatFn::new(num, den).map_err(|_| DocError::ZeroDenominator {
                location: location.to_string(),
            })?;
            Ok(ScalarField::Rat(r))
        }
        Err(source) => Err(DocError::Expr {
            location: location.to_string(),
            source,
        }),
    }
}

fn top_level_slash(text: &str) -> Option<usize> {
    let mut depth = 0i32;
    let mut found = None;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '/' if depth == 0 => found = Some(i),
            _ => {}
        }
    }
    found
}
