//! Reports: plain text for people, one JSON object (`schema: 1`) for tools.
//! Field order is fixed by the struct definitions, so output is stable.

use std::fmt::Write as _;

use serde::Serialize;

use nijenhuis::sampling::SampleSpec;
use nijenhuis::verdict::{self, Verdict};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Residual {
    Zero,
    Symbolic { at: String, expr: String },
    Numeric { max: f64, at: Option<Vec<f64>> },
}

impl From<&verdict::Residual> for Residual {
    fn from(r: &verdict::Residual) -> Self {
        match r {
            verdict::Residual::Zero => Residual::Zero,
            verdict::Residual::Symbolic { at, expr } => Residual::Symbolic {
                at: at.clone(),
                expr: expr.clone(),
            },
            verdict::Residual::Numeric { max, at } => Residual::Numeric {
                max: *max,
                at: at.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampling {
    pub seed: u64,
    pub count: usize,
    #[serde(rename = "box")]
    pub sample_box: [f64; 2],
    pub tol: f64,
}

impl From<&SampleSpec> for Sampling {
    fn from(s: &SampleSpec) -> Self {
        Sampling {
            seed: s.seed,
            count: s.count,
            sample_box: [s.lo, s.hi],
            tol: s.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub input: Option<String>,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    /// Command-specific text: an emitted document, a transcript, a table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn new(command: &str, input: Option<&str>) -> Self {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            input: input.map(str::to_string),
            pass: true,
            checks: Vec::new(),
            sampling: None,
            output: None,
            wall_time_ms: None,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, v: &Verdict) {
        self.pass &= v.pass;
        self.checks.push(Check {
            name: name.into(),
            pass: v.pass,
            residual: (&v.residual).into(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialise")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        if let Some(i) = &self.input {
            let _ = writeln!(s, "input: {i}");
        }
        if let Some(sm) = &self.sampling {
            let _ = writeln!(
                s,
                "sampling: seed {} count {} box [{}, {}] tol {:e}",
                sm.seed, sm.count, sm.sample_box[0], sm.sample_box[1], sm.tol
            );
        }
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            let detail = match &c.residual {
                Residual::Zero => "residual 0".to_string(),
                Residual::Symbolic { at, expr } => format!("{at} = {expr}"),
                Residual::Numeric { max, at: Some(p) } => format!("max residual {max:.3e} at {p:?}"),
                Residual::Numeric { max, at: None } => format!("max residual {max:.3e}"),
            };
            let _ = writeln!(s, "{tag} {}: {detail}", c.name);
        }
        if let Some(o) = &self.output {
            s.push_str(o);
            if !o.ends_with('\n') {
                s.push('\n');
            }
        }
        let _ = writeln!(s, "result: {}", if self.pass { "pass" } else { "fail" });
        if let Some(t) = self.wall_time_ms {
            let _ = writeln!(s, "wall time: {t:.1} ms");
        }
        s
    }
}
