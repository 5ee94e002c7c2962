//! Pass/fail verdicts with the residual that decided them.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Residual {
    /// Exactly zero.
    Zero,
    /// First nonzero symbolic component, printed canonically.
    Symbolic { at: String, expr: String },
    /// Largest numeric residual, with the sample where it occurred.
    Numeric { max: f64, at: Option<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub residual: Residual,
}

impl Verdict {
    pub fn zero() -> Self {
        Verdict {
            pass: true,
            residual: Residual::Zero,
        }
    }

    pub fn symbolic(at: impl Into<String>, expr: impl Into<String>) -> Self {
        Verdict {
            pass: false,
            residual: Residual::Symbolic {
                at: at.into(),
                expr: expr.into(),
            },
        }
    }

    pub fn numeric(max: f64, tol: f64, at: Option<Vec<f64>>) -> Self {
        Verdict {
            pass: max.is_finite() && max < tol,
            residual: Residual::Numeric { max, at },
        }
    }

    /// Largest numeric residual, zero for exact passes, infinity for
    /// symbolic failures.
    pub fn magnitude(&self) -> f64 {
        match &self.residual {
            Residual::Zero => 0.0,
            Residual::Symbolic { .. } => f64::INFINITY,
            Residual::Numeric { max, .. } => *max,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "pass" } else { "fail" };
        match &self.residual {
            Residual::Zero => write!(f, "{tag} (residual 0)"),
            Residual::Symbolic { at, expr } => write!(f, "{tag} ({at} = {expr})"),
            Residual::Numeric { max, .. } => write!(f, "{tag} (residual {max:.3e})"),
        }
    }
}
