//! First-order jets: a value together with its gradient.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, nvars: usize) -> Self {
        Jet {
            value,
            partials: vec![0.0; nvars],
        }
    }

    /// The coordinate `x_{i+1}` at value `value`.
    pub fn variable(value: f64, nvars: usize, i: usize) -> Self {
        let mut partials = vec![0.0; nvars];
        partials[i] = 1.0;
        Jet { value, partials }
    }

    /// Coordinate jets for every component of `point`.
    pub fn seed(point: &[f64]) -> Vec<Jet> {
        (0..point.len())
            .map(|i| Jet::variable(point[i], point.len(), i))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.partials.len()
    }

    fn chain(&self, value: f64, slope: f64) -> Jet {
        Jet {
            value,
            partials: self.partials.iter().map(|d| d * slope).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            value: self.value * c,
            partials: self.partials.iter().map(|d| d * c).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Jet {
        Jet {
            value: self.value + c,
            partials: self.partials.clone(),
        }
    }

    pub fn powi(&self, k: i32) -> Jet {
        if k == 0 {
            return Jet::constant(1.0, self.nvars());
        }
        self.chain(self.value.powi(k), k as f64 * self.value.powi(k - 1))
    }

    pub fn sqrt(&self) -> Jet {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn sin(&self) -> Jet {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Jet {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.chain(e, e)
    }

    pub fn ln(&self) -> Jet {
        self.chain(self.value.ln(), 1.0 / self.value)
    }

    pub fn recip(&self) -> Jet {
        let r = 1.0 / self.value;
        self.chain(r, -r * r)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|d| d.is_finite())
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            partials: self.partials.iter().zip(&rhs.partials).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value - rhs.value,
            partials: self.partials.iter().zip(&rhs.partials).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value * rhs.value,
            partials: self
                .partials
                .iter()
                .zip(&rhs.partials)
                .map(|(a, b)| a * rhs.value + self.value * b)
                .collect(),
        }
    }
}

impl Div<&Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $method:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let v = Jet::seed(&[2.0, 3.0]);
        let p = &v[0] * &v[1];
        assert_eq!(p.partials, vec![3.0, 2.0]);
        let q = &v[0] / &v[1];
        assert!((q.partials[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((q.partials[1] + 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn transcendental() {
        let x = Jet::variable(0.5, 1, 0);
        assert!((x.sin().partials[0] - 0.5f64.cos()).abs() < 1e-15);
        assert!((x.exp().partials[0] - 0.5f64.exp()).abs() < 1e-15);
        assert!((x.cos().partials[0] + 0.5f64.sin()).abs() < 1e-15);
    }
}
