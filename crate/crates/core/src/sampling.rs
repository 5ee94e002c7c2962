//! Seeded sample points in a box, kept away from declared singular loci.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalarfield::Poly;

#[derive(Clone, Debug)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    /// Polynomials whose zero sets are avoided.
    pub avoid: Vec<Poly>,
    /// Minimum first-order distance `|p| / |grad p|` to each avoided locus.
    pub margin: f64,
    pub tol: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            count: 100,
            seed: 42,
            lo: -1.0,
            hi: 1.0,
            avoid: Vec::new(),
            margin: 1e-3,
            tol: 1e-9,
        }
    }
}

impl SampleSpec {
    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn avoiding(mut self, p: Poly) -> Self {
        self.avoid.push(p);
        self
    }

    /// Up to `count` points in `[lo, hi]^n`. Fewer are returned only if the
    /// avoided loci reject almost everything.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.count);
        let mut attempts = 0usize;
        while out.len() < self.count && attempts < 1000 * self.count.max(1) {
            attempts += 1;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(self.lo..=self.hi)).collect();
            if self.admissible(&x) {
                out.push(x);
            }
        }
        out
    }

    pub fn admissible(&self, x: &[f64]) -> bool {
        self.avoid.iter().all(|p| match p.eval_jet(x) {
            Ok(j) => {
                let g = j.partials.iter().map(|d| d * d).sum::<f64>().sqrt();
                j.value.abs() >= self.margin * g.max(1.0)
            }
            Err(_) => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_avoiding() {
        let x1 = Poly::var(2, 0);
        let x2 = Poly::var(2, 1);
        let spec = SampleSpec::default().avoiding(x1.sub(&x2));
        let a = spec.points(2);
        assert_eq!(a, spec.points(2));
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|p| (p[0] - p[1]).abs() >= 1e-3));
        assert!(a.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
    }
}
