mod common;

use proptest::prelude::*;

use common::{poly, rational};
use nijenhuis::geopn::{canonical_omega, phase_vars, poisson_bracket, recursion_operator, twisted_form, PhasePoly, TwoForm};
use nijenhuis::lsa::{
    assoc_lie, composition_residual, formal_inverse, formal_linearize, kill_term, l_lin, linear_to_lsa, lsa_check,
    lsa_to_linear, pushforward_truncated, LSACube,
};
use nijenhuis::matrix::Mat;
use nijenhuis::scalarfield::{Poly, Rational};
use nijenhuis::tensorcore::{is_nijenhuis, Mode, OpField};

fn cube(n: usize) -> impl Strategy<Value = LSACube> {
    prop::collection::vec(prop::option::weighted(0.25, rational()), n * n * n).prop_map(move |v| {
        let mut a = LSACube::zero(n);
        for (idx, c) in v.into_iter().enumerate() {
            if let Some(c) = c {
                a.set(idx / (n * n), (idx / n) % n, idx % n, c);
            }
        }
        a
    })
}

fn phase(n: usize) -> impl Strategy<Value = PhasePoly> {
    poly(2 * n, 3, 4).prop_map(move |p| PhasePoly::new(n, p).unwrap())
}

/// Homogeneous parts of degree `2..=3` only: a near-identity shift.
fn shift(n: usize) -> impl Strategy<Value = Vec<Poly>> {
    prop::collection::vec(poly(n, 3, 2), n).prop_map(|v| {
        v.into_iter().map(|p| p.homogeneous_part(2).add(&p.homogeneous_part(3))).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn poisson_jacobi(f in phase(2), g in phase(2), h in phase(2)) {
        let b = |x: &PhasePoly, y: &PhasePoly| poisson_bracket(x, y).unwrap();
        let j = b(&f, &b(&g, &h)).add(&b(&g, &b(&h, &f))).add(&b(&h, &b(&f, &g)));
        prop_assert!(j.is_zero());
    }

    #[test]
    fn poisson_leibniz_and_antisymmetry(f in phase(2), g in phase(2), h in phase(2)) {
        let b = |x: &PhasePoly, y: &PhasePoly| poisson_bracket(x, y).unwrap();
        prop_assert_eq!(b(&f, &g.mul(&h)), b(&f, &g).mul(&h).add(&g.mul(&b(&f, &h))));
        prop_assert!(b(&f, &g).add(&b(&g, &f)).is_zero());
    }

    #[test]
    fn lsa_matches_linear_nijenhuis(n in 1usize..=3, a in cube(3)) {
        let mut c = LSACube::zero(n);
        for (i, j, k, v) in a.entries() {
            if i < n && j < n && k < n {
                c.set(i, j, k, v);
            }
        }
        let l = lsa_to_linear(&c);
        prop_assert_eq!(lsa_check(&c).pass, is_nijenhuis(&l, &Mode::Symbolic).unwrap().pass);
        prop_assert_eq!(&linear_to_lsa(&l).unwrap(), &c);
        if lsa_check(&c).pass {
            prop_assert!(assoc_lie(&c).jacobi.pass);
        }
    }

    #[test]
    fn pushforward_round_trip(n in 2usize..=3, f in shift(3)) {
        let d = 5;
        let f: Vec<Poly> = f[..n].iter().map(|p| p.restrict(&(0..n).collect::<Vec<_>>()).unwrap_or_else(|| Poly::zero(n))).collect();
        let there = pushforward_truncated(&l_lin(n), &f, d).unwrap();
        let inv = formal_inverse(&f, d);
        let back_shift: Vec<Poly> = inv.iter().enumerate().map(|(i, p)| p.sub(&Poly::var(n, i))).collect();
        prop_assert_eq!(pushforward_truncated(&there, &back_shift, d).unwrap(), l_lin(n));
        let phi: Vec<Poly> = f.iter().enumerate().map(|(i, p)| p.add(&Poly::var(n, i))).collect();
        prop_assert!(composition_residual(&phi, &inv, d).iter().all(Poly::is_zero));
    }

    #[test]
    fn kill_term_keeps_lower_degrees(f in shift(2)) {
        let d = 5;
        let mut l = pushforward_truncated(&l_lin(2), &f, d).unwrap();
        for k in 2..=d {
            let step = kill_term(&l, k, d).unwrap();
            for deg in 0..k {
                prop_assert_eq!(step.result.map(|p| p.homogeneous_part(deg)), l.map(|p| p.homogeneous_part(deg)));
            }
            prop_assert!(step.result.map(|p| p.homogeneous_part(k)).is_zero());
            l = step.result;
        }
    }

    #[test]
    fn linearisation_inverts_the_manufacturing_map(f in shift(2)) {
        let cap = 5;
        let made = pushforward_truncated(&l_lin(2), &f, cap).unwrap();
        let t = formal_linearize(&OpField::from_polys(&made), cap).unwrap();
        prop_assert!(t.pass());
        let g: Vec<Poly> = f.iter().enumerate().map(|(i, p)| p.add(&Poly::var(2, i))).collect();
        prop_assert!(composition_residual(&g, &t.substitution, cap).iter().all(Poly::is_zero));
    }

    #[test]
    fn recursion_round_trip(
        w in prop::collection::vec(rational(), 6),
        b in prop::collection::vec(poly(4, 2, 2), 16),
    ) {
        // constant omega: canonical plus a random antisymmetric part
        let nv = 4;
        let vars = phase_vars(2);
        let w0 = canonical_omega(2).matrix().to_poly().unwrap();
        let mut it = w.into_iter();
        let mut extra = Mat::from_fn(4, 4, |_, _| Poly::zero(nv));
        for i in 0..4 {
            for j in i + 1..4 {
                let c: Rational = it.next().unwrap();
                extra.set(i, j, Poly::constant(nv, c.clone()));
                extra.set(j, i, Poly::constant(nv, -c));
            }
        }
        let omega = w0.add(&extra);
        prop_assume!(!nijenhuis::spectral::determinant(&omega).is_zero());
        let omega = TwoForm::new(OpField::from_polys(&omega)).unwrap();
        // omega L antisymmetric: L = omega^-1 A
        let bm = Mat::from_fn(4, 4, |i, j| b[4 * i + j].clone());
        let a = bm.sub(&bm.transpose());
        let at = TwoForm::new(OpField::from_polys(&a)).unwrap();
        let l = recursion_operator(&omega, &at).unwrap();
        let wl = TwoForm::new(OpField::from_sym(vars.clone(), &twisted_form(&omega, &l).unwrap())).unwrap();
        let back = recursion_operator(&omega, &wl).unwrap();
        prop_assert!(back.to_sym().unwrap().sub(&l.to_sym().unwrap()).is_zero());
        prop_assert!(twisted_form(&omega, &l).unwrap().sub(&a.map(|p| nijenhuis::scalarfield::Sym::Poly(p.clone()))).is_zero());
    }
}
