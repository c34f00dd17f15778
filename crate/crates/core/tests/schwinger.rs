mod common;

use cechlab_core::schwinger::{
    block_operator, cocycle_identity_defect, defect_curvature, dirac_defect, extension_bracket, jacobi_defect, scale,
    schwinger_residue, schwinger_trace,
};
use cechlab_core::{CMatrix, CentralElement, Error, LoopPolynomial, C64};
use common::rng;
use proptest::prelude::*;
use rand::Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense truncated multiplication operator written entry by entry.
fn oracle_assembly(x: &LoopPolynomial, k: usize) -> CMatrix {
    let n = x.size();
    let dim = 2 * k * n;
    let mut m = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            let s = (row / n) as i64 - k as i64;
            let r = (col / n) as i64 - k as i64;
            if (s - r).unsigned_abs() as usize <= x.band() {
                m[(row, col)] = x.coeff(s - r)[(row % n, col % n)];
            }
        }
    }
    m
}

/// Trace formula evaluated with matrix products on the oracle assembly.
fn oracle_trace(x: &LoopPolynomial, y: &LoopPolynomial, k: usize) -> C64 {
    let h = k * x.size();
    let mx = oracle_assembly(x, k);
    let my = oracle_assembly(y, k);
    let mp = |m: &CMatrix| m.view((0, h), (h, h)).into_owned();
    let pm = |m: &CMatrix| m.view((h, 0), (h, h)).into_owned();
    (mp(&mx) * pm(&my) - mp(&my) * pm(&mx)).trace()
}

fn random_pair(r: &mut impl Rng) -> (LoopPolynomial, LoopPolynomial) {
    let n = r.gen_range(1..=4);
    let x = LoopPolynomial::random(n, r.gen_range(0..=8), r);
    let y = LoopPolynomial::random(n, r.gen_range(0..=8), r);
    (x, y)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn assembly_matches_brute_force() {
    let mut r = rng(11);
    for _ in 0..30 {
        let n = r.gen_range(1..=3);
        let x = LoopPolynomial::random(n, r.gen_range(0..=4), &mut r);
        let k = x.band().max(1) + r.gen_range(0..3);
        let op = block_operator(&x, k).unwrap();
        assert_eq!(op.full(), &oracle_assembly(&x, k));
        let h = k * n;
        assert_eq!(op.minus_plus(), op.full().view((0, h), (h, h)).into_owned());
        assert_eq!(op.plus_minus(), op.full().view((h, 0), (h, h)).into_owned());
    }
}

#[test]
fn trace_equals_residue_and_is_flat_in_truncation() {
    let mut r = rng(1);
    for _ in 0..200 {
        let (x, y) = random_pair(&mut r);
        let m = x.band().max(y.band()).max(1);
        let tol = 1e-10 * scale(&[&x, &y]);
        let residue = schwinger_residue(&x, &y);
        let base = schwinger_trace(&x, &y, m, false).unwrap();
        assert!((base - residue).norm() <= tol, "{base} vs {residue}");
        for k in [m + 1, m + 5] {
            assert!((schwinger_trace(&x, &y, k, false).unwrap() - base).norm() <= tol);
        }
    }
}

#[test]
fn trace_matches_oracle_products() {
    let mut r = rng(2);
    for _ in 0..20 {
        let (x, y) = random_pair(&mut r);
        let k = x.band().max(y.band()).max(1) + 1;
        let got = schwinger_trace(&x, &y, k, false).unwrap();
        assert!((got - oracle_trace(&x, &y, k)).norm() <= 1e-10 * scale(&[&x, &y]));
    }
}

#[test]
fn single_mode_pair() {
    let e = CMatrix::from_fn(3, 3, |i, j| c(i as f64 - j as f64, (i * j) as f64));
    let f = CMatrix::from_fn(3, 3, |i, j| c(1.0 + j as f64, i as f64));
    let x = LoopPolynomial::monomial(1, e.clone());
    let y = LoopPolynomial::monomial(-1, f.clone());
    let expected = -(&e * &f).trace();
    for k in [1, 2, 6] {
        assert!((schwinger_trace(&x, &y, k, false).unwrap() - expected).norm() < 1e-12);
    }
    assert!((schwinger_residue(&x, &y) - expected).norm() < 1e-12);
    let u = extension_bracket(&CentralElement::new(x, c(0.0, 0.0)), &CentralElement::new(y, c(0.0, 0.0))).unwrap();
    assert!((u.central - expected).norm() < 1e-12);
}

#[test]
fn constant_and_diagonal_cases_vanish() {
    let mut r = rng(3);
    let a = LoopPolynomial::random(2, 0, &mut r);
    let b = LoopPolynomial::random(2, 0, &mut r);
    assert_eq!(schwinger_trace(&a, &b, 3, false).unwrap(), c(0.0, 0.0));
    let x = LoopPolynomial::random(2, 3, &mut r);
    assert!(schwinger_trace(&x, &x, 3, false).unwrap().norm() < 1e-12);
    assert!(schwinger_residue(&x, &x).norm() < 1e-12);
}

#[test]
fn under_truncation_needs_override() {
    let mut r = rng(4);
    let x = LoopPolynomial::random(2, 4, &mut r);
    let y = LoopPolynomial::random(2, 4, &mut r);
    assert!(matches!(schwinger_trace(&x, &y, 2, false), Err(Error::TruncationTooSmall { .. })));
    assert!(schwinger_trace(&x, &y, 2, true).is_ok());
    assert!(dirac_defect(&x, 4).is_err());
    assert!(defect_curvature(&x, &y, 8).is_err());
}

#[test]
fn cocycle_identity_and_jacobi() {
    let mut r = rng(5);
    for _ in 0..200 {
        let n = r.gen_range(1..=4);
        let mut draw = || LoopPolynomial::random(n, r.gen_range(0..=8), &mut r);
        let (x, y, z) = (draw(), draw(), draw());
        let tol = 1e-10 * scale(&[&x, &y, &z]);
        assert!(cocycle_identity_defect(&x, &y, &z).unwrap() <= tol);
        let w = |l: &LoopPolynomial, a: f64| CentralElement::new(l.clone(), c(a, -a));
        let u = (w(&x, 1.0), w(&y, 2.0), w(&z, -0.5));
        assert!(jacobi_defect(&u.0, &u.1, &u.2).unwrap() <= tol);
    }
}

#[test]
fn small_integer_triple_is_exact() {
    let one = CMatrix::from_element(1, 1, c(1.0, 0.0));
    let x = LoopPolynomial::monomial(1, one.clone());
    let y = LoopPolynomial::monomial(-1, one.clone() * c(2.0, 0.0));
    let z = LoopPolynomial::constant(one * c(3.0, 0.0));
    assert_eq!(cocycle_identity_defect(&x, &y, &z).unwrap(), 0.0);
}

#[test]
fn central_elements_are_central() {
    let mut r = rng(6);
    let x = LoopPolynomial::random(2, 3, &mut r);
    let zero = CentralElement::new(LoopPolynomial::zero(2), c(4.0, 1.0));
    let b = extension_bracket(&zero, &CentralElement::new(x, c(1.0, 0.0))).unwrap();
    assert_eq!(b.loop_part.frobenius_norm(), 0.0);
    assert_eq!(b.central, c(0.0, 0.0));
}

#[test]
fn dirac_defect_on_interior() {
    let mut r = rng(7);
    for _ in 0..100 {
        let x = LoopPolynomial::random(r.gen_range(1..=3), r.gen_range(0..=5), &mut r);
        let d = dirac_defect(&x, x.band() + 3).unwrap();
        assert!(d.interior_deviation <= 1e-12, "{}", d.interior_deviation);
    }
    // X = z at K = 3: [D, M_X] has entry +1 at (s, s−1)
    let z = LoopPolynomial::monomial(1, CMatrix::from_element(1, 1, c(1.0, 0.0)));
    let d = dirac_defect(&z, 3).unwrap();
    for s in 1..6 {
        assert_eq!(d.computed[(s, s - 1)], c(1.0, 0.0));
        assert!((d.predicted[(s, s - 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }
    assert_eq!(max_abs(&dirac_defect(&LoopPolynomial::constant(CMatrix::identity(2, 2)), 2).unwrap().computed), 0.0);
}

#[test]
fn curvature_matches_closed_form() {
    let mut r = rng(8);
    let i = c(0.0, 1.0);
    for _ in 0..30 {
        let n = r.gen_range(1..=3);
        let x = LoopPolynomial::random(n, r.gen_range(1..=3), &mut r);
        let y = LoopPolynomial::random(n, r.gen_range(1..=3), &mut r);
        let m = x.band().max(y.band());
        let k = 2 * m + 1 + r.gen_range(0..3);
        let f = defect_curvature(&x, &y, k).unwrap();
        let (dx, dy) = (x.derivative(), y.derivative());
        let closed = dx
            .bracket(&dy)
            .unwrap()
            .combine(c(-1.0, 0.0), &dx.bracket(&y).unwrap(), i)
            .unwrap()
            .combine(c(1.0, 0.0), &x.bracket(&dy).unwrap(), i)
            .unwrap();
        let expected = f.window.restrict(block_operator(&closed, k).unwrap().full(), n, k);
        let tol = 1e-9 * scale(&[&x, &y]) * (k * k) as f64;
        assert!(max_abs(&(f.interior() - expected)) <= tol);
        // alternating
        let g = defect_curvature(&y, &x, k).unwrap();
        assert!(max_abs(&(f.full.clone() + g.full)) <= tol);
        assert!(max_abs(&defect_curvature(&x, &x, k).unwrap().full) <= tol);
    }
}

#[test]
fn curvature_is_nonzero_in_general() {
    let mut r = rng(9);
    let x = LoopPolynomial::random(2, 2, &mut r);
    let y = LoopPolynomial::random(2, 2, &mut r);
    assert!(max_abs(&defect_curvature(&x, &y, 5).unwrap().interior()) > 1e-3);
}

fn arb_loop(n: usize) -> impl Strategy<Value = LoopPolynomial> {
    (0usize..=3, any::<u64>()).prop_map(move |(band, seed)| LoopPolynomial::random(n, band, &mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn antisymmetric_and_bilinear(x1 in arb_loop(2), x2 in arb_loop(2), y in arb_loop(2), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let tol = 1e-10 * scale(&[&x1, &y]).max(scale(&[&x2, &y])) * (1.0 + a.abs() + b.abs());
        let k = 4;
        prop_assert!((schwinger_residue(&x1, &y) + schwinger_residue(&y, &x1)).norm() <= tol);
        prop_assert!((schwinger_trace(&x1, &y, k, false).unwrap() + schwinger_trace(&y, &x1, k, false).unwrap()).norm() <= tol);
        let mix = x1.combine(c(a, 0.0), &x2, c(b, 0.0)).unwrap();
        let lhs = schwinger_residue(&mix, &y);
        let rhs = schwinger_residue(&x1, &y) * a + schwinger_residue(&x2, &y) * b;
        prop_assert!((lhs - rhs).norm() <= tol);
        let lhs = schwinger_trace(&mix, &y, k, false).unwrap();
        let rhs = schwinger_trace(&x1, &y, k, false).unwrap() * a + schwinger_trace(&x2, &y, k, false).unwrap() * b;
        prop_assert!((lhs - rhs).norm() <= tol);
    }
}
