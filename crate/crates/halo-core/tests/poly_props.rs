//! Property tests for the sparse polynomial ring and its Poisson
//! structure: ring axioms, canonical bracket relations, antisymmetry,
//! the Leibniz rule, and the Jacobi identity.

use halo_core::poly_algebra::{
    poisson_bracket, Chart, ExponentVector, SparsePolynomial, NVARS,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Infinity norm of the coefficient difference of two polynomials.
fn distance(a: &SparsePolynomial, b: &SparsePolynomial) -> f64 {
    let mut diff = a.clone();
    diff.sub_assign_poly(b);
    diff.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max)
}

/// Scale-aware comparison: the admissible defect grows with the operand
/// coefficients, since products accumulate roundoff at that scale.
fn assert_close(a: &SparsePolynomial, b: &SparsePolynomial, tol: f64) {
    let scale = a
        .terms()
        .chain(b.terms())
        .map(|(_, c)| c.norm())
        .fold(1.0, f64::max);
    let d = distance(a, b);
    assert!(d <= tol * scale, "distance {d:.3e} exceeds {tol:.0e} x {scale:.3e}");
}

prop_compose! {
    /// A random monomial of per-variable exponent at most 2.
    fn arb_term()(
        exps in prop::array::uniform6(0u8..=2),
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) -> (ExponentVector, Complex64) {
        (ExponentVector(exps), Complex64::new(re, im))
    }
}

prop_compose! {
    /// A random sparse polynomial with a handful of bounded-degree terms.
    fn arb_poly()(terms in prop::collection::vec(arb_term(), 1..6)) -> SparsePolynomial {
        let mut p = SparsePolynomial::zero(Chart::Original);
        for (ev, c) in terms {
            p.add_term(ev, c);
        }
        p
    }
}

fn mul(a: &SparsePolynomial, b: &SparsePolynomial) -> SparsePolynomial {
    a.mul(b, None).unwrap()
}

fn bracket(a: &SparsePolynomial, b: &SparsePolynomial) -> SparsePolynomial {
    poisson_bracket(a, b, None).unwrap()
}

proptest! {
    #[test]
    fn addition_commutes(a in arb_poly(), b in arb_poly()) {
        let mut ab = a.clone();
        ab.add_assign_poly(&b);
        let mut ba = b.clone();
        ba.add_assign_poly(&a);
        prop_assert!(distance(&ab, &ba) == 0.0);
    }

    #[test]
    fn multiplication_commutes(a in arb_poly(), b in arb_poly()) {
        assert_close(&mul(&a, &b), &mul(&b, &a), 1e-12);
    }

    #[test]
    fn multiplication_associates(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        assert_close(&mul(&mul(&a, &b), &c), &mul(&a, &mul(&b, &c)), 1e-12);
    }

    #[test]
    fn multiplication_distributes(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        let mut sum = b.clone();
        sum.add_assign_poly(&c);
        let left = mul(&a, &sum);
        let mut right = mul(&a, &b);
        right.add_assign_poly(&mul(&a, &c));
        assert_close(&left, &right, 1e-12);
    }

    #[test]
    fn bracket_is_antisymmetric(a in arb_poly(), b in arb_poly()) {
        let left = bracket(&a, &b);
        let right = bracket(&b, &a).scaled(Complex64::new(-1.0, 0.0));
        assert_close(&left, &right, 1e-12);
    }

    #[test]
    fn bracket_obeys_leibniz(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        // {a, bc} = {a, b} c + b {a, c}
        let left = bracket(&a, &mul(&b, &c));
        let mut right = mul(&bracket(&a, &b), &c);
        right.add_assign_poly(&mul(&b, &bracket(&a, &c)));
        assert_close(&left, &right, 1e-12);
    }

    #[test]
    fn bracket_obeys_jacobi(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        // {a,{b,c}} + {b,{c,a}} + {c,{a,b}} = 0
        let mut total = bracket(&a, &bracket(&b, &c));
        total.add_assign_poly(&bracket(&b, &bracket(&c, &a)));
        total.add_assign_poly(&bracket(&c, &bracket(&a, &b)));
        let zero = SparsePolynomial::zero(Chart::Original);
        assert_close(&total, &zero, 1e-12);
    }

    #[test]
    fn derivative_of_product_obeys_leibniz(a in arb_poly(), b in arb_poly(), var in 0usize..NVARS) {
        let left = mul(&a, &b).derivative(var);
        let mut right = mul(&a.derivative(var), &b);
        right.add_assign_poly(&mul(&a, &b.derivative(var)));
        assert_close(&left, &right, 1e-12);
    }
}

#[test]
fn canonical_bracket_relations_hold() {
    let one = Complex64::new(1.0, 0.0);
    let var = |i: usize| {
        let mut exps = [0u8; NVARS];
        exps[i] = 1;
        SparsePolynomial::monomial(Chart::Original, exps, one)
    };
    for i in 0..3 {
        for j in 0..3 {
            let qq = bracket(&var(i), &var(j));
            let pp = bracket(&var(i + 3), &var(j + 3));
            assert!(qq.is_zero(), "{{q{i}, q{j}}} != 0");
            assert!(pp.is_zero(), "{{p{i}, p{j}}} != 0");
            let qp = bracket(&var(i), &var(j + 3));
            if i == j {
                assert_eq!(qp.coefficient([0; NVARS]), one);
                assert_eq!(qp.num_terms(), 1);
            } else {
                assert!(qp.is_zero(), "{{q{i}, p{j}}} != 0");
            }
        }
    }
}

#[test]
fn bracket_against_constant_vanishes() {
    let c = SparsePolynomial::constant(Chart::Original, Complex64::new(2.5, -1.0));
    let p = SparsePolynomial::monomial(Chart::Original, [1, 0, 2, 0, 1, 0], Complex64::ONE);
    assert!(bracket(&c, &p).is_zero());
    assert!(bracket(&p, &c).is_zero());
}
