//! Algebraic identities of matrix polynomials, checked by evaluation at
//! random points.

use approx::assert_relative_eq;
use lkdual::polyalg::{
    coefficient_equalities, AffineScalar, IntervalGrid, MatrixPoly, Monomial, PiecewisePoly1D, Var,
    VarId,
};
use lkdual::quadrature::GaussLegendre;
use lkdual::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Numeric `rows × cols` polynomial of total degree ≤ `deg`.
fn numeric_poly(rows: usize, cols: usize, deg: u32) -> impl Strategy<Value = MatrixPoly> {
    let monos: Vec<Monomial> = (0..=deg)
        .flat_map(|t| (0..=t).map(move |a| Monomial::new(a, t - a)))
        .collect();
    let count = monos.len() * rows * cols;
    prop::collection::vec(-2.0..2.0f64, count).prop_map(move |c| {
        MatrixPoly::from_terms(
            rows,
            cols,
            monos.iter().enumerate().map(|(k, &m)| {
                let chunk = &c[k * rows * cols..(k + 1) * rows * cols];
                (
                    m,
                    chunk.iter().map(|&v| AffineScalar::constant(v)).collect(),
                )
            }),
        )
    })
}

fn ev(p: &MatrixPoly, s: f64, t: f64) -> DMatrix<f64> {
    p.evaluate(s, t, &[]).unwrap()
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let scale = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() <= 1e-11 * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_distributes_over_sum(
        a in numeric_poly(2, 3, 2), b in numeric_poly(2, 3, 2), c in numeric_poly(3, 2, 2),
        s in -1.5..1.5f64, t in -1.5..1.5f64,
    ) {
        let lhs = a.add(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&ev(&lhs, s, t), &ev(&rhs, s, t)));
        prop_assert!(close(&ev(&lhs, s, t), &((ev(&a, s, t) + ev(&b, s, t)) * ev(&c, s, t))));
    }

    #[test]
    fn transpose_reverses_products(a in numeric_poly(2, 3, 2), b in numeric_poly(3, 2, 2), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let lhs = a.mul(&b).unwrap().transpose();
        let rhs = b.transpose().mul(&a.transpose()).unwrap();
        prop_assert!(close(&ev(&lhs, s, t), &ev(&rhs, s, t)));
    }

    #[test]
    fn derivative_obeys_leibniz(a in numeric_poly(2, 2, 3), b in numeric_poly(2, 2, 3), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        for var in [Var::S, Var::Theta] {
            let lhs = a.mul(&b).unwrap().differentiate(var);
            let rhs = a.differentiate(var).mul(&b).unwrap().add(&a.mul(&b.differentiate(var)).unwrap()).unwrap();
            prop_assert!(close(&ev(&lhs, s, t), &ev(&rhs, s, t)));
        }
    }

    #[test]
    fn derivative_matches_central_difference(a in numeric_poly(1, 2, 4), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let h = 1e-5;
        let fd = (ev(&a, s + h, t) - ev(&a, s - h, t)) / (2.0 * h);
        let exact = ev(&a.differentiate(Var::S), s, t);
        prop_assert!((&fd - &exact).amax() < 1e-6 * (1.0 + exact.amax()));
    }

    #[test]
    fn definite_integral_matches_quadrature(a in numeric_poly(2, 2, 5), lo in -2.0..0.0f64, len in 0.1..2.0f64, s in -1.0..1.0f64) {
        let hi = lo + len;
        let integral = a.integrate_definite(Var::Theta, lo, hi);
        prop_assert_eq!(integral.degree_in(Var::Theta).unwrap_or(0), 0);
        let rule = GaussLegendre::new(8);
        for r in 0..2 {
            for c in 0..2 {
                let q = rule.integrate(lo, hi, |t| ev(&a, s, t)[(r, c)]);
                prop_assert!((ev(&integral, s, 0.0)[(r, c)] - q).abs() < 1e-10 * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn affine_substitution_composes(a in numeric_poly(2, 1, 3), alpha in 0.2..3.0f64, beta in -2.0..2.0f64, s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let sub = a.affine_substitute(Var::S, alpha, beta).unwrap();
        prop_assert!(close(&ev(&sub, s, t), &ev(&a, alpha * s + beta, t)));
    }

    #[test]
    fn swap_vars_is_an_involution(a in numeric_poly(2, 2, 3), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        prop_assert_eq!(a.swap_vars().swap_vars(), a.clone());
        prop_assert!(close(&ev(&a.swap_vars(), s, t), &ev(&a, t, s)));
    }

    #[test]
    fn self_difference_yields_no_equalities(a in numeric_poly(2, 2, 3)) {
        prop_assert!(coefficient_equalities(&a, &a).unwrap().is_empty());
    }

    #[test]
    fn instantiation_agrees_with_evaluation(
        coefs in prop::collection::vec(-1.0..1.0f64, 6),
        vals in prop::collection::vec(-1.0..1.0f64, 3),
        s in -1.0..1.0f64, t in -1.0..1.0f64,
    ) {
        // p = (v0·c0 + c1) + (v1·c2) s + (v2·c3 + c4) sθ + c5 θ²
        let scalar = |k: usize, v: Option<u32>| {
            AffineScalar::from_terms(if v.is_none() { coefs[k] } else { 0.0 }, v.map(|i| (VarId(i), coefs[k])))
        };
        let p = MatrixPoly::from_terms(1, 1, [
            (Monomial::ONE, vec![scalar(0, Some(0)).add(&scalar(1, None))]),
            (Monomial::new(1, 0), vec![scalar(2, Some(1))]),
            (Monomial::new(1, 1), vec![scalar(3, Some(2)).add(&scalar(4, None))]),
            (Monomial::new(0, 2), vec![scalar(5, None)]),
        ]);
        let direct = p.evaluate(s, t, &vals).unwrap()[(0, 0)];
        let expect = vals[0] * coefs[0] + coefs[1] + vals[1] * coefs[2] * s
            + (vals[2] * coefs[3] + coefs[4]) * s * t + coefs[5] * t * t;
        prop_assert!((direct - expect).abs() < 1e-12);
        let inst = p.instantiate(&vals).unwrap();
        prop_assert!(inst.is_numeric());
        prop_assert!((ev(&inst, s, t)[(0, 0)] - expect).abs() < 1e-12);
    }
}

#[test]
fn products_of_two_affine_terms_are_rejected() {
    let x = MatrixPoly::from_affine(1, 1, vec![AffineScalar::var(VarId(0))]);
    assert_eq!(x.mul(&x), Err(Error::NonlinearProduct));
}

#[test]
fn shape_mismatch_is_reported() {
    let a = MatrixPoly::zeros(2, 2);
    let b = MatrixPoly::zeros(3, 3);
    assert!(matches!(a.add(&b), Err(Error::DimensionMismatch(_))));
    assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch(_))));
}

#[test]
fn missing_assignment_is_reported() {
    let x = MatrixPoly::from_affine(1, 1, vec![AffineScalar::var(VarId(4))]);
    assert!(matches!(
        x.evaluate(0.0, 0.0, &[1.0, 2.0]),
        Err(Error::MissingAssignment(4))
    ));
}

#[test]
fn interval_grid_validates_and_locates() {
    let g = IntervalGrid::new(&[0.5, 1.0, 2.0]).unwrap();
    assert_eq!(g.len(), 3);
    assert_relative_eq!(g.width(2), 1.0);
    assert_eq!(g.interval(1), (-1.0, -0.5));
    assert_eq!(g.locate(-0.25), Some(0));
    assert_eq!(g.locate(-1.5), Some(2));
    assert_eq!(g.locate(-3.0), None);
    assert!(IntervalGrid::new(&[1.0, 1.0]).is_err());
    assert!(IntervalGrid::new(&[-1.0]).is_err());
    assert!(IntervalGrid::new(&[]).is_err());
}

#[test]
fn piecewise_evaluation_selects_the_right_piece() {
    let g = IntervalGrid::new(&[1.0, 2.0]).unwrap();
    let p = PiecewisePoly1D::new(
        g,
        vec![
            MatrixPoly::scalar_constant(3.0),
            MatrixPoly::variable(Var::S),
        ],
    )
    .unwrap();
    assert_relative_eq!(p.evaluate(-0.5, &[]).unwrap()[(0, 0)], 3.0);
    assert_relative_eq!(p.evaluate(-1.5, &[]).unwrap()[(0, 0)], -1.5);
    // ∫ over [−1, 0] of 3 plus ∫ over [−2, −1] of s.
    assert_relative_eq!(
        p.integral().unwrap().evaluate(0.0, 0.0, &[]).unwrap()[(0, 0)],
        3.0 - 1.5,
        epsilon = 1e-14
    );
}
