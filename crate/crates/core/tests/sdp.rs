//! SDP registry, backend verdicts, verification and SDPA round trips.

use lkdual::polyalg::{AffineScalar, LinearEquation, MatrixPoly, Monomial, VarId};
use lkdual::sdp::sdpa::SdpaData;
use lkdual::sdp::{solve, verify, SdpProblem, SolveStatus, SolverConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn eq(terms: &[(VarId, f64)], rhs: f64) -> LinearEquation {
    LinearEquation {
        terms: terms.to_vec(),
        rhs,
    }
}

fn scalar_problem(rhs: f64) -> SdpProblem {
    let mut p = SdpProblem::new();
    let h = p.add_psd_block(1).unwrap();
    let x = p.entry(h, 0, 0);
    p.add_equality(eq(&[(x, 1.0)], rhs));
    p
}

#[test]
fn scalar_equal_one_is_feasible() {
    let p = scalar_problem(1.0);
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Feasible, "{}", sol.message);
    assert!((sol.values[0] - 1.0).abs() < 1e-9);
}

#[test]
fn scalar_equal_minus_one_is_infeasible() {
    let p = scalar_problem(-1.0);
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible, "{}", sol.message);
}

#[test]
fn block_registry_counts() {
    let mut p = SdpProblem::new();
    let a = p.add_psd_block(2).unwrap();
    let b = p.add_psd_block(3).unwrap();
    assert_ne!(a, b);
    assert_eq!(p.num_vars(), 3 + 6);
    assert!(p.add_psd_block(0).is_err());
}

#[test]
fn correlation_matrix_bounds() {
    for (off, expect) in [(0.5, SolveStatus::Feasible), (2.0, SolveStatus::Infeasible)] {
        let mut p = SdpProblem::new();
        let h = p.add_psd_block(2).unwrap();
        p.add_equality(eq(&[(p.entry(h, 0, 0), 1.0)], 1.0));
        p.add_equality(eq(&[(p.entry(h, 1, 1), 1.0)], 1.0));
        p.add_equality(eq(&[(p.entry(h, 0, 1), 1.0)], off));
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, expect, "off={off}: {}", sol.message);
    }
}

#[test]
fn free_variables_are_recovered() {
    let mut p = SdpProblem::new();
    let h = p.add_psd_block(2).unwrap();
    let f = p.new_free_var();
    let g = p.new_free_var();
    p.add_equality(eq(&[(p.entry(h, 0, 0), 1.0), (f, -1.0)], 0.0));
    p.add_equality(eq(&[(f, 1.0), (g, 2.0)], 7.0));
    p.add_equality(eq(&[(g, 1.0)], 2.0));
    p.add_equality(eq(&[(p.entry(h, 1, 1), 1.0), (p.entry(h, 0, 1), 1.0)], 1.0));
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Feasible, "{}", sol.message);
    assert!((sol.values[f.index()] - 3.0).abs() < 1e-9);
    assert!((sol.values[g.index()] - 2.0).abs() < 1e-9);
    let rep = verify(&p, &sol.values).unwrap();
    assert!(rep.max_equality_residual < 1e-9);
}

#[test]
fn poly_equality_contradiction_is_flagged() {
    let mut p = SdpProblem::new();
    let a = MatrixPoly::scalar_monomial(Monomial::new(1, 0), 2.0);
    let b = MatrixPoly::scalar_monomial(Monomial::new(1, 0), 3.0);
    p.add_poly_equality(&a, &b).unwrap();
    assert!(p.is_trivially_infeasible());
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn inconsistent_linear_system_is_infeasible() {
    let mut p = SdpProblem::new();
    let f = p.new_free_var();
    p.add_equality(eq(&[(f, 1.0)], 1.0));
    p.add_equality(eq(&[(f, 2.0)], 3.0));
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible, "{}", sol.message);
}

/// Random problems built around a known strictly feasible point.
#[test]
fn random_planted_problems_are_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let mut p = SdpProblem::new();
        let sizes = [rng.random_range(1..6), rng.random_range(1..8)];
        let handles: Vec<_> = sizes.iter().map(|&n| p.add_psd_block(n).unwrap()).collect();
        let frees: Vec<VarId> = (0..3).map(|_| p.new_free_var()).collect();
        // Planted point.
        let mut x0 = vec![0.0; p.num_vars()];
        for (&h, &n) in handles.iter().zip(&sizes) {
            let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let x = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
            for i in 0..n {
                for j in i..n {
                    x0[p.entry(h, i, j).index()] = x[(i, j)];
                }
            }
        }
        for f in &frees {
            x0[f.index()] = rng.random_range(-2.0..2.0);
        }
        let m = rng.random_range(3..15);
        for _ in 0..m {
            let mut terms = Vec::new();
            for v in 0..p.num_vars() {
                if rng.random_bool(0.4) {
                    terms.push((VarId(v as u32), rng.random_range(-1.0..1.0)));
                }
            }
            let a = AffineScalar::from_terms(0.0, terms);
            let rhs = a.eval(&x0).unwrap();
            p.add_equality(eq(a.terms(), rhs));
        }
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(
            sol.status,
            SolveStatus::Feasible,
            "trial {trial}: {}",
            sol.message
        );
        let rep = verify(&p, &sol.values).unwrap();
        assert!(rep.passes(1e-8, 0.0), "trial {trial}: {rep:?}");
    }
}

#[test]
fn verify_detects_perturbation() {
    let mut p = SdpProblem::new();
    let h = p.add_psd_block(2).unwrap();
    let (a, b, c) = (p.entry(h, 0, 0), p.entry(h, 0, 1), p.entry(h, 1, 1));
    p.add_equality(eq(&[(a, 1.0), (c, 1.0)], 2.0));
    p.add_equality(eq(&[(b, 1.0)], 0.0));
    let mut vals = vec![1.0, 0.0, 1.0];
    let rep = verify(&p, &vals).unwrap();
    assert_eq!(rep.max_equality_residual, 0.0);
    assert!(rep.min_eigenvalue >= 0.0);
    vals[0] += 1e-3;
    let rep = verify(&p, &vals).unwrap();
    assert!((rep.max_equality_residual - 1e-3).abs() < 1e-12);
}

#[test]
fn sdpa_round_trip_is_exact() {
    let mut p = SdpProblem::new();
    let h = p.add_psd_block(3).unwrap();
    let d = p.add_diagonal_block(2).unwrap();
    let f = p.new_free_var();
    p.add_equality(eq(
        &[
            (p.entry(h, 0, 1), 0.1),
            (p.entry(d, 1, 1), -3.0),
            (f, 1.0 / 3.0),
        ],
        1e-7,
    ));
    p.add_equality(eq(&[(p.entry(h, 2, 2), 2.5), (f, -1.0)], -4.0));
    let data = SdpaData::from_problem(&p);
    let text = data.to_text();
    let back = SdpaData::parse(&text).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.to_text(), text);
    assert_eq!(back.block_sizes, vec![3, -2, -2]);
}
