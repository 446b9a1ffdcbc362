//! Stability programs: verdicts on systems with known behaviour, structural
//! properties of the assembled programs and margin bisection.

use lkdual::catalog;
use lkdual::dual_lmi::{
    assemble, assemble_multi, assemble_single, check_feasible, margin_bisection, AssemblyOptions,
    AssemblyPath, BisectionOptions, ParameterizedFamily, StabilityReport,
};
use lkdual::operators::DelaySystem;
use lkdual::par::Parallelism;
use lkdual::sdp::{verify, SolveStatus, SolverConfig};
use lkdual::Error;
use nalgebra::{DMatrix, SymmetricEigen};

fn scalar(a0: f64, a: &[f64], taus: &[f64]) -> DelaySystem {
    let mut m = vec![DMatrix::from_element(1, 1, a0)];
    m.extend(a.iter().map(|&v| DMatrix::from_element(1, 1, v)));
    DelaySystem::new(m, taus).unwrap()
}

fn run(sys: &DelaySystem, d: u32) -> StabilityReport {
    let program = assemble(sys, d, &AssemblyOptions::default()).unwrap();
    check_feasible(&program, &SolverConfig::default()).unwrap()
}

#[test]
fn positive_delayed_feedback_is_never_certified() {
    // ẋ = x(t − τ) has a positive real root for every τ.
    for d in [1, 2] {
        let rep = run(&scalar(0.0, &[1.0], &[1.0]), d);
        assert_eq!(
            rep.status,
            SolveStatus::Infeasible,
            "d={d}: {}",
            rep.message
        );
        assert!(rep.certificate.is_none());
    }
}

#[test]
fn dominant_damping_is_certified_for_any_delay() {
    // |A₁| < −A₀ gives delay-independent stability.
    for tau in [0.3, 1.0, 5.0] {
        let rep = run(&scalar(-2.0, &[-0.5], &[tau]), 1);
        assert!(rep.feasible(), "τ={tau}: {}", rep.message);
    }
    let rep = run(&scalar(-3.0, &[0.5, -1.0], &[0.7, 2.0]), 2);
    assert!(rep.feasible(), "{}", rep.message);
}

#[test]
fn oscillator_beyond_its_window_is_not_certified() {
    let rep = run(&catalog::oscillator_delay(1.8).unwrap(), 4);
    assert!(!rep.feasible(), "{}", rep.message);
}

#[test]
fn certificate_passes_independent_verification() {
    let sys = catalog::oscillator_delay(1.0).unwrap();
    let program = assemble(&sys, 2, &AssemblyOptions::default()).unwrap();
    let sol = lkdual::sdp::solve(&program.problem, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Feasible, "{}", sol.message);
    let res = verify(&program.problem, &sol.values).unwrap();
    assert!(res.max_equality_residual < 1e-8);
    assert!(res.min_eigenvalue > -1e-9);

    let rep = check_feasible(&program, &SolverConfig::default()).unwrap();
    let cert = rep
        .certificate
        .expect("feasible reports carry a certificate");
    assert!(cert.structural_residual < 1e-8);
    assert!((&cert.p - cert.p.transpose()).amax() < 1e-10);
    assert!(SymmetricEigen::new(cert.p.clone()).eigenvalues.min() > 0.0);
    assert_eq!(cert.q.len(), 1);
    assert_eq!(cert.r.len(), 1);
}

#[test]
fn larger_epsilon_never_helps() {
    let sys = catalog::scalar_delay(1.4).unwrap();
    let verdicts: Vec<bool> = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
        .iter()
        .map(|&eps| {
            let opts = AssemblyOptions {
                epsilon: Some(eps),
                ..AssemblyOptions::default()
            };
            let program = assemble(&sys, 2, &opts).unwrap();
            assert_eq!(program.epsilon, eps);
            check_feasible(&program, &SolverConfig::default())
                .unwrap()
                .feasible()
        })
        .collect();
    assert!(verdicts[0], "{verdicts:?}");
    assert!(verdicts.windows(2).all(|w| w[0] || !w[1]), "{verdicts:?}");
}

#[test]
fn single_and_multi_paths_agree_on_one_delay() {
    let opts = AssemblyOptions::default();
    let solver = SolverConfig::default();
    for (sys, d) in [
        (catalog::scalar_delay(1.2).unwrap(), 2),
        (catalog::scalar_delay(1.7).unwrap(), 2),
        (catalog::oscillator_delay(0.5).unwrap(), 2),
        (catalog::oscillator_delay(2.0).unwrap(), 2),
    ] {
        let single = assemble_single(&sys, d, &opts).unwrap();
        let multi = assemble_multi(&sys, d, &opts).unwrap();
        assert_eq!(single.path, AssemblyPath::Single);
        assert_eq!(multi.path, AssemblyPath::Multi);
        let a = check_feasible(&single, &solver).unwrap().feasible();
        let b = check_feasible(&multi, &solver).unwrap().feasible();
        assert_eq!(a, b, "τ={}", sys.horizon());
    }
}

#[test]
fn dispatch_follows_the_delay_count() {
    let opts = AssemblyOptions::default();
    assert_eq!(
        assemble(&catalog::scalar_delay(1.0).unwrap(), 1, &opts)
            .unwrap()
            .path,
        AssemblyPath::Single
    );
    assert_eq!(
        assemble(&catalog::scalar_two_delay(1.0).unwrap(), 1, &opts)
            .unwrap()
            .path,
        AssemblyPath::Multi
    );
}

#[test]
fn programs_grow_with_degree() {
    let sys = catalog::oscillator_two_delay(1.0).unwrap();
    let sizes: Vec<(usize, usize)> = (1..=3)
        .map(|d| {
            let p = assemble(&sys, d, &AssemblyOptions::default()).unwrap();
            (p.problem.num_vars(), p.problem.equalities().len())
        })
        .collect();
    assert!(
        sizes.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1),
        "{sizes:?}"
    );
}

#[test]
fn verdicts_do_not_depend_on_parallelism() {
    let program = assemble(
        &catalog::scalar_two_delay(2.5).unwrap(),
        2,
        &AssemblyOptions::default(),
    )
    .unwrap();
    let seq = SolverConfig {
        parallelism: Parallelism::Sequential,
        ..SolverConfig::default()
    };
    let a = check_feasible(&program, &seq).unwrap();
    let b = check_feasible(&program, &SolverConfig::default()).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn scalar_margin_brackets_half_pi() {
    let opts = BisectionOptions::new(2, 1e-3);
    let r = margin_bisection(&catalog::scalar_delay_family(), 1.0, 2.0, &opts).unwrap();
    let half_pi = std::f64::consts::FRAC_PI_2;
    assert!(
        r.margin <= half_pi,
        "certified beyond the exact margin: {}",
        r.margin
    );
    assert!(half_pi - r.margin < 2e-3);
    assert!((r.bracket.1 - r.bracket.0).abs() <= 1e-3);
    assert_eq!(r.log[0].lambda, 1.0);
    assert_eq!(r.log[1].lambda, 2.0);
    assert!(r
        .log
        .iter()
        .skip(2)
        .all(|e| (e.bracket.1 - e.bracket.0).abs() < 1.0));
}

#[test]
fn speculative_bisection_reaches_the_same_bracket() {
    let family = catalog::scalar_delay_family();
    let plain = margin_bisection(&family, 1.0, 2.0, &BisectionOptions::new(1, 1e-3)).unwrap();
    let spec = margin_bisection(
        &family,
        1.0,
        2.0,
        &BisectionOptions {
            speculative: true,
            ..BisectionOptions::new(1, 1e-3)
        },
    )
    .unwrap();
    assert!((plain.margin - spec.margin).abs() <= 1e-3);
}

#[test]
fn bisection_can_run_downward() {
    // Uncertified end below the certified one: the oscillator's lower delay limit.
    let r = margin_bisection(
        &catalog::oscillator_delay_family(),
        0.5,
        0.05,
        &BisectionOptions::new(2, 5e-3),
    )
    .unwrap();
    assert!(r.margin > 0.10017 && r.margin < 0.2, "{}", r.margin);
}

#[test]
fn bisection_without_sign_change_is_an_error() {
    let opts = BisectionOptions::new(2, 1e-2);
    let err = margin_bisection(&catalog::scalar_delay_family(), 0.5, 1.2, &opts).unwrap_err();
    assert!(matches!(err, Error::NoSignChange { .. }));
    assert!(margin_bisection(&catalog::scalar_delay_family(), 1.0, 1.0, &opts).is_err());
    let bad_tol = BisectionOptions::new(2, 0.0);
    assert!(margin_bisection(&catalog::scalar_delay_family(), 1.0, 2.0, &bad_tol).is_err());
}

#[test]
fn families_validate_their_inputs() {
    let base = catalog::scalar_two_delay(0.0).unwrap();
    assert!(ParameterizedFamily::matrix(base.clone(), vec![DMatrix::zeros(1, 1)]).is_err());
    assert!(ParameterizedFamily::matrix(base.clone(), vec![DMatrix::zeros(2, 2); 3]).is_err());
    let fam = ParameterizedFamily::delay_scaling(base);
    assert!(fam.at(-1.0).is_err());
    assert_eq!(fam.at(4.0).unwrap().taus(), &[2.0, 4.0]);
    let c = catalog::scalar_two_delay_family().at(2.5).unwrap();
    assert_eq!(c.a(1)[(0, 0)], 2.5);
}
