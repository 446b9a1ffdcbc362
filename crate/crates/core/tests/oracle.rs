//! Spectral oracle against closed-form roots, and against time-domain
//! simulation.

use approx::assert_abs_diff_eq;
use lkdual::catalog;
use lkdual::dual_lmi::ParameterizedFamily;
use lkdual::operators::DelaySystem;
use lkdual::oracle::{
    abscissa_sweep, characteristic_residual, simulate, spectral_abscissa, spectral_abscissa_auto,
};
use lkdual::par::Parallelism;
use nalgebra::{Complex, DMatrix, DVector};

/// Principal branch of Lambert's `W` at real `x < −1/e`, by Newton on
/// `w eʷ = x` started in the upper half plane.
fn lambert_w0(x: f64) -> Complex<f64> {
    let x = Complex::new(x, 0.0);
    let mut w = Complex::new((-x.re).ln(), std::f64::consts::FRAC_PI_2);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0));
        w -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    w
}

#[test]
fn scalar_delay_rightmost_root_is_lambert_w() {
    // λ + e^{−λτ} = 0  ⇔  λ = W₀(−τ)/τ.
    for tau in [0.8, 1.0, 1.3, 2.0] {
        let expect = lambert_w0(-tau) / tau;
        let s = spectral_abscissa_auto(&catalog::scalar_delay(tau).unwrap()).unwrap();
        assert!(s.converged);
        assert_abs_diff_eq!(s.abscissa, expect.re, epsilon = 1e-8);
        assert!(
            s.roots.iter().any(|r| (r - expect).norm() < 1e-8),
            "τ={tau}: {:?}",
            s.roots.first()
        );
    }
}

#[test]
fn scalar_delay_is_neutral_at_half_pi() {
    let s = spectral_abscissa_auto(&catalog::scalar_delay(std::f64::consts::FRAC_PI_2).unwrap())
        .unwrap();
    assert!(s.abscissa.abs() < 1e-5);
    assert!(s
        .roots
        .iter()
        .any(|r| (r - Complex::new(0.0, 1.0)).norm() < 1e-8));
    assert!(s
        .roots
        .iter()
        .any(|r| (r - Complex::new(0.0, -1.0)).norm() < 1e-8));
}

#[test]
fn two_delay_scalar_has_a_zero_root_at_its_gain_margin() {
    // −2 + b − 1 = 0 at b = 3 makes λ = 0 a root.
    let s = spectral_abscissa_auto(&catalog::scalar_two_delay(3.0).unwrap()).unwrap();
    assert!(s.abscissa.abs() < 1e-8, "{}", s.abscissa);
}

#[test]
fn delay_free_limit_matches_matrix_eigenvalues() {
    // With A₁ = 0 the roots are exactly the eigenvalues of A₀.
    let a0 = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -3.0, -0.5]);
    let sys = DelaySystem::new(vec![a0.clone(), DMatrix::zeros(2, 2)], &[1.0]).unwrap();
    let s = spectral_abscissa_auto(&sys).unwrap();
    let eig = a0.complex_eigenvalues();
    for e in eig.iter() {
        assert!(s.roots.iter().any(|r| (r - e).norm() < 1e-9), "missing {e}");
    }
    assert_abs_diff_eq!(s.abscissa, -0.75, epsilon = 1e-10);
}

#[test]
fn reported_roots_have_small_residuals() {
    let sys = catalog::oscillator_two_delay(1.2).unwrap();
    let s = spectral_abscissa(&sys, 24).unwrap();
    assert!(!s.roots.is_empty());
    for r in &s.roots {
        assert!(characteristic_residual(&sys, *r) < 1e-6);
    }
    assert!(s.roots.windows(2).all(|w| w[0].re >= w[1].re));
}

#[test]
fn too_few_collocation_points_are_rejected() {
    assert!(spectral_abscissa(&catalog::scalar_delay(1.0).unwrap(), 4).is_err());
}

#[test]
fn sweep_modes_agree() {
    let fam = catalog::oscillator_delay_family();
    let grid = [0.3, 0.9, 1.5, 2.1];
    let a = abscissa_sweep(&fam, &grid, 16, Parallelism::Sequential).unwrap();
    let b = abscissa_sweep(&fam, &grid, 16, Parallelism::Auto).unwrap();
    assert_eq!(a, b);
}

fn smooth_history(n: usize) -> impl Fn(f64) -> DVector<f64> {
    move |t: f64| DVector::from_fn(n, |i, _| 1.0 + 0.3 * (i as f64 + 1.0) * t.cos())
}

#[test]
fn oracle_and_simulator_agree_on_a_grid() {
    let grid: [(&str, ParameterizedFamily, f64); 12] = [
        ("scalar-delay", catalog::scalar_delay_family(), 0.5),
        ("scalar-delay", catalog::scalar_delay_family(), 1.0),
        ("scalar-delay", catalog::scalar_delay_family(), 2.0),
        ("oscillator-delay", catalog::oscillator_delay_family(), 0.05),
        ("oscillator-delay", catalog::oscillator_delay_family(), 0.5),
        ("oscillator-delay", catalog::oscillator_delay_family(), 1.2),
        ("oscillator-delay", catalog::oscillator_delay_family(), 2.2),
        ("scalar-two-delay", catalog::scalar_two_delay_family(), 1.0),
        ("scalar-two-delay", catalog::scalar_two_delay_family(), 2.0),
        ("scalar-two-delay", catalog::scalar_two_delay_family(), 3.5),
        (
            "oscillator-two-delay",
            catalog::oscillator_two_delay_family(),
            0.8,
        ),
        (
            "oscillator-two-delay",
            catalog::oscillator_two_delay_family(),
            1.8,
        ),
    ];
    for (name, family, lambda) in grid {
        let sys = family.at(lambda).unwrap();
        let spec = spectral_abscissa_auto(&sys).unwrap();
        assert!(spec.converged, "{name} at {lambda}");
        let min_width = (0..sys.k())
            .map(|i| sys.grid().width(i))
            .fold(f64::INFINITY, f64::min);
        let h = (min_width / 8.0).min(0.01);
        let traj = simulate(
            &sys,
            &smooth_history(sys.n()),
            60.0_f64.max(20.0 * sys.horizon()),
            h,
        )
        .unwrap();
        assert_eq!(
            spec.is_stable(),
            traj.decay_rate < 0.0,
            "{name} at {lambda}"
        );
        assert!(
            (traj.decay_rate - spec.abscissa).abs() < 0.02,
            "{name} at {lambda}: decay {} vs abscissa {}",
            traj.decay_rate,
            spec.abscissa
        );
    }
}

#[test]
fn simulator_rejects_bad_steps_and_histories() {
    let sys = catalog::scalar_delay(1.0).unwrap();
    let phi = smooth_history(1);
    assert!(simulate(&sys, &phi, 10.0, 0.5).is_err());
    assert!(simulate(&sys, &phi, 10.0, 0.0).is_err());
    assert!(simulate(&sys, &phi, -1.0, 0.01).is_err());
    assert!(simulate(&sys, &smooth_history(2), 10.0, 0.01).is_err());
}

#[test]
fn simulator_is_exact_for_the_method_of_steps_on_the_first_interval() {
    // ẋ = −x(t−1) with φ ≡ 1 gives x(t) = 1 − t on [0, 1].
    let sys = catalog::scalar_delay(1.0).unwrap();
    let phi = |_t: f64| DVector::from_element(1, 1.0);
    let traj = simulate(&sys, &phi, 1.0, 0.01).unwrap();
    for (t, x) in traj.times.iter().zip(&traj.states) {
        assert_abs_diff_eq!(x[0], 1.0 - t, epsilon = 1e-12);
    }
}
