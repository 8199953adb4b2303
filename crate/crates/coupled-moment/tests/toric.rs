use std::f64::consts::PI;

use coupled_moment::geometry::toric::{fubini_study_scalar, integrate, ChebInterval, ToricMetric};

#[test]
fn fejer_rule_integrates_polynomials() {
    let iv = ChebInterval::new(3.0, 32).unwrap();
    for k in 0..20 {
        let f = iv.sample(|x| x.powi(k));
        let exact = 3f64.powi(k + 1) / (k + 1) as f64;
        assert!((iv.quad(&f) - exact).abs() < 1e-11 * exact, "k = {k}");
    }
}

#[test]
fn fubini_study_has_constant_curvature_two_over_a() {
    for a in [0.5, 1.0, 2.0, 3.7] {
        let iv = ChebInterval::new(a, 48).unwrap();
        let m = ToricMetric::new(&iv, &vec![0.0; 48], 0).unwrap();
        let s = m.scalar_curvature(&iv);
        let worst = s.iter().map(|v| (v - fubini_study_scalar(a)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "a = {a}: {worst}");
        // area 2πa, Gauss–Bonnet 4π
        assert!((integrate(&iv, &vec![1.0; 48]) - 2.0 * PI * a).abs() < 1e-12);
        assert!((integrate(&iv, &s) - 4.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn gauss_bonnet_for_perturbed_potential() {
    let a = 2.0;
    let iv = ChebInterval::new(a, 48).unwrap();
    let psi = iv.sample(|x| 0.05 * (PI * x / a).cos() + 0.02 * (2.0 * PI * x / a).sin());
    let m = ToricMetric::new(&iv, &psi, 0).unwrap();
    let s = m.scalar_curvature(&iv);
    assert!((integrate(&iv, &s) - 4.0 * PI).abs() < 1e-8);
}

#[test]
fn gradient_inversion_round_trip() {
    let a = 1.5;
    let iv = ChebInterval::new(a, 48).unwrap();
    let psi = iv.sample(|x| 0.03 * (PI * x / a).cos());
    let m = ToricMetric::new(&iv, &psi, 0).unwrap();
    for &x in &iv.x {
        let g = m.gradient_at(&iv, x);
        let back = m.invert_gradient(&iv, g).unwrap();
        assert!((back - x).abs() < 1e-12 * a, "{x} -> {back}");
    }
}

#[test]
fn concave_potential_is_rejected() {
    let iv = ChebInterval::new(1.0, 16).unwrap();
    let psi = iv.sample(|x| -5.0 * x * x);
    assert!(ToricMetric::new(&iv, &psi, 2).is_err());
}
