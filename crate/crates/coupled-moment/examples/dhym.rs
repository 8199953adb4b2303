//! Deformed Hermitian–Yang–Mills on constant T⁴ data: the phase angle from
//! det(ω + iα) makes the imaginary part vanish identically.

use coupled_moment::geometry::torus::{metric_from_potential, metric_from_potential_unchecked, Hermitian, HermitianSpec, TorusGeometry};
use coupled_moment::moment::dhym::{dhym_residual, phase_angle, DhymData};

fn main() {
    let geom = TorusGeometry::new(2, 8).unwrap();
    let omega = Hermitian::from_spec(&HermitianSpec { re: vec![vec![1.0, 0.2], vec![0.2, 2.0]], im: None }).unwrap();
    let alpha = Hermitian::from_spec_indefinite(&HermitianSpec { re: vec![vec![0.5, 0.0], vec![0.0, -0.3]], im: None }).unwrap();
    let zero = vec![0.0; geom.len()];
    let theta = phase_angle(&omega, &alpha);
    for (label, t) in [("closed form", theta), ("off by 0.1", theta + 0.1)] {
        let w = metric_from_potential(&geom, &omega, &zero, 0).unwrap();
        let a = metric_from_potential_unchecked(&geom, &alpha, &zero).unwrap().form_field();
        let r = dhym_residual(&DhymData::new(w, a, t).unwrap()).unwrap();
        println!("{label:<12} θ = {t:+.6}: max |Im| = {:.2e}, Re = {:.6}", r.max_abs_imaginary(), r.real_part[0]);
    }
}
