//! Coupled cscK residual on T² for random potentials: per-component norms
//! and the topological constants.

use coupled_moment::geometry::torus::{Hermitian, TorusGeometry};
use coupled_moment::geometry::trig::TrigPoly;
use coupled_moment::moment::ccsck::{CoupledSystem, CouplingSpec, TorusSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let geom = TorusGeometry::new(1, 32).unwrap();
    let sys = TorusSystem::new(geom.clone(), vec![Hermitian::identity(1), Hermitian::scalar(1, 2.0)], CouplingSpec::new(vec![0], vec![1.0]).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pots: Vec<Vec<f64>> = (0..sys.components()).map(|_| geom.sample(&TrigPoly::random(2, &mut rng, 4, 2, 0.03))).collect();
    let flat = sys.residual(&sys.zero_potentials()).unwrap();
    let r = sys.residual(&pots).unwrap();
    println!("constants {:?}", r.constants);
    for i in 0..r.components() {
        println!("component {i}: flat L∞ {:.1e}, perturbed L2 {:.4e}, L∞ {:.4e}, ∫ {:+.1e}", flat.linf(i), r.l2(i), r.linf(i), r.integral(i));
    }
}
