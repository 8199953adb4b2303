//! Solve the coupled system on T⁴ from a random start; the flow hands over
//! to Newton once the residual is small.

use coupled_moment::geometry::torus::{Hermitian, TorusGeometry};
use coupled_moment::geometry::trig::TrigPoly;
use coupled_moment::moment::ccsck::{CoupledSystem, CouplingSpec, TorusSystem};
use coupled_moment::solvers::{SolveConfig, Solver};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let geom = TorusGeometry::new(2, 8).unwrap();
    let sys = TorusSystem::new(geom.clone(), vec![Hermitian::identity(2); 2], CouplingSpec::new(vec![1], vec![1.0]).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let init: Vec<Vec<f64>> = (0..sys.components()).map(|_| geom.sample(&TrigPoly::random(4, &mut rng, 3, 1, 0.02))).collect();
    let st = Solver::new(&sys, SolveConfig::default()).unwrap().run(init);
    for h in &st.history {
        println!("{:>3} {:<8} L∞ {:?}  calabi {:.3e}  mabuchi {:+.6e}", h.iteration, format!("{:?}", h.phase), h.linf.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(), h.calabi, h.mabuchi);
    }
    println!("{:?} after {} iterations", st.status, st.iteration);
}
