//! Toric ℂP¹ with classes of sizes 2 and 3: solve from a convex random
//! start in symplectic coordinates.

use coupled_moment::geometry::toric::random_smooth;
use coupled_moment::moment::ccsck::{CouplingSpec, ToricSystem};
use coupled_moment::solvers::{SolveConfig, Solver};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let sys = ToricSystem::new(&[2.0, 3.0], 32, CouplingSpec::new(vec![0], vec![1.0]).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let init = sys.intervals.iter().map(|iv| random_smooth(iv, &mut rng, 0.1)).collect();
    let st = Solver::new(&sys, SolveConfig::default()).unwrap().run(init);
    println!("{:?} after {} iterations, max |r| = {:.3e}", st.status, st.iteration, st.max_linf());
    println!("calabi {:.3e}, largest mabuchi increase {:.1e}", st.calabi(), st.max_mabuchi_increase());
}
