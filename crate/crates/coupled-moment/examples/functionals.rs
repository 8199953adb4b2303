//! Futaki, Calabi and Mabuchi on toric ℂP¹. The Futaki invariant of the
//! rotation field does not depend on the metric in the class; Calabi and
//! Mabuchi do.

use coupled_moment::functionals::{calabi, futaki, mabuchi, HolomorphicFieldData};
use coupled_moment::geometry::toric::random_smooth;
use coupled_moment::moment::ccsck::{CoupledSystem, CouplingSpec, ToricSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let sys = ToricSystem::new(&[2.0, 3.0], 64, CouplingSpec::new(vec![0], vec![1.0]).unwrap()).unwrap();
    let field = HolomorphicFieldData::rotation(&sys, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for amp in [0.0, 0.05, 0.1] {
        let pots: Vec<Vec<f64>> = if amp == 0.0 { sys.zero_potentials() } else { sys.intervals.iter().map(|iv| random_smooth(iv, &mut rng, amp)).collect() };
        let f = futaki(&sys, &pots, &field).unwrap();
        let c = calabi(&sys, &pots).unwrap();
        let m = mabuchi(&sys, &pots).unwrap();
        println!("amplitude {amp:.2}: futaki {:+.10e}  calabi {:.4e}  mabuchi {:+.6e}", f.value, c.value, m.value);
    }
}
