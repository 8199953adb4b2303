//! The contraction identity for two-forms on ℝ^{2n}, at each admissible p,
//! for a perturbed symplectic pair and random vectors.
//!
//! Prints the stated right-hand side and the opposite sign so the failure
//! of the stated sign is visible next to its corrected form.

use coupled_moment::exterior::{check_interior_identity, AlternatingForm, TangentVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn perturbed(n: usize, rng: &mut ChaCha8Rng, eps: f64) -> AlternatingForm {
    let w = AlternatingForm::standard_symplectic(n).unwrap();
    let noise: Vec<f64> = (0..w.coeffs().len()).map(|_| eps * rng.gen_range(-1.0..1.0)).collect();
    w.try_add(&AlternatingForm::new(2 * n, 2, noise).unwrap()).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("n p        lhs           rhs      -rhs rel.err");
    for n in 2..=4 {
        let alpha = perturbed(n, &mut rng, 0.2);
        let beta = perturbed(n, &mut rng, 0.2);
        let u = TangentVector::new((0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let v = TangentVector::new((0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        for p in 0..n {
            let id = check_interior_identity(&alpha, &beta, &u, &v, p).unwrap();
            let flipped = (id.lhs + id.rhs).abs() / id.lhs.abs().max(id.rhs.abs());
            println!("{n} {p} {:>12.6} {:>13.6} {:>9.1e}", id.lhs, id.rhs, flipped);
        }
    }
}
