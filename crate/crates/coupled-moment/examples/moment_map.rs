//! μ_p for a sheared map between two flat tori, and the mean-zero property
//! of both densities.

use coupled_moment::geometry::diffeo::{DiffeoField, MapSpec};
use coupled_moment::geometry::torus::{AnalyticKahler, Hermitian, TorusGeometry};
use coupled_moment::geometry::trig::TrigVectorField;
use coupled_moment::moment::mu_p::mu_p;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let geom = TorusGeometry::new(2, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ox = AnalyticKahler::flat(Hermitian::identity(2));
    let oy = AnalyticKahler::flat(Hermitian::scalar(2, 1.5));
    let field = TrigVectorField::random(geom.dim(), &mut rng, 2, 1, 0.05);
    let f = DiffeoField::new(&geom, MapSpec::Shear { field, t: 1.0 }).unwrap();
    for p in 0..2 {
        let m = mu_p(&geom, &ox, &oy, &f, p).unwrap();
        println!(
            "p = {p}: prefactor {:.3}, c1 {:.6}, c2 {:.6}, ∫x {:+.1e}, ∫y {:+.1e}, sup {:.3e}",
            m.prefactor,
            m.c1,
            m.c2,
            geom.integrate(&m.x_density).unwrap(),
            geom.integrate(&m.y_density).unwrap(),
            m.max_abs()
        );
    }
}
