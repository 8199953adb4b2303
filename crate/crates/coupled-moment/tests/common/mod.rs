#![allow(dead_code)]

use coupled_moment::exterior::{factorial, AlternatingForm};
use coupled_moment::geometry::torus::{Hermitian, TorusGeometry};
use coupled_moment::geometry::trig::TrigPoly;
use num_complex::Complex64;

/// Per-node two-forms of base + i∂∂̄φ from the analytic Hessian of φ.
pub fn analytic_forms(geom: &TorusGeometry, base: &Hermitian, phi: &TrigPoly) -> Vec<AlternatingForm> {
    let d = geom.dim();
    let mut x = vec![0.0; d];
    (0..geom.len())
        .map(|i| {
            geom.grid.point(i, &mut x);
            let h = base.add(&Hermitian::from_hessian(geom.n, &phi.jet2(&x).hess));
            let mut c = vec![0.0; d * (d - 1) / 2];
            h.form_coeffs(&mut c);
            AlternatingForm::new(d, 2, c).unwrap()
        })
        .collect()
}

pub fn top_power(f: &AlternatingForm, m: usize) -> f64 {
    f.power(m).unwrap().top().unwrap()
}

/// top(a^i ∧ b^j)/(i! j!) through the dense exterior algebra.
pub fn mixed_oracle(a: &AlternatingForm, i: usize, b: &AlternatingForm, j: usize) -> f64 {
    a.power(i).unwrap().wedge(&b.power(j).unwrap()).unwrap().top().unwrap() / (factorial(i) * factorial(j))
}

/// Ricci forms from −log(ωⁿ/n!) by per-axis spectral second derivatives and
/// the explicit 2u_ab̄ formula.
pub fn ricci_oracle(geom: &TorusGeometry, forms: &[AlternatingForm]) -> Vec<AlternatingForm> {
    let n = geom.n;
    let d = geom.dim();
    let u: Vec<f64> = forms.iter().map(|f| -(top_power(f, n) / factorial(n)).ln()).collect();
    let mut second = vec![vec![Vec::new(); d]; d];
    for j in 0..d {
        for k in 0..d {
            let mut orders = vec![0; d];
            orders[j] += 1;
            orders[k] += 1;
            second[j][k] = geom.grid.derivative(&u, &orders);
        }
    }
    (0..geom.len())
        .map(|i| {
            let mut h = Hermitian::identity(n);
            for a in 0..n {
                for b in 0..n {
                    let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
                    h.m[a][b] = Complex64::new(
                        0.5 * (second[xa][xb][i] + second[ya][yb][i]),
                        0.5 * (second[xa][yb][i] - second[ya][xb][i]),
                    );
                }
            }
            let mut c = vec![0.0; d * (d - 1) / 2];
            h.form_coeffs(&mut c);
            AlternatingForm::new(d, 2, c).unwrap()
        })
        .collect()
}

/// Subtracts c·vol with c making Σ density = 0.
pub fn normalize(density: &mut [f64], vol: &[f64]) -> f64 {
    let c = density.iter().sum::<f64>() / vol.iter().sum::<f64>();
    density.iter_mut().zip(vol).for_each(|(r, v)| *r -= c * v);
    c
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
