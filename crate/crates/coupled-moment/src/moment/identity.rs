//! The defining identity dH_{(φ,ψ)}(v′) = Ω_p(X_{(φ,ψ)}, v′) for μ_p, checked
//! by centered finite differences along f_t = (id + t·v)∘f.
//!
//! H is evaluated entirely on the X grid: ∫_Y ψ·f_*ρ = ∫_X (ψ∘f)·ρ, so no
//! inverse map is needed and the cost per evaluation is one pass over X.

use rayon::prelude::*;
use serde::Serialize;

use super::mu_p::mixed;
use crate::error::Result;
use crate::geometry::diffeo::DiffeoField;
use crate::geometry::linalg::{self, MAXD};
use crate::geometry::torus::{AnalyticKahler, TorusGeometry};
use crate::geometry::trig::{TrigPoly, TrigVectorField};

/// Which fundamental vector field enters Ω_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldSign {
    /// ξ_ψ∘f − f_*ξ_φ, the field of the action (σ, η)·f = η∘f∘σ⁻¹.
    Action,
    /// ξ_ψ∘f + f_*ξ_φ.
    Flipped,
}

pub struct IdentitySetup<'a> {
    pub geom: &'a TorusGeometry,
    pub omega_x: &'a AnalyticKahler,
    pub omega_y: &'a AnalyticKahler,
    pub f: &'a DiffeoField,
    pub phi: &'a TrigPoly,
    pub psi: &'a TrigPoly,
    phi_mean: f64,
    psi_mean: f64,
    /// ω_X coefficients at the X nodes.
    wx: Vec<f64>,
}

impl<'a> IdentitySetup<'a> {
    /// φ and ψ are recentered against ω_X^n and ω_Y^n.
    pub fn new(
        geom: &'a TorusGeometry,
        omega_x: &'a AnalyticKahler,
        omega_y: &'a AnalyticKahler,
        f: &'a DiffeoField,
        phi: &'a TrigPoly,
        psi: &'a TrigPoly,
    ) -> Result<Self> {
        let mx = omega_x.sample(geom);
        let my = omega_y.sample(geom);
        let vx = mx.volume();
        let vy = my.volume();
        let phi_v = geom.sample(phi);
        let psi_v = geom.sample(psi);
        let phi_mean = phi_v.iter().zip(&vx).map(|(a, b)| a * b).sum::<f64>() / vx.iter().sum::<f64>();
        let psi_mean = psi_v.iter().zip(&vy).map(|(a, b)| a * b).sum::<f64>() / vy.iter().sum::<f64>();
        Ok(IdentitySetup { geom, omega_x, omega_y, f, phi, psi, phi_mean, psi_mean, wx: mx.form_field().data })
    }

    /// H_{(φ,ψ)}(f_t) for each requested p.
    pub fn h_along(&self, v: &TrigVectorField, t: f64, ps: &[usize]) -> Result<Vec<f64>> {
        let g = self.geom;
        let n = g.n;
        let d = g.dim();
        let c = d * (d - 1) / 2;
        let mut sum_phi_b = vec![0.0; ps.len()];
        let mut sum_psi_a = vec![0.0; ps.len()];
        let mut x = [0.0; MAXD];
        let mut vv = [0.0; MAXD];
        let mut dv = [0.0; MAXD * MAXD];
        let mut y = [0.0; MAXD];
        let mut q = [0.0; 6];
        for i in 0..g.len() {
            g.grid.point(i, &mut x[..d]);
            let fx = self.f.value_at(i);
            v.eval_with_jacobian(fx, &mut vv[..d], &mut dv[..d * d]);
            let mut m = linalg::identity(d);
            for k in 0..d * d {
                m[k] += t * dv[k];
            }
            let jt = linalg::mul(d, &m, self.f.jac_at(i));
            for a in 0..d {
                y[a] = fx[a] + t * vv[a];
            }
            let wy = self.omega_y.matrix_at(&y[..d]);
            let pm = linalg::congruence(d, &jt, &wy);
            linalg::form_from_matrix(d, &pm, &mut q);
            let w = &self.wx[i * c..(i + 1) * c];
            let phi = self.phi.eval(&x[..d]) - self.phi_mean;
            let psi = self.psi.eval(&y[..d]) - self.psi_mean;
            for (k, &p) in ps.iter().enumerate() {
                let a = mixed(d, w, n - p, &q[..c], p);
                let b = mixed(d, w, n - 1 - p, &q[..c], p + 1);
                sum_psi_a[k] += psi * a;
                sum_phi_b[k] += phi * b;
            }
        }
        let cell = g.grid.cell_volume();
        Ok(ps
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let pref = n as f64 / (n - p) as f64;
                // ∫φ ω_X^n = ∫ψ ω_Y^n = 0 after recentering, so the c₁ and
                // c₂ terms drop out of the pairing
                pref * (sum_psi_a[k] - sum_phi_b[k]) * cell
            })
            .collect())
    }

    /// ι_X Ω_p(v′) = 1/((n−p)!p!) ∫_X ω_Y(X, v∘f) ω_X^{n−p}∧f^*ω_Y^p.
    pub fn omega_p(&self, v: &TrigVectorField, p: usize, sign: FieldSign) -> Result<f64> {
        let g = self.geom;
        let n = g.n;
        let d = g.dim();
        let c = d * (d - 1) / 2;
        let mut x = [0.0; MAXD];
        let mut gp = [0.0; MAXD];
        let mut gq = [0.0; MAXD];
        let mut xi_phi = [0.0; MAXD];
        let mut xi_psi = [0.0; MAXD];
        let mut push = [0.0; MAXD];
        let mut vv = [0.0; MAXD];
        let mut q = [0.0; 6];
        let mut acc = 0.0;
        for i in 0..g.len() {
            g.grid.point(i, &mut x[..d]);
            let fx = self.f.value_at(i);
            let jf = self.f.jac_at(i);
            let wx = linalg::matrix_from_form(d, &self.wx[i * c..(i + 1) * c]);
            let wy = self.omega_y.matrix_at(fx);
            self.phi.grad(&x[..d], &mut gp[..d]);
            self.psi.grad(fx, &mut gq[..d]);
            let wxi = linalg::inverse(d, &wx).expect("ω_X nondegenerate");
            let wyi = linalg::inverse(d, &wy).expect("ω_Y nondegenerate");
            linalg::mul_vec(d, &wxi, &gp, &mut xi_phi);
            linalg::mul_vec(d, &wyi, &gq, &mut xi_psi);
            // ξ = −W⁻¹∇h
            xi_phi[..d].iter_mut().for_each(|z| *z = -*z);
            xi_psi[..d].iter_mut().for_each(|z| *z = -*z);
            linalg::mul_vec(d, jf, &xi_phi, &mut push);
            let s = match sign {
                FieldSign::Action => -1.0,
                FieldSign::Flipped => 1.0,
            };
            let field: Vec<f64> = (0..d).map(|a| xi_psi[a] + s * push[a]).collect();
            v.eval(fx, &mut vv[..d]);
            let mut omega_yv = 0.0;
            for a in 0..d {
                for b in 0..d {
                    omega_yv += field[a] * wy[a * d + b] * vv[b];
                }
            }
            let pm = linalg::congruence(d, jf, &wy);
            linalg::form_from_matrix(d, &pm, &mut q);
            acc += omega_yv * mixed(d, &self.wx[i * c..(i + 1) * c], n - p, &q[..c], p);
        }
        Ok(acc * g.grid.cell_volume())
    }
}

/// Result of one finite-difference identity check along one direction.
#[derive(Debug, Clone, Serialize)]
pub struct IdentitySample {
    pub p: usize,
    /// Centered differences at steps h, h/2, h/4.
    pub differences: [f64; 3],
    pub extrapolated: f64,
    /// log₂ of the successive difference ratio; ≈ 2 for a smooth H.
    pub observed_order: f64,
    pub omega_action: f64,
    pub omega_flipped: f64,
    pub rel_error_action: f64,
    pub rel_error_flipped: f64,
}

/// Nodes per partial sum. Chunks are reduced in index order, so the result
/// does not depend on the number of threads.
const CHUNK: usize = 2048;

/// Sums for one direction: H at ±h, ±h/2, ±h/4 and Ω_p for both signs.
struct DirectionSums {
    /// [step][p] for H(f_{+t}) and H(f_{−t}), before the prefactor and cell.
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
    action: Vec<f64>,
    flipped: Vec<f64>,
}

impl DirectionSums {
    fn zero(ps: usize) -> Self {
        DirectionSums { plus: vec![vec![0.0; ps]; 3], minus: vec![vec![0.0; ps]; 3], action: vec![0.0; ps], flipped: vec![0.0; ps] }
    }

    fn add(&mut self, o: &DirectionSums) {
        let pairs = self.plus.iter_mut().chain(self.minus.iter_mut()).zip(o.plus.iter().chain(&o.minus));
        for (a, b) in pairs {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.action.iter_mut().zip(&o.action).for_each(|(x, y)| *x += y);
        self.flipped.iter_mut().zip(&o.flipped).for_each(|(x, y)| *x += y);
    }
}

impl IdentitySetup<'_> {
    /// One pass computing everything `check_direction` needs; agrees with
    /// `h_along` and `omega_p` term by term.
    fn direction_sums(&self, v: &TrigVectorField, ps: &[usize], steps: &[f64; 3], range: std::ops::Range<usize>) -> DirectionSums {
        let g = self.geom;
        let n = g.n;
        let d = g.dim();
        let c = d * (d - 1) / 2;
        let mut out = DirectionSums::zero(ps.len());
        let mut x = [0.0; MAXD];
        let mut vv = [0.0; MAXD];
        let mut dv = [0.0; MAXD * MAXD];
        let mut gp = [0.0; MAXD];
        let mut gq = [0.0; MAXD];
        let mut xi_phi = [0.0; MAXD];
        let mut xi_psi = [0.0; MAXD];
        let mut push = [0.0; MAXD];
        let mut y = [0.0; MAXD];
        let mut q = [0.0; 6];
        for i in range {
            g.grid.point(i, &mut x[..d]);
            let fx = self.f.value_at(i);
            let jf = self.f.jac_at(i);
            let w = &self.wx[i * c..(i + 1) * c];
            v.eval_with_jacobian(fx, &mut vv[..d], &mut dv[..d * d]);
            let phi = self.phi.value_grad(&x[..d], &mut gp[..d]) - self.phi_mean;
            for (s, &h) in steps.iter().enumerate() {
                for (sign, sums) in [(1.0, &mut out.plus[s]), (-1.0, &mut out.minus[s])] {
                    let t = sign * h;
                    let mut m = linalg::identity(d);
                    for k in 0..d * d {
                        m[k] += t * dv[k];
                    }
                    let jt = linalg::mul(d, &m, jf);
                    for a in 0..d {
                        y[a] = fx[a] + t * vv[a];
                    }
                    let wy = self.omega_y.matrix_at(&y[..d]);
                    linalg::congruence_form(d, &jt, &wy, &mut q);
                    let psi = self.psi.eval(&y[..d]) - self.psi_mean;
                    for (k, &p) in ps.iter().enumerate() {
                        sums[k] += psi * mixed(d, w, n - p, &q[..c], p) - phi * mixed(d, w, n - 1 - p, &q[..c], p + 1);
                    }
                }
            }
            let wx = linalg::matrix_from_form(d, w);
            let wy = self.omega_y.matrix_at(fx);
            self.psi.grad(fx, &mut gq[..d]);
            let wxi = linalg::inverse(d, &wx).expect("ω_X nondegenerate");
            let wyi = linalg::inverse(d, &wy).expect("ω_Y nondegenerate");
            linalg::mul_vec(d, &wxi, &gp, &mut xi_phi);
            linalg::mul_vec(d, &wyi, &gq, &mut xi_psi);
            linalg::mul_vec(d, jf, &xi_phi, &mut push);
            // xi_phi, xi_psi hold W⁻¹∇h = −ξ here
            let (mut act, mut flip) = (0.0, 0.0);
            for a in 0..d {
                let wv: f64 = (0..d).map(|b| wy[a * d + b] * vv[b]).sum();
                act += (-xi_psi[a] + push[a]) * wv;
                flip += (-xi_psi[a] - push[a]) * wv;
            }
            linalg::congruence_form(d, jf, &wy, &mut q);
            for (k, &p) in ps.iter().enumerate() {
                let top = mixed(d, w, n - p, &q[..c], p);
                out.action[k] += act * top;
                out.flipped[k] += flip * top;
            }
        }
        out
    }
}

/// Runs the three-level centered difference and compares against Ω_p.
pub fn check_direction(setup: &IdentitySetup<'_>, v: &TrigVectorField, ps: &[usize], h: f64) -> Result<Vec<IdentitySample>> {
    let g = setup.geom;
    let n = g.n;
    let steps = [h, h / 2.0, h / 4.0];
    let chunks: Vec<std::ops::Range<usize>> = (0..g.len()).step_by(CHUNK).map(|s| s..(s + CHUNK).min(g.len())).collect();
    let partial: Vec<DirectionSums> = chunks.into_par_iter().map(|r| setup.direction_sums(v, ps, &steps, r)).collect();
    let mut sums = DirectionSums::zero(ps.len());
    for part in &partial {
        sums.add(part);
    }
    let cell = g.grid.cell_volume();
    let mut out = Vec::with_capacity(ps.len());
    for (k, &p) in ps.iter().enumerate() {
        let pref = n as f64 / (n - p) as f64 * cell;
        let dd: [f64; 3] = std::array::from_fn(|s| pref * (sums.plus[s][k] - sums.minus[s][k]) / (2.0 * steps[s]));
        let extrapolated = (4.0 * dd[2] - dd[1]) / 3.0;
        let e1 = (dd[0] - dd[1]).abs();
        let e2 = (dd[1] - dd[2]).abs();
        let observed_order = if e2 > 0.0 { (e1 / e2).log2() } else { f64::INFINITY };
        let oa = sums.action[k] * cell;
        let of = sums.flipped[k] * cell;
        let rel = |o: f64| (extrapolated - o).abs() / o.abs().max(extrapolated.abs()).max(1e-300);
        out.push(IdentitySample {
            p,
            differences: dd,
            extrapolated,
            observed_order,
            omega_action: oa,
            omega_flipped: of,
            rel_error_action: rel(oa),
            rel_error_flipped: rel(of),
        });
    }
    Ok(out)
}
