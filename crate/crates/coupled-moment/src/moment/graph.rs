//! The graph moment map: f(x) = (x, f₁(x)) into Y = X × W with
//! f^*ω_Y = ω_X + f₁^*ω_W. Both densities live on the X grid; the first
//! pairs with φ, the second with ψ∘f.

use serde::Serialize;

use super::identity::FieldSign;
use super::mu_p::{mixed, MomentMapValue};
use crate::error::{Error, Result};
use crate::geometry::diffeo::{pullback_analytic, DiffeoField};
use crate::geometry::linalg::{self, MAXD};
use crate::geometry::torus::{AnalyticKahler, FormField, TorusGeometry};
use crate::geometry::trig::{TrigPoly, TrigVectorField};
use crate::tol::EPS_VOL;

fn check_local_diffeo(f1: &DiffeoField) -> Result<()> {
    let d = f1.dim();
    for i in 0..f1.geom.len() {
        let j = linalg::det(d, f1.jac_at(i));
        if j.abs() <= EPS_VOL {
            return Err(Error::InvalidInput(format!("f₁ is not a local diffeomorphism at node {i} (det Df₁ = {j:e})")));
        }
    }
    Ok(())
}

/// f^*ω_Y = ω_X + f₁^*ω_W at the X nodes.
pub fn graph_pullback(geom: &TorusGeometry, omega_x: &AnalyticKahler, omega_w: &AnalyticKahler, f1: &DiffeoField) -> FormField {
    let mut q = pullback_analytic(omega_w, f1);
    let wx = omega_x.sample(geom).form_field();
    q.data.iter_mut().zip(&wx.data).for_each(|(a, b)| *a += b);
    q
}

/// For p < n: x-density c₁′ω_Xⁿ/n! + ω_X^{n−p}∧f^*ω_Y^p/((n−p)!p!) − ω_X^{n−p−1}∧f^*ω_Y^{p+1}/((n−p−1)!(p+1)!)
/// with c₁′ making it integrate to zero, and y-density ω_X^{n−p}∧f^*ω_Y^p/((n−p)!p!).
/// For p = n the x-density is zero and the y-density is f^*ω_Yⁿ/n!.
/// The y-density is not mean-zero: it pairs with ψ∘f, and ψ is mean-zero on W.
pub fn graph_mu_p(geom: &TorusGeometry, omega_x: &AnalyticKahler, omega_w: &AnalyticKahler, f1: &DiffeoField, p: usize) -> Result<MomentMapValue> {
    let n = geom.n;
    if p > n {
        return Err(Error::Degree(format!("p = {p} exceeds n = {n}")));
    }
    check_local_diffeo(f1)?;
    let d = geom.dim();
    let wx = omega_x.sample(geom).form_field();
    let q = graph_pullback(geom, omega_x, omega_w, f1);
    let vol: Vec<f64> = (0..geom.len()).map(|i| mixed(d, wx.at(i), n, wx.at(i), 0)).collect();
    let mut a = Vec::with_capacity(geom.len());
    for i in 0..geom.len() {
        let v = mixed(d, wx.at(i), n - p, q.at(i), p);
        if v <= EPS_VOL {
            return Err(Error::NotInCone { node: i, value: v });
        }
        a.push(v);
    }
    if p == n {
        return Ok(MomentMapValue { x_density: vec![0.0; geom.len()], y_density: a, c1: 0.0, c2: 0.0, p, prefactor: 1.0 });
    }
    let mut x_density: Vec<f64> = (0..geom.len()).map(|i| a[i] - mixed(d, wx.at(i), n - p - 1, q.at(i), p + 1)).collect();
    let c1 = -geom.integrate(&x_density)? / geom.integrate(&vol)?;
    x_density.iter_mut().zip(&vol).for_each(|(x, v)| *x += c1 * v);
    Ok(MomentMapValue { x_density, y_density: a, c1, c2: 0.0, p, prefactor: 1.0 })
}

/// Setup for P(t) = ∫φ ω_X^{n−1}∧f_t^*ω_Y/(n−1)! − ∫ψ∘f_t ω_Xⁿ/n! along
/// f₁,t = (id + t·v)∘f₁ with f₁ symplectic and ψ tied to φ.
pub struct GraphPairing<'a> {
    pub geom: &'a TorusGeometry,
    pub omega_x: &'a AnalyticKahler,
    pub omega_w: &'a AnalyticKahler,
    pub f1: &'a DiffeoField,
    pub phi: &'a TrigPoly,
    /// `Action` ties ψ = φ∘f₁⁻¹ (dψ = ι_{f_*X_φ}ω_W); `Flipped` ties ψ = −φ∘f₁⁻¹.
    pub sign: FieldSign,
}

impl GraphPairing<'_> {
    fn psi_at(&self, y: &[f64], guess: &[f64]) -> Result<f64> {
        let d = self.geom.dim();
        let (z, _) = self.f1.spec.solve_preimage(d, y, guess)?;
        let s = match self.sign {
            FieldSign::Action => 1.0,
            FieldSign::Flipped => -1.0,
        };
        Ok(s * self.phi.eval(&z[..d]))
    }

    pub fn value(&self, v: &TrigVectorField, t: f64) -> Result<f64> {
        let g = self.geom;
        let n = g.n;
        let d = g.dim();
        let c = d * (d - 1) / 2;
        let wx = self.omega_x.sample(g).form_field();
        let mut x = [0.0; MAXD];
        let mut vv = [0.0; MAXD];
        let mut dv = [0.0; MAXD * MAXD];
        let mut y = [0.0; MAXD];
        let mut q = [0.0; 6];
        let mut acc = 0.0;
        for i in 0..g.len() {
            g.grid.point(i, &mut x[..d]);
            let fx = self.f1.value_at(i);
            v.eval_with_jacobian(fx, &mut vv[..d], &mut dv[..d * d]);
            let mut m = linalg::identity(d);
            for k in 0..d * d {
                m[k] += t * dv[k];
            }
            let jt = linalg::mul(d, &m, self.f1.jac_at(i));
            for a in 0..d {
                y[a] = fx[a] + t * vv[a];
            }
            let pm = linalg::congruence(d, &jt, &self.omega_w.matrix_at(&y[..d]));
            linalg::form_from_matrix(d, &pm, &mut q);
            let w = wx.at(i);
            for k in 0..c {
                q[k] += w[k];
            }
            let first = self.phi.eval(&x[..d]) * mixed(d, w, n - 1, &q[..c], 1);
            let second = self.psi_at(&y[..d], &x[..d])? * mixed(d, w, n, w, 0);
            acc += first - second;
        }
        Ok(acc * g.grid.cell_volume())
    }

    /// max |P(t) − P(0)| over t ∈ {±h, ±h/2} and the centered derivative at 0.
    pub fn drift(&self, v: &TrigVectorField, h: f64) -> Result<PairingDrift> {
        let p0 = self.value(v, 0.0)?;
        let mut drift: f64 = 0.0;
        for t in [h, -h, 0.5 * h, -0.5 * h] {
            drift = drift.max((self.value(v, t)? - p0).abs());
        }
        let derivative = (self.value(v, 0.5 * h)? - self.value(v, -0.5 * h)?) / h;
        Ok(PairingDrift { value: p0, drift, derivative, sign: self.sign })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingDrift {
    pub value: f64,
    pub drift: f64,
    pub derivative: f64,
    pub sign: FieldSign,
}
