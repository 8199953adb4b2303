//! The coupled moment map μ_p on Map(X, Y; p)⁺ for tori X = Y, its dual,
//! the normalizing constants, and the Hamiltonian pairing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{factorial, mixed_top};
use crate::geometry::diffeo::{pullback_analytic, pushforward_analytic, DiffeoField};
use crate::geometry::torus::{AnalyticKahler, FormField, TorusGeometry};
use crate::tol::{EPS_VOL, MEAN_ZERO};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMapValue {
    /// Top-form coefficients on the X grid.
    pub x_density: Vec<f64>,
    /// Top-form coefficients on the Y grid.
    pub y_density: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub p: usize,
    /// n/(n−p) for the primal map, n/(p+1) for the dual.
    pub prefactor: f64,
}

impl MomentMapValue {
    pub fn max_abs(&self) -> f64 {
        self.x_density.iter().chain(&self.y_density).map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// ω^a ∧ η^b / (a! b!) top coefficient from coefficient slices.
pub fn mixed(dim: usize, w: &[f64], a: usize, eta: &[f64], b: usize) -> f64 {
    debug_assert_eq!(2 * (a + b), dim);
    let mut fs: [&[f64]; 6] = [w; 6];
    for slot in fs.iter_mut().skip(a).take(b) {
        *slot = eta;
    }
    mixed_top(dim, &fs[..a + b]) / (factorial(a) * factorial(b))
}

fn check_p(n: usize, p: usize) -> Result<()> {
    if p >= n {
        return Err(Error::Degree(format!("p = {p} must satisfy 0 ≤ p ≤ n − 1 = {}", n - 1)));
    }
    Ok(())
}

/// Pointwise data of μ_p at the X and Y nodes.
struct Pointwise {
    vol_x: Vec<f64>,
    a_x: Vec<f64>,
    b_x: Vec<f64>,
    vol_y: Vec<f64>,
    c_y: Vec<f64>,
}

fn pointwise(geom: &TorusGeometry, wx: &FormField, pulled: &FormField, wy: &FormField, pushed: &FormField, p: usize) -> Result<Pointwise> {
    let n = geom.n;
    let d = geom.dim();
    let len = geom.len();
    let mut pw = Pointwise {
        vol_x: Vec::with_capacity(len),
        a_x: Vec::with_capacity(len),
        b_x: Vec::with_capacity(len),
        vol_y: Vec::with_capacity(len),
        c_y: Vec::with_capacity(len),
    };
    for i in 0..len {
        let (w, q) = (wx.at(i), pulled.at(i));
        let a = mixed(d, w, n - p, q, p);
        if a <= EPS_VOL {
            return Err(Error::NotInCone { node: i, value: a });
        }
        pw.vol_x.push(mixed(d, w, n, q, 0));
        pw.a_x.push(a);
        pw.b_x.push(mixed(d, w, n - 1 - p, q, p + 1));
        let (wyi, s) = (wy.at(i), pushed.at(i));
        pw.vol_y.push(mixed(d, s, 0, wyi, n));
        pw.c_y.push(mixed(d, s, n - p, wyi, p));
    }
    Ok(pw)
}

/// (c₁, c₂) as quotients of integrals.
pub fn normalizing_constants(
    geom: &TorusGeometry,
    omega_x: &AnalyticKahler,
    omega_y: &AnalyticKahler,
    f: &DiffeoField,
    p: usize,
) -> Result<(f64, f64)> {
    let v = mu_p(geom, omega_x, omega_y, f, p)?;
    Ok((v.c1, v.c2))
}

pub fn mu_p(geom: &TorusGeometry, omega_x: &AnalyticKahler, omega_y: &AnalyticKahler, f: &DiffeoField, p: usize) -> Result<MomentMapValue> {
    let n = geom.n;
    check_p(n, p)?;
    let wx = omega_x.sample(geom).form_field();
    let wy = omega_y.sample(geom).form_field();
    let pulled = pullback_analytic(omega_y, f);
    let pushed = pushforward_analytic(omega_x, f)?;
    let pw = pointwise(geom, &wx, &pulled, &wy, &pushed, p)?;
    let c1 = geom.integrate(&pw.b_x)? / geom.integrate(&pw.vol_x)?;
    let c2 = geom.integrate(&pw.c_y)? / geom.integrate(&pw.vol_y)?;
    let prefactor = n as f64 / (n - p) as f64;
    let x_density = pw.vol_x.iter().zip(&pw.b_x).map(|(v, b)| prefactor * (c1 * v - b)).collect();
    let y_density = pw.c_y.iter().zip(&pw.vol_y).map(|(c, v)| prefactor * (c - c2 * v)).collect();
    Ok(MomentMapValue { x_density, y_density, c1, c2, p, prefactor })
}

/// μ*_p(g) := μ_{n−p−1; ω_Y, ω_X}(g) for g: Y → X, with prefactor n/(p+1).
/// Its x-density lives on Y and its y-density on X.
pub fn mu_p_dual(geom: &TorusGeometry, omega_y: &AnalyticKahler, omega_x: &AnalyticKahler, g: &DiffeoField, p: usize) -> Result<MomentMapValue> {
    let n = geom.n;
    check_p(n, p)?;
    let mut v = mu_p(geom, omega_y, omega_x, g, n - p - 1)?;
    let rescale = (n as f64 / (p + 1) as f64) / v.prefactor;
    v.x_density.iter_mut().chain(v.y_density.iter_mut()).for_each(|d| *d *= rescale);
    v.prefactor = n as f64 / (p + 1) as f64;
    v.p = p;
    Ok(v)
}

/// Mean-zero check against a volume density; tolerance relative to ∫|φ|.
pub fn check_mean_zero(geom: &TorusGeometry, phi: &[f64], vol: &[f64], what: &str) -> Result<()> {
    let m: f64 = phi.iter().zip(vol).map(|(a, b)| a * b).sum();
    let s: f64 = phi.iter().zip(vol).map(|(a, b)| (a * b).abs()).sum();
    if m.abs() > MEAN_ZERO.max(1e-10 * s) {
        return Err(Error::Gauge(format!("{what} has mean {:e}", m * geom.grid.cell_volume())));
    }
    Ok(())
}

/// ⟨μ_p(f), (φ, ψ)⟩ = ∫_X φ x_density + ∫_Y ψ y_density.
pub fn moment_pairing(geom: &TorusGeometry, mmv: &MomentMapValue, phi: &[f64], psi: &[f64], vol_x: &[f64], vol_y: &[f64]) -> Result<f64> {
    check_mean_zero(geom, phi, vol_x, "φ")?;
    check_mean_zero(geom, psi, vol_y, "ψ")?;
    let a: f64 = phi.iter().zip(&mmv.x_density).map(|(u, v)| u * v).sum();
    let b: f64 = psi.iter().zip(&mmv.y_density).map(|(u, v)| u * v).sum();
    Ok((a + b) * geom.grid.cell_volume())
}
