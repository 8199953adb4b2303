//! The U(1) Kähler–Yang–Mills residual in the potential picture (f = id):
//!
//! R₁ = α₀ Ric(ω_X)∧ω_X^{n−1}/(n−1)! + α₂ ω_X²∧ω_Y^{n−2}/(2!(n−2)!) − c ω_Xⁿ
//! R₂ = ω_X^{n−1}∧ω_Y/(n−1)! − d ω_Xⁿ/n!
//!
//! c and d are the mean-zero normalizers. The constant relations then fix
//! α₁ = d·α₂ and z = c − α₁·d.

use serde::Serialize;

use super::ccsck::CoupledResidual;
use super::mu_p::mixed;
use crate::error::{Error, Result};
use crate::geometry::linalg::accurate_sum;
use crate::exterior::factorial;
use crate::geometry::torus::{metric_from_potential, ricci, Hermitian, TorusGeometry};
use crate::tol::EPS_VOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KymCoefficients {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KymResidual {
    /// Two components, both on the X grid; `constants` holds (c, d).
    pub residual: CoupledResidual,
    pub c: f64,
    pub d: f64,
    /// z = c − α₁·d.
    pub z: f64,
    /// The α₁ the constant relation demands: d·α₂.
    pub alpha1_consistent: f64,
    /// α₁ − d·α₂ for the supplied α₁.
    pub alpha1_mismatch: f64,
}

/// Base classes [ω_X] and [ω_Y] on one torus.
#[derive(Debug, Clone)]
pub struct KymSystem {
    pub geom: TorusGeometry,
    pub base_x: Hermitian,
    pub base_y: Hermitian,
}

impl KymSystem {
    pub fn new(geom: TorusGeometry, base_x: Hermitian, base_y: Hermitian) -> Result<Self> {
        if geom.n < 2 {
            return Err(Error::Degree(format!("the ω_X²∧ω_Y^{{n−2}} term needs n ≥ 2, got n = {}", geom.n)));
        }
        Ok(KymSystem { geom, base_x, base_y })
    }

    pub fn residual(&self, phi_x: &[f64], phi_y: &[f64], coeffs: KymCoefficients) -> Result<KymResidual> {
        kym_u1_residual(self, phi_x, phi_y, coeffs)
    }
}

pub fn kym_u1_residual(sys: &KymSystem, phi_x: &[f64], phi_y: &[f64], coeffs: KymCoefficients) -> Result<KymResidual> {
    let KymCoefficients { alpha0, alpha1, alpha2 } = coeffs;
    if [alpha0, alpha1, alpha2].iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidInput("α₀, α₁, α₂ must be positive".into()));
    }
    let g = &sys.geom;
    let n = g.n;
    let d = g.dim();
    let len = g.len();
    let mx = metric_from_potential(g, &sys.base_x, phi_x, 0)?;
    let my = metric_from_potential(g, &sys.base_y, phi_y, 1)?;
    let ric = ricci(g, &mx)?.form_field();
    let (wx, wy) = (mx.form_field(), my.form_field());
    let vol = mx.volume();
    let mut r1 = Vec::with_capacity(len);
    let mut r2 = Vec::with_capacity(len);
    for i in 0..len {
        let (w, y) = (wx.at(i), wy.at(i));
        let mixed2 = mixed(d, w, 2, y, n - 2);
        let mixed1 = mixed(d, w, n - 1, y, 1);
        if mixed2 <= EPS_VOL || mixed1 <= EPS_VOL {
            return Err(Error::NotInCone { node: i, value: mixed2.min(mixed1) });
        }
        r1.push(alpha0 * mixed(d, ric.at(i), 1, w, n - 1) + alpha2 * mixed2);
        r2.push(mixed1);
    }
    let cell = g.grid.cell_volume();
    let total_vol: f64 = accurate_sum(vol.iter().copied()) * cell;
    let nf = factorial(n);
    // c multiplies the raw top coefficient of ω_Xⁿ, which is n!·vol
    let c = accurate_sum(r1.iter().copied()) * cell / (nf * total_vol);
    let dd = accurate_sum(r2.iter().copied()) * cell / total_vol;
    r1.iter_mut().zip(&vol).for_each(|(r, v)| *r -= c * nf * v);
    r2.iter_mut().zip(&vol).for_each(|(r, v)| *r -= dd * v);
    let densities = vec![r1, r2];
    let scalars = densities.iter().map(|r| r.iter().zip(&vol).map(|(a, b)| a / b).collect()).collect();
    let residual = CoupledResidual {
        densities,
        scalars,
        volumes: vec![vol.clone(), vol],
        quad: vec![vec![cell; len]; 2],
        constants: vec![c, dd],
        p_vector: vec![n - 2],
    };
    Ok(KymResidual {
        residual,
        c,
        d: dd,
        z: c - alpha1 * dd,
        alpha1_consistent: dd * alpha2,
        alpha1_mismatch: alpha1 - dd * alpha2,
    })
}
