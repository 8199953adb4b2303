//! Deformed Hermitian Yang–Mills residuals. With raw top coefficients
//!
//! A = Σ_r (−1)^r C(n,2r) ω^{n−2r}∧α^{2r},  B = Σ_r (−1)^r C(n,2r+1) ω^{n−2r−1}∧α^{2r+1}
//!
//! so that (ω + iα)ⁿ = A + iB, and e^{iθ}(ω + iα)ⁿ has
//! Im = cos θ·B + sin θ·A and Re = cos θ·A − sin θ·B.

use num_complex::Complex64;
use serde::Serialize;

use super::ccsck::CoupledResidual;
use crate::error::{Error, Result};
use crate::geometry::linalg::accurate_sum;
use crate::exterior::{binomial, mixed_top};
use crate::geometry::torus::{metric_from_potential, metric_from_potential_unchecked, ricci, FormField, Hermitian, MetricField, TorusGeometry};

/// ω, the curvature stand-in α, and the phase θ.
#[derive(Debug, Clone)]
pub struct DhymData {
    pub omega: MetricField,
    pub alpha: FormField,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DhymResidual {
    /// Im e^{iθ}(ω + iα)ⁿ, raw top coefficients.
    pub imaginary: Vec<f64>,
    /// Re e^{iθ}(ω + iα)ⁿ, raw top coefficients; positive in the cone.
    pub real_part: Vec<f64>,
}

impl DhymResidual {
    pub fn max_abs_imaginary(&self) -> f64 {
        self.imaginary.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// (A, B) at one node from form coefficients.
pub fn binomial_sums(dim: usize, w: &[f64], a: &[f64]) -> (f64, f64) {
    let n = dim / 2;
    let mut fs: Vec<&[f64]> = Vec::with_capacity(n);
    let mut top_with = |k: usize| -> f64 {
        fs.clear();
        fs.extend(std::iter::repeat(w).take(n - k));
        fs.extend(std::iter::repeat(a).take(k));
        mixed_top(dim, &fs)
    };
    let (mut sa, mut sb) = (0.0, 0.0);
    for k in 0..=n {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * binomial(n, k) as f64 * top_with(k);
        if k % 2 == 0 {
            sa += term;
        } else {
            sb += term;
        }
    }
    (sa, sb)
}

/// (Im, Re) of e^{iθ}(A + iB).
pub fn rotate(theta: f64, a: f64, b: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c * b + s * a, c * a - s * b)
}

impl DhymData {
    /// Fails with `NotInCone` where the real part is not positive.
    pub fn new(omega: MetricField, alpha: FormField, theta: f64) -> Result<Self> {
        let data = DhymData { omega, alpha, theta };
        data.evaluate()?;
        Ok(data)
    }

    fn evaluate(&self) -> Result<DhymResidual> {
        let w = self.omega.form_field();
        if w.len() != self.alpha.len() || w.dim != self.alpha.dim {
            return Err(Error::Dimension(self.alpha.len(), w.len()));
        }
        let mut imaginary = Vec::with_capacity(w.len());
        let mut real_part = Vec::with_capacity(w.len());
        for i in 0..w.len() {
            let (a, b) = binomial_sums(w.dim, w.at(i), self.alpha.at(i));
            let (im, re) = rotate(self.theta, a, b);
            if re <= 0.0 || !re.is_finite() {
                return Err(Error::NotInCone { node: i, value: re });
            }
            imaginary.push(im);
            real_part.push(re);
        }
        Ok(DhymResidual { imaginary, real_part })
    }
}

pub fn dhym_residual(data: &DhymData) -> Result<DhymResidual> {
    data.evaluate()
}

/// det(g + i a) for Hermitian g, a: (ω + iα)ⁿ/n! = det(g + ia)·dV.
pub fn complex_determinant(g: &Hermitian, a: &Hermitian) -> Complex64 {
    let i = Complex64::i();
    let m = |r: usize, c: usize| g.m[r][c] + i * a.m[r][c];
    match g.n {
        1 => m(0, 0),
        _ => m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0),
    }
}

/// The unique θ mod 2π with Im = 0 and Re > 0 for constant forms.
pub fn phase_angle(g: &Hermitian, a: &Hermitian) -> f64 {
    -complex_determinant(g, a).arg()
}

/// Two-component coupled dHYM system on a torus: ω = ω₀ + i∂∂̄φ and
/// α = α₀ + i∂∂̄ψ.
#[derive(Debug, Clone)]
pub struct CoupledDhymSystem {
    pub geom: TorusGeometry,
    pub base_omega: Hermitian,
    pub base_alpha: Hermitian,
}

/// R₁ = Ric∧ω^{n−1} + Re − c₁ ωⁿ and R₂ = Im − c₂ ωⁿ, raw top coefficients.
/// R₂ is normalized against ωⁿ since αⁿ may vanish.
pub fn coupled_dhym_residual(sys: &CoupledDhymSystem, phi: &[f64], psi: &[f64], theta: f64) -> Result<CoupledResidual> {
    let g = &sys.geom;
    let n = g.n;
    let d = g.dim();
    let len = g.len();
    let om = metric_from_potential(g, &sys.base_omega, phi, 0)?;
    let al = metric_from_potential_unchecked(g, &sys.base_alpha, psi)?.form_field();
    let ric = ricci(g, &om)?.form_field();
    let w = om.form_field();
    let vol = om.volume();
    let nf = crate::exterior::factorial(n);
    let mut r1 = Vec::with_capacity(len);
    let mut r2 = Vec::with_capacity(len);
    let mut fs: Vec<&[f64]> = Vec::with_capacity(n);
    for i in 0..len {
        let (a, b) = binomial_sums(d, w.at(i), al.at(i));
        let (im, re) = rotate(theta, a, b);
        if re <= 0.0 || !re.is_finite() {
            return Err(Error::NotInCone { node: i, value: re });
        }
        fs.clear();
        fs.push(ric.at(i));
        fs.extend(std::iter::repeat(w.at(i)).take(n - 1));
        r1.push(mixed_top(d, &fs) + re);
        r2.push(im);
    }
    let cell = g.grid.cell_volume();
    let top_total: f64 = accurate_sum(vol.iter().copied()) * cell * nf;
    let c1 = accurate_sum(r1.iter().copied()) * cell / top_total;
    let c2 = accurate_sum(r2.iter().copied()) * cell / top_total;
    r1.iter_mut().zip(&vol).for_each(|(r, v)| *r -= c1 * nf * v);
    r2.iter_mut().zip(&vol).for_each(|(r, v)| *r -= c2 * nf * v);
    let densities = vec![r1, r2];
    let scalars = densities.iter().map(|r| r.iter().zip(&vol).map(|(a, b)| a / b).collect()).collect();
    Ok(CoupledResidual {
        densities,
        scalars,
        volumes: vec![vol.clone(), vol],
        quad: vec![vec![cell; len]; 2],
        constants: vec![c1, c2],
        p_vector: vec![],
    })
}
