//! Flat tori ℂⁿ/(2πℤ)²ⁿ, n ∈ {1, 2}, with interleaved real coordinates
//! (x₁, y₁, x₂, y₂, …). Kähler forms are ω = (i/2) Σ g_ab̄ dz^a ∧ dz̄^b, so
//! g = I is the standard symplectic form, and i∂∂̄φ adds the Hermitian
//! matrix 2φ_ab̄.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::linalg::{self, Mat, MAXD};
use super::trig::TrigPoly;
use crate::error::{Error, Result};
use crate::exterior::mixed_top;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Hermitian n×n matrix, n ≤ 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian {
    pub n: usize,
    pub m: [[Complex64; 2]; 2],
}

/// Serializable description of a constant Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl Hermitian {
    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut m = [[C0; 2]; 2];
        for (a, row) in m.iter_mut().enumerate().take(n) {
            row[a] = Complex64::new(s, 0.0);
        }
        Hermitian { n, m }
    }

    pub fn from_spec(spec: &HermitianSpec) -> Result<Self> {
        let h = Self::from_spec_indefinite(spec)?;
        if h.min_eigenvalue() <= 0.0 {
            return Err(Error::InvalidInput("base metric is not positive definite".into()));
        }
        Ok(h)
    }

    /// A Hermitian form of any signature, e.g. the class of a dHYM form.
    pub fn from_spec_indefinite(spec: &HermitianSpec) -> Result<Self> {
        let n = spec.re.len();
        if !(1..=2).contains(&n) || spec.re.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("base metric must be 1×1 or 2×2".into()));
        }
        let mut m = [[C0; 2]; 2];
        for a in 0..n {
            for b in 0..n {
                let im = spec.im.as_ref().map(|i| i[a][b]).unwrap_or(0.0);
                m[a][b] = Complex64::new(spec.re[a][b], im);
            }
        }
        let h = Hermitian { n, m };
        for a in 0..n {
            for b in 0..n {
                if (h.m[a][b] - h.m[b][a].conj()).norm() > 1e-12 {
                    return Err(Error::InvalidInput("base metric is not Hermitian".into()));
                }
            }
        }
        Ok(h)
    }

    pub fn to_spec(&self) -> HermitianSpec {
        let n = self.n;
        HermitianSpec {
            re: (0..n).map(|a| (0..n).map(|b| self.m[a][b].re).collect()).collect(),
            im: Some((0..n).map(|a| (0..n).map(|b| self.m[a][b].im).collect()).collect()),
        }
    }

    /// The Hermitian matrix 2u_ab̄ of a real Hessian (2n×2n, row-major).
    pub fn from_hessian(n: usize, hess: &[f64]) -> Self {
        let d = 2 * n;
        let mut m = [[C0; 2]; 2];
        for a in 0..n {
            for b in 0..n {
                let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
                let s = 0.5 * (hess[xa * d + xb] + hess[ya * d + yb]);
                let t = 0.5 * (hess[xa * d + yb] - hess[ya * d + xb]);
                m[a][b] = Complex64::new(s, t);
            }
        }
        Hermitian { n, m }
    }

    pub fn add(&self, o: &Hermitian) -> Hermitian {
        let mut m = self.m;
        for a in 0..self.n {
            for b in 0..self.n {
                m[a][b] += o.m[a][b];
            }
        }
        Hermitian { n: self.n, m }
    }

    pub fn scale(&self, s: f64) -> Hermitian {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|c| *c *= s);
        Hermitian { n: self.n, m }
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.m[0][0].re,
            _ => self.m[0][0].re * self.m[1][1].re - self.m[0][1].norm_sqr(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|a| self.m[a][a].re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self.n {
            1 => self.m[0][0].re,
            _ => {
                let t = self.trace();
                let disc = (t * t - 4.0 * self.det()).max(0.0).sqrt();
                0.5 * (t - disc)
            }
        }
    }

    pub fn inverse(&self) -> Hermitian {
        let d = self.det();
        match self.n {
            1 => Hermitian::scalar(1, 1.0 / d),
            _ => {
                let mut m = [[C0; 2]; 2];
                m[0][0] = self.m[1][1] / d;
                m[1][1] = self.m[0][0] / d;
                m[0][1] = -self.m[0][1] / d;
                m[1][0] = -self.m[1][0] / d;
                Hermitian { n: 2, m }
            }
        }
    }

    /// tr(self⁻¹ · other).
    pub fn trace_inv_prod(&self, other: &Hermitian) -> f64 {
        let inv = self.inverse();
        let mut t = C0;
        for a in 0..self.n {
            for b in 0..self.n {
                t += inv.m[a][b] * other.m[b][a];
            }
        }
        t.re
    }

    /// Real antisymmetric matrix of the two-form (i/2) g_ab̄ dz^a ∧ dz̄^b.
    pub fn to_matrix(&self) -> Mat {
        let d = 2 * self.n;
        let mut w = [0.0; MAXD * MAXD];
        for a in 0..self.n {
            for b in 0..self.n {
                let s = self.m[a][b].re;
                w[2 * a * d + 2 * b + 1] += s;
                w[(2 * b + 1) * d + 2 * a] -= s;
                if a < b {
                    let t = self.m[a][b].im;
                    w[2 * a * d + 2 * b] -= t;
                    w[2 * b * d + 2 * a] += t;
                    w[(2 * a + 1) * d + 2 * b + 1] -= t;
                    w[(2 * b + 1) * d + 2 * a + 1] += t;
                }
            }
        }
        w
    }

    pub fn form_coeffs(&self, out: &mut [f64]) {
        linalg::form_from_matrix(2 * self.n, &self.to_matrix(), out);
    }
}

/// Number of two-form coefficients in real dimension `dim`.
pub fn pair_count(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

/// A torus of complex dimension n sampled on a side^{2n} grid.
#[derive(Debug, Clone)]
pub struct TorusGeometry {
    pub n: usize,
    pub grid: Grid,
}

impl TorusGeometry {
    pub fn new(n: usize, side: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidInput(format!("torus complex dimension {n} not in {{1, 2}}")));
        }
        Ok(TorusGeometry { n, grid: Grid::new(2 * n, side)? })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// ∫ ρ e⁰∧…∧e^{2n−1} for a density given by its top coefficient.
    pub fn integrate(&self, density: &[f64]) -> Result<f64> {
        if density.len() != self.len() {
            return Err(Error::Dimension(density.len(), self.len()));
        }
        Ok(self.grid.integrate(density))
    }

    pub fn sample(&self, f: &TrigPoly) -> Vec<f64> {
        let d = self.dim();
        let mut x = vec![0.0; d];
        (0..self.len())
            .map(|i| {
                self.grid.point(i, &mut x);
                f.eval(&x)
            })
            .collect()
    }
}

/// Two-form field stored node-major with lexicographic pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FormField {
    pub fn constant(dim: usize, len: usize, coeffs: &[f64]) -> Self {
        let mut data = Vec::with_capacity(len * coeffs.len());
        for _ in 0..len {
            data.extend_from_slice(coeffs);
        }
        FormField { dim, data }
    }

    pub fn ncoef(&self) -> usize {
        pair_count(self.dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.ncoef()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        let c = self.ncoef();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn matrix_at(&self, i: usize) -> Mat {
        linalg::matrix_from_form(self.dim, self.at(i))
    }

    /// Top coefficient of ω^m∧η^{n−m}/(m!(n−m)!) per node (mixed volumes).
    pub fn mixed_volume(&self, m: usize, other: &FormField) -> Vec<f64> {
        let n = self.dim / 2;
        let scale = 1.0 / (crate::exterior::factorial(m) * crate::exterior::factorial(n - m));
        (0..self.len())
            .map(|i| {
                let mut fs: Vec<&[f64]> = Vec::with_capacity(n);
                for _ in 0..m {
                    fs.push(self.at(i));
                }
                for _ in m..n {
                    fs.push(other.at(i));
                }
                mixed_top(self.dim, &fs) * scale
            })
            .collect()
    }

    /// ωⁿ/n! per node.
    pub fn volume(&self) -> Vec<f64> {
        self.mixed_volume(self.dim / 2, self)
    }

    pub fn max_abs_diff(&self, other: &FormField) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Per-node Hermitian metric g_ab̄.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub n: usize,
    pub herm: Vec<Hermitian>,
}

impl MetricField {
    pub fn len(&self) -> usize {
        self.herm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.herm.is_empty()
    }

    /// det g = ωⁿ/n! top coefficient.
    pub fn volume(&self) -> Vec<f64> {
        self.herm.iter().map(|h| h.det()).collect()
    }

    pub fn form_field(&self) -> FormField {
        let c = pair_count(2 * self.n);
        let mut data = vec![0.0; self.len() * c];
        for (i, h) in self.herm.iter().enumerate() {
            h.form_coeffs(&mut data[i * c..(i + 1) * c]);
        }
        FormField { dim: 2 * self.n, data }
    }

    /// Smallest eigenvalue over all nodes and the node where it occurs.
    pub fn min_eigenvalue(&self) -> (f64, usize) {
        self.herm
            .iter()
            .enumerate()
            .map(|(i, h)| (h.min_eigenvalue(), i))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }
}

/// Pointwise 2u_ab̄ of a grid function, via spectral second derivatives.
pub fn complex_hessian(geom: &TorusGeometry, u: &[f64]) -> Vec<Hermitian> {
    let d = geom.dim();
    let (_, hess) = geom.grid.gradient_hessian(u);
    let mut local = vec![0.0; d * d];
    (0..geom.len())
        .map(|i| {
            for (k, l) in local.iter_mut().enumerate() {
                *l = hess[k][i];
            }
            Hermitian::from_hessian(geom.n, &local)
        })
        .collect()
}

/// ω_φ = ω + i∂∂̄φ without the positivity check.
pub fn metric_from_potential_unchecked(geom: &TorusGeometry, base: &Hermitian, phi: &[f64]) -> Result<MetricField> {
    if phi.len() != geom.len() {
        return Err(Error::Dimension(phi.len(), geom.len()));
    }
    if base.n != geom.n {
        return Err(Error::Dimension(base.n, geom.n));
    }
    let herm = complex_hessian(geom, phi).into_iter().map(|h| base.add(&h)).collect();
    Ok(MetricField { n: geom.n, herm })
}

/// ω_φ = ω + i∂∂̄φ; fails with `NotKahler` at the first non-positive node.
pub fn metric_from_potential(geom: &TorusGeometry, base: &Hermitian, phi: &[f64], component: usize) -> Result<MetricField> {
    let m = metric_from_potential_unchecked(geom, base, phi)?;
    let (value, node) = m.min_eigenvalue();
    if value <= 0.0 || !value.is_finite() {
        return Err(Error::NotKahler { component, node, value });
    }
    Ok(m)
}

/// Ricci form −i∂∂̄ log det g as a per-node Hermitian matrix.
pub fn ricci(geom: &TorusGeometry, metric: &MetricField) -> Result<MetricField> {
    let mut logdet = Vec::with_capacity(metric.len());
    for (node, h) in metric.herm.iter().enumerate() {
        let d = h.det();
        if d <= 0.0 {
            return Err(Error::NotKahler { component: 0, node, value: d });
        }
        logdet.push(-d.ln());
    }
    Ok(MetricField { n: geom.n, herm: complex_hessian(geom, &logdet) })
}

/// S = tr_g Ric = n Ric∧ωⁿ⁻¹/ωⁿ.
pub fn scalar_curvature(geom: &TorusGeometry, metric: &MetricField) -> Result<Vec<f64>> {
    let ric = ricci(geom, metric)?;
    Ok(metric.herm.iter().zip(&ric.herm).map(|(g, r)| g.trace_inv_prod(r)).collect())
}

/// A Kähler form given analytically: constant Hermitian part plus i∂∂̄ of
/// a trigonometric potential.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticKahler {
    pub base: Hermitian,
    pub potential: TrigPoly,
}

impl AnalyticKahler {
    pub fn flat(base: Hermitian) -> Self {
        let d = 2 * base.n;
        AnalyticKahler { base, potential: TrigPoly::zero(d) }
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn dim(&self) -> usize {
        2 * self.base.n
    }

    pub fn is_constant(&self) -> bool {
        self.potential.is_zero()
    }

    pub fn hermitian_at(&self, x: &[f64]) -> Hermitian {
        if self.is_constant() {
            return self.base;
        }
        let d = self.dim();
        let mut g = [0.0; MAXD];
        let mut h = [0.0; MAXD * MAXD];
        self.potential.jet2_into(x, &mut g[..d], &mut h[..d * d]);
        self.base.add(&Hermitian::from_hessian(self.n(), &h[..d * d]))
    }

    pub fn matrix_at(&self, x: &[f64]) -> Mat {
        self.hermitian_at(x).to_matrix()
    }

    /// ∂_l W for each coordinate l.
    pub fn matrix_derivatives_at(&self, x: &[f64]) -> [Mat; MAXD] {
        let d = self.dim();
        let mut out = [[0.0; MAXD * MAXD]; MAXD];
        if self.is_constant() {
            return out;
        }
        let t = self.potential.third(x);
        for (l, o) in out.iter_mut().enumerate().take(d) {
            let slice: Vec<f64> = (0..d * d).map(|pq| t[pq * d + l]).collect();
            let h = Hermitian::from_hessian(self.n(), &slice);
            *o = h.to_matrix();
        }
        out
    }

    pub fn sample(&self, geom: &TorusGeometry) -> MetricField {
        let d = geom.dim();
        let mut x = vec![0.0; d];
        let herm = (0..geom.len())
            .map(|i| {
                geom.grid.point(i, &mut x);
                self.hermitian_at(&x)
            })
            .collect();
        MetricField { n: geom.n, herm }
    }

    pub fn min_eigenvalue_on(&self, geom: &TorusGeometry) -> (f64, usize) {
        self.sample(geom).min_eigenvalue()
    }
}
