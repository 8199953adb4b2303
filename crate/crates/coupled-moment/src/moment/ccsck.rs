//! Residuals of the coupled cscK system in the potential picture (f_i = id):
//!
//! R₀ = Σ a_i ω_i^{p_i+1}∧ω₀^{n−p_i−1}/((p_i+1)!(n−p_i−1)!) − Ric(ω₀)∧ω₀^{n−1}/(n−1)! − c₀ ω₀ⁿ/n!
//! R_i = ω₀^{n−p_i}∧ω_i^{p_i}/((n−p_i)!p_i!) − c_i ω_iⁿ/n!
//!
//! with the c's chosen so every R integrates to zero. On the torus all
//! potentials live on one grid; on toric ℂP¹ each component lives on its
//! own moment interval and points are matched through the shared angle
//! coordinate, i.e. by equal u′.

use serde::Serialize;

use super::mu_p::mixed;
use crate::error::{Error, Result};
use crate::geometry::linalg::accurate_sum;
use crate::geometry::toric::{fubini_study_scalar, ChebInterval, ToricMetric};
use crate::geometry::torus::{metric_from_potential, ricci, FormField, Hermitian, MetricField, TorusGeometry};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledResidual {
    /// R_i as top-form coefficients at the nodes of component i.
    pub densities: Vec<Vec<f64>>,
    /// r_i = R_i / (ω_iⁿ/n!).
    pub scalars: Vec<Vec<f64>>,
    /// ω_iⁿ/n! at the nodes.
    pub volumes: Vec<Vec<f64>>,
    /// Quadrature weights: ∫ g = Σ_j quad_j g_j for top-form coefficients g.
    pub quad: Vec<Vec<f64>>,
    pub constants: Vec<f64>,
    pub p_vector: Vec<usize>,
}

impl CoupledResidual {
    pub fn components(&self) -> usize {
        self.densities.len()
    }

    pub fn integral(&self, i: usize) -> f64 {
        accurate_sum(self.quad[i].iter().zip(&self.densities[i]).map(|(q, r)| q * r))
    }

    pub fn linf(&self, i: usize) -> f64 {
        self.scalars[i].iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// (∫ r_i² ω_iⁿ/n!)^{1/2}.
    pub fn l2(&self, i: usize) -> f64 {
        self.quad[i]
            .iter()
            .zip(&self.scalars[i])
            .zip(&self.volumes[i])
            .map(|((q, r), v)| q * r * r * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_linf(&self) -> f64 {
        (0..self.components()).map(|i| self.linf(i)).fold(0.0, f64::max)
    }

    /// Σ_i ∫ r_i² ω_iⁿ/n!.
    pub fn calabi(&self) -> f64 {
        (0..self.components()).map(|i| self.l2(i).powi(2)).sum()
    }
}

/// Structure shared by both backends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSpec {
    /// p_i for i = 1…k.
    pub p: Vec<usize>,
    /// a_i for i = 1…k.
    pub weights: Vec<f64>,
    /// (a₀, p₀) of the optional i = 0 term.
    pub self_term: Option<(f64, usize)>,
}

impl CouplingSpec {
    pub fn new(p: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if p.len() != weights.len() || p.is_empty() {
            return Err(Error::InvalidInput(format!("{} p-values vs {} weights", p.len(), weights.len())));
        }
        if weights.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("coupling weights must be positive".into()));
        }
        Ok(CouplingSpec { p, weights, self_term: None })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    /// Weights pairing component i with its direction: 1 for ω₀, a_i after.
    pub fn pairing_weights(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.weights.iter().copied()).collect()
    }
}

/// A coupled system whose residual can be evaluated on potentials.
pub trait CoupledSystem {
    fn coupling(&self) -> &CouplingSpec;
    fn components(&self) -> usize {
        self.coupling().k() + 1
    }
    fn nodes(&self, i: usize) -> usize;
    fn residual(&self, potentials: &[Vec<f64>]) -> Result<CoupledResidual>;
    /// +1 for Kähler potentials; −1 for symplectic potentials, whose
    /// variation at fixed moment coordinate is minus the Kähler one.
    fn potential_sign(&self) -> f64;
    /// H_j^{i,p} = n!/((n−p)!p!) ω_i^{n−p}∧ω_j^p/ω_jⁿ at the nodes of component j.
    fn h_function(&self, potentials: &[Vec<f64>], i: usize, j: usize, p: usize) -> Result<Vec<f64>>;
    /// Weights w_j with ∫ g dx = Σ w_j g_j in the coordinates of component i.
    fn coordinate_quad(&self, i: usize) -> Vec<f64>;
    fn zero_potentials(&self) -> Vec<Vec<f64>> {
        (0..self.components()).map(|i| vec![0.0; self.nodes(i)]).collect()
    }
    fn check_shape(&self, potentials: &[Vec<f64>]) -> Result<()> {
        if potentials.len() != self.components() {
            return Err(Error::Dimension(potentials.len(), self.components()));
        }
        for (i, p) in potentials.iter().enumerate() {
            if p.len() != self.nodes(i) {
                return Err(Error::Dimension(p.len(), self.nodes(i)));
            }
        }
        Ok(())
    }
}

/// Coupled system on a flat torus: component i has class [ω_i] given by a
/// constant Hermitian base.
#[derive(Debug, Clone)]
pub struct TorusSystem {
    pub geom: TorusGeometry,
    pub bases: Vec<Hermitian>,
    pub coupling: CouplingSpec,
}

impl TorusSystem {
    pub fn new(geom: TorusGeometry, bases: Vec<Hermitian>, coupling: CouplingSpec) -> Result<Self> {
        if bases.len() != coupling.k() + 1 {
            return Err(Error::InvalidInput(format!("{} classes for {} components", bases.len(), coupling.k() + 1)));
        }
        if coupling.p.iter().any(|&p| p >= geom.n) {
            return Err(Error::Degree(format!("p-vector {:?} must lie in [0, n−1]", coupling.p)));
        }
        Ok(TorusSystem { geom, bases, coupling })
    }

    pub fn metrics(&self, potentials: &[Vec<f64>]) -> Result<Vec<MetricField>> {
        self.check_shape(potentials)?;
        potentials.iter().zip(&self.bases).enumerate().map(|(i, (phi, b))| metric_from_potential(&self.geom, b, phi, i)).collect()
    }

}

impl CoupledSystem for TorusSystem {
    fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    /// H_j^{i,p} = n!/((n−p)!p!) ω_i^{n−p}∧ω_j^p/ω_jⁿ.
    fn h_function(&self, potentials: &[Vec<f64>], i: usize, j: usize, p: usize) -> Result<Vec<f64>> {
        let ms = self.metrics(potentials)?;
        let (fi, fj) = (ms[i].form_field(), ms[j].form_field());
        let n = self.geom.n;
        let d = self.geom.dim();
        Ok((0..self.geom.len()).map(|x| mixed(d, fi.at(x), n - p, fj.at(x), p) / mixed(d, fj.at(x), n, fj.at(x), 0)).collect())
    }

    fn nodes(&self, _i: usize) -> usize {
        self.geom.len()
    }

    fn potential_sign(&self) -> f64 {
        1.0
    }

    fn coordinate_quad(&self, _i: usize) -> Vec<f64> {
        vec![self.geom.grid.cell_volume(); self.geom.len()]
    }

    fn residual(&self, potentials: &[Vec<f64>]) -> Result<CoupledResidual> {
        let ms = self.metrics(potentials)?;
        let forms: Vec<FormField> = ms.iter().map(|m| m.form_field()).collect();
        let ric = ricci(&self.geom, &ms[0])?.form_field();
        let n = self.geom.n;
        let d = self.geom.dim();
        let len = self.geom.len();
        let cs = &self.coupling;
        let quad = self.coordinate_quad(0);
        let integrate = |v: &[f64]| -> f64 { accurate_sum(v.iter().zip(&quad).map(|(a, q)| a * q)) };
        let volumes: Vec<Vec<f64>> = ms.iter().map(|m| m.volume()).collect();

        let mut r0: Vec<f64> = (0..len)
            .map(|x| {
                let w0 = forms[0].at(x);
                let mut s = 0.0;
                for (i, (&p, &a)) in cs.p.iter().zip(&cs.weights).enumerate() {
                    s += a * mixed(d, forms[i + 1].at(x), p + 1, w0, n - p - 1);
                }
                if let Some((a0, p0)) = cs.self_term {
                    s += a0 * mixed(d, w0, p0 + 1, w0, n - p0 - 1);
                }
                s - mixed(d, ric.at(x), 1, w0, n - 1)
            })
            .collect();
        let c0 = integrate(&r0) / integrate(&volumes[0]);
        r0.iter_mut().zip(&volumes[0]).for_each(|(r, v)| *r -= c0 * v);
        let mut densities = vec![r0];
        let mut constants = vec![c0];
        for (i, &p) in cs.p.iter().enumerate() {
            let mut ri: Vec<f64> = (0..len).map(|x| mixed(d, forms[0].at(x), n - p, forms[i + 1].at(x), p)).collect();
            let ci = integrate(&ri) / integrate(&volumes[i + 1]);
            ri.iter_mut().zip(&volumes[i + 1]).for_each(|(r, v)| *r -= ci * v);
            densities.push(ri);
            constants.push(ci);
        }
        let scalars = densities.iter().zip(&volumes).map(|(r, v)| r.iter().zip(v).map(|(a, b)| a / b).collect()).collect();
        Ok(CoupledResidual {
            densities,
            scalars,
            volumes,
            quad: vec![quad.clone(); cs.k() + 1],
            constants,
            p_vector: cs.p.clone(),
        })
    }
}

/// Coupled system on toric ℂP¹ (n = 1, so every p_i = 0). Component i has
/// moment interval [0, a_i]; ω_i = dx_i∧dθ in its own coordinates.
#[derive(Debug, Clone)]
pub struct ToricSystem {
    pub intervals: Vec<ChebInterval>,
    pub coupling: CouplingSpec,
}

impl ToricSystem {
    pub fn new(class_sizes: &[f64], nodes: usize, coupling: CouplingSpec) -> Result<Self> {
        if class_sizes.len() != coupling.k() + 1 {
            return Err(Error::InvalidInput(format!("{} classes for {} components", class_sizes.len(), coupling.k() + 1)));
        }
        if coupling.p.iter().any(|&p| p != 0) {
            return Err(Error::Degree("on ℂP¹ every p_i must be 0".into()));
        }
        let intervals = class_sizes.iter().map(|&a| ChebInterval::new(a, nodes)).collect::<Result<_>>()?;
        Ok(ToricSystem { intervals, coupling })
    }

    pub fn metrics(&self, potentials: &[Vec<f64>]) -> Result<Vec<ToricMetric>> {
        self.check_shape(potentials)?;
        potentials.iter().zip(&self.intervals).enumerate().map(|(i, (psi, iv))| ToricMetric::new(iv, psi, i)).collect()
    }

    /// ω_j/ω_i at the nodes of component i: w_j(x_j)/w_i(x_i) with
    /// u_j′(x_j) = u_i′(x_i).
    pub fn ratio_at_nodes(&self, ms: &[ToricMetric], i: usize, j: usize) -> Result<Vec<f64>> {
        let (ivi, ivj) = (&self.intervals[i], &self.intervals[j]);
        ivi.x
            .iter()
            .enumerate()
            .map(|(node, &x)| {
                let target = ms[i].gradient_at(ivi, x);
                let xj = ms[j].invert_gradient(ivj, target)?;
                Ok(ms[j].w_at(ivj, xj) / ms[i].w[node])
            })
            .collect()
    }


    /// Fubini–Study scalar curvature of component i.
    pub fn reference_scalar(&self, i: usize) -> f64 {
        fubini_study_scalar(self.intervals[i].a)
    }
}

impl CoupledSystem for ToricSystem {
    fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    /// n = 1 form of H_j^{i,p}: ω_i/ω_j for p = 0 and 1 for p = 1.
    fn h_function(&self, potentials: &[Vec<f64>], i: usize, j: usize, p: usize) -> Result<Vec<f64>> {
        let ms = self.metrics(potentials)?;
        match p {
            0 if i == j => Ok(vec![1.0; self.nodes(j)]),
            0 => self.ratio_at_nodes(&ms, j, i),
            1 => Ok(vec![1.0; self.nodes(j)]),
            _ => Err(Error::Degree(format!("p = {p} exceeds n = 1"))),
        }
    }

    fn nodes(&self, i: usize) -> usize {
        self.intervals[i].len()
    }

    fn potential_sign(&self) -> f64 {
        -1.0
    }

    fn coordinate_quad(&self, i: usize) -> Vec<f64> {
        self.intervals[i].q.iter().map(|q| 2.0 * std::f64::consts::PI * q).collect()
    }

    fn residual(&self, potentials: &[Vec<f64>]) -> Result<CoupledResidual> {
        let ms = self.metrics(potentials)?;
        let cs = &self.coupling;
        let k = cs.k();
        let quad: Vec<Vec<f64>> = (0..=k).map(|i| self.coordinate_quad(i)).collect();
        let integrate = |i: usize, v: &[f64]| -> f64 { accurate_sum(v.iter().zip(&quad[i]).map(|(a, q)| a * q)) };
        let m0 = self.nodes(0);
        let s0 = ms[0].scalar_curvature(&self.intervals[0]);
        let mut r0 = vec![cs.self_term.map(|(a0, _)| a0).unwrap_or(0.0); m0];
        for (i, &a) in cs.weights.iter().enumerate() {
            let ratio = self.ratio_at_nodes(&ms, 0, i + 1)?;
            r0.iter_mut().zip(&ratio).for_each(|(r, q)| *r += a * q);
        }
        r0.iter_mut().zip(&s0).for_each(|(r, s)| *r -= s);
        let ones0 = vec![1.0; m0];
        let c0 = integrate(0, &r0) / integrate(0, &ones0);
        r0.iter_mut().for_each(|r| *r -= c0);
        let mut densities = vec![r0];
        let mut constants = vec![c0];
        for i in 1..=k {
            let mut ri = self.ratio_at_nodes(&ms, i, 0)?;
            let ones = vec![1.0; self.nodes(i)];
            let ci = integrate(i, &ri) / integrate(i, &ones);
            ri.iter_mut().for_each(|r| *r -= ci);
            densities.push(ri);
            constants.push(ci);
        }
        let volumes: Vec<Vec<f64>> = (0..=k).map(|i| vec![1.0; self.nodes(i)]).collect();
        Ok(CoupledResidual { scalars: densities.clone(), densities, volumes, quad, constants, p_vector: cs.p.clone() })
    }
}
