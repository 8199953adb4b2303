//! Obstruction functionals on potential tuples: the Futaki invariant, the
//! Calabi functional, and the Mabuchi functional as the line integral of the
//! closed one-form dM(φ̇) = Σ_i w_i ∫ φ̇_i R_i, with w = (1, a₁, …, a_k).
//!
//! Potentials are whatever the backend stores. Kähler-potential variations
//! are φ̇ = sign·v̇ for a stored variation v̇, with sign = `potential_sign()`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::linalg::accurate_sum;
use crate::moment::ccsck::{CoupledResidual, CoupledSystem, ToricSystem, TorusSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discretization {
    /// Nodes per component.
    pub nodes: Vec<usize>,
    /// Gauss–Legendre points per path segment, when a path was integrated.
    pub quadrature_points: Option<usize>,
    /// |value − value at two fewer Gauss points|, when a path was integrated.
    pub quadrature_error: Option<f64>,
}

/// One sample of a functional along a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub value: f64,
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub name: String,
    /// Always the compensated sum of `breakdown`.
    pub value: f64,
    pub breakdown: Vec<Term>,
    pub discretization: Discretization,
    pub trace: Vec<PathSample>,
}

impl FunctionalReport {
    fn new(name: &str, breakdown: Vec<Term>, discretization: Discretization) -> Self {
        let value = accurate_sum(breakdown.iter().map(|t| t.value));
        FunctionalReport { name: name.into(), value, breakdown, discretization, trace: Vec::new() }
    }

    /// Rows (t, M, M′) of the trace.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value", "derivative"]).map_err(|e| Error::Io(e.to_string()))?;
        for s in &self.trace {
            w.serialize((s.t, s.value, s.derivative)).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn discretization<S: CoupledSystem + ?Sized>(sys: &S) -> Discretization {
    Discretization { nodes: (0..sys.components()).map(|i| sys.nodes(i)).collect(), quadrature_points: None, quadrature_error: None }
}

/// Hamiltonians (h₀, …, h_k) of one holomorphic field, one per component,
/// sampled at that component's nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolomorphicFieldData {
    pub hamiltonians: Vec<Vec<f64>>,
}

/// Slack for recognizing affine Hamiltonians and vanishing fields.
const FIELD_TOL: f64 = 1e-10;

impl HolomorphicFieldData {
    /// The only holomorphic field a flat torus pairs nontrivially with is
    /// none: translations have constant, hence zero mean-zero, Hamiltonians.
    pub fn torus(sys: &TorusSystem, hamiltonians: Vec<Vec<f64>>) -> Result<Self> {
        sys.check_shape(&hamiltonians)?;
        for (i, h) in hamiltonians.iter().enumerate() {
            let mean = sys.geom.grid.mean(h);
            let dev = h.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            if dev > FIELD_TOL {
                return Err(Error::NotHolomorphic(format!("component {i} Hamiltonian is not constant (deviation {dev:e})")));
            }
        }
        Ok(HolomorphicFieldData { hamiltonians: hamiltonians.iter().map(|h| vec![0.0; h.len()]).collect() })
    }

    /// λ times the rotation ∂_θ: h_i = λ(x_i − a_i/2) on every component.
    pub fn rotation(sys: &ToricSystem, lambda: f64) -> Self {
        let hamiltonians = sys.intervals.iter().map(|iv| iv.x.iter().map(|x| lambda * (x - 0.5 * iv.a)).collect()).collect();
        HolomorphicFieldData { hamiltonians }
    }

    /// Accepts Hamiltonians of one rotation field: each h_i must be
    /// λ(x_i − a_i/2) + const with the same λ; constants are dropped.
    pub fn toric(sys: &ToricSystem, hamiltonians: Vec<Vec<f64>>) -> Result<Self> {
        sys.check_shape(&hamiltonians)?;
        let mut lambda: Option<f64> = None;
        for (i, (h, iv)) in hamiltonians.iter().zip(&sys.intervals).enumerate() {
            // least-squares line through the nodes
            let m = h.len() as f64;
            let (mx, mh) = (iv.x.iter().sum::<f64>() / m, h.iter().sum::<f64>() / m);
            let sxx: f64 = iv.x.iter().map(|x| (x - mx).powi(2)).sum();
            let sxh: f64 = iv.x.iter().zip(h).map(|(x, v)| (x - mx) * (v - mh)).sum();
            let slope = sxh / sxx;
            let scale = h.iter().map(|v| v.abs()).fold(1.0, f64::max);
            let dev = iv.x.iter().zip(h).map(|(x, v)| (mh + slope * (x - mx) - v).abs()).fold(0.0, f64::max);
            if dev > FIELD_TOL * scale {
                return Err(Error::NotHolomorphic(format!("component {i} Hamiltonian is not affine in the moment coordinate (deviation {dev:e})")));
            }
            match lambda {
                None => lambda = Some(slope),
                Some(l) if (l - slope).abs() > FIELD_TOL * (1.0 + l.abs()) => {
                    return Err(Error::NotHolomorphic(format!("component {i} rotates at rate {slope}, component 0 at {l}")));
                }
                _ => {}
            }
        }
        Ok(Self::rotation(sys, lambda.unwrap_or(0.0)))
    }
}

/// Σ_i w_i ∫ g_i R_i for per-component nodal functions g.
pub fn pair_with_residual<S: CoupledSystem + ?Sized>(sys: &S, res: &CoupledResidual, g: &[Vec<f64>]) -> Vec<f64> {
    let w = sys.coupling().pairing_weights();
    (0..res.components())
        .map(|i| w[i] * accurate_sum(res.quad[i].iter().zip(&res.densities[i]).zip(&g[i]).map(|((q, r), v)| q * r * v)))
        .collect()
}

fn per_component(prefix: &str, values: Vec<f64>) -> Vec<Term> {
    values.into_iter().enumerate().map(|(i, value)| Term { label: format!("{prefix}[{i}]"), value }).collect()
}

/// F(ξ) = Σ_i w_i ∫ h_i R_i.
pub fn futaki<S: CoupledSystem + ?Sized>(sys: &S, potentials: &[Vec<f64>], field: &HolomorphicFieldData) -> Result<FunctionalReport> {
    sys.check_shape(&field.hamiltonians)?;
    let res = sys.residual(potentials)?;
    let terms = pair_with_residual(sys, &res, &field.hamiltonians);
    Ok(FunctionalReport::new("futaki", per_component("w_i ∫ h_i R_i", terms), discretization(sys)))
}

/// Σ_i ∫ r_i² ω_iⁿ/n! of an evaluated residual, per component.
pub fn calabi_terms(res: &CoupledResidual) -> Vec<f64> {
    (0..res.components())
        .map(|i| accurate_sum(res.quad[i].iter().zip(&res.scalars[i]).zip(&res.volumes[i]).map(|((q, r), v)| q * r * r * v)))
        .collect()
}

pub fn calabi<S: CoupledSystem + ?Sized>(sys: &S, potentials: &[Vec<f64>]) -> Result<FunctionalReport> {
    let res = sys.residual(potentials)?;
    Ok(FunctionalReport::new("calabi", per_component("∫ r_i²", calabi_terms(&res)), discretization(sys)))
}

pub fn h_function<S: CoupledSystem + ?Sized>(sys: &S, potentials: &[Vec<f64>], i: usize, j: usize, p: usize) -> Result<Vec<f64>> {
    let k = sys.components();
    if i >= k || j >= k {
        return Err(Error::InvalidInput(format!("component index ({i}, {j}) out of range for {k} components")));
    }
    sys.h_function(potentials, i, j, p)
}

/// dM at `potentials` in the Kähler-potential direction φ̇ (not stored units).
/// φ̇_i must be mean-zero against ω_iⁿ/n!.
pub fn mabuchi_increment<S: CoupledSystem + ?Sized>(sys: &S, potentials: &[Vec<f64>], direction: &[Vec<f64>]) -> Result<f64> {
    sys.check_shape(direction)?;
    let res = sys.residual(potentials)?;
    for (i, d) in direction.iter().enumerate() {
        let mean = accurate_sum(res.quad[i].iter().zip(&res.volumes[i]).zip(d).map(|((q, v), x)| q * v * x));
        let size = accurate_sum(res.quad[i].iter().zip(&res.volumes[i]).zip(d).map(|((q, v), x)| q * v * x.abs()));
        if mean.abs() > 1e-10 * size.max(1e-300) && mean.abs() > 1e-14 {
            return Err(Error::Gauge(format!("direction {i} has mean {mean:e}; variations must be mean-zero")));
        }
    }
    Ok(accurate_sum(pair_with_residual(sys, &res, direction)))
}

/// dM along a stored-potential velocity; constants pair to zero so no gauge
/// condition is needed.
pub fn mabuchi_rate<S: CoupledSystem + ?Sized>(sys: &S, res: &CoupledResidual, stored_velocity: &[Vec<f64>]) -> f64 {
    let s = sys.potential_sign();
    let phidot: Vec<Vec<f64>> = stored_velocity.iter().map(|v| v.iter().map(|x| s * x).collect()).collect();
    accurate_sum(pair_with_residual(sys, res, &phidot))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// Piecewise linear through the samples.
    Generic,
    /// Affine in the symplectic potential: a geodesic on toric ℂP¹.
    ToricGeodesic,
}

/// Samples of a potential tuple at increasing times, joined linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialPath {
    pub times: Vec<f64>,
    pub samples: Vec<Vec<Vec<f64>>>,
    pub kind: PathKind,
}

impl PotentialPath {
    pub fn piecewise(times: Vec<f64>, samples: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if times.len() != samples.len() || times.len() < 2 {
            return Err(Error::InvalidInput(format!("{} times for {} samples; need at least two", times.len(), samples.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("path times must increase strictly".into()));
        }
        Ok(PotentialPath { times, samples, kind: PathKind::Generic })
    }

    /// Straight segment from `start` to `end` over t ∈ [0, 1].
    pub fn segment(start: Vec<Vec<f64>>, end: Vec<Vec<f64>>) -> Self {
        PotentialPath { times: vec![0.0, 1.0], samples: vec![start, end], kind: PathKind::Generic }
    }

    /// u(t) = (1 − t)u_a + t u_b sampled at `count` equally spaced times.
    pub fn toric_geodesic(u_a: &[Vec<f64>], u_b: &[Vec<f64>], count: usize) -> Result<Self> {
        if count < 3 {
            return Err(Error::InvalidInput(format!("a geodesic needs at least 3 samples, got {count}")));
        }
        let times: Vec<f64> = (0..count).map(|j| j as f64 / (count - 1) as f64).collect();
        let samples = times.iter().map(|&t| lerp(u_a, u_b, t)).collect();
        Ok(PotentialPath { times, samples, kind: PathKind::ToricGeodesic })
    }
}

pub fn lerp(a: &[Vec<f64>], b: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| (1.0 - t) * p + t * q).collect()).collect()
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 0 { 1.0 } else { p1 };
            dp = q as f64 * (x * pq - p0) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// ∫ dM along the straight segment from `a` to `b` with q Gauss points; the
/// value does not depend on how long the segment takes.
pub fn segment_integral<S: CoupledSystem + ?Sized>(sys: &S, a: &[Vec<f64>], b: &[Vec<f64>], q: usize) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(q);
    let velocity: Vec<Vec<f64>> = a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| q - p).collect()).collect();
    let mut terms = Vec::with_capacity(q);
    for (t, w) in nodes.iter().zip(&weights) {
        let res = sys.residual(&lerp(a, b, *t))?;
        terms.push(w * mabuchi_rate(sys, &res, &velocity));
    }
    Ok(accurate_sum(terms))
}

fn segment_integrals<S: CoupledSystem + ?Sized>(sys: &S, path: &PotentialPath, q: usize) -> Result<Vec<f64>> {
    path.samples.windows(2).map(|w| segment_integral(sys, &w[0], &w[1], q)).collect()
}

/// Default Gauss points per segment.
pub const PATH_QUADRATURE: usize = 6;

/// M(end) − M(start) along the path; the breakdown is per segment and the
/// trace holds (t, M(t) − M(start), dM/dt at the sample).
pub fn mabuchi_path<S: CoupledSystem + ?Sized>(sys: &S, path: &PotentialPath, q: usize) -> Result<FunctionalReport> {
    for s in &path.samples {
        sys.check_shape(s)?;
    }
    if q < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 Gauss points, got {q}")));
    }
    let segs = segment_integrals(sys, path, q)?;
    let coarse = segment_integrals(sys, path, q - 2)?;
    let mut report = FunctionalReport::new("mabuchi", per_component("segment", segs.clone()), discretization(sys));
    report.discretization.quadrature_points = Some(q);
    report.discretization.quadrature_error = Some((report.value - accurate_sum(coarse)).abs());
    let mut acc = 0.0;
    for (j, &t) in path.times.iter().enumerate() {
        if j > 0 {
            acc += segs[j - 1];
        }
        // one-sided velocity, the incoming one except at the start
        let (lo, hi) = if j == 0 { (0, 1) } else { (j - 1, j) };
        let dt = path.times[hi] - path.times[lo];
        let velocity: Vec<Vec<f64>> = path.samples[lo]
            .iter()
            .zip(&path.samples[hi])
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (q - p) / dt).collect())
            .collect();
        let res = sys.residual(&path.samples[j])?;
        report.trace.push(PathSample { t, value: acc, derivative: mabuchi_rate(sys, &res, &velocity) });
    }
    Ok(report)
}

/// Mabuchi functional relative to the zero-potential base point, along the
/// straight segment.
pub fn mabuchi<S: CoupledSystem + ?Sized>(sys: &S, potentials: &[Vec<f64>]) -> Result<FunctionalReport> {
    mabuchi_path(sys, &PotentialPath::segment(sys.zero_potentials(), potentials.to_vec()), PATH_QUADRATURE)
}

/// Along a toric geodesic the value is the smallest discrete second
/// derivative of M; convexity means it is ≥ −1e−6.
pub fn geodesic_convexity_check(sys: &ToricSystem, path: &PotentialPath) -> Result<FunctionalReport> {
    if path.kind != PathKind::ToricGeodesic {
        return Err(Error::PathType("convexity is only meaningful along a toric geodesic".into()));
    }
    for w in path.samples.windows(3) {
        let dev = w[0]
            .iter()
            .zip(&w[1])
            .zip(&w[2])
            .flat_map(|((a, b), c)| a.iter().zip(b).zip(c).map(|((x, y), z)| (x - 2.0 * y + z).abs()))
            .fold(0.0, f64::max);
        if dev > 1e-10 * (1.0 + w[1].iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Err(Error::PathType(format!("samples are not affine in the symplectic potential (deviation {dev:e})")));
        }
    }
    if path.times.windows(3).any(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs() > 1e-12) {
        return Err(Error::PathType("geodesic samples must be equally spaced".into()));
    }
    let along = mabuchi_path(sys, path, PATH_QUADRATURE)?;
    let h = path.times[1] - path.times[0];
    let m: Vec<f64> = along.trace.iter().map(|s| s.value).collect();
    let second: Vec<f64> = m.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]) / (h * h)).collect();
    let min = second.iter().copied().fold(f64::INFINITY, f64::min);
    let mut report = FunctionalReport::new("mabuchi_convexity", vec![Term { label: "min M″".into(), value: min }], along.discretization.clone());
    report.trace = along.trace;
    Ok(report)
}
