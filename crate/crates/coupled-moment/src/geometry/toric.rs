//! Toric ℂP¹ in symplectic coordinates. A metric in the class of area 2πa
//! is a symplectic potential u(x) = u_ref(x) + ψ(x) on the moment interval
//! [0, a], with u_ref the Fubini–Study (Guillemin) potential; the metric
//! function is w = 1/u″ and S = −½ w″. Functions of x are sampled at
//! Chebyshev points of the first kind, which avoid the endpoints.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ChebInterval {
    pub a: f64,
    pub x: Vec<f64>,
    /// Fejér first-rule weights for ∫₀ᵃ f dx.
    pub q: Vec<f64>,
    bary: Vec<f64>,
    /// Row-major M×M first and second differentiation matrices.
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl ChebInterval {
    pub fn new(a: f64, m: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("class size {a} must be positive")));
        }
        if m < 8 {
            return Err(Error::InvalidInput(format!("need at least 8 Chebyshev nodes, got {m}")));
        }
        let theta: Vec<f64> = (0..m).map(|j| (2 * j + 1) as f64 * PI / (2 * m) as f64).collect();
        // ascending nodes: x_j = a(1 − cos θ_j)/2
        let x: Vec<f64> = theta.iter().map(|t| 0.5 * a * (1.0 - t.cos())).collect();
        let bary: Vec<f64> = theta.iter().enumerate().map(|(j, t)| if j % 2 == 0 { t.sin() } else { -t.sin() }).collect();
        let q: Vec<f64> = theta
            .iter()
            .map(|t| {
                let s: f64 = (1..=m / 2).map(|l| (2.0 * l as f64 * t).cos() / (4.0 * (l * l) as f64 - 1.0)).sum();
                (2.0 / m as f64) * (1.0 - 2.0 * s) * 0.5 * a
            })
            .collect();
        let mut d1 = vec![0.0; m * m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = (bary[j] / bary[i]) / (x[i] - x[j]);
                    d1[i * m + j] = v;
                    diag -= v;
                }
            }
            d1[i * m + i] = diag;
        }
        let mut d2 = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                let dik = d1[i * m + k];
                if dik != 0.0 {
                    for j in 0..m {
                        d2[i * m + j] += dik * d1[k * m + j];
                    }
                }
            }
        }
        Ok(ChebInterval { a, x, q, bary, d1, d2 })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn apply(&self, mat: &[f64], f: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m).map(|i| mat[i * m..(i + 1) * m].iter().zip(f).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn diff(&self, f: &[f64]) -> Vec<f64> {
        self.apply(&self.d1, f)
    }

    pub fn diff2(&self, f: &[f64]) -> Vec<f64> {
        self.apply(&self.d2, f)
    }

    pub fn diff_matrix(&self) -> &[f64] {
        &self.d1
    }

    /// ∫₀ᵃ f dx.
    pub fn quad(&self, f: &[f64]) -> f64 {
        self.q.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    /// Barycentric interpolation of nodal data at an arbitrary x ∈ [0, a].
    pub fn interp(&self, f: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.len() {
            let dx = x - self.x[j];
            if dx == 0.0 {
                return f[j];
            }
            let c = self.bary[j] / dx;
            num += c * f[j];
            den += c;
        }
        num / den
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.x.iter().map(|&x| f(x)).collect()
    }
}

/// Derivatives of a symplectic potential needed for geometry.
#[derive(Debug, Clone)]
pub struct ToricMetric {
    pub a: f64,
    /// ψ′ and ψ″ at the nodes.
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
    /// w = 1/u″ at the nodes.
    pub w: Vec<f64>,
}

/// Serializable potential on one moment interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToricPotential {
    pub a: f64,
    pub values: Vec<f64>,
}

/// u_ref″ = a / (2x(a − x)).
pub fn reference_hessian(a: f64, x: f64) -> f64 {
    a / (2.0 * x * (a - x))
}

/// u_ref′ = ½ log(x/(a − x)).
pub fn reference_gradient(a: f64, x: f64) -> f64 {
    0.5 * (x / (a - x)).ln()
}

impl ToricMetric {
    /// Fails with `NotKahler` where u″ ≤ 0.
    pub fn new(iv: &ChebInterval, psi: &[f64], component: usize) -> Result<Self> {
        if psi.len() != iv.len() {
            return Err(Error::Dimension(psi.len(), iv.len()));
        }
        let a = iv.a;
        let dpsi = iv.diff(psi);
        let d2psi = iv.diff2(psi);
        let mut w = Vec::with_capacity(iv.len());
        for (node, (&x, &p2)) in iv.x.iter().zip(&d2psi).enumerate() {
            let b = a + 2.0 * x * (a - x) * p2;
            if b <= 0.0 || !b.is_finite() {
                return Err(Error::NotKahler { component, node, value: b / (2.0 * x * (a - x)) });
            }
            w.push(2.0 * x * (a - x) / b);
        }
        Ok(ToricMetric { a, dpsi, d2psi, w })
    }

    /// S = −½ w″ with w = s·g, s = 2x(a − x) and g = 1/(a + sψ″), expanded as
    /// −½(s″g + 2s′g′ + sg″). Differentiating the smooth factor g keeps the
    /// boundary values w = 0, w′ = ±2 exact; differentiating nodal w does not
    /// and leaves a spurious near-kernel direction.
    pub fn scalar_curvature(&self, iv: &ChebInterval) -> Vec<f64> {
        let a = self.a;
        let g: Vec<f64> = iv.x.iter().zip(&self.w).map(|(x, w)| w / (2.0 * x * (a - x))).collect();
        let (g1, g2) = (iv.diff(&g), iv.diff2(&g));
        iv.x.iter()
            .enumerate()
            .map(|(j, &x)| {
                let (s, s1) = (2.0 * x * (a - x), 2.0 * (a - 2.0 * x));
                -0.5 * (-4.0 * g[j] + 2.0 * s1 * g1[j] + s * g2[j])
            })
            .collect()
    }

    /// u′ at an arbitrary x.
    pub fn gradient_at(&self, iv: &ChebInterval, x: f64) -> f64 {
        reference_gradient(self.a, x) + iv.interp(&self.dpsi, x)
    }

    /// w = 1/u″ at an arbitrary x, formed from the interpolated ψ″ so it
    /// keeps its boundary vanishing.
    pub fn w_at(&self, iv: &ChebInterval, x: f64) -> f64 {
        let a = self.a;
        let s = 2.0 * x * (a - x);
        s / (a + s * iv.interp(&self.d2psi, x))
    }

    /// The point with u′(x) = target, by Newton in σ = log(x/(a − x)).
    pub fn invert_gradient(&self, iv: &ChebInterval, target: f64) -> Result<f64> {
        let a = self.a;
        let xs = |s: f64| a / (1.0 + (-s).exp());
        let mut s = 2.0 * target;
        for _ in 0..100 {
            let x = xs(s);
            let g = 0.5 * s + iv.interp(&self.dpsi, x) - target;
            let dxds = x * (a - x) / a;
            let dg = 0.5 + iv.interp(&self.d2psi, x) * dxds;
            if dg <= 0.0 {
                return Err(Error::Interpolation("non-convex symplectic potential".into()));
            }
            let step = (g / dg).clamp(-4.0, 4.0);
            s -= step;
            if step.abs() < 1e-14 * (1.0 + s.abs()) {
                return Ok(xs(s));
            }
        }
        Err(Error::Interpolation(format!("gradient inversion failed for target {target}")))
    }
}

/// Fubini–Study scalar curvature 2/a in the class of area 2πa.
pub fn fubini_study_scalar(a: f64) -> f64 {
    2.0 / a
}

/// ∫ f ω over ℂP¹, where f is sampled at the nodes and ω = dx∧dθ.
pub fn integrate(iv: &ChebInterval, f: &[f64]) -> f64 {
    2.0 * PI * iv.quad(f)
}

/// amplitude·Σ_{j=1}^{4} c_j cos(jπx/a)/j⁴ with c_j uniform in [−1, 1]. The
/// j⁻⁴ decay keeps |ψ″| ≤ 1.1·amplitude·(π/a)², so small amplitudes stay convex.
pub fn random_smooth<R: rand::Rng>(iv: &ChebInterval, rng: &mut R, amplitude: f64) -> Vec<f64> {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    iv.sample(|x| amplitude * c.iter().enumerate().map(|(j, cj)| cj * ((j + 1) as f64 * PI * x / iv.a).cos() / ((j + 1) as f64).powi(4)).sum::<f64>())
}
