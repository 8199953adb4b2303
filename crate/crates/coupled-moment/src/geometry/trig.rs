//! Sparse real trigonometric polynomials on (ℝ/2πℤ)^d, evaluable with
//! derivatives at arbitrary points.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigMode {
    pub k: Vec<i32>,
    /// Coefficient of cos(k·x).
    pub a: f64,
    /// Coefficient of sin(k·x).
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub dim: usize,
    pub modes: Vec<TrigMode>,
}

/// Value, gradient and Hessian (row-major d×d) at a point.
#[derive(Debug, Clone)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl TrigPoly {
    pub fn zero(dim: usize) -> Self {
        TrigPoly { dim, modes: Vec::new() }
    }

    pub fn single(dim: usize, k: Vec<i32>, a: f64, b: f64) -> Self {
        assert_eq!(k.len(), dim);
        TrigPoly { dim, modes: vec![TrigMode { k, a, b }] }
    }

    /// Random mean-zero polynomial with wavenumbers in [−band, band]^d.
    pub fn random<R: Rng>(dim: usize, rng: &mut R, n_modes: usize, band: i32, amplitude: f64) -> Self {
        let mut modes = Vec::with_capacity(n_modes);
        while modes.len() < n_modes {
            let k: Vec<i32> = (0..dim).map(|_| rng.gen_range(-band..=band)).collect();
            if k.iter().all(|&c| c == 0) {
                continue;
            }
            let k2: i32 = k.iter().map(|c| c * c).sum();
            let decay = amplitude / (k2 as f64);
            modes.push(TrigMode { k, a: decay * rng.gen_range(-1.0..1.0), b: decay * rng.gen_range(-1.0..1.0) });
        }
        TrigPoly { dim, modes }
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.a == 0.0 && m.b == 0.0)
    }

    pub fn has_constant(&self) -> bool {
        self.modes.iter().any(|m| m.k.iter().all(|&c| c == 0) && m.a != 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        TrigPoly {
            dim: self.dim,
            modes: self.modes.iter().map(|m| TrigMode { k: m.k.clone(), a: m.a * s, b: m.b * s }).collect(),
        }
    }

    pub fn plus(&self, other: &TrigPoly) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        TrigPoly { dim: self.dim, modes }
    }

    /// Largest |k|∞ among modes with nonzero coefficients.
    pub fn max_wavenumber(&self) -> i32 {
        self.modes
            .iter()
            .filter(|m| m.a != 0.0 || m.b != 0.0)
            .map(|m| m.k.iter().map(|c| c.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    #[inline]
    fn phase(k: &[i32], x: &[f64]) -> f64 {
        k.iter().zip(x).map(|(&c, &xi)| c as f64 * xi).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (s, c) = Self::phase(&m.k, x).sin_cos();
                m.a * c + m.b * s
            })
            .sum()
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for m in &self.modes {
            let (s, c) = Self::phase(&m.k, x).sin_cos();
            let d1 = -m.a * s + m.b * c;
            for (o, &kj) in out.iter_mut().zip(&m.k) {
                *o += d1 * kj as f64;
            }
        }
    }

    /// Value and gradient from one sin/cos per mode.
    pub fn value_grad(&self, x: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut value = 0.0;
        for m in &self.modes {
            let (s, c) = Self::phase(&m.k, x).sin_cos();
            value += m.a * c + m.b * s;
            let d1 = -m.a * s + m.b * c;
            for (o, &kj) in out.iter_mut().zip(&m.k) {
                *o += d1 * kj as f64;
            }
        }
        value
    }

    pub fn jet2(&self, x: &[f64]) -> Jet2 {
        let d = self.dim;
        let mut j = Jet2 { value: 0.0, grad: vec![0.0; d], hess: vec![0.0; d * d] };
        j.value = self.jet2_into(x, &mut j.grad, &mut j.hess);
        j
    }

    /// Allocation-free jet: writes gradient and Hessian, returns the value.
    pub fn jet2_into(&self, x: &[f64], grad: &mut [f64], hess: &mut [f64]) -> f64 {
        let d = self.dim;
        grad[..d].iter_mut().for_each(|g| *g = 0.0);
        hess[..d * d].iter_mut().for_each(|h| *h = 0.0);
        let mut value = 0.0;
        for m in &self.modes {
            let (s, c) = Self::phase(&m.k, x).sin_cos();
            let v = m.a * c + m.b * s;
            let d1 = -m.a * s + m.b * c;
            value += v;
            for p in 0..d {
                let kp = m.k[p] as f64;
                grad[p] += d1 * kp;
                for q in 0..d {
                    hess[p * d + q] -= v * kp * m.k[q] as f64;
                }
            }
        }
        value
    }

    /// Third derivatives, row-major d×d×d.
    pub fn third(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut t = vec![0.0; d * d * d];
        for m in &self.modes {
            let (s, c) = Self::phase(&m.k, x).sin_cos();
            let d1 = -m.a * s + m.b * c;
            for p in 0..d {
                for q in 0..d {
                    for r in 0..d {
                        t[(p * d + q) * d + r] -= d1 * (m.k[p] * m.k[q] * m.k[r]) as f64;
                    }
                }
            }
        }
        t
    }

    /// Exact mean over the torus (the constant mode).
    pub fn mean(&self) -> f64 {
        self.modes.iter().filter(|m| m.k.iter().all(|&c| c == 0)).map(|m| m.a).sum()
    }
}

/// A vector field whose components are trigonometric polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigVectorField {
    pub components: Vec<TrigPoly>,
}

impl TrigVectorField {
    pub fn random<R: Rng>(dim: usize, rng: &mut R, n_modes: usize, band: i32, amplitude: f64) -> Self {
        TrigVectorField { components: (0..dim).map(|_| TrigPoly::random(dim, rng, n_modes, band, amplitude)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    /// Value and Jacobian (row i = gradient of component i).
    pub fn eval_with_jacobian(&self, x: &[f64], val: &mut [f64], jac: &mut [f64]) {
        let d = self.dim();
        for (i, c) in self.components.iter().enumerate() {
            val[i] = c.value_grad(x, &mut jac[i * d..(i + 1) * d]);
        }
    }
}
