//! Uniform periodic grids on (ℝ/2πℤ)^d with FFT-based spectral derivatives
//! and exact trigonometric interpolation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Grid {
    dim: usize,
    side: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Grid {{ dim: {}, side: {} }}", self.dim, self.side)
    }
}

impl Grid {
    /// `side` must be a power of two, at least 4.
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 || !side.is_power_of_two() || side < 4 {
            return Err(Error::InvalidInput(format!("grid side {side} must be a power of two ≥ 4, dim {dim} ≥ 1")));
        }
        let len = side.checked_pow(dim as u32).ok_or_else(|| Error::InvalidInput("grid too large".into()))?;
        let mut planner = FftPlanner::new();
        Ok(Grid { dim, side, len, fwd: planner.plan_fft_forward(side), inv: planner.plan_fft_inverse(side) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.side as f64
    }

    /// Cell volume; sums of nodal values times this are trapezoid integrals.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn total_volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Row-major: axis 0 varies slowest.
    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = idx % self.side;
            idx /= self.side;
        }
    }

    pub fn point(&self, mut idx: usize, out: &mut [f64]) {
        let h = self.spacing();
        for a in (0..self.dim).rev() {
            out[a] = (idx % self.side) as f64 * h;
            idx /= self.side;
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len * self.dim];
        for i in 0..self.len {
            self.point(i, &mut out[i * self.dim..(i + 1) * self.dim]);
        }
        out
    }

    /// Signed wavenumber of FFT bin `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.side as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        super::linalg::accurate_sum(values.iter().copied()) * self.cell_volume()
    }

    pub fn mean(&self, values: &[f64]) -> f64 {
        super::linalg::accurate_sum(values.iter().copied()) / self.len as f64
    }

    fn transform_axes(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inv } else { &self.fwd };
        let n = self.side;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for base in (0..self.len).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[start + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, l) in line.iter().enumerate() {
                        data[start + j * stride] = *l;
                    }
                }
            }
        }
    }

    /// Unnormalized forward DFT.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len);
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_axes(&mut data, false);
        data
    }

    /// Inverse DFT including the 1/len normalization; returns the real part.
    pub fn backward(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform_axes(&mut spec, true);
        let s = 1.0 / self.len as f64;
        spec.iter().map(|c| c.re * s).collect()
    }

    /// Spectral derivative with multi-order `orders[axis]`. Odd orders drop
    /// the Nyquist bin so real data stay real.
    pub fn derivative_from(&self, spec: &[Complex64], orders: &[usize]) -> Vec<f64> {
        let mut out = spec.to_vec();
        let mut mi = vec![0usize; self.dim];
        let nyq = self.side / 2;
        for (idx, c) in out.iter_mut().enumerate() {
            self.multi_index(idx, &mut mi);
            let mut factor = Complex64::new(1.0, 0.0);
            for a in 0..self.dim {
                let o = orders[a];
                if o == 0 {
                    continue;
                }
                if mi[a] == nyq && o % 2 == 1 {
                    factor = Complex64::new(0.0, 0.0);
                    break;
                }
                let ik = Complex64::new(0.0, self.wavenumber(mi[a]) as f64);
                factor *= ik.powu(o as u32);
            }
            *c *= factor;
        }
        self.backward(out)
    }

    pub fn derivative(&self, values: &[f64], orders: &[usize]) -> Vec<f64> {
        self.derivative_from(&self.forward(values), orders)
    }

    /// Gradient (dim fields) and Hessian (dim×dim fields, symmetric, both
    /// halves filled by sharing).
    pub fn gradient_hessian(&self, values: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let spec = self.forward(values);
        let d = self.dim;
        let mut grad = Vec::with_capacity(d);
        let mut orders = vec![0usize; d];
        for a in 0..d {
            orders.iter_mut().for_each(|o| *o = 0);
            orders[a] = 1;
            grad.push(self.derivative_from(&spec, &orders));
        }
        let mut hess = vec![Vec::new(); d * d];
        for a in 0..d {
            for b in a..d {
                orders.iter_mut().for_each(|o| *o = 0);
                orders[a] += 1;
                orders[b] += 1;
                let h = self.derivative_from(&spec, &orders);
                if a != b {
                    hess[b * d + a] = h.clone();
                }
                hess[a * d + b] = h;
            }
        }
        (grad, hess)
    }

    /// Applies the Fourier multiplier `symbol(k)` to real data.
    pub fn apply_multiplier<F: Fn(&[i64]) -> Complex64>(&self, values: &[f64], symbol: F) -> Vec<f64> {
        let mut spec = self.forward(values);
        let mut mi = vec![0usize; self.dim];
        let mut k = vec![0i64; self.dim];
        for (idx, c) in spec.iter_mut().enumerate() {
            self.multi_index(idx, &mut mi);
            for a in 0..self.dim {
                k[a] = self.wavenumber(mi[a]);
            }
            *c *= symbol(&k);
        }
        self.backward(spec)
    }

    /// Exact periodic translation x ↦ x − shift of sampled data, i.e. the
    /// result samples u(x − shift).
    pub fn translate(&self, values: &[f64], shift: &[f64]) -> Vec<f64> {
        self.apply_multiplier(values, |k| {
            let phase: f64 = k.iter().zip(shift).map(|(&ki, &s)| -(ki as f64) * s).sum();
            let nyq = k.iter().any(|&ki| ki == -(self.side as i64) / 2);
            if nyq {
                Complex64::new(phase.cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, phase)
            }
        })
    }

    pub fn interpolant(&self, values: &[f64]) -> Interpolant {
        let spec = self.forward(values);
        let s = 1.0 / self.len as f64;
        Interpolant { dim: self.dim, side: self.side, coeffs: spec.into_iter().map(|c| c * s).collect() }
    }
}

/// Trigonometric interpolant of grid data; exact for band-limited input.
#[derive(Debug, Clone)]
pub struct Interpolant {
    dim: usize,
    side: usize,
    coeffs: Vec<Complex64>,
}

impl Interpolant {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.side;
        let half = (n / 2) as i64;
        // per-axis phase tables, Nyquist bin read as cos
        let mut tables = vec![Complex64::new(0.0, 0.0); self.dim * n];
        for a in 0..self.dim {
            for i in 0..n {
                let k = if (i as i64) < half { i as i64 } else { i as i64 - n as i64 };
                tables[a * n + i] = if k == -half {
                    Complex64::new((k as f64 * x[a]).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k as f64 * x[a])
                };
            }
        }
        // contract the fastest axis first
        let mut cur = self.coeffs.clone();
        for a in (0..self.dim).rev() {
            let outer = cur.len() / n;
            let mut next = vec![Complex64::new(0.0, 0.0); outer];
            let tab = &tables[a * n..(a + 1) * n];
            for (o, nx) in next.iter_mut().enumerate() {
                let row = &cur[o * n..(o + 1) * n];
                *nx = row.iter().zip(tab).map(|(c, t)| c * t).sum();
            }
            cur = next;
        }
        cur[0].re
    }
}
